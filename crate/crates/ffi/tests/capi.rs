use std::ffi::{CStr, CString};
use std::ptr;

use influx_ffi::*;

const G3: &str = "3 2 LT\n1 0 1.0\n2 0 1.0\n";
const STAR: &str = "6 5 LT\n0 1 1\n0 2 1\n0 3 1\n0 4 1\n0 5 1\n";

fn graph(text: &str) -> *mut InfluxGraph {
    let text = CString::new(text).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { influx_graph_from_text(text.as_ptr(), &mut g) }, InfluxStatus::Ok);
    assert!(!g.is_null());
    g
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(influx_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn graph_round_trip() {
    let g = graph(G3);
    unsafe {
        assert_eq!(influx_graph_num_vertices(g), 3);
        assert_eq!(influx_graph_num_edges(g), 2);
        influx_graph_free(g);
        influx_graph_free(ptr::null_mut());
        assert_eq!(influx_graph_num_vertices(ptr::null()), 0);
    }
}

#[test]
fn parse_errors_carry_codes_and_messages() {
    let bad = CString::new("3 2 LT\n1 0 1.0\n").unwrap();
    let mut g = ptr::null_mut();
    let s = unsafe { influx_graph_from_text(bad.as_ptr(), &mut g) };
    assert_eq!(s, InfluxStatus::ParseError);
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { influx_graph_from_text(ptr::null(), &mut g) };
    assert_eq!(s, InfluxStatus::NullPointer);
    assert!(last_error().contains("text"));

    let missing = CString::new("/nonexistent/graph.txt").unwrap();
    assert_eq!(unsafe { influx_graph_from_file(missing.as_ptr(), &mut g) }, InfluxStatus::IoError);
}

#[test]
fn topk_lifecycle() {
    let g = graph(STAR);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(influx_topk_new(g, 1, 0.2, 0.1, 7, &mut t), InfluxStatus::Ok);
        influx_graph_free(g);

        let up = InfluxUpdate { u: 1, v: 2, sign: 1, delta: 1.0, t: 0 };
        assert_eq!(influx_topk_process(t, &up), InfluxStatus::Ok);
        let bad = InfluxUpdate { u: 3, v: 4, sign: -1, delta: 1.0, t: 1 };
        assert_eq!(influx_topk_process(t, &bad), InfluxStatus::DataError);
        let bad_sign = InfluxUpdate { sign: 0, ..up };
        assert_eq!(influx_topk_process(t, &bad_sign), InfluxStatus::InvalidArgument);

        let mut written = 0usize;
        assert_eq!(
            influx_topk_query(t, ptr::null_mut(), ptr::null_mut(), 0, &mut written),
            InfluxStatus::BufferTooSmall
        );
        assert!(written >= 1);
        let mut vs = vec![0u32; written];
        let mut est = vec![0f64; written];
        assert_eq!(
            influx_topk_query(t, vs.as_mut_ptr(), est.as_mut_ptr(), vs.len(), &mut written),
            InfluxStatus::Ok
        );
        assert_eq!(vs[0], 0);
        assert!(est[0] > 2.0);
        assert!(influx_topk_threshold(t) > 0.0);
        influx_topk_free(t);
    }
}

#[test]
fn topk_rejects_bad_parameters() {
    let g = graph(G3);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(influx_topk_new(g, 1, 0.5, 0.1, 1, &mut t), InfluxStatus::InvalidArgument);
        assert_eq!(influx_topk_new(g, 9, 0.2, 0.1, 1, &mut t), InfluxStatus::InvalidArgument);
        assert_eq!(influx_topk_new(ptr::null(), 1, 0.2, 0.1, 1, &mut t), InfluxStatus::NullPointer);
        assert!(t.is_null());
        influx_graph_free(g);
    }
}

#[test]
fn im_lifecycle() {
    let g = graph(STAR);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(
            influx_im_new(g, 2, 0.2, 0.1, InfluxSizingMode::Theoretical, 3, &mut t),
            InfluxStatus::Ok
        );
        let up = InfluxUpdate { u: 0, v: 1, sign: -1, delta: 0.5, t: 0 };
        assert_eq!(influx_im_process(t, &up), InfluxStatus::Ok);
        let mut seeds = [0u32; 2];
        let mut written = 0;
        let mut estimate = 0.0;
        assert_eq!(influx_im_query(t, 1, seeds.as_mut_ptr(), &mut written, &mut estimate), InfluxStatus::Ok);
        assert_eq!((written, seeds[0]), (1, 0));
        assert!(estimate > 2.0);
        assert_eq!(
            influx_im_query(t, 3, seeds.as_mut_ptr(), &mut written, ptr::null_mut()),
            InfluxStatus::InvalidArgument
        );
        influx_im_free(t);
        influx_graph_free(g);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(influx_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
