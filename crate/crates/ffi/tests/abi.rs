use std::ffi::{CStr, CString};
use std::ptr;

use barylab_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(barylab_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

unsafe fn space(json: &str) -> *mut BarylabSpace {
    let mut s = ptr::null_mut();
    assert_eq!(barylab_space_from_json(c(json).as_ptr(), &mut s), BARYLAB_OK);
    s
}

#[test]
fn spd_distance_and_geodesic() {
    unsafe {
        let s = space(r#"{"geometry":"spd_trace","dim":2}"#);
        assert_eq!(barylab_space_point_len(s), 4);
        let a = [1.0, 0.0, 0.0, 1.0];
        let b = [4.0, 0.0, 0.0, 1.0];
        let mut d = 0.0;
        assert_eq!(barylab_dist(s, a.as_ptr(), b.as_ptr(), 4, &mut d), BARYLAB_OK);
        assert!((d - 4f64.ln()).abs() < 1e-14);
        let mut mid = [0.0; 4];
        assert_eq!(barylab_geodesic(s, a.as_ptr(), b.as_ptr(), 4, 0.5, mid.as_mut_ptr()), BARYLAB_OK);
        assert!((mid[0] - 2.0).abs() < 1e-14 && mid[1].abs() < 1e-15);

        let not_spd = [1.0, 2.0, 2.0, 1.0];
        assert_eq!(barylab_dist(s, a.as_ptr(), not_spd.as_ptr(), 4, &mut d), BARYLAB_ERR_DOMAIN);
        assert!(!last_error().is_empty());
        assert_eq!(barylab_dist(s, a.as_ptr(), b.as_ptr(), 3, &mut d), BARYLAB_ERR_INPUT);
        assert_eq!(barylab_dist(ptr::null(), a.as_ptr(), b.as_ptr(), 4, &mut d), BARYLAB_ERR_NULL_POINTER);
        barylab_space_free(s);
    }
}

#[test]
fn karcher_through_handles() {
    unsafe {
        let s = space(r#"{"geometry":"spd_trace","dim":2}"#);
        let pts = [1.0, 0.0, 0.0, 1.0, 4.0, 0.0, 0.0, 9.0];
        let w = [0.5, 0.5];
        let mut mu = ptr::null_mut();
        assert_eq!(barylab_measure_new(s, pts.as_ptr(), w.as_ptr(), 2, &mut mu), BARYLAB_OK);
        assert_eq!(barylab_measure_len(mu), 2);
        let mut map = ptr::null_mut();
        assert_eq!(barylab_map_from_json(c(r#"{"type":"karcher"}"#).as_ptr(), &mut map), BARYLAB_OK);
        let mut x = [0.0; 4];
        assert_eq!(barylab_map_evaluate(map, mu, x.as_mut_ptr(), 4), BARYLAB_OK);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[3] - 3.0).abs() < 1e-12);
        let mut r = 1.0;
        assert_eq!(barylab_karcher_residual(mu, x.as_ptr(), 4, &mut r), BARYLAB_OK);
        assert!(r < 1e-12);
        let mut small = [0.0; 2];
        assert_eq!(barylab_map_evaluate(map, mu, small.as_mut_ptr(), 2), BARYLAB_ERR_INPUT);

        let mut arith = ptr::null_mut();
        assert_eq!(barylab_map_from_json(c(r#"{"type":"arithmetic"}"#).as_ptr(), &mut arith), BARYLAB_OK);
        assert_eq!(barylab_map_evaluate(arith, mu, x.as_mut_ptr(), 4), BARYLAB_ERR_UNSUPPORTED);

        barylab_map_free(arith);
        barylab_map_free(map);
        barylab_measure_free(mu);
        barylab_space_free(s);
    }
}

#[test]
fn wasserstein_from_json_measures() {
    unsafe {
        let mut mu = ptr::null_mut();
        let mut nu = ptr::null_mut();
        let a = r#"{"space":{"geometry":"euclidean","dim":1},"atoms":[{"point":[0.0],"weight":0.5},{"point":[2.0],"weight":0.5}]}"#;
        let b = r#"{"space":{"geometry":"euclidean","dim":1},"atoms":[{"point":[1.0],"weight":1.0}]}"#;
        assert_eq!(barylab_measure_from_json(c(a).as_ptr(), &mut mu), BARYLAB_OK);
        assert_eq!(barylab_measure_from_json(c(b).as_ptr(), &mut nu), BARYLAB_OK);
        let mut d = 0.0;
        assert_eq!(barylab_wasserstein(mu, nu, 2.0, &mut d), BARYLAB_OK);
        assert!((d - 1.0).abs() < 1e-14);
        assert_eq!(barylab_wasserstein(mu, nu, 0.5, &mut d), BARYLAB_ERR_INPUT);
        barylab_measure_free(mu);
        barylab_measure_free(nu);
        assert_eq!(barylab_measure_from_json(c("{").as_ptr(), &mut mu), BARYLAB_ERR_INPUT);
    }
}

#[test]
fn entropy_and_errors() {
    unsafe {
        let p = [0.75, 0.25];
        let w = [0.5, 0.5];
        let mut s = 0.0;
        assert_eq!(barylab_relative_entropy(p.as_ptr(), w.as_ptr(), 2, &mut s), BARYLAB_OK);
        assert!((s - (0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln())).abs() < 1e-15);
        assert!(last_error().is_empty());
        assert_eq!(barylab_relative_entropy(p.as_ptr(), w.as_ptr(), 2, ptr::null_mut()), BARYLAB_ERR_NULL_POINTER);
        assert!(last_error().contains("entropy_out"));
    }
}

#[test]
fn experiment_round_trip() {
    let config = r#"{"kind":"audit","audit":"contractivity","map":{"type":"arithmetic"},
        "space":{"geometry":"euclidean","dim":2},"trials":20,"seed":5}"#;
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(barylab_run_experiment(c(config).as_ptr(), &mut report), BARYLAB_OK);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        assert!(text.contains("\"pass\": true"));
        let mut valid = 0;
        assert_eq!(barylab_verify_report(report, &mut valid), BARYLAB_OK);
        assert_eq!(valid, 1);
        barylab_string_free(report);

        let tampered = text.replacen("\"pass\": true", "\"pass\": false", 1);
        assert_eq!(barylab_verify_report(c(&tampered).as_ptr(), &mut valid), BARYLAB_OK);
        assert_eq!(valid, 0);
        assert!(!last_error().is_empty());

        let unseeded = config.replace(",\"seed\":5", "");
        assert_eq!(barylab_run_experiment(c(&unseeded).as_ptr(), &mut report), BARYLAB_ERR_INPUT);
        let capacity = r#"{"kind":"ldp","model":{"space":{"geometry":"euclidean","dim":1},
            "atoms":[[0.0],[1.0]],"weights":[0.5,0.5],"map":{"type":"arithmetic"}},
            "event":{"type":"always"},"ns":[61],"grid_resolution":4}"#;
        assert_eq!(barylab_run_experiment(c(capacity).as_ptr(), &mut report), BARYLAB_ERR_CAPACITY);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/barylab.h")).unwrap();
    for name in [
        "typedef struct BarylabSpace BarylabSpace;",
        "typedef struct BarylabMeasure BarylabMeasure;",
        "typedef struct BarylabMap BarylabMap;",
        "#define BARYLAB_ERR_CAPACITY 5",
        "barylab_run_experiment",
        "barylab_string_free",
        "barylab_last_error_message",
        "barylab_map_evaluate",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let version = unsafe { CStr::from_ptr(barylab_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}
