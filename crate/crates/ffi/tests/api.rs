use std::ffi::{CStr, CString};
use std::ptr;

use pacpomdp_ffi::*;

fn last_error() -> String {
    let p = pac_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tiger(h: usize) -> *mut PacModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pac_model_tiger(0.85, h, &mut m) }, PacStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn tiger_dims_and_optimum() {
    let m = tiger(3);
    let (mut s, mut a, mut z, mut h) = (0, 0, 0, 0);
    unsafe {
        assert_eq!(
            pac_model_dims(m, &mut s, &mut a, &mut z, &mut h),
            PacStatus::Ok
        );
        assert_eq!((s, a, z, h), (2, 3, 2, 3));
        let mut v = 0.0;
        assert_eq!(pac_optimal_value(m, &mut v), PacStatus::Ok);
        // listen twice, then open the door the two agreeing observations
        // point away from; matches the brute-force optimum
        assert!((v - 2.752).abs() < 1e-9, "{v}");
        pac_model_free(m);
    }
}

#[test]
fn json_round_trip_through_c_strings() {
    let m = tiger(4);
    unsafe {
        let mut text = ptr::null_mut();
        assert_eq!(pac_model_to_json(m, &mut text), PacStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(pac_model_from_json(text, &mut back), PacStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(pac_model_to_json(back, &mut again), PacStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        pac_string_free(text);
        pac_string_free(again);
        pac_model_free(back);
        pac_model_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(pac_model_tiger(0.3, 3, &mut m), PacStatus::InvalidArgument);
        assert!(m.is_null());
        assert!(last_error().contains("listen accuracy"));

        let bad = CString::new("{\"states\": 2}").unwrap();
        assert_eq!(pac_model_from_json(bad.as_ptr(), &mut m), PacStatus::Parse);

        assert_eq!(
            pac_model_tiger(0.85, 3, ptr::null_mut()),
            PacStatus::NullArgument
        );
        let mut v = 0.0;
        assert_eq!(
            pac_optimal_value(ptr::null(), &mut v),
            PacStatus::NullArgument
        );

        assert_eq!(pac_model_tiger(0.85, 2, &mut m), PacStatus::InvalidModel);
        assert!(last_error().contains("horizon"));

        // a successful call clears the message
        let t = tiger(3);
        assert!(pac_last_error().is_null());
        pac_model_free(t);
        pac_model_free(ptr::null_mut());
        pac_string_free(ptr::null_mut());
    }
}

#[test]
fn oracle_refuses_beyond_caps() {
    let m = tiger(40);
    let mut v = 0.0;
    unsafe {
        assert_eq!(pac_optimal_value(m, &mut v), PacStatus::SizeLimit);
        pac_model_free(m);
    }
}

#[test]
fn validation_and_requirement() {
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(pac_model_random(3, 2, 3, 3, 7, &mut r), PacStatus::Ok);
        let mut passed = -1;
        assert_eq!(pac_model_validate(r, 1e-8, &mut passed), PacStatus::Ok);
        assert_eq!(passed, 1);
        let t = tiger(3);
        assert_eq!(pac_model_validate(t, 1e-8, &mut passed), PacStatus::Ok);
        // the door actions reset the state
        assert_eq!(passed, 0);

        let (mut loose, mut tight) = (0u64, 0u64);
        assert_eq!(
            pac_required_episodes(r, 0.2, 0.1, &mut loose),
            PacStatus::Ok
        );
        assert_eq!(
            pac_required_episodes(r, 0.1, 0.1, &mut tight),
            PacStatus::Ok
        );
        assert!(tight >= 4 * loose - 4 && loose > 0);
        assert_eq!(
            pac_required_episodes(r, 0.1, 1.5, &mut tight),
            PacStatus::InvalidArgument
        );
        pac_model_free(r);
        pac_model_free(t);
    }
}

#[test]
fn population_pipeline_recovers_tiger() {
    let m = tiger(3);
    unsafe {
        let (mut regret, mut err) = (f64::NAN, f64::NAN);
        let mut est = ptr::null_mut();
        assert_eq!(
            pac_run_pipeline(m, 0, 0, 1, &mut regret, &mut err, &mut est),
            PacStatus::Ok
        );
        assert!(regret.abs() <= 1e-6 && err <= 1e-6, "{regret} {err}");
        let mut b = f64::NAN;
        assert_eq!(pac_simulation_gap_bound(m, est, &mut b), PacStatus::Ok);
        assert!((0.0..1e-5).contains(&b), "{b}");
        pac_model_free(est);
        pac_model_free(m);
    }
}

#[test]
fn sampled_pipeline_reports_finite_errors() {
    let m = tiger(3);
    unsafe {
        let mut err = f64::NAN;
        assert_eq!(
            pac_run_pipeline(m, 20_000, 3, 0, ptr::null_mut(), &mut err, ptr::null_mut()),
            PacStatus::Ok
        );
        assert!(err.is_finite() && err > 0.0 && err < 0.5, "{err}");
        pac_model_free(m);
    }
}
