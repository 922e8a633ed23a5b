use std::ffi::{CStr, CString};
use std::ptr;

use adadec_ffi::*;

const DRIFT_MODEL: &str = r#"{
  "vocab_size": 6,
  "eos_token": 0,
  "rules": [
    {"suffix": [1], "probs": [0.0, 0.0, 0.45, 0.44, 0.0, 0.11]},
    {"suffix": [2], "probs": [0.4, 0.0, 0.0, 0.0, 0.3, 0.3]},
    {"suffix": [3], "probs": [0.0, 0.0, 0.0, 0.0, 0.95, 0.05]},
    {"suffix": [4], "probs": [0.95, 0.0, 0.0, 0.0, 0.0, 0.05]}
  ],
  "default": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
}"#;

fn last_error() -> String {
    let p = adadec_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(json: &str) -> *mut AdadecModel {
    let json = CString::new(json).unwrap();
    let mut model = ptr::null_mut();
    let status = unsafe { adadec_model_from_json(json.as_ptr(), &mut model) };
    assert_eq!(status, AdadecStatus::Ok);
    model
}

fn run(
    model: *const AdadecModel,
    prompt: &[u32],
    cfg: &AdadecDecodeConfig,
) -> (Vec<u32>, *mut AdadecGeneration) {
    let mut g = ptr::null_mut();
    let status = unsafe {
        adadec_generate(
            model,
            prompt.as_ptr(),
            prompt.len(),
            cfg,
            ptr::null(),
            &mut g,
        )
    };
    assert_eq!(status, AdadecStatus::Ok, "{}", last_error());
    let mut len = 0;
    let toks = unsafe { adadec_generation_tokens(g, &mut len) };
    (unsafe { std::slice::from_raw_parts(toks, len) }.to_vec(), g)
}

#[test]
fn entropy_of_uniform_and_bad_input() {
    let mut h = 0.0;
    let p = [0.25; 4];
    assert_eq!(
        unsafe { adadec_entropy(p.as_ptr(), 4, &mut h) },
        AdadecStatus::Ok
    );
    assert!((h - 4f64.ln()).abs() < 1e-12);

    let bad = [0.5, 0.2];
    assert_eq!(
        unsafe { adadec_entropy(bad.as_ptr(), 2, &mut h) },
        AdadecStatus::Domain
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { adadec_entropy(ptr::null(), 3, &mut h) },
        AdadecStatus::NullPointer
    );
}

#[test]
fn pause_and_rerank_through_handles() {
    let model = load(DRIFT_MODEL);
    assert_eq!(unsafe { adadec_model_vocab_size(model) }, 6);

    let mut cfg = adadec_decode_config_default();
    cfg.strategy = AdadecStrategy::Greedy;
    let (greedy, g) = run(model, &[1], &cfg);
    assert_eq!(greedy, [2, 0]);
    unsafe { adadec_generation_free(g) };

    cfg.strategy = AdadecStrategy::Adadec;
    cfg.tau_mode = AdadecTauMode::Fixed;
    cfg.tau = 0.5;
    cfg.lookahead_width = 2;
    cfg.lookahead_len = 2;
    let (tokens, g) = run(model, &[1], &cfg);
    assert_eq!(tokens, [3, 4, 0]);
    assert_eq!(unsafe { adadec_generation_pauses(g) }, 1);
    assert_eq!(unsafe { adadec_generation_pause_rate(g) }, 1.0 / 3.0);
    assert_eq!(
        unsafe { adadec_generation_finish_reason(g) },
        AdadecFinishReason::Eos
    );

    let mut log = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_generation_step_log(g, &mut log) },
        AdadecStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(log) }.to_str().unwrap().to_owned();
    unsafe { adadec_string_free(log) };
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["paused"], true);
    assert_eq!(first["chosen"], 3);

    unsafe {
        adadec_generation_free(g);
        adadec_model_free(model);
    }
}

#[test]
fn learned_tau_needs_a_threshold() {
    let model = load(DRIFT_MODEL);
    let cfg = adadec_decode_config_default();
    let mut g = ptr::null_mut();
    let status = unsafe { adadec_generate(model, [1u32].as_ptr(), 1, &cfg, ptr::null(), &mut g) };
    assert_eq!(status, AdadecStatus::Config);
    assert!(g.is_null());

    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_threshold_from_parameters(0.0, -1.0, 0.5, &mut t) },
        AdadecStatus::Ok
    );
    assert_eq!(unsafe { adadec_threshold_tau(t) }, 0.0);
    let status = unsafe { adadec_generate(model, [1u32].as_ptr(), 1, &cfg, t, &mut g) };
    assert_eq!(status, AdadecStatus::Ok);
    unsafe {
        adadec_generation_free(g);
        adadec_threshold_free(t);
        adadec_model_free(model);
    }
}

#[test]
fn invalid_tokens_and_models_map_to_status_codes() {
    let model = load(DRIFT_MODEL);
    let mut cfg = adadec_decode_config_default();
    cfg.tau_mode = AdadecTauMode::NeverPause;
    let mut g = ptr::null_mut();
    let status = unsafe { adadec_generate(model, [9u32].as_ptr(), 1, &cfg, ptr::null(), &mut g) };
    assert_eq!(status, AdadecStatus::InvalidToken);
    unsafe { adadec_model_free(model) };

    let bad = CString::new(r#"{"vocab_size": 2, "rules": [], "default": [0.9, 0.9]}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_model_from_json(bad.as_ptr(), &mut m) },
        AdadecStatus::MockModel
    );
    let junk = CString::new("not json").unwrap();
    assert_eq!(
        unsafe { adadec_model_from_json(junk.as_ptr(), &mut m) },
        AdadecStatus::Json
    );
    assert!(m.is_null());
}

#[test]
fn threshold_fit_and_json_round_trip() {
    // deterministic labels: correct iff entropy below 1.0, with 10% flipped
    let n = 2000;
    let entropies: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / n as f64).collect();
    let labels: Vec<u8> = (0..n)
        .map(|i| u8::from((entropies[i] < 1.0) != (i % 10 == 0)))
        .collect();
    let mut t = ptr::null_mut();
    let status = unsafe { adadec_threshold_fit(entropies.as_ptr(), labels.as_ptr(), n, 5, &mut t) };
    assert_eq!(status, AdadecStatus::Ok, "{}", last_error());
    let (mut b0, mut b1, mut p) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { adadec_threshold_parameters(t, &mut b0, &mut b1, &mut p) },
        AdadecStatus::Ok
    );
    assert!(b1 < 0.0);
    let tau = unsafe { adadec_threshold_tau(t) };
    assert!((0.7..1.3).contains(&tau), "tau {tau}");

    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_threshold_to_json(t, &mut json) },
        AdadecStatus::Ok
    );
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_threshold_from_json(json, &mut back) },
        AdadecStatus::Ok
    );
    assert_eq!(unsafe { adadec_threshold_tau(back) }, tau);

    let tampered =
        CString::new(r#"{"beta0": 0.0, "beta1": -1.0, "p_star": 0.5, "tau": 3.0}"#).unwrap();
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_threshold_from_json(tampered.as_ptr(), &mut bad) },
        AdadecStatus::Inconsistency
    );
    let mut pos = ptr::null_mut();
    assert_eq!(
        unsafe { adadec_threshold_from_parameters(0.0, 1.0, 0.5, &mut pos) },
        AdadecStatus::FitQuality
    );

    unsafe {
        adadec_string_free(json);
        adadec_threshold_free(t);
        adadec_threshold_free(back);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        adadec_model_free(ptr::null_mut());
        adadec_threshold_free(ptr::null_mut());
        adadec_generation_free(ptr::null_mut());
        adadec_string_free(ptr::null_mut());
    }
}
