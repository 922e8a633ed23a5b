//! C ABI over `adadec-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`AdadecStatus`]; on failure, [`adadec_last_error`] describes
//! the cause for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use adadec_core::decoding::{
    generate, BasePolicy, DecodeConfig, FinishReason, GenerationResult, Strategy, TauSetting,
};
use adadec_core::lm::{TableMock, TokenId};
use adadec_core::threshold::{learn_threshold, StepTrace, ThresholdModel};
use adadec_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdadecStatus {
    Ok = 0,
    NullPointer,
    InvalidUtf8,
    Length,
    InvalidToken,
    Domain,
    Config,
    Backend,
    MockModel,
    TrainingData,
    FitQuality,
    Inconsistency,
    Json,
    Io,
    Other,
    Panic,
}

impl From<&Error> for AdadecStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Length { .. } => Self::Length,
            Error::InvalidToken { .. } => Self::InvalidToken,
            Error::Domain(_) => Self::Domain,
            Error::Config(_) => Self::Config,
            Error::Backend(_) => Self::Backend,
            Error::MockModel(_) => Self::MockModel,
            Error::TrainingData(_) => Self::TrainingData,
            Error::FitQuality(_) => Self::FitQuality,
            Error::Inconsistency(_) => Self::Inconsistency,
            Error::Json(_) => Self::Json,
            Error::Io(_) => Self::Io,
            _ => Self::Other,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdadecStrategy {
    Greedy = 0,
    Sampling,
    Beam,
    Adapt,
    Adadec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdadecPolicy {
    Greedy = 0,
    Temperature,
    TopK,
    TopP,
}

/// How `tau` in [`AdadecDecodeConfig`] is interpreted.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdadecTauMode {
    /// Take tau from the threshold handle passed to the call.
    Learned = 0,
    Fixed,
    NeverPause,
    AlwaysPause,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdadecFinishReason {
    Eos = 0,
    MaxLen,
    ContextLimit,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AdadecDecodeConfig {
    pub strategy: AdadecStrategy,
    pub policy: AdadecPolicy,
    pub temperature: f64,
    pub top_k: usize,
    pub top_p: f64,
    pub tau_mode: AdadecTauMode,
    pub tau: f64,
    pub lookahead_width: usize,
    pub lookahead_len: usize,
    pub max_len: usize,
    pub seed: u64,
    pub beam_width: usize,
    pub adapt_a: f64,
    pub adapt_b: f64,
    pub parallel_lookahead: bool,
}

/// A table-driven mock language model.
pub struct AdadecModel(TableMock);

/// A learned entropy threshold.
pub struct AdadecThreshold(ThresholdModel);

/// Output of one decoding run.
pub struct AdadecGeneration {
    result: GenerationResult,
    tokens: Vec<u32>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(AdadecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AdadecStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AdadecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AdadecStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside adadec".into());
            AdadecStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(AdadecStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adadec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn adadec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Shannon entropy in nats of a probability vector.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_entropy(
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> AdadecStatus {
    guard(|| {
        let probs = slice_arg(probs, len, "probs")?;
        *out_arg(out, "out")? = adadec_core::signals::entropy(probs)?;
        Ok(())
    })
}

/// Builds a mock model from its JSON description.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_model_from_json(
    json: *const c_char,
    out: *mut *mut AdadecModel,
) -> AdadecStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        *out = into_handle(AdadecModel(TableMock::from_json_str(json)?));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adadec_model_vocab_size(model: *const AdadecModel) -> usize {
    use adadec_core::lm::LanguageModel;
    model.as_ref().map_or(0, |m| m.0.vocab_size())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn adadec_model_free(model: *mut AdadecModel) {
    free_handle(model);
}

/// Parses a threshold model from JSON, checking tau against the parameters.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_from_json(
    json: *const c_char,
    out: *mut *mut AdadecThreshold,
) -> AdadecStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        *out = into_handle(AdadecThreshold(ThresholdModel::from_json(json)?));
        Ok(())
    })
}

/// Derives tau from logistic parameters and a probability cutoff.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_from_parameters(
    beta0: f64,
    beta1: f64,
    p_star: f64,
    out: *mut *mut AdadecThreshold,
) -> AdadecStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = into_handle(AdadecThreshold(ThresholdModel::from_parameters(
            beta0, beta1, p_star,
        )?));
        Ok(())
    })
}

/// Learns a threshold from per-step entropies and top-1 correctness labels
/// (non-zero = correct), with seeded class balancing.
///
/// # Safety
/// `entropies` and `labels` must each point to `len` readable elements;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_fit(
    entropies: *const f64,
    labels: *const u8,
    len: usize,
    seed: u64,
    out: *mut *mut AdadecThreshold,
) -> AdadecStatus {
    guard(|| {
        let entropies = slice_arg(entropies, len, "entropies")?;
        let labels = slice_arg(labels, len, "labels")?;
        let out = out_arg(out, "out")?;
        let traces: Vec<StepTrace> = entropies
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&entropy, &label))| StepTrace {
                problem_id: String::new(),
                step_index: i,
                entropy,
                gt_rank: if label != 0 { 1 } else { 2 },
                top1_correct: label != 0,
                line_start: false,
                paused: None,
            })
            .collect();
        let (model, _) = learn_threshold(&traces, seed, "")?;
        *out = into_handle(AdadecThreshold(model));
        Ok(())
    })
}

/// # Safety
/// `threshold` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_tau(threshold: *const AdadecThreshold) -> f64 {
    threshold.as_ref().map_or(f64::NAN, |t| t.0.tau)
}

/// Writes `beta0`, `beta1` and `p_star`; any output pointer may be null.
///
/// # Safety
/// `threshold` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_parameters(
    threshold: *const AdadecThreshold,
    beta0: *mut f64,
    beta1: *mut f64,
    p_star: *mut f64,
) -> AdadecStatus {
    guard(|| {
        let t = &threshold.as_ref().ok_or_else(|| null("threshold"))?.0;
        for (dst, v) in [(beta0, t.beta0), (beta1, t.beta1), (p_star, t.p_star)] {
            if let Some(d) = dst.as_mut() {
                *d = v;
            }
        }
        Ok(())
    })
}

/// Serialises the threshold; release the string with [`adadec_string_free`].
///
/// # Safety
/// `threshold` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_to_json(
    threshold: *const AdadecThreshold,
    out: *mut *mut c_char,
) -> AdadecStatus {
    guard(|| {
        let t = threshold.as_ref().ok_or_else(|| null("threshold"))?;
        let out = out_arg(out, "out")?;
        let json = CString::new(t.0.to_json()?).expect("JSON has no nul bytes");
        *out = json.into_raw();
        Ok(())
    })
}

/// # Safety
/// `threshold` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn adadec_threshold_free(threshold: *mut AdadecThreshold) {
    free_handle(threshold);
}

/// Library defaults: pause-then-rerank decoding with a learned tau,
/// B = 3, L = 5, greedy base policy.
#[no_mangle]
pub extern "C" fn adadec_decode_config_default() -> AdadecDecodeConfig {
    let d = DecodeConfig::default();
    AdadecDecodeConfig {
        strategy: AdadecStrategy::Adadec,
        policy: AdadecPolicy::Greedy,
        temperature: 1.0,
        top_k: 50,
        top_p: 0.95,
        tau_mode: AdadecTauMode::Learned,
        tau: 0.0,
        lookahead_width: d.lookahead_width,
        lookahead_len: d.lookahead_len,
        max_len: d.max_len,
        seed: d.seed,
        beam_width: 3,
        adapt_a: adadec_core::decoding::ADAPT_A,
        adapt_b: adadec_core::decoding::ADAPT_B,
        parallel_lookahead: d.parallel_lookahead,
    }
}

fn to_core(c: &AdadecDecodeConfig) -> (Strategy, DecodeConfig) {
    let strategy = match c.strategy {
        AdadecStrategy::Greedy => Strategy::Greedy,
        AdadecStrategy::Sampling => Strategy::Sampling,
        AdadecStrategy::Beam => Strategy::Beam {
            width: c.beam_width,
        },
        AdadecStrategy::Adapt => Strategy::Adapt {
            a: c.adapt_a,
            b: c.adapt_b,
        },
        AdadecStrategy::Adadec => Strategy::Adadec,
    };
    let base_policy = match c.policy {
        AdadecPolicy::Greedy => BasePolicy::Greedy,
        AdadecPolicy::Temperature => BasePolicy::Temperature {
            temperature: c.temperature,
        },
        AdadecPolicy::TopK => BasePolicy::TopK {
            k: c.top_k,
            temperature: c.temperature,
        },
        AdadecPolicy::TopP => BasePolicy::TopP {
            p: c.top_p,
            temperature: c.temperature,
        },
    };
    let tau = match c.tau_mode {
        AdadecTauMode::Learned => TauSetting::Learned,
        AdadecTauMode::Fixed => TauSetting::Fixed(c.tau),
        AdadecTauMode::NeverPause => TauSetting::NeverPause,
        AdadecTauMode::AlwaysPause => TauSetting::AlwaysPause,
    };
    let config = DecodeConfig {
        base_policy,
        tau,
        lookahead_width: c.lookahead_width,
        lookahead_len: c.lookahead_len,
        max_len: c.max_len,
        seed: c.seed,
        parallel_lookahead: c.parallel_lookahead,
    };
    (strategy, config)
}

/// Decodes `prompt` with `model`. `threshold` may be null unless the config
/// asks for a learned tau.
///
/// # Safety
/// `model` and `config` must be valid; `prompt` must point to `prompt_len`
/// token ids; `threshold` must be null or live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_generate(
    model: *const AdadecModel,
    prompt: *const u32,
    prompt_len: usize,
    config: *const AdadecDecodeConfig,
    threshold: *const AdadecThreshold,
    out: *mut *mut AdadecGeneration,
) -> AdadecStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let prompt: Vec<TokenId> = slice_arg(prompt, prompt_len, "prompt")?
            .iter()
            .map(|&t| TokenId(t))
            .collect();
        let threshold = threshold.as_ref().map(|t| &t.0);
        let out = out_arg(out, "out")?;
        let (strategy, config) = to_core(config);
        let result = generate(model, &prompt, strategy, &config, threshold)?;
        let tokens = result.tokens.iter().map(|t| t.0).collect();
        *out = into_handle(AdadecGeneration { result, tokens });
        Ok(())
    })
}

/// Generated token ids; the array lives as long as the handle.
///
/// # Safety
/// `generation` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_generation_tokens(
    generation: *const AdadecGeneration,
    len: *mut usize,
) -> *const u32 {
    match (generation.as_ref(), len.as_mut()) {
        (Some(g), Some(len)) => {
            *len = g.tokens.len();
            g.tokens.as_ptr()
        }
        (_, len) => {
            if let Some(len) = len {
                *len = 0;
            }
            ptr::null()
        }
    }
}

/// Number of decoding steps that paused to rerank.
///
/// # Safety
/// `generation` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adadec_generation_pauses(generation: *const AdadecGeneration) -> usize {
    generation.as_ref().map_or(0, |g| g.result.pauses())
}

/// # Safety
/// `generation` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adadec_generation_pause_rate(generation: *const AdadecGeneration) -> f64 {
    generation
        .as_ref()
        .map_or(f64::NAN, |g| g.result.pause_rate())
}

/// # Safety
/// `generation` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adadec_generation_finish_reason(
    generation: *const AdadecGeneration,
) -> AdadecFinishReason {
    match generation.as_ref().map(|g| g.result.finished_reason) {
        Some(FinishReason::Eos) | None => AdadecFinishReason::Eos,
        Some(FinishReason::MaxLen) => AdadecFinishReason::MaxLen,
        Some(FinishReason::ContextLimit) => AdadecFinishReason::ContextLimit,
    }
}

/// Per-step log as JSON lines; release with [`adadec_string_free`].
///
/// # Safety
/// `generation` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adadec_generation_step_log(
    generation: *const AdadecGeneration,
    out: *mut *mut c_char,
) -> AdadecStatus {
    guard(|| {
        let g = generation.as_ref().ok_or_else(|| null("generation"))?;
        let out = out_arg(out, "out")?;
        let mut buf = Vec::new();
        g.result.write_step_log_jsonl(&mut buf)?;
        *out = CString::new(buf).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `generation` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn adadec_generation_free(generation: *mut AdadecGeneration) {
    free_handle(generation);
}
