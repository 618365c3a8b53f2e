//! C interface to `typedmood`.
//!
//! Every function returns a [`TmStatus`]; on failure a message is stored for
//! the calling thread and can be read with [`tm_last_error`]. Datasets and
//! models are opaque handles released with their `_free` function. Panics
//! never cross the boundary and are reported as [`TmStatus::Panic`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ndarray::ArrayView2;
use typedmood::artifact::Artifact;
use typedmood::datamodel::{self, Dataset};
use typedmood::error::Error;
use typedmood::eval::{self, TradeoffPoint};
use typedmood::features::Modalities;
use typedmood::nimlp;
use typedmood::synthgen::{self, GenConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    SingleClass = 6,
    BufferTooSmall = 7,
    Runtime = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> TmStatus {
    match e {
        Error::Validation(_) | Error::EmptyDataset | Error::UnknownUser(_) => TmStatus::InvalidArgument,
        Error::Parse { .. } | Error::Json(_) => TmStatus::Parse,
        Error::DimensionMismatch { .. } => TmStatus::DimensionMismatch,
        Error::SingleClass => TmStatus::SingleClass,
        Error::Io { .. } => TmStatus::Io,
        Error::Degenerate(_) => TmStatus::Runtime,
    }
}

struct Fail(TmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail(status: TmStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TmStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TmStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(TmStatus::NullPointer, "null input array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(TmStatus::NullPointer, "null output array"));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(TmStatus::NullPointer, "null output pointer"))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(TmStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(TmStatus::InvalidArgument, "string is not UTF-8"))
}

fn labels_usize(v: &[u32]) -> Vec<usize> {
    v.iter().map(|&x| x as usize).collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn tm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Map a 0-100 mood score to 0 (negative), 1 (neutral) or 2 (positive).
#[no_mangle]
pub unsafe extern "C" fn tm_bin_mood(score: i64, class_out: *mut u32) -> TmStatus {
    guard(|| {
        let c = datamodel::bin_mood(score)?;
        *out(class_out)? = c.index() as u32;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_macro_f1(
    predicted: *const u32,
    labels: *const u32,
    n: usize,
    n_classes: usize,
    f1_out: *mut f64,
) -> TmStatus {
    guard(|| {
        let p = labels_usize(slice(predicted, n)?);
        let y = labels_usize(slice(labels, n)?);
        *out(f1_out)? = eval::macro_f1(&p, &y, n_classes)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TmSignedRank {
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub p_less: f64,
    pub p_greater: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Paired signed-rank test of `a - b`.
#[no_mangle]
pub unsafe extern "C" fn tm_wilcoxon_signed_rank(a: *const f64, b: *const f64, n: usize, result: *mut TmSignedRank) -> TmStatus {
    guard(|| {
        let r = eval::wilcoxon_signed_rank(slice(a, n)?, slice(b, n)?)?;
        *out(result)? = TmSignedRank {
            w_plus: r.w_plus,
            w_minus: r.w_minus,
            n: r.n,
            p_less: r.p_less,
            p_greater: r.p_greater,
            p_value: r.p_value,
            exact: r.exact,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TmRankSum {
    pub u: f64,
    pub rank_sum: f64,
    pub p_less: f64,
    pub p_greater: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sample rank-sum test; `p_less` is the probability that `a` tends to
/// be smaller.
#[no_mangle]
pub unsafe extern "C" fn tm_wilcoxon_rank_sum(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    result: *mut TmRankSum,
) -> TmStatus {
    guard(|| {
        let r = eval::wilcoxon_rank_sum(slice(a, na)?, slice(b, nb)?)?;
        *out(result)? = TmRankSum {
            u: r.u,
            rank_sum: r.rank_sum,
            p_less: r.p_less,
            p_greater: r.p_greater,
            p_value: r.p_value,
            exact: r.exact,
        };
        Ok(())
    })
}

/// Privacy gained per unit of performance lost; `negative_out` flags
/// ratios excluded from selection.
#[no_mangle]
pub unsafe extern "C" fn tm_compute_r(
    s_mlp: f64,
    s_nimlp: f64,
    t_mlp: f64,
    t_nimlp: f64,
    r_out: *mut f64,
    negative_out: *mut bool,
) -> TmStatus {
    guard(|| {
        let r = nimlp::compute_r(s_mlp, s_nimlp, t_mlp, t_nimlp);
        *out(r_out)? = r.value;
        *out(negative_out)? = r.negative;
        Ok(())
    })
}

/// Mark the points (`t` higher is better, `s` lower is better) that no
/// other point dominates.
#[no_mangle]
pub unsafe extern "C" fn tm_pareto_front(t: *const f64, s: *const f64, n: usize, on_front: *mut bool) -> TmStatus {
    guard(|| {
        let (t, s) = (slice(t, n)?, slice(s, n)?);
        let pts: Vec<TradeoffPoint> =
            t.iter().zip(s).map(|(&t, &s)| TradeoffPoint { sigma: 0.0, lambda: 0.0, t, s }).collect();
        slice_mut(on_front, n)?.copy_from_slice(&eval::pareto_mask(&pts));
        Ok(())
    })
}

/// Opaque dataset handle.
pub struct TmDataset {
    inner: Dataset,
}

/// Opaque fitted-model handle.
pub struct TmModel {
    inner: Artifact,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TmGenConfig {
    pub n_users: usize,
    /// Days per user, used when `total_days` is 0.
    pub n_days_per_user: usize,
    pub total_days: usize,
    pub vocab_size: usize,
    pub n_apps: usize,
    pub identity_strength: f64,
    pub mood_strength: f64,
    pub seed: u64,
}

/// Default generator settings.
#[no_mangle]
pub unsafe extern "C" fn tm_gen_config_default(config: *mut TmGenConfig) -> TmStatus {
    guard(|| {
        let d = GenConfig::default();
        *out(config)? = TmGenConfig {
            n_users: d.n_users,
            n_days_per_user: d.n_days_per_user,
            total_days: d.total_days.unwrap_or(0),
            vocab_size: d.vocab_size,
            n_apps: d.n_apps,
            identity_strength: d.identity_strength,
            mood_strength: d.mood_strength,
            seed: d.seed,
        };
        Ok(())
    })
}

fn put_dataset(ds: Dataset, dataset: *mut *mut TmDataset) -> Result<(), Fail> {
    if dataset.is_null() {
        return Err(fail(TmStatus::NullPointer, "null output pointer"));
    }
    unsafe { *dataset = Box::into_raw(Box::new(TmDataset { inner: ds })) };
    Ok(())
}

/// Generate a synthetic featurized dataset.
#[no_mangle]
pub unsafe extern "C" fn tm_generate(config: *const TmGenConfig, dataset: *mut *mut TmDataset) -> TmStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null config"))?;
        let cfg = GenConfig {
            n_users: c.n_users,
            n_days_per_user: c.n_days_per_user,
            total_days: (c.total_days > 0).then_some(c.total_days),
            vocab_size: c.vocab_size,
            n_apps: c.n_apps,
            identity_strength: c.identity_strength,
            mood_strength: c.mood_strength,
            seed: c.seed,
            ..GenConfig::default()
        };
        let (_, ds) = synthgen::generate(&cfg)?;
        put_dataset(ds, dataset)
    })
}

/// Read a dataset file written by the `featurize` stage.
#[no_mangle]
pub unsafe extern "C" fn tm_dataset_load(path: *const c_char, dataset: *mut *mut TmDataset) -> TmStatus {
    guard(|| {
        let ds = datamodel::read_dataset(&PathBuf::from(text(path)?))?;
        put_dataset(ds, dataset)
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_dataset_save(dataset: *const TmDataset, path: *const c_char) -> TmStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null dataset"))?;
        datamodel::write_dataset(&ds.inner, &PathBuf::from(text(path)?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_dataset_free(dataset: *mut TmDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tm_dataset_len(dataset: *const TmDataset, len_out: *mut usize) -> TmStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null dataset"))?;
        *out(len_out)? = ds.inner.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_dataset_n_users(dataset: *const TmDataset, n_out: *mut usize) -> TmStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null dataset"))?;
        *out(n_out)? = ds.inner.n_users();
        Ok(())
    })
}

/// Number of feature columns for a modality code such as `"tka"`.
#[no_mangle]
pub unsafe extern "C" fn tm_dataset_input_dim(
    dataset: *const TmDataset,
    modalities: *const c_char,
    dim_out: *mut usize,
) -> TmStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null dataset"))?;
        let m: Modalities = text(modalities)?.parse()?;
        *out(dim_out)? = ds.inner.config.input_dim(m);
        Ok(())
    })
}

/// Row-major feature matrix; `capacity` must be at least rows times columns.
#[no_mangle]
pub unsafe extern "C" fn tm_dataset_features(
    dataset: *const TmDataset,
    modalities: *const c_char,
    buf: *mut f64,
    capacity: usize,
) -> TmStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null dataset"))?;
        let m: Modalities = text(modalities)?.parse()?;
        let x = ds.inner.matrix(m);
        if x.len() > capacity {
            return Err(fail(TmStatus::BufferTooSmall, format!("need {} values, capacity {capacity}", x.len())));
        }
        let dst = slice_mut(buf, x.len())?;
        for (d, v) in dst.iter_mut().zip(x.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// Mood classes (0, 1, 2) and user indices per row.
#[no_mangle]
pub unsafe extern "C" fn tm_dataset_labels(
    dataset: *const TmDataset,
    moods: *mut u32,
    users: *mut u32,
    capacity: usize,
) -> TmStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null dataset"))?;
        let n = ds.inner.len();
        if n > capacity {
            return Err(fail(TmStatus::BufferTooSmall, format!("need {n} values, capacity {capacity}")));
        }
        let (m, u) = (slice_mut(moods, n)?, slice_mut(users, n)?);
        for (i, s) in ds.inner.samples.iter().enumerate() {
            m[i] = s.y.index() as u32;
            u[i] = s.user as u32;
        }
        Ok(())
    })
}

/// Load a model artifact written by `train` or `nimlp`.
#[no_mangle]
pub unsafe extern "C" fn tm_model_load(path: *const c_char, model: *mut *mut TmModel) -> TmStatus {
    guard(|| {
        let art = Artifact::load(&PathBuf::from(text(path)?))?;
        if model.is_null() {
            return Err(fail(TmStatus::NullPointer, "null output pointer"));
        }
        *model = Box::into_raw(Box::new(TmModel { inner: art }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_model_free(model: *mut TmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tm_model_input_dim(model: *const TmModel, dim_out: *mut usize) -> TmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null model"))?;
        *out(dim_out)? = m.inner.input_dim;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_model_n_classes(model: *const TmModel, n_out: *mut usize) -> TmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null model"))?;
        *out(n_out)? = m.inner.n_classes;
        Ok(())
    })
}

/// Predict classes for `n_rows` row-major feature rows of width `n_cols`.
#[no_mangle]
pub unsafe extern "C" fn tm_model_predict(
    model: *const TmModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    classes_out: *mut u32,
) -> TmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(TmStatus::NullPointer, "null model"))?;
        let len = n_rows.checked_mul(n_cols).ok_or_else(|| fail(TmStatus::InvalidArgument, "matrix too large"))?;
        let data = slice(x, len)?;
        let view = ArrayView2::from_shape((n_rows, n_cols), data).map_err(|e| fail(TmStatus::InvalidArgument, e.to_string()))?;
        let pred = m.inner.predict(view)?;
        for (o, p) in slice_mut(classes_out, n_rows)?.iter_mut().zip(pred) {
            *o = p as u32;
        }
        Ok(())
    })
}
