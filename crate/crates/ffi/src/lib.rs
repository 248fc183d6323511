//! C ABI over `fddpred`.
//!
//! Datasets and trained networks are opaque handles created by `*_load` or
//! `*_generate` and released with the matching `*_free`. Every fallible call
//! returns an [`FddStatus`]; on failure the message is kept per thread and can
//! be read with [`fdd_last_error`]. Complex arrays are interleaved
//! `(re, im)` doubles in antenna-major order, `2 * antennas * subcarriers`
//! values per CSI matrix.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fddpred::channel::{los_coefficient, CsiMatrix};
use fddpred::dataset::{generate_los_scalar_dataset, CsiDataset, LosScalarConfig};
use fddpred::metrics::{corr_coeff, nmse};
use fddpred::predictor::{NnPredictor, Predictor};
use fddpred::Error;
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FddStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Shape = 5,
    Numerical = 6,
    Panic = 7,
}

/// Opaque CSI dataset.
pub struct FddDataset(CsiDataset);

/// Opaque trained network with its input/output adapter.
pub struct FddModel(NnPredictor);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> FddStatus {
    match err {
        Error::Domain(_) | Error::Config(_) => FddStatus::InvalidArgument,
        Error::Io { .. } => FddStatus::Io,
        Error::Format(_) => FddStatus::Format,
        Error::Shape { .. } => FddStatus::Shape,
        Error::Numerical(_) | Error::Singular { .. } | Error::Diverged { .. } => FddStatus::Numerical,
    }
}

struct Fail(FddStatus, String);

impl From<Error> for Fail {
    fn from(err: Error) -> Self {
        Fail(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FddStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> FddStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "unknown panic".into());
        Err(Fail(FddStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            set_error(String::new());
            FddStatus::Ok
        }
        Err(Fail(status, msg)) => {
            set_error(msg);
            status
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Fail(FddStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn complex_in<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, 2 * len))
}

unsafe fn csi_in(data: *const f64, antennas: usize, subcarriers: usize, what: &str) -> Result<CsiMatrix, Fail> {
    let raw = complex_in(data, antennas * subcarriers, what)?;
    let values = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(CsiMatrix::from_vec(antennas, subcarriers, values)?)
}

unsafe fn csi_out(csi: &CsiMatrix, out: *mut f64) {
    let out = std::slice::from_raw_parts_mut(out, 2 * csi.len());
    for (o, v) in out.chunks_exact_mut(2).zip(csi.as_slice()) {
        o[0] = v.re;
        o[1] = v.im;
    }
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes. An empty
/// message means the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fdd_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fdd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads an FDDCSI01 file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_load(path: *const c_char, out: *mut *mut FddDataset) -> FddStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = CsiDataset::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(FddDataset(ds)));
        Ok(())
    })
}

/// Generates `n` samples of the flat line-of-sight scenario (UE distance
/// uniform in 100..200 m, pathloss exponent `beta`).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_generate_los(
    f_ul: f64,
    f_dl: f64,
    beta: f64,
    n: usize,
    seed: u64,
    out: *mut *mut FddDataset,
) -> FddStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = LosScalarConfig { beta, ..LosScalarConfig::new(f_ul, f_dl) };
        let ds = generate_los_scalar_dataset(&cfg, n, seed)?;
        *out = Box::into_raw(Box::new(FddDataset(ds)));
        Ok(())
    })
}

/// Writes `dataset` as an FDDCSI01 file.
///
/// # Safety
/// `dataset` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_save(dataset: *const FddDataset, path: *const c_char) -> FddStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        ds.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_len(dataset: *const FddDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// Antenna and subcarrier counts of every sample.
///
/// # Safety
/// `dataset` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_dims(
    dataset: *const FddDataset,
    antennas: *mut usize,
    subcarriers: *mut usize,
) -> FddStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if antennas.is_null() || subcarriers.is_null() {
            return Err(null("output"));
        }
        *antennas = ds.0.antennas();
        *subcarriers = ds.0.subcarriers();
        Ok(())
    })
}

/// Copies the uplink and downlink CSI of sample `index`. Either output may be
/// null; each non-null one receives `2 * antennas * subcarriers` doubles.
///
/// # Safety
/// `dataset` must be a live handle; non-null outputs must have room for the
/// full matrix.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_sample(
    dataset: *const FddDataset,
    index: usize,
    h_ul: *mut f64,
    h_dl: *mut f64,
) -> FddStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let sample = ds.0.samples().get(index).ok_or_else(|| {
            Fail(FddStatus::InvalidArgument, format!("index {index} out of range for {} samples", ds.0.len()))
        })?;
        if !h_ul.is_null() {
            csi_out(&sample.h_ul, h_ul);
        }
        if !h_dl.is_null() {
            csi_out(&sample.h_dl, h_dl);
        }
        Ok(())
    })
}

/// Releases a dataset handle. Null is ignored.
///
/// # Safety
/// `dataset` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn fdd_dataset_free(dataset: *mut FddDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Loads an FDDNN001 checkpoint together with its `<path>.json` sidecar.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdd_model_load(path: *const c_char, out: *mut *mut FddModel) -> FddStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = NnPredictor::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(FddModel(model)));
        Ok(())
    })
}

/// Predicts downlink CSI for `count` uplink matrices of the given shape.
/// `h_ul` holds `count * 2 * antennas * subcarriers` doubles, and `h_dl`
/// receives the same amount.
///
/// # Safety
/// `model` must be a live handle; the buffers must have the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn fdd_model_predict(
    model: *const FddModel,
    h_ul: *const f64,
    count: usize,
    antennas: usize,
    subcarriers: usize,
    h_dl: *mut f64,
) -> FddStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if h_dl.is_null() {
            return Err(null("h_dl"));
        }
        let per = 2 * antennas * subcarriers;
        let inputs = (0..count)
            .map(|i| csi_in(h_ul.wrapping_add(i * per), antennas, subcarriers, "h_ul"))
            .collect::<Result<Vec<_>, _>>()?;
        let predicted = model.0.predict_batch(&inputs)?;
        for (i, p) in predicted.iter().enumerate() {
            csi_out(p, h_dl.add(i * per));
        }
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn fdd_model_free(model: *mut FddModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Normalized squared error `|pred - truth|^2 / |truth|^2` over `len`
/// complex values.
///
/// # Safety
/// Both inputs must hold `2 * len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fdd_nmse(pred: *const f64, truth: *const f64, len: usize, out: *mut f64) -> FddStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = nmse(&csi_in(pred, 1, len, "pred")?, &csi_in(truth, 1, len, "truth")?)?;
        Ok(())
    })
}

/// Correlation coefficient `|<pred, truth>| / (|pred| |truth|)` over `len`
/// complex values.
///
/// # Safety
/// Both inputs must hold `2 * len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fdd_corr_coeff(pred: *const f64, truth: *const f64, len: usize, out: *mut f64) -> FddStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = corr_coeff(&csi_in(pred, 1, len, "pred")?, &csi_in(truth, 1, len, "truth")?)?;
        Ok(())
    })
}

/// Free-space line-of-sight coefficient at `distance` metres and carrier
/// `f_c` Hz with pathloss exponent `beta`.
///
/// # Safety
/// `re` and `im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fdd_los_coefficient(
    distance: f64,
    f_c: f64,
    beta: f64,
    re: *mut f64,
    im: *mut f64,
) -> FddStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let h = los_coefficient(distance, f_c, beta)?;
        *re = h.re;
        *im = h.im;
        Ok(())
    })
}
