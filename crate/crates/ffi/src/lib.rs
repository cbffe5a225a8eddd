//! C ABI over the `isvb` library.
//!
//! Every entry point returns an [`IsvbStatus`]; on failure the message is kept
//! per thread and read back with [`isvb_last_error`]. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use isvb::data::Dataset;
use isvb::inference::CredibleRegion;
use isvb::model::{fit, IsvbConfig, IsvbSampler, ModelFile, NoiseMode};
use isvb::rng::seeded;
use isvb::target::GPrior;
use isvb::Error;
use nalgebra::{DMatrix, DVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsvbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericalError = 4,
    Unsupported = 5,
    Panic = 6,
}

pub const ISVB_PRIOR_IMPROPER: u32 = 0;
pub const ISVB_PRIOR_GAUSSIAN: u32 = 1;
pub const ISVB_PRIOR_LAPLACE: u32 = 2;

/// Options for [`isvb_fit`]. Start from [`isvb_fit_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct IsvbFitOptions {
    /// One of the `ISVB_PRIOR_*` constants.
    pub prior: u32,
    /// Scale of the Gaussian or Laplace target prior; ignored for improper.
    pub sigma_n: f64,
    /// Known noise variance; zero or negative estimates it.
    pub noise_var: f64,
    /// Prior inclusion probability; zero or negative uses the default.
    pub inclusion: f64,
    pub use_vb_mean: bool,
    pub seed: u64,
}

/// A fitted model.
pub struct IsvbModel {
    file: ModelFile,
    sampler: IsvbSampler,
}

/// A credible interval or ellipsoid.
pub struct IsvbRegion {
    region: CredibleRegion,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IsvbStatus {
    match e {
        Error::Unsupported(_) => IsvbStatus::Unsupported,
        _ => match e.exit_code() {
            2 => IsvbStatus::InvalidArgument,
            3 => IsvbStatus::DataError,
            _ => IsvbStatus::NumericalError,
        },
    }
}

struct Fail(IsvbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IsvbStatus::NullPointer, format!("{what} is null"))
}

fn bad(msg: impl Into<String>) -> Fail {
    Fail(IsvbStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IsvbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            IsvbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            IsvbStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn isvb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn isvb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn isvb_fit_options_default() -> IsvbFitOptions {
    IsvbFitOptions { prior: ISVB_PRIOR_IMPROPER, sigma_n: 1.0, noise_var: 0.0, inclusion: 0.0, use_vb_mean: false, seed: 0 }
}

/// Fits I-SVB. `x` is `n × p` row-major, `targets` holds `k` distinct 0-based
/// column indices. On success `*out` owns a new model.
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` to `n`, `targets` to `k` and
/// `options` and `out` must be valid for reads and writes respectively.
#[no_mangle]
pub unsafe extern "C" fn isvb_fit(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    targets: *const usize,
    k: usize,
    options: *const IsvbFitOptions,
    out: *mut *mut IsvbModel,
) -> IsvbStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let opts = options.as_ref().ok_or_else(|| null("options"))?;
        let xs = input(x, n.checked_mul(p).ok_or_else(|| bad("n * p overflows"))?, "x")?;
        let ys = input(y, n, "y")?;
        if k == 0 {
            return Err(bad("no targets given"));
        }
        if targets.is_null() {
            return Err(null("targets"));
        }
        let targets = slice::from_raw_parts(targets, k).to_vec();
        let g = match opts.prior {
            ISVB_PRIOR_IMPROPER => GPrior::Improper,
            ISVB_PRIOR_GAUSSIAN => GPrior::Gaussian { sigma_n: opts.sigma_n },
            ISVB_PRIOR_LAPLACE => GPrior::Laplace { sigma_n: opts.sigma_n },
            other => return Err(bad(format!("unknown prior kind {other}"))),
        };
        g.validate()?;
        let cfg = IsvbConfig {
            g,
            inclusion: (opts.inclusion > 0.0).then_some(opts.inclusion),
            use_vb_mean: opts.use_vb_mean,
            noise: if opts.noise_var > 0.0 { NoiseMode::Fixed { sigma2: opts.noise_var } } else { NoiseMode::Estimate },
            ..IsvbConfig::default()
        };
        let d = Dataset::new(DMatrix::from_row_slice(n, p, xs), DVector::from_column_slice(ys))?;
        let model = fit(&d, &targets, &cfg, &mut seeded(opts.seed))?;
        let file = model.to_file();
        *out = Box::into_raw(Box::new(IsvbModel { file, sampler: model.sampler }));
        Ok(())
    })
}

/// Loads a model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_model_from_json(json: *const c_char, out: *mut *mut IsvbModel) -> IsvbStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| bad("json is not UTF-8"))?;
        let file: ModelFile = serde_json::from_str(text).map_err(Error::from)?;
        let sampler = file.clone().into_sampler()?;
        *out = Box::into_raw(Box::new(IsvbModel { file, sampler }));
        Ok(())
    })
}

/// Serializes a model; free the string with [`isvb_string_free`].
///
/// # Safety
/// `model` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_model_to_json(model: *const IsvbModel, out: *mut *mut c_char) -> IsvbStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let text = serde_json::to_string(&m.file).map_err(Error::from)?;
        *out = CString::new(text).map_err(|_| bad("model JSON contains NUL"))?.into_raw();
        Ok(())
    })
}

/// Number of target coordinates.
///
/// # Safety
/// `model` must come from this library; `k` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_model_k(model: *const IsvbModel, k: *mut usize) -> IsvbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *output(k, "k")? = m.sampler.k();
        Ok(())
    })
}

/// Noise variance the model was fitted with.
///
/// # Safety
/// `model` must come from this library; `sigma2` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_model_sigma2(model: *const IsvbModel, sigma2: *mut f64) -> IsvbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *output(sigma2, "sigma2")? = m.sampler.sigma2_hat;
        Ok(())
    })
}

/// Writes `n_samples × k` draws of the targets, row-major, into `out`, which
/// must hold `out_len >= n_samples * k` doubles.
///
/// # Safety
/// `model` must come from this library and `out` point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn isvb_model_sample(
    model: *const IsvbModel,
    n_samples: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> IsvbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if n_samples == 0 {
            return Err(bad("n_samples must be positive"));
        }
        let k = m.sampler.k();
        let need = n_samples.checked_mul(k).ok_or_else(|| bad("n_samples * k overflows"))?;
        if out_len < need {
            return Err(bad(format!("output holds {out_len} values, need {need}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let draws = m.sampler.draw(n_samples, &mut seeded(seed))?;
        let dst = slice::from_raw_parts_mut(out, need);
        for (i, row) in draws.row_iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                dst[i * k + c] = *v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isvb_model_free(model: *mut IsvbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn isvb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Credible region from `n_samples × k` row-major draws: an interval when
/// `k` is 1, an ellipsoid otherwise.
///
/// # Safety
/// `samples` must point to `n_samples * k` doubles and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_region_from_samples(
    samples: *const f64,
    n_samples: usize,
    k: usize,
    level: f64,
    out: *mut *mut IsvbRegion,
) -> IsvbStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let len = n_samples.checked_mul(k).ok_or_else(|| bad("n_samples * k overflows"))?;
        let s = input(samples, len, "samples")?;
        let draws = DMatrix::from_row_slice(n_samples, k, s);
        let region = CredibleRegion::from_samples(&draws, level)?;
        *out = Box::into_raw(Box::new(IsvbRegion { region }));
        Ok(())
    })
}

/// # Safety
/// `region` must come from this library, `point` hold `k` doubles and
/// `inside` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_region_contains(
    region: *const IsvbRegion,
    point: *const f64,
    k: usize,
    inside: *mut bool,
) -> IsvbStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(|| null("region"))?;
        if k != r.region.k() {
            return Err(bad(format!("point has {k} coordinates, region has {}", r.region.k())));
        }
        let v = input(point, k, "point")?;
        *output(inside, "inside")? = r.region.contains(v);
        Ok(())
    })
}

/// Interval length or ellipsoid volume proxy.
///
/// # Safety
/// `region` must come from this library and `size` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn isvb_region_size(region: *const IsvbRegion, size: *mut f64) -> IsvbStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(|| null("region"))?;
        *output(size, "size")? = r.region.size();
        Ok(())
    })
}

/// # Safety
/// `region` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isvb_region_free(region: *mut IsvbRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}
