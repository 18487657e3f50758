//! C ABI for dunkl-lab: reflection-group contexts, the Dunkl kernel and the
//! semigroup kernels q_t^{(ε)}.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`DlStatus`]; on failure the message is
//! available from [`dl_last_error_message`] on the same thread. Panics are
//! caught at the boundary and reported as `DL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use dunkl_lab::kernel::product_imag;
use dunkl_lab::semigroup::KernelEvaluator;
use dunkl_lab::{DunklError, KernelSpec, RootSystemSpec, WeightedContext};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSpec = 3,
    Accuracy = 4,
    Capability = 5,
    Panic = 6,
    Other = 7,
}

/// A root system with its reflection group, weight and grids.
pub struct DlContext {
    inner: WeightedContext,
}

/// A prepared semigroup kernel for one (ζ, ℓ, ε, t).
pub struct DlKernel {
    inner: KernelEvaluator,
    dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &DunklError) -> DlStatus {
    match err {
        DunklError::InvalidArgument(_) => DlStatus::InvalidArgument,
        DunklError::InvalidSpec(_) | DunklError::GroupExplosion { .. } => DlStatus::InvalidSpec,
        DunklError::Accuracy { .. } | DunklError::DomainTooSmall { .. } => DlStatus::Accuracy,
        DunklError::Capability(_) => DlStatus::Capability,
        _ => DlStatus::Other,
    }
}

/// Runs `f` behind the panic boundary and records any error message.
fn guard<F>(f: F) -> DlStatus
where
    F: FnOnce() -> Result<(), (DlStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("panic: {msg}"));
            DlStatus::Panic
        }
    }
}

fn lib(err: DunklError) -> (DlStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (DlStatus, String) {
    (DlStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to `n` readable doubles.
unsafe fn doubles<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (DlStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

/// # Safety
/// `out` must be null or writable.
unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (DlStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// ℤ₂^N context with multiplicities `k[0..n]`; `n = 1` is the rank-one case.
///
/// # Safety
/// `k` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_context_new_product(k: *const f64, n: usize, out: *mut *mut DlContext) -> DlStatus {
    guard(|| {
        if n == 0 {
            return Err((DlStatus::InvalidArgument, "need at least one multiplicity".into()));
        }
        let ks = doubles(k, n, "k")?;
        let ctx = WeightedContext::new(RootSystemSpec::product(ks)).map_err(lib)?;
        put(out, Box::into_raw(Box::new(DlContext { inner: ctx })), "out")
    })
}

/// Context from explicit roots: `roots` holds `n_roots × dimension` doubles
/// row-major, `multiplicity` one value per root.
///
/// # Safety
/// Pointers must cover the stated sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_context_new_explicit(
    dimension: usize,
    roots: *const f64,
    n_roots: usize,
    multiplicity: *const f64,
    out: *mut *mut DlContext,
) -> DlStatus {
    guard(|| {
        if dimension == 0 {
            return Err((DlStatus::InvalidArgument, "dimension must be positive".into()));
        }
        let flat = doubles(roots, n_roots * dimension, "roots")?;
        let mult = doubles(multiplicity, n_roots, "multiplicity")?;
        let roots: Vec<Vec<f64>> = flat.chunks(dimension).map(|c| c.to_vec()).collect();
        let spec = RootSystemSpec::try_new(dimension, roots, mult.to_vec()).map_err(lib)?;
        let ctx = WeightedContext::new(spec).map_err(lib)?;
        put(out, Box::into_raw(Box::new(DlContext { inner: ctx })), "out")
    })
}

/// # Safety
/// `ctx` must be null or a handle from `dl_context_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_context_free(ctx: *mut DlContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Dimension N, homogeneous dimension 𝐍, group order and c_k.
///
/// # Safety
/// `ctx` must be a live handle; output pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn dl_context_info(
    ctx: *const DlContext,
    dimension: *mut usize,
    homogeneous_dimension: *mut f64,
    group_order: *mut usize,
    c_k: *mut f64,
) -> DlStatus {
    guard(|| {
        let ctx = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        let c = &ctx.inner;
        if !dimension.is_null() {
            dimension.write(c.dimension());
        }
        if !homogeneous_dimension.is_null() {
            homogeneous_dimension.write(c.homogeneous_dimension());
        }
        if !group_order.is_null() {
            group_order.write(c.group().order());
        }
        if !c_k.is_null() {
            c_k.write(c.c_k());
        }
        Ok(())
    })
}

/// E(iξ, x) for product systems, written to `re` and `im`.
///
/// # Safety
/// `xi` and `x` must point to `dimension` doubles; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn dl_dunkl_kernel_imag(
    ctx: *const DlContext,
    xi: *const f64,
    x: *const f64,
    dimension: usize,
    re: *mut f64,
    im: *mut f64,
) -> DlStatus {
    guard(|| {
        let ctx = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        let ks = ctx
            .inner
            .product_multiplicities()
            .ok_or_else(|| lib(DunklError::Capability("the Dunkl kernel needs a product system".into())))?;
        if dimension != ks.len() {
            return Err((DlStatus::InvalidArgument, "point dimension mismatch".into()));
        }
        let v = product_imag(ks, doubles(xi, dimension, "xi")?, doubles(x, dimension, "x")?);
        put(re, v.re, "re")?;
        put(im, v.im, "im")
    })
}

/// Prepares q_t^{(ε)} for the ζ-set `directions` (`n_directions × N`
/// doubles, row-major). `freq_nodes = 0` keeps the context default.
///
/// # Safety
/// `ctx` must be a live handle; `directions` must cover the stated size;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dl_kernel_new(
    ctx: *const DlContext,
    directions: *const f64,
    n_directions: usize,
    ell: u32,
    eps: f64,
    t: f64,
    freq_nodes: usize,
    out: *mut *mut DlKernel,
) -> DlStatus {
    guard(|| {
        let ctx = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        let dim = ctx.inner.dimension();
        let flat = doubles(directions, n_directions * dim, "directions")?;
        let dirs: Vec<Vec<f64>> = flat.chunks(dim).map(|c| c.to_vec()).collect();
        let spec = KernelSpec::new(dirs, ell, eps, t);
        let nodes = (freq_nodes > 0).then_some(freq_nodes);
        let ev = KernelEvaluator::new(&ctx.inner, &spec, nodes).map_err(lib)?;
        put(out, Box::into_raw(Box::new(DlKernel { inner: ev, dim })), "out")
    })
}

/// # Safety
/// `kernel` must be null or a handle from `dl_kernel_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_kernel_free(kernel: *mut DlKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// q_t(x) with its error estimate.
///
/// # Safety
/// `x` must point to `dimension` doubles; `value`, `error` writable.
#[no_mangle]
pub unsafe extern "C" fn dl_kernel_q(
    kernel: *const DlKernel,
    x: *const f64,
    dimension: usize,
    value: *mut f64,
    error: *mut f64,
) -> DlStatus {
    guard(|| {
        let k = kernel.as_ref().ok_or_else(|| null("kernel"))?;
        if dimension != k.dim {
            return Err((DlStatus::InvalidArgument, "point dimension mismatch".into()));
        }
        let v = k.inner.q(doubles(x, dimension, "x")?).map_err(lib)?;
        put(value, v.value, "value")?;
        put(error, v.error, "error")
    })
}

/// q_t(x, y) with its error estimate.
///
/// # Safety
/// `x` and `y` must point to `dimension` doubles; `value`, `error` writable.
#[no_mangle]
pub unsafe extern "C" fn dl_kernel_two_point(
    kernel: *const DlKernel,
    x: *const f64,
    y: *const f64,
    dimension: usize,
    value: *mut f64,
    error: *mut f64,
) -> DlStatus {
    guard(|| {
        let k = kernel.as_ref().ok_or_else(|| null("kernel"))?;
        if dimension != k.dim {
            return Err((DlStatus::InvalidArgument, "point dimension mismatch".into()));
        }
        let v = k
            .inner
            .two_point(doubles(x, dimension, "x")?, doubles(y, dimension, "y")?)
            .map_err(lib)?;
        put(value, v.value, "value")?;
        put(error, v.error, "error")
    })
}
