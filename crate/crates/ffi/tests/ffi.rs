use std::ffi::CStr;
use std::ptr;

use dunkl_lab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { dl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(s.len(), n.min(255));
    s
}

fn rank_one(k: f64) -> *mut DlContext {
    let mut ctx = ptr::null_mut();
    let st = unsafe { dl_context_new_product(&k, 1, &mut ctx) };
    assert_eq!(st, DlStatus::Ok);
    assert!(!ctx.is_null());
    ctx
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(dl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn context_info_for_product_system() {
    let k = [0.5, 0.5];
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { dl_context_new_product(k.as_ptr(), 2, &mut ctx) }, DlStatus::Ok);
    let (mut dim, mut hom, mut order, mut ck) = (0usize, 0.0, 0usize, 0.0);
    let st = unsafe { dl_context_info(ctx, &mut dim, &mut hom, &mut order, &mut ck) };
    assert_eq!(st, DlStatus::Ok);
    assert_eq!(dim, 2);
    assert_eq!(order, 4);
    assert!((hom - 4.0).abs() < 1e-14);
    assert!(ck > 0.0);
    unsafe { dl_context_free(ctx) };
}

#[test]
fn heat_kernel_matches_closed_form() {
    let ctx = rank_one(0.0);
    let dir = [1.0];
    let t = 0.7;
    let mut kernel = ptr::null_mut();
    let st = unsafe { dl_kernel_new(ctx, dir.as_ptr(), 1, 1, 0.0, t, 0, &mut kernel) };
    assert_eq!(st, DlStatus::Ok, "{}", last_error());
    for x in [0.0, 0.4, 1.3, -2.5] {
        let (mut v, mut e) = (0.0, 0.0);
        assert_eq!(unsafe { dl_kernel_q(kernel, &x, 1, &mut v, &mut e) }, DlStatus::Ok);
        let exact = (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
        assert!((v - exact).abs() < 1e-8, "x={x}: {v} vs {exact}");
        assert!(e >= 0.0);
        let (mut v2, mut e2) = (0.0, 0.0);
        let zero = 0.0;
        assert_eq!(unsafe { dl_kernel_two_point(kernel, &x, &zero, 1, &mut v2, &mut e2) }, DlStatus::Ok);
        assert!((v2 - v).abs() < 1e-12);
    }
    unsafe {
        dl_kernel_free(kernel);
        dl_context_free(ctx);
    }
}

#[test]
fn dunkl_kernel_value_at_one() {
    let ctx = rank_one(1.0);
    let (mut re, mut im) = (0.0, 0.0);
    let (xi, x) = (1.0, 1.0);
    assert_eq!(unsafe { dl_dunkl_kernel_imag(ctx, &xi, &x, 1, &mut re, &mut im) }, DlStatus::Ok);
    assert!(re * re + im * im <= 1.0 + 1e-12);
    unsafe { dl_context_free(ctx) };
}

#[test]
fn null_pointers_are_reported() {
    let mut ctx = ptr::null_mut();
    let st = unsafe { dl_context_new_product(ptr::null(), 1, &mut ctx) };
    assert_eq!(st, DlStatus::NullPointer);
    assert!(last_error().contains("k is null"));
    let (mut v, mut e) = (0.0, 0.0);
    let x = 0.0;
    let st = unsafe { dl_kernel_q(ptr::null(), &x, 1, &mut v, &mut e) };
    assert_eq!(st, DlStatus::NullPointer);
    unsafe {
        dl_context_free(ptr::null_mut());
        dl_kernel_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let k = -1.0;
    let mut ctx = ptr::null_mut();
    let st = unsafe { dl_context_new_product(&k, 1, &mut ctx) };
    assert_eq!(st, DlStatus::InvalidSpec);
    assert!(!last_error().is_empty());
    assert!(ctx.is_null());

    let ctx = rank_one(0.0);
    let dir = [1.0];
    let mut kernel = ptr::null_mut();
    // ε above the smallest symbol eigenvalue
    let st = unsafe { dl_kernel_new(ctx, dir.as_ptr(), 1, 1, 5.0, 1.0, 0, &mut kernel) };
    assert_ne!(st, DlStatus::Ok);
    assert!(last_error().contains("symbol positivity"), "{}", last_error());

    let st = unsafe { dl_kernel_new(ctx, dir.as_ptr(), 1, 1, 0.0, 1.0, 0, &mut kernel) };
    assert_eq!(st, DlStatus::Ok);
    let p = [0.0, 0.0];
    let (mut v, mut e) = (0.0, 0.0);
    let st = unsafe { dl_kernel_q(kernel, p.as_ptr(), 2, &mut v, &mut e) };
    assert_eq!(st, DlStatus::InvalidArgument);
    assert!(last_error().contains("dimension"));
    unsafe {
        dl_kernel_free(kernel);
        dl_context_free(ctx);
    }
}

#[test]
fn short_error_buffer_truncates() {
    let k = -1.0;
    let mut ctx = ptr::null_mut();
    unsafe { dl_context_new_product(&k, 1, &mut ctx) };
    let mut buf = [0 as std::ffi::c_char; 4];
    let n = unsafe { dl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { dl_last_error_message(ptr::null_mut(), 0) }, n);
}
