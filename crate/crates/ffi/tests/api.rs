use std::ffi::{CStr, CString};
use std::ptr;

use kdv_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0i8; 512];
    unsafe { kdv_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr().cast()) }.to_string_lossy().into_owned()
}

fn new_solver(kind: KdvAdvection, params: &[f64], n: usize, m: usize) -> (KdvStatus, *mut KdvSolver) {
    let mut h = ptr::null_mut();
    let s = unsafe { kdv_solver_new(-6.0, 6.0, n, m, 1.0, kind, params.as_ptr(), params.len(), &mut h) };
    (s, h)
}

#[test]
fn lifecycle_matches_core_solver() {
    let (s, h) = new_solver(KdvAdvection::Constant, &[6.0], 32, 64);
    assert_eq!(s, KdvStatus::Ok);
    assert_eq!(unsafe { kdv_solver_advance(h, 1) }, KdvStatus::NotInitialized);
    assert_eq!(unsafe { kdv_solver_initialize_gaussian(h, 0.0, 1.0) }, KdvStatus::Ok);

    let xs = [-1.0, 0.0, 0.5];
    let mut vals = [0.0; 3];
    assert_eq!(unsafe { kdv_solver_evaluate(h, xs.as_ptr(), 3, 0, vals.as_mut_ptr()) }, KdvStatus::Ok);
    for (x, v) in xs.iter().zip(vals) {
        assert!((v - (-x * x).exp()).abs() < 1e-3, "{x}: {v}");
    }

    assert_eq!(unsafe { kdv_solver_advance(h, 10) }, KdvStatus::Ok);
    let (mut step, mut t) = (0usize, 0.0);
    assert_eq!(unsafe { kdv_solver_position(h, &mut step, &mut t) }, KdvStatus::Ok);
    assert_eq!(step, 10);
    assert!((t - 10.0 / 64.0).abs() < 1e-15);

    // Same run through the core API.
    use kdv_core::stepper::{AdvectionField, Discretization, Solver};
    let solver = Solver::new(
        Discretization::new(-6.0, 6.0, 32, 64, 1.0).unwrap(),
        AdvectionField::constant(6.0, -6.0, 6.0),
    )
    .unwrap();
    let mut state = solver.initialize(&|x| (-x * x).exp()).unwrap();
    for _ in 0..10 {
        solver.step(&mut state).unwrap();
    }
    let want = solver.reconstruct(&state, &xs, 1);
    assert_eq!(unsafe { kdv_solver_evaluate(h, xs.as_ptr(), 3, 1, vals.as_mut_ptr()) }, KdvStatus::Ok);
    assert_eq!(vals.to_vec(), want);

    let mut traces = [0.0; 3];
    assert_eq!(unsafe { kdv_solver_traces(h, traces.as_mut_ptr()) }, KdvStatus::Ok);
    assert_eq!(traces, [state.u_a[10], state.ux_a[10], state.u_b[10]]);

    assert_eq!(unsafe { kdv_solver_advance(h, 1000) }, KdvStatus::Ok);
    assert_eq!(unsafe { kdv_solver_position(h, &mut step, ptr::null_mut()) }, KdvStatus::Ok);
    assert_eq!(step, 64);
    assert_eq!(unsafe { kdv_solver_advance(h, 1) }, KdvStatus::Finished);

    let mut ratio = -1.0;
    assert_eq!(unsafe { kdv_solver_stability_ratio(h, &mut ratio) }, KdvStatus::Ok);
    assert_eq!(ratio, 0.0);
    unsafe { kdv_solver_free(h) };
}

#[test]
fn argument_errors() {
    let (s, _) = new_solver(KdvAdvection::Constant, &[1.0, 2.0], 32, 64);
    assert_eq!(s, KdvStatus::InvalidArgument);
    assert!(last_error().contains("one parameter"));
    let (s, _) = new_solver(KdvAdvection::Gauss3, &[1.0], 32, 64);
    assert_eq!(s, KdvStatus::InvalidArgument);
    let (s, _) = new_solver(KdvAdvection::Polynomial, &[], 32, 64);
    assert_eq!(s, KdvStatus::InvalidArgument);
    let (s, _) = new_solver(KdvAdvection::Constant, &[1.0], 4, 64);
    assert_eq!(s, KdvStatus::InvalidArgument);
    assert!(last_error().contains("N must be at least 8"));

    let s = unsafe { kdv_solver_new(-6.0, 6.0, 32, 8, 1.0, KdvAdvection::Constant, [1.0].as_ptr(), 1, ptr::null_mut()) };
    assert_eq!(s, KdvStatus::NullPointer);
    assert_eq!(unsafe { kdv_solver_advance(ptr::null_mut(), 1) }, KdvStatus::NullPointer);

    let (s, h) = new_solver(KdvAdvection::Polynomial, &[3.0, 1.0, 0.0, -1.0 / 54.0], 24, 16);
    assert_eq!(s, KdvStatus::Ok);
    assert_eq!(unsafe { kdv_solver_initialize_gaussian(h, -5.0, 1.0) }, KdvStatus::SupportViolation);
    assert_eq!(unsafe { kdv_solver_initialize_gaussian(h, 0.0, -1.0) }, KdvStatus::InvalidArgument);
    assert_eq!(unsafe { kdv_solver_initialize_gaussian(h, 0.0, 1.0) }, KdvStatus::Ok);
    let xs = [7.0];
    let mut v = [0.0];
    assert_eq!(unsafe { kdv_solver_evaluate(h, xs.as_ptr(), 1, 0, v.as_mut_ptr()) }, KdvStatus::InvalidArgument);
    assert_eq!(unsafe { kdv_solver_evaluate(h, xs.as_ptr(), 1, 4, v.as_mut_ptr()) }, KdvStatus::InvalidArgument);
    assert_eq!(unsafe { kdv_solver_evaluate(h, ptr::null(), 1, 0, v.as_mut_ptr()) }, KdvStatus::NullPointer);
    unsafe { kdv_solver_free(h) };
    unsafe { kdv_solver_free(ptr::null_mut()) };
}

#[test]
fn config_loading() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfg");
    std::fs::write(
        &path,
        "a=-6\nb=6\nT=1\nN=24\nM=16\ng.kind=gauss3\nic.kind=gaussian\nic.params=0, 1\n",
    )
    .unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { kdv_solver_from_config(c.as_ptr(), &mut h) }, KdvStatus::Ok);
    assert_eq!(unsafe { kdv_solver_advance(h, 16) }, KdvStatus::Ok);
    unsafe { kdv_solver_free(h) };

    std::fs::write(&path, "a=-6\nb=6\nT=1\nN=x\n").unwrap();
    assert_eq!(unsafe { kdv_solver_from_config(c.as_ptr(), &mut h) }, KdvStatus::ConfigError);
    assert!(last_error().contains("line 4"), "{}", last_error());
    let missing = CString::new("/nonexistent/c.cfg").unwrap();
    assert_eq!(unsafe { kdv_solver_from_config(missing.as_ptr(), &mut h) }, KdvStatus::IoError);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(kdv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
