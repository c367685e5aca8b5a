use std::ffi::{CStr, CString};
use std::ptr;

use pdmplab_ffi::*;

fn last_error() -> String {
    let p = pdmplab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(pdmplab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn rate_matrix_round_trip() {
    let rows = [-1.0, 1.0, 2.0, -2.0];
    let mut q = ptr::null_mut();
    unsafe {
        assert_eq!(pdmplab_rate_matrix_new(rows.as_ptr(), 2, &mut q), PdmplabStatus::Ok);
        assert!(pdmplab_last_error().is_null());
        let mut n = 0;
        assert_eq!(pdmplab_rate_matrix_n_states(q, &mut n), PdmplabStatus::Ok);
        assert_eq!(n, 2);
        let mut nu = [0.0; 2];
        assert_eq!(pdmplab_stationary_distribution(q, nu.as_mut_ptr(), 2), PdmplabStatus::Ok);
        assert!((nu[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(pdmplab_stationary_distribution(q, nu.as_mut_ptr(), 3), PdmplabStatus::InvalidArgument);
        pdmplab_rate_matrix_free(q);
    }
}

#[test]
fn symmetric_growth_rate_and_feynman_kac() {
    let rows = [-1.0, 1.0, 1.0, -1.0];
    let a = [1.0, -1.0];
    let mu0 = [0.5, 0.5];
    let mut q = ptr::null_mut();
    unsafe {
        assert_eq!(pdmplab_rate_matrix_new(rows.as_ptr(), 2, &mut q), PdmplabStatus::Ok);
        let mut l = f64::NAN;
        assert_eq!(pdmplab_moment_growth_rate(q, a.as_ptr(), 2, 2.0, &mut l), PdmplabStatus::Ok);
        assert!((l - (-1.0 + 5f64.sqrt())).abs() < 1e-10);
        let mut fk = f64::NAN;
        assert_eq!(pdmplab_moment_feynman_kac(q, a.as_ptr(), mu0.as_ptr(), 2, 0.0, 3.0, &mut fk), PdmplabStatus::Ok);
        assert!((fk - 1.0).abs() < 1e-12);
        assert_eq!(pdmplab_moment_growth_rate(q, a.as_ptr(), 2, -1.0, &mut l), PdmplabStatus::InvalidArgument);
        assert!(last_error().contains("moment order"));
        pdmplab_rate_matrix_free(q);
    }
}

#[test]
fn invalid_generator_sets_error() {
    let rows = [-1.0, 2.0, 1.0, -1.0];
    let mut q = ptr::null_mut();
    let st = unsafe { pdmplab_rate_matrix_new(rows.as_ptr(), 2, &mut q) };
    assert_ne!(st, PdmplabStatus::Ok);
    assert!(q.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(pdmplab_rate_matrix_new(ptr::null(), 2, ptr::null_mut()), PdmplabStatus::NullPointer);
        assert_eq!(pdmplab_gene_mrna_mean(ptr::null(), 0.0, ptr::null_mut()), PdmplabStatus::NullPointer);
        assert_eq!(pdmplab_trajectory_shape(ptr::null(), ptr::null_mut(), ptr::null_mut()), PdmplabStatus::NullPointer);
        pdmplab_rate_matrix_free(ptr::null_mut());
        pdmplab_gene_free(ptr::null_mut());
        pdmplab_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn pi_star_two_state() {
    let pi = [0.5, 0.5];
    let alpha = [0.5, 1.0];
    let mut out = [0.0; 2];
    assert_eq!(unsafe { pdmplab_pi_star(pi.as_ptr(), alpha.as_ptr(), 2, out.as_mut_ptr()) }, PdmplabStatus::Ok);
    assert!((out[0] - 1.0 / 3.0).abs() < 1e-15 && (out[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn gene_handle() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(pdmplab_gene_new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0, &mut g), PdmplabStatus::Ok);
        let mut x0 = 0.0;
        assert_eq!(pdmplab_gene_mrna_mean(g, 0.0, &mut x0), PdmplabStatus::Ok);
        let mut m = [0.0; 5];
        assert_eq!(pdmplab_gene_moments(g, 0.0, m.as_mut_ptr()), PdmplabStatus::Ok);
        assert!((m[0] - x0).abs() < 1e-9 && (m[2] - x0).abs() < 1e-9);
        assert_eq!(pdmplab_gene_moments(g, 1.0, m.as_mut_ptr()), PdmplabStatus::InvalidArgument);
        let (mut mu, mut cv2) = (0.0, 0.0);
        assert_eq!(pdmplab_gene_global_noise(g, 100, &mut mu, &mut cv2), PdmplabStatus::Ok);
        assert!(mu > 0.0 && cv2 > 0.0);
        pdmplab_gene_free(g);

        let mut bad = ptr::null_mut();
        assert_eq!(pdmplab_gene_new(2.0, 1.0, 5.0, 1.5, 1.0, 1.0, &mut bad), PdmplabStatus::Config);
        assert!(last_error().contains("tauR < tauD"));
        assert!(bad.is_null());
    }
}

#[test]
fn lyapunov_is_deterministic() {
    let (mut a, mut b) = (PdmplabLyapunov::default(), PdmplabLyapunov::default());
    unsafe {
        assert_eq!(pdmplab_planar_lyapunov(0.01, 200.0, 4, 9, &mut a), PdmplabStatus::Ok);
        assert_eq!(pdmplab_planar_lyapunov(0.01, 200.0, 4, 9, &mut b), PdmplabStatus::Ok);
        assert_eq!(pdmplab_planar_lyapunov(0.01, 200.0, 1, 9, &mut b), PdmplabStatus::InvalidArgument);
    }
    assert_eq!(a.chi.to_bits(), {
        let mut c = PdmplabLyapunov::default();
        unsafe { pdmplab_planar_lyapunov(0.01, 200.0, 4, 9, &mut c) };
        c.chi.to_bits()
    });
    assert!(a.ci_lo <= a.chi && a.chi <= a.ci_hi);
    assert!(a.chi < 0.0);
}

#[test]
fn trajectory_copy() {
    let x0 = [1.0, 0.0];
    let mut tr = ptr::null_mut();
    unsafe {
        assert_eq!(pdmplab_planar_trajectory(1.0, x0.as_ptr(), 0, 5.0, 0.5, 3, &mut tr), PdmplabStatus::Ok);
        let (mut len, mut dim) = (0, 0);
        assert_eq!(pdmplab_trajectory_shape(tr, &mut len, &mut dim), PdmplabStatus::Ok);
        assert_eq!(dim, 2);
        let mut times = vec![0.0; len];
        let mut states = vec![0.0; len * dim];
        let mut env = vec![0usize; len];
        assert_eq!(
            pdmplab_trajectory_copy(tr, times.as_mut_ptr(), states.as_mut_ptr(), env.as_mut_ptr(), len),
            PdmplabStatus::Ok
        );
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 5.0);
        assert_eq!(&states[..2], &x0);
        assert_eq!(env[0], 0);
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            pdmplab_trajectory_copy(tr, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), len + 1),
            PdmplabStatus::InvalidArgument
        );
        pdmplab_trajectory_free(tr);
        assert_eq!(
            pdmplab_planar_trajectory(1.0, x0.as_ptr(), 2, 5.0, 0.5, 3, &mut tr),
            PdmplabStatus::InvalidArgument
        );
    }
}

#[test]
fn run_scenario_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("g.toml");
    std::fs::write(
        &cfg,
        "[model]\nlambda1 = 2.0\nsigma1 = 20.0\nlambda2 = 200.0\ntauR = 0.4\ntauD = 1.0\nV0 = 1.0\nn_phases = 4\nn_cycles = 50\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let c = |s: &str| CString::new(s).unwrap();
    let (sc, cp, od) = (c("gene"), c(cfg.to_str().unwrap()), c(out.to_str().unwrap()));
    unsafe {
        assert_eq!(pdmplab_run_scenario(sc.as_ptr(), cp.as_ptr(), 1, od.as_ptr()), PdmplabStatus::Ok);
        assert!(out.join("manifest.json").exists());
        let bogus = c("nope");
        assert_eq!(pdmplab_run_scenario(bogus.as_ptr(), cp.as_ptr(), 1, od.as_ptr()), PdmplabStatus::InvalidArgument);
        let planar = c("planar");
        assert_eq!(pdmplab_run_scenario(planar.as_ptr(), cp.as_ptr(), 1, od.as_ptr()), PdmplabStatus::Config);
    }
}

#[test]
fn errors_are_thread_local() {
    let mut q = ptr::null_mut();
    unsafe { pdmplab_rate_matrix_new(ptr::null(), 2, &mut q) };
    assert!(!pdmplab_last_error().is_null());
    std::thread::spawn(|| assert!(pdmplab_last_error().is_null())).join().unwrap();
}
