use pdmplab::gene::*;
use pdmplab::rng::RngStream;
use pdmplab::stats::{chi_square_gof, z_against, MeanEstimate};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{Discrete, Poisson as PoissonPmf};

fn arb_params() -> impl Strategy<Value = GeneParams> {
    (0.1f64..20.0, 0.1f64..10.0, 0.1f64..50.0, 0.0f64..0.95, 0.2f64..3.0, 0.5f64..2.0)
        .prop_map(|(l1, s1, l2, r, td, v0)| GeneParams::new(l1, s1, l2, r * td, td, v0).unwrap())
}

fn rk4_moments(p: &GeneParams, m0: &MomentVector, dt: f64, doubled: bool, steps: usize) -> MomentVector {
    let k = if doubled { 2.0 * p.lambda1 } else { p.lambda1 };
    let (g, l2) = (p.sigma1, p.lambda2);
    let f = |y: [f64; 5]| {
        let [em, _ep, vm, _vp, c] = y;
        [k - g * em, l2 * em, k + g * em - 2.0 * g * vm, l2 * em + 2.0 * l2 * c, l2 * vm - g * c]
    };
    let add = |a: [f64; 5], b: [f64; 5], h: f64| {
        let mut o = a;
        for i in 0..5 {
            o[i] += h * b[i];
        }
        o
    };
    let h = dt / steps as f64;
    let mut y = m0.to_array();
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(add(y, k1, h / 2.0));
        let k3 = f(add(y, k2, h / 2.0));
        let k4 = f(add(y, k3, h));
        for i in 0..5 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    MomentVector::from_array(y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn poisson_parameter_is_cycle_map_fixed_point(p in arb_params()) {
        let x0 = cycle_map_fixed_point(&p);
        for i in 0..50 {
            let s = p.tau_d * i as f64 / 50.0;
            let a = mrna_poisson_parameter(&p, s).unwrap();
            let b = mean_profile(&p, x0, s);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "s = {}: {} vs {}", s, a, b);
        }
    }

    #[test]
    fn division_identity(p in arb_params()) {
        let x0 = mrna_poisson_parameter(&p, 0.0).unwrap();
        prop_assert!((x0 - 0.5 * mrna_mean_before_division(&p)).abs() <= 1e-12 * x0.max(1.0));
    }

    #[test]
    fn propagated_moments_are_admissible(p in arb_params(), s in 0.0f64..1.0) {
        let m0 = equilibrium_moments(&p).unwrap();
        prop_assert!(m0.is_admissible(1e-9));
        let m = moments_at_phase(&p, &m0, s * p.tau_d);
        prop_assert!(m.is_admissible(1e-9), "{:?}", m);
        prop_assert!(division_map(&m).is_admissible(1e-9));
    }

    #[test]
    fn equilibrium_unique(p in arb_params()) {
        let eq = equilibrium_moments(&p).unwrap();
        let n = (60.0 / (p.sigma1 * p.tau_d).min(1.0)).ceil() as usize + 60;
        let scale = eq.to_array().iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for start in [MomentVector::default(), MomentVector { em: 1e3, ep: 1e4, var_m: 50.0, var_p: 1e5, cov_mp: 10.0 }] {
            let it = iterate_cycle_moments(&p, &start, n);
            prop_assert!(it.max_abs_diff(&eq) <= 1e-8 * scale, "{:?} vs {:?}", it, eq);
        }
    }

    #[test]
    fn engine_matches_rk4(p in arb_params(), doubled in any::<bool>()) {
        let m0 = MomentVector { em: 3.0, ep: 40.0, var_m: 2.0, var_p: 60.0, cov_mp: 1.0 };
        let dt = 0.5 * p.tau_d;
        let a = moment_ode_propagate(&p, &m0, dt, doubled);
        let b = rk4_moments(&p, &m0, dt, doubled, 4000);
        let scale = b.to_array().iter().fold(1.0f64, |a, b| a.max(b.abs()));
        prop_assert!(a.max_abs_diff(&b) <= 1e-9 * scale, "{:?} vs {:?}", a, b);
    }
}

#[test]
fn protein_mean_matches_quadrature() {
    let p = GeneParams::new(2.0, 1.5, 7.0, 0.6, 1.0, 1.0).unwrap();
    let m0 = equilibrium_moments(&p).unwrap();
    let n = 2000;
    for j in 1..=10 {
        let s = 0.059 * j as f64;
        let h = s / n as f64;
        let x = |t: f64| mrna_poisson_parameter(&p, t).unwrap();
        let mut acc = x(0.0) + x(s);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * x(i as f64 * h);
        }
        let want = m0.ep + p.lambda2 * acc * h / 3.0;
        assert!((protein_mean(&p, &m0, s).unwrap() - want).abs() < 1e-9, "s = {s}");
    }
}

#[test]
fn stationary_mrna_gives_linear_protein_growth() {
    let p = GeneParams::new(3.0, 2.0, 4.0, 0.5, 1.0, 1.0).unwrap();
    let m0 = MomentVector { em: 1.5, var_m: 1.5, ..Default::default() };
    for s in [0.1, 0.3, 0.45] {
        assert!((protein_mean(&p, &m0, s).unwrap() - 4.0 * 1.5 * s).abs() < 1e-12);
    }
}

#[test]
fn printed_variance_corrected_matches_engine() {
    for p in [
        GeneParams::new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0).unwrap(),
        GeneParams::new(0.3, 12.0, 40.0, 0.7, 1.0, 2.0).unwrap(),
        GeneParams::new(8.0, 0.2, 1.0, 1.5, 2.0, 1.0).unwrap(),
    ] {
        let m0 = equilibrium_moments(&p).unwrap();
        for i in 0..10 {
            let s = p.tau_r * i as f64 / 10.0;
            let engine = moments_at_phase(&p, &m0, s).var_p;
            let closed = protein_variance_closed_form(&p, &m0, s).unwrap();
            assert!((engine - closed).abs() <= 1e-8 * engine.max(1.0), "{p:?} s = {s}: {engine} vs {closed}");
        }
    }
}

#[test]
fn stationary_input_fano_above_one() {
    let p = GeneParams::new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0).unwrap();
    let m0 = MomentVector { em: 2.0, var_m: 2.0, ep: 0.0, var_p: 0.0, cov_mp: 0.0 };
    let m = moment_ode_propagate(&p, &m0, 30.0, false);
    assert!((m.cov_mp - p.lambda2 * m.var_m / p.sigma1).abs() < 1e-6);
    assert!(m.var_p / m.ep > 1.0);
}

#[test]
fn division_map_against_binomial_thinning() {
    let mut rng = RngStream::new(99, 0).rng();
    let pm = Poisson::new(5.0).unwrap();
    let pq = Poisson::new(3.0).unwrap();
    let n = 1_000_000;
    let (mut ms, mut ps) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let thin = |k: u64, rng: &mut rand_chacha::ChaCha8Rng| (0..k).filter(|_| rng.random::<bool>()).count() as u64;
    for _ in 0..n {
        let m = pm.sample(&mut rng) as u64;
        let p = 2 * m + pq.sample(&mut rng) as u64;
        ms.push(thin(m, &mut rng));
        ps.push(thin(p, &mut rng));
    }
    let pre = MomentVector { em: 5.0, ep: 13.0, var_m: 5.0, var_p: 23.0, cov_mp: 10.0 };
    let want = division_map(&pre).to_array();
    let samples = LineageSamples { phases: vec![0.0], m: vec![ms], p: vec![ps] };
    for (est, w) in samples.moments(0, 100).components().iter().zip(want) {
        assert!(z_against(est, w).abs() <= 3.0, "{est:?} vs {w}");
    }
}

fn phases(p: &GeneParams) -> Vec<f64> {
    vec![0.0, 0.5 * p.tau_r, 0.5 * (p.tau_r + p.tau_d)]
}

#[test]
fn simulation_matches_moment_engine() {
    let sets = [
        GeneParams::new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0).unwrap(),
        GeneParams::new(5.0, 3.0, 2.0, 0.2, 1.0, 1.0).unwrap(),
        GeneParams::new(1.0, 0.5, 10.0, 0.5, 1.0, 1.0).unwrap(),
        GeneParams::new(10.0, 8.0, 3.0, 0.7, 1.0, 1.0).unwrap(),
        GeneParams::new(0.5, 2.0, 20.0, 0.0, 1.5, 1.0).unwrap(),
    ];
    let stream = RngStream::new(2024, 9);
    for (k, p) in sets.iter().enumerate() {
        let opts = LineageOptions { phase_grid: phases(p), ..Default::default() };
        let s = simulate_cell_lineage(p, 100_000, &opts, &mut stream.replica(k as u64).rng()).unwrap();
        let m0 = equilibrium_moments(p).unwrap();
        for (i, &ph) in opts.phase_grid.iter().enumerate() {
            let want = moments_at_phase(p, &m0, ph).to_array();
            for (est, w) in s.moments(i, 100).components().iter().zip(want) {
                assert!(z_against(est, w).abs() <= 3.0, "set {k} phase {ph}: {est:?} vs {w}");
            }
        }
    }
}

#[test]
fn mrna_is_poisson_at_every_phase() {
    let p = GeneParams::new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0).unwrap();
    let opts = LineageOptions { phase_grid: phases(&p), ..Default::default() };
    let s = simulate_cell_lineage(&p, 50_000, &opts, &mut RngStream::new(5, 1).rng()).unwrap();
    for (i, &ph) in opts.phase_grid.iter().enumerate() {
        let xs: Vec<u64> = s.m[i].iter().step_by(5).copied().collect();
        let lam = mrna_poisson_parameter(&p, ph).unwrap();
        let pmf = PoissonPmf::new(lam).unwrap();
        let top = *xs.iter().max().unwrap() as usize;
        let mut obs = vec![0u64; top + 2];
        for &x in &xs {
            obs[x as usize] += 1;
        }
        let mut probs: Vec<f64> = (0..=top).map(|j| pmf.pmf(j as u64)).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let r = chi_square_gof(&obs, &probs, 5.0).unwrap();
        assert!(r.p_value > 0.01, "phase {ph}: {r:?}");
        let fl: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        let mean = MeanEstimate::from_samples(&fl);
        let fano = mean.sd * mean.sd / mean.mean;
        assert!((fano - 1.0).abs() < 3.0 * (2.0 / xs.len() as f64).sqrt() * (1.0 + 1.0 / lam).sqrt(), "fano {fano}");
    }
}

#[test]
fn simulated_profile_tracks_analytic_profile() {
    let p = GeneParams::new(4.0, 5.0, 20.0, 0.4, 1.0, 2.0).unwrap();
    let an = concentration_profile(&p, 8).unwrap();
    let sim = concentration_stats(&p, 8, 20_000, &LineageOptions::default(), &mut RngStream::new(8, 0).rng()).unwrap();
    for (a, b) in an.rows.iter().zip(&sim.rows) {
        assert_eq!(a.s, b.s);
        assert!((a.mean_conc_p / b.mean_conc_p - 1.0).abs() < 0.02);
        assert!((a.cv_p / b.cv_p - 1.0).abs() < 0.1);
    }
    let mut buf = Vec::new();
    sim.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("s,mean_conc_M,mean_conc_P,cv_M,cv_P\n"));
}

#[test]
fn doubling_translation_halves_poisson_dominated_noise() {
    let base = GeneParams::new(5.0, 20.0, 0.05, 0.4, 1.0, 1.0).unwrap();
    let dbl = GeneParams { lambda2: 0.1, ..base };
    let (mu1, cv1) = global_noise(&base, 400).unwrap();
    let (mu2, cv2) = global_noise(&dbl, 400).unwrap();
    assert!((mu2 / mu1 - 2.0).abs() < 1e-9);
    assert!((cv2 / cv1 - 0.5).abs() < 0.05, "{}", cv2 / cv1);
}

#[test]
fn equal_mean_different_split_different_noise() {
    let a = GeneParams::new(10.0, 20.0, 100.0, 0.4, 1.0, 1.0).unwrap();
    let b = GeneParams { lambda1: 100.0, lambda2: 10.0, ..a };
    let (ma, ca) = global_noise(&a, 400).unwrap();
    let (mb, cb) = global_noise(&b, 400).unwrap();
    assert!((ma / mb - 1.0).abs() < 1e-9);
    assert!(ca > 2.0 * cb, "{ca} vs {cb}");
}

#[test]
fn cv_csv_header() {
    let pts = cv_scan(&default_cv_grid(3)).unwrap();
    let mut buf = Vec::new();
    write_cv_csv(&pts, &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("lambda1,sigma1,lambda2,tauR,tauD,V0,mu_p,cv2\n"));
    assert_eq!(s.lines().count(), 4);
}
