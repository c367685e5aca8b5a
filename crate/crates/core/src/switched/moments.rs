//! Moments of the switched Malthus model `dX/dt = a(I_t) X`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, perron, PerronPair};
use crate::mc::replicas;
use crate::pdmp::{simulate_ctmc, RateMatrix};
use crate::rng::{sample_index, RngStream};
use crate::stats::MeanEstimate;

#[derive(Debug, Clone)]
pub struct MalthusModel {
    pub q: RateMatrix,
    pub a: Vec<f64>,
    pub x0: f64,
}

impl MalthusModel {
    pub fn new(q: RateMatrix, a: Vec<f64>, x0: f64) -> Result<Self> {
        check_rates(&q, &a)?;
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(Error::Domain(format!("initial density must be positive, got {x0}")));
        }
        Ok(Self { q, a, x0 })
    }

    /// Mean growth rate ν(a) under the stationary environment.
    pub fn mean_rate(&self) -> Result<f64> {
        mean_rate(&self.q, &self.a)
    }
}

fn check_rates(q: &RateMatrix, a: &[f64]) -> Result<()> {
    if a.len() != q.n_states() {
        return Err(Error::Domain(format!("{} growth rates for {} environment states", a.len(), q.n_states())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("growth rates must be finite".into()));
    }
    Ok(())
}

fn check_irreducible(q: &RateMatrix) -> Result<()> {
    if q.is_irreducible() {
        Ok(())
    } else {
        q.stationary_distribution().map(|_| ())
    }
}

fn tilted(q: &RateMatrix, a: &[f64], p: f64) -> DMatrix<f64> {
    let mut m = q.matrix().clone();
    for (i, ai) in a.iter().enumerate() {
        m[(i, i)] += p * ai;
    }
    m
}

/// ν(a) = Σ ν(i) a(i).
pub fn mean_rate(q: &RateMatrix, a: &[f64]) -> Result<f64> {
    check_rates(q, a)?;
    let nu = q.stationary_distribution()?;
    Ok(nu.iter().zip(a).map(|(n, a)| n * a).sum())
}

/// Perron eigenvalue λ_p of `Q + p·diag(a)` with its left eigenvector.
pub fn moment_growth_rate(q: &RateMatrix, a: &[f64], p: f64) -> Result<PerronPair> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("moment order must be finite and ≥ 0, got {p}")));
    }
    check_rates(q, a)?;
    check_irreducible(q)?;
    perron(&tilted(q, a, p))
}

/// E[X_t^p] / E[X_0^p] = μ0 · exp(t(Q + p·diag(a))) · 1.
pub fn moment_feynman_kac(q: &RateMatrix, a: &[f64], p: f64, t: f64, mu0: &[f64]) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("moment order must be finite and ≥ 0, got {p}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and ≥ 0, got {t}")));
    }
    check_rates(q, a)?;
    check_irreducible(q)?;
    check_probability(mu0, q.n_states())?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let e = expm(&tilted(q, a, p), t);
    let ones = DVector::from_element(q.n_states(), 1.0);
    let mu = DVector::from_column_slice(mu0);
    Ok((mu.transpose() * e * ones)[(0, 0)])
}

pub(crate) fn check_probability(mu: &[f64], n: usize) -> Result<()> {
    if mu.len() != n {
        return Err(Error::Domain(format!("probability vector has length {}, expected {n}", mu.len())));
    }
    if mu.iter().any(|&m| !(m >= 0.0)) || (mu.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("not a probability vector".into()));
    }
    Ok(())
}

/// Monte-Carlo estimate of E[exp(p ∫_0^t a(I_s) ds)] with I_0 ~ μ0.
pub fn moment_monte_carlo(
    q: &RateMatrix,
    a: &[f64],
    p: f64,
    t: f64,
    mu0: &[f64],
    n_paths: u64,
    stream: &RngStream,
) -> Result<MeanEstimate> {
    check_rates(q, a)?;
    check_probability(mu0, q.n_states())?;
    if !(t > 0.0) {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    let vals = replicas(stream, n_paths, |s| {
        let mut rng = s.child(0).rng();
        let y0 = sample_index(mu0, &mut rng);
        let path = simulate_ctmc(q, y0, t, s.child(1).rng())?;
        Ok((p * path.integrate(|i| a[i])).exp())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(MeanEstimate::from_samples(&vals))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    /// ν(a) < 0: moments of order below `window_end` decay.
    Decay { p_star: f64, lambda_at_p_star: f64, window_end: f64 },
    /// ν(a) > 0: λ_p > 0 for every p > 0.
    Divergence,
    /// ν(a) = 0 within tolerance.
    Critical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyReport {
    pub nu_a: f64,
    pub regime: Regime,
}

/// Classify the moment behaviour by the sign of ν(a).
///
/// In the decaying case `window_end` is the positive root of `p ↦ λ_p`
/// (or `p_max` when none is found below it); λ_p is convex in p, so every
/// order in `(0, window_end)` decays. `p_star` is the middle of the window.
pub fn moment_dichotomy(q: &RateMatrix, a: &[f64], p_max: f64, tol: f64) -> Result<DichotomyReport> {
    check_irreducible(q)?;
    let nu_a = mean_rate(q, a)?;
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if nu_a.abs() <= tol * scale {
        return Ok(DichotomyReport { nu_a, regime: Regime::Critical });
    }
    if nu_a > 0.0 {
        return Ok(DichotomyReport { nu_a, regime: Regime::Divergence });
    }
    let lam = |p: f64| moment_growth_rate(q, a, p).map(|r| r.eigenvalue);
    let mut hi = (1.0f64).min(p_max);
    while lam(hi)? < 0.0 && hi < p_max {
        hi = (2.0 * hi).min(p_max);
    }
    let window_end = if lam(hi)? < 0.0 {
        p_max
    } else {
        let mut lo = 0.0;
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if lam(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let p_star = 0.5 * window_end;
    Ok(DichotomyReport { nu_a, regime: Regime::Decay { p_star, lambda_at_p_star: lam(p_star)?, window_end } })
}

/// Central finite difference of λ_p at p = 0 with step `h`.
pub fn growth_rate_derivative(q: &RateMatrix, a: &[f64], h: f64) -> Result<f64> {
    check_rates(q, a)?;
    check_irreducible(q)?;
    let up = perron(&tilted(q, a, h))?.eigenvalue;
    let down = perron(&tilted(q, a, -h))?.eigenvalue;
    Ok((up - down) / (2.0 * h))
}

/// |∂_p λ_p at 0 − ν(a)|, the derivative taken by central difference with h = 1e-5.
pub fn derivative_check(q: &RateMatrix, a: &[f64]) -> Result<f64> {
    Ok((growth_rate_derivative(q, a, 1e-5)? - mean_rate(q, a)?).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRateCurve {
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    pub derivative_at_zero: f64,
}

impl GrowthRateCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "p,lambda_p")?;
        for (p, l) in self.p.iter().zip(&self.lambda) {
            writeln!(w, "{p},{l}")?;
        }
        Ok(())
    }
}

pub fn growth_rate_curve(q: &RateMatrix, a: &[f64], ps: &[f64]) -> Result<GrowthRateCurve> {
    let lambda = ps.iter().map(|&p| moment_growth_rate(q, a, p).map(|r| r.eigenvalue)).collect::<Result<Vec<_>>>()?;
    Ok(GrowthRateCurve { p: ps.to_vec(), lambda, derivative_at_zero: growth_rate_derivative(q, a, 1e-5)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> RateMatrix {
        RateMatrix::symmetric_two_state(1.0).unwrap()
    }

    #[test]
    fn closed_form_symmetric_pair() {
        for p in [0.0, 0.3, 1.0, 2.5] {
            let l = moment_growth_rate(&sym(), &[1.0, -1.0], p).unwrap().eigenvalue;
            assert!((l - (-1.0 + (1.0 + p * p).sqrt())).abs() < 1e-10);
        }
    }

    #[test]
    fn extinction_example() {
        let l = moment_growth_rate(&sym(), &[-2.0, 1.0], 0.1).unwrap().eigenvalue;
        assert!((l - (-2.1 + 4.09f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(l < 0.0);
    }

    #[test]
    fn feynman_kac_trivial_cases() {
        assert_eq!(moment_feynman_kac(&sym(), &[1.0, -1.0], 1.0, 0.0, &[1.0, 0.0]).unwrap(), 1.0);
        let v = moment_feynman_kac(&RateMatrix::trivial(), &[0.4], 2.0, 3.0, &[1.0]).unwrap();
        assert!((v - (2.4f64).exp()).abs() < 1e-9 * v);
    }

    #[test]
    fn dichotomy_regimes() {
        let r = moment_dichotomy(&sym(), &[-2.0, 1.0], 100.0, 1e-9).unwrap();
        assert!((r.nu_a + 0.5).abs() < 1e-12);
        match r.regime {
            Regime::Decay { p_star, lambda_at_p_star, window_end } => {
                assert!(lambda_at_p_star < 0.0 && p_star > 0.0 && window_end > 0.1);
            }
            other => panic!("{other:?}"),
        }
        let r = moment_dichotomy(&sym(), &[1.0, -1.0], 100.0, 1e-9).unwrap();
        assert_eq!(r.regime, Regime::Critical);
        let r = moment_dichotomy(&sym(), &[0.5, 0.5], 100.0, 1e-9).unwrap();
        assert_eq!(r.regime, Regime::Divergence);
    }

    #[test]
    fn derivative_matches_mean_rate() {
        assert!(derivative_check(&sym(), &[1.0, -1.0]).unwrap() < 1e-6);
        assert!((growth_rate_derivative(&sym(), &[-2.0, 1.0], 1e-5).unwrap() + 0.5).abs() < 1e-6);
        assert!((growth_rate_derivative(&sym(), &[0.7, 0.7], 1e-5).unwrap() - 0.7).abs() < 1e-6);
    }

    #[test]
    fn reducible_generator_is_rejected() {
        let q = RateMatrix::new(vec![vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(moment_growth_rate(&q, &[1.0, 1.0], 1.0), Err(Error::Reducible(_))));
    }

    #[test]
    fn curve_csv() {
        let c = growth_rate_curve(&sym(), &[1.0, -1.0], &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("p,lambda_p\n0,"));
        assert!(c.lambda[0].abs() < 1e-10);
    }
}
