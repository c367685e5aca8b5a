//! Planar switched flows, Lyapunov exponents and the critical switching rate.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::mc::try_replicas;
use crate::pdmp::{EnvClock, EnvSource, LinearField, RateMatrix, SharedField, SwitchedSystem, VectorField};
use crate::rng::RngStream;
use crate::stats::{MeanEstimate, NeumaierSum};

/// Solution of `ẋ = −x − y/4, ẏ = 4x − y` from `(x0, y0)`.
pub fn planar_closed_form(x0: f64, y0: f64, t: f64) -> (f64, f64) {
    let (s, c) = t.sin_cos();
    let e = (-t).exp();
    (e * (c * x0 - s * y0 / 4.0), e * (4.0 * s * x0 + c * y0))
}

/// Two planar linear fields switched at a common rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSwitched {
    pub lambda_switch: f64,
    pub m0: DMatrix<f64>,
    pub m1: DMatrix<f64>,
}

impl PlanarSwitched {
    pub fn canonical_m0() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 4.0, -0.25, -1.0])
    }

    pub fn canonical_m1() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, -0.25, 4.0, -1.0])
    }

    pub fn canonical(lambda_switch: f64) -> Result<Self> {
        Self::new(lambda_switch, Self::canonical_m0(), Self::canonical_m1())
    }

    pub fn new(lambda_switch: f64, m0: DMatrix<f64>, m1: DMatrix<f64>) -> Result<Self> {
        if !(lambda_switch > 0.0) || !lambda_switch.is_finite() {
            return Err(Error::Domain(format!("switching rate must be positive, got {lambda_switch}")));
        }
        if m0.shape() != (2, 2) || m1.shape() != (2, 2) {
            return Err(Error::Domain("planar matrices must be 2×2".into()));
        }
        Ok(Self { lambda_switch, m0, m1 })
    }

    pub fn linear(&self) -> LinearSwitched {
        LinearSwitched {
            matrices: vec![self.m0.clone(), self.m1.clone()],
            env: RateMatrix::symmetric_two_state(self.lambda_switch).expect("validated rate"),
        }
    }

    pub fn system(&self) -> SwitchedSystem {
        self.linear().system()
    }
}

/// Switched linear system `ẋ = M(I_t) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSwitched {
    pub matrices: Vec<DMatrix<f64>>,
    pub env: RateMatrix,
}

impl LinearSwitched {
    pub fn new(matrices: Vec<DMatrix<f64>>, env: RateMatrix) -> Result<Self> {
        if matrices.len() != env.n_states() || matrices.is_empty() {
            return Err(Error::Config(format!(
                "{} matrices for {} environment states",
                matrices.len(),
                env.n_states()
            )));
        }
        let d = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Config("matrices must be square and share one dimension".into()));
        }
        Ok(Self { matrices, env })
    }

    /// Extract the matrices of a switched system whose fields are all linear.
    pub fn from_system(sys: &SwitchedSystem) -> Result<Self> {
        let ms = sys
            .fields
            .iter()
            .map(|f| f.linear_matrix().cloned())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Precondition("all fields must be linear".into()))?;
        Self::new(ms, sys.env.clone())
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn with_rate_scale(&self, factor: f64) -> Result<Self> {
        Ok(Self { matrices: self.matrices.clone(), env: self.env.scaled(factor)? })
    }

    pub fn system(&self) -> SwitchedSystem {
        let fields: Vec<SharedField> =
            self.matrices.iter().map(|m| Arc::new(LinearField::new(m.clone())) as Arc<dyn VectorField>).collect();
        SwitchedSystem::new(fields, self.env.clone()).expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub chi: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub se: f64,
    pub per_replica: Vec<f64>,
    pub horizon: f64,
    /// Set when a CI width target was given and not met.
    pub too_short: bool,
}

impl LyapunovEstimate {
    /// +1 / −1 when the 95 % interval excludes zero, 0 otherwise.
    pub fn sign(&self) -> i8 {
        if self.ci_lo > 0.0 {
            1
        } else if self.ci_hi < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// One replica: (1/T) log ‖X_T‖ from a random unit vector, propagated
/// exactly with matrix exponentials and renormalized every time unit.
fn lyapunov_replica(sys: &LinearSwitched, unit: &[DMatrix<f64>], horizon: f64, stream: &RngStream) -> Result<f64> {
    let d = sys.dim();
    let mut dir_rng = stream.child(3).rng();
    let mut x = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut dir_rng));
    let n0 = x.norm();
    x /= n0;
    let y0 = (rand::Rng::random::<f64>(&mut dir_rng) * sys.env.n_states() as f64) as usize;
    let y0 = y0.min(sys.env.n_states() - 1);
    let mut clock = EnvClock::new(&sys.env, y0, 0.0, 1.0, stream.child(1).rng())?;
    let mut log_norm = NeumaierSum::default();
    let mut t = 0.0;
    while t < horizon {
        let y = clock.state();
        let end = clock.segment_end().min(horizon);
        while t < end {
            let dt = (end - t).min(1.0);
            x = if dt == 1.0 { &unit[y] * &x } else { expm(&sys.matrices[y], dt) * &x };
            let n = x.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Numerical(format!("state norm degenerated to {n} at t = {t}")));
            }
            log_norm.add(n.ln());
            x /= n;
            t += dt;
        }
        if clock.segment_end() <= horizon {
            clock.advance();
        }
    }
    Ok(log_norm.value() / horizon)
}

/// Estimate χ = lim (1/t) log ‖X_t‖ from `n_rep` independent replicas.
///
/// The interval is a 95 % Student-t interval over replicas. When
/// `ci_width_target` is given and the interval is wider, `too_short` is set.
pub fn lyapunov_exponent(
    sys: &LinearSwitched,
    horizon: f64,
    stream: &RngStream,
    n_rep: u64,
    ci_width_target: Option<f64>,
) -> Result<LyapunovEstimate> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if n_rep < 2 {
        return Err(Error::Domain("at least two replicas are needed for an interval".into()));
    }
    let unit: Vec<DMatrix<f64>> = sys.matrices.iter().map(|m| expm(m, 1.0)).collect();
    let per_replica = try_replicas(stream, n_rep, |s| lyapunov_replica(sys, &unit, horizon, &s))?;
    let est = MeanEstimate::from_samples(&per_replica);
    let (ci_lo, ci_hi) = est.ci_t(0.95);
    let too_short = ci_width_target.is_some_and(|w| ci_hi - ci_lo > w);
    Ok(LyapunovEstimate { chi: est.mean, ci_lo, ci_hi, se: est.se, per_replica, horizon, too_short })
}

/// One row of a Lyapunov scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub lambda_switch: f64,
    pub chi: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub horizon: f64,
}

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "lambda_switch,chi,ci_lo,ci_hi")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.lambda_switch, p.chi, p.ci_lo, p.ci_hi)?;
    }
    Ok(())
}

/// χ at each switching rate, where `base` has unit switching rate and
/// `lambda` multiplies its generator.
pub fn lyapunov_scan(
    base: &LinearSwitched,
    lambdas: &[f64],
    horizon: f64,
    n_rep: u64,
    stream: &RngStream,
) -> Result<Vec<ScanPoint>> {
    lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let est = lyapunov_exponent(&base.with_rate_scale(l)?, horizon, &stream.child(k as u64), n_rep, None)?;
            Ok(ScanPoint { lambda_switch: l, chi: est.chi, ci_lo: est.ci_lo, ci_hi: est.ci_hi, horizon })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalRateOptions {
    pub horizon: f64,
    /// Horizons are doubled up to this cap while a sign is unresolved.
    pub horizon_cap: f64,
    pub n_rep: u64,
}

impl Default for CriticalRateOptions {
    fn default() -> Self {
        Self { horizon: 1000.0, horizon_cap: 1e4, n_rep: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalRate {
    pub lo: f64,
    pub hi: f64,
    /// False when bisection stopped early on an unresolved midpoint; the
    /// interval is then wider than the tolerance but still brackets the flip.
    pub converged: bool,
    pub evaluations: Vec<ScanPoint>,
}

impl CriticalRate {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bracket the switching rate at which χ changes sign.
///
/// Each sign call doubles the horizon until the 95 % interval of χ
/// excludes zero or the cap is passed.
pub fn critical_rate(
    base: &LinearSwitched,
    bracket: (f64, f64),
    tol: f64,
    opts: &CriticalRateOptions,
    stream: &RngStream,
) -> Result<CriticalRate> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let mut evaluations = Vec::new();
    let mut calls = 0u64;
    let mut sign_at = |l: f64, evaluations: &mut Vec<ScanPoint>| -> Result<i8> {
        let sys = base.with_rate_scale(l)?;
        let mut horizon = opts.horizon;
        loop {
            calls += 1;
            let est = lyapunov_exponent(&sys, horizon, &stream.child(calls), opts.n_rep, None)?;
            evaluations.push(ScanPoint { lambda_switch: l, chi: est.chi, ci_lo: est.ci_lo, ci_hi: est.ci_hi, horizon });
            let s = est.sign();
            if s != 0 || 2.0 * horizon > opts.horizon_cap {
                return Ok(s);
            }
            horizon *= 2.0;
        }
    };
    let s_lo = sign_at(lo, &mut evaluations)?;
    let s_hi = sign_at(hi, &mut evaluations)?;
    for (s, l) in [(s_lo, lo), (s_hi, hi)] {
        if s == 0 {
            return Err(Error::Precondition(format!(
                "sign of the Lyapunov exponent at λ = {l} is not resolved up to horizon {}; use a longer horizon",
                opts.horizon_cap
            )));
        }
    }
    if s_lo != -1 || s_hi != 1 {
        return Err(Error::Precondition(format!(
            "bracket must satisfy χ(λ_lo) < 0 < χ(λ_hi); got signs {s_lo} at {lo} and {s_hi} at {hi}"
        )));
    }
    let mut converged = true;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match sign_at(mid, &mut evaluations)? {
            -1 => lo = mid,
            1 => hi = mid,
            _ => {
                converged = false;
                break;
            }
        }
    }
    Ok(CriticalRate { lo, hi, converged, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdmp::{integrate_flow, IntegratorConfig};

    #[test]
    fn closed_form_values() {
        let (x, y) = planar_closed_form(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        assert!(((x * x + y * y).sqrt() - 4.0 * (-std::f64::consts::FRAC_PI_2).exp()).abs() < 1e-12);
        assert_eq!(planar_closed_form(0.3, -0.7, 0.0), (0.3, -0.7));
        let (x, y) = planar_closed_form(0.0, 1.0, std::f64::consts::PI);
        assert!(x.abs() < 1e-15 && (y + (-std::f64::consts::PI).exp()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_solves_second_field() {
        let f = LinearField::new(PlanarSwitched::canonical_m1());
        let x = integrate_flow(&f, &[1.0, 0.0], 1.0, &IntegratorConfig::default()).unwrap();
        let (cx, cy) = planar_closed_form(1.0, 0.0, 1.0);
        assert!((x[0] - cx).abs() < 1e-8 * cx.abs() && (x[1] - cy).abs() < 1e-8 * cy.abs());
    }

    #[test]
    fn single_stable_environment() {
        let sys = LinearSwitched::new(vec![-DMatrix::identity(2, 2)], RateMatrix::trivial()).unwrap();
        let est = lyapunov_exponent(&sys, 50.0, &RngStream::new(1, 0), 4, None).unwrap();
        assert!((est.chi + 1.0).abs() < 1e-10);
    }

    #[test]
    fn commuting_stable_pair_has_no_flip() {
        let m = -DMatrix::identity(2, 2);
        let base = LinearSwitched::new(vec![m.clone(), m], RateMatrix::symmetric_two_state(1.0).unwrap()).unwrap();
        let opts = CriticalRateOptions { horizon: 20.0, horizon_cap: 40.0, n_rep: 4 };
        let r = critical_rate(&base, (0.1, 10.0), 0.5, &opts, &RngStream::new(0, 0));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn deterministic_given_stream() {
        let sys = PlanarSwitched::canonical(3.0).unwrap().linear();
        let a = lyapunov_exponent(&sys, 100.0, &RngStream::new(4, 1), 3, None).unwrap();
        let b = lyapunov_exponent(&sys, 100.0, &RngStream::new(4, 1), 3, None).unwrap();
        assert_eq!(a, b);
    }
}
