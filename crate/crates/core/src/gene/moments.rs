//! Mean/variance propagation for (M, P) through one cell cycle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{mrna_poisson_parameter, GeneParams};
use crate::error::{Error, Result};
use crate::linalg::{expm, solve};

/// First and second moments of the (mRNA, protein) counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentVector {
    pub em: f64,
    pub ep: f64,
    pub var_m: f64,
    pub var_p: f64,
    pub cov_mp: f64,
}

impl MomentVector {
    pub fn deterministic(m: f64, p: f64) -> Self {
        Self { em: m, ep: p, ..Self::default() }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.em, self.ep, self.var_m, self.var_p, self.cov_mp]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { em: a[0], ep: a[1], var_m: a[2], var_p: a[3], cov_mp: a[4] }
    }

    /// Non-negative variances and |Cov| ≤ √(VarM·VarP), up to `tol` relative slack.
    pub fn is_admissible(&self, tol: f64) -> bool {
        let scale = self.var_m.abs().max(self.var_p.abs()).max(1.0);
        self.var_m >= -tol * scale
            && self.var_p >= -tol * scale
            && self.cov_mp.abs() <= (self.var_m.max(0.0) * self.var_p.max(0.0)).sqrt() + tol * scale
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn augmented(&self) -> DVector<f64> {
        DVector::from_row_slice(&[self.em, self.ep, self.var_m, self.var_p, self.cov_mp, 1.0])
    }

    fn from_augmented(v: &DVector<f64>) -> Self {
        Self::from_array([v[0], v[1], v[2], v[3], v[4]])
    }
}

/// Generator of the affine moment ODE in augmented coordinates
/// (EM, EP, VarM, VarP, Cov, 1).
fn moment_generator(p: &GeneParams, doubled: bool) -> DMatrix<f64> {
    let k = if doubled { 2.0 * p.lambda1 } else { p.lambda1 };
    let (g, l2) = (p.sigma1, p.lambda2);
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 6, &[
        -g,  0.0, 0.0,      0.0, 0.0,      k,
        l2,  0.0, 0.0,      0.0, 0.0,      0.0,
        g,   0.0, -2.0 * g, 0.0, 0.0,      k,
        l2,  0.0, 0.0,      0.0, 2.0 * l2, 0.0,
        0.0, 0.0, l2,       0.0, -g,       0.0,
        0.0, 0.0, 0.0,      0.0, 0.0,      0.0,
    ]);
    a
}

fn propagator(p: &GeneParams, dt: f64, doubled: bool) -> DMatrix<f64> {
    expm(&moment_generator(p, doubled), dt)
}

#[rustfmt::skip]
fn division_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(6, 6, &[
        0.5,  0.0,  0.0,  0.0,  0.0,  0.0,
        0.0,  0.5,  0.0,  0.0,  0.0,  0.0,
        0.25, 0.0,  0.25, 0.0,  0.0,  0.0,
        0.0,  0.25, 0.0,  0.25, 0.0,  0.0,
        0.0,  0.0,  0.0,  0.0,  0.25, 0.0,
        0.0,  0.0,  0.0,  0.0,  0.0,  1.0,
    ])
}

/// Propagate moments over `dt` with transcription rate λ1 (or 2λ1 when `doubled`).
pub fn moment_ode_propagate(p: &GeneParams, m0: &MomentVector, dt: f64, doubled: bool) -> MomentVector {
    MomentVector::from_augmented(&(propagator(p, dt, doubled) * m0.augmented()))
}

/// Independent binomial(1/2) thinning of both species.
pub fn division_map(m: &MomentVector) -> MomentVector {
    MomentVector {
        em: 0.5 * m.em,
        ep: 0.5 * m.ep,
        var_m: 0.25 * (m.var_m + m.em),
        var_p: 0.25 * (m.var_p + m.ep),
        cov_mp: 0.25 * m.cov_mp,
    }
}

/// Moments at phase `s ∈ [0, τD]` of a cycle started from `m0`.
/// At `s = τD` this is the state just before division.
pub fn moments_at_phase(p: &GeneParams, m0: &MomentVector, s: f64) -> MomentVector {
    if s < p.tau_r {
        moment_ode_propagate(p, m0, s, false)
    } else {
        let r = moment_ode_propagate(p, m0, p.tau_r, false);
        moment_ode_propagate(p, &r, s - p.tau_r, true)
    }
}

fn cycle_matrix(p: &GeneParams) -> DMatrix<f64> {
    division_matrix() * propagator(p, p.tau_d - p.tau_r, true) * propagator(p, p.tau_r, false)
}

/// One full cycle: growth to τD then division.
pub fn cycle_moment_map(p: &GeneParams, m0: &MomentVector) -> MomentVector {
    MomentVector::from_augmented(&(cycle_matrix(p) * m0.augmented()))
}

pub fn iterate_cycle_moments(p: &GeneParams, m0: &MomentVector, n: usize) -> MomentVector {
    let c = cycle_matrix(p);
    let mut v = m0.augmented();
    for _ in 0..n {
        v = &c * v;
    }
    MomentVector::from_augmented(&v)
}

/// Cycle-start moments at equilibrium: fixed point of [`cycle_moment_map`].
pub fn equilibrium_moments(p: &GeneParams) -> Result<MomentVector> {
    p.validate()?;
    let c = cycle_matrix(p);
    let a = c.view((0, 0), (5, 5)).into_owned();
    let b = c.view((0, 5), (5, 1)).column(0).into_owned();
    let lhs = DMatrix::identity(5, 5) - a;
    let x = solve(&lhs, &b)?;
    let m = MomentVector::from_array([x[0], x[1], x[2], x[3], x[4]]);
    let x0 = mrna_poisson_parameter(p, 0.0)?;
    let tol = 1e-9 * x0.max(1.0);
    if (m.em - x0).abs() > tol || (m.var_m - m.em).abs() > tol {
        return Err(Error::Numerical(format!(
            "equilibrium mRNA moments inconsistent with Poisson({x0}): mean {}, variance {}",
            m.em, m.var_m
        )));
    }
    Ok(m)
}

/// E[P_s] for `s ∈ [0, τR)` in closed form, `m0` being the birth moments.
pub fn protein_mean(p: &GeneParams, m0: &MomentVector, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s < p.tau_r) {
        return Err(Error::Domain(format!("phase {s} outside [0, tauR = {})", p.tau_r)));
    }
    let (l1, g, l2) = (p.lambda1, p.sigma1, p.lambda2);
    Ok(m0.ep + l2 * l1 / g * s + l2 * (m0.em - l1 / g) * (1.0 - (-g * s).exp()) / g)
}

/// Var P_s for `s ∈ [0, τR)` in closed form. Assumes a Poisson birth mRNA
/// count (VarM0 = EM0), as at equilibrium.
pub fn protein_variance_closed_form(p: &GeneParams, m0: &MomentVector, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s < p.tau_r) {
        return Err(Error::Domain(format!("phase {s} outside [0, tauR = {})", p.tau_r)));
    }
    let (l1, g, l2) = (p.lambda1, p.sigma1, p.lambda2);
    let x0 = m0.em;
    let e = (-g * s).exp();
    let q = (1.0 - e) / g;
    let r = l2 / g;
    Ok(m0.var_p
        + 2.0 * l2 * q * m0.cov_mp
        + (l2 * q).powi(2) * x0
        + x0 * r * (1.0 - e + r * (1.0 - e * (e + 2.0 * s * g)))
        + l1 * l2 / (g * g) * (s * g - 1.0 + e + 2.0 * r * (g * s * (1.0 + e) - 2.0 * (1.0 - e))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GeneParams {
        GeneParams::new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_input_stays_zero() {
        let mut p = params();
        p.lambda1 = 1e-300;
        let m = moment_ode_propagate(&p, &MomentVector::default(), 0.7, false);
        assert!(m.max_abs_diff(&MomentVector::default()) < 1e-250);
        assert_eq!(division_map(&MomentVector::default()), MomentVector::default());
    }

    #[test]
    fn binomial_variance_of_deterministic_count() {
        let m = division_map(&MomentVector::deterministic(10.0, 4.0));
        assert_eq!(m.var_m, 2.5);
        assert_eq!(m.var_p, 1.0);
        assert_eq!(m.em, 5.0);
    }

    #[test]
    fn equilibrium_is_poisson_for_mrna() {
        let p = params();
        let m = equilibrium_moments(&p).unwrap();
        let x0 = mrna_poisson_parameter(&p, 0.0).unwrap();
        assert!((m.em - x0).abs() < 1e-10);
        assert!((m.var_m - x0).abs() < 1e-10);
        assert!(m.is_admissible(1e-12));
        assert!(m.var_p > m.ep, "protein Fano factor should exceed one");
    }

    #[test]
    fn closed_forms_match_engine() {
        let p = params();
        let m0 = equilibrium_moments(&p).unwrap();
        for s in [0.0, 0.1, 0.25, 0.39] {
            let m = moments_at_phase(&p, &m0, s);
            assert!((protein_mean(&p, &m0, s).unwrap() - m.ep).abs() < 1e-9);
            assert!((protein_variance_closed_form(&p, &m0, s).unwrap() - m.var_p).abs() < 1e-8);
        }
        assert!(protein_mean(&p, &m0, 0.4).is_err());
    }

    #[test]
    fn iteration_reaches_fixed_point() {
        let p = params();
        let eq = equilibrium_moments(&p).unwrap();
        let a = iterate_cycle_moments(&p, &MomentVector::default(), 80);
        let b = iterate_cycle_moments(&p, &MomentVector::deterministic(1e3, 1e4), 80);
        assert!(a.max_abs_diff(&eq) < 1e-8);
        assert!(b.max_abs_diff(&eq) < 1e-8);
    }
}
