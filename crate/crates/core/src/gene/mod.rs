//! Two-stage gene expression (transcription, translation) in a growing and
//! dividing cell, with gene replication at a fixed phase of the cycle.
//!
//! The mRNA count is exactly Poisson at every phase once the lineage has
//! reached equilibrium; its parameter is given by [`mrna_poisson_parameter`]
//! and independently by the fixed point of [`cycle_mean_map`]. Second
//! moments come from the closed moment ODEs in [`moments`].

mod lineage;
mod moments;
mod noise;

pub use lineage::{simulate_cell_lineage, LineageOptions, LineageSamples, MomentEstimate};
pub use moments::{
    cycle_moment_map, division_map, equilibrium_moments, iterate_cycle_moments, moment_ode_propagate, moments_at_phase,
    protein_mean, protein_variance_closed_form, MomentVector,
};
pub use noise::{
    concentration_profile, concentration_stats, cv_scan, cv_trend, default_cv_grid, global_noise, write_cv_csv,
    ConcentrationRow, ConcentrationTable, CvPoint, CvTrend,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneParams {
    /// Transcription rate per gene copy.
    pub lambda1: f64,
    /// mRNA degradation rate.
    pub sigma1: f64,
    /// Translation rate per mRNA.
    pub lambda2: f64,
    /// Replication phase.
    pub tau_r: f64,
    /// Division time.
    pub tau_d: f64,
    /// Volume at birth.
    pub v0: f64,
}

impl GeneParams {
    pub fn new(lambda1: f64, sigma1: f64, lambda2: f64, tau_r: f64, tau_d: f64, v0: f64) -> Result<Self> {
        let p = Self { lambda1, sigma1, lambda2, tau_r, tau_d, v0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("lambda1", self.lambda1)?;
        pos("sigma1", self.sigma1)?;
        pos("lambda2", self.lambda2)?;
        pos("tauD", self.tau_d)?;
        pos("V0", self.v0)?;
        if !(self.tau_r >= 0.0 && self.tau_r < self.tau_d) {
            return Err(Error::Config(format!(
                "constraint 0 <= tauR < tauD violated (tauR = {}, tauD = {})",
                self.tau_r, self.tau_d
            )));
        }
        Ok(())
    }

    /// Transcription rate at phase `s`.
    pub fn transcription_rate(&self, s: f64) -> f64 {
        if s >= self.tau_r {
            2.0 * self.lambda1
        } else {
            self.lambda1
        }
    }

    /// Cell volume at phase `s`.
    pub fn volume(&self, s: f64) -> f64 {
        self.v0 * (s / self.tau_d).exp2()
    }

    fn check_phase(&self, s: f64) -> Result<()> {
        if s >= 0.0 && s < self.tau_d {
            Ok(())
        } else {
            Err(Error::Domain(format!("phase {s} outside [0, {})", self.tau_d)))
        }
    }
}

fn poisson_parameter_unchecked(p: &GeneParams, s: f64) -> f64 {
    let (l, g) = (p.lambda1, p.sigma1);
    let base = 1.0 - (-(s + p.tau_d - p.tau_r) * g).exp() / (2.0 - (-p.tau_d * g).exp());
    let after = if s >= p.tau_r { 1.0 - (-(s - p.tau_r) * g).exp() } else { 0.0 };
    l / g * (base + after)
}

/// Poisson parameter of the equilibrium mRNA count at phase `s ∈ [0, τD)`.
pub fn mrna_poisson_parameter(p: &GeneParams, s: f64) -> Result<f64> {
    p.check_phase(s)?;
    Ok(poisson_parameter_unchecked(p, s))
}

/// Left limit of the equilibrium mRNA mean just before division.
pub fn mrna_mean_before_division(p: &GeneParams) -> f64 {
    poisson_parameter_unchecked(p, p.tau_d)
}

/// Mean mRNA count at phase `s ∈ [0, τD]` starting from `x0` at birth,
/// solving dx/ds = k(s) − σ1 x piecewise.
pub fn mean_profile(p: &GeneParams, x0: f64, s: f64) -> f64 {
    let g = p.sigma1;
    let relax = |x: f64, k: f64, dt: f64| k / g + (x - k / g) * (-g * dt).exp();
    if s < p.tau_r {
        relax(x0, p.lambda1, s)
    } else {
        let xr = relax(x0, p.lambda1, p.tau_r);
        relax(xr, 2.0 * p.lambda1, s - p.tau_r)
    }
}

/// Mean mRNA count at the start of the next cycle: profile to τD, then halve.
pub fn cycle_mean_map(p: &GeneParams, x0: f64) -> f64 {
    0.5 * mean_profile(p, x0, p.tau_d)
}

/// Slope of the affine map [`cycle_mean_map`].
pub fn cycle_map_contraction(p: &GeneParams) -> f64 {
    0.5 * (-p.sigma1 * p.tau_d).exp()
}

pub fn cycle_map_fixed_point(p: &GeneParams) -> f64 {
    cycle_mean_map(p, 0.0) / (1.0 - cycle_map_contraction(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GeneParams {
        GeneParams::new(2.0, 1.0, 5.0, 0.4, 1.0, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(GeneParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GeneParams::new(1.0, 1.0, 1.0, -0.1, 1.0, 1.0).is_err());
        assert!(GeneParams::new(0.0, 1.0, 1.0, 0.1, 1.0, 1.0).is_err());
        assert!(GeneParams::new(1.0, 1.0, 1.0, 0.0, 1.0, 1.0).is_ok());
        let e = GeneParams::new(1.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("tauR < tauD"), "{e}");
    }

    #[test]
    fn continuity_at_replication() {
        let p = params();
        let below = mrna_poisson_parameter(&p, p.tau_r - 1e-12).unwrap();
        let at = mrna_poisson_parameter(&p, p.tau_r).unwrap();
        assert!((below - at).abs() < 1e-10);
    }

    #[test]
    fn birth_value_example() {
        let p = params();
        let want = 2.0 * (1.0 - (-0.6f64).exp() / (2.0 - (-1.0f64).exp()));
        assert!((mrna_poisson_parameter(&p, 0.0).unwrap() - want).abs() < 1e-14);
        assert!((cycle_map_fixed_point(&p) - want).abs() < 1e-12);
    }

    #[test]
    fn division_halves_mean() {
        let p = params();
        let x0 = mrna_poisson_parameter(&p, 0.0).unwrap();
        assert!((x0 - 0.5 * mrna_mean_before_division(&p)).abs() < 1e-14);
    }

    #[test]
    fn phase_outside_cycle_rejected() {
        let p = params();
        assert!(mrna_poisson_parameter(&p, 1.0).is_err());
        assert!(mrna_poisson_parameter(&p, -0.1).is_err());
    }

    #[test]
    fn fast_degradation_plateau() {
        let p = GeneParams::new(3.0, 50.0, 1.0, 0.4, 1.0, 1.0).unwrap();
        for s in [0.3, 0.39, 0.8, 0.99] {
            let x = mrna_poisson_parameter(&p, s).unwrap();
            let plateau = p.transcription_rate(s) / p.sigma1;
            assert!((x / plateau - 1.0).abs() < 0.01, "s = {s}: {x} vs {plateau}");
        }
    }

    #[test]
    fn iteration_ratio() {
        let p = params();
        let fp = cycle_map_fixed_point(&p);
        let mut x = 10.0;
        let mut err = x - fp;
        for _ in 0..5 {
            x = cycle_mean_map(&p, x);
            let e = x - fp;
            assert!((e / err - cycle_map_contraction(&p)).abs() < 1e-9);
            err = e;
        }
    }

    #[test]
    fn volume_doubles() {
        let p = params();
        assert_eq!(p.volume(p.tau_d) / p.volume(0.0), 2.0);
    }
}
