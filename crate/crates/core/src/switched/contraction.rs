//! One-sided contraction rates, the average criterion, synchronous coupling
//! and the fast-switching averaged flow.

use std::sync::Arc;

use rand::Rng;

use super::moments::check_probability;
use crate::error::{Error, Result};
use crate::linalg::symmetric_part_max_eigenvalue;
use crate::pdmp::{
    integrate_flow, simulate_ctmc, simulate_pdmp_on_path, IntegratorConfig, MixtureField, PdmpModel, Recording, Region,
    SharedField, SwitchedSystem, VectorField,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub enum ContractionMode {
    /// ρ = −λ_max((M + Mᵀ)/2) for a linear field.
    AnalyticLinear,
    /// Infimum of −⟨x−y, F(x)−F(y)⟩/‖x−y‖² over uniform pairs in a finite box.
    Sampled { region: Region, n_pairs: usize, seed: u64 },
}

pub const MIN_SAMPLED_PAIRS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionEstimate {
    pub rho: f64,
    /// True for the sampled mode: the value is an empirical infimum over the
    /// sampled pairs, not a certified bound.
    pub empirical: bool,
}

pub fn contraction_coefficient(f: &dyn VectorField, mode: &ContractionMode) -> Result<ContractionEstimate> {
    match mode {
        ContractionMode::AnalyticLinear => {
            let m = f
                .linear_matrix()
                .ok_or_else(|| Error::Precondition("analytic contraction coefficient needs a linear field".into()))?;
            Ok(ContractionEstimate { rho: -symmetric_part_max_eigenvalue(m), empirical: false })
        }
        ContractionMode::Sampled { region, n_pairs, seed } => {
            let (lo, hi) = match region {
                Region::Box { lo, hi } => (lo, hi),
                _ => return Err(Error::Config("sampled contraction needs a bounded box region".into())),
            };
            if region.is_degenerate() {
                return Err(Error::Domain("sampling region has zero volume".into()));
            }
            if lo.len() != f.dim() || hi.len() != f.dim() {
                return Err(Error::Domain("sampling region dimension does not match the field".into()));
            }
            if lo.iter().chain(hi).any(|v| !v.is_finite()) {
                return Err(Error::Config("sampled contraction needs finite box bounds".into()));
            }
            let n = (*n_pairs).max(MIN_SAMPLED_PAIRS);
            let d = f.dim();
            let mut rng = RngStream::new(*seed, 0).rng();
            let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
            let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
            let mut rho = f64::INFINITY;
            for _ in 0..n {
                for k in 0..d {
                    x[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
                    y[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
                }
                f.eval(&x, &mut fx);
                f.eval(&y, &mut fy);
                let mut dot = 0.0;
                let mut nrm = 0.0;
                for k in 0..d {
                    let dx = x[k] - y[k];
                    dot += dx * (fx[k] - fy[k]);
                    nrm += dx * dx;
                }
                if nrm > 0.0 {
                    rho = rho.min(-dot / nrm);
                }
            }
            Ok(ContractionEstimate { rho, empirical: true })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub rho: Vec<f64>,
    pub nu: Vec<f64>,
    pub criterion: f64,
    pub verdict: bool,
}

impl ContractionReport {
    /// Recompute Σ ρ(i)ν(i) from the stored fields.
    pub fn is_consistent(&self) -> bool {
        let c: f64 = self.rho.iter().zip(&self.nu).map(|(r, n)| r * n).sum();
        (c - self.criterion).abs() <= 1e-12 * (1.0 + c.abs()) && self.verdict == (self.criterion > 0.0)
    }
}

pub fn average_criterion(rho: &[f64], nu: &[f64]) -> Result<ContractionReport> {
    check_probability(nu, rho.len())?;
    let criterion = rho.iter().zip(nu).map(|(r, n)| r * n).sum::<f64>();
    Ok(ContractionReport { rho: rho.to_vec(), nu: nu.to_vec(), criterion, verdict: criterion > 0.0 })
}

/// Two solutions driven by one environment path, with the Grönwall bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPath {
    pub times: Vec<f64>,
    pub env: Vec<usize>,
    pub distance: Vec<f64>,
    /// ‖Δ(0)‖ · exp(−∫_0^t ρ(I_s) ds).
    pub bound: Vec<f64>,
    pub rho: Vec<f64>,
}

impl CouplingPath {
    /// Largest `distance / bound − 1` over the path (≤ 0 when the bound holds).
    pub fn max_excess(&self) -> f64 {
        self.distance
            .iter()
            .zip(&self.bound)
            .map(|(d, b)| {
                if *b > 0.0 {
                    d / b - 1.0
                } else if *d > 0.0 {
                    f64::INFINITY
                } else {
                    -1.0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Simulate two solutions from `x0` and `x0p` on the same environment path
/// (started from `y0`) and compare their distance with the contraction bound.
pub fn two_point_coupling(
    sys: &SwitchedSystem,
    x0: &[f64],
    x0p: &[f64],
    y0: usize,
    horizon: f64,
    grid: f64,
    stream: &RngStream,
) -> Result<CouplingPath> {
    let rho = sys
        .fields
        .iter()
        .map(|f| contraction_coefficient(f.as_ref(), &ContractionMode::AnalyticLinear).map(|c| c.rho))
        .collect::<Result<Vec<_>>>()?;
    let path = simulate_ctmc(&sys.env, y0, horizon, stream.child(1).rng())?;
    let model = PdmpModel::new(sys.clone()).with_recording(Recording { env_jumps: true, grid: Some(grid) });
    let a = simulate_pdmp_on_path(&model, x0, &path, stream)?;
    let b = simulate_pdmp_on_path(&model, x0p, &path, stream)?;
    if a.times != b.times {
        return Err(Error::Numerical("coupled trajectories are not recorded on the same grid".into()));
    }
    let d0 = norm_diff(x0, x0p);
    let mut integral = 0.0;
    let mut bound = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        if k > 0 {
            integral += rho[a.env[k - 1]] * (a.times[k] - a.times[k - 1]);
        }
        bound.push(d0 * (-integral).exp());
    }
    let distance = a.states.iter().zip(&b.states).map(|(p, q)| norm_diff(p, q)).collect();
    Ok(CouplingPath { times: a.times.clone(), env: a.env.clone(), distance, bound, rho })
}

/// The averaged field Σ ν(i) F^{(i)}, ν defaulting to the stationary law.
pub fn averaged_field(sys: &SwitchedSystem, nu: Option<&[f64]>) -> Result<MixtureField> {
    let nu = match nu {
        Some(n) => {
            check_probability(n, sys.fields.len())?;
            n.to_vec()
        }
        None => sys.env.stationary_distribution()?,
    };
    Ok(MixtureField::new(sys.fields.clone(), nu))
}

/// Solve the averaged ODE `ẋ = Σ ν(i) F^{(i)}(x)` up to time `t`.
pub fn averaged_ode_limit(
    sys: &SwitchedSystem,
    nu: Option<&[f64]>,
    x0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let f = averaged_field(sys, nu)?;
    integrate_flow(&f, x0, t, cfg)
}

/// Competitive two-species Lotka-Volterra fields, one per environment.
pub fn lotka_volterra_pair(growth: [[f64; 2]; 2], interaction: [[[f64; 2]; 2]; 2]) -> Vec<SharedField> {
    (0..2)
        .map(|i| {
            let m = nalgebra::DMatrix::from_fn(2, 2, |r, c| interaction[i][r][c]);
            Arc::new(crate::pdmp::LotkaVolterra::new(growth[i].to_vec(), m)) as SharedField
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdmp::{LinearField, RateMatrix};
    use crate::switched::PlanarSwitched;
    use nalgebra::DMatrix;

    #[test]
    fn identity_contraction() {
        let f = LinearField::new(-DMatrix::identity(3, 3));
        assert!((contraction_coefficient(&f, &ContractionMode::AnalyticLinear).unwrap().rho - 1.0).abs() < 1e-12);
        let mode = ContractionMode::Sampled {
            region: Region::Box { lo: vec![-1.0; 3], hi: vec![1.0; 3] },
            n_pairs: 10_000,
            seed: 1,
        };
        let est = contraction_coefficient(&f, &mode).unwrap();
        assert!(est.empirical && (est.rho - 1.0).abs() < 1e-9);
    }

    #[test]
    fn canonical_planar_is_not_contracting() {
        let f = LinearField::new(PlanarSwitched::canonical_m1());
        assert!((contraction_coefficient(&f, &ContractionMode::AnalyticLinear).unwrap().rho + 0.875).abs() < 1e-12);
    }

    #[test]
    fn degenerate_region_is_rejected() {
        let f = LinearField::new(-DMatrix::identity(2, 2));
        let mode = ContractionMode::Sampled {
            region: Region::Box { lo: vec![0.0, 1.0], hi: vec![1.0, 1.0] },
            n_pairs: 10_000,
            seed: 0,
        };
        assert!(matches!(contraction_coefficient(&f, &mode), Err(Error::Domain(_))));
    }

    #[test]
    fn criterion_arithmetic() {
        let r = average_criterion(&[2.0, -1.0], &[0.25, 0.75]).unwrap();
        assert!((r.criterion + 0.25).abs() < 1e-15 && !r.verdict && r.is_consistent());
        assert!(average_criterion(&[1.0, 1.0], &[0.3, 0.7]).unwrap().verdict);
    }

    #[test]
    fn identical_starts_stay_together() {
        let sys = PlanarSwitched::canonical(2.0).unwrap().system();
        let c = two_point_coupling(&sys, &[1.0, 0.5], &[1.0, 0.5], 0, 5.0, 0.1, &RngStream::new(1, 1)).unwrap();
        assert!(c.distance.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn scalar_coupling_bound() {
        let sys = SwitchedSystem::new(
            vec![Arc::new(LinearField::scalar(-1.0)), Arc::new(LinearField::scalar(-2.0))],
            RateMatrix::symmetric_two_state(1.0).unwrap(),
        )
        .unwrap();
        let c = two_point_coupling(&sys, &[1.0], &[3.0], 0, 5.0, 0.05, &RngStream::new(2, 0)).unwrap();
        assert!(c.max_excess() <= 1e-8);
        assert!(c.distance.last().unwrap() < &c.distance[0]);
    }

    #[test]
    fn averaged_planar_matrix_diverges() {
        let sys = PlanarSwitched::canonical(1.0).unwrap().system();
        let f = averaged_field(&sys, None).unwrap();
        let m = f.linear_matrix().unwrap();
        assert!((crate::linalg::spectral_abscissa(m) - 0.875).abs() < 1e-12);
        let malthus = SwitchedSystem::new(
            vec![Arc::new(LinearField::scalar(1.0)), Arc::new(LinearField::scalar(-1.0))],
            RateMatrix::symmetric_two_state(1.0).unwrap(),
        )
        .unwrap();
        let x = averaged_ode_limit(&malthus, Some(&[0.5, 0.5]), &[2.0], 4.0, &IntegratorConfig::default()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
    }
}
