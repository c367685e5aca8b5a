//! The auxiliary (spine) process and the many-to-one and uniform-sampling
//! cross-checks.

use rand::Rng;

use super::spec::{BranchingSpec, DivisionRate, OffspringKernel, OffspringLaw, TraitFlow};
use super::tree::{grow, population_functional, uniform_sample_lineage, TraitPath};
use crate::error::{Error, Result};
use crate::mc::try_replicas;
use crate::rng::{RngStream, SimRng};
use crate::stats::{z_score, MeanEstimate};

/// Spine of a constant-rate branching population.
#[derive(Debug, Clone)]
pub struct SpineSpec {
    pub b: f64,
    pub offspring: OffspringLaw,
    pub kernel: OffspringKernel,
    pub flow: TraitFlow,
}

impl SpineSpec {
    pub fn new(b: f64, offspring: OffspringLaw, kernel: OffspringKernel, flow: TraitFlow) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("division rate must be finite and ≥ 0, got {b}")));
        }
        if (offspring.mean() - 1.0).abs() < 1e-12 {
            return Err(Error::Domain("mean offspring number m̄ = 1 gives a degenerate spine".into()));
        }
        Ok(Self { b, offspring, kernel, flow })
    }

    pub fn from_branching(spec: &BranchingSpec) -> Result<Self> {
        match spec.rate {
            DivisionRate::Constant(b) => Self::new(b, spec.offspring.clone(), spec.kernel.clone(), spec.flow.clone()),
            _ => Err(Error::Precondition("the spine is only available for a constant division rate".into())),
        }
    }

    pub fn mean_offspring(&self) -> f64 {
        self.offspring.mean()
    }

    /// Jump rate m̄·B.
    pub fn jump_rate(&self) -> f64 {
        self.b * self.mean_offspring()
    }

    /// m(x, s, t) = e^{B(m̄−1)(t−s)}.
    pub fn mean_population(&self, s: f64, t: f64) -> f64 {
        (self.b * (self.mean_offspring() - 1.0) * (t - s)).exp()
    }
}

/// Spine trait path on `[0, t]`.
pub fn simulate_spine(spec: &SpineSpec, x0: &[f64], t: f64, rng: &mut SimRng) -> TraitPath {
    let rate = spec.jump_rate();
    let mut starts = vec![0.0];
    let mut traits = vec![x0.to_vec()];
    let mut s = 0.0;
    if rate > 0.0 {
        loop {
            s += -(1.0 - rng.random::<f64>()).ln() / rate;
            if s > t {
                break;
            }
            let k0 = starts.len() - 1;
            let x = spec.flow.at(&traits[k0], s - starts[k0]);
            let k = spec.offspring.sample_size_biased(rng);
            let mut kids = spec.kernel.children(&x, k, rng);
            let j = rng.random_range(0..k);
            starts.push(s);
            traits.push(kids.swap_remove(j));
        }
    }
    TraitPath { starts, traits, end: t, flow: spec.flow.clone() }
}

/// Mean population size m(x, s, t) started from one individual of trait x at s.
pub trait MeanPopulation: Send + Sync {
    fn m(&self, x: &[f64], s: f64, t: f64) -> f64;
}

/// `m = e^{B(m̄−1)(t−s)}`, the constant-rate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMean {
    pub b: f64,
    pub mean_offspring: f64,
}

impl MeanPopulation for ConstantMean {
    fn m(&self, _x: &[f64], s: f64, t: f64) -> f64 {
        (self.b * (self.mean_offspring - 1.0) * (t - s)).exp()
    }
}

/// Time-inhomogeneous spine for a user-supplied mean population `m`.
///
/// Between jumps the trait follows the flow; at time s it jumps at rate
/// `B(x) Σ_k p_k Σ_j m(y_j, s, t) / m(x, s, t)` to child trait `y_j` with
/// probability proportional to `p_k m(y_j, s, t)`. Needs a deterministic
/// kernel and a majorant of that rate along the path.
pub fn simulate_spine_general(
    spec: &BranchingSpec,
    mean: &dyn MeanPopulation,
    x0: &[f64],
    t: f64,
    majorant: f64,
    rng: &mut SimRng,
) -> Result<TraitPath> {
    if !spec.kernel.is_deterministic() {
        return Err(Error::Precondition("general spine needs a deterministic offspring kernel".into()));
    }
    if !(majorant > 0.0) {
        return Err(Error::Config("general spine needs a positive majorant".into()));
    }
    let mut starts = vec![0.0];
    let mut traits = vec![x0.to_vec()];
    let mut s = 0.0;
    loop {
        s += -(1.0 - rng.random::<f64>()).ln() / majorant;
        if s > t {
            break;
        }
        let k0 = starts.len() - 1;
        let x = spec.flow.at(&traits[k0], s - starts[k0]);
        let mx = mean.m(&x, s, t);
        let mut options = Vec::new();
        let mut total = 0.0;
        for (k, p) in spec.offspring.probs.iter().enumerate() {
            if *p == 0.0 || k == 0 {
                continue;
            }
            for y in spec.kernel.children(&x, k, rng) {
                let w = p * mean.m(&y, s, t);
                total += w;
                options.push((w, y));
            }
        }
        let rate = spec.rate.eval(&x) * total / mx;
        if rate > majorant * (1.0 + 1e-12) {
            return Err(Error::MajorantViolated { rate, majorant, state: x });
        }
        if rng.random::<f64>() * majorant >= rate {
            continue;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = options.len() - 1;
        for (i, (w, _)) in options.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        starts.push(s);
        traits.push(options.swap_remove(pick).1);
    }
    Ok(TraitPath { starts, traits, end: t, flow: spec.flow.clone() })
}

/// Both sides of the many-to-one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyToOne {
    /// E[Σ_{u∈V_t} f(X_t^u)].
    pub lhs: MeanEstimate,
    /// m(x0, 0, t) · E[f(spine_t)].
    pub rhs: MeanEstimate,
    pub z: f64,
}

pub fn many_to_one_check(
    spec: &BranchingSpec,
    x0: &[f64],
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    t: f64,
    n_rep: u64,
    stream: &RngStream,
) -> Result<ManyToOne> {
    spec.validate()?;
    let spine = SpineSpec::from_branching(spec)?;
    let lhs = try_replicas(&stream.child(1), n_rep, |s| {
        let tree = grow(spec, &[x0.to_vec()], t, &mut s.rng())?;
        population_functional(&tree, f, t)
    })?;
    let rhs = try_replicas(&stream.child(2), n_rep, |s| {
        let path = simulate_spine(&spine, x0, t, &mut s.rng());
        Ok(f(&path.final_trait()))
    })?;
    let lhs = MeanEstimate::from_samples(&lhs);
    let rhs = MeanEstimate::from_samples(&rhs).scaled(spine.mean_population(0.0, t));
    Ok(ManyToOne { z: z_score(&lhs, &rhs), lhs, rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingLimit {
    pub n_initial: usize,
    pub sampled: MeanEstimate,
    pub spine: MeanEstimate,
    pub z: f64,
}

impl SamplingLimit {
    pub fn discrepancy(&self) -> f64 {
        (self.sampled.mean - self.spine.mean).abs()
    }

    pub fn discrepancy_se(&self) -> f64 {
        (self.sampled.se.powi(2) + self.spine.se.powi(2)).sqrt()
    }
}

/// Functional of a lineage, e.g. its trait at the end or its number of divisions.
pub type PathFunctional = dyn Fn(&TraitPath) -> f64 + Sync;

/// Compare a uniformly sampled lineage among `n_initial` independent trees
/// (all started from `x0`) with the spine, through the functional `f`.
/// Replicas whose whole forest is extinct at `t` are redrawn on a fresh
/// sub-stream, up to 100 attempts.
pub fn sampling_limit_check(
    spec: &BranchingSpec,
    x0: &[f64],
    f: &PathFunctional,
    t: f64,
    n_initial: usize,
    n_rep: u64,
    stream: &RngStream,
) -> Result<SamplingLimit> {
    spec.validate()?;
    if n_initial == 0 {
        return Err(Error::Domain("n_initial must be ≥ 1".into()));
    }
    let spine = SpineSpec::from_branching(spec)?;
    let roots = vec![x0.to_vec(); n_initial];
    let sampled = try_replicas(&stream.child(1), n_rep, |s| {
        for attempt in 0..100 {
            let mut rng = s.child(attempt).rng();
            let forest = grow(spec, &roots, t, &mut rng)?;
            match uniform_sample_lineage(&forest, t, &mut rng) {
                Ok((_, path)) => return Ok(f(&path)),
                Err(Error::Extinct(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Extinct(t))
    })?;
    let spine_vals = try_replicas(&stream.child(2), n_rep, |s| Ok(f(&simulate_spine(&spine, x0, t, &mut s.rng()))))?;
    let sampled = MeanEstimate::from_samples(&sampled);
    let spine = MeanEstimate::from_samples(&spine_vals);
    Ok(SamplingLimit { n_initial, z: z_score(&sampled, &spine), sampled, spine })
}

/// Trend verdict along an increasing `n_initial` schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    /// No consecutive increase of the discrepancy beyond 3 combined SEs.
    pub non_increasing: bool,
    pub final_z: f64,
    pub passed: bool,
}

pub fn sampling_trend(points: &[SamplingLimit]) -> TrendReport {
    let non_increasing = points.windows(2).all(|w| {
        let se = (w[0].discrepancy_se().powi(2) + w[1].discrepancy_se().powi(2)).sqrt();
        w[1].discrepancy() - w[0].discrepancy() <= 3.0 * se
    });
    let final_z = points.last().map(|p| p.z).unwrap_or(f64::NAN);
    TrendReport { non_increasing, final_z, passed: non_increasing && final_z.abs() <= 3.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Discrete, Poisson};

    #[test]
    fn degenerate_mean_offspring_rejected() {
        let r = SpineSpec::new(
            1.0,
            OffspringLaw::new(vec![0.0, 1.0]).unwrap(),
            OffspringKernel::EqualSplit,
            TraitFlow::Exponential { r: 0.0 },
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_rate_spine_is_pure_flow() {
        let s =
            SpineSpec::new(0.0, OffspringLaw::binary(), OffspringKernel::EqualSplit, TraitFlow::Exponential { r: 0.5 })
                .unwrap();
        let p = simulate_spine(&s, &[1.0], 2.0, &mut RngStream::new(0, 0).rng());
        assert!((p.final_trait()[0] - 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn spine_jump_count_is_poisson() {
        let s =
            SpineSpec::new(0.7, OffspringLaw::binary(), OffspringKernel::EqualSplit, TraitFlow::Exponential { r: 0.0 })
                .unwrap();
        let mut counts = vec![0u64; 30];
        for rep in 0..10_000 {
            let p = simulate_spine(&s, &[1.0], 2.0, &mut RngStream::new(4, rep).rng());
            counts[p.jumps_until(2.0).min(29)] += 1;
        }
        let pois = Poisson::new(2.8).unwrap();
        let mut probs: Vec<f64> = (0..29).map(|k| pois.pmf(k)).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let r = crate::stats::chi_square_gof(&counts, &probs, 5.0).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn general_spine_with_constant_mean_matches() {
        let spec = BranchingSpec::binary(0.1, DivisionRate::Constant(1.0));
        let spine = SpineSpec::from_branching(&spec).unwrap();
        let mean = ConstantMean { b: 1.0, mean_offspring: 2.0 };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for rep in 0..4000 {
            a.push(simulate_spine(&spine, &[1.0], 2.0, &mut RngStream::new(1, rep).rng()).jumps_until(2.0) as f64);
            let g = simulate_spine_general(&spec, &mean, &[1.0], 2.0, 3.0, &mut RngStream::new(2, rep).rng()).unwrap();
            b.push(g.jumps_until(2.0) as f64);
        }
        let z = z_score(&MeanEstimate::from_samples(&a), &MeanEstimate::from_samples(&b));
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn constant_functional_many_to_one() {
        let spec = BranchingSpec::binary(0.0, DivisionRate::Constant(1.0));
        let r = many_to_one_check(&spec, &[1.0], &|_| 1.0, 1.5, 4000, &RngStream::new(3, 0)).unwrap();
        assert!((r.rhs.mean - 1.5f64.exp()).abs() < 1e-12);
        assert!(r.z.abs() < 4.0, "{r:?}");
    }
}
