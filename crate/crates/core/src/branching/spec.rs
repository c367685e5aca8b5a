//! Model ingredients of a structured branching population.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pdmp::{integrate_flow, IntegratorConfig, SharedField};
use crate::rng::SimRng;

/// Deterministic dynamic of the trait between divisions.
#[derive(Clone)]
pub enum TraitFlow {
    /// Every component grows as `x e^{rt}`.
    Exponential { r: f64 },
    /// Arbitrary field, solved numerically unless it registers a closed form.
    Field(SharedField),
}

impl std::fmt::Debug for TraitFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraitFlow::Exponential { r } => write!(f, "Exponential {{ r: {r} }}"),
            TraitFlow::Field(_) => write!(f, "Field(..)"),
        }
    }
}

impl TraitFlow {
    /// Trait after time `dt` from `x`.
    pub fn at(&self, x: &[f64], dt: f64) -> Vec<f64> {
        match self {
            TraitFlow::Exponential { r } => {
                let g = (r * dt).exp();
                x.iter().map(|v| v * g).collect()
            }
            TraitFlow::Field(f) => f.closed_form(x, dt).unwrap_or_else(|| {
                integrate_flow(f.as_ref(), x, dt, &IntegratorConfig::default()).expect("trait flow")
            }),
        }
    }
}

pub type TraitRate = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Division rate B as a function of the trait.
#[derive(Clone)]
pub enum DivisionRate {
    Constant(f64),
    /// `B(x) = coef · x_1`.
    Linear {
        coef: f64,
    },
    /// Arbitrary rate; `majorant` bounds it along every path used for thinning.
    General {
        rate: TraitRate,
        majorant: Option<f64>,
    },
}

impl std::fmt::Debug for DivisionRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DivisionRate::Constant(b) => write!(f, "Constant({b})"),
            DivisionRate::Linear { coef } => write!(f, "Linear {{ coef: {coef} }}"),
            DivisionRate::General { majorant, .. } => write!(f, "General {{ majorant: {majorant:?} }}"),
        }
    }
}

impl DivisionRate {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DivisionRate::Constant(b) => *b,
            DivisionRate::Linear { coef } => coef * x[0],
            DivisionRate::General { rate, .. } => rate(x),
        }
    }
}

/// Offspring numbers `p_k`, k = 0, 1, 2, ...
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pub probs: Vec<f64>,
}

impl OffspringLaw {
    pub fn binary() -> Self {
        Self { probs: vec![0.0, 0.0, 1.0] }
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("offspring probabilities must be non-negative and sum to 1".into()));
        }
        Ok(Self { probs })
    }

    /// m̄ = Σ k p_k.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn sample(&self, rng: &mut SimRng) -> usize {
        let mut u = rng.random::<f64>();
        for (k, p) in self.probs.iter().enumerate() {
            if u < *p {
                return k;
            }
            u -= p;
        }
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }

    /// Size-biased law `k p_k / m̄`.
    pub fn sample_size_biased(&self, rng: &mut SimRng) -> usize {
        let m = self.mean();
        let mut u = rng.random::<f64>() * m;
        for (k, p) in self.probs.iter().enumerate() {
            let w = k as f64 * p;
            if u < w {
                return k;
            }
            u -= w;
        }
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

pub type KernelFn = Arc<dyn Fn(&[f64], usize, &mut SimRng) -> Vec<Vec<f64>> + Send + Sync>;

/// Traits of the `k` offspring of a parent with trait `x`.
#[derive(Clone)]
pub enum OffspringKernel {
    /// Each of the k children receives `x / k`.
    EqualSplit,
    /// Each child inherits `x`.
    Clone,
    Custom(KernelFn),
}

impl std::fmt::Debug for OffspringKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OffspringKernel::EqualSplit => write!(f, "EqualSplit"),
            OffspringKernel::Clone => write!(f, "Clone"),
            OffspringKernel::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl OffspringKernel {
    pub fn children(&self, x: &[f64], k: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
        match self {
            OffspringKernel::EqualSplit => {
                let c: Vec<f64> = x.iter().map(|v| v / k as f64).collect();
                vec![c; k]
            }
            OffspringKernel::Clone => vec![x.to_vec(); k],
            OffspringKernel::Custom(f) => f(x, k, rng),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, OffspringKernel::Custom(_))
    }
}

/// `B(x) ≤ b1 |x|^γ + b2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub b1: f64,
    pub b2: f64,
    pub gamma: f64,
}

pub const DEFAULT_POPULATION_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct BranchingSpec {
    pub flow: TraitFlow,
    pub rate: DivisionRate,
    pub offspring: OffspringLaw,
    pub kernel: OffspringKernel,
    pub rate_bound: Option<RateBound>,
    /// Declared upper bound on the mean offspring number.
    pub mean_offspring_bound: Option<f64>,
    /// x̲ in the mass condition.
    pub trait_floor: Vec<f64>,
    pub population_cap: usize,
}

impl BranchingSpec {
    /// Binary equal-split division with trait growth `r` and division rate `rate`.
    pub fn binary(r: f64, rate: DivisionRate) -> Self {
        Self {
            flow: TraitFlow::Exponential { r },
            rate,
            offspring: OffspringLaw::binary(),
            kernel: OffspringKernel::EqualSplit,
            rate_bound: None,
            mean_offspring_bound: None,
            trait_floor: Vec::new(),
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }

    pub fn constant_rate(&self) -> Option<f64> {
        match self.rate {
            DivisionRate::Constant(b) => Some(b),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.rate {
            DivisionRate::Constant(b) if !(*b >= 0.0) || !b.is_finite() => {
                return Err(Error::Config(format!("division rate must be finite and ≥ 0, got {b}")))
            }
            DivisionRate::Linear { coef } if !(*coef >= 0.0) || !coef.is_finite() => {
                return Err(Error::Config(format!("division rate coefficient must be ≥ 0, got {coef}")))
            }
            _ => {}
        }
        if self.population_cap == 0 {
            return Err(Error::Config("population cap must be positive".into()));
        }
        OffspringLaw::new(self.offspring.probs.clone())?;
        Ok(())
    }

    /// Check the growth bound on B, the declared bound on m̄ and the mass
    /// condition of the kernel on the given traits. Returns the violations.
    pub fn check_assumptions(&self, grid: &[Vec<f64>], rng: &mut SimRng) -> Vec<String> {
        let mut out = Vec::new();
        for x in grid {
            let b = self.rate.eval(x);
            if !(b >= 0.0) {
                out.push(format!("B({x:?}) = {b} is negative"));
            }
            if let Some(rb) = self.rate_bound {
                let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let cap = rb.b1 * nx.powf(rb.gamma) + rb.b2;
                if b > cap * (1.0 + 1e-12) {
                    out.push(format!("B({x:?}) = {b} exceeds b1|x|^γ + b2 = {cap}"));
                }
            }
            for (k, p) in self.offspring.probs.iter().enumerate() {
                if *p == 0.0 || k == 0 || self.trait_floor.is_empty() {
                    continue;
                }
                let n_draws = if self.kernel.is_deterministic() { 1 } else { 200 };
                let mut mass = vec![0.0; x.len()];
                for _ in 0..n_draws {
                    for c in self.kernel.children(x, k, rng) {
                        for (m, v) in mass.iter_mut().zip(c) {
                            *m += v / n_draws as f64;
                        }
                    }
                }
                for (i, m) in mass.iter().enumerate() {
                    let lim = x[i].max(self.trait_floor[i]);
                    if *m > lim * (1.0 + 1e-9) + 1e-12 {
                        out.push(format!(
                            "offspring mass {m} exceeds {lim} in component {i} at {x:?} with {k} children"
                        ));
                    }
                }
            }
        }
        if let Some(m) = self.mean_offspring_bound {
            if self.offspring.mean() > m * (1.0 + 1e-12) {
                out.push(format!("mean offspring {} exceeds declared bound {m}", self.offspring.mean()));
            }
        }
        out
    }
}

/// How to draw a division time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivisionSampler {
    /// Inverse transform when the hazard is explicit, thinning otherwise.
    Auto,
    Thinning {
        majorant: f64,
    },
}

fn exp1(rng: &mut SimRng) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// Time to division from trait `x0`, or infinity if no division occurs
/// before `limit` in the thinning branch (explicit hazards return the exact
/// time even beyond `limit`).
pub fn division_time_sample(
    x0: &[f64],
    flow: &TraitFlow,
    rate: &DivisionRate,
    sampler: DivisionSampler,
    limit: f64,
    rng: &mut SimRng,
) -> Result<f64> {
    let majorant = match (sampler, rate, flow) {
        (DivisionSampler::Auto, DivisionRate::Constant(b), _) => {
            return Ok(if *b > 0.0 { exp1(rng) / b } else { f64::INFINITY });
        }
        (DivisionSampler::Auto, DivisionRate::Linear { coef }, TraitFlow::Exponential { r }) => {
            let e = exp1(rng);
            let c = coef * x0[0];
            if !(c > 0.0) {
                return Ok(f64::INFINITY);
            }
            if *r == 0.0 {
                return Ok(e / c);
            }
            let arg = 1.0 + r * e / c;
            return Ok(if arg > 0.0 { arg.ln() / r } else { f64::INFINITY });
        }
        (DivisionSampler::Thinning { majorant }, _, _) => majorant,
        (DivisionSampler::Auto, DivisionRate::General { majorant: Some(m), .. }, _) => *m,
        _ => return Err(Error::Config("division rate has no explicit hazard; a thinning majorant is required".into())),
    };
    if !(majorant > 0.0) || !majorant.is_finite() {
        return Err(Error::Config(format!("thinning majorant must be finite and > 0, got {majorant}")));
    }
    let mut t = 0.0;
    loop {
        t += exp1(rng) / majorant;
        if t > limit {
            return Ok(f64::INFINITY);
        }
        let x = flow.at(x0, t);
        let b = rate.eval(&x);
        if b > majorant * (1.0 + 1e-12) {
            return Err(Error::MajorantViolated { rate: b, majorant, state: x });
        }
        if rng.random::<f64>() * majorant < b {
            return Ok(t);
        }
    }
}
