//! Random product chain `Y_{n+1} = Θ_n Y_n`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::rng::{RngStream, SimRng};
use crate::stats::{MeanEstimate, NeumaierSum};

#[derive(Clone)]
pub enum ThetaLaw {
    Constant(f64),
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Custom(Arc<dyn Fn(&mut SimRng) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for ThetaLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThetaLaw::Constant(c) => write!(f, "Constant({c})"),
            ThetaLaw::Discrete { values, probs } => write!(f, "Discrete({values:?}, {probs:?})"),
            ThetaLaw::Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            ThetaLaw::LogNormal { mu, sigma } => write!(f, "LogNormal({mu}, {sigma})"),
            ThetaLaw::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ThetaLaw {
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            ThetaLaw::Constant(c) => *c,
            ThetaLaw::Discrete { values, probs } => {
                let mut u = rng.random::<f64>();
                for (v, p) in values.iter().zip(probs) {
                    if u < *p {
                        return *v;
                    }
                    u -= p;
                }
                *values.last().expect("non-empty")
            }
            ThetaLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ThetaLaw::LogNormal { mu, sigma } => LogNormal::new(*mu, *sigma).expect("valid").sample(rng),
            ThetaLaw::Custom(f) => f(rng),
        }
    }

    /// E[ln Θ] when available in closed form.
    pub fn mean_log(&self) -> Option<f64> {
        match self {
            ThetaLaw::Constant(c) => Some(c.ln()),
            ThetaLaw::Discrete { values, probs } => Some(values.iter().zip(probs).map(|(v, p)| p * v.ln()).sum()),
            ThetaLaw::Uniform { lo, hi } if *lo > 0.0 => Some((hi * hi.ln() - lo * lo.ln()) / (hi - lo) - 1.0),
            ThetaLaw::Uniform { .. } => None,
            ThetaLaw::LogNormal { mu, .. } => Some(*mu),
            ThetaLaw::Custom(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ThetaLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::Domain("discrete law needs matching non-empty values and probabilities".into()));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain("discrete law probabilities must sum to 1".into()));
                }
            }
            ThetaLaw::Uniform { lo, hi } if !(hi > lo) => {
                return Err(Error::Domain("uniform law needs lo < hi".into()))
            }
            ThetaLaw::LogNormal { sigma, .. } if !(*sigma >= 0.0) => {
                return Err(Error::Domain("log-normal σ must be ≥ 0".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductVerdict {
    Growth,
    Extinction,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductChain {
    /// ln Y_k for k = 0..=n.
    pub log_y: Vec<f64>,
    /// Empirical mean of ln Θ_k with its standard error.
    pub mean_log_theta: MeanEstimate,
    pub exact_mean_log: Option<f64>,
    pub verdict: ProductVerdict,
}

/// Simulate `n` steps in log space from `y0 > 0`; the verdict is the sign
/// of the empirical mean of ln Θ when its 95 % interval excludes zero.
pub fn product_chain(law: &ThetaLaw, y0: f64, n: usize, stream: &RngStream) -> Result<ProductChain> {
    law.validate()?;
    if !(y0 > 0.0) {
        return Err(Error::Domain("Y_0 must be positive".into()));
    }
    let mut rng = stream.rng();
    let mut logs = Vec::with_capacity(n);
    let mut log_y = Vec::with_capacity(n + 1);
    let mut acc = NeumaierSum::default();
    acc.add(y0.ln());
    log_y.push(y0.ln());
    for k in 0..n {
        let th = law.sample(&mut rng);
        if !(th > 0.0) || !th.is_finite() {
            return Err(Error::Domain(format!("sampled Θ_{k} = {th} is not positive")));
        }
        let l = th.ln();
        logs.push(l);
        acc.add(l);
        log_y.push(acc.value());
    }
    let est = MeanEstimate::from_samples(&logs);
    let (lo, hi) = est.ci(0.95);
    let verdict = if est.sd == 0.0 && n > 0 {
        if est.mean > 0.0 {
            ProductVerdict::Growth
        } else if est.mean < 0.0 {
            ProductVerdict::Extinction
        } else {
            ProductVerdict::Undetermined
        }
    } else if lo > 0.0 {
        ProductVerdict::Growth
    } else if hi < 0.0 {
        ProductVerdict::Extinction
    } else {
        ProductVerdict::Undetermined
    };
    Ok(ProductChain { log_y, mean_log_theta: est, exact_mean_log: law.mean_log(), verdict })
}
