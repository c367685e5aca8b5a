//! Summation, Monte-Carlo summaries and goodness-of-fit tests.
//!
//! Reductions go through [`pairwise_sum`] or [`NeumaierSum`] so that the
//! reported statistics do not depend on the order replicas finished in.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = NeumaierSum::default();
        for &x in xs {
            s.add(x);
        }
        s.value()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Compensated running sum (Neumaier's variant of Kahan).
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, sd: f64::NAN, se: f64::NAN, n };
        }
        let mean = pairwise_sum(xs) / n as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        let sd = var.sqrt();
        Self { mean, sd, se: sd / (n as f64).sqrt(), n }
    }

    /// Multiply the estimate by a known constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self { mean: self.mean * c, sd: self.sd * c.abs(), se: self.se * c.abs(), n: self.n }
    }

    /// Two-sided normal confidence interval at `level` (e.g. 0.95).
    pub fn ci(&self, level: f64) -> (f64, f64) {
        let z = normal_quantile(0.5 + level / 2.0);
        (self.mean - z * self.se, self.mean + z * self.se)
    }

    /// Student-t interval, appropriate for a handful of replicas.
    pub fn ci_t(&self, level: f64) -> (f64, f64) {
        if self.n < 2 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let t = StudentsT::new(0.0, 1.0, (self.n - 1) as f64).expect("dof > 0").inverse_cdf(0.5 + level / 2.0);
        (self.mean - t * self.se, self.mean + t * self.se)
    }
}

/// z-score of the difference between two independent estimates.
pub fn z_score(a: &MeanEstimate, b: &MeanEstimate) -> f64 {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    if se == 0.0 {
        if a.mean == b.mean {
            0.0
        } else {
            f64::INFINITY * (a.mean - b.mean).signum()
        }
    } else {
        (a.mean - b.mean) / se
    }
}

/// z-score of an estimate against an exact value.
pub fn z_against(a: &MeanEstimate, exact: f64) -> f64 {
    if a.se == 0.0 {
        if a.mean == exact {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.mean - exact) / a.se
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

pub fn normal_sf(z: f64) -> f64 {
    1.0 - Normal::new(0.0, 1.0).expect("standard normal").cdf(z)
}

/// Batch-means estimate of the mean of an autocorrelated series.
pub fn batch_means(xs: &[f64], n_batches: usize) -> MeanEstimate {
    let size = xs.len() / n_batches.max(1);
    if size == 0 {
        return MeanEstimate::from_samples(xs);
    }
    let means: Vec<f64> = xs.chunks_exact(size).take(n_batches).map(|c| pairwise_sum(c) / c.len() as f64).collect();
    let est = MeanEstimate::from_samples(&means);
    MeanEstimate { n: size * means.len(), ..est }
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::Empty("KS test needs at least one sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, p_value: ks_p(d, n) })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS test needs two non-empty samples".into()));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult { statistic: d, p_value: ks_p(d, n_eff) })
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against cell probabilities.
///
/// Adjacent cells are pooled left to right until each pooled cell expects at
/// least `min_expected` counts; the trailing remainder joins the last cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::Domain("observed counts and probabilities must align".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no observations".into()));
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * n;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Ok(ChiSquareResult { statistic: 0.0, dof: 0, p_value: 1.0 });
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(ChiSquareResult { statistic: stat, dof, p_value: 1.0 - dist.cdf(stat) })
}

/// Total variation distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Ordinary least-squares slope and its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - my - slope * (a - mx);
            r * r
        })
        .sum();
    let se = if x.len() > 2 { (resid / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn pairwise_matches_exact_on_ill_conditioned_input() {
        let mut xs = vec![1e16, 1.0, -1e16];
        xs.extend(std::iter::repeat_n(1.0, 100));
        assert_eq!(pairwise_sum(&xs), 101.0);
    }

    #[test]
    fn pairwise_sum_is_order_insensitive_to_rounding_level() {
        let mut r = RngStream::new(1, 0).rng();
        let xs: Vec<f64> = (0..10_000).map(|_| r.random::<f64>() * 1e3).collect();
        let mut rev = xs.clone();
        rev.reverse();
        assert!((pairwise_sum(&xs) - pairwise_sum(&rev)).abs() < 1e-9);
    }

    #[test]
    fn mean_estimate_basic() {
        let e = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_known_values() {
        // Q(1.36) ≈ 0.0494, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 3e-4);
    }

    #[test]
    fn ks_accepts_uniform_rejects_shifted() {
        let mut r = RngStream::new(2, 0).rng();
        let xs: Vec<f64> = (0..5000).map(|_| r.random::<f64>()).collect();
        let ok = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ok.p_value > 0.01);
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.9).collect();
        let bad = ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(bad.p_value < 1e-6);
        let two = ks_two_sample(&xs[..2500], &xs[2500..]).unwrap();
        assert!(two.p_value > 0.01);
    }

    #[test]
    fn chi_square_pools_sparse_cells() {
        let res = chi_square_gof(&[50, 50, 0, 0], &[0.5, 0.5, 0.0, 0.0], 5.0).unwrap();
        assert_eq!(res.dof, 1);
        assert!(res.p_value > 0.99);
        assert!(chi_square_gof(&[90, 10], &[0.5, 0.5], 5.0).unwrap().p_value < 1e-10);
    }

    #[test]
    fn tv_and_slope() {
        assert!((tv_distance(&[0.5, 0.5], &[1.0 / 3.0, 2.0 / 3.0]) - 1.0 / 6.0).abs() < 1e-15);
        let (s, _) = ols_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-12);
    }
}
