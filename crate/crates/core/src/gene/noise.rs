//! Concentration statistics along the cycle and the noise-versus-expression scan.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::lineage::{simulate_cell_lineage, LineageOptions};
use super::moments::{equilibrium_moments, moments_at_phase};
use super::GeneParams;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::stats::ols_slope;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub s: f64,
    pub mean_conc_m: f64,
    pub mean_conc_p: f64,
    pub cv_m: f64,
    pub cv_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
    /// Cycle average of E[P_s/V(s)] over the (uniform) phase grid.
    pub mu_p: f64,
    /// Half the peak-to-peak range of E[P_s/V(s)], relative to `mu_p`.
    pub fluctuation: f64,
}

impl ConcentrationTable {
    fn from_rows(rows: Vec<ConcentrationRow>) -> Self {
        let n = rows.len() as f64;
        let mu_p = rows.iter().map(|r| r.mean_conc_p).sum::<f64>() / n;
        let hi = rows.iter().map(|r| r.mean_conc_p).fold(f64::NEG_INFINITY, f64::max);
        let lo = rows.iter().map(|r| r.mean_conc_p).fold(f64::INFINITY, f64::min);
        Self { rows, mu_p, fluctuation: 0.5 * (hi - lo) / mu_p }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,mean_conc_M,mean_conc_P,cv_M,cv_P")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.s, r.mean_conc_m, r.mean_conc_p, r.cv_m, r.cv_p)?;
        }
        Ok(())
    }
}

fn uniform_grid(p: &GeneParams, n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) * p.tau_d / n as f64).collect()
}

fn row(p: &GeneParams, s: f64, em: f64, ep: f64, vm: f64, vp: f64) -> ConcentrationRow {
    let v = p.volume(s);
    ConcentrationRow { s, mean_conc_m: em / v, mean_conc_p: ep / v, cv_m: vm / (em * em), cv_p: vp / (ep * ep) }
}

/// Equilibrium concentration profile from the moment engine on `n_phases`
/// cell midpoints of [0, τD).
pub fn concentration_profile(p: &GeneParams, n_phases: usize) -> Result<ConcentrationTable> {
    if n_phases == 0 {
        return Err(Error::Domain("need at least one phase".into()));
    }
    let m0 = equilibrium_moments(p)?;
    let rows = uniform_grid(p, n_phases)
        .into_iter()
        .map(|s| {
            let m = moments_at_phase(p, &m0, s);
            row(p, s, m.em, m.ep, m.var_m, m.var_p)
        })
        .collect();
    Ok(ConcentrationTable::from_rows(rows))
}

/// Simulated concentration statistics on `n_phases` cell midpoints.
pub fn concentration_stats(
    p: &GeneParams,
    n_phases: usize,
    n_cycles: usize,
    opts: &LineageOptions,
    rng: &mut SimRng,
) -> Result<ConcentrationTable> {
    if n_phases == 0 || n_cycles < 2 {
        return Err(Error::Domain("need at least one phase and two cycles".into()));
    }
    let opts = LineageOptions { phase_grid: uniform_grid(p, n_phases), ..opts.clone() };
    let samples = simulate_cell_lineage(p, n_cycles, &opts, rng)?;
    let stat = |xs: &[u64]| {
        let n = xs.len() as f64;
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    };
    let rows = (0..n_phases)
        .map(|i| {
            let (em, vm) = stat(&samples.m[i]);
            let (ep, vp) = stat(&samples.p[i]);
            row(p, samples.phases[i], em, ep, vm, vp)
        })
        .collect();
    Ok(ConcentrationTable::from_rows(rows))
}

/// One point of the noise scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvPoint {
    pub params: GeneParams,
    pub mu_p: f64,
    pub cv2: f64,
}

/// Mean protein concentration and its squared coefficient of variation for
/// a cell observed at a uniformly random phase of its cycle.
pub fn global_noise(p: &GeneParams, n_phases: usize) -> Result<(f64, f64)> {
    let m0 = equilibrium_moments(p)?;
    let grid = uniform_grid(p, n_phases);
    let (mut first, mut second) = (0.0, 0.0);
    for &s in &grid {
        let m = moments_at_phase(p, &m0, s);
        let v = p.volume(s);
        first += m.ep / v;
        second += (m.var_p + m.ep * m.ep) / (v * v);
    }
    let n = grid.len() as f64;
    let mu = first / n;
    Ok((mu, (second / n - mu * mu) / (mu * mu)))
}

pub fn cv_scan(grid: &[GeneParams]) -> Result<Vec<CvPoint>> {
    grid.par_iter()
        .map(|p| {
            let (mu_p, cv2) = global_noise(p, 400)?;
            Ok(CvPoint { params: *p, mu_p, cv2 })
        })
        .collect()
}

/// `n` transcription rates, log-spaced over three decades, other
/// parameters fixed at bacterial-like values (time unit = one cycle).
pub fn default_cv_grid(n: usize) -> Vec<GeneParams> {
    let (lo, hi) = (0.1f64.ln(), 100f64.ln());
    (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            GeneParams {
                lambda1: (lo + t * (hi - lo)).exp(),
                sigma1: 20.0,
                lambda2: 200.0,
                tau_r: 0.4,
                tau_d: 1.0,
                v0: 1.0,
            }
        })
        .collect()
}

pub fn write_cv_csv<W: Write>(points: &[CvPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "lambda1,sigma1,lambda2,tauR,tauD,V0,mu_p,cv2")?;
    for c in points {
        let p = &c.params;
        writeln!(w, "{},{},{},{},{},{},{},{}", p.lambda1, p.sigma1, p.lambda2, p.tau_r, p.tau_d, p.v0, c.mu_p, c.cv2)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvTrend {
    /// Log-log slope of CV² against μ_p over all points.
    pub slope: f64,
    /// Same slope restricted to the highest-expression third.
    pub upper_slope: f64,
    /// CV² strictly decreases as μ_p increases.
    pub monotone: bool,
    pub passed: bool,
}

pub fn cv_trend(points: &[CvPoint], slope_range: (f64, f64)) -> Result<CvTrend> {
    if points.len() < 6 {
        return Err(Error::Empty("need at least six scan points".into()));
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|c| (c.mu_p.ln(), c.cv2.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let (slope, _) = ols_slope(&x, &y);
    let k = pts.len() - pts.len() / 3;
    let (upper_slope, _) = ols_slope(&x[k..], &y[k..]);
    let monotone = y.windows(2).all(|w| w[1] < w[0]);
    let inside = |s: f64| s >= slope_range.0 && s <= slope_range.1;
    Ok(CvTrend { slope, upper_slope, monotone, passed: monotone && inside(slope) && inside(upper_slope) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_fluctuates_a_few_percent() {
        let p = GeneParams::new(2.0, 20.0, 200.0, 0.4, 1.0, 1.0).unwrap();
        let t = concentration_profile(&p, 100).unwrap();
        assert!(t.fluctuation > 0.001 && t.fluctuation < 0.1, "{}", t.fluctuation);
    }

    #[test]
    fn default_scan_has_inverse_trend() {
        let pts = cv_scan(&default_cv_grid(20)).unwrap();
        let tr = cv_trend(&pts, (-1.3, -0.7)).unwrap();
        assert!(tr.passed, "{tr:?}");
    }
}
