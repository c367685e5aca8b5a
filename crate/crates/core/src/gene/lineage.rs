//! Exact simulation of a single lineage (one daughter followed at each
//! division).

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1};

use super::GeneParams;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::stats::MeanEstimate;

#[derive(Debug, Clone)]
pub struct LineageOptions {
    /// Cycles simulated and discarded before recording.
    pub burn_in: usize,
    /// Phases in [0, τD) at which the state is recorded every cycle.
    pub phase_grid: Vec<f64>,
    pub count_cap: u64,
    /// (M, P) at the start of the first cycle.
    pub initial: (u64, u64),
}

impl Default for LineageOptions {
    fn default() -> Self {
        Self { burn_in: 50, phase_grid: vec![0.0], count_cap: 1 << 40, initial: (0, 0) }
    }
}

/// Per-phase recorded counts; `m[i][c]` is the mRNA count at phase `i` in cycle `c`.
#[derive(Debug, Clone)]
pub struct LineageSamples {
    pub phases: Vec<f64>,
    pub m: Vec<Vec<u64>>,
    pub p: Vec<Vec<u64>>,
}

/// Batch-means estimates of the five moments at one phase.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub em: MeanEstimate,
    pub ep: MeanEstimate,
    pub var_m: MeanEstimate,
    pub var_p: MeanEstimate,
    pub cov_mp: MeanEstimate,
}

impl MomentEstimate {
    pub fn components(&self) -> [MeanEstimate; 5] {
        [self.em, self.ep, self.var_m, self.var_p, self.cov_mp]
    }
}

impl LineageSamples {
    pub fn n_cycles(&self) -> usize {
        self.m.first().map_or(0, |v| v.len())
    }

    /// Moment estimates at phase index `i`; each batch of consecutive cycles
    /// contributes one sample mean, variance and covariance.
    pub fn moments(&self, i: usize, n_batches: usize) -> MomentEstimate {
        let n = self.n_cycles();
        let size = (n / n_batches.max(1)).max(2);
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (ms, ps) in self.m[i].chunks_exact(size).zip(self.p[i].chunks_exact(size)) {
            let k = ms.len() as f64;
            let mm = ms.iter().map(|&x| x as f64).sum::<f64>() / k;
            let mp = ps.iter().map(|&x| x as f64).sum::<f64>() / k;
            let (mut vm, mut vp, mut c) = (0.0, 0.0, 0.0);
            for (&a, &b) in ms.iter().zip(ps) {
                let (da, db) = (a as f64 - mm, b as f64 - mp);
                vm += da * da;
                vp += db * db;
                c += da * db;
            }
            let d = k - 1.0;
            for (col, v) in cols.iter_mut().zip([mm, mp, vm / d, vp / d, c / d]) {
                col.push(v);
            }
        }
        let [a, b, c, d, e] = cols.map(|v| MeanEstimate::from_samples(&v));
        MomentEstimate { em: a, ep: b, var_m: c, var_p: d, cov_mp: e }
    }
}

#[derive(Clone, Copy)]
enum Mark {
    Record(usize),
    Replicate,
    Divide,
}

struct Cell {
    m: u64,
    p: u64,
}

fn advance(cell: &mut Cell, par: &GeneParams, k: f64, from: f64, to: f64, cap: u64, rng: &mut SimRng) -> Result<()> {
    let mut s = from;
    loop {
        let deg = par.sigma1 * cell.m as f64;
        let tr = par.lambda2 * cell.m as f64;
        let total = k + deg + tr;
        let e: f64 = Exp1.sample(rng);
        s += e / total;
        if s >= to {
            return Ok(());
        }
        let u = rng.random::<f64>() * total;
        if u < k {
            cell.m += 1;
        } else if u < k + deg {
            cell.m -= 1;
        } else {
            cell.p += 1;
        }
        if cell.m > cap || cell.p > cap {
            return Err(Error::CountOverflow { cap });
        }
    }
}

fn halve(n: u64, rng: &mut SimRng) -> u64 {
    if n == 0 {
        0
    } else {
        Binomial::new(n, 0.5).expect("valid binomial").sample(rng)
    }
}

/// Simulate `burn_in + n_cycles` cycles and record the last `n_cycles`.
pub fn simulate_cell_lineage(
    p: &GeneParams,
    n_cycles: usize,
    opts: &LineageOptions,
    rng: &mut SimRng,
) -> Result<LineageSamples> {
    p.validate()?;
    if n_cycles == 0 {
        return Err(Error::Domain("n_cycles must be at least 1".into()));
    }
    if opts.phase_grid.iter().any(|&s| !(s >= 0.0 && s < p.tau_d)) {
        return Err(Error::Domain(format!("recording phases must lie in [0, {})", p.tau_d)));
    }
    let mut marks: Vec<(f64, Mark)> = opts.phase_grid.iter().enumerate().map(|(i, &s)| (s, Mark::Record(i))).collect();
    marks.push((p.tau_r, Mark::Replicate));
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));
    marks.push((p.tau_d, Mark::Divide));

    let n_ph = opts.phase_grid.len();
    let mut out = LineageSamples {
        phases: opts.phase_grid.clone(),
        m: vec![Vec::with_capacity(n_cycles); n_ph],
        p: vec![Vec::with_capacity(n_cycles); n_ph],
    };
    let mut cell = Cell { m: opts.initial.0, p: opts.initial.1 };
    for cycle in 0..opts.burn_in + n_cycles {
        let record = cycle >= opts.burn_in;
        let mut s = 0.0;
        let mut k = p.lambda1;
        for &(at, mark) in &marks {
            if at > s {
                advance(&mut cell, p, k, s, at, opts.count_cap, rng)?;
                s = at;
            }
            match mark {
                Mark::Record(i) if record => {
                    out.m[i].push(cell.m);
                    out.p[i].push(cell.p);
                }
                Mark::Record(_) => {}
                Mark::Replicate => k = 2.0 * p.lambda1,
                Mark::Divide => {
                    cell.m = halve(cell.m, rng);
                    cell.p = halve(cell.p, rng);
                }
            }
        }
    }
    Ok(out)
}
