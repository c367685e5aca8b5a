use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Generator of a finite continuous-time Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    q: DMatrix<f64>,
    irreducible: bool,
}

impl RateMatrix {
    /// Build from a full generator; each row must sum to zero.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Domain("rate matrix needs at least one state".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("rate matrix must be square".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Domain(format!("rate q[{i}][{j}] is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(Error::Domain(format!("off-diagonal rate q[{i}][{j}] = {v} is negative")));
                }
            }
            let s: f64 = row.iter().sum();
            let scale = row.iter().map(|x| x.abs()).fold(1.0, f64::max);
            if s.abs() > 1e-12 * scale {
                return Err(Error::Domain(format!("row {i} of the generator sums to {s}, not 0")));
            }
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self::from_checked(q))
    }

    /// Build from off-diagonal rates only; diagonal entries are ignored and
    /// recomputed as minus the row sum.
    pub fn from_off_diagonal(rates: &[Vec<f64>]) -> Result<Self> {
        let n = rates.len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            if rates[i].len() != n {
                return Err(Error::Domain("rate matrix must be square".into()));
            }
            let mut out = 0.0;
            for j in 0..n {
                if i != j {
                    rows[i][j] = rates[i][j];
                    out += rates[i][j];
                }
            }
            rows[i][i] = -out;
        }
        Self::new(rows)
    }

    /// Two states exchanging at the same rate in both directions.
    pub fn symmetric_two_state(rate: f64) -> Result<Self> {
        Self::new(vec![vec![-rate, rate], vec![rate, -rate]])
    }

    /// A single absorbing state.
    pub fn trivial() -> Self {
        Self::from_checked(DMatrix::zeros(1, 1))
    }

    fn from_checked(q: DMatrix<f64>) -> Self {
        let irreducible = unreachable_from(&q, 0).is_empty() && unreachable_to(&q, 0).is_empty();
        Self { q, irreducible }
    }

    pub fn n_states(&self) -> usize {
        self.q.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[(from, to)]
    }

    /// Total rate of leaving `state`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.q[(state, state)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Generator with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Domain(format!("rate scale factor must be positive, got {factor}")));
        }
        Ok(Self { q: &self.q * factor, irreducible: self.irreducible })
    }

    /// Unique invariant law ν with νQ = 0 and Σν = 1.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let n = self.n_states();
        if !self.irreducible {
            let fwd = unreachable_from(&self.q, 0);
            let bwd = unreachable_to(&self.q, 0);
            let detail = if !fwd.is_empty() {
                format!("states {fwd:?} are unreachable from state 0")
            } else {
                format!("state 0 is unreachable from states {bwd:?}")
            };
            return Err(Error::Reducible(detail));
        }
        // Transposed system with the last equation replaced by normalization.
        let mut a = self.q.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let nu = linalg::solve(&a, &b)?;
        let nu: Vec<f64> = nu.iter().copied().collect();
        let resid = self.residual(&nu);
        let scale = self.q.amax().max(1.0);
        if resid > 1e-10 * scale || nu.iter().any(|&x| x <= 0.0) {
            return Err(Error::Numerical(format!("stationary solve inaccurate (residual {resid:e})")));
        }
        Ok(nu)
    }

    /// max |(νQ)_j|.
    pub fn residual(&self, nu: &[f64]) -> f64 {
        let n = self.n_states();
        (0..n).map(|j| (0..n).map(|i| nu[i] * self.q[(i, j)]).sum::<f64>().abs()).fold(0.0, f64::max)
    }
}

fn reach(q: &DMatrix<f64>, start: usize, forward: bool) -> Vec<bool> {
    let n = q.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let r = if forward { q[(i, j)] } else { q[(j, i)] };
            if i != j && r > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn unreachable_from(q: &DMatrix<f64>, s: usize) -> Vec<usize> {
    reach(q, s, true).iter().enumerate().filter(|(_, &r)| !r).map(|(i, _)| i).collect()
}

fn unreachable_to(q: &DMatrix<f64>, s: usize) -> Vec<usize> {
    reach(q, s, false).iter().enumerate().filter(|(_, &r)| !r).map(|(i, _)| i).collect()
}
