//! Exact simulation of the environment chain.

use rand::Rng;

use super::rate::RateMatrix;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Sample the holding time and next state out of `state`.
///
/// Returns `None` for an absorbing state.
pub fn next_jump(q: &RateMatrix, state: usize, rng: &mut SimRng) -> Option<(f64, usize)> {
    let out = q.exit_rate(state);
    if out <= 0.0 {
        return None;
    }
    let hold = -(1.0 - rng.random::<f64>()).ln() / out;
    let mut u = rng.random::<f64>() * out;
    let n = q.n_states();
    let mut next = state;
    for j in 0..n {
        if j == state {
            continue;
        }
        let r = q.rate(state, j);
        next = j;
        if u < r {
            break;
        }
        u -= r;
    }
    // floating-point slack can leave `next` pointing at a zero-rate state
    if q.rate(state, next) <= 0.0 {
        next = (0..n).rev().find(|&j| j != state && q.rate(state, j) > 0.0).expect("positive exit rate");
    }
    Some((hold, next))
}

/// Source of environment segments consumed by the PDMP engine.
pub trait EnvSource {
    /// Current environment state.
    fn state(&self) -> usize;
    /// Absolute time at which the current state is left (may be infinite).
    fn segment_end(&self) -> f64;
    /// Move to the next segment.
    fn advance(&mut self);
}

/// Environment chain simulated on the fly, optionally on a rescaled clock:
/// holding times are multiplied by `time_scale`, so `Y_ε(t) = Y(t/ε)` is
/// obtained with `time_scale = ε`.
pub struct EnvClock<'a> {
    q: &'a RateMatrix,
    time_scale: f64,
    state: usize,
    seg_end: f64,
    next_state: Option<usize>,
    rng: SimRng,
}

impl<'a> EnvClock<'a> {
    pub fn new(q: &'a RateMatrix, y0: usize, start: f64, time_scale: f64, rng: SimRng) -> Result<Self> {
        if y0 >= q.n_states() {
            return Err(Error::Domain(format!("initial state {y0} not in 0..{}", q.n_states())));
        }
        if !(time_scale > 0.0) {
            return Err(Error::Domain("time scale must be positive".into()));
        }
        let mut c = Self { q, time_scale, state: y0, seg_end: start, next_state: None, rng };
        c.draw(start);
        Ok(c)
    }

    fn draw(&mut self, from: f64) {
        match next_jump(self.q, self.state, &mut self.rng) {
            Some((h, nxt)) => {
                self.seg_end = from + h * self.time_scale;
                self.next_state = Some(nxt);
            }
            None => {
                self.seg_end = f64::INFINITY;
                self.next_state = None;
            }
        }
    }
}

impl EnvSource for EnvClock<'_> {
    fn state(&self) -> usize {
        self.state
    }

    fn segment_end(&self) -> f64 {
        self.seg_end
    }

    fn advance(&mut self) {
        if let Some(nxt) = self.next_state {
            let t = self.seg_end;
            self.state = nxt;
            self.draw(t);
        }
    }
}

/// A recorded environment path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvPath {
    /// Segment start times; `times[0] == 0`.
    pub times: Vec<f64>,
    /// State on `[times[k], times[k+1])`.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl EnvPath {
    /// Iterate `(start, end, state)` segments clipped to the horizon.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        (0..self.states.len()).map(move |k| {
            let end = self.times.get(k + 1).copied().unwrap_or(self.horizon);
            (self.times[k], end, self.states[k])
        })
    }

    pub fn state_at(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        self.states[k.saturating_sub(1)]
    }

    pub fn n_jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Fraction of `[0, horizon]` spent in each state.
    pub fn occupation(&self, n_states: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n_states];
        for (a, b, s) in self.segments() {
            occ[s] += b - a;
        }
        occ.iter_mut().for_each(|x| *x /= self.horizon);
        occ
    }

    /// ∫₀^horizon f(I_s) ds.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut acc = crate::stats::NeumaierSum::default();
        for (a, b, s) in self.segments() {
            acc.add(f(s) * (b - a));
        }
        acc.value()
    }
}

/// Jump-chain simulation of the generator `q` from `y0` up to `horizon`.
pub fn simulate_ctmc(q: &RateMatrix, y0: usize, horizon: f64, rng: SimRng) -> Result<EnvPath> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let mut clock = EnvClock::new(q, y0, 0.0, 1.0, rng)?;
    let mut times = vec![0.0];
    let mut states = vec![y0];
    while clock.segment_end() < horizon {
        let t = clock.segment_end();
        clock.advance();
        times.push(t);
        states.push(clock.state());
    }
    Ok(EnvPath { times, states, horizon })
}
