//! Generic PDMP simulation: environment switching, flow between events,
//! state-dependent jumps by thinning and boundary-triggered resets.

use std::sync::Arc;

use rand::Rng;

use super::ctmc::{EnvClock, EnvPath, EnvSource};
use super::field::{SharedField, VectorField};
use super::ode::{hit_time, integrate_flow, IntegratorConfig, Region};
use super::rate::RateMatrix;
use super::trajectory::{Event, EventKind, Trajectory};
use crate::error::{Error, Result};
use crate::rng::{RngStream, SimRng};

/// A family of vector fields indexed by the state of an environment chain.
#[derive(Clone)]
pub struct SwitchedSystem {
    pub fields: Vec<SharedField>,
    pub env: RateMatrix,
    pub region: Region,
}

impl SwitchedSystem {
    pub fn new(fields: Vec<SharedField>, env: RateMatrix) -> Result<Self> {
        let sys = Self { fields, env, region: Region::Unbounded };
        sys.check()?;
        Ok(sys)
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    fn check(&self) -> Result<()> {
        if self.fields.is_empty() {
            return Err(Error::Config("switched system needs at least one field".into()));
        }
        if self.fields.len() != self.env.n_states() {
            return Err(Error::Config(format!(
                "{} fields for {} environment states",
                self.fields.len(),
                self.env.n_states()
            )));
        }
        let d = self.fields[0].dim();
        if self.fields.iter().any(|f| f.dim() != d) {
            return Err(Error::Config("all fields must share one dimension".into()));
        }
        Ok(())
    }
}

pub type RateFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;
pub type JumpKernel = Arc<dyn Fn(&[f64], usize, &mut SimRng) -> Vec<f64> + Send + Sync>;
pub type Functional = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Intensity of spontaneous jumps.
#[derive(Clone)]
pub enum JumpRate {
    Constant(f64),
    /// `rate(x, env)`, simulated by thinning against `majorant`.
    StateDependent {
        rate: RateFn,
        majorant: Option<f64>,
    },
}

#[derive(Clone)]
pub struct Jumps {
    pub rate: JumpRate,
    pub kernel: JumpKernel,
}

/// Forced jump when `functional` reaches zero along the flow.
#[derive(Clone)]
pub struct Boundary {
    pub functional: Functional,
    pub reset: JumpKernel,
}

/// What the engine writes into the trajectory besides events that change
/// the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub env_jumps: bool,
    /// Regular sampling interval.
    pub grid: Option<f64>,
}

impl Default for Recording {
    fn default() -> Self {
        Self { env_jumps: true, grid: None }
    }
}

#[derive(Clone)]
pub struct PdmpModel {
    pub system: SwitchedSystem,
    pub jumps: Option<Jumps>,
    pub boundary: Option<Boundary>,
    pub integrator: IntegratorConfig,
    /// Environment holding times are multiplied by this factor.
    pub env_time_scale: f64,
    pub record: Recording,
}

impl PdmpModel {
    pub fn new(system: SwitchedSystem) -> Self {
        let integrator = IntegratorConfig { region: system.region.clone(), ..IntegratorConfig::default() };
        Self { system, jumps: None, boundary: None, integrator, env_time_scale: 1.0, record: Recording::default() }
    }

    pub fn with_jumps(mut self, jumps: Jumps) -> Self {
        self.jumps = Some(jumps);
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = Some(boundary);
        self
    }

    pub fn with_recording(mut self, record: Recording) -> Self {
        self.record = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.system.check()?;
        if let Some(j) = &self.jumps {
            match &j.rate {
                JumpRate::Constant(r) if !(*r >= 0.0) || !r.is_finite() => {
                    return Err(Error::Config(format!("constant jump rate must be finite and ≥ 0, got {r}")))
                }
                JumpRate::StateDependent { majorant: None, .. } => {
                    return Err(Error::Config("state-dependent jump rate requires a thinning majorant".into()))
                }
                JumpRate::StateDependent { majorant: Some(m), .. } if !(*m > 0.0) || !m.is_finite() => {
                    return Err(Error::Config(format!("thinning majorant must be finite and > 0, got {m}")))
                }
                _ => {}
            }
        }
        if !(self.env_time_scale > 0.0) {
            return Err(Error::Config("environment time scale must be positive".into()));
        }
        if let Some(g) = self.record.grid {
            if !(g > 0.0) {
                return Err(Error::Config("recording grid must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Cursor over a recorded environment path.
struct PathCursor<'a> {
    path: &'a EnvPath,
    k: usize,
}

impl EnvSource for PathCursor<'_> {
    fn state(&self) -> usize {
        self.path.states[self.k]
    }

    fn segment_end(&self) -> f64 {
        self.path.times.get(self.k + 1).copied().unwrap_or(f64::INFINITY)
    }

    fn advance(&mut self) {
        if self.k + 1 < self.path.states.len() {
            self.k += 1;
        }
    }
}

fn exp_sample(rate: f64, rng: &mut SimRng) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn run<E: EnvSource>(model: &PdmpModel, x0: &[f64], mut env: E, horizon: f64, rng: &mut SimRng) -> Result<Trajectory> {
    model.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let sys = &model.system;
    if x0.len() != sys.dim() {
        return Err(Error::Domain("initial state has the wrong dimension".into()));
    }
    let cfg = &model.integrator;
    let mut tr = Trajectory::new(sys.dim());
    let mut x = x0.to_vec();
    let mut t = 0.0;
    tr.push_row(0.0, &x, env.state(), "init");

    let bound = match model.jumps.as_ref().map(|j| &j.rate) {
        Some(JumpRate::Constant(r)) => Some(*r).filter(|r| *r > 0.0),
        Some(JumpRate::StateDependent { majorant, .. }) => *majorant,
        None => None,
    };
    let mut proposal = bound.map(|b| exp_sample(b, rng)).unwrap_or(f64::INFINITY);
    let mut next_grid = model.record.grid.unwrap_or(f64::INFINITY);
    let mut stalled = 0usize;

    while t < horizon {
        let y = env.state();
        let field: &dyn VectorField = sys.fields[y].as_ref();
        let seg_end = env.segment_end().min(horizon);
        while t < seg_end {
            let target = seg_end.min(proposal).min(next_grid);
            if let Some(b) = &model.boundary {
                if let Some(hit) = hit_time(field, &x, b.functional.as_ref(), target - t, cfg)? {
                    if hit.time == 0.0 {
                        stalled += 1;
                        if stalled > 1000 {
                            return Err(Error::ModelViolation(format!(
                                "reset kernel keeps the state on the boundary at t = {t}"
                            )));
                        }
                    } else {
                        stalled = 0;
                    }
                    t = (t + hit.time).min(target);
                    tr.push_event(Event { time: t, kind: EventKind::BoundaryHit, env: y, pre: hit.state.clone() });
                    tr.push_row(t, &hit.state, y, EventKind::BoundaryHit.tag());
                    let post = (b.reset)(&hit.state, y, rng);
                    tr.push_event(Event { time: t, kind: EventKind::Reset, env: y, pre: hit.state });
                    tr.push_row(t, &post, y, EventKind::Reset.tag());
                    x = post;
                    continue;
                }
            }
            x = integrate_flow(field, &x, target - t, cfg)?;
            t = target;
            if t == proposal {
                let j = model.jumps.as_ref().expect("proposal implies jumps");
                let (accept, b) = match &j.rate {
                    JumpRate::Constant(r) => (true, *r),
                    JumpRate::StateDependent { rate, majorant } => {
                        let m = majorant.expect("validated");
                        let r = rate(&x, y);
                        if r > m * (1.0 + 1e-12) {
                            return Err(Error::MajorantViolated { rate: r, majorant: m, state: x });
                        }
                        (rng.random::<f64>() * m < r, m)
                    }
                };
                if accept {
                    let post = (j.kernel)(&x, y, rng);
                    tr.push_event(Event { time: t, kind: EventKind::Jump, env: y, pre: x.clone() });
                    tr.push_row(t, &post, y, EventKind::Jump.tag());
                    x = post;
                }
                proposal = t + exp_sample(b, rng);
            }
            if t == next_grid {
                tr.push_row(t, &x, y, "");
                next_grid += model.record.grid.expect("grid set");
            }
        }
        if env.segment_end() <= horizon {
            env.advance();
            if model.record.env_jumps {
                tr.push_event(Event { time: t, kind: EventKind::EnvJump, env: y, pre: x.clone() });
                tr.push_row(t, &x, env.state(), EventKind::EnvJump.tag());
            }
        }
    }
    tr.push_row(horizon, &x, env.state(), "");
    Ok(tr)
}

/// Simulate the PDMP on `[0, horizon]` from `(x0, y0)`.
///
/// The environment chain runs on its own sub-stream, so conditioning on the
/// environment path is exact and the jump randomness is unaffected by how
/// the environment is generated.
pub fn simulate_pdmp(model: &PdmpModel, x0: &[f64], y0: usize, horizon: f64, stream: &RngStream) -> Result<Trajectory> {
    let clock = EnvClock::new(&model.system.env, y0, 0.0, model.env_time_scale, stream.child(1).rng())?;
    let mut rng = stream.child(2).rng();
    run(model, x0, clock, horizon, &mut rng)
}

/// Simulate along a prescribed environment path.
pub fn simulate_pdmp_on_path(model: &PdmpModel, x0: &[f64], path: &EnvPath, stream: &RngStream) -> Result<Trajectory> {
    let mut rng = stream.child(2).rng();
    run(model, x0, PathCursor { path, k: 0 }, path.horizon, &mut rng)
}
