//! Slow-fast integrate-and-fire dynamics: the potential grows at a celerity
//! set by a fast environment, is reset on reaching a threshold, and its
//! fast-switching limit is an averaged flow with a celerity-biased reset law.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mc::try_replicas;
use crate::pdmp::{
    hit_time, integrate_flow, simulate_pdmp, Boundary, ConstantField, EventKind, FnField, IntegratorConfig, PdmpModel,
    RateMatrix, Recording, Region, ScaledField, SharedField, SwitchedSystem, Trajectory,
};
use crate::rng::{RngStream, SimRng};
use crate::stats::{ks_one_sample, median, tv_distance, KsResult};

/// Law of the reset value.
#[derive(Debug, Clone, PartialEq)]
pub enum ResetLaw {
    Uniform { lo: f64, hi: f64 },
    Point(f64),
}

impl ResetLaw {
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            ResetLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ResetLaw::Point(v) => *v,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ResetLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ResetLaw::Point(v) => {
                if x >= *v {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ResetLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            ResetLaw::Point(v) => *v,
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            ResetLaw::Uniform { lo, hi } => (*lo, *hi),
            ResetLaw::Point(v) => (*v, *v),
        }
    }
}

/// The scalar drive F.
#[derive(Clone)]
pub enum Drive {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Drive {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Drive::Constant(c) => write!(f, "Constant({c})"),
            Drive::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Drive {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Drive::Constant(c) => *c,
            Drive::Function(g) => g(x),
        }
    }

    /// Field `x ↦ a·F(x)`.
    pub fn field(&self, a: f64) -> SharedField {
        match self {
            Drive::Constant(c) => Arc::new(ConstantField(vec![a * c])),
            Drive::Function(g) => {
                let g = g.clone();
                Arc::new(ScaledField::new(Arc::new(FnField::new(1, move |x, out| out[0] = g(x[0]))), a))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IFSpec {
    pub env: RateMatrix,
    pub alpha: Vec<f64>,
    pub drive: Drive,
    pub m: f64,
    pub c: f64,
    pub resets: Vec<ResetLaw>,
    pub initial: ResetLaw,
    pub epsilon: f64,
}

impl IFSpec {
    /// Piecewise-linear instance: F ≡ 1, two celerities, unit symmetric
    /// switching, threshold 1, floor 0.
    pub fn piecewise_linear(alpha: [f64; 2], resets: [ResetLaw; 2], epsilon: f64) -> Result<Self> {
        let s = Self {
            env: RateMatrix::symmetric_two_state(1.0)?,
            alpha: alpha.to_vec(),
            drive: Drive::Constant(1.0),
            m: 0.0,
            c: 1.0,
            resets: resets.to_vec(),
            initial: ResetLaw::Uniform { lo: 0.0, hi: 0.5 },
            epsilon,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.env.n_states();
        if self.alpha.len() != n || self.resets.len() != n {
            return Err(Error::Config(format!("celerities and reset laws must have one entry per state ({n})")));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Config("celerities must be positive and finite".into()));
        }
        if !(self.m < self.c) {
            return Err(Error::Config(format!("need m < c, got m = {}, c = {}", self.m, self.c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("ε must be positive".into()));
        }
        for law in self.resets.iter().chain(std::iter::once(&self.initial)) {
            let (lo, hi) = law.support();
            if let ResetLaw::Uniform { lo, hi } = law {
                if !(hi > lo) {
                    return Err(Error::Config("uniform reset law needs lo < hi".into()));
                }
            }
            if lo < self.m || hi > self.c || (lo == hi && (lo <= self.m || lo >= self.c)) {
                return Err(Error::Config(format!("reset law {law:?} is not supported in (m, c)")));
            }
        }
        Ok(())
    }

    /// Largest ∫ dx/F over `[m+δ, c−δ]` for shrinking δ, with a flag set
    /// when the sequence keeps growing (1/F likely not integrable).
    pub fn integrability_check(&self) -> (f64, bool) {
        let mut vals = Vec::new();
        for k in 1..=6 {
            let delta = (self.c - self.m) * 10f64.powi(-k - 1);
            let (a, b) = (self.m + delta, self.c - delta);
            let n = 2000;
            let h = (b - a) / n as f64;
            let mut s = 0.5 * (1.0 / self.drive.eval(a) + 1.0 / self.drive.eval(b));
            for i in 1..n {
                s += 1.0 / self.drive.eval(a + i as f64 * h);
            }
            vals.push(s * h);
        }
        let last = *vals.last().expect("non-empty");
        let prev = vals[vals.len() - 2];
        (last, (last - prev).abs() > 1e-3 * last.abs().max(1.0))
    }

    fn sample_in_range(&self, law: &ResetLaw, rng: &mut SimRng) -> f64 {
        loop {
            let v = law.sample(rng);
            if v > self.m && v < self.c {
                return v;
            }
        }
    }
}

/// One boundary hit and the reset that follows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IFEvent {
    pub time: f64,
    pub env: usize,
    pub reset: f64,
}

#[derive(Debug, Clone)]
pub struct IFRun {
    pub xi0: f64,
    pub trajectory: Trajectory,
    pub events: Vec<IFEvent>,
}

fn if_model(spec: &IFSpec, record_env: bool, grid: Option<f64>) -> Result<PdmpModel> {
    spec.validate()?;
    let fields: Vec<SharedField> = spec.alpha.iter().map(|&a| spec.drive.field(a)).collect();
    let region = Region::Box { lo: vec![spec.m], hi: vec![f64::INFINITY] };
    let sys = SwitchedSystem::new(fields, spec.env.clone())?.with_region(region);
    let c = spec.c;
    let resets = spec.resets.clone();
    let reset_spec = spec.clone();
    let mut model = PdmpModel::new(sys)
        .with_boundary(Boundary {
            functional: Arc::new(move |x| x[0] - c),
            reset: Arc::new(move |_, y, rng| vec![reset_spec.sample_in_range(&resets[y], rng)]),
        })
        .with_recording(Recording { env_jumps: record_env, grid });
    model.env_time_scale = spec.epsilon;
    Ok(model)
}

fn collect_events(tr: &Trajectory) -> Vec<IFEvent> {
    let resets: Vec<f64> = tr.states.iter().zip(&tr.tags).filter(|(_, t)| **t == "reset").map(|(x, _)| x[0]).collect();
    tr.events_of(EventKind::BoundaryHit)
        .zip(resets)
        .map(|(e, r)| IFEvent { time: e.time, env: e.env, reset: r })
        .collect()
}

fn run_if(spec: &IFSpec, horizon: f64, stream: &RngStream, record_env: bool, grid: Option<f64>) -> Result<IFRun> {
    let model = if_model(spec, record_env, grid)?;
    let mut rng = stream.child(3).rng();
    let xi0 = spec.sample_in_range(&spec.initial, &mut rng);
    let y0 = crate::rng::sample_index(&spec.env.stationary_distribution()?, &mut rng);
    let trajectory = match simulate_pdmp(&model, &[xi0], y0, horizon, stream) {
        Ok(t) => t,
        Err(Error::LeftRegion { time, state }) => {
            return Err(Error::ModelViolation(format!("potential reached the floor m at t = {time} ({state:?})")))
        }
        Err(e) => return Err(e),
    };
    let events = collect_events(&trajectory);
    Ok(IFRun { xi0, trajectory, events })
}

/// Simulate on `[0, horizon]` from ξ0 drawn from the initial law and the
/// environment started from its stationary law. Environment switches are
/// recorded in the trajectory only when `record_env` is set.
pub fn simulate_if(spec: &IFSpec, horizon: f64, stream: &RngStream, record_env: bool) -> Result<IFRun> {
    run_if(spec, horizon, stream, record_env, None)
}

/// π*(y) = π(y)α(y) / Σ π α.
pub fn pi_star(pi: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    if pi.len() != alpha.len() || pi.is_empty() {
        return Err(Error::Domain("π and α must have the same non-zero length".into()));
    }
    if alpha.iter().any(|a| !(*a > 0.0)) || pi.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Domain("need π ≥ 0 and α > 0".into()));
    }
    let w: Vec<f64> = pi.iter().zip(alpha).map(|(p, a)| p * a).collect();
    let s: f64 = w.iter().sum();
    if !(s > 0.0) {
        return Err(Error::Domain("π α has zero mass".into()));
    }
    Ok(w.into_iter().map(|v| v / s).collect())
}

/// Empirical law of the environment state at boundary hits.
pub fn boundary_celerity_histogram(events: &[IFEvent], n_states: usize) -> Result<Vec<f64>> {
    if events.is_empty() {
        return Err(Error::Empty("no boundary hits".into()));
    }
    let mut h = vec![0.0; n_states];
    for e in events {
        h[e.env] += 1.0;
    }
    let n = events.len() as f64;
    Ok(h.into_iter().map(|c| c / n).collect())
}

/// Mixture law Σ w_y μ_y.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureLaw {
    pub weights: Vec<f64>,
    pub laws: Vec<ResetLaw>,
}

impl MixtureLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        self.weights.iter().zip(&self.laws).map(|(w, l)| w * l.cdf(x)).sum()
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        let mut u = rng.random::<f64>();
        for (w, l) in self.weights.iter().zip(&self.laws) {
            if u < *w {
                return l.sample(rng);
            }
            u -= w;
        }
        self.laws.last().expect("non-empty").sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSpec {
    pub alpha_bar: f64,
    pub pi_star: Vec<f64>,
    pub mu_bar: MixtureLaw,
}

pub fn averaged_jump_measure(spec: &IFSpec) -> Result<AveragedSpec> {
    spec.validate()?;
    let pi = spec.env.stationary_distribution()?;
    let alpha_bar = pi.iter().zip(&spec.alpha).map(|(p, a)| p * a).sum();
    let ps = pi_star(&pi, &spec.alpha)?;
    Ok(AveragedSpec { alpha_bar, mu_bar: MixtureLaw { weights: ps.clone(), laws: spec.resets.clone() }, pi_star: ps })
}

/// KS comparison of observed reset values with μ̄.
pub fn compare_resets(avg: &AveragedSpec, events: &[IFEvent]) -> Result<KsResult> {
    let r: Vec<f64> = events.iter().map(|e| e.reset).collect();
    ks_one_sample(&r, |x| avg.mu_bar.cdf(x))
}

fn averaged_field(spec: &IFSpec, alpha_bar: f64) -> SharedField {
    spec.drive.field(alpha_bar)
}

/// X̄(t) from `x0` under `dX̄/dt = ᾱ F(X̄)`.
pub fn averaged_flow(spec: &IFSpec, x0: f64, t: f64) -> Result<f64> {
    let avg = averaged_jump_measure(spec)?;
    let f = averaged_field(spec, avg.alpha_bar);
    Ok(integrate_flow(f.as_ref(), &[x0], t, &IntegratorConfig::default())?[0])
}

/// Time for X̄ to reach c from `x0`.
pub fn averaged_hit_time(spec: &IFSpec, x0: f64) -> Result<f64> {
    let avg = averaged_jump_measure(spec)?;
    let f = averaged_field(spec, avg.alpha_bar);
    let c = spec.c;
    let mut horizon = 1.0;
    loop {
        if let Some(h) = hit_time(f.as_ref(), &[x0], &|x| x[0] - c, horizon, &IntegratorConfig::default())? {
            return Ok(h.time);
        }
        horizon *= 4.0;
        if horizon > 1e9 {
            return Err(Error::Numerical("averaged flow does not reach the threshold".into()));
        }
    }
}

/// sup over a grid on `[0, 0.9 t̄]` of |X_ε − X̄| for one replica, where t̄
/// is the hit time of X̄ from the same ξ0.
pub fn prehit_sup_distance(spec: &IFSpec, stream: &RngStream) -> Result<f64> {
    let mut rng = stream.child(3).rng();
    let xi0 = spec.sample_in_range(&spec.initial, &mut rng);
    let t_end = 0.9 * averaged_hit_time(spec, xi0)?;
    let run = run_if(spec, t_end, stream, true, Some(t_end / 1000.0))?;
    let avg = averaged_jump_measure(spec)?;
    let f = averaged_field(spec, avg.alpha_bar);
    let mut sup: f64 = 0.0;
    for (t, x) in run.trajectory.times.iter().zip(&run.trajectory.states) {
        let xb = match f.closed_form(&[xi0], *t) {
            Some(v) => v[0],
            None => integrate_flow(f.as_ref(), &[xi0], *t, &IntegratorConfig::default())?[0],
        };
        sup = sup.max((x[0] - xb).abs());
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub n_hits: usize,
    pub tv_pi_star: f64,
    /// Rough standard error of the TV column (binomial, hits treated as independent).
    pub tv_se: f64,
    pub ks_mu_bar: f64,
    pub ks_p_value: f64,
    pub sup_dist_prehit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// TV at the largest ε exceeds TV at the smallest by more than 1.645 SE
    /// and never increases by more than 3 SE between consecutive ε.
    pub tv_decreasing: bool,
    /// Median sup-distance never increases along the schedule.
    pub sup_dist_decreasing: bool,
}

impl ConvergenceStudy {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epsilon,n_hits,tv_pi_star,ks_mu_bar,sup_dist_prehit")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.epsilon, r.n_hits, r.tv_pi_star, r.ks_mu_bar, r.sup_dist_prehit)?;
        }
        Ok(())
    }
}

/// Hit-based statistics at one ε, pooled over `n_rep` runs of length `horizon`.
pub fn hit_statistics(
    spec: &IFSpec,
    horizon: f64,
    n_rep: u64,
    stream: &RngStream,
) -> Result<(Vec<IFEvent>, f64, f64, KsResult)> {
    let runs = try_replicas(stream, n_rep, |s| simulate_if(spec, horizon, &s, false).map(|r| r.events))?;
    let events: Vec<IFEvent> = runs.into_iter().flatten().collect();
    let avg = averaged_jump_measure(spec)?;
    let hist = boundary_celerity_histogram(&events, spec.alpha.len())?;
    let tv = tv_distance(&hist, &avg.pi_star);
    let n = events.len() as f64;
    let se = 0.5 * avg.pi_star.iter().map(|p| (p * (1.0 - p) / n).sqrt()).sum::<f64>();
    let ks = compare_resets(&avg, &events)?;
    Ok((events, tv, se, ks))
}

/// Hit, reset and pre-hit statistics along a decreasing ε schedule.
pub fn convergence_study(
    spec: &IFSpec,
    schedule: &[f64],
    horizon: f64,
    n_rep: u64,
    n_prehit: u64,
    stream: &RngStream,
) -> Result<ConvergenceStudy> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain("ε schedule must be non-empty and strictly decreasing".into()));
    }
    let mut rows = Vec::new();
    for (k, &eps) in schedule.iter().enumerate() {
        let s = spec.with_epsilon(eps);
        let (events, tv, se, ks) = hit_statistics(&s, horizon, n_rep, &stream.child(2 * k as u64))?;
        let sups = try_replicas(&stream.child(2 * k as u64 + 1), n_prehit, |r| prehit_sup_distance(&s, &r))?;
        rows.push(ConvergenceRow {
            epsilon: eps,
            n_hits: events.len(),
            tv_pi_star: tv,
            tv_se: se,
            ks_mu_bar: ks.statistic,
            ks_p_value: ks.p_value,
            sup_dist_prehit: if sups.is_empty() { f64::NAN } else { median(&sups) },
        });
    }
    let first = &rows[0];
    let last = rows.last().expect("non-empty");
    let overall = first.tv_pi_star - last.tv_pi_star > 1.645 * (first.tv_se.powi(2) + last.tv_se.powi(2)).sqrt();
    let steps = rows
        .windows(2)
        .all(|w| w[1].tv_pi_star - w[0].tv_pi_star <= 3.0 * (w[0].tv_se.powi(2) + w[1].tv_se.powi(2)).sqrt());
    let sup_dist_decreasing = rows.windows(2).all(|w| !(w[1].sup_dist_prehit > w[0].sup_dist_prehit));
    Ok(ConvergenceStudy { rows, tv_decreasing: overall && steps, sup_dist_decreasing })
}
