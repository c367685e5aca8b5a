//! Classical fourth-order Runge–Kutta integration with boundary location.

use super::field::VectorField;
use crate::error::{Error, Result};

/// Step-size policy.
#[derive(Debug, Clone, PartialEq)]
pub enum StepControl {
    /// Constant step `h` (the last step of an interval is shortened).
    Fixed { h: f64 },
    /// Step doubling with Richardson extrapolation.
    Adaptive { h_init: f64, rel_tol: f64, abs_tol: f64, h_min: f64, h_max: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Fixed { h: 1e-3 }
    }
}

impl StepControl {
    pub fn adaptive() -> Self {
        StepControl::Adaptive { h_init: 1e-3, rel_tol: 1e-9, abs_tol: 1e-12, h_min: 1e-12, h_max: 0.1 }
    }
}

/// Admissible state region.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Region {
    #[default]
    Unbounded,
    PositiveOrthant,
    /// Closed box `lo ≤ x ≤ hi` componentwise (bounds may be infinite).
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Unbounded => x.iter().all(|v| v.is_finite()),
            Region::PositiveOrthant => x.iter().all(|&v| v >= 0.0 && v.is_finite()),
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(&v, (&a, &b))| v >= a && v <= b),
        }
    }

    /// True when the region has empty interior.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Region::Box { lo, hi } => lo.iter().zip(hi).any(|(a, b)| !(b > a)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntegratorConfig {
    pub step: StepControl,
    pub region: Region,
}

impl IntegratorConfig {
    pub fn fixed(h: f64) -> Self {
        Self { step: StepControl::Fixed { h }, region: Region::Unbounded }
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }
}

struct Rk4<'a> {
    f: &'a dyn VectorField,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    fn new(f: &'a dyn VectorField) -> Self {
        let d = f.dim();
        Self { f, k1: vec![0.0; d], k2: vec![0.0; d], k3: vec![0.0; d], k4: vec![0.0; d], tmp: vec![0.0; d] }
    }

    fn step(&mut self, x: &[f64], h: f64, out: &mut [f64]) {
        let d = x.len();
        self.f.eval(x, &mut self.k1);
        for i in 0..d {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        self.f.eval(&self.tmp, &mut self.k2);
        for i in 0..d {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        self.f.eval(&self.tmp, &mut self.k3);
        for i in 0..d {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        self.f.eval(&self.tmp, &mut self.k4);
        for i in 0..d {
            out[i] = x[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Walks the flow forward one accepted step at a time.
struct Stepper<'a> {
    rk: Rk4<'a>,
    cfg: &'a IntegratorConfig,
    h: f64,
    half: Vec<f64>,
    full: Vec<f64>,
    twice: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(f: &'a dyn VectorField, cfg: &'a IntegratorConfig) -> Self {
        let d = f.dim();
        let h = match cfg.step {
            StepControl::Fixed { h } => h,
            StepControl::Adaptive { h_init, .. } => h_init,
        };
        Self { rk: Rk4::new(f), cfg, h, half: vec![0.0; d], full: vec![0.0; d], twice: vec![0.0; d] }
    }

    /// Advance `x` by one step of at most `remaining`; returns the step taken.
    fn advance(&mut self, x: &mut [f64], remaining: f64) -> Result<f64> {
        match self.cfg.step {
            StepControl::Fixed { h } => {
                let dt = if remaining <= h * (1.0 + 1e-9) { remaining } else { h };
                self.rk.step(x, dt, &mut self.full);
                x.copy_from_slice(&self.full);
                Ok(dt)
            }
            StepControl::Adaptive { rel_tol, abs_tol, h_min, h_max, .. } => loop {
                let dt = self.h.min(remaining).min(h_max);
                self.rk.step(x, dt, &mut self.full);
                self.rk.step(x, 0.5 * dt, &mut self.half);
                let half = self.half.clone();
                self.rk.step(&half, 0.5 * dt, &mut self.twice);
                let mut err: f64 = 0.0;
                for i in 0..x.len() {
                    let e = (self.twice[i] - self.full[i]).abs() / 15.0;
                    let sc = abs_tol + rel_tol * self.twice[i].abs().max(x[i].abs());
                    err = err.max(e / sc);
                }
                if err <= 1.0 || dt <= h_min {
                    for i in 0..x.len() {
                        x[i] = self.twice[i] + (self.twice[i] - self.full[i]) / 15.0;
                    }
                    let grow = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 4.0) };
                    // a step truncated by the interval end says nothing about growth
                    if !(dt < self.h && grow >= 1.0) {
                        self.h = (dt * grow).max(h_min);
                    }
                    return Ok(dt);
                }
                let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
                self.h = (dt * shrink).max(h_min);
            },
        }
    }

    /// Single RK4 sub-step of size `tau` from `x`, used for bisection inside
    /// an accepted step.
    fn substep(&mut self, x: &[f64], tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.rk.step(x, tau, &mut out);
        out
    }
}

const TIME_TOL: f64 = 1e-10;

fn bisect_exit(st: &mut Stepper<'_>, prev: &[f64], dt: f64, inside: impl Fn(&[f64]) -> bool) -> (f64, Vec<f64>) {
    let (mut lo, mut hi) = (0.0, dt);
    while hi - lo > TIME_TOL {
        let mid = 0.5 * (lo + hi);
        if inside(&st.substep(prev, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, st.substep(prev, hi))
}

/// Numerical solution of `ẋ = F(x)` after time `t`.
pub fn integrate_flow(f: &dyn VectorField, x0: &[f64], t: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    if x0.len() != f.dim() {
        return Err(Error::Domain(format!("state has dimension {}, field expects {}", x0.len(), f.dim())));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("integration time must be non-negative, got {t}")));
    }
    if !cfg.region.contains(x0) {
        return Err(Error::Domain(format!("initial state {x0:?} is outside the admissible region")));
    }
    let mut x = x0.to_vec();
    if t == 0.0 {
        return Ok(x);
    }
    let mut st = Stepper::new(f, cfg);
    let mut elapsed = 0.0;
    let mut prev = x.clone();
    while elapsed < t {
        prev.copy_from_slice(&x);
        let dt = st.advance(&mut x, t - elapsed)?;
        if !cfg.region.contains(&x) {
            let region = cfg.region.clone();
            let (tau, state) = bisect_exit(&mut st, &prev, dt, |y| region.contains(y));
            return Err(Error::LeftRegion { time: elapsed + tau, state });
        }
        elapsed += dt;
        if t - elapsed <= 1e-15 * t {
            break;
        }
    }
    Ok(x)
}

/// A located zero of the boundary functional.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub state: Vec<f64>,
}

/// First time in `[0, horizon]` at which `g(x(t))` changes sign, located by
/// bisection to 1e-10 time units. Tangential contacts without a sign change
/// are not detected.
pub fn hit_time(
    f: &dyn VectorField,
    x0: &[f64],
    g: &dyn Fn(&[f64]) -> f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Option<Crossing>> {
    if x0.len() != f.dim() {
        return Err(Error::Domain("state dimension mismatch".into()));
    }
    let g0 = g(x0);
    if g0 == 0.0 {
        return Ok(Some(Crossing { time: 0.0, state: x0.to_vec() }));
    }
    let side = g0.signum();
    let mut st = Stepper::new(f, cfg);
    let mut x = x0.to_vec();
    let mut prev = x.clone();
    let mut elapsed = 0.0;
    while elapsed < horizon {
        prev.copy_from_slice(&x);
        let dt = st.advance(&mut x, horizon - elapsed)?;
        let gx = g(&x);
        if gx * side <= 0.0 {
            let (tau, state) = bisect_exit(&mut st, &prev, dt, |y| g(y) * side > 0.0);
            return Ok(Some(Crossing { time: elapsed + tau, state }));
        }
        if !cfg.region.contains(&x) {
            let region = cfg.region.clone();
            let (tau, state) = bisect_exit(&mut st, &prev, dt, |y| region.contains(y));
            return Err(Error::LeftRegion { time: elapsed + tau, state });
        }
        elapsed += dt;
        if horizon - elapsed <= 1e-15 * horizon {
            break;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdmp::field::{ConstantField, FnField, LinearField, ZeroField};

    #[test]
    fn zero_field_is_identity() {
        let x = integrate_flow(&ZeroField(3), &[1.0, -2.0, 0.5], 7.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn scalar_exponential() {
        let cfg = IntegratorConfig::default();
        for a in [-1.5, 0.3, 1.0] {
            let x = integrate_flow(&LinearField::scalar(a), &[2.0], 3.0, &cfg).unwrap()[0];
            let exact = 2.0 * (a * 3.0f64).exp();
            assert!(((x - exact) / exact).abs() < 1e-8, "a = {a}: {x} vs {exact}");
        }
    }

    #[test]
    fn adaptive_matches_exponential() {
        let cfg = IntegratorConfig { step: StepControl::adaptive(), region: Region::Unbounded };
        let x = integrate_flow(&LinearField::scalar(1.0), &[1.0], 5.0, &cfg).unwrap()[0];
        assert!(((x - 5.0f64.exp()) / 5.0f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn linear_hits() {
        let cfg = IntegratorConfig::default();
        let one = ConstantField(vec![1.0]);
        let c = hit_time(&one, &[0.0], &|x| x[0] - 1.0, 10.0, &cfg).unwrap().unwrap();
        assert!((c.time - 1.0).abs() < 1e-9);
        let two = ConstantField(vec![2.0]);
        let c = hit_time(&two, &[0.3], &|x| x[0] - 1.0, 10.0, &cfg).unwrap().unwrap();
        assert!((c.time - 0.35).abs() < 1e-9);
        let e = std::f64::consts::E;
        let c = hit_time(&LinearField::scalar(1.0), &[1.0], &|x| x[0] - e, 10.0, &cfg).unwrap().unwrap();
        assert!((c.time - 1.0).abs() < 1e-9, "{}", c.time);
    }

    #[test]
    fn no_hit_before_horizon() {
        let one = ConstantField(vec![1.0]);
        let cfg = IntegratorConfig::default();
        assert!(hit_time(&one, &[0.0], &|x| x[0] - 5.0, 2.0, &cfg).unwrap().is_none());
        // tangential contact: x(t) = (t-1)^2 never crosses 0
        let para = FnField::new(2, |x, o| {
            o[0] = 2.0 * x[1];
            o[1] = 1.0;
        });
        assert!(hit_time(&para, &[1.0, -1.0], &|x| x[0], 3.0, &cfg).unwrap().is_none());
    }

    #[test]
    fn exit_from_region_reports_time() {
        let cfg = IntegratorConfig::default().with_region(Region::Box { lo: vec![0.0], hi: vec![1.0] });
        match integrate_flow(&ConstantField(vec![-1.0]), &[0.5], 2.0, &cfg) {
            Err(Error::LeftRegion { time, .. }) => assert!((time - 0.5).abs() < 1e-9),
            other => panic!("expected exit error, got {other:?}"),
        }
    }
}
