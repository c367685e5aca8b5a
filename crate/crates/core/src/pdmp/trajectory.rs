use std::io::Write;

use crate::error::{Error, Result};

/// Kind of a discrete event on a sample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    EnvJump,
    BoundaryHit,
    Reset,
    Jump,
    Division,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::EnvJump => "env-jump",
            EventKind::BoundaryHit => "boundary-hit",
            EventKind::Reset => "reset",
            EventKind::Jump => "jump",
            EventKind::Division => "division",
        }
    }

    /// Events after which the continuous state may be discontinuous.
    pub fn is_discontinuous(self) -> bool {
        matches!(self, EventKind::Reset | EventKind::Jump | EventKind::Division)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Environment state in force just before the event.
    pub env: usize,
    /// Continuous state just before the event.
    pub pre: Vec<f64>,
}

/// Piecewise record of a PDMP sample path.
///
/// Rows hold the right-continuous state; an event that shares its time with
/// the previous row overwrites that row, so row times stay strictly
/// increasing while `events` keeps every event.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub env: Vec<usize>,
    pub tags: Vec<&'static str>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self { dim, times: vec![], states: vec![], env: vec![], tags: vec![], events: vec![] }
    }

    pub fn push_row(&mut self, t: f64, x: &[f64], env: usize, tag: &'static str) {
        if let Some(&last) = self.times.last() {
            if t <= last {
                let k = self.times.len() - 1;
                self.states[k] = x.to_vec();
                self.env[k] = env;
                if !tag.is_empty() {
                    self.tags[k] = tag;
                }
                return;
            }
        }
        self.times.push(t);
        self.states.push(x.to_vec());
        self.env.push(env);
        self.tags.push(tag);
    }

    pub fn push_event(&mut self, ev: Event) {
        self.events.push(ev);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(|v| v.as_slice())
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// ∫ f(env) dt over the recorded rows (exact when every environment jump
    /// was recorded).
    pub fn integrate_env(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut acc = crate::stats::NeumaierSum::default();
        for k in 1..self.times.len() {
            acc.add(f(self.env[k - 1]) * (self.times[k] - self.times[k - 1]));
        }
        acc.value()
    }

    /// Structural checks: strictly increasing row times, sorted events and
    /// no two boundary hits without a reset in between.
    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Numerical("trajectory times are not strictly increasing".into()));
        }
        if self.events.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::Numerical("trajectory events are not sorted".into()));
        }
        let mut pending_hit = false;
        for e in &self.events {
            match e.kind {
                EventKind::BoundaryHit if pending_hit => {
                    return Err(Error::Numerical(format!("two boundary hits without reset (t = {})", e.time)))
                }
                EventKind::BoundaryHit => pending_hit = true,
                EventKind::Reset => pending_hit = false,
                _ => {}
            }
        }
        Ok(())
    }

    /// CSV with columns `t, x_1..x_d, env, event_tag`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.dim {
            write!(w, ",x_{i}")?;
        }
        writeln!(w, ",env,event_tag")?;
        for k in 0..self.times.len() {
            write!(w, "{}", self.times[k])?;
            for v in &self.states[k] {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{},{}", self.env[k], self.tags[k])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_time_row_is_overwritten() {
        let mut tr = Trajectory::new(1);
        tr.push_row(0.0, &[0.0], 0, "init");
        tr.push_row(1.0, &[1.0], 0, "boundary-hit");
        tr.push_row(1.0, &[0.2], 0, "reset");
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.states[1], vec![0.2]);
        assert_eq!(tr.tags[1], "reset");
    }

    #[test]
    fn detects_double_hit() {
        let mut tr = Trajectory::new(1);
        for t in [1.0, 2.0] {
            tr.push_event(Event { time: t, kind: EventKind::BoundaryHit, env: 0, pre: vec![1.0] });
        }
        assert!(tr.validate().is_err());
    }

    #[test]
    fn csv_header() {
        let mut tr = Trajectory::new(2);
        tr.push_row(0.0, &[1.0, 0.5], 1, "init");
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x_1,x_2,env,event_tag\n0,1,0.5,1,init\n");
    }
}
