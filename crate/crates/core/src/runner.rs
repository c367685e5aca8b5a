//! Scenario dispatch: run a validated configuration and write its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::branching::{
    many_to_one_check, sampling_limit_check, simulate_tree, BranchingSpec, DivisionRate, TraitPath,
};
use crate::config::{ModelParams, ScenarioConfig};
use crate::error::{Error, Result};
use crate::gene::{
    concentration_profile, concentration_stats, cv_scan, cv_trend, equilibrium_moments, mrna_poisson_parameter,
    write_cv_csv, LineageOptions,
};
use crate::ifire::{averaged_jump_measure, convergence_study};
use crate::rng::RngStream;
use crate::switched::contraction_coefficient;
use crate::switched::{
    average_criterion, critical_rate, growth_rate_curve, lyapunov_scan, moment_dichotomy, moment_feynman_kac,
    moment_monte_carlo, two_point_coupling, ContractionMode, CriticalRateOptions, LinearSwitched, Regime,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub config: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
        self.write(name, |w| writeln!(w, "{text}"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run `cfg`, writing CSV/JSON artifacts and `manifest.json` into `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let mut o = Outputs { dir: out.to_path_buf(), files: Vec::new() };
    let stream = RngStream::new(cfg.seed, 0);
    match &cfg.model {
        ModelParams::Malthus { q, a, p_grid, fk_orders, mu0, p_max } => {
            let curve = growth_rate_curve(q, a, p_grid)?;
            o.write("growth_rate.csv", |w| curve.write_csv(w))?;
            let mut rows = Vec::new();
            for (k, &p) in fk_orders.iter().enumerate() {
                let fk = moment_feynman_kac(q, a, p, cfg.horizon, mu0)?;
                let mc = moment_monte_carlo(q, a, p, cfg.horizon, mu0, cfg.replicas, &stream.child(k as u64))?;
                rows.push((p, fk, mc));
            }
            o.write("feynman_kac.csv", |w| {
                writeln!(w, "p,t,feynman_kac,monte_carlo,mc_se,z")?;
                for (p, fk, mc) in &rows {
                    writeln!(w, "{p},{},{fk},{},{},{}", cfg.horizon, mc.mean, mc.se, (mc.mean - fk) / mc.se)?;
                }
                Ok(())
            })?;
            let d = moment_dichotomy(q, a, *p_max, 1e-12)?;
            let regime = match d.regime {
                Regime::Decay { p_star, lambda_at_p_star, window_end } => json!({
                    "kind": "decay", "p_star": p_star, "lambda_at_p_star": lambda_at_p_star, "window_end": window_end
                }),
                Regime::Divergence => json!({ "kind": "divergence" }),
                Regime::Critical => json!({ "kind": "critical" }),
            };
            o.json("dichotomy.json", &json!({ "nu_a": d.nu_a, "regime": regime }))?;
        }
        ModelParams::Planar { m0, m1, lambdas, bracket, tol } => {
            let base =
                LinearSwitched::new(vec![m0.clone(), m1.clone()], crate::pdmp::RateMatrix::symmetric_two_state(1.0)?)?;
            let scan = lyapunov_scan(&base, lambdas, cfg.horizon, cfg.replicas.max(2), &stream.child(0))?;
            o.write("lyapunov_scan.csv", |w| crate::switched::write_scan_csv(&scan, w))?;
            if let Some(b) = bracket {
                let opts = CriticalRateOptions {
                    horizon: cfg.horizon,
                    horizon_cap: 10.0 * cfg.horizon,
                    n_rep: cfg.replicas.max(2),
                };
                let c = critical_rate(&base, *b, *tol, &opts, &stream.child(1))?;
                o.json("critical_rate.json", &json!({
                    "lo": c.lo, "hi": c.hi, "width": c.width(), "converged": c.converged, "evaluations": c.evaluations.len()
                }))?;
            }
        }
        ModelParams::Coupling { matrices, q, x0, x0p, y0, grid } => {
            let lin = LinearSwitched::new(matrices.clone(), q.clone())?;
            let sys = lin.system();
            let mut paths = Vec::new();
            for r in 0..cfg.replicas {
                paths.push(two_point_coupling(&sys, x0, x0p, *y0, cfg.horizon, *grid, &stream.replica(r))?);
            }
            o.write("coupling.csv", |w| {
                writeln!(w, "replica,t,env,distance,bound")?;
                for (r, p) in paths.iter().enumerate() {
                    for k in 0..p.times.len() {
                        writeln!(w, "{r},{},{},{},{}", p.times[k], p.env[k], p.distance[k], p.bound[k])?;
                    }
                }
                Ok(())
            })?;
            let rho = sys
                .fields
                .iter()
                .map(|f| contraction_coefficient(f.as_ref(), &ContractionMode::AnalyticLinear).map(|c| c.rho))
                .collect::<Result<Vec<_>>>()?;
            let rep = average_criterion(&rho, &q.stationary_distribution()?)?;
            let excess = paths.iter().map(|p| p.max_excess()).fold(f64::NEG_INFINITY, f64::max);
            o.json("contraction.json", &json!({
                "rho": rep.rho, "nu": rep.nu, "criterion": rep.criterion, "verdict": rep.verdict, "max_excess": excess
            }))?;
        }
        ModelParams::Branching { r, b, x0, n_initial } => {
            let spec = BranchingSpec::binary(*r, DivisionRate::Constant(*b));
            let tree = simulate_tree(&spec, &[*x0], cfg.horizon, &stream.child(0))?;
            o.write("tree.csv", |w| tree.write_csv(w))?;
            let x0v = *x0;
            let functionals: [(&str, Box<dyn Fn(&[f64]) -> f64 + Sync>); 5] = [
                ("one", Box::new(|_: &[f64]| 1.0)),
                ("x", Box::new(|x: &[f64]| x[0])),
                ("x2", Box::new(|x: &[f64]| x[0] * x[0])),
                ("sqrt_x", Box::new(|x: &[f64]| x[0].abs().sqrt())),
                ("above_x0", Box::new(move |x: &[f64]| f64::from(u8::from(x[0] > x0v)))),
            ];
            let mut rows = Vec::new();
            for (k, (name, f)) in functionals.iter().enumerate() {
                let m = many_to_one_check(
                    &spec,
                    &[*x0],
                    f.as_ref(),
                    cfg.horizon,
                    cfg.replicas,
                    &stream.child(10 + k as u64),
                )?;
                rows.push((*name, m));
            }
            o.write("many_to_one.csv", |w| {
                writeln!(w, "functional,lhs,lhs_se,rhs,rhs_se,z")?;
                for (n, m) in &rows {
                    writeln!(w, "{n},{},{},{},{},{}", m.lhs.mean, m.lhs.se, m.rhs.mean, m.rhs.se, m.z)?;
                }
                Ok(())
            })?;
            if !n_initial.is_empty() {
                let h = cfg.horizon;
                let f = move |p: &TraitPath| p.jumps_until(h) as f64;
                let mut pts = Vec::new();
                for (k, &n) in n_initial.iter().enumerate() {
                    pts.push(sampling_limit_check(
                        &spec,
                        &[*x0],
                        &f,
                        cfg.horizon,
                        n,
                        cfg.replicas,
                        &stream.child(100 + k as u64),
                    )?);
                }
                o.write("sampling.csv", |w| {
                    writeln!(w, "n_initial,sampled,sampled_se,spine,spine_se,z")?;
                    for p in &pts {
                        writeln!(
                            w,
                            "{},{},{},{},{},{}",
                            p.n_initial, p.sampled.mean, p.sampled.se, p.spine.mean, p.spine.se, p.z
                        )?;
                    }
                    Ok(())
                })?;
            }
        }
        ModelParams::Ifire { spec, epsilons, n_prehit } => {
            let study = convergence_study(spec, epsilons, cfg.horizon, cfg.replicas, *n_prehit, &stream)?;
            o.write("convergence.csv", |w| study.write_csv(w))?;
            let avg = averaged_jump_measure(spec)?;
            o.json(
                "averaged.json",
                &json!({
                    "alpha_bar": avg.alpha_bar,
                    "pi_star": avg.pi_star,
                    "tv_decreasing": study.tv_decreasing,
                    "sup_dist_decreasing": study.sup_dist_decreasing,
                }),
            )?;
        }
        ModelParams::Gene { params, n_phases, n_cycles, burn_in, count_cap } => {
            let profile = concentration_profile(params, *n_phases)?;
            o.write("profile.csv", |w| profile.write_csv(w))?;
            let opts = LineageOptions { burn_in: *burn_in, count_cap: *count_cap, ..Default::default() };
            let sim = concentration_stats(params, *n_phases, *n_cycles, &opts, &mut stream.child(0).rng())?;
            o.write("profile_sim.csv", |w| sim.write_csv(w))?;
            let m = equilibrium_moments(params)?;
            o.json(
                "equilibrium.json",
                &json!({
                    "x0": mrna_poisson_parameter(params, 0.0)?,
                    "moments": m,
                    "mu_p": profile.mu_p,
                    "fluctuation": profile.fluctuation,
                    "mu_p_simulated": sim.mu_p,
                }),
            )?;
        }
        ModelParams::Cvscan { grid } => {
            let pts = cv_scan(grid)?;
            o.write("cv_scan.csv", |w| write_cv_csv(&pts, w))?;
            let t = cv_trend(&pts, (-1.3, -0.7))?;
            o.json("trend.json", &serde_json::to_value(t).map_err(|e| Error::Numerical(e.to_string()))?)?;
        }
    }
    let mut outputs = Vec::new();
    for f in &o.files {
        let bytes = std::fs::read(out.join(f))?;
        outputs.push(OutputFile { file: f.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }
    let manifest = RunManifest {
        toolkit: "pdmplab".into(),
        version: VERSION.into(),
        config: cfg.echo(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs,
    };
    o.json("manifest.json", &serde_json::to_value(&manifest).map_err(|e| Error::Numerical(e.to_string()))?)?;
    Ok(manifest)
}

/// Machine-readable error kind.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Reducible(_) => "reducible",
        Error::LeftRegion { .. } => "left_region",
        Error::Config(_) => "config",
        Error::MajorantViolated { .. } => "majorant_violated",
        Error::Numerical(_) => "numerical",
        Error::Precondition(_) => "precondition",
        Error::PopulationOverflow { .. } => "population_overflow",
        Error::CountOverflow { .. } => "count_overflow",
        Error::Extinct(_) => "extinct",
        Error::ModelViolation(_) => "model_violation",
        Error::Empty(_) => "empty",
        Error::Io(_) => "io",
    }
}
