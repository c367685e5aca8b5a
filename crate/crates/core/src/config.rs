//! Scenario configuration files: TOML (or the same schema as JSON), checked
//! against a per-scenario schema before anything runs.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::gene::GeneParams;
use crate::ifire::{IFSpec, ResetLaw};
use crate::pdmp::RateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Malthus,
    Planar,
    Coupling,
    Branching,
    Ifire,
    Gene,
    Cvscan,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Malthus,
        Scenario::Planar,
        Scenario::Coupling,
        Scenario::Branching,
        Scenario::Ifire,
        Scenario::Gene,
        Scenario::Cvscan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Malthus => "malthus",
            Scenario::Planar => "planar",
            Scenario::Coupling => "coupling",
            Scenario::Branching => "branching",
            Scenario::Ifire => "ifire",
            Scenario::Gene => "gene",
            Scenario::Cvscan => "cvscan",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    /// (replicas, horizon) used when neither the file nor the command line sets them.
    pub fn defaults(self) -> (u64, f64) {
        match self {
            Scenario::Malthus => (10_000, 1.0),
            Scenario::Planar => (8, 1000.0),
            Scenario::Coupling => (4, 10.0),
            Scenario::Branching => (10_000, 3.0),
            Scenario::Ifire => (8, 1000.0),
            Scenario::Gene => (1, 1.0),
            Scenario::Cvscan => (1, 1.0),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// All problems found in one file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Str,
    Float,
    Positive,
    NonNegative,
    Count,
    Floats,
    Matrix,
    Matrices,
    Intervals,
    Table,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Str => "a string",
            Kind::Float => "a number",
            Kind::Positive => "a positive number",
            Kind::NonNegative => "a non-negative number",
            Kind::Count => "a non-negative integer",
            Kind::Floats => "an array of numbers",
            Kind::Matrix => "a square array of number rows",
            Kind::Matrices => "an array of square matrices",
            Kind::Intervals => "an array of [lo, hi] pairs",
            Kind::Table => "a table",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        let num = |v: &Value| v.as_f64().is_some_and(f64::is_finite);
        let floats = |v: &Value| v.as_array().is_some_and(|a| a.iter().all(num));
        let matrix = |v: &Value| {
            v.as_array().is_some_and(|rows| {
                !rows.is_empty() && rows.iter().all(|r| floats(r) && r.as_array().map(Vec::len) == Some(rows.len()))
            })
        };
        match self {
            Kind::Str => v.is_string(),
            Kind::Float => num(v),
            Kind::Positive => num(v) && v.as_f64().unwrap() > 0.0,
            Kind::NonNegative => num(v) && v.as_f64().unwrap() >= 0.0,
            Kind::Count => v.as_u64().is_some(),
            Kind::Floats => floats(v),
            Kind::Matrix => matrix(v),
            Kind::Matrices => v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(matrix)),
            Kind::Intervals => {
                v.as_array().is_some_and(|a| a.iter().all(|p| floats(p) && p.as_array().map(Vec::len) == Some(2)))
            }
            Kind::Table => v.is_object(),
        }
    }
}

struct Field {
    key: &'static str,
    kind: Kind,
    required: bool,
}

const fn req(key: &'static str, kind: Kind) -> Field {
    Field { key, kind, required: true }
}

const fn opt(key: &'static str, kind: Kind) -> Field {
    Field { key, kind, required: false }
}

const TOP: &[Field] = &[
    opt("scenario", Kind::Str),
    opt("replicas", Kind::Count),
    opt("horizon", Kind::Positive),
    req("model", Kind::Table),
];

const MALTHUS: &[Field] = &[
    req("q", Kind::Matrix),
    req("a", Kind::Floats),
    opt("p_grid", Kind::Floats),
    opt("fk_orders", Kind::Floats),
    opt("mu0", Kind::Floats),
    opt("p_max", Kind::Positive),
];
const PLANAR: &[Field] = &[
    opt("m0", Kind::Matrix),
    opt("m1", Kind::Matrix),
    req("lambdas", Kind::Floats),
    opt("bracket", Kind::Floats),
    opt("tol", Kind::Positive),
];
const COUPLING: &[Field] = &[
    req("matrices", Kind::Matrices),
    req("q", Kind::Matrix),
    req("x0", Kind::Floats),
    req("x0p", Kind::Floats),
    opt("y0", Kind::Count),
    opt("grid", Kind::Positive),
];
const BRANCHING: &[Field] =
    &[req("r", Kind::Float), req("b", Kind::NonNegative), req("x0", Kind::Positive), opt("n_initial", Kind::Floats)];
const IFIRE: &[Field] = &[
    req("alpha", Kind::Floats),
    opt("switch_rate", Kind::Positive),
    req("resets", Kind::Intervals),
    req("epsilons", Kind::Floats),
    opt("n_prehit", Kind::Count),
];
const GENE: &[Field] = &[
    req("lambda1", Kind::Positive),
    req("sigma1", Kind::Positive),
    req("lambda2", Kind::Positive),
    req("tauR", Kind::NonNegative),
    req("tauD", Kind::Positive),
    req("V0", Kind::Positive),
    opt("n_phases", Kind::Count),
    opt("n_cycles", Kind::Count),
    opt("burn_in", Kind::Count),
    opt("count_cap", Kind::Count),
];
const CVSCAN: &[Field] = &[
    req("lambda1_min", Kind::Positive),
    req("lambda1_max", Kind::Positive),
    opt("n_points", Kind::Count),
    req("sigma1", Kind::Positive),
    req("lambda2", Kind::Positive),
    req("tauR", Kind::NonNegative),
    req("tauD", Kind::Positive),
    req("V0", Kind::Positive),
];

fn model_schema(s: Scenario) -> &'static [Field] {
    match s {
        Scenario::Malthus => MALTHUS,
        Scenario::Planar => PLANAR,
        Scenario::Coupling => COUPLING,
        Scenario::Branching => BRANCHING,
        Scenario::Ifire => IFIRE,
        Scenario::Gene => GENE,
        Scenario::Cvscan => CVSCAN,
    }
}

/// Typed model parameters, one variant per scenario.
#[derive(Debug, Clone)]
pub enum ModelParams {
    Malthus { q: RateMatrix, a: Vec<f64>, p_grid: Vec<f64>, fk_orders: Vec<f64>, mu0: Vec<f64>, p_max: f64 },
    Planar { m0: DMatrix<f64>, m1: DMatrix<f64>, lambdas: Vec<f64>, bracket: Option<(f64, f64)>, tol: f64 },
    Coupling { matrices: Vec<DMatrix<f64>>, q: RateMatrix, x0: Vec<f64>, x0p: Vec<f64>, y0: usize, grid: f64 },
    Branching { r: f64, b: f64, x0: f64, n_initial: Vec<usize> },
    Ifire { spec: IFSpec, epsilons: Vec<f64>, n_prehit: u64 },
    Gene { params: GeneParams, n_phases: usize, n_cycles: usize, burn_in: usize, count_cap: u64 },
    Cvscan { grid: Vec<GeneParams> },
}

/// A validated, fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub replicas: u64,
    pub horizon: f64,
    pub model: ModelParams,
    /// The model table as read from the file.
    pub model_echo: Value,
}

impl ScenarioConfig {
    /// Configuration echo recorded in the run manifest.
    pub fn echo(&self) -> Value {
        serde_json::json!({
            "scenario": self.scenario.name(),
            "seed": self.seed,
            "replicas": self.replicas,
            "horizon": self.horizon,
            "model": self.model_echo,
        })
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: u64,
    pub replicas: Option<u64>,
    pub horizon: Option<f64>,
}

struct Locator<'a> {
    src: &'a str,
    format: Format,
}

impl Locator<'_> {
    fn line_of_offset(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    /// Line on which `key` is defined, inside table `section` when given.
    fn line(&self, section: Option<&str>, key: &str) -> Option<usize> {
        match self.format {
            Format::Toml => {
                let mut current: Option<String> = None;
                for (i, raw) in self.src.lines().enumerate() {
                    let l = raw.trim();
                    if l.starts_with('[') && !l.starts_with("[[") {
                        current = Some(l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
                        continue;
                    }
                    let Some(rest) = l.strip_prefix(key) else { continue };
                    if current.as_deref() == section && rest.trim_start().starts_with('=') {
                        return Some(i + 1);
                    }
                    if section.is_some() && current.is_none() && l.starts_with(&format!("{}.", section.unwrap_or(""))) {
                        return Some(i + 1);
                    }
                }
                None
            }
            Format::Json => {
                let start = match section {
                    Some(s) => self.src.find(&format!("\"{s}\""))?,
                    None => 0,
                };
                let pos = self.src[start..].find(&format!("\"{key}\""))? + start;
                Some(self.line_of_offset(pos))
            }
        }
    }
}

fn parse_document(src: &str, format: Format) -> std::result::Result<Value, ConfigIssue> {
    match format {
        Format::Toml => {
            let v: toml::Table = toml::from_str(src).map_err(|e| {
                let loc = Locator { src, format };
                ConfigIssue {
                    line: e.span().map(|s| loc.line_of_offset(s.start)),
                    key: "<document>".into(),
                    message: e.message().to_string(),
                }
            })?;
            serde_json::to_value(v).map_err(|e| ConfigIssue {
                line: None,
                key: "<document>".into(),
                message: e.to_string(),
            })
        }
        Format::Json => serde_json::from_str(src).map_err(|e| ConfigIssue {
            line: Some(e.line()),
            key: "<document>".into(),
            message: e.to_string(),
        }),
    }
}

fn check_fields(
    obj: &Map<String, Value>,
    schema: &[Field],
    section: Option<&str>,
    loc: &Locator,
    issues: &mut Vec<ConfigIssue>,
) {
    let qualified = |k: &str| match section {
        Some(s) => format!("{s}.{k}"),
        None => k.to_string(),
    };
    for (k, v) in obj {
        match schema.iter().find(|f| f.key == k) {
            None => issues.push(ConfigIssue {
                line: loc.line(section, k),
                key: qualified(k),
                message: format!("unknown key \"{k}\""),
            }),
            Some(f) if !f.kind.accepts(v) => issues.push(ConfigIssue {
                line: loc.line(section, k),
                key: qualified(k),
                message: format!("type mismatch: expected {}", f.kind.describe()),
            }),
            _ => {}
        }
    }
    for f in schema.iter().filter(|f| f.required && !obj.contains_key(f.key)) {
        issues.push(ConfigIssue { line: None, key: qualified(f.key), message: "missing required key".into() });
    }
}

fn f64_of(m: &Map<String, Value>, k: &str) -> Option<f64> {
    m.get(k).and_then(Value::as_f64)
}

fn floats_of(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn matrix_of(v: &Value) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = v.as_array().map(|a| a.iter().map(floats_of).collect()).unwrap_or_default();
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn rows_of(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().map(|a| a.iter().map(floats_of).collect()).unwrap_or_default()
}

fn build_model(
    s: Scenario,
    m: &Map<String, Value>,
    loc: &Locator,
    issues: &mut Vec<ConfigIssue>,
) -> Option<ModelParams> {
    let mut fail = |key: &str, message: String| {
        issues.push(ConfigIssue { line: loc.line(Some("model"), key), key: format!("model.{key}"), message });
    };
    let get = |k: &str| m.get(k);
    let num = |k: &str, d: f64| f64_of(m, k).unwrap_or(d);
    let count = |k: &str, d: u64| m.get(k).and_then(Value::as_u64).unwrap_or(d);
    let gene_params = |lambda1: f64, fail: &mut dyn FnMut(&str, String)| -> Option<GeneParams> {
        let p = GeneParams {
            lambda1,
            sigma1: num("sigma1", 1.0),
            lambda2: num("lambda2", 1.0),
            tau_r: num("tauR", 0.0),
            tau_d: num("tauD", 1.0),
            v0: num("V0", 1.0),
        };
        if !(p.tau_r < p.tau_d) {
            fail("tauR", format!("constraint violated: tauR < tauD (tauR = {}, tauD = {})", p.tau_r, p.tau_d));
            return None;
        }
        Some(p)
    };
    match s {
        Scenario::Malthus => {
            let q = match RateMatrix::new(rows_of(&m["q"])) {
                Ok(q) => q,
                Err(e) => {
                    fail("q", e.to_string());
                    return None;
                }
            };
            let n = q.n_states();
            let a = floats_of(&m["a"]);
            if a.len() != n {
                fail("a", format!("expected {n} growth rates (one per state), got {}", a.len()));
                return None;
            }
            let mu0 = match get("mu0") {
                Some(v) => floats_of(v),
                None => match q.stationary_distribution() {
                    Ok(nu) => nu,
                    Err(e) => {
                        fail("q", e.to_string());
                        return None;
                    }
                },
            };
            if mu0.len() != n || mu0.iter().any(|x| *x < 0.0) || (mu0.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                fail("mu0", "must be a probability vector with one entry per state".into());
                return None;
            }
            let p_grid = get("p_grid").map(floats_of).unwrap_or_else(|| (0..=40).map(|k| k as f64 * 0.1).collect());
            if p_grid.iter().any(|p| *p < 0.0) {
                fail("p_grid", "moment orders must be non-negative".into());
                return None;
            }
            let fk_orders = get("fk_orders").map(floats_of).unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
            if fk_orders.iter().any(|p| *p < 0.0) {
                fail("fk_orders", "moment orders must be non-negative".into());
                return None;
            }
            Some(ModelParams::Malthus { q, a, p_grid, fk_orders, mu0, p_max: num("p_max", 10.0) })
        }
        Scenario::Planar => {
            let m0 = get("m0").map(matrix_of).unwrap_or_else(crate::switched::PlanarSwitched::canonical_m0);
            let m1 = get("m1").map(matrix_of).unwrap_or_else(crate::switched::PlanarSwitched::canonical_m1);
            for (k, mm) in [("m0", &m0), ("m1", &m1)] {
                if mm.shape() != (2, 2) {
                    fail(k, "planar matrices must be 2x2".into());
                    return None;
                }
            }
            let lambdas = floats_of(&m["lambdas"]);
            if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
                fail("lambdas", "switching rates must be a non-empty list of positive numbers".into());
                return None;
            }
            let bracket = match get("bracket").map(floats_of) {
                Some(b) if b.len() == 2 && b[0] > 0.0 && b[1] > b[0] => Some((b[0], b[1])),
                Some(_) => {
                    fail("bracket", "expected [lo, hi] with 0 < lo < hi".into());
                    return None;
                }
                None => None,
            };
            Some(ModelParams::Planar { m0, m1, lambdas, bracket, tol: num("tol", 0.5) })
        }
        Scenario::Coupling => {
            let q = match RateMatrix::new(rows_of(&m["q"])) {
                Ok(q) => q,
                Err(e) => {
                    fail("q", e.to_string());
                    return None;
                }
            };
            let matrices: Vec<DMatrix<f64>> =
                m["matrices"].as_array().map(|a| a.iter().map(matrix_of).collect()).unwrap_or_default();
            let d = matrices[0].nrows();
            if matrices.len() != q.n_states() || matrices.iter().any(|a| a.nrows() != d) {
                fail("matrices", format!("need {} matrices of equal size, one per state", q.n_states()));
                return None;
            }
            let x0 = floats_of(&m["x0"]);
            let x0p = floats_of(&m["x0p"]);
            if x0.len() != d || x0p.len() != d {
                fail(if x0.len() != d { "x0" } else { "x0p" }, format!("expected {d} coordinates"));
                return None;
            }
            let y0 = count("y0", 0) as usize;
            if y0 >= q.n_states() {
                fail("y0", format!("initial state must be below {}", q.n_states()));
                return None;
            }
            Some(ModelParams::Coupling { matrices, q, x0, x0p, y0, grid: num("grid", 0.01) })
        }
        Scenario::Branching => {
            let n_initial = get("n_initial").map(floats_of).unwrap_or_default();
            if n_initial.iter().any(|n| !(*n >= 1.0) || n.fract() != 0.0) {
                fail("n_initial", "population sizes must be positive integers".into());
                return None;
            }
            Some(ModelParams::Branching {
                r: num("r", 0.0),
                b: num("b", 1.0),
                x0: num("x0", 1.0),
                n_initial: n_initial.iter().map(|n| *n as usize).collect(),
            })
        }
        Scenario::Ifire => {
            let alpha = floats_of(&m["alpha"]);
            let resets: Vec<ResetLaw> =
                rows_of(&m["resets"]).iter().map(|r| ResetLaw::Uniform { lo: r[0], hi: r[1] }).collect();
            let epsilons = floats_of(&m["epsilons"]);
            if epsilons.is_empty()
                || epsilons.iter().any(|e| !(*e > 0.0))
                || epsilons.windows(2).any(|w| !(w[1] < w[0]))
            {
                fail("epsilons", "expected a strictly decreasing list of positive numbers".into());
                return None;
            }
            let n = alpha.len();
            let env = if n == 2 {
                RateMatrix::symmetric_two_state(num("switch_rate", 1.0))
            } else {
                RateMatrix::from_off_diagonal(&vec![vec![num("switch_rate", 1.0); n]; n])
            };
            let env = match env {
                Ok(e) => e,
                Err(e) => {
                    fail("switch_rate", e.to_string());
                    return None;
                }
            };
            let spec = IFSpec {
                env,
                alpha,
                drive: crate::ifire::Drive::Constant(1.0),
                m: 0.0,
                c: 1.0,
                resets,
                initial: ResetLaw::Uniform { lo: 0.0, hi: 0.5 },
                epsilon: epsilons[0],
            };
            if let Err(e) = spec.validate() {
                fail("resets", e.to_string());
                return None;
            }
            Some(ModelParams::Ifire { spec, epsilons, n_prehit: count("n_prehit", 200) })
        }
        Scenario::Gene => {
            let params = gene_params(num("lambda1", 1.0), &mut fail)?;
            let n_phases = count("n_phases", 50) as usize;
            let n_cycles = count("n_cycles", 10_000) as usize;
            if n_phases == 0 || n_cycles < 2 {
                fail(
                    if n_phases == 0 { "n_phases" } else { "n_cycles" },
                    "n_phases must be >= 1 and n_cycles >= 2".into(),
                );
                return None;
            }
            Some(ModelParams::Gene {
                params,
                n_phases,
                n_cycles,
                burn_in: count("burn_in", 50) as usize,
                count_cap: count("count_cap", 1 << 40),
            })
        }
        Scenario::Cvscan => {
            let (lo, hi) = (num("lambda1_min", 0.1), num("lambda1_max", 100.0));
            if !(hi > lo) {
                fail("lambda1_max", "constraint violated: lambda1_min < lambda1_max".into());
                return None;
            }
            let n = count("n_points", 20) as usize;
            if n < 6 {
                fail("n_points", "at least 6 grid points are needed for the trend check".into());
                return None;
            }
            let mut grid = Vec::with_capacity(n);
            for k in 0..n {
                let t = k as f64 / (n - 1) as f64;
                grid.push(gene_params((lo.ln() + t * (hi.ln() - lo.ln())).exp(), &mut fail)?);
            }
            Some(ModelParams::Cvscan { grid })
        }
    }
}

/// Parse and validate a configuration document. `expected` is the scenario
/// named on the command line; a `scenario` key in the file must agree with it.
pub fn parse_config(
    src: &str,
    format: Format,
    expected: Option<Scenario>,
    overrides: Overrides,
) -> std::result::Result<ScenarioConfig, ConfigError> {
    let loc = Locator { src, format };
    let doc = parse_document(src, format).map_err(|i| ConfigError { issues: vec![i] })?;
    let Some(top) = doc.as_object() else {
        return Err(ConfigError {
            issues: vec![ConfigIssue {
                line: Some(1),
                key: "<document>".into(),
                message: "expected a table at top level".into(),
            }],
        });
    };
    let mut issues = Vec::new();
    check_fields(top, TOP, None, &loc, &mut issues);

    let named = top.get("scenario").and_then(Value::as_str);
    let scenario = match (named.map(|n| (n, Scenario::from_name(n))), expected) {
        (Some((n, None)), _) => {
            issues.push(ConfigIssue {
                line: loc.line(None, "scenario"),
                key: "scenario".into(),
                message: format!(
                    "unknown scenario \"{n}\"; expected one of {}",
                    Scenario::ALL.map(Scenario::name).join(", ")
                ),
            });
            None
        }
        (Some((_, Some(f))), Some(e)) if f != e => {
            issues.push(ConfigIssue {
                line: loc.line(None, "scenario"),
                key: "scenario".into(),
                message: format!("file is for scenario \"{f}\" but \"{e}\" was requested"),
            });
            None
        }
        (Some((_, Some(f))), _) => Some(f),
        (None, Some(e)) => Some(e),
        (None, None) => {
            issues.push(ConfigIssue { line: None, key: "scenario".into(), message: "missing required key".into() });
            None
        }
    };
    if top.get("replicas").and_then(Value::as_u64) == Some(0) {
        issues.push(ConfigIssue {
            line: loc.line(None, "replicas"),
            key: "replicas".into(),
            message: "must be at least 1".into(),
        });
    }

    let mut model = None;
    if let (Some(s), Some(m)) = (scenario, top.get("model").and_then(Value::as_object)) {
        let before = issues.len();
        check_fields(m, model_schema(s), Some("model"), &loc, &mut issues);
        if issues.len() == before {
            model = build_model(s, m, &loc, &mut issues);
        }
    }
    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }
    let scenario = scenario.expect("checked");
    let (def_rep, def_hor) = scenario.defaults();
    let replicas = overrides.replicas.or(top.get("replicas").and_then(Value::as_u64)).unwrap_or(def_rep);
    let horizon = overrides.horizon.or(f64_of(top, "horizon")).unwrap_or(def_hor);
    let mut issues = Vec::new();
    if replicas == 0 {
        issues.push(ConfigIssue { line: None, key: "replicas".into(), message: "must be at least 1".into() });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        issues.push(ConfigIssue { line: None, key: "horizon".into(), message: "must be positive and finite".into() });
    }
    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }
    Ok(ScenarioConfig {
        scenario,
        seed: overrides.seed,
        replicas,
        horizon,
        model: model.expect("built"),
        model_echo: top["model"].clone(),
    })
}

/// Read and validate a configuration file.
pub fn load_config(
    path: &Path,
    expected: Option<Scenario>,
    overrides: Overrides,
) -> std::result::Result<ScenarioConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
        issues: vec![ConfigIssue { line: None, key: "<file>".into(), message: format!("{}: {e}", path.display()) }],
    })?;
    parse_config(&src, Format::from_path(path), expected, overrides)
}
