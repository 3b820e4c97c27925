//! Run configuration: TOML with flat dotted keys, validated in one pass so
//! every problem is reported together.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use toml::Value;

use crate::error::{Error, Result};
use crate::exact::{EvolutionParams, Integrator, MAX_SRE_SITES};
use crate::model::{
    flavors_to_string, parse_flavors, uniform_omegas, CouplingProfile, MassOrdering, SystemSpec, DEFAULT_EXPONENT,
    DEFAULT_MIXING_ANGLE, DEFAULT_MU0, DEFAULT_RADIUS, MAX_DENSE_SITES,
};
use crate::observables::DEFAULT_WEAK_THRESHOLD;
use crate::resources::DEFAULT_REGION_THRESHOLD;

/// Overrides `output.dir` when set.
pub const OUTPUT_DIR_ENV: &str = "NUSPIN_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Exact,
    Mps,
    Both,
}

impl EngineKind {
    pub fn uses_exact(self) -> bool {
        matches!(self, EngineKind::Exact | EngineKind::Both)
    }

    pub fn uses_mps(self) -> bool {
        matches!(self, EngineKind::Mps | EngineKind::Both)
    }

    fn as_str(self) -> &'static str {
        match self {
            EngineKind::Exact => "exact",
            EngineKind::Mps => "mps",
            EngineKind::Both => "both",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Entropy,
    NlSre2,
    Antiflatness,
    FullSre,
    Polarization,
    Survival,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Entropy,
        Measure::NlSre2,
        Measure::Antiflatness,
        Measure::FullSre,
        Measure::Polarization,
        Measure::Survival,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Entropy => "entropy",
            Measure::NlSre2 => "nl_sre2",
            Measure::Antiflatness => "antiflatness",
            Measure::FullSre => "full_sre",
            Measure::Polarization => "polarization",
            Measure::Survival => "survival",
        }
    }

    fn parse(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: SystemSpec,
    pub engine: EngineKind,
    pub evolution: EvolutionParams,
    pub max_bond: usize,
    pub bond_caps: Vec<usize>,
    pub svd_epsilon: f64,
    pub measures: Vec<Measure>,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub weak_threshold: f64,
    pub entropy_threshold: f64,
    /// Keys that were absent and filled with defaults.
    pub defaults_injected: Vec<String>,
}

impl RunConfig {
    pub fn wants(&self, m: Measure) -> bool {
        self.measures.contains(&m)
    }

    /// Checks the engine size limits; these map to the capacity exit code.
    pub fn check_capacity(&self) -> Result<()> {
        let n = self.spec.n_sites();
        if self.engine.uses_exact() && n > MAX_DENSE_SITES {
            return Err(Error::Capacity {
                what: "exact engine (use engine.kind = \"mps\" for larger chains)",
                limit: MAX_DENSE_SITES,
                requested: n,
            });
        }
        if self.wants(Measure::FullSre) && n > MAX_SRE_SITES {
            return Err(Error::Capacity {
                what: "full_sre measure (drop it from measures; nl_sre2 has no size limit)",
                limit: MAX_SRE_SITES,
                requested: n,
            });
        }
        Ok(())
    }

    /// The configuration with every default spelled out, in the input format.
    pub fn to_toml(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let list = |xs: &[String]| format!("[{}]", xs.join(", "));
        let f = |x: f64| format!("{x:?}");
        let _ = writeln!(out, "system.n_sites = {}", s.n_sites());
        let _ = writeln!(out, "system.omegas = {}", list(&s.omegas.iter().map(|&w| f(w)).collect::<Vec<_>>()));
        let _ = writeln!(out, "system.mixing_angle = {}", f(s.mixing_angle));
        let _ = writeln!(out, "system.mass_ordering = \"{}\"", s.mass_ordering.as_str());
        let _ = writeln!(out, "system.initial = \"{}\"", flavors_to_string(&s.initial_config));
        match s.coupling {
            CouplingProfile::Constant { mu0 } => {
                let _ = writeln!(out, "coupling.kind = \"constant\"\ncoupling.mu0 = {}", f(mu0));
            }
            CouplingProfile::PowerDecay { mu0, radius, exponent } => {
                let _ = writeln!(
                    out,
                    "coupling.kind = \"power_decay\"\ncoupling.mu0 = {}\ncoupling.radius = {}\ncoupling.exponent = {}",
                    f(mu0),
                    f(radius),
                    f(exponent)
                );
            }
            CouplingProfile::SupernovaSingleAngle { mu0, radius, start_radius } => {
                let _ = writeln!(
                    out,
                    "coupling.kind = \"supernova_single_angle\"\ncoupling.mu0 = {}\ncoupling.radius = {}\ncoupling.start_radius = {}",
                    f(mu0),
                    f(radius),
                    f(start_radius)
                );
            }
        }
        let _ = writeln!(out, "engine.kind = \"{}\"", self.engine.as_str());
        let e = &self.evolution;
        let method = match e.method {
            Integrator::KrylovStep => "krylov_step",
            Integrator::MatrixExponentialStep => "matrix_exponential_step",
            Integrator::Rk4 => "rk4",
        };
        let _ = writeln!(out, "evolution.dt = {}", f(e.dt));
        let _ = writeln!(out, "evolution.t_final = {}", f(e.t_final));
        let _ = writeln!(out, "evolution.method = \"{method}\"");
        let _ = writeln!(out, "evolution.krylov_dim = {}", e.krylov_dim);
        let _ = writeln!(out, "evolution.snapshot_every = {}", e.snapshot_every);
        let _ = writeln!(out, "mps.max_bond = {}", self.max_bond);
        let _ = writeln!(out, "mps.bond_caps = {}", list(&self.bond_caps.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "mps.svd_epsilon = {}", f(self.svd_epsilon));
        let _ = writeln!(
            out,
            "measures = {}",
            list(&self.measures.iter().map(|m| format!("\"{}\"", m.as_str())).collect::<Vec<_>>())
        );
        let _ = writeln!(out, "output.dir = {:?}", self.output_dir.display().to_string());
        let _ = writeln!(
            out,
            "output.format = \"{}\"",
            match self.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            }
        );
        let _ = writeln!(out, "analysis.weak_threshold = {}", f(self.weak_threshold));
        let _ = writeln!(out, "analysis.entropy_threshold = {}", f(self.entropy_threshold));
        out
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

/// Pulls typed values out of the flattened map, recording problems instead of stopping.
struct Fields {
    map: BTreeMap<String, Value>,
    errors: Vec<String>,
    injected: Vec<String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Value> {
        let v = self.map.remove(key);
        if v.is_none() {
            self.injected.push(key.to_string());
        }
        v
    }

    fn float(&mut self, key: &str, default: f64) -> f64 {
        match self.take(key) {
            None => default,
            Some(Value::Float(x)) => x,
            Some(Value::Integer(i)) => i as f64,
            Some(other) => {
                self.errors.push(format!("{key}: expected a number, got {}", other.type_str()));
                default
            }
        }
    }

    fn uint(&mut self, key: &str, default: usize) -> usize {
        match self.take(key) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => i as usize,
            Some(other) => {
                self.errors.push(format!("{key}: expected a non-negative integer, got {other}"));
                default
            }
        }
    }

    fn opt_uint(&mut self, key: &str) -> Option<usize> {
        match self.take(key) {
            None => None,
            Some(Value::Integer(i)) if i >= 0 => Some(i as usize),
            Some(other) => {
                self.errors.push(format!("{key}: expected a non-negative integer, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.take(key) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                self.errors.push(format!("{key}: expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn array(&mut self, key: &str) -> Option<Vec<Value>> {
        match self.take(key) {
            None => None,
            Some(Value::Array(a)) => Some(a),
            Some(other) => {
                self.errors.push(format!("{key}: expected an array, got {}", other.type_str()));
                None
            }
        }
    }
}

/// Parses and validates a configuration, collecting every error.
pub fn validate_config(raw: &str) -> Result<RunConfig> {
    let table: toml::Table = raw
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut map = BTreeMap::new();
    flatten("", &table, &mut map);
    let mut fx = Fields {
        map,
        errors: Vec::new(),
        injected: Vec::new(),
    };

    let initial = match fx.string("system.initial") {
        Some(s) => match parse_flavors(&s) {
            Ok(f) => Some(f),
            Err(e) => {
                fx.errors.push(format!("system.initial: {e}"));
                None
            }
        },
        None => {
            fx.errors.push("system.initial: required (e.g. \"mmmeeeeeeeee\")".into());
            None
        }
    };
    let n_declared = fx.opt_uint("system.n_sites");
    let n = n_declared.or(initial.as_ref().map(Vec::len)).unwrap_or(0);
    if let (Some(d), Some(f)) = (n_declared, initial.as_ref()) {
        if d != f.len() {
            fx.errors.push(format!("system.n_sites = {d} but system.initial has {} entries", f.len()));
        }
    }
    let omegas = match fx.array("system.omegas") {
        Some(a) => {
            let mut w = Vec::with_capacity(a.len());
            for (i, v) in a.iter().enumerate() {
                match v {
                    Value::Float(x) => w.push(*x),
                    Value::Integer(k) => w.push(*k as f64),
                    other => fx.errors.push(format!("system.omegas[{i}]: expected a number, got {}", other.type_str())),
                }
            }
            w
        }
        None => uniform_omegas(n, 1.0),
    };
    let mixing_angle = fx.float("system.mixing_angle", DEFAULT_MIXING_ANGLE);
    let mass_ordering = match fx.string("system.mass_ordering") {
        None => MassOrdering::Normal,
        Some(o) => MassOrdering::parse(&o).unwrap_or_else(|| {
            fx.errors.push(format!("system.mass_ordering: unknown ordering {o:?} (normal, inverted)"));
            MassOrdering::Normal
        }),
    };

    let kind = fx.string("coupling.kind").unwrap_or_else(|| "power_decay".into());
    let mu0 = fx.float("coupling.mu0", DEFAULT_MU0);
    let coupling = match kind.as_str() {
        "constant" => Some(CouplingProfile::Constant { mu0 }),
        "power_decay" => Some(CouplingProfile::PowerDecay {
            mu0,
            radius: fx.float("coupling.radius", DEFAULT_RADIUS),
            exponent: fx.float("coupling.exponent", DEFAULT_EXPONENT),
        }),
        "supernova_single_angle" | "supernova" => {
            let radius = fx.float("coupling.radius", DEFAULT_RADIUS);
            Some(CouplingProfile::SupernovaSingleAngle {
                mu0,
                radius,
                start_radius: fx.float("coupling.start_radius", radius),
            })
        }
        other => {
            fx.errors.push(format!(
                "coupling.kind: unknown profile {other:?} (constant, power_decay, supernova_single_angle)"
            ));
            None
        }
    };

    let engine = match fx.string("engine.kind").as_deref() {
        None | Some("exact") => EngineKind::Exact,
        Some("mps") => EngineKind::Mps,
        Some("both") => EngineKind::Both,
        Some(other) => {
            fx.errors.push(format!("engine.kind: unknown engine {other:?} (exact, mps, both)"));
            EngineKind::Exact
        }
    };

    let defaults = EvolutionParams::default();
    let method = match fx.string("evolution.method").as_deref() {
        None | Some("krylov_step") => Integrator::KrylovStep,
        Some("matrix_exponential_step") => Integrator::MatrixExponentialStep,
        Some("rk4") => Integrator::Rk4,
        Some(other) => {
            fx.errors.push(format!(
                "evolution.method: unknown integrator {other:?} (krylov_step, matrix_exponential_step, rk4)"
            ));
            Integrator::KrylovStep
        }
    };
    let evolution = EvolutionParams {
        dt: fx.float("evolution.dt", defaults.dt),
        t_final: fx.float("evolution.t_final", defaults.t_final),
        method,
        krylov_dim: fx.uint("evolution.krylov_dim", defaults.krylov_dim),
        snapshot_every: fx.uint("evolution.snapshot_every", defaults.snapshot_every),
    };
    fx.errors.extend(evolution.validation_errors());

    let full_bond = 1usize << (n / 2).min(30);
    let max_bond = fx.uint("mps.max_bond", full_bond);
    if max_bond == 0 {
        fx.errors.push("mps.max_bond must be at least 1".into());
    }
    let bond_caps: Vec<usize> = match fx.array("mps.bond_caps") {
        Some(a) => a
            .iter()
            .enumerate()
            .filter_map(|(i, v)| match v {
                Value::Integer(k) if *k >= 1 => Some(*k as usize),
                other => {
                    fx.errors.push(format!("mps.bond_caps[{i}]: expected a positive integer, got {other}"));
                    None
                }
            })
            .collect(),
        None => Vec::new(),
    };
    let svd_epsilon = fx.float("mps.svd_epsilon", 0.0);
    if !(0.0..1.0).contains(&svd_epsilon) {
        fx.errors.push(format!("mps.svd_epsilon must lie in [0, 1), got {svd_epsilon}"));
    }

    let measures = match fx.array("measures") {
        Some(a) => {
            let mut ms = Vec::new();
            for (i, v) in a.iter().enumerate() {
                match v.as_str().and_then(Measure::parse) {
                    Some(m) if !ms.contains(&m) => ms.push(m),
                    Some(_) => {}
                    None => fx.errors.push(format!(
                        "measures[{i}]: unknown measure {v} (entropy, nl_sre2, antiflatness, full_sre, polarization, survival)"
                    )),
                }
            }
            if a.is_empty() {
                fx.errors.push("measures: must list at least one measure".into());
            }
            ms.sort();
            ms
        }
        None => Measure::ALL.into_iter().filter(|m| *m != Measure::FullSre).collect(),
    };

    let mut output_dir = PathBuf::from(fx.string("output.dir").unwrap_or_else(|| "out".into()));
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            output_dir = PathBuf::from(dir);
        }
    }
    let format = match fx.string("output.format").as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            fx.errors.push(format!("output.format: unknown format {other:?} (csv, json)"));
            OutputFormat::Csv
        }
    };
    let weak_threshold = fx.float("analysis.weak_threshold", DEFAULT_WEAK_THRESHOLD);
    if !(weak_threshold > 0.0 && weak_threshold <= 0.5) {
        fx.errors.push(format!("analysis.weak_threshold must lie in (0, 0.5], got {weak_threshold}"));
    }
    let entropy_threshold = fx.float("analysis.entropy_threshold", DEFAULT_REGION_THRESHOLD);
    if !(entropy_threshold >= 0.0) {
        fx.errors.push(format!("analysis.entropy_threshold must be non-negative, got {entropy_threshold}"));
    }

    for key in fx.map.keys() {
        fx.errors.push(format!("{key}: unknown key"));
    }

    let spec = match (initial, coupling) {
        (Some(initial_config), Some(coupling)) => {
            let spec = SystemSpec {
                omegas,
                mixing_angle,
                coupling,
                initial_config,
                mass_ordering,
            };
            for e in spec.validation_errors() {
                fx.errors.push(format!("system: {e}"));
            }
            Some(spec)
        }
        _ => None,
    };

    match spec {
        Some(spec) if fx.errors.is_empty() => Ok(RunConfig {
            spec,
            engine,
            evolution,
            max_bond,
            bond_caps,
            svd_epsilon,
            measures,
            output_dir,
            format,
            weak_threshold,
            entropy_threshold,
            defaults_injected: fx.injected,
        }),
        _ => Err(Error::Config(fx.errors)),
    }
}
