//! Orchestrates engine runs and the derived analysis tables.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::config::{Measure, RunConfig};
use super::output::{self, full, Sink};
use crate::error::{Error, Result};
use crate::exact::{evolve_exact, full_sre, StateVector};
use crate::model::{initial_state, Basis};
use crate::mps::{evolve_mps, MpsState, TdvpSettings};
use crate::observables::{
    colocate_resources, detect_splits, is_stationary, pair_symmetry_check, resource_records,
    mirror_symmetry_applicable, Colocation, SplitReport,
};
use crate::resources::{phase_region_with, ResourceRecord};

/// Trailing fraction of the run inspected by the stationarity flag.
pub const STATIONARY_FRACTION: f64 = 0.05;
/// Largest mass-frame `|dP_z/dt|` in that window still called stationary.
pub const STATIONARY_TOL: f64 = 1e-3;

/// One engine trajectory reduced to its measurement rows.
#[derive(Clone, Debug)]
pub struct EngineRun {
    /// `exact` or `mps_chi{cap}`.
    pub label: String,
    pub cap: Option<usize>,
    pub records: Vec<ResourceRecord>,
    pub max_bond_seen: usize,
    pub discarded_weight: f64,
    /// `(time, M₂)` of the whole register, when requested.
    pub full_sre: Vec<(f64, f64)>,
    /// Engine comparison rows `(time, fidelity, max |ΔS|, max |ΔM₂|)` against the exact run.
    pub comparison: Vec<(f64, f64, f64, f64)>,
}

impl EngineRun {
    pub fn final_records(&self) -> &[ResourceRecord] {
        let Some(last) = self.records.last() else { return &[] };
        let start = self.records.iter().position(|r| r.time == last.time).unwrap_or(0);
        &self.records[start..]
    }

    /// Stationarity of each mode's mass-frame `P_z = 2Pν₁ − 1` over the trailing window.
    pub fn stationary(&self, n_modes: usize) -> Vec<bool> {
        (1..=n_modes)
            .map(|mode| {
                let (t, p): (Vec<f64>, Vec<f64>) =
                    self.records.iter().filter(|r| r.mode == mode).map(|r| (r.time, 2.0 * r.p_nu1 - 1.0)).unzip();
                is_stationary(&t, &p, STATIONARY_FRACTION, STATIONARY_TOL)
            })
            .collect()
    }
}

pub fn run_exact(cfg: &RunConfig, keep_states: bool) -> Result<(EngineRun, Vec<StateVector>)> {
    let spec = &cfg.spec;
    let theta = spec.mixing_angle;
    let mut records = Vec::new();
    let mut sre = Vec::new();
    let mut states = Vec::new();
    let want_sre = cfg.wants(Measure::FullSre);
    evolve_exact(initial_state(spec)?, spec, &cfg.evolution, Basis::Flavor, |step, t, psi| {
        log::debug!("exact step {step} t = {t}");
        records.extend(resource_records(psi, t, theta, 0)?);
        if want_sre {
            sre.push((t, full_sre(psi, 2.0)?));
        }
        if keep_states {
            states.push(psi.clone());
        }
        Ok(())
    })?;
    Ok((
        EngineRun {
            label: "exact".into(),
            cap: None,
            records,
            max_bond_seen: 0,
            discarded_weight: 0.0,
            full_sre: sre,
            comparison: Vec::new(),
        },
        states,
    ))
}

/// MPS trajectory at bond cap `cap`; compares against `reference` snapshots when given.
pub fn run_mps(cfg: &RunConfig, cap: usize, reference: Option<&[StateVector]>) -> Result<EngineRun> {
    let spec = &cfg.spec;
    let theta = spec.mixing_angle;
    let settings = TdvpSettings {
        svd_epsilon: cfg.svd_epsilon,
        ..TdvpSettings::default()
    };
    let mut records: Vec<ResourceRecord> = Vec::new();
    let mut comparison = Vec::new();
    let mut snap = 0;
    let run = evolve_mps(
        MpsState::from_product(spec, cap)?,
        spec,
        &cfg.evolution,
        Basis::Flavor,
        &settings,
        |step, t, mps| {
            log::debug!("mps cap {cap} step {step} t = {t} bond {}", mps.max_bond_dimension());
            let rows = resource_records(mps, t, theta, mps.max_bond_dimension())?;
            if let Some(refs) = reference {
                let exact = &refs[snap];
                let fid = exact.fidelity(&mps.to_dense()?);
                let ex = resource_records(exact, t, theta, 0)?;
                let ds = rows.iter().zip(&ex).map(|(a, b)| (a.entropy - b.entropy).abs()).fold(0.0, f64::max);
                let dm = rows.iter().zip(&ex).map(|(a, b)| (a.nl_sre2 - b.nl_sre2).abs()).fold(0.0, f64::max);
                comparison.push((t, fid, ds, dm));
            }
            snap += 1;
            records.extend(rows);
            Ok(())
        },
    )?;
    Ok(EngineRun {
        label: format!("mps_chi{cap}"),
        cap: Some(cap),
        records,
        max_bond_seen: run.max_bond_seen,
        discarded_weight: run.total_discarded_weight,
        full_sre: Vec::new(),
        comparison,
    })
}

/// Runs every engine the configuration asks for. MPS caps run concurrently.
pub fn run_engines(cfg: &RunConfig, caps: &[usize]) -> Result<Vec<EngineRun>> {
    let mut runs = Vec::new();
    let mut states = Vec::new();
    if cfg.engine.uses_exact() {
        let (run, s) = run_exact(cfg, cfg.engine.uses_mps())?;
        runs.push(run);
        states = s;
    }
    if cfg.engine.uses_mps() {
        let reference = (!states.is_empty()).then_some(states.as_slice());
        let mps: Vec<EngineRun> = caps
            .par_iter()
            .map(|&cap| run_mps(cfg, cap, reference))
            .collect::<Result<_>>()?;
        runs.extend(mps);
    }
    Ok(runs)
}

/// Asymptotic analysis of one engine run.
pub struct Analysis {
    pub splits: SplitReport,
    pub colocation: Vec<Colocation>,
}

pub fn analyze(cfg: &RunConfig, run: &EngineRun) -> Result<Analysis> {
    let last = run.final_records();
    let p: Vec<f64> = last.iter().map(|r| r.p_nu1).collect();
    let splits = detect_splits(&p, cfg.weak_threshold)?;
    let colocation = colocate_resources(&splits, last)?;
    Ok(Analysis { splits, colocation })
}

fn write_run_tables(sink: &mut Sink, cfg: &RunConfig, run: &EngineRun) -> Result<serde_json::Value> {
    let n = cfg.spec.n_sites();
    let label = &run.label;
    output::write_records(sink, cfg, label, &run.records)?;
    output::write_phase_space(sink, label, &run.records)?;

    let last = run.final_records();
    let stationary = run.stationary(n);
    let mut rows = Vec::with_capacity(last.len());
    for r in last {
        rows.push(vec![
            r.mode.to_string(),
            full(cfg.spec.omegas[r.mode - 1]),
            full(r.time),
            full(r.p_nu1),
            full(r.entropy),
            full(r.nl_sre2),
            full(r.antiflatness4),
            phase_region_with(r.entropy, cfg.entropy_threshold)?.as_str().to_string(),
            stationary[r.mode - 1].to_string(),
        ]);
    }
    sink.csv(
        &format!("asymptotic_{label}.csv"),
        &["mode", "omega", "time", "Pnu1", "S", "M2NL", "antiflat4", "region", "stationary"],
        rows,
    )?;

    let a = analyze(cfg, run)?;
    sink.csv(
        &format!("splits_{label}.csv"),
        &["lower_mode", "upper_mode", "delta", "strength"],
        a.splits.boundaries.iter().map(|b| {
            vec![
                b.lower_mode.to_string(),
                b.upper_mode.to_string(),
                full(b.delta),
                b.strength.as_str().to_string(),
            ]
        }),
    )?;
    sink.csv(
        &format!("colocation_{label}.csv"),
        &[
            "lower_mode",
            "upper_mode",
            "split_mode",
            "S",
            "M2NL",
            "entropy_is_global_max",
            "nl_sre2_is_local_min",
            "colocated",
        ],
        a.colocation.iter().map(|c| {
            vec![
                c.lower_mode.to_string(),
                c.upper_mode.to_string(),
                c.split_mode.to_string(),
                full(c.entropy),
                full(c.nl_sre2),
                c.entropy_is_global_max.to_string(),
                c.nl_sre2_is_local_min.to_string(),
                c.colocated.to_string(),
            ]
        }),
    )?;

    if mirror_symmetry_applicable(&cfg.spec) {
        let mut rows = Vec::new();
        for recs in run.records.chunks(n) {
            let d = pair_symmetry_check(&cfg.spec, recs)?;
            rows.push(vec![full(recs[0].time), full(d.max_entropy_diff), full(d.max_nl_sre2_diff)]);
        }
        sink.csv(
            &format!("pair_symmetry_{label}.csv"),
            &["time", "max_dS", "max_dM2NL"],
            rows,
        )?;
    }
    if !run.full_sre.is_empty() {
        sink.csv(
            &format!("full_sre_{label}.csv"),
            &["time", "M2"],
            run.full_sre.iter().map(|(t, m)| vec![full(*t), full(*m)]),
        )?;
    }
    if !run.comparison.is_empty() {
        sink.csv(
            &format!("comparison_{label}.csv"),
            &["time", "fidelity", "max_dS", "max_dM2NL"],
            run.comparison.iter().map(|(t, f, s, m)| vec![full(*t), full(*f), full(*s), full(*m)]),
        )?;
    }
    Ok(json!({
        "label": label,
        "cap": run.cap,
        "max_bond_seen": run.max_bond_seen,
        "discarded_weight": run.discarded_weight,
        "strong_splits": a.splits.strong().count(),
        "all_colocated": !a.colocation.is_empty() && a.colocation.iter().all(|c| c.colocated),
    }))
}

fn write_manifest(
    sink: &mut Sink,
    cfg: &RunConfig,
    verb: &str,
    started: Instant,
    engines: Vec<serde_json::Value>,
) -> Result<()> {
    sink.write("resolved.toml", &cfg.to_toml())?;
    let mut files = sink.files.clone();
    files.push("manifest.json".into());
    let manifest = json!({
        "verb": verb,
        "version": env!("CARGO_PKG_VERSION"),
        "resolved_config": cfg.to_toml(),
        "defaults_injected": cfg.defaults_injected,
        "engines": engines,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "files": files,
    });
    sink.json("manifest.json", &manifest)
}

/// Caps used by `run`: the sweep list when given, otherwise `mps.max_bond`.
fn run_caps(cfg: &RunConfig) -> Vec<usize> {
    if cfg.bond_caps.is_empty() {
        vec![cfg.max_bond]
    } else {
        cfg.bond_caps.clone()
    }
}

/// Full experiment: engine trajectories, asymptotic tables, split analysis,
/// phase-space files with the constraint arc, and a manifest.
pub fn run(cfg: &RunConfig) -> Result<Vec<EngineRun>> {
    cfg.check_capacity()?;
    let started = Instant::now();
    let runs = run_engines(cfg, &run_caps(cfg))?;
    let mut sink = Sink::new(&cfg.output_dir)?;
    let mut summaries = Vec::new();
    for r in &runs {
        summaries.push(write_run_tables(&mut sink, cfg, r)?);
    }
    sink.write("arc.csv", &output::arc_csv(ARC_POINTS)?)?;
    write_manifest(&mut sink, cfg, "run", started, summaries)?;
    Ok(runs)
}

/// Samples of the one-qubit arc written next to every run.
pub const ARC_POINTS: usize = 512;

/// Per-cap MPS runs, each in its own subdirectory, plus the consecutive-cap
/// difference table.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<EngineRun>> {
    if !cfg.engine.uses_mps() {
        return Err(Error::Config(vec!["engine.kind: sweep needs \"mps\" or \"both\"".into()]));
    }
    if cfg.bond_caps.len() < 2 {
        return Err(Error::Config(vec![format!(
            "mps.bond_caps: sweep needs at least 2 caps, got {}",
            cfg.bond_caps.len()
        )]));
    }
    cfg.check_capacity()?;
    let started = Instant::now();
    let mut mps_only = cfg.clone();
    mps_only.engine = super::config::EngineKind::Mps;
    let runs: Vec<(EngineRun, serde_json::Value)> = cfg
        .bond_caps
        .par_iter()
        .map(|&cap| {
            let run = run_mps(&mps_only, cap, None)?;
            let mut sink = Sink::new(&cap_dir(&cfg.output_dir, cap))?;
            let summary = write_run_tables(&mut sink, &mps_only, &run)?;
            sink.write("arc.csv", &output::arc_csv(ARC_POINTS)?)?;
            Ok((run, summary))
        })
        .collect::<Result<_>>()?;
    let mut sink = Sink::new(&cfg.output_dir)?;
    sink.csv("sweep_diff.csv", &SWEEP_DIFF_HEADER, sweep_diff_rows(cfg, &runs.iter().map(|r| &r.0).collect::<Vec<_>>())?)?;
    let (runs, summaries): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    write_manifest(&mut sink, cfg, "sweep", started, summaries)?;
    Ok(runs)
}

pub fn cap_dir(root: &Path, cap: usize) -> std::path::PathBuf {
    root.join(format!("cap_{cap}"))
}

pub const SWEEP_DIFF_HEADER: [&str; 9] =
    ["cap_from", "cap_to", "mode", "S_from", "dS", "dM2NL", "region", "tandem", "flag"];

/// Differences of the final per-mode resources between consecutive caps.
/// In the low-entanglement region the two resources are expected to move in
/// tandem; a mismatch is flagged, not treated as an error.
pub fn sweep_diff_rows(cfg: &RunConfig, runs: &[&EngineRun]) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for pair in runs.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (ra, rb) in a.final_records().iter().zip(b.final_records()) {
            let ds = rb.entropy - ra.entropy;
            let dm = rb.nl_sre2 - ra.nl_sre2;
            let region = phase_region_with(ra.entropy, cfg.entropy_threshold)?;
            let sign = |x: f64| if x.abs() <= DIFF_ZERO { 0 } else if x > 0.0 { 1 } else { -1 };
            let tandem = sign(ds) == sign(dm);
            let flag = if region == crate::resources::PhaseRegion::LowEntanglement && !tandem {
                "tandem_violated"
            } else {
                ""
            };
            rows.push(vec![
                a.cap.unwrap_or(0).to_string(),
                b.cap.unwrap_or(0).to_string(),
                ra.mode.to_string(),
                full(ra.entropy),
                full(ds),
                full(dm),
                region.as_str().to_string(),
                tandem.to_string(),
                flag.to_string(),
            ]);
        }
    }
    Ok(rows)
}

/// Differences below this count as zero when comparing signs.
pub const DIFF_ZERO: f64 = 1e-10;
