//! Polarization vectors, mass-basis survival probabilities, spectral-split
//! detection and the split/resource co-location analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::StateVector;
use crate::linalg::Mat2;
use crate::model::{Basis, Flavor, SystemSpec};
use crate::resources::{antiflatness, nl_sre2, von_neumann_entropy, EntanglementSpectrum, ResourceRecord};

/// Threshold on `|ΔP_ν₁|` for a strong split.
pub const STRONG_SPLIT_THRESHOLD: f64 = 0.5;
/// Default threshold on `|ΔP_ν₁|` for a weak split.
pub const DEFAULT_WEAK_THRESHOLD: f64 = 0.25;

/// Anything that can report one-site reduced density matrices.
pub trait SiteDensity {
    fn n_sites(&self) -> usize;
    fn site_density_matrix(&self, site: usize) -> Result<Mat2>;

    /// All one-site density matrices; engines may override with a single sweep.
    fn all_site_density_matrices(&self) -> Result<Vec<Mat2>> {
        (0..self.n_sites()).map(|i| self.site_density_matrix(i)).collect()
    }
}

impl SiteDensity for StateVector {
    fn n_sites(&self) -> usize {
        StateVector::n_sites(self)
    }

    fn site_density_matrix(&self, site: usize) -> Result<Mat2> {
        StateVector::site_density_matrix(self, site)
    }
}

/// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a qubit density matrix.
pub fn bloch_vector(rho: &Mat2) -> [f64; 3] {
    let tr = (rho[0][0] + rho[1][1]).re;
    [
        2.0 * rho[0][1].re / tr,
        -2.0 * rho[0][1].im / tr,
        (rho[0][0] - rho[1][1]).re / tr,
    ]
}

/// Rotates a flavor-frame polarization vector into the mass frame.
pub fn flavor_to_mass_frame(p: [f64; 3], theta: f64) -> [f64; 3] {
    let (s, c) = (2.0 * theta).sin_cos();
    [c * p[0] + s * p[2], p[1], -s * p[0] + c * p[2]]
}

/// Polarization of `site`, in the flavor frame or rotated to the mass frame.
pub fn polarization<S: SiteDensity + ?Sized>(
    state: &S,
    site: usize,
    basis: Basis,
    theta: f64,
) -> Result<[f64; 3]> {
    let p = bloch_vector(&state.site_density_matrix(site)?);
    Ok(match basis {
        Basis::Flavor => p,
        Basis::Mass => flavor_to_mass_frame(p, theta),
    })
}

/// `P_ν₁ = (1 + P_z^mass)/2` from a flavor-frame polarization.
pub fn p_nu1_from_polarization(p_flavor: [f64; 3], theta: f64) -> f64 {
    let pm = flavor_to_mass_frame(p_flavor, theta);
    (0.5 * (1.0 + pm[2])).clamp(0.0, 1.0)
}

/// Probability of finding the neutrino at `site` in the first mass eigenstate.
pub fn survival_probability<S: SiteDensity + ?Sized>(state: &S, site: usize, theta: f64) -> Result<f64> {
    let p = polarization(state, site, Basis::Flavor, theta)?;
    Ok(p_nu1_from_polarization(p, theta))
}

/// One [`ResourceRecord`] per mode from the one-site density matrices.
pub fn resource_records<S: SiteDensity + ?Sized>(
    state: &S,
    time: f64,
    theta: f64,
    max_bond: usize,
) -> Result<Vec<ResourceRecord>> {
    state
        .all_site_density_matrices()?
        .iter()
        .enumerate()
        .map(|(i, rho)| {
            let spectrum = qubit_spectrum(rho)?;
            let p = bloch_vector(rho);
            Ok(ResourceRecord {
                time,
                mode: i + 1,
                entropy: von_neumann_entropy(&spectrum),
                nl_sre2: nl_sre2(&spectrum)?,
                antiflatness4: 4.0 * antiflatness(&spectrum),
                polarization: p,
                p_nu1: p_nu1_from_polarization(p, theta),
                max_bond,
            })
        })
        .collect()
}

/// Descending eigenvalues of a one-site density matrix as a spectrum.
pub fn qubit_spectrum(rho: &Mat2) -> Result<EntanglementSpectrum> {
    let a = rho[0][0].re;
    let d = rho[1][1].re;
    let b = rho[0][1].norm();
    let half_gap = ((0.5 * (a - d)).powi(2) + b * b).sqrt();
    let mid = 0.5 * (a + d);
    EntanglementSpectrum::from_eigenvalues(vec![mid + half_gap, mid - half_gap], 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrength {
    Strong,
    Weak,
}

impl SplitStrength {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrength::Strong => "strong",
            SplitStrength::Weak => "weak",
        }
    }
}

/// A jump in `P_ν₁` between adjacent modes (1-based indices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitBoundary {
    pub lower_mode: usize,
    pub upper_mode: usize,
    pub delta: f64,
    pub strength: SplitStrength,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub boundaries: Vec<SplitBoundary>,
    pub per_mode_p: Vec<f64>,
    pub weak_threshold: f64,
}

impl SplitReport {
    pub fn strong(&self) -> impl Iterator<Item = &SplitBoundary> {
        self.boundaries.iter().filter(|b| b.strength == SplitStrength::Strong)
    }
}

/// Scans adjacent modes of an asymptotic `P_ν₁` profile for spectral splits.
pub fn detect_splits(per_mode_p: &[f64], weak_threshold: f64) -> Result<SplitReport> {
    if per_mode_p.len() < 2 {
        return Err(Error::InvalidArgument("split detection needs at least two modes".into()));
    }
    if !(weak_threshold > 0.0 && weak_threshold <= STRONG_SPLIT_THRESHOLD) {
        return Err(Error::InvalidArgument(format!(
            "weak threshold {weak_threshold} must lie in (0, {STRONG_SPLIT_THRESHOLD}]"
        )));
    }
    let boundaries = per_mode_p
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let delta = (w[1] - w[0]).abs();
            let strength = if delta >= STRONG_SPLIT_THRESHOLD {
                SplitStrength::Strong
            } else if delta >= weak_threshold {
                SplitStrength::Weak
            } else {
                return None;
            };
            Some(SplitBoundary {
                lower_mode: i + 1,
                upper_mode: i + 2,
                delta,
                strength,
            })
        })
        .collect();
    Ok(SplitReport {
        boundaries,
        per_mode_p: per_mode_p.to_vec(),
        weak_threshold,
    })
}

/// Resource structure at one strong split boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Colocation {
    pub lower_mode: usize,
    pub upper_mode: usize,
    /// Mode on the higher-entropy side of the boundary.
    pub split_mode: usize,
    pub entropy: f64,
    pub nl_sre2: f64,
    pub entropy_is_global_max: bool,
    pub nl_sre2_is_local_min: bool,
    pub colocated: bool,
}

/// Tolerance used when comparing resource values across modes.
pub const COLOCATION_TOL: f64 = 1e-9;

/// For every strong boundary, checks whether the higher-entropy side attains
/// the global entropy maximum while its `nl_sre2` is a local minimum.
pub fn colocate_resources(report: &SplitReport, records: &[ResourceRecord]) -> Result<Vec<Colocation>> {
    let n = report.per_mode_p.len();
    let mut by_mode: Vec<Option<&ResourceRecord>> = vec![None; n];
    for r in records {
        if r.mode == 0 || r.mode > n {
            return Err(Error::InvalidArgument(format!("record mode {} outside 1..={n}", r.mode)));
        }
        by_mode[r.mode - 1] = Some(r);
    }
    let missing: Vec<String> = by_mode
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!("records missing modes {}", missing.join(", "))));
    }
    let rec: Vec<&ResourceRecord> = by_mode.into_iter().map(|r| r.expect("checked")).collect();
    let s_max = rec.iter().map(|r| r.entropy).fold(f64::NEG_INFINITY, f64::max);
    Ok(report
        .strong()
        .map(|b| {
            let (lo, hi) = (b.lower_mode - 1, b.upper_mode - 1);
            let k = if rec[hi].entropy > rec[lo].entropy { hi } else { lo };
            let m = rec[k].nl_sre2;
            let entropy_is_global_max = rec[k].entropy >= s_max - COLOCATION_TOL;
            let nl_sre2_is_local_min = [k.checked_sub(1), Some(k + 1)]
                .into_iter()
                .flatten()
                .filter(|&j| j < n)
                .all(|j| m <= rec[j].nl_sre2 + COLOCATION_TOL);
            Colocation {
                lower_mode: b.lower_mode,
                upper_mode: b.upper_mode,
                split_mode: k + 1,
                entropy: rec[k].entropy,
                nl_sre2: m,
                entropy_is_global_max,
                nl_sre2_is_local_min,
                colocated: entropy_is_global_max && nl_sre2_is_local_min,
            }
        })
        .collect())
}

/// Largest mirror-pair discrepancies at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSymmetry {
    pub max_entropy_diff: f64,
    pub max_nl_sre2_diff: f64,
}

/// Whether mode `i` and mode `N+1−i` evolve identically in every local
/// resource: requires a grid symmetric about its center and an initial
/// configuration whose mirror image is its flavor complement.
///
/// Under those conditions a π rotation about the mass-frame y axis on every
/// site, combined with the mirror permutation, maps the Hamiltonian and the
/// initial state onto themselves up to a global mass-frame z rotation.
pub fn mirror_symmetry_applicable(spec: &SystemSpec) -> bool {
    let n = spec.n_sites();
    let complement = |f: Flavor| match f {
        Flavor::Electron => Flavor::Muon,
        Flavor::Muon => Flavor::Electron,
    };
    spec.has_mirror_symmetric_grid(1e-12 * spec.omegas.iter().fold(1.0_f64, |a, w| a.max(w.abs())))
        && spec.initial_config.len() == n
        && (0..n).all(|i| spec.initial_config[n - 1 - i] == complement(spec.initial_config[i]))
}

/// `max_i |S(ωᵢ) − S(ω_{N+1−i})|` and the same for `nl_sre2`, over records
/// taken at a single time.
pub fn pair_symmetry_check(spec: &SystemSpec, records: &[ResourceRecord]) -> Result<PairSymmetry> {
    if !mirror_symmetry_applicable(spec) {
        return Err(Error::Inapplicable(
            "mirror-pair symmetry needs a center-symmetric grid and a flavor-complementary mirrored configuration"
                .into(),
        ));
    }
    let n = spec.n_sites();
    let mut by_mode: Vec<Option<&ResourceRecord>> = vec![None; n];
    for r in records {
        if r.mode == 0 || r.mode > n {
            return Err(Error::InvalidArgument(format!("record mode {} outside 1..={n}", r.mode)));
        }
        by_mode[r.mode - 1] = Some(r);
    }
    let mut out = PairSymmetry {
        max_entropy_diff: 0.0,
        max_nl_sre2_diff: 0.0,
    };
    for i in 0..n / 2 {
        let (a, b) = match (by_mode[i], by_mode[n - 1 - i]) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "records missing mode {} or {}",
                    i + 1,
                    n - i
                )))
            }
        };
        out.max_entropy_diff = out.max_entropy_diff.max((a.entropy - b.entropy).abs());
        out.max_nl_sre2_diff = out.max_nl_sre2_diff.max((a.nl_sre2 - b.nl_sre2).abs());
    }
    Ok(out)
}

/// True when `max |dP/dt|` over the trailing `fraction` of the series is
/// below `tol`. Series shorter than two samples in the window count as
/// stationary only if they have a single point.
pub fn is_stationary(times: &[f64], values: &[f64], fraction: f64, tol: f64) -> bool {
    if times.len() != values.len() || times.len() < 2 {
        return true;
    }
    let t_end = *times.last().expect("nonempty");
    let t_start = t_end - fraction * (t_end - times[0]);
    let first = times.iter().position(|&t| t >= t_start).unwrap_or(times.len() - 1);
    let first = first.min(times.len() - 2);
    (first..times.len() - 1).all(|k| {
        let dt = times[k + 1] - times[k];
        dt <= 0.0 || ((values[k + 1] - values[k]) / dt).abs() < tol
    })
}
