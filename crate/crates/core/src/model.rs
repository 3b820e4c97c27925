//! The physical system: frequency grid, mixing, coupling profile, initial
//! flavor content, and the collective Hamiltonian in the mass and flavor bases.
//!
//! Conventions used throughout the crate:
//!
//! * the isospin of each neutrino is `J = σ/2`;
//! * `ν_e = cos θ ν₁ + sin θ ν₂`, `ν_μ = −sin θ ν₁ + cos θ ν₂`;
//! * electron flavor is spin-up in the flavor basis (`P_z = +1`);
//! * normal ordering puts `−ωᵢ σ_z/2` on each site in the mass basis;
//!   inverted ordering flips that sign;
//! * computational index `b = Σᵢ bᵢ 2^(N−1−i)`, i.e. site 0 is the most
//!   significant bit, and site `i` carries frequency `omegas[i]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::StateVector;
use crate::linalg::{add2, adjoint2, mul2, pauli, scale2, Axis, CMatrix, Mat2, C64, ONE, ZERO};

/// Largest system for which dense matrices are materialized.
pub const MAX_DENSE_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Electron,
    Muon,
}

impl Flavor {
    pub fn from_char(c: char) -> Option<Flavor> {
        match c {
            'e' | 'E' => Some(Flavor::Electron),
            'm' | 'M' | 'u' | 'μ' => Some(Flavor::Muon),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Flavor::Electron => 'e',
            Flavor::Muon => 'm',
        }
    }

    /// Local amplitude vector in the flavor basis.
    pub fn amplitudes(self) -> [C64; 2] {
        match self {
            Flavor::Electron => [ONE, ZERO],
            Flavor::Muon => [ZERO, ONE],
        }
    }
}

/// Parses a compact flavor string such as `"mmmeeeeeeeee"`.
pub fn parse_flavors(s: &str) -> Result<Vec<Flavor>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .enumerate()
        .map(|(i, c)| {
            Flavor::from_char(c).ok_or_else(|| {
                Error::InvalidSpec(format!("unknown flavor label {c:?} at position {i}"))
            })
        })
        .collect()
}

pub fn flavors_to_string(flavors: &[Flavor]) -> String {
    flavors.iter().map(|f| f.as_char()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Mass,
    Flavor,
}

/// Time dependence of the neutrino-neutrino coupling `μ(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingProfile {
    /// `μ(t) = μ₀`.
    Constant { mu0: f64 },
    /// `μ(t) = μ₀ (R/(R+t))^p`.
    PowerDecay { mu0: f64, radius: f64, exponent: f64 },
    /// `μ(t) = μ₀ [1 − √(1 − (R/(r₀+t))²)]²` with `R` the emission radius
    /// and `r₀ ≥ R` the radius at `t = 0`.
    SupernovaSingleAngle { mu0: f64, radius: f64, start_radius: f64 },
}

impl CouplingProfile {
    pub fn mu0(&self) -> f64 {
        match *self {
            CouplingProfile::Constant { mu0 }
            | CouplingProfile::PowerDecay { mu0, .. }
            | CouplingProfile::SupernovaSingleAngle { mu0, .. } => mu0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CouplingProfile::Constant { .. } => "constant",
            CouplingProfile::PowerDecay { .. } => "power_decay",
            CouplingProfile::SupernovaSingleAngle { .. } => "supernova_single_angle",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CouplingProfile::Constant { .. })
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mu0 = self.mu0();
        if !(mu0.is_finite() && mu0 >= 0.0) {
            errs.push(format!("coupling.mu0 must be finite and non-negative, got {mu0}"));
        }
        match *self {
            CouplingProfile::Constant { .. } => {}
            CouplingProfile::PowerDecay { radius, exponent, .. } => {
                if !(radius.is_finite() && radius > 0.0) {
                    errs.push(format!("coupling.radius must be positive, got {radius}"));
                }
                if !(exponent.is_finite() && exponent >= 0.0) {
                    errs.push(format!("coupling.exponent must be non-negative, got {exponent}"));
                }
            }
            CouplingProfile::SupernovaSingleAngle { radius, start_radius, .. } => {
                if !(radius.is_finite() && radius > 0.0) {
                    errs.push(format!("coupling.radius must be positive, got {radius}"));
                }
                if !(start_radius.is_finite() && start_radius >= radius) {
                    errs.push(format!(
                        "coupling.start_radius must be finite and at least coupling.radius, got {start_radius}"
                    ));
                }
            }
        }
        errs
    }

    /// Coupling strength at time `t ≥ 0`.
    pub fn coupling_at(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling requested at invalid time {t}"
            )));
        }
        Ok(match *self {
            CouplingProfile::Constant { mu0 } => mu0,
            CouplingProfile::PowerDecay { mu0, radius, exponent } => {
                mu0 * (radius / (radius + t)).powf(exponent)
            }
            CouplingProfile::SupernovaSingleAngle { mu0, radius, start_radius } => {
                let x = radius / (start_radius + t);
                let g = 1.0 - (1.0 - x * x).max(0.0).sqrt();
                mu0 * g * g
            }
        })
    }
}

impl Default for CouplingProfile {
    fn default() -> Self {
        CouplingProfile::PowerDecay {
            mu0: DEFAULT_MU0,
            radius: DEFAULT_RADIUS,
            exponent: DEFAULT_EXPONENT,
        }
    }
}

pub const DEFAULT_MIXING_ANGLE: f64 = 0.1;
pub const DEFAULT_MU0: f64 = 5.0;
pub const DEFAULT_RADIUS: f64 = 10.0;
pub const DEFAULT_EXPONENT: f64 = 2.0;

/// Equally spaced grid `ωᵢ = i·ω₀`, `i = 1..=n`.
pub fn uniform_omegas(n: usize, omega0: f64) -> Vec<f64> {
    (1..=n).map(|i| i as f64 * omega0).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassOrdering {
    #[default]
    Normal,
    Inverted,
}

impl MassOrdering {
    /// Sign multiplying every ωᵢ in the vacuum term.
    pub fn sign(self) -> f64 {
        match self {
            MassOrdering::Normal => 1.0,
            MassOrdering::Inverted => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MassOrdering::Normal => "normal",
            MassOrdering::Inverted => "inverted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(MassOrdering::Normal),
            "inverted" => Some(MassOrdering::Inverted),
            _ => None,
        }
    }
}

/// Full description of a simulated neutrino ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub omegas: Vec<f64>,
    pub mixing_angle: f64,
    pub coupling: CouplingProfile,
    pub initial_config: Vec<Flavor>,
    #[serde(default)]
    pub mass_ordering: MassOrdering,
}

impl SystemSpec {
    /// Builds and fully validates a spec.
    pub fn new(
        omegas: Vec<f64>,
        mixing_angle: f64,
        coupling: CouplingProfile,
        initial_config: Vec<Flavor>,
    ) -> Result<Self> {
        let spec = SystemSpec {
            omegas,
            mixing_angle,
            coupling,
            initial_config,
            mass_ordering: MassOrdering::Normal,
        };
        let errs = spec.validation_errors();
        if errs.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidSpec(errs.join("; ")))
        }
    }

    /// Spec with the default grid, mixing angle and coupling.
    pub fn with_defaults(initial_config: Vec<Flavor>) -> Result<Self> {
        let n = initial_config.len();
        Self::new(
            uniform_omegas(n, 1.0),
            DEFAULT_MIXING_ANGLE,
            CouplingProfile::default(),
            initial_config,
        )
    }

    pub fn with_mass_ordering(mut self, ordering: MassOrdering) -> Self {
        self.mass_ordering = ordering;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.omegas.len()
    }

    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let n = self.omegas.len();
        if n < 2 {
            errs.push(format!("system.n_sites must be at least 2, got {n}"));
        }
        let bad: Vec<String> = self
            .omegas
            .windows(2)
            .enumerate()
            .filter(|(_, w)| !(w[1] > w[0]))
            .map(|(i, _)| format!("{}->{}", i + 1, i + 2))
            .collect();
        if !bad.is_empty() {
            errs.push(format!(
                "system.omegas must be strictly increasing; violated at modes {}",
                bad.join(", ")
            ));
        }
        let nonpos: Vec<String> = self
            .omegas
            .iter()
            .enumerate()
            .filter(|(_, w)| !(w.is_finite() && **w > 0.0))
            .map(|(i, _)| (i + 1).to_string())
            .collect();
        if !nonpos.is_empty() {
            errs.push(format!(
                "system.omegas must be finite and positive; violated at modes {}",
                nonpos.join(", ")
            ));
        }
        let th = self.mixing_angle;
        if !(th > 0.0 && th <= std::f64::consts::FRAC_PI_4) {
            errs.push(format!("system.mixing_angle must lie in (0, pi/4], got {th}"));
        }
        if self.initial_config.len() != n {
            errs.push(format!(
                "system.initial has {} flavor labels but n_sites is {n}",
                self.initial_config.len()
            ));
        }
        errs.extend(self.coupling.validate());
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(errs.join("; ")))
        }
    }

    pub fn coupling_at(&self, t: f64) -> Result<f64> {
        self.coupling.coupling_at(t)
    }

    /// True when the frequency grid is symmetric about its center.
    pub fn has_mirror_symmetric_grid(&self, tol: f64) -> bool {
        let n = self.omegas.len();
        if n < 2 {
            return true;
        }
        let c = self.omegas[0] + self.omegas[n - 1];
        (0..n).all(|i| (self.omegas[i] + self.omegas[n - 1 - i] - c).abs() <= tol)
    }
}

/// Two-flavor mixing matrix mapping mass-basis amplitudes to flavor-basis
/// amplitudes.
pub fn pmns(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [
        [C64::new(c, 0.0), C64::new(s, 0.0)],
        [C64::new(-s, 0.0), C64::new(c, 0.0)],
    ]
}

/// `σ_z` of the mass basis expressed in the chosen basis.
pub fn mass_sigma_z(theta: f64, basis: Basis) -> Mat2 {
    match basis {
        Basis::Mass => pauli(Axis::Z),
        Basis::Flavor => {
            let u = pmns(theta);
            mul2(&mul2(&u, &pauli(Axis::Z)), &adjoint2(&u))
        }
    }
}

/// Per-time coefficients of the Hamiltonian
/// `H = Σᵢ hᵢ + pair_coupling · Σ_{i<j} σᵢ·σⱼ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerms {
    pub one_body: Vec<Mat2>,
    pub pair_coupling: f64,
}

impl HamiltonianTerms {
    pub fn new(spec: &SystemSpec, t: f64, basis: Basis) -> Result<Self> {
        Ok(Self::from_coupling(spec, spec.coupling_at(t)?, basis)?)
    }

    /// Terms with an explicit coupling value instead of the system's profile.
    pub fn from_coupling(spec: &SystemSpec, mu: f64, basis: Basis) -> Result<Self> {
        Ok(HamiltonianTerms {
            one_body: build_one_body(spec, basis)?,
            pair_coupling: mu / 2.0,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.one_body.len()
    }
}

fn check_grid(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() {
        return Err(Error::InvalidSpec("no sites".into()));
    }
    if let Some(i) = omegas.iter().position(|w| !w.is_finite()) {
        return Err(Error::InvalidSpec(format!("omega of mode {} is not finite", i + 1)));
    }
    if let Some(i) = omegas.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec(format!(
            "omegas decrease between modes {} and {}",
            i + 1,
            i + 2
        )));
    }
    Ok(())
}

/// One-body vacuum terms `−ωᵢ σ_z^mass / 2` expressed in `basis`.
///
/// Degenerate (equal) neighbouring frequencies are accepted here; only
/// decreasing grids are rejected.
pub fn build_one_body(spec: &SystemSpec, basis: Basis) -> Result<Vec<Mat2>> {
    check_grid(&spec.omegas)?;
    let sz = mass_sigma_z(spec.mixing_angle, basis);
    let sign = spec.mass_ordering.sign();
    Ok(spec
        .omegas
        .iter()
        .map(|&w| scale2(&sz, C64::new(-sign * w / 2.0, 0.0)))
        .collect())
}

/// Dense `2^N × 2^N` Hamiltonian at time `t`.
pub fn dense_hamiltonian(spec: &SystemSpec, t: f64, basis: Basis) -> Result<CMatrix> {
    let n = spec.n_sites();
    if n > MAX_DENSE_SITES {
        return Err(Error::Capacity {
            what: "dense_hamiltonian",
            limit: MAX_DENSE_SITES,
            requested: n,
        });
    }
    let terms = HamiltonianTerms::new(spec, t, basis)?;
    Ok(dense_from_terms(&terms))
}

/// Materializes `terms` as a dense matrix.
pub fn dense_from_terms(terms: &HamiltonianTerms) -> CMatrix {
    let n = terms.n_sites();
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    for (i, local) in terms.one_body.iter().enumerate() {
        let mask = 1usize << (n - 1 - i);
        for b in 0..dim {
            let bit = usize::from(b & mask != 0);
            h[(b, b)] += local[bit][bit];
            h[(b ^ mask, b)] += local[1 - bit][bit];
        }
    }
    // σᵢ·σⱼ = 2 SWAPᵢⱼ − 1
    let c = terms.pair_coupling;
    if c != 0.0 {
        for i in 0..n {
            for j in i + 1..n {
                let mi = 1usize << (n - 1 - i);
                let mj = 1usize << (n - 1 - j);
                for b in 0..dim {
                    let differ = (b & mi != 0) != (b & mj != 0);
                    if differ {
                        h[(b ^ mi ^ mj, b)] += C64::new(2.0 * c, 0.0);
                        h[(b, b)] -= C64::new(c, 0.0);
                    } else {
                        h[(b, b)] += C64::new(c, 0.0);
                    }
                }
            }
        }
    }
    h
}

/// Product state of the configured flavors.
pub fn initial_state(spec: &SystemSpec) -> Result<StateVector> {
    if spec.initial_config.len() != spec.n_sites() {
        return Err(Error::InvalidSpec(format!(
            "initial configuration has {} labels for {} sites",
            spec.initial_config.len(),
            spec.n_sites()
        )));
    }
    StateVector::product(&spec.initial_config)
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} theta={} ordering={} config={} coupling={:?}",
            self.n_sites(),
            self.mixing_angle,
            self.mass_ordering.as_str(),
            flavors_to_string(&self.initial_config),
            self.coupling
        )
    }
}

/// Sum of two one-body matrices; exposed for callers assembling custom terms.
pub fn combine_one_body(a: &Mat2, b: &Mat2) -> Mat2 {
    add2(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues_desc, max_abs_diff2};

    fn spec_raw(omegas: Vec<f64>, theta: f64, mu: f64) -> SystemSpec {
        let n = omegas.len();
        SystemSpec {
            omegas,
            mixing_angle: theta,
            coupling: CouplingProfile::Constant { mu0: mu },
            initial_config: vec![Flavor::Electron; n],
            mass_ordering: MassOrdering::Normal,
        }
    }

    #[test]
    fn one_body_mass_basis_single_site() {
        let spec = spec_raw(vec![1.0], 0.1, 0.0);
        let h = build_one_body(&spec, Basis::Mass).unwrap();
        let want = scale2(&pauli(Axis::Z), C64::new(-0.5, 0.0));
        assert!(max_abs_diff2(&h[0], &want) < 1e-15);
        let ev = hermitian_eigenvalues_desc(&crate::linalg::to_dmatrix(&h[0]));
        assert!((ev[0] - 0.5).abs() < 1e-15 && (ev[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_body_maximal_mixing_is_sigma_x() {
        // cos 2θ = 0 leaves +ω sin 2θ σx / 2
        let spec = spec_raw(vec![1.0], std::f64::consts::FRAC_PI_4, 0.0);
        let h = build_one_body(&spec, Basis::Flavor).unwrap();
        let want = scale2(&pauli(Axis::X), C64::new(0.5, 0.0));
        assert!(max_abs_diff2(&h[0], &want) < 1e-15);
    }

    #[test]
    fn one_body_flavor_rotation_by_hand() {
        let spec = spec_raw(vec![1.0, 2.0], 0.1, 0.0);
        let h = build_one_body(&spec, Basis::Flavor).unwrap();
        let (c, s) = (0.2f64.cos(), 0.2f64.sin());
        for (k, w) in [1.0, 2.0].iter().enumerate() {
            let want: Mat2 = [
                [C64::new(-w / 2.0 * c, 0.0), C64::new(w / 2.0 * s, 0.0)],
                [C64::new(w / 2.0 * s, 0.0), C64::new(w / 2.0 * c, 0.0)],
            ];
            assert!(max_abs_diff2(&h[k], &want) < 1e-15);
        }
    }

    #[test]
    fn one_body_rejects_decreasing_grid() {
        let spec = spec_raw(vec![2.0, 1.0], 0.1, 0.0);
        assert!(build_one_body(&spec, Basis::Flavor).is_err());
    }

    #[test]
    fn coupling_profiles() {
        let c = CouplingProfile::Constant { mu0: 5.0 };
        assert_eq!(c.coupling_at(100.0).unwrap(), 5.0);
        let p = CouplingProfile::PowerDecay { mu0: 5.0, radius: 1.0, exponent: 3.0 };
        assert_eq!(p.coupling_at(0.0).unwrap(), 5.0);
        assert!((p.coupling_at(1.0).unwrap() - 0.625).abs() < 1e-15);
        let sn = CouplingProfile::SupernovaSingleAngle { mu0: 3.0, radius: 2.0, start_radius: 2.0 };
        assert_eq!(sn.coupling_at(0.0).unwrap(), 3.0);
        // R/r = 1/2 at t = 2
        let g = 1.0 - 0.75_f64.sqrt();
        assert!((sn.coupling_at(2.0).unwrap() - 3.0 * g * g).abs() < 1e-15);
        let bad = CouplingProfile::SupernovaSingleAngle { mu0: 3.0, radius: 2.0, start_radius: 1.0 };
        assert_eq!(bad.validate().len(), 1);
        assert!(c.coupling_at(-1.0).is_err());
        assert!(c.coupling_at(f64::NAN).is_err());
    }

    #[test]
    fn decaying_profiles_are_monotone() {
        for p in [
            CouplingProfile::PowerDecay { mu0: 5.0, radius: 3.0, exponent: 2.0 },
            CouplingProfile::SupernovaSingleAngle { mu0: 50.0, radius: 3.0, start_radius: 7.0 },
        ] {
            let mut prev = p.coupling_at(0.0).unwrap();
            for k in 1..2000 {
                let m = p.coupling_at(k as f64 * 0.37).unwrap();
                assert!(m >= 0.0 && m <= prev);
                prev = m;
            }
        }
    }

    #[test]
    fn two_spin_exchange_spectrum() {
        // 2μ J₁·J₂ on triplet/singlet: μ/2 (x3) and −3μ/2
        for basis in [Basis::Mass, Basis::Flavor] {
            let spec = spec_raw(vec![0.0, 0.0], 0.3, 1.0);
            let h = dense_hamiltonian(&spec, 0.0, basis).unwrap();
            let ev = hermitian_eigenvalues_desc(&h);
            let want = [0.5, 0.5, 0.5, -1.5];
            for (a, b) in ev.iter().zip(want) {
                assert!((a - b).abs() < 1e-13, "{ev:?}");
            }
        }
    }

    #[test]
    fn dense_single_site_matches_one_body() {
        let spec = spec_raw(vec![1.3], 0.2, 7.0);
        let h = dense_hamiltonian(&spec, 0.0, Basis::Flavor).unwrap();
        let ob = build_one_body(&spec, Basis::Flavor).unwrap();
        assert!(crate::linalg::max_abs_diff(&h, &crate::linalg::to_dmatrix(&ob[0])) < 1e-15);
    }

    #[test]
    fn capacity_guard() {
        let spec = spec_raw(uniform_omegas(15, 1.0), 0.1, 1.0);
        assert!(matches!(
            dense_hamiltonian(&spec, 0.0, Basis::Flavor),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn inverted_ordering_is_the_complementary_angle_up_to_z() {
        // -ω(c σz - s σx)/2 at π/2-θ, conjugated by Z on every site, is +ω(c σz - s σx)/2 at θ
        let theta = 0.23;
        let mut inv = spec_raw(vec![0.7, 1.3, 2.9], theta, 1.7).with_mass_ordering(MassOrdering::Inverted);
        inv.initial_config = vec![Flavor::Muon, Flavor::Electron, Flavor::Electron];
        let norm = spec_raw(vec![0.7, 1.3, 2.9], std::f64::consts::FRAC_PI_2 - theta, 1.7);
        let a = dense_hamiltonian(&inv, 0.0, Basis::Flavor).unwrap();
        let b = dense_hamiltonian(&norm, 0.0, Basis::Flavor).unwrap();
        let z = CMatrix::from_fn(8, 8, |r, c| {
            if r != c {
                ZERO
            } else if r.count_ones() % 2 == 0 {
                ONE
            } else {
                -ONE
            }
        });
        assert!(crate::linalg::max_abs_diff(&a, &(&z * b * &z)) <= 1e-13);
        let one = build_one_body(&inv, Basis::Mass).unwrap();
        assert!((one[0][0][0].re - 0.35).abs() < 1e-15);
    }

    #[test]
    fn initial_state_ordering() {
        let s = SystemSpec {
            omegas: vec![1.0, 2.0],
            mixing_angle: 0.1,
            coupling: CouplingProfile::default(),
            initial_config: vec![Flavor::Muon, Flavor::Electron],
            mass_ordering: MassOrdering::Normal,
        };
        let psi = initial_state(&s).unwrap();
        let want = [ZERO, ZERO, ONE, ZERO];
        assert_eq!(psi.amplitudes(), &want);

        let s = SystemSpec::with_defaults(vec![Flavor::Electron; 12]).unwrap();
        let psi = initial_state(&s).unwrap();
        assert_eq!(psi.amplitudes()[0], ONE);
        assert!(psi.amplitudes()[1..].iter().all(|z| *z == ZERO));
    }

    #[test]
    fn spec_validation_collects_all_errors() {
        let s = SystemSpec {
            omegas: vec![1.0, 1.0, -2.0],
            mixing_angle: 1.0,
            coupling: CouplingProfile::Constant { mu0: -1.0 },
            initial_config: vec![Flavor::Electron; 2],
            mass_ordering: MassOrdering::Normal,
        };
        let errs = s.validation_errors();
        assert_eq!(errs.len(), 5, "{errs:?}");
        assert!(errs[0].contains("1->2") && errs[0].contains("2->3"));
    }

    #[test]
    fn flavor_strings() {
        let f = parse_flavors("mmmeeeeeeeee").unwrap();
        assert_eq!(f.iter().filter(|x| **x == Flavor::Muon).count(), 3);
        assert_eq!(f.len(), 12);
        assert_eq!(flavors_to_string(&f), "mmmeeeeeeeee");
        assert!(parse_flavors("ex").is_err());
    }
}
