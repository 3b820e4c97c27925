//! Quantum-resource measures evaluated on entanglement spectra: von Neumann
//! entropy, the spectrum-based non-local stabilizer Rényi entropy, the
//! antiflatness, the bound chain between them, and the one-qubit arc.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ λ = 1`.
pub const SPECTRUM_SUM_TOL: f64 = 1e-10;
/// Largest link dimension evaluated with the `O(r⁴)` quadruple sum.
pub const MAX_GENERIC_RANK: usize = 64;
/// Default entropy threshold separating the low- and high-entanglement regimes.
pub const DEFAULT_REGION_THRESHOLD: f64 = 0.4;

/// Descending, zero-padded eigenvalues of a reduced density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    values: Vec<f64>,
}

impl EntanglementSpectrum {
    /// Validates `values` (descending, non-negative, unit sum) and pads them
    /// with zeros to `r`, which must be a power of two.
    pub fn new(values: Vec<f64>, r: usize) -> Result<Self> {
        if r == 0 || !r.is_power_of_two() {
            return Err(Error::InvalidSpectrum(format!("dimension {r} is not a power of two")));
        }
        if values.len() > r {
            return Err(Error::InvalidSpectrum(format!(
                "{} values exceed declared dimension {r}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSpectrum(format!("entry {v} is negative or not finite")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum(format!(
                "values not descending at index {}",
                i + 1
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SPECTRUM_SUM_TOL {
            return Err(Error::InvalidSpectrum(format!("values sum to {sum}, not 1")));
        }
        let mut values = values;
        values.resize(r, 0.0);
        Ok(EntanglementSpectrum { values })
    }

    /// Builds a spectrum from numerically obtained eigenvalues: clamps
    /// round-off negatives, sorts, renormalizes, and pads to the smallest
    /// power of two `≥ r_min` holding all values.
    pub fn from_eigenvalues(mut values: Vec<f64>, r_min: usize) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum("non-finite eigenvalue".into()));
        }
        for v in &mut values {
            if *v < 0.0 {
                if *v < -1e-8 {
                    return Err(Error::InvalidSpectrum(format!("eigenvalue {v} is negative")));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidSpectrum("eigenvalues sum to zero".into()));
        }
        for v in &mut values {
            *v /= sum;
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let r = values.len().max(r_min).max(1).next_power_of_two();
        Self::new(values, r)
    }

    /// Two-value spectrum `{λ₀, 1 − λ₀}` with `λ₀ ≥ 1/2`.
    pub fn qubit(lambda0: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&lambda0) {
            return Err(Error::InvalidSpectrum(format!("lambda0 {lambda0} outside [1/2, 1]")));
        }
        Self::new(vec![lambda0, 1.0 - lambda0], 2)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Declared link dimension `r`.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Number of strictly positive entries.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }
}

/// `S = −Σ λ ln λ` with `0 ln 0 = 0`.
pub fn von_neumann_entropy(spec: &EntanglementSpectrum) -> f64 {
    -spec
        .values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

/// Non-local 2-stabilizer Rényi entropy of the spectrum,
/// `−ln Σ_{i₁..i₄} √(λ_{i₁}λ_{i₂}λ_{i₃}λ_{i₄} λ_{i₁⊕i₂⊕i₃} λ_{i₁⊕i₂⊕i₄} λ_{i₁⊕i₃⊕i₄} λ_{i₂⊕i₃⊕i₄})`.
pub fn nl_sre2(spec: &EntanglementSpectrum) -> Result<f64> {
    let r = spec.dim();
    if r == 1 {
        return Ok(0.0);
    }
    if r == 2 {
        let (a, b) = (spec.values[0], spec.values[1]);
        return Ok(nl_sre2_qubit(a, b));
    }
    nl_sre2_generic(spec)
}

/// The quadruple sum at any link dimension, without the two-level shortcut.
pub fn nl_sre2_generic(spec: &EntanglementSpectrum) -> Result<f64> {
    let r = spec.dim();
    if r > MAX_GENERIC_RANK {
        return Err(Error::Capacity {
            what: "nl_sre2 quadruple sum (link dimension)",
            limit: MAX_GENERIC_RANK,
            requested: r,
        });
    }
    Ok(-quadruple_sum(&spec.values).ln())
}

/// Closed form for a two-level spectrum.
pub fn nl_sre2_qubit(l0: f64, l1: f64) -> f64 {
    let (a2, b2) = (l0 * l0, l1 * l1);
    -(a2 * a2 + b2 * b2 + 14.0 * a2 * b2).ln()
}

fn quadruple_sum(values: &[f64]) -> f64 {
    let r = values.len();
    let s: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let support: Vec<usize> = (0..r).filter(|&i| s[i] > 0.0).collect();
    let mut total = 0.0;
    for &i1 in &support {
        for &i2 in &support {
            let p12 = s[i1] * s[i2];
            let x12 = i1 ^ i2;
            let mut acc3 = 0.0;
            for &i3 in &support {
                let a = s[x12 ^ i3];
                if a == 0.0 {
                    continue;
                }
                let x13 = i1 ^ i3;
                let x23 = i2 ^ i3;
                let mut acc4 = 0.0;
                for &i4 in &support {
                    acc4 += s[i4] * s[x12 ^ i4] * s[x13 ^ i4] * s[x23 ^ i4];
                }
                acc3 += s[i3] * a * acc4;
            }
            total += p12 * acc3;
        }
    }
    total
}

/// `F = Tr ρ³ − (Tr ρ²)²`.
pub fn antiflatness(spec: &EntanglementSpectrum) -> f64 {
    let p2: f64 = spec.values.iter().map(|l| l * l).sum();
    let p3: f64 = spec.values.iter().map(|l| l * l * l).sum();
    p3 - p2 * p2
}

/// Values entering the non-local magic bound chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `F/8`, the proven lower bound.
    pub lower: f64,
    /// `4F`, the tighter heuristic lower bound.
    pub antiflat4: f64,
    /// `M₂({λ})`, the upper bound.
    pub upper: f64,
    /// `F/8 ≤ M₂({λ})`.
    pub lower_holds: bool,
    /// `4F ≤ M₂({λ})`; reported only.
    pub antiflat4_holds: bool,
}

pub fn check_bounds(spec: &EntanglementSpectrum) -> Result<BoundCheck> {
    let f = antiflatness(spec);
    let m = nl_sre2(spec)?;
    let slack = 1e-14;
    let out = BoundCheck {
        lower: f / 8.0,
        antiflat4: 4.0 * f,
        upper: m,
        lower_holds: f / 8.0 <= m + slack,
        antiflat4_holds: 4.0 * f <= m + slack,
    };
    if !out.antiflat4_holds {
        log::debug!("4F = {} exceeds M2 = {} for spectrum {:?}", out.antiflat4, m, spec.values);
    }
    Ok(out)
}

/// Point `(M₂(λ₀), S(λ₀))` on the one-qubit constraint arc.
pub fn arc_curve(lambda0: f64) -> Result<(f64, f64)> {
    let spec = EntanglementSpectrum::qubit(lambda0)?;
    Ok((nl_sre2(&spec)?, von_neumann_entropy(&spec)))
}

/// `points` samples `(λ₀, M₂, S)` equally spaced over `λ₀ ∈ [1/2, 1]`.
pub fn sample_arc(points: usize) -> Result<Vec<(f64, f64, f64)>> {
    if points < 2 {
        return Err(Error::InvalidArgument("arc needs at least 2 points".into()));
    }
    (0..points)
        .map(|k| {
            let l0 = 0.5 + 0.5 * k as f64 / (points - 1) as f64;
            let (m, s) = arc_curve(l0)?;
            Ok((l0, m, s))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseRegion {
    LowEntanglement,
    HighEntanglement,
}

impl PhaseRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseRegion::LowEntanglement => "low_entanglement",
            PhaseRegion::HighEntanglement => "high_entanglement",
        }
    }
}

/// Classifies an entropy value; the threshold itself counts as high.
pub fn phase_region_with(entropy: f64, threshold: f64) -> Result<PhaseRegion> {
    if !(entropy.is_finite() && entropy >= 0.0) {
        return Err(Error::InvalidArgument(format!("entropy {entropy} must be non-negative")));
    }
    Ok(if entropy >= threshold {
        PhaseRegion::HighEntanglement
    } else {
        PhaseRegion::LowEntanglement
    })
}

pub fn phase_region(entropy: f64) -> Result<PhaseRegion> {
    phase_region_with(entropy, DEFAULT_REGION_THRESHOLD)
}

/// Per-mode, per-time measurement row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceRecord {
    pub time: f64,
    /// 1-based frequency index.
    pub mode: usize,
    /// Single-mode entanglement entropy (nats).
    pub entropy: f64,
    pub nl_sre2: f64,
    /// `4F`.
    pub antiflatness4: f64,
    /// Flavor-basis polarization `(Px, Py, Pz)`.
    pub polarization: [f64; 3],
    /// Probability of the first mass eigenstate.
    pub p_nu1: f64,
    pub max_bond: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_4_3: f64 = 0.287_682_072_451_780_9;

    fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-12 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn entropy_examples() {
        let s = |v: Vec<f64>| von_neumann_entropy(&EntanglementSpectrum::new(v, 2).unwrap());
        assert_eq!(s(vec![1.0, 0.0]), 0.0);
        assert!((s(vec![0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        // −(3/4)ln(3/4) − (1/4)ln(1/4)
        assert!((s(vec![0.75, 0.25]) - 0.562_335_144_618_991_5).abs() < 1e-12);
    }

    #[test]
    fn nl_sre2_examples() {
        let m = |v: Vec<f64>| nl_sre2(&EntanglementSpectrum::new(v, 2).unwrap()).unwrap();
        assert!(m(vec![0.5, 0.5]).abs() < 1e-15);
        assert!(m(vec![1.0, 0.0]).abs() < 1e-15);
        let l0 = (2.0 + 2f64.sqrt()) / 4.0;
        assert!((m(vec![l0, 1.0 - l0]) - LN_4_3).abs() < 1e-14);
    }

    #[test]
    fn antiflatness_examples() {
        let f = |v: Vec<f64>| antiflatness(&EntanglementSpectrum::new(v, 2).unwrap());
        assert!(f(vec![0.5, 0.5]).abs() < 1e-16);
        assert!(f(vec![1.0, 0.0]).abs() < 1e-16);
        let l0 = (2.0 + 2f64.sqrt()) / 4.0;
        assert!((f(vec![l0, 1.0 - l0]) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        let flat = EntanglementSpectrum::new(vec![0.25; 4], 4).unwrap();
        let b = check_bounds(&flat).unwrap();
        assert!(b.lower.abs() < 1e-15 && b.antiflat4.abs() < 1e-15 && b.upper.abs() < 1e-14);
        let l0 = (2.0 + 2f64.sqrt()) / 4.0;
        let b = check_bounds(&EntanglementSpectrum::qubit(l0).unwrap()).unwrap();
        assert!((b.lower - 1.0 / 128.0).abs() < 1e-15);
        assert!((b.antiflat4 - 0.25).abs() < 1e-14);
        assert!((b.upper - LN_4_3).abs() < 1e-14);
        assert!(b.lower_holds && b.antiflat4_holds);
    }

    #[test]
    fn arc_examples() {
        let (m, s) = arc_curve(0.5).unwrap();
        assert!(m.abs() < 1e-15 && (s - std::f64::consts::LN_2).abs() < 1e-15);
        let (m, s) = arc_curve(1.0).unwrap();
        assert!(m.abs() < 1e-15 && s.abs() < 1e-15);
        let (m, s) = arc_curve((2.0 + 2f64.sqrt()) / 4.0).unwrap();
        assert!((m - LN_4_3).abs() < 1e-14);
        // −λ ln λ − (1−λ) ln(1−λ) at λ = (2+√2)/4
        assert!((s - 0.416_495_530_699_687_5).abs() < 1e-12);
        assert!(arc_curve(0.4).is_err());
        assert!(arc_curve(1.1).is_err());
        let pts = sample_arc(512).unwrap();
        assert_eq!(pts.len(), 512);
    }

    #[test]
    fn arc_extrema_by_golden_section() {
        let l_star = golden_max(|l| arc_curve(l).unwrap().0, 0.5, 1.0);
        assert!((l_star - (0.5 + 2f64.sqrt() / 4.0)).abs() < 1e-6);
        assert!((arc_curve(l_star).unwrap().0 - LN_4_3).abs() < 1e-10);
        let l_s = golden_max(|l| arc_curve(l).unwrap().1, 0.5, 1.0);
        assert!((l_s - 0.5).abs() < 1e-6);
    }

    #[test]
    fn phase_regions() {
        assert_eq!(phase_region(0.1).unwrap(), PhaseRegion::LowEntanglement);
        assert_eq!(phase_region(0.6).unwrap(), PhaseRegion::HighEntanglement);
        assert_eq!(phase_region(0.4).unwrap(), PhaseRegion::HighEntanglement);
        assert!(phase_region(-0.1).is_err());
    }

    #[test]
    fn spectrum_validation() {
        assert!(EntanglementSpectrum::new(vec![0.5, 0.5], 3).is_err());
        assert!(EntanglementSpectrum::new(vec![0.4, 0.6], 2).is_err());
        assert!(EntanglementSpectrum::new(vec![0.7, 0.2], 2).is_err());
        assert!(EntanglementSpectrum::new(vec![0.5, 0.25, 0.25], 2).is_err());
        let s = EntanglementSpectrum::new(vec![0.5, 0.5], 8).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.rank(), 2);
        let e = EntanglementSpectrum::from_eigenvalues(vec![0.3, -1e-17, 0.7], 1).unwrap();
        assert_eq!(e.values(), &[0.7, 0.3, 0.0, 0.0]);
    }

    #[test]
    fn generic_guard() {
        let mut v = vec![1.0 / 128.0; 128];
        v[0] += 0.0;
        let s = EntanglementSpectrum::new(v, 128).unwrap();
        assert!(matches!(nl_sre2(&s), Err(Error::Capacity { .. })));
    }
}
