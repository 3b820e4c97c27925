//! Dense state-vector engine: matrix-free Hamiltonian action, time
//! evolution, partial traces, Clifford gates and the full stabilizer Rényi
//! entropy by Pauli-string enumeration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::krylov::{expm_apply, KrylovSettings};
use crate::linalg::{inner, norm_sqr, CMatrix, Mat2, C64, ONE, ZERO};
use crate::model::{dense_from_terms, Basis, Flavor, HamiltonianTerms, SystemSpec, MAX_DENSE_SITES};

/// Largest system accepted by [`full_sre`].
pub const MAX_SRE_SITES: usize = 10;
/// Largest system for which the dense matrix exponential integrator is allowed.
pub const MAX_DENSE_EXPM_SITES: usize = 10;

/// Dense amplitude vector of an `N`-qubit pure state (site 0 most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    n_sites: usize,
}

impl StateVector {
    pub fn new(amps: Vec<C64>, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > 30 {
            return Err(Error::InvalidArgument(format!("unsupported site count {n_sites}")));
        }
        let dim = 1usize << n_sites;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        Ok(StateVector { amps, n_sites })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_sites: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_sites;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps, n_sites)
    }

    pub fn product(flavors: &[Flavor]) -> Result<Self> {
        let locals: Vec<[C64; 2]> = flavors.iter().map(|f| f.amplitudes()).collect();
        Self::product_of(&locals)
    }

    /// Tensor product of single-site states, site 0 first.
    pub fn product_of(locals: &[[C64; 2]]) -> Result<Self> {
        let mut amps = vec![ONE];
        for l in locals {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * l[0]);
                next.push(a * l[1]);
            }
            amps = next;
        }
        Self::new(amps, locals.len())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `|ψ⟩ ⊗ |φ⟩` with `self` on the leading sites.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self::new(amps, self.n_sites + other.n_sites)
    }

    /// Applies a single-site operator in place.
    pub fn apply_one_site(&mut self, site: usize, op: &Mat2) -> Result<()> {
        self.check_site(site)?;
        let mask = 1usize << (self.n_sites - 1 - site);
        for b in 0..self.dim() {
            if b & mask == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | mask]);
                self.amps[b] = op[0][0] * a0 + op[0][1] * a1;
                self.amps[b | mask] = op[1][0] * a0 + op[1][1] * a1;
            }
        }
        Ok(())
    }

    /// `⟨ψ|O_site|ψ⟩` for a single-site operator.
    pub fn expectation_one_site(&self, site: usize, op: &Mat2) -> Result<C64> {
        let rho = self.site_density_matrix(site)?;
        // Tr(ρ O)
        Ok(rho[0][0] * op[0][0] + rho[0][1] * op[1][0] + rho[1][0] * op[0][1] + rho[1][1] * op[1][1])
    }

    /// One-site reduced density matrix.
    pub fn site_density_matrix(&self, site: usize) -> Result<Mat2> {
        self.check_site(site)?;
        let mask = 1usize << (self.n_sites - 1 - site);
        let mut rho = [[ZERO; 2]; 2];
        for b in 0..self.dim() {
            if b & mask == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | mask]);
                rho[0][0] += a0 * a0.conj();
                rho[0][1] += a0 * a1.conj();
                rho[1][0] += a1 * a0.conj();
                rho[1][1] += a1 * a1.conj();
            }
        }
        Ok(rho)
    }

    /// Squared Schmidt coefficients across the cut between sites `cut-1`
    /// and `cut`, in descending order (natural rank, zeros kept).
    pub fn schmidt_spectrum(&self, cut: usize) -> Result<Vec<f64>> {
        if cut == 0 || cut >= self.n_sites {
            return Err(Error::InvalidPartition(format!(
                "cut {cut} must lie in 1..{}",
                self.n_sites
            )));
        }
        let rows = 1usize << cut;
        let cols = 1usize << (self.n_sites - cut);
        let m = CMatrix::from_fn(rows, cols, |r, c| self.amps[r * cols + c]);
        let svd = crate::linalg::sorted_svd(m)
            .ok_or_else(|| Error::Numerical("SVD failed in schmidt_spectrum".into()))?;
        Ok(svd.s.iter().map(|s| s * s).collect())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            Err(Error::InvalidSite {
                site,
                n_sites: self.n_sites,
            })
        } else {
            Ok(())
        }
    }
}

/// In-place kernel `out = H ψ` for the collective Hamiltonian.
///
/// Uses `σᵢ·σⱼ = 2 SWAPᵢⱼ − 1`; the diagonal part of the pair sum only depends
/// on the number `k` of down spins: `P − 2k(N−k)` with `P = N(N−1)/2`.
pub fn apply_terms(terms: &HamiltonianTerms, psi: &[C64], out: &mut [C64]) {
    let n = terms.n_sites();
    let dim = psi.len();
    debug_assert_eq!(dim, 1usize << n);
    let c = terms.pair_coupling;
    let pairs = (n * (n - 1) / 2) as f64;
    let diag_pair: Vec<f64> = (0..=n).map(|k| c * (pairs - 2.0 * (k * (n - k)) as f64)).collect();
    let masks: Vec<usize> = (0..n).map(|i| 1usize << (n - 1 - i)).collect();

    let full = dim - 1;
    let two_c = 2.0 * c;
    for b in 0..dim {
        let pb = psi[b];
        let mut acc = pb * diag_pair[b.count_ones() as usize];
        for (i, local) in terms.one_body.iter().enumerate() {
            let m = masks[i];
            let bit = usize::from(b & m != 0);
            acc += local[bit][bit] * pb + local[bit][1 - bit] * psi[b ^ m];
        }
        if c != 0.0 {
            // every (up, down) pair of bits swaps into a distinct basis state
            let mut swaps = ZERO;
            let mut ones = b;
            while ones != 0 {
                let o = ones & ones.wrapping_neg();
                ones ^= o;
                let mut zeros = !b & full;
                while zeros != 0 {
                    let z = zeros & zeros.wrapping_neg();
                    zeros ^= z;
                    swaps += psi[b ^ o ^ z];
                }
            }
            acc += swaps * two_c;
        }
        out[b] = acc;
    }
}

/// `H|ψ⟩` computed without materializing `H`.
pub fn apply_hamiltonian(state: &StateVector, terms: &HamiltonianTerms) -> Result<StateVector> {
    if terms.n_sites() != state.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: state.n_sites(),
            got: terms.n_sites(),
        });
    }
    let mut out = vec![ZERO; state.dim()];
    apply_terms(terms, state.amplitudes(), &mut out);
    StateVector::new(out, state.n_sites())
}

/// `⟨ψ|H|ψ⟩`.
pub fn energy(state: &StateVector, terms: &HamiltonianTerms) -> Result<f64> {
    let h = apply_hamiltonian(state, terms)?;
    Ok(state.inner(&h).re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Lanczos exponential of the midpoint Hamiltonian.
    KrylovStep,
    /// Dense diagonalization of the midpoint Hamiltonian (small systems only).
    MatrixExponentialStep,
    /// Classical fourth-order Runge-Kutta with exact time dependence.
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionParams {
    pub dt: f64,
    pub t_final: f64,
    pub method: Integrator,
    pub krylov_dim: usize,
    /// Observer is invoked every `snapshot_every` steps (and at both ends).
    pub snapshot_every: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            dt: 0.01,
            t_final: 1.0,
            method: Integrator::KrylovStep,
            krylov_dim: 32,
            snapshot_every: 100,
        }
    }
}

impl EvolutionParams {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            errs.push(format!("evolution.dt must be positive, got {}", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            errs.push(format!("evolution.t_final must be non-negative, got {}", self.t_final));
        }
        if self.krylov_dim < 4 {
            errs.push(format!("evolution.krylov_dim must be at least 4, got {}", self.krylov_dim));
        }
        if self.snapshot_every == 0 {
            errs.push("evolution.snapshot_every must be at least 1".into());
        }
        errs
    }

    /// Number of steps; the last step is shortened to land on `t_final`.
    pub fn n_steps(&self) -> usize {
        if self.t_final == 0.0 {
            0
        } else {
            (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }

    /// Time after `k` steps.
    pub fn time_at(&self, k: usize) -> f64 {
        (k as f64 * self.dt).min(self.t_final)
    }

    pub fn krylov_settings(&self) -> KrylovSettings {
        KrylovSettings {
            max_dim: self.krylov_dim,
            ..KrylovSettings::default()
        }
    }
}

/// Stateful single-trajectory stepper.
pub struct ExactStepper<'a> {
    spec: &'a SystemSpec,
    basis: Basis,
    method: Integrator,
    krylov: KrylovSettings,
    cached: Option<(f64, f64, CMatrix)>,
}

impl<'a> ExactStepper<'a> {
    pub fn new(spec: &'a SystemSpec, basis: Basis, params: &EvolutionParams) -> Result<Self> {
        let n = spec.n_sites();
        if n > MAX_DENSE_SITES {
            return Err(Error::Capacity {
                what: "exact engine",
                limit: MAX_DENSE_SITES,
                requested: n,
            });
        }
        if params.method == Integrator::MatrixExponentialStep && n > MAX_DENSE_EXPM_SITES {
            return Err(Error::Capacity {
                what: "dense matrix-exponential integrator",
                limit: MAX_DENSE_EXPM_SITES,
                requested: n,
            });
        }
        Ok(ExactStepper {
            spec,
            basis,
            method: params.method,
            krylov: params.krylov_settings(),
            cached: None,
        })
    }

    /// Advances `state` from `t` to `t + dt`; `dt` may be negative.
    pub fn step(&mut self, state: &mut StateVector, t: f64, dt: f64) -> Result<()> {
        match self.method {
            Integrator::KrylovStep => {
                let mu = self.spec.coupling_at((t + 0.5 * dt).max(0.0))?;
                let terms = HamiltonianTerms::from_coupling(self.spec, mu, self.basis)?;
                let next = expm_apply(
                    |x, y| apply_terms(&terms, x, y),
                    state.amplitudes(),
                    dt,
                    &self.krylov,
                )?;
                state.amps = next;
            }
            Integrator::MatrixExponentialStep => {
                let mu = self.spec.coupling_at((t + 0.5 * dt).max(0.0))?;
                let reuse = matches!(&self.cached, Some((m, d, _)) if *m == mu && *d == dt);
                if !reuse {
                    let terms = HamiltonianTerms::from_coupling(self.spec, mu, self.basis)?;
                    let h = dense_from_terms(&terms);
                    self.cached = Some((mu, dt, dense_propagator(&h, dt)));
                }
                let u = &self.cached.as_ref().expect("propagator cached").2;
                let v = nalgebra::DVector::from_column_slice(state.amplitudes());
                state.amps = (u * v).iter().copied().collect();
            }
            Integrator::Rk4 => {
                let t_mid = (t + 0.5 * dt).max(0.0);
                let t_end = (t + dt).max(0.0);
                let terms = [
                    HamiltonianTerms::new(self.spec, t.max(0.0), self.basis)?,
                    HamiltonianTerms::new(self.spec, t_mid, self.basis)?,
                    HamiltonianTerms::new(self.spec, t_end, self.basis)?,
                ];
                rk4_step(&mut state.amps, &terms, dt);
            }
        }
        if state.amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite amplitude after step at t = {t}"
            )));
        }
        Ok(())
    }
}

fn dense_propagator(h: &CMatrix, dt: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| C64::new(0.0, -dt * l).exp()),
    ));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn rk4_step(psi: &mut [C64], terms: &[HamiltonianTerms; 3], dt: f64) {
    let dim = psi.len();
    let minus_i = C64::new(0.0, -1.0);
    let deriv = |terms: &HamiltonianTerms, x: &[C64], out: &mut [C64]| {
        apply_terms(terms, x, out);
        for o in out.iter_mut() {
            *o *= minus_i;
        }
    };
    let mut k1 = vec![ZERO; dim];
    let mut k2 = vec![ZERO; dim];
    let mut k3 = vec![ZERO; dim];
    let mut k4 = vec![ZERO; dim];
    let mut tmp = vec![ZERO; dim];
    deriv(&terms[0], psi, &mut k1);
    for i in 0..dim {
        tmp[i] = psi[i] + k1[i] * (0.5 * dt);
    }
    deriv(&terms[1], &tmp, &mut k2);
    for i in 0..dim {
        tmp[i] = psi[i] + k2[i] * (0.5 * dt);
    }
    deriv(&terms[1], &tmp, &mut k3);
    for i in 0..dim {
        tmp[i] = psi[i] + k3[i] * dt;
    }
    deriv(&terms[2], &tmp, &mut k4);
    for i in 0..dim {
        psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Evolves `state` to `params.t_final`, calling `observer(step, t, state)` at
/// `t = 0`, every `snapshot_every` steps, and at the final time.
pub fn evolve_exact<F>(
    mut state: StateVector,
    spec: &SystemSpec,
    params: &EvolutionParams,
    basis: Basis,
    mut observer: F,
) -> Result<StateVector>
where
    F: FnMut(usize, f64, &StateVector) -> Result<()>,
{
    let errs = params.validation_errors();
    if !errs.is_empty() {
        return Err(Error::InvalidArgument(errs.join("; ")));
    }
    if state.n_sites() != spec.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_sites(),
            got: state.n_sites(),
        });
    }
    let mut stepper = ExactStepper::new(spec, basis, params)?;
    let n_steps = params.n_steps();
    observer(0, 0.0, &state)?;
    // RK4 is not unitary; it only has to stay close
    let drift_tol = if params.method == Integrator::Rk4 { 1e-6 } else { 1e-11 };
    for k in 0..n_steps {
        let t0 = params.time_at(k);
        let t1 = params.time_at(k + 1);
        let before = state.norm();
        stepper.step(&mut state, t0, t1 - t0)?;
        let drift = (state.norm() - before).abs();
        if !(drift <= drift_tol) {
            return Err(Error::Numerical(format!(
                "norm drift {drift:e} in step {k} at t = {t0}; reduce evolution.dt"
            )));
        }
        if (k + 1) % params.snapshot_every == 0 || k + 1 == n_steps {
            observer(k + 1, t1, &state)?;
        }
    }
    Ok(state)
}

/// Convenience wrapper collecting every snapshot.
pub fn trajectory(
    state: StateVector,
    spec: &SystemSpec,
    params: &EvolutionParams,
    basis: Basis,
) -> Result<Vec<(f64, StateVector)>> {
    let mut out = Vec::new();
    evolve_exact(state, spec, params, basis, |_, t, s| {
        out.push((t, s.clone()));
        Ok(())
    })?;
    Ok(out)
}

/// Reduced density matrix of the sites in `partition`; the first listed site
/// is the most significant bit of the result's index.
pub fn reduced_density_matrix(state: &StateVector, partition: &[usize]) -> Result<CMatrix> {
    let n = state.n_sites();
    if partition.is_empty() || partition.len() >= n {
        return Err(Error::InvalidPartition(format!(
            "partition must be a nonempty proper subset of {n} sites"
        )));
    }
    let mut seen = vec![false; n];
    for &s in partition {
        if s >= n {
            return Err(Error::InvalidPartition(format!("site {s} out of range")));
        }
        if seen[s] {
            return Err(Error::InvalidPartition(format!("site {s} listed twice")));
        }
        seen[s] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|s| !seen[*s]).collect();
    let na = partition.len();
    let nb = rest.len();
    let bit = |b: usize, site: usize| (b >> (n - 1 - site)) & 1;
    let mut m = CMatrix::zeros(1 << na, 1 << nb);
    for (b, amp) in state.amplitudes().iter().enumerate() {
        let a = partition.iter().fold(0usize, |acc, &s| (acc << 1) | bit(b, s));
        let e = rest.iter().fold(0usize, |acc, &s| (acc << 1) | bit(b, s));
        m[(a, e)] = *amp;
    }
    Ok(&m * m.adjoint())
}

/// Stabilizer Rényi entropy `M_α` by enumerating all `4^N` Pauli strings.
///
/// For each X-pattern `x`, the expectations of the `2^N` strings `X^x Z^z`
/// are the Walsh-Hadamard transform of `c ↦ conj(ψ[c⊕x]) ψ[c]`, so the whole
/// sum costs `O(N 4^N)`. Per-pattern partial sums are reduced in a fixed
/// order, making the result independent of the thread count.
pub fn full_sre(state: &StateVector, alpha: f64) -> Result<f64> {
    let n = state.n_sites();
    if n > MAX_SRE_SITES {
        return Err(Error::Capacity {
            what: "full_sre",
            limit: MAX_SRE_SITES,
            requested: n,
        });
    }
    if !(alpha.is_finite() && alpha > 0.0) || (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "stabilizer Renyi index must be positive and != 1, got {alpha}"
        )));
    }
    let psi = state.amplitudes();
    let dim = psi.len();
    let partials: Vec<f64> = (0..dim)
        .into_par_iter()
        .map(|x| {
            let mut g: Vec<C64> = (0..dim).map(|c| psi[c ^ x].conj() * psi[c]).collect();
            walsh_hadamard(&mut g);
            g.iter().map(|v| v.norm_sqr().powf(alpha)).sum::<f64>()
        })
        .collect();
    let total: f64 = partials.iter().sum::<f64>() / dim as f64;
    Ok(total.ln() / (1.0 - alpha))
}

fn walsh_hadamard(v: &mut [C64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Generators of the Clifford group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
}

pub fn hadamard() -> Mat2 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [[C64::new(r, 0.0), C64::new(r, 0.0)], [C64::new(r, 0.0), C64::new(-r, 0.0)]]
}

pub fn phase_gate() -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]]
}

/// Applies a Clifford generator in place.
pub fn apply_clifford(state: &mut StateVector, gate: CliffordGate) -> Result<()> {
    match gate {
        CliffordGate::H(q) => state.apply_one_site(q, &hadamard()),
        CliffordGate::S(q) => state.apply_one_site(q, &phase_gate()),
        CliffordGate::Cnot { control, target } => {
            let n = state.n_sites();
            for s in [control, target] {
                if s >= n {
                    return Err(Error::InvalidSite { site: s, n_sites: n });
                }
            }
            if control == target {
                return Err(Error::InvalidArgument("CNOT control equals target".into()));
            }
            let mc = 1usize << (n - 1 - control);
            let mt = 1usize << (n - 1 - target);
            for b in 0..state.dim() {
                if b & mc != 0 && b & mt == 0 {
                    state.amps.swap(b, b | mt);
                }
            }
            Ok(())
        }
    }
}
