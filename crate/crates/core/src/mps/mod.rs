//! Open-boundary matrix product states with a movable orthogonality center,
//! the bond-5 Hamiltonian MPO and two-site TDVP.

mod mpo;
mod tdvp;

pub use mpo::{build_mpo, HamiltonianMpo, MPO_BOND};
pub use tdvp::{evolve_mps, tdvp2_step, MpsRun, StepReport, TdvpSettings};

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::exact::StateVector;
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::model::{Flavor, SystemSpec, MAX_DENSE_SITES};
use crate::observables::{qubit_spectrum, SiteDensity};
use crate::resources::EntanglementSpectrum;

/// Largest chain handled by the MPS engine.
pub const MAX_MPS_SITES: usize = 64;

/// Rank-3 site tensor `A[l, s, r]`, row-major with `s ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub(crate) dl: usize,
    pub(crate) dr: usize,
    pub(crate) data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(dl: usize, dr: usize, data: Vec<C64>) -> Result<Self> {
        if dl == 0 || dr == 0 || data.len() != dl * 2 * dr {
            return Err(Error::DimensionMismatch {
                expected: dl * 2 * dr,
                got: data.len(),
            });
        }
        Ok(SiteTensor { dl, dr, data })
    }

    pub fn left_bond(&self) -> usize {
        self.dl
    }

    pub fn right_bond(&self) -> usize {
        self.dr
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[(l * 2 + s) * self.dr + r]
    }

    /// `(l s) × r` view.
    pub(crate) fn left_matrix(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, 2 * self.dl, self.dr)
    }

    /// `l × (s r)` view.
    pub(crate) fn right_matrix(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.dl, 2 * self.dr)
    }

    /// `l × r` slice at fixed physical index.
    pub(crate) fn slice(&self, s: usize) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice_with_stride(&self.data[s * self.dr..], self.dl, self.dr, 2 * self.dr)
    }
}

pub(crate) fn row_major(m: MatRef<'_, C64>) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// MPS with orthogonality center `center`: tensors left of it are left-
/// orthonormal and tensors right of it right-orthonormal.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    tensors: Vec<SiteTensor>,
    center: usize,
    max_bond: usize,
}

impl MpsState {
    /// Product state of normalized single-site vectors; all bonds are 1.
    pub fn from_local_states(locals: &[[C64; 2]], max_bond: usize) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::InvalidArgument("empty product state".into()));
        }
        if locals.len() > MAX_MPS_SITES {
            return Err(Error::Capacity {
                what: "MPS engine",
                limit: MAX_MPS_SITES,
                requested: locals.len(),
            });
        }
        if max_bond == 0 {
            return Err(Error::InvalidArgument("max_bond must be at least 1".into()));
        }
        let tensors = locals
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let nrm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                if !(nrm > 0.0 && nrm.is_finite()) {
                    return Err(Error::InvalidArgument(format!("site {i} has a zero or non-finite local vector")));
                }
                SiteTensor::new(1, 1, vec![v[0] / nrm, v[1] / nrm])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MpsState {
            tensors,
            center: 0,
            max_bond,
        })
    }

    pub fn from_flavors(flavors: &[Flavor], max_bond: usize) -> Result<Self> {
        let locals: Vec<[C64; 2]> = flavors.iter().map(|f| f.amplitudes()).collect();
        Self::from_local_states(&locals, max_bond)
    }

    /// The initial flavor product state of `spec`.
    pub fn from_product(spec: &SystemSpec, max_bond: usize) -> Result<Self> {
        spec.validate()?;
        Self::from_flavors(&spec.initial_config, max_bond)
    }

    /// Sequential SVD of a dense state, truncated to `max_bond`; the result
    /// is normalized with its center at site 0.
    pub fn from_dense(state: &StateVector, max_bond: usize) -> Result<Self> {
        if max_bond == 0 {
            return Err(Error::InvalidArgument("max_bond must be at least 1".into()));
        }
        let n = state.n_sites();
        let mut rest: Vec<C64> = state.amplitudes().to_vec();
        let mut dl = 1usize;
        let mut tensors = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let cols = rest.len() / (2 * dl);
            let m = MatRef::from_row_major_slice(&rest, 2 * dl, cols);
            let split = tdvp::truncated_svd(m, max_bond, 0.0, i)?;
            let k = split.s.len();
            tensors.push(SiteTensor::new(dl, k, row_major(split.u.as_ref()))?);
            let mut sv = split.vh;
            for (j, &sj) in split.s.iter().enumerate() {
                for c in 0..cols {
                    sv[(j, c)] *= sj;
                }
            }
            rest = row_major(sv.as_ref());
            dl = k;
        }
        tensors.push(SiteTensor::new(dl, 1, rest)?);
        let mut mps = MpsState {
            tensors,
            center: n - 1,
            max_bond,
        };
        mps.move_center(0)?;
        mps.normalize();
        Ok(mps)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Bond-dimension cap.
    pub fn max_bond(&self) -> usize {
        self.max_bond
    }

    pub fn set_max_bond(&mut self, cap: usize) -> Result<()> {
        if cap == 0 {
            return Err(Error::InvalidArgument("max_bond must be at least 1".into()));
        }
        self.max_bond = cap;
        Ok(())
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    /// Internal bond dimensions; entry `k` sits between sites `k` and `k+1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(|t| t.dr).collect()
    }

    /// Largest current bond dimension (1 for a product state).
    pub fn max_bond_dimension(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut Vec<SiteTensor> {
        &mut self.tensors
    }

    pub(crate) fn set_center(&mut self, c: usize) {
        self.center = c;
    }

    /// `⟨ψ|ψ⟩` by a full transfer contraction.
    pub fn norm_sqr(&self) -> f64 {
        let envs = left_norm_envs(&self.tensors);
        envs[self.n_sites()][(0, 0)].re
    }

    /// Rescales the center tensor to unit norm.
    pub fn normalize(&mut self) {
        let c = &mut self.tensors[self.center];
        let nrm = c.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for z in c.data.iter_mut() {
                *z /= nrm;
            }
        }
    }

    /// Moves the orthogonality center with QR sweeps.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        let n = self.n_sites();
        if target >= n {
            return Err(Error::InvalidSite { site: target, n_sites: n });
        }
        while self.center < target {
            let i = self.center;
            let a = &self.tensors[i];
            let qr = a.left_matrix().qr();
            let q = qr.compute_thin_Q();
            let r = qr.thin_R().to_owned();
            let dl = a.dl;
            self.tensors[i] = SiteTensor::new(dl, q.ncols(), row_major(q.as_ref()))?;
            let next = &self.tensors[i + 1];
            let merged = &r * next.right_matrix();
            let dr = next.dr;
            self.tensors[i + 1] = SiteTensor::new(r.nrows(), dr, row_major(merged.as_ref()))?;
            self.center += 1;
        }
        while self.center > target {
            let i = self.center;
            let a = &self.tensors[i];
            // A = Rᴴ Qᴴ from the QR of Aᴴ
            let qr = a.right_matrix().adjoint().qr();
            let q = qr.compute_thin_Q();
            let r = qr.thin_R().to_owned();
            let dr = a.dr;
            self.tensors[i] = SiteTensor::new(q.ncols(), dr, row_major(q.adjoint().to_owned().as_ref()))?;
            let prev = &self.tensors[i - 1];
            let merged = prev.left_matrix() * r.adjoint();
            let dl = prev.dl;
            self.tensors[i - 1] = SiteTensor::new(dl, r.nrows(), row_major(merged.as_ref()))?;
            self.center -= 1;
        }
        Ok(())
    }

    /// Largest deviation from left (right) orthonormality left (right) of the center.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, t) in self.tensors.iter().enumerate() {
            let g = if i < self.center {
                let m = t.left_matrix();
                m.adjoint() * m
            } else if i > self.center {
                let m = t.right_matrix();
                m * m.adjoint()
            } else {
                continue;
            };
            for r in 0..g.nrows() {
                for c in 0..g.ncols() {
                    let want = if r == c { ONE } else { ZERO };
                    worst = worst.max((g[(r, c)] - want).norm());
                }
            }
        }
        worst
    }

    /// Dense amplitudes, site 0 as the most significant bit.
    pub fn to_dense(&self) -> Result<StateVector> {
        let n = self.n_sites();
        if n > MAX_DENSE_SITES {
            return Err(Error::Capacity {
                what: "dense contraction of an MPS",
                limit: MAX_DENSE_SITES,
                requested: n,
            });
        }
        let mut psi = vec![ONE];
        let mut rows = 1usize;
        for t in &self.tensors {
            let prev = MatRef::from_row_major_slice(&psi, rows, t.dl);
            let next = prev * t.right_matrix();
            rows *= 2;
            psi = row_major(next.as_ref());
        }
        StateVector::new(psi, n)
    }

    /// Schmidt spectrum across bond `cut` (between sites `cut−1` and `cut`),
    /// zero-padded to `2^min(cut, N−cut)` entries.
    pub fn entanglement_spectrum_at_cut(&self, cut: usize) -> Result<EntanglementSpectrum> {
        let n = self.n_sites();
        if cut == 0 || cut >= n {
            return Err(Error::InvalidPartition(format!("cut {cut} outside 1..{n}")));
        }
        let mut work = self.clone();
        work.move_center(cut - 1)?;
        let s = work.tensors[cut - 1]
            .left_matrix()
            .singular_values()
            .map_err(|_| Error::Numerical(format!("SVD failed at cut {cut}")))?;
        let lambdas: Vec<f64> = s.iter().map(|x| x * x).collect();
        let r = 1usize << cut.min(n - cut).min(20);
        EntanglementSpectrum::from_eigenvalues(lambdas, r)
    }

    /// Eigenvalues `{λ₀ ≥ λ₁}` of the one-site reduced density matrix.
    pub fn single_site_spectrum(&self, site: usize) -> Result<EntanglementSpectrum> {
        qubit_spectrum(&SiteDensity::site_density_matrix(self, site)?)
    }
}

/// `E[i]` contracts sites `0..i` of `⟨ψ|ψ⟩`; indices (bra, ket).
fn left_norm_envs(tensors: &[SiteTensor]) -> Vec<Mat<C64>> {
    let mut envs = Vec::with_capacity(tensors.len() + 1);
    let mut e = Mat::<C64>::identity(1, 1);
    envs.push(e.clone());
    for t in tensors {
        let mut next = Mat::<C64>::zeros(t.dr, t.dr);
        for s in 0..2 {
            let a = t.slice(s);
            let ea = &e * a;
            matmul(next.as_mut(), Accum::Add, a.adjoint(), ea.as_ref(), ONE, Par::Seq);
        }
        e = next;
        envs.push(e.clone());
    }
    envs
}

/// `E[i]` contracts sites `i..N` of `⟨ψ|ψ⟩`; indices (bra, ket).
fn right_norm_envs(tensors: &[SiteTensor]) -> Vec<Mat<C64>> {
    let n = tensors.len();
    let mut envs = vec![Mat::<C64>::identity(1, 1); n + 1];
    for i in (0..n).rev() {
        let t = &tensors[i];
        let mut next = Mat::<C64>::zeros(t.dl, t.dl);
        for s in 0..2 {
            let a = t.slice(s);
            let ae = a.conjugate() * &envs[i + 1];
            matmul(next.as_mut(), Accum::Add, ae.as_ref(), a.transpose(), ONE, Par::Seq);
        }
        envs[i] = next;
    }
    envs
}

fn site_rdm(t: &SiteTensor, el: &Mat<C64>, er: &Mat<C64>) -> Mat2 {
    let mut rho = [[ZERO; 2]; 2];
    for s in 0..2 {
        let y = el * t.slice(s) * er.transpose();
        for sp in 0..2 {
            let a = t.slice(sp);
            let mut acc = ZERO;
            for r in 0..t.dl {
                for c in 0..t.dr {
                    acc += a[(r, c)].conj() * y[(r, c)];
                }
            }
            rho[s][sp] = acc;
        }
    }
    let tr = (rho[0][0] + rho[1][1]).re;
    for row in rho.iter_mut() {
        for z in row.iter_mut() {
            *z /= tr;
        }
    }
    rho
}

impl SiteDensity for MpsState {
    fn n_sites(&self) -> usize {
        MpsState::n_sites(self)
    }

    fn site_density_matrix(&self, site: usize) -> Result<Mat2> {
        let n = self.n_sites();
        if site >= n {
            return Err(Error::InvalidSite { site, n_sites: n });
        }
        let el = left_norm_envs(&self.tensors[..site]);
        let er = right_norm_envs(&self.tensors[site + 1..]);
        Ok(site_rdm(&self.tensors[site], &el[site], &er[0]))
    }

    fn all_site_density_matrices(&self) -> Result<Vec<Mat2>> {
        let el = left_norm_envs(&self.tensors);
        let er = right_norm_envs(&self.tensors);
        Ok((0..self.n_sites())
            .map(|i| site_rdm(&self.tensors[i], &el[i], &er[i + 1]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::reduced_density_matrix;
    use crate::linalg::hermitian_eigenvalues_desc;
    use crate::model::parse_flavors;
    use rand::{Rng, SeedableRng};

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::new(amps, n).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn product_states_have_unit_bonds() {
        let f = parse_flavors("ee").unwrap();
        let m = MpsState::from_flavors(&f, 4).unwrap();
        assert_eq!(m.n_sites(), 2);
        assert_eq!(m.bond_dims(), vec![1]);

        let f = parse_flavors("mmmmmmeeeeee").unwrap();
        let m = MpsState::from_flavors(&f, 64).unwrap();
        assert_eq!(m.n_sites(), 12);
        assert_eq!(m.max_bond_dimension(), 1);
        let dense = StateVector::product(&f).unwrap();
        assert_eq!(m.to_dense().unwrap().amplitudes(), dense.amplitudes());
    }

    #[test]
    fn dense_round_trip_and_canonical_form() {
        let psi = random_state(6, 7);
        let mut m = MpsState::from_dense(&psi, 8).unwrap();
        assert_eq!(m.bond_dims(), vec![2, 4, 8, 4, 2]);
        assert!(m.canonical_residual() < 1e-12);
        assert!((m.to_dense().unwrap().fidelity(&psi) - 1.0).abs() < 1e-12);
        for c in [3, 5, 1, 0] {
            m.move_center(c).unwrap();
            assert_eq!(m.center(), c);
            assert!(m.canonical_residual() < 1e-12);
            assert!((m.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert!((m.to_dense().unwrap().fidelity(&psi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cut_spectra_match_dense() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(r, 0.0)], 2).unwrap();
        let m = MpsState::from_dense(&bell, 2).unwrap();
        let sp = m.entanglement_spectrum_at_cut(1).unwrap();
        assert!((sp.values()[0] - 0.5).abs() < 1e-14 && (sp.values()[1] - 0.5).abs() < 1e-14);

        let p = MpsState::from_flavors(&parse_flavors("emem").unwrap(), 4).unwrap();
        assert_eq!(p.entanglement_spectrum_at_cut(2).unwrap().values()[0], 1.0);
        assert!(p.entanglement_spectrum_at_cut(0).is_err());
        assert!(p.entanglement_spectrum_at_cut(4).is_err());

        let psi = random_state(6, 11);
        let m = MpsState::from_dense(&psi, 8).unwrap();
        for cut in 1..6 {
            let sp = m.entanglement_spectrum_at_cut(cut).unwrap();
            let part: Vec<usize> = (0..cut).collect();
            let ev = hermitian_eigenvalues_desc(&reduced_density_matrix(&psi, &part).unwrap());
            for k in 0..ev.len().max(sp.dim()) {
                let want = ev.get(k).copied().unwrap_or(0.0).max(0.0);
                let got = sp.values().get(k).copied().unwrap_or(0.0);
                assert!((got - want).abs() < 1e-11, "cut {cut} k {k}");
            }
        }
    }

    #[test]
    fn site_spectra_match_dense() {
        let psi = random_state(6, 3);
        let m = MpsState::from_dense(&psi, 8).unwrap();
        let all = m.all_site_density_matrices().unwrap();
        for i in 0..6 {
            let want = psi.site_density_matrix(i).unwrap();
            let one = SiteDensity::site_density_matrix(&m, i).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!((all[i][a][b] - want[a][b]).norm() < 1e-12);
                    assert!((one[a][b] - want[a][b]).norm() < 1e-12);
                }
            }
            let sp = m.single_site_spectrum(i).unwrap();
            let ev = hermitian_eigenvalues_desc(&reduced_density_matrix(&psi, &[i]).unwrap());
            assert!((sp.values()[0] - ev[0]).abs() < 1e-11);
        }

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut ghz = vec![ZERO; 8];
        ghz[0] = C64::new(r, 0.0);
        ghz[7] = C64::new(r, 0.0);
        let m = MpsState::from_dense(&StateVector::new(ghz, 3).unwrap(), 4).unwrap();
        let sp = m.single_site_spectrum(0).unwrap();
        assert!((sp.values()[0] - 0.5).abs() < 1e-14);
        let p = MpsState::from_flavors(&parse_flavors("eme").unwrap(), 4).unwrap();
        assert_eq!(p.single_site_spectrum(1).unwrap().values(), &[1.0, 0.0]);
        assert!(p.single_site_spectrum(3).is_err());
    }

    #[test]
    fn truncated_import_respects_cap() {
        let psi = random_state(8, 5);
        let m = MpsState::from_dense(&psi, 3).unwrap();
        assert!(m.max_bond_dimension() <= 3);
        assert!((m.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
