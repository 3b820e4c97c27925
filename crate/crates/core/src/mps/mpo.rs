use crate::error::{Error, Result};
use crate::linalg::{identity2, pauli, scale2, Axis, CMatrix, Mat2, C64, ZERO};
use crate::model::{Basis, HamiltonianTerms, SystemSpec};

/// Channels: 0 nothing placed yet, 1..=3 one σ_a placed, 4 all terms closed.
pub const MPO_BOND: usize = 5;

/// Largest chain the dense MPO contraction accepts.
pub const MAX_DENSE_MPO_SITES: usize = 10;

/// Finite-state-machine MPO of `Σᵢ hᵢ + c Σ_{i<j} σᵢ·σⱼ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMpo {
    one_body: Vec<Mat2>,
    pair_coupling: f64,
}

pub(crate) type MpoEntry = (usize, usize, Mat2);

impl HamiltonianMpo {
    pub fn from_terms(terms: &HamiltonianTerms) -> Self {
        HamiltonianMpo {
            one_body: terms.one_body.clone(),
            pair_coupling: terms.pair_coupling,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.one_body.len()
    }

    pub fn pair_coupling(&self) -> f64 {
        self.pair_coupling
    }

    /// Updates the pair channel for a new `μ`; nothing else changes.
    pub fn set_coupling(&mut self, mu: f64) {
        self.pair_coupling = mu / 2.0;
    }

    /// Nonzero blocks `W[w_in][w_out]` at `site`.
    pub(crate) fn entries(&self, site: usize) -> Vec<MpoEntry> {
        let id = identity2();
        let c = C64::new(self.pair_coupling, 0.0);
        let mut e = Vec::with_capacity(12);
        e.push((0, 0, id));
        for (a, ax) in Axis::ALL.iter().enumerate() {
            e.push((0, a + 1, pauli(*ax)));
        }
        e.push((0, 4, self.one_body[site]));
        for (a, ax) in Axis::ALL.iter().enumerate() {
            e.push((a + 1, a + 1, id));
            e.push((a + 1, 4, scale2(&pauli(*ax), c)));
        }
        e.push((4, 4, id));
        e
    }

    /// Contracts the MPO into a dense matrix (site 0 most significant).
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.n_sites();
        if n > MAX_DENSE_MPO_SITES {
            return Err(Error::Capacity {
                what: "dense MPO contraction",
                limit: MAX_DENSE_MPO_SITES,
                requested: n,
            });
        }
        let mut acc: Vec<Option<CMatrix>> = vec![None; MPO_BOND];
        acc[0] = Some(CMatrix::identity(1, 1));
        for site in 0..n {
            let mut next: Vec<Option<CMatrix>> = vec![None; MPO_BOND];
            for (wi, wo, op) in self.entries(site) {
                let Some(left) = &acc[wi] else { continue };
                let d = left.nrows();
                let mut k = CMatrix::from_element(2 * d, 2 * d, ZERO);
                for r in 0..d {
                    for c in 0..d {
                        let v = left[(r, c)];
                        if v == ZERO {
                            continue;
                        }
                        for s in 0..2 {
                            for t in 0..2 {
                                k[(2 * r + s, 2 * c + t)] = v * op[s][t];
                            }
                        }
                    }
                }
                match &mut next[wo] {
                    Some(m) => *m += k,
                    slot => *slot = Some(k),
                }
            }
            acc = next;
        }
        Ok(acc[4].take().expect("closing channel is always populated"))
    }
}

/// MPO of the Hamiltonian at time `t` in `basis`.
pub fn build_mpo(spec: &SystemSpec, t: f64, basis: Basis) -> Result<HamiltonianMpo> {
    Ok(HamiltonianMpo::from_terms(&HamiltonianTerms::new(spec, t, basis)?))
}
