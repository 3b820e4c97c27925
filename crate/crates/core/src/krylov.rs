//! Lanczos approximation of `exp(-i τ H) v` for Hermitian `H` given only
//! through its action on vectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr, C64, ZERO};

/// Settings for the Lanczos exponential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovSettings {
    /// Maximum Krylov subspace dimension per substep.
    pub max_dim: usize,
    /// Absolute tolerance on the a-posteriori error estimate of each substep.
    pub tol: f64,
    /// Upper bound on the number of substeps before giving up.
    pub max_substeps: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self {
            max_dim: 32,
            tol: 1e-13,
            max_substeps: 100_000,
        }
    }
}

/// Computes `exp(-i tau H) v`. When `max_dim` vectors do not reach the
/// tolerance for the whole interval, the largest admissible substep is taken
/// from the same Krylov space and the remainder is restarted from there.
pub fn expm_apply<F>(mut apply: F, v: &[C64], tau: f64, settings: &KrylovSettings) -> Result<Vec<C64>>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if settings.max_dim < 2 {
        return Err(Error::InvalidArgument("krylov dimension must be at least 2".into()));
    }
    let mut cur = v.to_vec();
    let mut remaining = tau;
    let mut substeps = 0usize;
    while remaining != 0.0 {
        if substeps == settings.max_substeps {
            return Err(Error::Numerical(format!(
                "Lanczos exponential needed more than {} substeps for tau = {tau}",
                settings.max_substeps
            )));
        }
        let (next, done) = lanczos_step(&mut apply, &cur, remaining, settings).ok_or_else(|| {
            Error::Numerical(format!("Lanczos exponential broke down with {remaining} of tau = {tau} left"))
        })?;
        cur = next;
        remaining = if done == remaining { 0.0 } else { remaining - done };
        substeps += 1;
    }
    Ok(cur)
}

/// Eigen-decomposed tridiagonal Lanczos matrix.
struct Tridiagonal {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Tridiagonal {
    fn new(alphas: &[f64], betas: &[f64]) -> Self {
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        Tridiagonal {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `exp(-i tau T) e_1`.
    fn expm_e1(&self, tau: f64) -> Vec<C64> {
        let m = self.values.len();
        let mut out = vec![ZERO; m];
        for k in 0..m {
            let phase = C64::new(0.0, -tau * self.values[k]).exp() * self.vectors[(0, k)];
            for (i, o) in out.iter_mut().enumerate() {
                *o += phase * self.vectors[(i, k)];
            }
        }
        out
    }

    fn last_coeff(&self, tau: f64) -> f64 {
        let m = self.values.len();
        let mut acc = ZERO;
        for k in 0..m {
            acc += C64::new(0.0, -tau * self.values[k]).exp() * (self.vectors[(0, k)] * self.vectors[(m - 1, k)]);
        }
        acc.norm()
    }
}

/// One Lanczos exponential over at most `tau`; returns the propagated vector
/// and the time actually covered, or `None` if no positive substep qualifies.
fn lanczos_step<F>(apply: &mut F, v: &[C64], tau: f64, settings: &KrylovSettings) -> Option<(Vec<C64>, f64)>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = v.len();
    let beta0 = norm_sqr(v).sqrt();
    if beta0 == 0.0 || tau == 0.0 {
        return Some((v.to_vec(), tau));
    }
    if !beta0.is_finite() {
        return None;
    }
    let max_dim = settings.max_dim.min(n);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_dim);
    basis.push(v.iter().map(|z| z / beta0).collect());
    let mut alphas: Vec<f64> = Vec::with_capacity(max_dim);
    let mut betas: Vec<f64> = Vec::with_capacity(max_dim);
    let mut w = vec![ZERO; n];

    loop {
        let j = basis.len() - 1;
        apply(&basis[j], &mut w);
        let alpha = inner(&basis[j], &w).re;
        alphas.push(alpha);
        for (wk, bk) in w.iter_mut().zip(&basis[j]) {
            *wk -= bk * alpha;
        }
        if j > 0 {
            let b = betas[j - 1];
            for (wk, bk) in w.iter_mut().zip(&basis[j - 1]) {
                *wk -= bk * b;
            }
        }
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= qk * c;
                }
            }
        }
        let beta = norm_sqr(&w).sqrt();
        let m = alphas.len();
        let invariant = beta <= 1e-14 * (1.0 + alpha.abs()) || m == n;
        let tri = Tridiagonal::new(&alphas, &betas);
        let err = |h: f64| beta * tri.last_coeff(h) * beta0;
        // the estimate itself cannot resolve below its rounding floor
        let tol = settings.tol.max(4.0 * m as f64 * f64::EPSILON * beta * beta0);
        let mut h = tau;
        let mut done = invariant || err(tau) <= tol;
        if !done && m == max_dim {
            // largest admissible substep by bisection on the scalar estimate
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if err(mid * tau) <= tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                return None;
            }
            h = lo * tau;
            done = true;
        }
        if done {
            let coeffs = tri.expm_e1(h);
            let mut out = vec![ZERO; n];
            for (c, q) in coeffs.iter().zip(&basis) {
                let c = c * beta0;
                for (o, qk) in out.iter_mut().zip(q) {
                    *o += qk * c;
                }
            }
            return Some((out, h));
        }
        betas.push(beta);
        basis.push(w.iter().map(|z| z / beta).collect());
    }
}
