use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use super::mpo::{HamiltonianMpo, MpoEntry, MPO_BOND};
use super::{row_major, MpsState, SiteTensor};
use crate::error::{Error, Result};
use crate::exact::EvolutionParams;
use crate::krylov::{expm_apply, KrylovSettings};
use crate::linalg::{C64, ONE, ZERO};
use crate::model::{Basis, HamiltonianTerms, SystemSpec};

/// Singular values at or below this fraction of the largest are treated as
/// exact zeros when deciding the numerical rank.
pub const RANK_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdvpSettings {
    pub krylov: KrylovSettings,
    /// Extra cutoff on the relative discarded weight; 0 keeps everything up to the cap.
    pub svd_epsilon: f64,
}

impl Default for TdvpSettings {
    fn default() -> Self {
        TdvpSettings {
            krylov: KrylovSettings::default(),
            svd_epsilon: 0.0,
        }
    }
}

/// Bookkeeping of one sweep pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Sum over all splits of the discarded squared singular values.
    pub discarded_weight: f64,
    pub max_bond: usize,
    /// Splits where the cap fell inside a degenerate multiplet.
    pub degenerate_cuts: usize,
}

pub(crate) struct Split {
    pub u: Mat<C64>,
    pub s: Vec<f64>,
    pub vh: Mat<C64>,
    pub discarded: f64,
    pub degenerate: bool,
}

/// SVD keeping `min(cap, numerical rank)` values, renormalized to unit weight.
pub(crate) fn truncated_svd(m: MatRef<'_, C64>, cap: usize, svd_epsilon: f64, site: usize) -> Result<Split> {
    let finite = (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()));
    if !finite {
        return Err(Error::Numerical(format!("non-finite two-site tensor at site {site}")));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed at site {site}: {e:?}")))?;
    let sv = svd.S().column_vector();
    let raw: Vec<f64> = (0..sv.nrows()).map(|i| sv[i].re).collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let total: f64 = raw.iter().map(|x| x * x).sum();
    if !(total > 0.0) {
        return Err(Error::Numerical(format!("zero tensor at site {site}")));
    }
    let s0 = raw[order[0]];
    let rank = order.iter().take_while(|&&i| raw[i] > RANK_TOL * s0).count().max(1);
    let mut keep = rank.min(cap).max(1);
    if svd_epsilon > 0.0 {
        let mut tail: f64 = order[keep..].iter().map(|&i| raw[i] * raw[i]).sum();
        while keep > 1 {
            let w = raw[order[keep - 1]].powi(2);
            if (tail + w) / total > svd_epsilon {
                break;
            }
            tail += w;
            keep -= 1;
        }
    }
    let kept: f64 = order[..keep].iter().map(|&i| raw[i] * raw[i]).sum();
    let degenerate = keep < raw.len()
        && keep < rank
        && raw[order[keep - 1]] - raw[order[keep]] <= 1e-12 * s0;
    if degenerate {
        log::debug!("degenerate singular values at the cap boundary (site {site}, keep {keep})");
    }
    let scale = kept.sqrt();
    let (u_full, v_full) = (svd.U(), svd.V());
    let u = Mat::from_fn(m.nrows(), keep, |r, c| u_full[(r, order[c])]);
    let vh = Mat::from_fn(keep, m.ncols(), |r, c| v_full[(c, order[r])].conj());
    Ok(Split {
        u,
        s: order[..keep].iter().map(|&i| raw[i] / scale).collect(),
        vh,
        discarded: (total - kept).max(0.0) / total,
        degenerate,
    })
}

/// Five `d × d` blocks indexed (bra, ket); `live[w]` is false for all-zero blocks.
#[derive(Clone, Debug)]
struct Env {
    d: usize,
    blocks: Vec<Vec<C64>>,
    live: [bool; MPO_BOND],
}

impl Env {
    fn boundary(channel: usize) -> Env {
        let mut blocks = vec![vec![ZERO]; MPO_BOND];
        blocks[channel][0] = ONE;
        let mut live = [false; MPO_BOND];
        live[channel] = true;
        Env { d: 1, blocks, live }
    }

    fn block(&self, w: usize) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.blocks[w], self.d, self.d)
    }

    fn from_blocks(d: usize, blocks: Vec<Vec<C64>>) -> Env {
        let mut live = [false; MPO_BOND];
        for (w, b) in blocks.iter().enumerate() {
            live[w] = b.iter().any(|z| *z != ZERO);
        }
        Env { d, blocks, live }
    }
}

fn mat_mut(buf: &mut [C64], r: usize, c: usize) -> MatMut<'_, C64> {
    MatMut::from_row_major_slice_mut(buf, r, c)
}

/// `Y[w_out][p, s', q] = Σ W[w_in][w_out](s', s) X[w_in][p, s, q]`.
fn apply_phys(x: &[Option<Vec<C64>>], entries: &[MpoEntry], pre: usize, post: usize) -> Vec<Option<Vec<C64>>> {
    let mut y: Vec<Option<Vec<C64>>> = vec![None; MPO_BOND];
    for (wi, wo, op) in entries {
        let Some(xin) = &x[*wi] else { continue };
        let out = y[*wo].get_or_insert_with(|| vec![ZERO; pre * 2 * post]);
        for p in 0..pre {
            let base = p * 2 * post;
            let (x0, x1) = xin[base..base + 2 * post].split_at(post);
            for sp in 0..2 {
                let (a, b) = (op[sp][0], op[sp][1]);
                if a == ZERO && b == ZERO {
                    continue;
                }
                let o = &mut out[base + sp * post..base + (sp + 1) * post];
                for q in 0..post {
                    o[q] += a * x0[q] + b * x1[q];
                }
            }
        }
    }
    y
}

/// `L[w] · T` for every live block, with `T` viewed as `d × cols`.
fn left_multiply(env: &Env, t: &[C64], cols: usize) -> Vec<Option<Vec<C64>>> {
    let d = env.d;
    let tm = MatRef::from_row_major_slice(t, d, cols);
    (0..MPO_BOND)
        .map(|w| {
            env.live[w].then(|| {
                let mut out = vec![ZERO; d * cols];
                matmul(mat_mut(&mut out, d, cols), Accum::Replace, env.block(w), tm, ONE, Par::Seq);
                out
            })
        })
        .collect()
}

/// `out = Σ_w Y[w] · R[w]ᵀ`, `Y[w]` viewed as `rows × d`.
fn right_contract(y: &[Option<Vec<C64>>], env: &Env, rows: usize, out: &mut [C64]) {
    out.fill(ZERO);
    for w in 0..MPO_BOND {
        if !env.live[w] {
            continue;
        }
        let Some(yw) = &y[w] else { continue };
        let ym = MatRef::from_row_major_slice(yw, rows, env.d);
        matmul(mat_mut(out, rows, env.d), Accum::Add, ym, env.block(w).transpose(), ONE, Par::Seq);
    }
}

fn extend_left(env: &Env, a: &SiteTensor, entries: &[MpoEntry]) -> Env {
    let (dl, dr) = (a.dl, a.dr);
    let x = left_multiply(env, &a.data, 2 * dr);
    let y = apply_phys(&x, entries, dl, dr);
    let am = a.left_matrix();
    let blocks = y
        .into_iter()
        .map(|yw| match yw {
            Some(yw) => {
                let mut out = vec![ZERO; dr * dr];
                let ym = MatRef::from_row_major_slice(&yw, 2 * dl, dr);
                matmul(mat_mut(&mut out, dr, dr), Accum::Replace, am.adjoint(), ym, ONE, Par::Seq);
                out
            }
            None => vec![ZERO; dr * dr],
        })
        .collect();
    Env::from_blocks(dr, blocks)
}

fn extend_right(env: &Env, a: &SiteTensor, entries: &[MpoEntry]) -> Env {
    let (dl, dr) = (a.dl, a.dr);
    let am = a.left_matrix();
    let x: Vec<Option<Vec<C64>>> = (0..MPO_BOND)
        .map(|w| {
            env.live[w].then(|| {
                let mut out = vec![ZERO; 2 * dl * dr];
                matmul(mat_mut(&mut out, 2 * dl, dr), Accum::Replace, am, env.block(w).transpose(), ONE, Par::Seq);
                out
            })
        })
        .collect();
    // W acts with (w_out, w_in) swapped when growing from the right
    let flipped: Vec<MpoEntry> = entries.iter().map(|&(wi, wo, op)| (wo, wi, op)).collect();
    let y = apply_phys(&x, &flipped, dl, dr);
    let ac = a.right_matrix().conjugate();
    let blocks = y
        .into_iter()
        .map(|yw| match yw {
            Some(yw) => {
                let mut out = vec![ZERO; dl * dl];
                let ym = MatRef::from_row_major_slice(&yw, dl, 2 * dr);
                matmul(mat_mut(&mut out, dl, dl), Accum::Replace, ac, ym.transpose(), ONE, Par::Seq);
                out
            }
            None => vec![ZERO; dl * dl],
        })
        .collect();
    Env::from_blocks(dl, blocks)
}

fn apply_one(l: &Env, w: &[MpoEntry], r: &Env, m: &[C64], out: &mut [C64]) {
    let (dl, dr) = (l.d, r.d);
    let x = left_multiply(l, m, 2 * dr);
    let y = apply_phys(&x, w, dl, dr);
    right_contract(&y, r, 2 * dl, out);
}

fn apply_two(l: &Env, w1: &[MpoEntry], w2: &[MpoEntry], r: &Env, theta: &[C64], out: &mut [C64]) {
    let (dl, dr) = (l.d, r.d);
    let x = left_multiply(l, theta, 4 * dr);
    let y = apply_phys(&x, w1, dl, 2 * dr);
    let z = apply_phys(&y, w2, 2 * dl, dr);
    right_contract(&z, r, 4 * dl, out);
}

fn merge(a: &SiteTensor, b: &SiteTensor) -> Vec<C64> {
    row_major((a.left_matrix() * b.right_matrix()).as_ref())
}

fn scale_rows(vh: &mut Mat<C64>, s: &[f64]) {
    for (j, &sj) in s.iter().enumerate() {
        for c in 0..vh.ncols() {
            vh[(j, c)] *= sj;
        }
    }
}

fn scale_cols(u: &mut Mat<C64>, s: &[f64]) {
    for (j, &sj) in s.iter().enumerate() {
        for r in 0..u.nrows() {
            u[(r, j)] *= sj;
        }
    }
}

/// Orthonormal rows completing the row space of `b` (orthonormal rows) up to `target`.
fn complete_rows(b: MatRef<'_, C64>, target: usize) -> Vec<Vec<C64>> {
    let p = b.ncols();
    let mut rows: Vec<Vec<C64>> = (0..b.nrows()).map(|r| (0..p).map(|c| b[(r, c)]).collect()).collect();
    let have = rows.len();
    for j in 0..p {
        if rows.len() >= target {
            break;
        }
        let mut v = vec![ZERO; p];
        v[j] = ONE;
        for _ in 0..2 {
            for r in &rows {
                let ov: C64 = r.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(r) {
                    *x -= ov * a;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.5 {
            rows.push(v.into_iter().map(|z| z / nrm).collect());
        }
    }
    rows.split_off(have)
}

/// Grows every bond right of the center (at site 0) to `min(cap, 2^min(k, N−k))`
/// with zero-weight orthonormal directions, so the two-site projector spans the
/// full reachable space even when the state itself has lower rank.
fn pad_bonds(state: &mut MpsState, cap: usize) -> Result<()> {
    let n = state.n_sites();
    for i in (1..n).rev() {
        let structural = 1usize << i.min(n - i).min(30);
        let t = &state.tensors()[i];
        let target = cap.min(structural).min(2 * t.dr);
        if t.dl >= target {
            continue;
        }
        let extra = complete_rows(t.right_matrix(), target);
        if extra.is_empty() {
            continue;
        }
        let (dl, dr) = (t.dl, t.dr);
        let new_dl = dl + extra.len();
        let mut data = t.data.clone();
        for row in extra {
            data.extend(row);
        }
        state.tensors_mut()[i] = SiteTensor::new(new_dl, dr, data)?;
        let prev = &state.tensors()[i - 1];
        let (pl, pr) = (prev.dl, prev.dr);
        let mut grown = vec![ZERO; pl * 2 * new_dl];
        for row in 0..pl * 2 {
            grown[row * new_dl..row * new_dl + pr].copy_from_slice(&prev.data[row * pr..(row + 1) * pr]);
        }
        state.tensors_mut()[i - 1] = SiteTensor::new(pl, new_dl, grown)?;
    }
    Ok(())
}

/// One symmetric two-site TDVP step of length `dt`; the center ends at site 0.
pub fn tdvp2_step(state: &mut MpsState, mpo: &HamiltonianMpo, dt: f64, settings: &TdvpSettings) -> Result<StepReport> {
    let n = state.n_sites();
    if mpo.n_sites() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mpo.n_sites(),
        });
    }
    state.move_center(0)?;
    let cap = state.max_bond();
    if mpo.pair_coupling() != 0.0 {
        pad_bonds(state, cap)?;
    }
    let kry = &settings.krylov;
    let w: Vec<Vec<MpoEntry>> = (0..n).map(|i| mpo.entries(i)).collect();
    let mut report = StepReport::default();

    if n == 1 {
        let l = Env::boundary(0);
        let r = Env::boundary(MPO_BOND - 1);
        let t = &mut state.tensors_mut()[0];
        t.data = expm_apply(|x, y| apply_one(&l, &w[0], &r, x, y), &t.data, dt, kry)?;
        state.normalize();
        report.max_bond = 1;
        return Ok(report);
    }

    let mut lenv: Vec<Option<Env>> = vec![None; n];
    let mut renv: Vec<Option<Env>> = vec![None; n];
    lenv[0] = Some(Env::boundary(0));
    renv[n - 1] = Some(Env::boundary(MPO_BOND - 1));
    for i in (1..n - 1).rev() {
        let next = extend_right(renv[i + 1].as_ref().expect("built"), &state.tensors()[i + 1], &w[i + 1]);
        renv[i] = Some(next);
    }

    let record = |report: &mut StepReport, split: &Split| {
        report.discarded_weight += split.discarded;
        report.max_bond = report.max_bond.max(split.s.len());
        report.degenerate_cuts += usize::from(split.degenerate);
    };

    // left to right
    for i in 0..n - 1 {
        let last = i == n - 2;
        let tau = if last { dt } else { 0.5 * dt };
        let (dl, dr) = (state.tensors()[i].dl, state.tensors()[i + 1].dr);
        let (l, r) = (lenv[i].as_ref().expect("built"), renv[i + 1].as_ref().expect("built"));
        let theta = merge(&state.tensors()[i], &state.tensors()[i + 1]);
        let theta = expm_apply(|x, y| apply_two(l, &w[i], &w[i + 1], r, x, y), &theta, tau, kry)?;
        let mut split = truncated_svd(MatRef::from_row_major_slice(&theta, 2 * dl, 2 * dr), cap, settings.svd_epsilon, i)?;
        record(&mut report, &split);
        let k = split.s.len();
        if !last {
            scale_rows(&mut split.vh, &split.s);
            let a = SiteTensor::new(dl, k, row_major(split.u.as_ref()))?;
            let next_l = extend_left(l, &a, &w[i]);
            let c = row_major(split.vh.as_ref());
            let c = expm_apply(|x, y| apply_one(&next_l, &w[i + 1], r, x, y), &c, -0.5 * dt, kry)?;
            state.tensors_mut()[i] = a;
            state.tensors_mut()[i + 1] = SiteTensor::new(k, dr, c)?;
            lenv[i + 1] = Some(next_l);
        } else {
            scale_cols(&mut split.u, &split.s);
            let b = SiteTensor::new(k, dr, row_major(split.vh.as_ref()))?;
            let next_r = extend_right(r, &b, &w[i + 1]);
            let mut c = row_major(split.u.as_ref());
            if i > 0 {
                c = expm_apply(|x, y| apply_one(l, &w[i], &next_r, x, y), &c, -0.5 * dt, kry)?;
            }
            state.tensors_mut()[i] = SiteTensor::new(dl, k, c)?;
            state.tensors_mut()[i + 1] = b;
            renv[i] = Some(next_r);
        }
    }

    // right to left; the last pair was already advanced by the full step
    for i in (0..n.saturating_sub(2)).rev() {
        let (dl, dr) = (state.tensors()[i].dl, state.tensors()[i + 1].dr);
        let (l, r) = (lenv[i].as_ref().expect("built"), renv[i + 1].as_ref().expect("built"));
        let theta = merge(&state.tensors()[i], &state.tensors()[i + 1]);
        let theta = expm_apply(|x, y| apply_two(l, &w[i], &w[i + 1], r, x, y), &theta, 0.5 * dt, kry)?;
        let mut split = truncated_svd(MatRef::from_row_major_slice(&theta, 2 * dl, 2 * dr), cap, settings.svd_epsilon, i)?;
        record(&mut report, &split);
        let k = split.s.len();
        scale_cols(&mut split.u, &split.s);
        let b = SiteTensor::new(k, dr, row_major(split.vh.as_ref()))?;
        let next_r = extend_right(r, &b, &w[i + 1]);
        let mut c = row_major(split.u.as_ref());
        if i > 0 {
            c = expm_apply(|x, y| apply_one(l, &w[i], &next_r, x, y), &c, -0.5 * dt, kry)?;
        }
        state.tensors_mut()[i] = SiteTensor::new(dl, k, c)?;
        state.tensors_mut()[i + 1] = b;
        renv[i] = Some(next_r);
    }
    state.set_center(0);
    state.normalize();
    Ok(report)
}

/// Outcome of a full MPS trajectory.
#[derive(Clone, Debug)]
pub struct MpsRun {
    pub state: MpsState,
    pub total_discarded_weight: f64,
    pub max_bond_seen: usize,
    pub degenerate_cuts: usize,
}

/// Evolves with two-site TDVP, freezing `μ` at each step's midpoint, and calls
/// `observer(step, t, state)` on the same cadence as the exact engine.
pub fn evolve_mps<F>(
    mut state: MpsState,
    spec: &SystemSpec,
    params: &EvolutionParams,
    basis: Basis,
    settings: &TdvpSettings,
    mut observer: F,
) -> Result<MpsRun>
where
    F: FnMut(usize, f64, &MpsState) -> Result<()>,
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
    let mut mpo = HamiltonianMpo::from_terms(&HamiltonianTerms::new(spec, 0.0, basis)?);
    let mut run_settings = *settings;
    run_settings.krylov.max_dim = params.krylov_dim;
    let n_steps = params.n_steps();
    let mut total = 0.0;
    let mut max_seen = state.max_bond_dimension();
    let mut degenerate = 0;
    observer(0, 0.0, &state)?;
    for k in 0..n_steps {
        let t0 = params.time_at(k);
        let t1 = params.time_at(k + 1);
        mpo.set_coupling(spec.coupling_at(0.5 * (t0 + t1))?);
        let rep = tdvp2_step(&mut state, &mpo, t1 - t0, &run_settings)?;
        total += rep.discarded_weight;
        max_seen = max_seen.max(rep.max_bond);
        degenerate += rep.degenerate_cuts;
        if (k + 1) % params.snapshot_every == 0 || k + 1 == n_steps {
            observer(k + 1, t1, &state)?;
        }
    }
    Ok(MpsRun {
        state,
        total_discarded_weight: total,
        max_bond_seen: max_seen,
        degenerate_cuts: degenerate,
    })
}
