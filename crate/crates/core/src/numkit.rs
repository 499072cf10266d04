//! Dense complex linear algebra and the distance/fidelity calculus used by
//! every other module.
//!
//! All heavy operations (eigendecompositions, singular values, fidelities)
//! first split their inputs into connected components of the joint sparsity
//! pattern. The operators produced elsewhere in the crate are typically
//! block-diagonal in a charge-sector basis, so this turns large dense
//! problems into many tiny ones without the callers having to know about
//! sectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Default cap on the number of entries of any dense matrix built by `kron`.
pub const DEFAULT_ENTRY_BUDGET: usize = 1 << 24;

/// Negative eigenvalues above this threshold are treated as round-off and
/// clamped to zero before matrix square roots; anything more negative is an
/// error.
pub const PSD_CLAMP: f64 = 1e-10;

/// Ordered list of subsystem dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemShape {
    pub dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(
                "subsystem dimensions must be positive".into(),
            ));
        }
        Ok(Self { dims })
    }

    /// Total (ambient) dimension.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }
}

/// Checks that every entry of `m` is finite.
pub fn ensure_finite(m: &CMat) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Maximum absolute deviation from Hermiticity.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Errors unless `m` is Hermitian within `1e-12 * max|entry|` (absolute
/// floor `1e-12`).
pub fn ensure_hermitian(m: &CMat) -> Result<()> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let res = hermiticity_residual(m);
    if res <= 1e-12 * scale {
        Ok(())
    } else {
        Err(Error::NotHermitian(res))
    }
}

/// Tensor (Kronecker) product. Dimensions multiply.
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => {
            return Err(Error::BudgetExceeded {
                got: usize::MAX,
                budget: DEFAULT_ENTRY_BUDGET,
            })
        }
    };
    match rows.checked_mul(cols) {
        Some(n) if n <= DEFAULT_ENTRY_BUDGET => {}
        _ => {
            return Err(Error::BudgetExceeded {
                got: rows.saturating_mul(cols),
                budget: DEFAULT_ENTRY_BUDGET,
            })
        }
    }
    let mut out = CMat::zeros(rows, cols);
    for i1 in 0..a.nrows() {
        for j1 in 0..a.ncols() {
            let av = a[(i1, j1)];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for i2 in 0..b.nrows() {
                for j2 in 0..b.ncols() {
                    out[(i1 * b.nrows() + i2, j1 * b.ncols() + j2)] = av * b[(i2, j2)];
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace keeping the subsystems listed in `keep` (indices into
/// `shape.dims`), in their original order.
pub fn partial_trace(m: &CMat, shape: &SubsystemShape, keep: &[usize]) -> Result<CMat> {
    let total = shape.total();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, shape product is {}",
            m.nrows(),
            m.ncols(),
            total
        )));
    }
    let n = shape.n_subsystems();
    if keep.iter().any(|&k| k >= n) {
        return Err(Error::InvalidArgument("keep index out of range".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::InvalidArgument("duplicate keep index".into()));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !sorted.contains(i)).collect();

    // Row-major strides.
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape.dims[i + 1];
    }
    let keep_dim: usize = sorted.iter().map(|&i| shape.dims[i]).product();
    let trace_dim: usize = traced.iter().map(|&i| shape.dims[i]).product();

    // Offsets of every keep-multi-index and trace-multi-index into the full
    // row-major index.
    let offsets = |subs: &[usize], count: usize| -> Vec<usize> {
        let mut out = vec![0usize; count];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            let mut off = 0usize;
            for &s in subs.iter().rev() {
                off += (rem % shape.dims[s]) * strides[s];
                rem /= shape.dims[s];
            }
            *slot = off;
        }
        out
    };
    let keep_off = offsets(&sorted, keep_dim);
    let trace_off = offsets(&traced, trace_dim);

    let mut out = CMat::zeros(keep_dim, keep_dim);
    for (ri, &ro) in keep_off.iter().enumerate() {
        for (ci, &co) in keep_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &to in &trace_off {
                acc += m[(ro + to, co + to)];
            }
            out[(ri, ci)] = acc;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Connected-component splitting.
// ---------------------------------------------------------------------------

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Connected components of the combined nonzero pattern of `mats`
/// (all square, same dimension). Each component is a sorted index list.
pub fn components(mats: &[&CMat]) -> Vec<Vec<usize>> {
    let n = mats[0].nrows();
    let mut uf = UnionFind::new(n);
    for m in mats {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)].norm_sqr() > 0.0 {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Extracts the principal submatrix on `idx`.
pub fn extract_block(m: &CMat, idx: &[usize]) -> CMat {
    let k = idx.len();
    CMat::from_fn(k, k, |i, j| m[(idx[i], idx[j])])
}

/// Connected components of the combined pattern of sparse triplet lists
/// over indices `0..dim`. Each component is a sorted index list.
pub fn sparse_components(dim: usize, entry_sets: &[&[(usize, usize, C64)]]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(dim);
    for set in entry_sets {
        for &(i, j, v) in *set {
            if v.norm_sqr() > 0.0 {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..dim {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Densifies the principal block of a sparse triplet list on the sorted
/// index set `rows`; entries outside the block are ignored.
pub fn sparse_block(entries: &[(usize, usize, C64)], rows: &[usize]) -> CMat {
    let pos: std::collections::HashMap<usize, usize> =
        rows.iter().enumerate().map(|(p, &r)| (r, p)).collect();
    let mut m = CMat::zeros(rows.len(), rows.len());
    for &(i, j, v) in entries {
        if let (Some(&pi), Some(&pj)) = (pos.get(&i), pos.get(&j)) {
            m[(pi, pj)] += v;
        }
    }
    m
}

/// Fidelity between two sparse Hermitian PSD trace-one operators, computed
/// blockwise over the connected components of their combined pattern so that
/// block-diagonal operators of large total dimension stay cheap.
pub fn sparse_fidelity(
    a: &[(usize, usize, C64)],
    b: &[(usize, usize, C64)],
    dim: usize,
) -> Result<f64> {
    let comps = sparse_components(dim, &[a, b]);
    let mut total = 0.0;
    for comp in comps {
        let ba = sparse_block(a, &comp);
        let bb = sparse_block(b, &comp);
        if ba.iter().all(|v| v.norm_sqr() == 0.0) || bb.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        total += fidelity_unnormalized(&ba, &bb)?;
    }
    Ok(total.min(1.0))
}

/// Trace norm of a sparse operator, computed blockwise.
pub fn sparse_trace_norm(entries: &[(usize, usize, C64)], dim: usize) -> f64 {
    let comps = sparse_components(dim, &[entries]);
    comps
        .into_iter()
        .map(|comp| trace_norm(&sparse_block(entries, &comp)))
        .sum()
}

// ---------------------------------------------------------------------------
// Spectral operations.
// ---------------------------------------------------------------------------

/// Hermitian eigendecomposition: returns (eigenvalues, eigenvector columns).
///
/// Backed by faer's self-adjoint solver; nalgebra's `symmetric_eigen` can
/// silently lose accuracy on complex Hermitian matrices with clustered
/// eigenvalues.
pub fn herm_eig(m: &CMat) -> (DVector<f64>, CMat) {
    let n = m.nrows();
    let a = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let v = m[(i, j)];
        faer::c64::new(v.re, v.im)
    });
    match a.self_adjoint_eigen(faer::Side::Lower) {
        Ok(evd) => {
            let u = evd.U();
            let s = evd.S().column_vector();
            let vals = DVector::from_fn(n, |i, _| s[i].re);
            let vecs = CMat::from_fn(n, n, |i, j| {
                let v = u[(i, j)];
                C64::new(v.re, v.im)
            });
            (vals, vecs)
        }
        Err(_) => {
            let se = m.clone().symmetric_eigen();
            (se.eigenvalues, se.eigenvectors)
        }
    }
}

/// Clamps small negative eigenvalues (round-off) to zero; errors on
/// genuinely negative spectra.
fn clamp_psd(vals: &mut DVector<f64>) -> Result<()> {
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_CLAMP {
                return Err(Error::NotPsd(*v));
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// Matrix square root of a Hermitian PSD matrix via eigendecomposition,
/// with component splitting.
pub fn herm_sqrt(m: &CMat) -> Result<CMat> {
    ensure_hermitian(m)?;
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for comp in components(&[m]) {
        let block = extract_block(m, &comp);
        let (mut vals, vecs) = herm_eig(&block);
        clamp_psd(&mut vals)?;
        let sq = &vecs * CMat::from_diagonal(&vals.map(|v| C64::new(v.sqrt(), 0.0))) * vecs.adjoint();
        for (bi, &gi) in comp.iter().enumerate() {
            for (bj, &gj) in comp.iter().enumerate() {
                out[(gi, gj)] = sq[(bi, bj)];
            }
        }
    }
    Ok(out)
}

fn singular_values_blocked(m: &CMat) -> Vec<f64> {
    let mut out = Vec::new();
    for comp in components(&[m]) {
        let block = extract_block(m, &comp);
        out.extend(block.singular_values().iter().copied());
    }
    out
}

/// Trace norm (sum of singular values).
pub fn trace_norm(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return m.clone().singular_values().iter().sum();
    }
    singular_values_blocked(m).iter().sum()
}

/// Operator norm (largest singular value).
pub fn operator_norm(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return m.clone().singular_values().iter().cloned().fold(0.0, f64::max);
    }
    singular_values_blocked(m).iter().cloned().fold(0.0, f64::max)
}

/// Trace distance δ(ρ,σ) = ‖ρ−σ‖₁ / 2.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> f64 {
    trace_norm(&(rho - sigma)) / 2.0
}

/// Root fidelity F(ρ,σ) = ‖√ρ √σ‖₁ of two (sub-normalized) PSD blocks,
/// without trace validation. Used internally on unnormalized sector blocks.
pub fn fidelity_unnormalized(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let mut total = 0.0f64;
    for comp in components(&[rho, sigma]) {
        let rb = extract_block(rho, &comp);
        let sb = extract_block(sigma, &comp);
        let (mut rvals, rvecs) = herm_eig(&rb);
        clamp_psd(&mut rvals)?;
        let sqrt_r =
            &rvecs * CMat::from_diagonal(&rvals.map(|v| C64::new(v.sqrt(), 0.0))) * rvecs.adjoint();
        let m = &sqrt_r * sb * &sqrt_r;
        let (mut mvals, _) = herm_eig(&m);
        // `m` inherits more round-off than a raw state; clamp proportionally.
        let scale = mvals.iter().cloned().fold(0.0f64, f64::max).max(1.0);
        for v in mvals.iter_mut() {
            if *v < 0.0 {
                if *v < -PSD_CLAMP * scale {
                    return Err(Error::NotPsd(*v));
                }
                *v = 0.0;
            }
        }
        total += mvals.iter().map(|v| v.sqrt()).sum::<f64>();
    }
    Ok(total)
}

/// Fidelity F(ρ,σ) = ‖√ρ √σ‖₁ of two density matrices (unit trace within
/// 1e-9, PSD within clamping tolerance). Symmetric; 1 iff equal.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.nrows() != rho.ncols() || rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of {:?} vs {:?}",
            rho.shape(),
            sigma.shape()
        )));
    }
    ensure_finite(rho)?;
    ensure_finite(sigma)?;
    ensure_hermitian(rho)?;
    ensure_hermitian(sigma)?;
    for m in [rho, sigma] {
        let tr = m.trace().re;
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "fidelity requires unit trace, got {tr}"
            )));
        }
    }
    Ok(fidelity_unnormalized(rho, sigma)?.min(1.0))
}

/// Purified distance √(1−F²).
pub fn purified_distance(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// Thin SVD A = U Σ V†: returns (singular values, U m×k, V† k×n) with
/// k = min(m, n). Backed by faer for the same reliability reasons as
/// [`herm_eig`].
pub fn svd_full(a: &CMat) -> (Vec<f64>, CMat, CMat) {
    let (m, n) = (a.nrows(), a.ncols());
    let k = m.min(n);
    let fa = faer::Mat::<faer::c64>::from_fn(m, n, |i, j| {
        let v = a[(i, j)];
        faer::c64::new(v.re, v.im)
    });
    if let Ok(svd) = fa.thin_svd() {
        let s = svd.S().column_vector();
        let vals: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
        let u = svd.U();
        let v = svd.V();
        let un = CMat::from_fn(m, k, |i, j| {
            let w = u[(i, j)];
            C64::new(w.re, w.im)
        });
        let vt = CMat::from_fn(k, n, |i, j| {
            let w = v[(j, i)];
            C64::new(w.re, -w.im)
        });
        (vals, un, vt)
    } else {
        let svd = a.clone().svd(true, true);
        (
            svd.singular_values.iter().copied().collect(),
            svd.u.expect("svd u"),
            svd.v_t.expect("svd v_t"),
        )
    }
}

/// Polar factor U of A (A = U P with P PSD), via SVD.
pub fn polar_unitary(a: &CMat) -> CMat {
    let (_, u, vt) = svd_full(a);
    u * vt
}
