//! Compressed sparse row matrices and a sparse symmetric LDLᵀ factorization.
//!
//! The factorization follows the up-looking elimination-tree scheme used by
//! QDLDL. Symmetric indefinite saddle-point matrices are handled through a
//! signed static regularization (`+δ` on primal unknowns, `-δ` on multipliers)
//! which makes the factored matrix quasi-definite, followed by iterative
//! refinement against the unregularized matrix.

use crate::error::{FsiError, Result};
use crate::scalar::{norm_inf, Real};

/// Sparse matrix in CSR layout with sorted, duplicate-free column indices.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Clone, Debug)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Adds every entry of `m` scaled by `alpha`, shifted by the given offsets.
    pub fn push_matrix(&mut self, m: &CsrMatrix<T>, alpha: T, row_off: usize, col_off: usize) {
        for i in 0..m.nrows {
            for (j, v) in m.row(i) {
                self.push(i + row_off, j + col_off, alpha * v);
            }
        }
    }

    pub fn build(self) -> CsrMatrix<T> {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from triplets. Duplicates are summed in a fixed order
    /// (sorted by row, column, then insertion), so the result is bit-stable.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, T)>) -> Self {
        // stable sort keeps insertion order among duplicates
        entries.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::one())).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterates `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "mul_vec: dimension mismatch");
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows, "transpose_mul_vec: dimension mismatch");
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.data[k] * xi;
            }
        }
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let ay = self.mul_vec(y);
        crate::scalar::dot(x, &ay)
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trip.push((j, i, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    /// `alpha * self + beta * other`
    pub fn lin_comb(&self, alpha: T, other: &Self, beta: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        b.push_matrix(self, alpha, 0, 0);
        b.push_matrix(other, beta, 0, 0);
        b.build()
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= alpha;
        }
        out
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Extracts the submatrix with rows `rows` and columns `cols` (global indices,
    /// in the order given).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut trip = Vec::new();
        for (ni, &oi) in rows.iter().enumerate() {
            for (j, v) in self.row(oi) {
                let nj = col_map[j];
                if nj != usize::MAX {
                    trip.push((ni, nj, v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), trip)
    }

    pub fn max_abs(&self) -> T {
        norm_inf(&self.data)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn from_dense(d: &[Vec<T>]) -> Self {
        let nrows = d.len();
        let ncols = d.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in d.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, trip)
    }

    /// Row-wise `∞`-norm estimate of the matrix.
    pub fn norm_inf(&self) -> T {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

/// Role of an unknown in a symmetric system, used to sign the regularization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Primal,
    Dual,
}

/// Options for [`LdlFactor::new`].
#[derive(Clone, Debug)]
pub struct LdlOptions {
    /// Per-unknown block tag; `None` means the matrix is treated as SPD and
    /// no regularization is applied.
    pub blocks: Option<Vec<Block>>,
    /// Relative static regularization, scaled by the largest diagonal magnitude.
    pub regularization: f64,
    /// Planar coordinates per unknown for the nested-dissection ordering.
    /// Unknowns without a coordinate are eliminated last.
    pub coords: Option<Vec<Option<[f64; 2]>>>,
    pub max_refinement_steps: usize,
    pub refinement_tol: f64,
}

impl Default for LdlOptions {
    fn default() -> Self {
        Self {
            blocks: None,
            regularization: 1e-11,
            coords: None,
            max_refinement_steps: 20,
            refinement_tol: 1e-14,
        }
    }
}

const NONE: usize = usize::MAX;

/// Sparse LDLᵀ factorization of a symmetric matrix with a fill-reducing ordering.
#[derive(Clone, Debug)]
pub struct LdlFactor<T> {
    n: usize,
    /// new index -> original index
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
    dinv: Vec<T>,
    original: CsrMatrix<T>,
    regularized: bool,
    max_refinement_steps: usize,
    refinement_tol: T,
}

/// Counts of positive and negative pivots of a factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
}

impl<T: Real> LdlFactor<T> {
    pub fn new(k: &CsrMatrix<T>, opts: &LdlOptions) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(FsiError::Dimension(format!(
                "LDLᵀ needs a square matrix, got {}x{}",
                n,
                k.ncols()
            )));
        }
        let perm = match &opts.coords {
            Some(c) => nested_dissection(k, c),
            None => (0..n).collect(),
        };
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let dscale = k
            .diagonal()
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
            .max(T::min_positive_value());
        let reg = T::lit(opts.regularization) * dscale;

        // permuted upper triangle in CSC (column j holds rows i <= j)
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in k.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pi <= pj {
                    cols[pj].push((pi, v));
                }
            }
        }
        if let Some(blocks) = &opts.blocks {
            for (old, b) in blocks.iter().enumerate() {
                let s = match b {
                    Block::Primal => reg,
                    Block::Dual => -reg,
                };
                cols[inv[old]].push((inv[old], s));
            }
        }
        let mut ap = vec![0usize; n + 1];
        let mut ai = Vec::new();
        let mut ax = Vec::new();
        for (j, col) in cols.iter_mut().enumerate() {
            col.sort_by_key(|e| e.0);
            let mut last = NONE;
            for &(i, v) in col.iter() {
                if i == last {
                    *ax.last_mut().unwrap() += v;
                } else {
                    ai.push(i);
                    ax.push(v);
                    last = i;
                }
            }
            ap[j + 1] = ai.len();
        }

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }

        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![T::zero(); total];
        let mut d = vec![T::zero(); n];
        let mut dinv = vec![T::zero(); n];

        let mut y_markers = vec![false; n];
        let mut y_vals = vec![T::zero(); n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = lp[..n].to_vec();

        for kk in 0..n {
            let mut nnz_y = 0usize;
            d[kk] = T::zero();
            for p in ap[kk]..ap[kk + 1] {
                let bidx = ai[p];
                if bidx == kk {
                    d[kk] = ax[p];
                    continue;
                }
                y_vals[bidx] = ax[p];
                if !y_markers[bidx] {
                    y_markers[bidx] = true;
                    elim[0] = bidx;
                    let mut nnz_e = 1usize;
                    let mut next = etree[bidx];
                    while next != NONE && next < kk {
                        if y_markers[next] {
                            break;
                        }
                        y_markers[next] = true;
                        elim[nnz_e] = next;
                        nnz_e += 1;
                        next = etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        y_idx[nnz_y] = elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for idx in (0..nnz_y).rev() {
                let c = y_idx[idx];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for q in lp[c]..tmp {
                    y_vals[li[q]] -= lx[q] * yc;
                }
                li[tmp] = kk;
                lx[tmp] = yc * dinv[c];
                d[kk] -= yc * lx[tmp];
                next_space[c] += 1;
                y_vals[c] = T::zero();
                y_markers[c] = false;
            }
            if d[kk] == T::zero() || !d[kk].is_finite() {
                return Err(FsiError::SolverFailure {
                    message: format!("zero or non-finite pivot at elimination step {kk} of {n}"),
                    residual: f64::INFINITY,
                });
            }
            dinv[kk] = T::one() / d[kk];
        }

        Ok(Self {
            n,
            perm,
            lp,
            li,
            lx,
            d,
            dinv,
            original: k.clone(),
            regularized: opts.blocks.is_some(),
            max_refinement_steps: opts.max_refinement_steps,
            refinement_tol: T::lit(opts.refinement_tol),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn inertia(&self) -> Inertia {
        let positive = self.d.iter().filter(|&&v| v > T::zero()).count();
        Inertia {
            positive,
            negative: self.n - positive,
        }
    }

    /// Pivots of the factorization (in elimination order).
    pub fn pivots(&self) -> &[T] {
        &self.d
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.original
    }

    /// One application of the factored inverse, no refinement.
    pub fn apply_inverse(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let xi = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                x[self.li[q]] -= self.lx[q] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[q] * x[self.li[q]];
            }
            x[i] = s;
        }
        let mut out = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    /// Solves `K x = b` with iterative refinement against the unregularized `K`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        assert_eq!(b.len(), self.n, "solve: rhs dimension mismatch");
        let bnorm = norm_inf(b);
        if bnorm == T::zero() {
            return Ok(vec![T::zero(); self.n]);
        }
        let knorm = self.original.norm_inf();
        let mut x = self.apply_inverse(b);
        let mut rel = T::infinity();
        for _ in 0..=self.max_refinement_steps {
            let kx = self.original.mul_vec(&x);
            let r: Vec<T> = b.iter().zip(&kx).map(|(&bi, &ki)| bi - ki).collect();
            let scale = bnorm + knorm * norm_inf(&x);
            let new_rel = norm_inf(&r) / scale;
            if new_rel <= self.refinement_tol {
                return Ok(x);
            }
            // stagnation: stop once refinement no longer helps
            if new_rel >= rel * T::lit(0.9) && !self.regularized {
                rel = new_rel;
                break;
            }
            rel = new_rel;
            let dx = self.apply_inverse(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
        }
        if rel <= T::lit(1e-9) || rel.to_f64_lossy() <= 1e3 * T::epsilon().to_f64_lossy() {
            Ok(x)
        } else {
            Err(FsiError::SolverFailure {
                message: "iterative refinement did not converge".into(),
                residual: rel.to_f64_lossy(),
            })
        }
    }

    /// Inverse power iteration for the eigenvalue of smallest magnitude.
    pub fn smallest_eigenvalue_estimate(&self, iterations: usize) -> T {
        let n = self.n;
        let mut x: Vec<T> = (0..n).map(|i| T::one() + T::lit(((i * 7919) % 97) as f64 / 97.0)).collect();
        let mut lambda = T::zero();
        for _ in 0..iterations {
            let nx = crate::scalar::norm2(&x);
            for v in &mut x {
                *v /= nx;
            }
            let y = self.apply_inverse(&x);
            let ax = self.original.mul_vec(&x);
            lambda = crate::scalar::dot(&x, &ax);
            x = y;
        }
        lambda
    }
}

/// Symmetric adjacency lists of the sparsity pattern (diagonal excluded).
fn adjacency<T: Real>(k: &CsrMatrix<T>) -> Vec<Vec<usize>> {
    let n = k.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in k.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Geometric nested dissection: recursive median splits along the longer
/// bounding-box axis, with a one-sided vertex separator ordered last.
pub fn nested_dissection<T: Real>(k: &CsrMatrix<T>, coords: &[Option<[f64; 2]>]) -> Vec<usize> {
    let n = k.nrows();
    assert_eq!(coords.len(), n);
    let adj = adjacency(k);
    let mut order = Vec::with_capacity(n);
    let free: Vec<usize> = (0..n).filter(|&i| coords[i].is_some()).collect();
    let mut tag = vec![0u32; n];
    let mut next_tag = 1u32;
    dissect(&free, &adj, coords, &mut tag, &mut next_tag, &mut order);
    order.extend((0..n).filter(|&i| coords[i].is_none()));
    order
}

const ND_LEAF: usize = 96;

fn dissect(
    set: &[usize],
    adj: &[Vec<usize>],
    coords: &[Option<[f64; 2]>],
    tag: &mut [u32],
    next_tag: &mut u32,
    order: &mut Vec<usize>,
) {
    if set.len() <= ND_LEAF {
        order.extend_from_slice(set);
        return;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &v in set {
        let c = coords[v].unwrap();
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    let mut sorted = set.to_vec();
    sorted.sort_by(|&a, &b| {
        let (ca, cb) = (coords[a].unwrap()[axis], coords[b].unwrap()[axis]);
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    // keep coincident coordinates on one side
    let mut mid = sorted.len() / 2;
    let split_val = coords[sorted[mid]].unwrap()[axis];
    while mid > 0 && coords[sorted[mid - 1]].unwrap()[axis] == split_val {
        mid -= 1;
    }
    if mid == 0 {
        order.extend_from_slice(set);
        return;
    }
    let (left, right) = sorted.split_at(mid);

    let right_tag = *next_tag;
    *next_tag += 1;
    for &v in right {
        tag[v] = right_tag;
    }
    let mut sep = Vec::new();
    let mut left_rest = Vec::new();
    for &v in left {
        if adj[v].iter().any(|&w| tag[w] == right_tag) {
            sep.push(v);
        } else {
            left_rest.push(v);
        }
    }
    for &v in right {
        tag[v] = 0;
    }
    if left_rest.is_empty() {
        order.extend_from_slice(set);
        return;
    }
    dissect(&left_rest, adj, coords, tag, next_tag, order);
    dissect(right, adj, coords, tag, next_tag, order);
    order.extend_from_slice(&sep);
}
