//! Weighted Hilbert-space substrate: grids with quadrature weights, dense
//! complex matrices, orthonormal subspaces and Hermitian eigendecomposition.
//!
//! Every vector lives on a [`Grid`] and inner products are
//! `⟨φ, ψ⟩ = Σₖ wₖ conj(φₖ) ψₖ`. An operator `M` is "Hermitian" when
//! `⟨φ, Mψ⟩ = ⟨Mφ, ψ⟩` in this inner product, i.e. when `W M` is Hermitian in
//! the ordinary sense. Internally the weighted problems are mapped to standard
//! ones through the similarity `W^{1/2} M W^{-1/2}`.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use faer::complex_native::c64;
use faer::prelude::*;
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Default relative rank threshold for [`orthonormalize`].
pub const RANK_TOL: f64 = 1e-8;

/// Eigenvalues closer than this (relative to `‖M‖`) form one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn to_c(z: C64) -> c64 {
    c64::new(z.re, z.im)
}

#[inline]
pub(crate) fn from_c(z: c64) -> C64 {
    C64::new(z.re, z.im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Lebesgue,
    /// `dp / (1 + βp²)`.
    BetaMeasure,
    /// Unit weights; used by finite-dimensional matrix models.
    Counting,
}

impl Measure {
    pub fn label(&self) -> &'static str {
        match self {
            Measure::Lebesgue => "lebesgue",
            Measure::BetaMeasure => "beta-measure",
            Measure::Counting => "counting",
        }
    }
}

/// Sample points of one copy of a 1-D domain, with quadrature weights.
///
/// A grid may describe `copies` disjoint copies of the same sampled interval;
/// the ambient index of point `k` on copy `i` is `i * points.len() + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
    measure: Measure,
    copies: usize,
}

impl Grid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>, measure: Measure) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::Config("grid must contain at least one point".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Config(format!("grid weight {w} is not positive")));
        }
        if points.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Config("grid points must be strictly increasing".into()));
        }
        Ok(Self {
            points,
            weights,
            measure,
            copies: 1,
        })
    }

    /// `n` uniformly spaced points on `[a, b]` (endpoints included) with
    /// trapezoid weights.
    pub fn trapezoid(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::Config(format!("trapezoid grid needs n >= 2 and b > a (n={n}, a={a}, b={b})")));
        }
        let h = (b - a) / (n - 1) as f64;
        let points = (0..n).map(|k| a + k as f64 * h).collect();
        let mut weights = vec![h; n];
        weights[0] = h / 2.0;
        weights[n - 1] = h / 2.0;
        Self::new(points, weights, Measure::Lebesgue)
    }

    /// `m` points `λⱼ = j/m`, `j = 1..=m`, of the circle `[0, 1)` with `λ = 1`
    /// identified with `λ = 0`; uniform weights `1/m`.
    pub fn periodic(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("periodic grid needs at least one point".into()));
        }
        let h = 1.0 / m as f64;
        let points = (1..=m).map(|j| j as f64 * h).collect();
        Self::new(points, vec![h; m], Measure::Lebesgue)
    }

    /// `n` points `0, 1, …, n-1` with unit weights.
    pub fn counting(n: usize) -> Result<Self> {
        Self::new((0..n).map(|k| k as f64).collect(), vec![1.0; n], Measure::Counting)
    }

    pub fn with_copies(mut self, copies: usize) -> Self {
        assert!(copies >= 1, "a grid needs at least one copy");
        self.copies = copies;
        self
    }

    /// Ambient dimension: `copies × points`.
    pub fn len(&self) -> usize {
        self.copies * self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn points_per_copy(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    /// Coordinate of ambient index `k`.
    pub fn point(&self, k: usize) -> f64 {
        self.points[k % self.points.len()]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k % self.weights.len()]
    }

    /// `(copy, local index)` of ambient index `k`.
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.points.len(), k % self.points.len())
    }

    pub fn index(&self, copy: usize, local: usize) -> usize {
        copy * self.points.len() + local
    }

    /// Weights tiled over all copies.
    pub fn ambient_weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    /// Concatenate grids into a single one-copy grid; later grids are shifted
    /// so that the points stay strictly increasing.
    pub fn concat(grids: &[&Grid]) -> Result<Grid> {
        let mut points: Vec<f64> = Vec::new();
        let mut weights = Vec::new();
        for g in grids {
            let span = g.points[g.points.len() - 1] - g.points[0];
            let offset = points.last().map_or(0.0, |last| last + 1.0 - g.points[0]);
            for k in 0..g.len() {
                let (c, _) = g.split(k);
                points.push(g.point(k) + offset + c as f64 * (span + 1.0));
                weights.push(g.weight(k));
            }
        }
        let measure = match grids.first() {
            Some(first) if grids.iter().all(|g| g.measure == first.measure) => first.measure,
            _ => Measure::Lebesgue,
        };
        Grid::new(points, weights, measure)
    }
}

/// Dense complex matrix.
#[derive(Clone, Debug)]
pub struct ComplexMatrix(Mat<c64>);

impl PartialEq for ComplexMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows() == other.nrows()
            && self.ncols() == other.ncols()
            && (0..self.ncols()).all(|j| (0..self.nrows()).all(|i| self.0.read(i, j) == other.0.read(i, j)))
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Mat::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(Mat::from_fn(rows, cols, |i, j| to_c(f(i, j))))
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) })
    }

    /// Row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self::from_fn(rows, cols, |i, j| entries[i * cols + j]))
    }

    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub(crate) fn from_faer(m: Mat<c64>) -> Self {
        Self(m)
    }

    pub(crate) fn as_faer(&self) -> &Mat<c64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        from_c(self.0.read(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.0.write(i, j, to_c(z));
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.nrows()).map(|i| self.get(i, j)).collect()
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.nrows() * self.ncols());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Self {
        Self(self.0.as_ref().subcols(range.start, range.len()).to_owned())
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.nrows(), other.nrows());
        let n = self.ncols();
        Self::from_fn(self.nrows(), n + other.ncols(), |i, j| {
            if j < n {
                self.get(i, j)
            } else {
                other.get(i, j - n)
            }
        })
    }

    /// Ordinary conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint().to_owned())
    }

    pub fn scale(&self, z: C64) -> Self {
        let z = to_c(z);
        Self(Mat::from_fn(self.nrows(), self.ncols(), |i, j| self.0.read(i, j) * z))
    }

    /// `diag(left) · self · diag(right)`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Self {
        Self(Mat::from_fn(self.nrows(), self.ncols(), |i, j| {
            self.0.read(i, j) * (left[i] * right[j])
        }))
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.ncols());
        let x = Mat::from_fn(v.len(), 1, |i, _| to_c(v[i]));
        let y = &self.0 * &x;
        (0..self.nrows()).map(|i| from_c(y.read(i, 0))).collect()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                m = m.max(self.0.read(i, j).abs());
            }
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm_l2()
    }

    /// Largest singular value (ordinary 2-norm).
    pub fn spectral_norm(&self) -> f64 {
        if self.nrows() == 0 || self.ncols() == 0 {
            return 0.0;
        }
        self.singular_values().into_iter().fold(0.0, f64::max)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.0.singular_values()
    }

    /// Largest entrywise deviation from the identity.
    pub fn identity_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                m = m.max((from_c(self.0.read(i, j)) - target).norm());
            }
        }
        m
    }

    /// Solve `self · X = rhs` by partial-pivoting LU.
    pub fn solve(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        Self(self.0.partial_piv_lu().solve(&rhs.0))
    }

    /// Numerical rank from the singular values, relative to the largest one.
    pub fn rank(&self, tol: f64) -> usize {
        let s = self.singular_values();
        let top = s.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > tol * top).count()
    }

    /// Block-diagonal sum.
    pub fn block_diag(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut out = Mat::<c64>::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for j in 0..b.ncols() {
                for i in 0..b.nrows() {
                    out.write(r0 + i, c0 + j, b.0.read(i, j));
                }
            }
            r0 += b.nrows();
            c0 += b.ncols();
        }
        Self(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let (p, q) = (other.nrows(), other.ncols());
        Self::from_fn(self.nrows() * p, self.ncols() * q, |i, j| {
            self.get(i / p, j / q) * other.get(i % p, j % q)
        })
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.ncols(), rhs.nrows(), "matrix product dimension mismatch");
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Complex samples over a grid.
#[derive(Clone, Debug)]
pub struct StateVec {
    components: Vec<C64>,
    grid: Arc<Grid>,
}

impl StateVec {
    pub fn new(components: Vec<C64>, grid: Arc<Grid>) -> Result<Self> {
        if components.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: components.len(),
            });
        }
        if components.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("state has non-finite components".into()));
        }
        Ok(Self { components, grid })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(usize, f64) -> C64) -> Self {
        let components = (0..grid.len())
            .map(|k| f(grid.split(k).0, grid.point(k)))
            .collect();
        Self { components, grid }
    }

    pub fn components(&self) -> &[C64] {
        &self.components
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn norm(&self) -> f64 {
        norm(&self.components, &self.grid)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.components.iter_mut().for_each(|z| *z /= n);
        }
        self
    }
}

/// Raw weighted inner product over the ambient index set of `grid`.
pub fn inner(a: &[C64], b: &[C64], grid: &Grid) -> C64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| x.conj() * y * grid.weight(k))
        .sum()
}

pub fn norm(a: &[C64], grid: &Grid) -> f64 {
    a.iter()
        .enumerate()
        .map(|(k, x)| x.norm_sqr() * grid.weight(k))
        .sum::<f64>()
        .sqrt()
}

/// `⟨φ, ψ⟩ = Σₖ wₖ conj(φₖ) ψₖ`.
pub fn inner_product(phi: &StateVec, psi: &StateVec, g: &Grid) -> Result<C64> {
    for v in [phi, psi] {
        if v.components.len() != g.len() {
            return Err(Error::Dimension {
                expected: g.len(),
                found: v.components.len(),
            });
        }
    }
    Ok(inner(&phi.components, &psi.components, g))
}

/// Subspace given by a weighted-orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: ComplexMatrix,
    grid: Arc<Grid>,
}

impl Subspace {
    /// Wraps a basis that is already weighted-orthonormal; checked to 1e-10.
    pub fn from_orthonormal(basis: ComplexMatrix, grid: Arc<Grid>) -> Result<Self> {
        if basis.nrows() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: basis.nrows(),
            });
        }
        let s = Self { basis, grid };
        let d = s.orthonormality_defect();
        if d > 1e-10 {
            return Err(Error::NumericalRank(format!("basis is not orthonormal (defect {d:.3e})")));
        }
        Ok(s)
    }

    pub(crate) fn from_orthonormal_unchecked(basis: ComplexMatrix, grid: Arc<Grid>) -> Self {
        Self { basis, grid }
    }

    pub fn full(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        let inv: Vec<f64> = grid.ambient_weights().iter().map(|w| 1.0 / w.sqrt()).collect();
        let ones = vec![1.0; n];
        let basis = ComplexMatrix::identity(n).scale_rows_cols(&inv, &ones);
        Self { basis, grid }
    }

    pub fn empty(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            basis: ComplexMatrix::zeros(n, 0),
            grid,
        }
    }

    /// Span of the normalized unit vectors at the listed ambient indices.
    pub fn coordinate(grid: Arc<Grid>, indices: &[usize]) -> Self {
        let n = grid.len();
        let mut basis = ComplexMatrix::zeros(n, indices.len());
        for (j, &k) in indices.iter().enumerate() {
            basis.set(k, j, C64::new(1.0 / grid.weight(k).sqrt(), 0.0));
        }
        Self { basis, grid }
    }

    /// `(row, value)` of each basis column when every column has exactly one
    /// non-zero entry, as for [`Subspace::coordinate`].
    pub fn coordinate_support(&self) -> Option<Vec<(usize, C64)>> {
        let zero = c64::new(0.0, 0.0);
        (0..self.dim())
            .map(|j| {
                let col = self.basis.0.col(j);
                let mut hit = None;
                for i in 0..col.nrows() {
                    let z = col.read(i);
                    if z != zero {
                        if hit.is_some() {
                            return None;
                        }
                        hit = Some((i, from_c(z)));
                    }
                }
                hit
            })
            .collect()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `max |Bᴴ W B − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        weighted_gram(&self.basis, &self.basis, &self.grid).identity_defect()
    }

    /// Coefficients `Bᴴ W v`.
    pub fn coefficients(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|j| {
                (0..self.ambient_dim())
                    .map(|k| self.basis.get(k, j).conj() * v[k] * self.grid.weight(k))
                    .sum()
            })
            .collect()
    }

    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let c = self.coefficients(v);
        self.basis.mat_vec(&c)
    }

    /// Weighted distance from `v` to the subspace.
    pub fn distance(&self, v: &[C64]) -> f64 {
        let p = self.project(v);
        let r: Vec<C64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
        norm(&r, &self.grid)
    }

    /// Vector `B c`.
    pub fn combine(&self, c: &[C64]) -> Vec<C64> {
        self.basis.mat_vec(c)
    }

    /// Direct sum of subspaces living on consecutive blocks of a larger ambient space.
    pub fn direct_sum(parts: &[&Subspace], grid: Arc<Grid>) -> Result<Self> {
        let blocks: Vec<&ComplexMatrix> = parts.iter().map(|s| &s.basis).collect();
        let basis = ComplexMatrix::block_diag(&blocks);
        if basis.nrows() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: basis.nrows(),
            });
        }
        Ok(Self { basis, grid })
    }

    /// Largest sine of the principal angles between two subspaces of equal dimension.
    pub fn max_angle_sine(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        if self.dim() == 0 {
            return 0.0;
        }
        // sin of the largest angle = ‖(1 − P_self) B_other‖, free of 1 − cos² cancellation.
        let coef = weighted_gram(&self.basis, &other.basis, &self.grid);
        let resid = &other.basis - &(&self.basis * &coef);
        to_standard_vectors(&resid, &self.grid).spectral_norm().min(1.0)
    }
}

/// `Aᴴ W B`.
pub fn weighted_gram(a: &ComplexMatrix, b: &ComplexMatrix, grid: &Grid) -> ComplexMatrix {
    let w = grid.ambient_weights();
    let wb = b.scale_rows_cols(&w, &vec![1.0; b.ncols()]);
    &a.adjoint() * &wb
}

/// `W^{1/2} M W^{-1/2}` for an operator on the ambient space of `grid`.
pub(crate) fn to_standard(m: &ComplexMatrix, grid: &Grid) -> ComplexMatrix {
    let s: Vec<f64> = grid.ambient_weights().iter().map(|w| w.sqrt()).collect();
    let si: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
    m.scale_rows_cols(&s, &si)
}

/// Weighted adjoint `W^{-1} Mᴴ W`.
pub fn weighted_adjoint(m: &ComplexMatrix, grid: &Grid) -> ComplexMatrix {
    let w = grid.ambient_weights();
    let wi: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    m.adjoint().scale_rows_cols(&wi, &w)
}

/// Operator norm of `M` in the weighted inner product.
pub fn operator_norm(m: &ComplexMatrix, grid: &Grid) -> f64 {
    to_standard(m, grid).spectral_norm()
}

/// Rank-revealing Gram–Schmidt (with one reorthogonalization pass) in the
/// weighted inner product. Columns are processed in input order; a column
/// whose residual norm falls below `tol ×` (largest input column norm) is dropped.
pub fn orthonormalize(v: &ComplexMatrix, g: &Arc<Grid>, tol: f64) -> Subspace {
    let n = v.nrows();
    assert_eq!(n, g.len(), "columns must live on the grid");
    let cols: Vec<Vec<C64>> = (0..v.ncols()).map(|j| v.column(j)).collect();
    let largest = cols.iter().map(|c| norm(c, g)).fold(0.0, f64::max);
    let mut q: Vec<Vec<C64>> = Vec::new();
    if largest == 0.0 {
        return Subspace::empty(g.clone());
    }
    for mut c in cols {
        for _ in 0..2 {
            for qk in &q {
                let h = inner(qk, &c, g);
                c.iter_mut().zip(qk).for_each(|(x, y)| *x -= y * h);
            }
        }
        let r = norm(&c, g);
        if r < tol * largest {
            continue;
        }
        c.iter_mut().for_each(|x| *x /= r);
        q.push(c);
    }
    Subspace::from_orthonormal_unchecked(ComplexMatrix::from_columns(n, &q), g.clone())
}

/// Orthonormal bases of the range of `a` (assumed full column rank) and of its
/// orthogonal complement, both in the weighted inner product.
pub(crate) fn range_and_complement(a: &ComplexMatrix, g: &Arc<Grid>) -> Result<(Subspace, Subspace)> {
    let n = a.nrows();
    let k = a.ncols();
    if k == 0 {
        return Ok((Subspace::empty(g.clone()), Subspace::full(g.clone())));
    }
    let sa = to_standard_vectors(a, g);
    let qr = sa.0.qr();
    let r = qr.compute_thin_r();
    let diag: Vec<f64> = (0..k).map(|i| r.read(i, i).abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    if let Some(d) = diag.iter().find(|&&d| d <= 1e-12 * top) {
        return Err(Error::NumericalRank(format!(
            "columns are numerically dependent (|r_ii| = {d:.3e}, max {top:.3e})"
        )));
    }
    let q = ComplexMatrix::from_faer(qr.compute_q());
    let range = from_standard_vectors(&q.columns(0..k), g);
    let comp = from_standard_vectors(&q.columns(k..n), g);
    Ok((
        Subspace::from_orthonormal_unchecked(range, g.clone()),
        Subspace::from_orthonormal_unchecked(comp, g.clone()),
    ))
}

/// `W^{1/2} V` (vectors, not operators).
pub(crate) fn to_standard_vectors(v: &ComplexMatrix, g: &Grid) -> ComplexMatrix {
    let s: Vec<f64> = g.ambient_weights().iter().map(|w| w.sqrt()).collect();
    v.scale_rows_cols(&s, &vec![1.0; v.ncols()])
}

pub(crate) fn from_standard_vectors(v: &ComplexMatrix, g: &Grid) -> ComplexMatrix {
    let s: Vec<f64> = g.ambient_weights().iter().map(|w| 1.0 / w.sqrt()).collect();
    v.scale_rows_cols(&s, &vec![1.0; v.ncols()])
}

/// Orthogonal complement in the weighted inner product.
pub fn complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    let k = s.dim();
    if k == 0 {
        return Subspace::full(s.grid.clone());
    }
    if k >= n {
        return Subspace::empty(s.grid.clone());
    }
    let q = ComplexMatrix::from_faer(to_standard_vectors(&s.basis, &s.grid).0.qr().compute_q());
    let comp = from_standard_vectors(&q.columns(k..n), &s.grid);
    Subspace::from_orthonormal_unchecked(comp, s.grid.clone())
}

/// Eigenvalues (ascending) and weighted-orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralData {
    /// Number of eigenvalues within `tol` of `x`.
    pub fn multiplicity(&self, x: f64, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| (e - x).abs() <= tol).count()
    }

    /// Eigenvalues with `|μ| <= bound`.
    pub fn window(&self, bound: f64) -> Vec<f64> {
        self.eigenvalues.iter().cloned().filter(|e| e.abs() <= bound).collect()
    }
}

/// Hermitian eigendecomposition in the weighted inner product.
///
/// Fails with [`Error::Symmetry`] when `M` deviates from weighted
/// Hermiticity by more than `1e-9 ‖M‖`. Eigenvectors belonging to one
/// degenerate cluster (eigenvalues within `1e-9 ‖M‖`) are fixed
/// deterministically by Gram–Schmidt of the projected unit vectors taken in
/// index order.
pub fn eigh(m: &ComplexMatrix, g: &Grid) -> Result<SpectralData> {
    let n = g.len();
    if !m.is_square() || m.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.nrows(),
        });
    }
    let a = to_standard(m, g);
    let ah = a.adjoint();
    let defect = (&a - &ah).max_abs();
    let herm = (&a + &ah).scale(C64::new(0.5, 0.0));
    let evd = herm.0.selfadjoint_eigendecomposition(Side::Lower);
    let vals: Vec<f64> = (0..n).map(|i| evd.s().column_vector().read(i).re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let scale = eigenvalues.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    if defect > 1e-9 * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        let rel = if scale > 0.0 { defect / scale } else { f64::INFINITY };
        return Err(Error::Symmetry { defect: rel });
    }
    let u = evd.u();
    let mut q = ComplexMatrix::from_fn(n, n, |i, j| from_c(u.read(i, order[j])));

    let tol = CLUSTER_TOL * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut q, start, end);
        }
        start = end;
    }

    Ok(SpectralData {
        eigenvalues,
        eigenvectors: from_standard_vectors(&q, g),
    })
}

/// Replace columns `start..end` of the (standard-orthonormal) `q` by the
/// Gram–Schmidt orthonormalization of the projections of `e₀, e₁, …` onto
/// their span.
fn canonicalize_cluster(q: &mut ComplexMatrix, start: usize, end: usize) {
    let n = q.nrows();
    let k = end - start;
    let block: Vec<Vec<C64>> = (start..end).map(|j| q.column(j)).collect();
    let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(k);
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    for idx in 0..n {
        if chosen.len() == k {
            break;
        }
        // Projection of e_idx onto the cluster: Σ_c conj(c[idx]) c.
        let mut v = vec![C64::new(0.0, 0.0); n];
        for c in &block {
            let coef = c[idx].conj();
            v.iter_mut().zip(c).for_each(|(x, y)| *x += y * coef);
        }
        for _ in 0..2 {
            for c in &chosen {
                let h = dot(c, &v);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= y * h);
            }
        }
        let r = dot(&v, &v).re.sqrt();
        if r < 1e-4 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= r);
        chosen.push(v);
    }
    // Fallback: fill from the original block if the unit vectors did not suffice.
    for c in &block {
        if chosen.len() == k {
            break;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for d in &chosen {
                let h = dot(d, &v);
                v.iter_mut().zip(d).for_each(|(x, y)| *x -= y * h);
            }
        }
        let r = dot(&v, &v).re.sqrt();
        if r > 1e-8 {
            v.iter_mut().for_each(|x| *x /= r);
            chosen.push(v);
        }
    }
    for (off, v) in chosen.into_iter().enumerate() {
        for (i, z) in v.into_iter().enumerate() {
            q.set(i, start + off, z);
        }
    }
}

/// Residual `max_j ‖M v_j − μ_j v_j‖` (weighted) of a decomposition.
pub fn eigen_residual(m: &ComplexMatrix, g: &Grid, s: &SpectralData) -> f64 {
    let mv = m * &s.eigenvectors;
    (0..s.eigenvalues.len())
        .map(|j| {
            let r: Vec<C64> = (0..m.nrows())
                .map(|i| mv.get(i, j) - s.eigenvectors.get(i, j) * s.eigenvalues[j])
                .collect();
            norm(&r, g)
        })
        .fold(0.0, f64::max)
}

/// `V Λ Vᴴ W`.
pub fn reconstruct(s: &SpectralData, g: &Grid) -> ComplexMatrix {
    let d: Vec<C64> = s.eigenvalues.iter().map(|&e| C64::new(e, 0.0)).collect();
    let vl = &s.eigenvectors * &ComplexMatrix::from_diag(&d);
    let w = g.ambient_weights();
    let vhw = s.eigenvectors.adjoint().scale_rows_cols(&vec![1.0; s.eigenvectors.ncols()], &w);
    &vl * &vhw
}

/// Eigen-decomposition of a unitary matrix: returns the eigenphases in
/// `(-π, π]` and an orthonormal eigenbasis (as columns).
///
/// The commuting Hermitian parts `(u + uᴴ)/2` and `(u − uᴴ)/2i` are
/// diagonalized jointly, so degenerate phases are handled without a general
/// non-Hermitian solver.
pub fn unitary_eigen(u: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let r = u.nrows();
    let uh = u.adjoint();
    let cos_part = (u + &uh).scale(C64::new(0.5, 0.0));
    let sin_part = (u - &uh).scale(C64::new(0.0, -0.5));
    let g = Grid::counting(r).expect("non-empty");
    let c = eigh(&cos_part, &g).expect("Hermitian by construction");
    let mut basis = c.eigenvectors.clone();
    let mut start = 0;
    while start < r {
        let mut end = start + 1;
        while end < r && c.eigenvalues[end] - c.eigenvalues[end - 1] < 1e-8 {
            end += 1;
        }
        if end - start > 1 {
            let block = c.eigenvectors.columns(start..end);
            let s_block = &(&block.adjoint() * &sin_part) * &block;
            let gb = Grid::counting(end - start).expect("non-empty");
            let sd = eigh(&s_block, &gb).expect("Hermitian by construction");
            let rotated = &block * &sd.eigenvectors;
            for j in 0..(end - start) {
                for i in 0..r {
                    basis.set(i, start + j, rotated.get(i, j));
                }
            }
        }
        start = end;
    }
    let phases = (0..r)
        .map(|j| {
            let v = basis.column(j);
            let uv = u.mat_vec(&v);
            let z: C64 = v.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum();
            z.arg()
        })
        .collect();
    (phases, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn unit_function_has_unit_norm() {
        let g = Arc::new(Grid::trapezoid(0.0, 1.0, 3).unwrap());
        let one = StateVec::from_fn(g.clone(), |_, _| c(1.0));
        let ip = inner_product(&one, &one, &g).unwrap();
        assert!((ip - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let g = Arc::new(Grid::trapezoid(0.0, 1.0, 11).unwrap());
        let a = StateVec::from_fn(g.clone(), |_, x| c(if x < 0.45 { 1.0 } else { 0.0 }));
        let b = StateVec::from_fn(g.clone(), |_, x| c(if x > 0.55 { 1.0 } else { 0.0 }));
        assert_eq!(inner_product(&a, &b, &g).unwrap(), c(0.0));
    }

    #[test]
    fn oscillating_exponential_integrates_to_zero() {
        // Exact integral of e^{2πiλ} over [0, 1] is 0.
        let g = Arc::new(Grid::trapezoid(0.0, 1.0, 256).unwrap());
        let e = StateVec::from_fn(g.clone(), |_, x| C64::from_polar(1.0, 2.0 * PI * x));
        let one = StateVec::from_fn(g.clone(), |_, _| c(1.0));
        assert!(inner_product(&e, &one, &g).unwrap().norm() < 1e-3);
    }

    #[test]
    fn inner_product_rejects_mismatched_lengths() {
        let g = Arc::new(Grid::trapezoid(0.0, 1.0, 5).unwrap());
        let h = Arc::new(Grid::trapezoid(0.0, 1.0, 6).unwrap());
        let a = StateVec::from_fn(g.clone(), |_, _| c(1.0));
        let b = StateVec::from_fn(h, |_, _| c(1.0));
        assert!(matches!(
            inner_product(&a, &b, &g),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn grid_invariants_are_enforced() {
        assert!(Grid::new(vec![0.0, 1.0], vec![1.0], Measure::Lebesgue).is_err());
        assert!(Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], Measure::Lebesgue).is_err());
        assert!(Grid::new(vec![0.0, 1.0], vec![1.0, 0.0], Measure::Lebesgue).is_err());
    }

    #[test]
    fn orthonormalize_collapses_duplicates_and_keeps_orthonormal_input() {
        let g = Arc::new(Grid::trapezoid(0.0, 1.0, 6).unwrap());
        let col = vec![c(1.0), c(2.0), c(0.0), c(-1.0), c(0.5), c(3.0)];
        let v = ComplexMatrix::from_columns(6, &[col.clone(), col]);
        assert_eq!(orthonormalize(&v, &g, RANK_TOL).dim(), 1);

        let full = Subspace::full(g.clone());
        let again = orthonormalize(full.basis(), &g, RANK_TOL);
        assert_eq!(again.dim(), 6);
        assert!((&again.basis().clone() - full.basis()).max_abs() < 1e-12);
    }

    #[test]
    fn orthonormalize_of_zero_is_empty() {
        let g = Arc::new(Grid::counting(4).unwrap());
        assert_eq!(orthonormalize(&ComplexMatrix::zeros(4, 3), &g, RANK_TOL).dim(), 0);
    }

    #[test]
    fn eigh_diagonal_and_zero() {
        let g = Grid::counting(3).unwrap();
        let d = ComplexMatrix::from_diag(&[c(3.0), c(-1.0), c(2.0)]);
        assert_eq!(eigh(&d, &g).unwrap().eigenvalues, vec![-1.0, 2.0, 3.0]);
        let z = eigh(&ComplexMatrix::zeros(3, 3), &g).unwrap();
        assert!(z.eigenvalues.iter().all(|e| *e == 0.0));
        // Zero matrix is one cluster; canonical basis = unit vectors in order.
        assert!((&z.eigenvectors - &ComplexMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let g = Grid::counting(2).unwrap();
        let m = ComplexMatrix::from_row_major(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]).unwrap();
        match eigh(&m, &g) {
            Err(Error::Symmetry { defect }) => assert!(defect > 0.1),
            other => panic!("expected symmetry error, got {other:?}"),
        }
    }

    #[test]
    fn complement_dimensions() {
        let g = Arc::new(Grid::counting(4).unwrap());
        let e1 = Subspace::coordinate(g.clone(), &[0]);
        let comp = complement(&e1);
        assert_eq!(comp.dim(), 3);
        for j in 0..3 {
            assert!(comp.basis().get(0, j).norm() < 1e-12);
        }
        assert_eq!(complement(&Subspace::full(g.clone())).dim(), 0);
        assert_eq!(complement(&Subspace::empty(g)).dim(), 4);
    }

    #[test]
    fn unitary_eigen_handles_degenerate_phases() {
        let u = ComplexMatrix::from_diag(&[
            C64::from_polar(1.0, 0.4),
            C64::from_polar(1.0, -0.4),
            C64::from_polar(1.0, 0.4),
        ]);
        let (mut phases, q) = unitary_eigen(&u);
        assert!((&q.adjoint() * &q).identity_defect() < 1e-12);
        phases.sort_by(f64::total_cmp);
        assert!((phases[0] + 0.4).abs() < 1e-12 && (phases[2] - 0.4).abs() < 1e-12);
    }
}
