//! Concrete symmetric operators, each packaged with its domain.
//!
//! * [`build_interval_derivative`]: `X = i d/dλ` on `r` copies of `[0, 1]`.
//! * [`build_halfline_derivative`]: the same on a truncated half-line.
//! * [`build_beta_algebra`]: `x = iħ(1 + βp²) d/dp` and `p` on a momentum grid.
//! * [`build_matrix_model`]: a Hermitian matrix restricted to a seeded subspace.
//!
//! Two discretizations of the interval derivative are offered. The
//! finite-difference backend uses a summation-by-parts stencil on the closed
//! grid `λ_k = k/(N-1)` with trapezoid weights; its domain vanishes at both
//! endpoints of every copy. The spectral backend lives on the circle grid
//! `λ_j = j/M`, `j = 1..=M`, `M = N - 1`, where `X` is the exact derivative on
//! band-limited periodic functions; there the two endpoints are one sample, so
//! the domain has codimension one per copy.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    complement, norm, orthonormalize, to_standard, weighted_gram, ComplexMatrix, Grid, Measure,
    Subspace, C64, RANK_TOL,
};
use crate::rng;

/// Minimum grid size accepted by the builders.
pub const MIN_GRID: usize = 16;

/// Relative symmetry tolerance every constructed model must meet.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    FiniteDifference,
    Spectral,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::FiniteDifference => "finite-difference",
            Backend::Spectral => "spectral",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Interval { backend: Backend },
    HalfLine { length: f64 },
    /// Position operator of the β-algebra.
    BetaPosition { beta: f64, cutoff: f64 },
    /// Momentum (multiplication) operator of the β-algebra.
    BetaMomentum { beta: f64, cutoff: f64 },
    Matrix { codim: usize, seed: u64 },
    /// Finite-difference `i d/dλ` on the circle grid with the domain vanishing
    /// at the first and last sample of every copy; all boundary extensions
    /// `X_u` extend it.
    BoundaryParent,
    DirectSum,
}

impl ModelKind {
    pub fn is_differential(&self) -> bool {
        !matches!(self, ModelKind::Matrix { .. } | ModelKind::DirectSum | ModelKind::BetaMomentum { .. })
    }
}

/// A discretized operator `X` together with its domain `D`.
#[derive(Clone, Debug)]
pub struct OperatorOnDomain {
    matrix: ComplexMatrix,
    domain: Subspace,
    grid: Arc<Grid>,
    copies: usize,
    hbar: f64,
    model_tag: String,
    kind: ModelKind,
    blocks: Vec<OperatorOnDomain>,
    warnings: Vec<String>,
    norm: OnceLock<f64>,
}

impl OperatorOnDomain {
    /// Assembles a model and enforces the symmetry invariant.
    pub fn new(
        matrix: ComplexMatrix,
        domain: Subspace,
        copies: usize,
        hbar: f64,
        model_tag: impl Into<String>,
        kind: ModelKind,
    ) -> Result<Self> {
        let grid = domain.grid().clone();
        if matrix.nrows() != grid.len() || !matrix.is_square() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: matrix.nrows(),
            });
        }
        let op = Self {
            matrix,
            domain,
            grid,
            copies,
            hbar,
            model_tag: model_tag.into(),
            kind,
            blocks: Vec::new(),
            warnings: Vec::new(),
            norm: OnceLock::new(),
        };
        let defect = check_symmetry(&op);
        if defect > SYMMETRY_TOL {
            return Err(Error::Symmetry { defect });
        }
        Ok(op)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn domain(&self) -> &Subspace {
        &self.domain
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Summands of a direct sum; empty otherwise.
    pub fn blocks(&self) -> &[OperatorOnDomain] {
        &self.blocks
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn ambient_dim(&self) -> usize {
        self.grid.len()
    }

    /// Weighted operator norm of the ambient matrix (cached).
    pub fn norm(&self) -> f64 {
        *self.norm.get_or_init(|| power_norm(&self.matrix, &self.grid))
    }

    /// Backend of an interval model.
    pub fn interval_backend(&self) -> Option<Backend> {
        match self.kind {
            ModelKind::Interval { backend } => Some(backend),
            _ => None,
        }
    }

    /// Samples per copy on the grid the operator acts on.
    pub fn points_per_copy(&self) -> usize {
        self.grid.points_per_copy()
    }

    /// `X v` for a vector on the ambient grid.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.mat_vec(v)
    }
}

/// Weighted 2-norm estimate by power iteration on `AᴴA` in the standard
/// picture; deterministic start vector.
fn power_norm(m: &ComplexMatrix, g: &Grid) -> f64 {
    let a = to_standard(m, g);
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let ah = a.adjoint();
    let dot = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum::<C64>();
    let unit = |mut x: Vec<C64>| {
        let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|z| *z /= nx);
        (x, nx)
    };
    // Lanczos on AᴴA with full reorthogonalization; the clustered top of a
    // derivative spectrum stalls plain power iteration.
    let start: Vec<C64> = (0..n)
        .map(|k| C64::new(1.0 + (k as f64 * 0.7548776662).fract(), (k as f64 * 0.5698402910).fract()))
        .collect();
    let mut basis = vec![unit(start).0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut est = 0.0;
    for j in 0..n.min(LANCZOS_STEPS) {
        let mut w = ah.mat_vec(&a.mat_vec(&basis[j]));
        alpha.push(dot(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let h = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= y * h);
            }
        }
        let next = tridiagonal_max(&alpha, &beta);
        let converged = (next - est).abs() <= 1e-12 * next;
        est = next;
        let (w, b) = unit(w);
        if converged || b <= 1e-12 * est.max(f64::MIN_POSITIVE) || j + 1 == n {
            break;
        }
        beta.push(b);
        basis.push(w);
    }
    est.max(0.0).sqrt()
}

const LANCZOS_STEPS: usize = 200;

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `a`, off-diagonal `b`.
fn tridiagonal_max(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let t = ComplexMatrix::from_fn(k, k, |i, j| {
        let v = if i == j {
            a[i]
        } else if i + 1 == j {
            b[i]
        } else if j + 1 == i {
            b[j]
        } else {
            0.0
        };
        C64::new(v, 0.0)
    });
    let g = Grid::counting(k).expect("non-empty");
    crate::hilbert::eigh(&t, &g).map(|s| s.eigenvalues[k - 1]).unwrap_or(0.0)
}

/// Summation-by-parts first-derivative matrix on `n` uniform points with spacing `h`.
pub(crate) fn sbp_derivative(n: usize, h: f64) -> Vec<(usize, usize, f64)> {
    let mut entries = Vec::with_capacity(2 * n);
    entries.push((0, 0, -1.0 / h));
    entries.push((0, 1, 1.0 / h));
    for k in 1..n - 1 {
        entries.push((k, k - 1, -0.5 / h));
        entries.push((k, k + 1, 0.5 / h));
    }
    entries.push((n - 1, n - 2, -1.0 / h));
    entries.push((n - 1, n - 1, 1.0 / h));
    entries
}

/// `i · scale_k · D` on `copies` identical blocks of an `n`-point grid.
fn fd_operator(n: usize, h: f64, copies: usize, scale: impl Fn(usize) -> f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n * copies, n * copies);
    let d = sbp_derivative(n, h);
    for c in 0..copies {
        for &(i, j, v) in &d {
            m.set(c * n + i, c * n + j, C64::new(0.0, v * scale(i)));
        }
    }
    m
}

/// Twisted Fourier matrix: `i d/dλ` on the circle grid `j/m`, restricted to
/// the modes `e^{-iμλ}` with `μ = θ + 2πn` for `n` in the Nyquist window.
/// Entry `(j, k)` depends only on `j - k`.
pub(crate) fn twisted_fourier(m: usize, theta: f64) -> ComplexMatrix {
    let h = 1.0 / m as f64;
    let lo = -((m / 2) as i64);
    let hi = m as i64 - 1 - (m / 2) as i64;
    let mus: Vec<f64> = (lo..=hi).map(|n| theta + 2.0 * PI * n as f64).collect();
    let g: Vec<C64> = (0..2 * m - 1)
        .map(|idx| {
            let d = idx as f64 - (m as f64 - 1.0);
            mus.iter()
                .map(|&mu| C64::from_polar(mu * h, -mu * d * h))
                .sum()
        })
        .collect();
    ComplexMatrix::from_fn(m, m, |j, k| g[j + m - 1 - k])
}

/// `X = i d/dλ` on `r` copies of `[0, 1]`, domain vanishing at every endpoint.
pub fn build_interval_derivative(r: usize, n: usize, backend: Backend) -> Result<OperatorOnDomain> {
    if n < MIN_GRID {
        return Err(Error::Config(format!("grid must be >= {MIN_GRID} (got {n})")));
    }
    if r == 0 {
        return Err(Error::Config("copies must be >= 1".into()));
    }
    match backend {
        Backend::FiniteDifference => {
            let grid = Arc::new(Grid::trapezoid(0.0, 1.0, n)?.with_copies(r));
            let h = 1.0 / (n - 1) as f64;
            let matrix = fd_operator(n, h, r, |_| 1.0);
            let interior: Vec<usize> = (0..r)
                .flat_map(|c| (1..n - 1).map(move |k| c * n + k))
                .collect();
            let domain = Subspace::coordinate(grid, &interior);
            OperatorOnDomain::new(
                matrix,
                domain,
                r,
                1.0,
                format!("interval(r={r},n={n},backend=finite-difference)"),
                ModelKind::Interval { backend },
            )
        }
        Backend::Spectral => {
            let m = n - 1;
            let grid = Arc::new(Grid::periodic(m)?.with_copies(r));
            let block = twisted_fourier(m, 0.0);
            let blocks: Vec<&ComplexMatrix> = (0..r).map(|_| &block).collect();
            let matrix = ComplexMatrix::block_diag(&blocks);
            let kept: Vec<usize> = (0..r).flat_map(|c| (0..m - 1).map(move |k| c * m + k)).collect();
            let domain = Subspace::coordinate(grid, &kept);
            OperatorOnDomain::new(
                matrix,
                domain,
                r,
                1.0,
                format!("interval(r={r},n={n},backend=spectral)"),
                ModelKind::Interval { backend },
            )
        }
    }
}

/// Finite-difference `i d/dλ` on the circle grid with `u = 1` wrap, domain
/// vanishing at the first and last sample of each copy.
///
/// Every finite-difference boundary extension `X_u` agrees with this operator
/// on its domain, so its Cayley extensions and the boundary family can be
/// compared directly.
pub fn boundary_parent(r: usize, n: usize) -> Result<OperatorOnDomain> {
    if n < MIN_GRID {
        return Err(Error::Config(format!("grid must be >= {MIN_GRID} (got {n})")));
    }
    let m = n - 1;
    let grid = Arc::new(Grid::periodic(m)?.with_copies(r));
    let id = ComplexMatrix::identity(r);
    let matrix = crate::extensions::fd_twisted_matrix(m, &id);
    let kept: Vec<usize> = (0..r).flat_map(|c| (1..m - 1).map(move |k| c * m + k)).collect();
    let domain = Subspace::coordinate(grid, &kept);
    OperatorOnDomain::new(
        matrix,
        domain,
        r,
        1.0,
        format!("boundary-parent(r={r},n={n})"),
        ModelKind::BoundaryParent,
    )
}

/// `X = i d/dλ` on `[0, L]`, domain vanishing at `λ = 0`.
///
/// The far edge is an absorbing truncation: domain functions also vanish at
/// `λ = L`, which keeps the discrete operator symmetric. Only the `λ = 0`
/// condition is physical.
pub fn build_halfline_derivative(n: usize, length: f64) -> Result<OperatorOnDomain> {
    if n < MIN_GRID {
        return Err(Error::Config(format!("grid must be >= {MIN_GRID} (got {n})")));
    }
    if !(length >= 10.0) {
        return Err(Error::Config(format!("half-line length must be >= 10 (got {length})")));
    }
    let grid = Arc::new(Grid::trapezoid(0.0, length, n)?);
    let h = length / (n - 1) as f64;
    let matrix = fd_operator(n, h, 1, |_| 1.0);
    let interior: Vec<usize> = (1..n - 1).collect();
    let domain = Subspace::coordinate(grid, &interior);
    OperatorOnDomain::new(
        matrix,
        domain,
        1,
        1.0,
        format!("halfline(n={n},length={length},far-edge=absorbing-truncation)"),
        ModelKind::HalfLine { length },
    )
}

/// Position/momentum pair realizing `[x, p] = iħ(1 + βp²)`.
#[derive(Clone, Debug)]
pub struct BetaAlgebraModel {
    pub beta: f64,
    pub x_op: OperatorOnDomain,
    pub p_op: OperatorOnDomain,
    pub momentum_cutoff: f64,
}

impl BetaAlgebraModel {
    pub fn hbar(&self) -> f64 {
        self.x_op.hbar
    }

    /// Closed-form minimal `Δx` of the truncated model: in `s = atan(√β p)`
    /// the position operator is `iħ√β d/ds` on an interval of length
    /// `2 atan(√β P)` with Dirichlet conditions.
    pub fn truncated_min_dx(&self) -> f64 {
        let sb = self.beta.sqrt();
        self.hbar() * sb * PI / (2.0 * (sb * self.momentum_cutoff).atan())
    }
}

pub fn build_beta_algebra(beta: f64, cutoff: f64, n: usize) -> Result<BetaAlgebraModel> {
    build_beta_algebra_with_hbar(beta, cutoff, n, 1.0)
}

/// Momentum representation on `p ∈ [-P, P]` with weights `dp/(1 + βp²)`.
///
/// A cutoff with `P√β < 10` is accepted (it is how the Heisenberg limit is
/// reached) but recorded as a warning.
pub fn build_beta_algebra_with_hbar(beta: f64, cutoff: f64, n: usize, hbar: f64) -> Result<BetaAlgebraModel> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Config(format!("beta must be > 0 (got {beta})")));
    }
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::Config(format!("cutoff must be > 0 (got {cutoff})")));
    }
    if !(hbar > 0.0) {
        return Err(Error::Config(format!("hbar must be > 0 (got {hbar})")));
    }
    if n < MIN_GRID {
        return Err(Error::Config(format!("grid must be >= {MIN_GRID} (got {n})")));
    }
    let trap = Grid::trapezoid(-cutoff, cutoff, n)?;
    let weights: Vec<f64> = trap
        .points()
        .iter()
        .zip(trap.weights())
        .map(|(p, w)| w / (1.0 + beta * p * p))
        .collect();
    let grid = Arc::new(Grid::new(trap.points().to_vec(), weights, Measure::BetaMeasure)?);
    let h = 2.0 * cutoff / (n - 1) as f64;
    let ps = grid.points().to_vec();
    let x = fd_operator(n, h, 1, |k| hbar * (1.0 + beta * ps[k] * ps[k]));
    let p = ComplexMatrix::from_diag(&ps.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
    let interior: Vec<usize> = (1..n - 1).collect();
    let domain = Subspace::coordinate(grid, &interior);
    let mut warnings = Vec::new();
    if cutoff * beta.sqrt() < 10.0 {
        warnings.push(format!(
            "cutoff P*sqrt(beta) = {:.3e} < 10: momentum grid does not reach the curvature scale",
            cutoff * beta.sqrt()
        ));
    }
    let mut x_op = OperatorOnDomain::new(
        x,
        domain.clone(),
        1,
        hbar,
        format!("beta-position(beta={beta},cutoff={cutoff},n={n})"),
        ModelKind::BetaPosition { beta, cutoff },
    )?;
    x_op.warnings = warnings.clone();
    let mut p_op = OperatorOnDomain::new(
        p,
        domain,
        1,
        hbar,
        format!("beta-momentum(beta={beta},cutoff={cutoff},n={n})"),
        ModelKind::BetaMomentum { beta, cutoff },
    )?;
    p_op.warnings = warnings;
    Ok(BetaAlgebraModel {
        beta,
        x_op,
        p_op,
        momentum_cutoff: cutoff,
    })
}

/// Default seed for the random domain vectors of [`build_matrix_model`].
pub const MATRIX_MODEL_SEED: u64 = 0x5eed;

pub fn build_matrix_model(m: &ComplexMatrix, codim: usize) -> Result<OperatorOnDomain> {
    build_matrix_model_seeded(m, codim, MATRIX_MODEL_SEED)
}

/// Hermitian `M` with domain the orthogonal complement of `codim` seeded
/// complex Gaussian vectors.
pub fn build_matrix_model_seeded(m: &ComplexMatrix, codim: usize, seed: u64) -> Result<OperatorOnDomain> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: n,
            found: m.ncols(),
        });
    }
    if n < 2 * codim + 2 {
        return Err(Error::Config(format!(
            "matrix model needs dimension >= 2*codim + 2 (dim {n}, codim {codim})"
        )));
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let defect = (m - &m.adjoint()).max_abs() / scale;
    if defect > 1e-9 {
        return Err(Error::Symmetry { defect });
    }
    let grid = Arc::new(Grid::counting(n)?);
    let mut rng = rng::seeded(seed);
    let vecs: Vec<Vec<C64>> = (0..codim)
        .map(|_| (0..n).map(|_| rng::complex_gaussian(&mut rng)).collect())
        .collect();
    let constraints = orthonormalize(&ComplexMatrix::from_columns(n, &vecs), &grid, RANK_TOL);
    let domain = complement(&constraints);
    OperatorOnDomain::new(
        m.clone(),
        domain,
        1,
        1.0,
        format!("matrix(n={n},codim={codim},rng={},seed={seed})", rng::GENERATOR),
        ModelKind::Matrix { codim, seed },
    )
}

/// Seeded random Hermitian matrix with entries of unit scale.
pub fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = rng::seeded(seed);
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, C64::new(rng.gen_range(-1.0..1.0), 0.0));
        for j in i + 1..n {
            let z = rng::complex_gaussian(&mut rng);
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    m
}

/// Block-diagonal direct sum; the summands are kept for per-block analysis.
pub fn direct_sum(parts: &[&OperatorOnDomain]) -> Result<OperatorOnDomain> {
    if parts.is_empty() {
        return Err(Error::Config("direct sum of no operators".into()));
    }
    let grids: Vec<&Grid> = parts.iter().map(|p| p.grid.as_ref()).collect();
    let grid = Arc::new(Grid::concat(&grids)?);
    let mats: Vec<&ComplexMatrix> = parts.iter().map(|p| &p.matrix).collect();
    let matrix = ComplexMatrix::block_diag(&mats);
    let domains: Vec<&Subspace> = parts.iter().map(|p| &p.domain).collect();
    let domain = Subspace::direct_sum(&domains, grid.clone())?;
    let tag = parts.iter().map(|p| p.model_tag.as_str()).collect::<Vec<_>>().join(" + ");
    let mut op = OperatorOnDomain::new(
        matrix,
        domain,
        parts.iter().map(|p| p.copies).sum(),
        parts[0].hbar,
        format!("direct-sum[{tag}]"),
        ModelKind::DirectSum,
    )?;
    op.blocks = parts.iter().map(|p| (*p).clone()).collect();
    Ok(op)
}

/// `max |⟨Xφ,ψ⟩ − ⟨φ,Xψ⟩| / ‖X‖` over pairs of domain basis vectors.
pub fn check_symmetry(op: &OperatorOnDomain) -> f64 {
    symmetry_defect(&op.matrix, &op.domain, op.norm())
}

/// Same defect for an arbitrary subspace (e.g. the full ambient space).
pub fn symmetry_defect(matrix: &ComplexMatrix, space: &Subspace, scale: f64) -> f64 {
    if space.dim() == 0 {
        return 0.0;
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    if let Some(support) = space.coordinate_support() {
        // Gram entries are single matrix entries: ⟨X bᵢ, bⱼ⟩ = conj(βᵢ) M_{kᵢkⱼ} βⱼ w_{kⱼ}.
        let g = space.grid();
        let entry = |i: usize, j: usize| {
            let ((ki, bi), (kj, bj)) = (support[i], support[j]);
            (matrix.get(kj, ki) * bi).conj() * bj * g.weight(kj)
        };
        let mut worst: f64 = 0.0;
        for i in 0..support.len() {
            for j in i..support.len() {
                worst = worst.max((entry(i, j) - entry(j, i).conj()).norm());
            }
        }
        return worst / scale;
    }
    let b = space.basis();
    let xb = matrix * b;
    let g = weighted_gram(&xb, b, space.grid());
    let diff = &g - &g.adjoint();
    diff.max_abs() / scale
}

/// Relative commutator residual `max ‖[x,p]φ − iħ(1+βp²)φ‖ / ‖φ‖` over a
/// fixed set of interior Gaussians (width `P/8`, centres `0, ±P/16`).
pub fn check_commutator(m: &BetaAlgebraModel) -> f64 {
    let grid = m.x_op.grid.clone();
    let cutoff = m.momentum_cutoff;
    let sigma = cutoff / 8.0;
    let hbar = m.hbar();
    let n = grid.len();
    let mut worst: f64 = 0.0;
    for centre in [-cutoff / 16.0, 0.0, cutoff / 16.0] {
        let mut phi: Vec<C64> = (0..n)
            .map(|k| {
                let p = grid.point(k);
                C64::new((-(p - centre).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0)
            })
            .collect();
        phi = m.x_op.domain.project(&phi);
        let xp = m.x_op.apply(&m.p_op.apply(&phi));
        let px = m.p_op.apply(&m.x_op.apply(&phi));
        let resid: Vec<C64> = (0..n)
            .map(|k| {
                let p = grid.point(k);
                xp[k] - px[k] - C64::new(0.0, hbar * (1.0 + m.beta * p * p)) * phi[k]
            })
            .collect();
        worst = worst.max(norm(&resid, &grid) / norm(&phi, &grid));
    }
    worst
}
