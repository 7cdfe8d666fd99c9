//! Self-adjoint extensions `X_u` labelled by `u ∈ U(r)`.
//!
//! For the interval model the extension is fixed by the boundary relation
//! `φᵢ(0) = Σⱼ uᵢⱼ φⱼ(1)`, so a function continued past `λ = 1` obeys
//! `φ(λ + 1) = u⁻¹ φ(λ)`. With `u = e^{iθ}` the eigenfunctions are `e^{−iμλ}`,
//! `μ = θ + 2πn`.
//!
//! Extensions act on the coordinate space `C^{rM}`: the samples `λⱼ = j/M`,
//! `j = 1..=M`, of each copy, the sample at `λ = 0` being determined by the
//! boundary relation. On the finite-difference backend this is ghost-point
//! elimination in the central stencil; on the spectral backend it is the
//! twisted Fourier basis of each eigenphase of `u`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde_json::json;

use crate::deficiency::{cayley_transform, codimension_spaces};
use crate::error::{Error, Result};
use crate::hilbert::{
    eigh, norm, unitary_eigen, weighted_adjoint, weighted_gram, ComplexMatrix, Grid, SpectralData,
    StateVec, C64,
};
use crate::ops::{twisted_fourier, Backend, ModelKind, OperatorOnDomain};
use crate::rng;

/// Unitary `r × r` matrix labelling an extension.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionParameter {
    u: ComplexMatrix,
    label: String,
}

impl ExtensionParameter {
    pub fn new(u: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        if !u.is_square() || u.nrows() == 0 {
            return Err(Error::Parameter(format!("u must be square and non-empty ({}x{})", u.nrows(), u.ncols())));
        }
        let defect = (&u.adjoint() * &u).identity_defect();
        if defect > 1e-10 {
            return Err(Error::Parameter(format!("u is not unitary (defect {defect:.3e})")));
        }
        Ok(Self { u, label: label.into() })
    }

    /// `e^{iθ}` for a single copy.
    pub fn phase(theta: f64) -> Self {
        Self::scalar(1, theta)
    }

    /// `e^{iθ} · 1_r`.
    pub fn scalar(r: usize, theta: f64) -> Self {
        Self {
            u: ComplexMatrix::identity(r).scale(C64::from_polar(1.0, theta)),
            label: format!("exp(i*{theta})*1_{r}"),
        }
    }

    pub fn identity(r: usize) -> Self {
        Self {
            u: ComplexMatrix::identity(r),
            label: format!("1_{r}"),
        }
    }

    /// `diag(e^{iθ₁}, …)`.
    pub fn diagonal(thetas: &[f64]) -> Self {
        let d: Vec<C64> = thetas.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        Self {
            u: ComplexMatrix::from_diag(&d),
            label: format!("diag-phases{thetas:?}"),
        }
    }

    pub fn u(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.u.adjoint()
    }
}

/// How an extension was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionKind {
    Boundary(Backend),
    Cayley,
}

#[derive(Clone, Debug)]
pub struct SelfAdjointExtension {
    matrix: ComplexMatrix,
    parameter: ExtensionParameter,
    parent_tag: String,
    grid: Arc<Grid>,
    kind: ExtensionKind,
    copies: usize,
    /// Parent-grid resolution `N`, for the resolvable window `|μ| ≤ N/4`.
    resolution: usize,
    /// Map from the extension's coordinates to the parent ambient space,
    /// when the two differ.
    embedding: Option<ComplexMatrix>,
    /// Unitary `S ⊕ S′` of a Cayley extension.
    unitary: Option<ComplexMatrix>,
    spectral: OnceLock<SpectralData>,
}

impl SelfAdjointExtension {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn parameter(&self) -> &ExtensionParameter {
        &self.parameter
    }

    pub fn parent_tag(&self) -> &str {
        &self.parent_tag
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn embedding(&self) -> Option<&ComplexMatrix> {
        self.embedding.as_ref()
    }

    pub fn unitary(&self) -> Option<&ComplexMatrix> {
        self.unitary.as_ref()
    }

    /// Resolvable spectral window `|μ| ≤ N/4`.
    pub fn window(&self) -> f64 {
        self.resolution as f64 / 4.0
    }

    /// Largest deviation from weighted Hermiticity, relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let adj = weighted_adjoint(&self.matrix, &self.grid);
        (&self.matrix - &adj).max_abs() / self.matrix.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues in the window that belong to the physical branch.
    ///
    /// The central-difference stencil carries a second (fermion-doubling)
    /// branch whose eigenvectors flip sign from sample to sample; those are
    /// dropped. Other backends have no such branch.
    pub fn physical_spectrum(&self) -> Result<Vec<f64>> {
        let s = spectrum(self)?;
        let bound = self.window();
        let m = self.grid.points_per_copy();
        let keep = |j: usize| -> bool {
            if self.kind != ExtensionKind::Boundary(Backend::FiniteDifference) {
                return true;
            }
            let v = s.eigenvectors.column(j);
            let mut corr = 0.0;
            for c in 0..self.copies {
                for k in 0..m - 1 {
                    corr += (v[c * m + k].conj() * v[c * m + k + 1]).re;
                }
            }
            corr > 0.0
        };
        Ok((0..s.eigenvalues.len())
            .filter(|&j| s.eigenvalues[j].abs() <= bound && keep(j))
            .map(|j| s.eigenvalues[j])
            .collect())
    }

    /// Number of physical eigenvalues within `tol` of `x`.
    pub fn multiplicity(&self, x: f64, tol: f64) -> Result<usize> {
        Ok(self.physical_spectrum()?.iter().filter(|&&e| (e - x).abs() <= tol).count())
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let u: Vec<[f64; 2]> = self.parameter.u.row_major().iter().map(|z| [z.re, z.im]).collect();
        Ok(json!({
            "schema": crate::SCHEMA,
            "parent": self.parent_tag,
            "label": self.parameter.label,
            "r": self.parameter.dim(),
            "u": u,
            "window": self.window(),
            "eigenvalues": self.physical_spectrum()?,
        }))
    }
}

/// Spectrum of an extension; computed once and cached.
pub fn spectrum(ext: &SelfAdjointExtension) -> Result<SpectralData> {
    if let Some(s) = ext.spectral.get() {
        return Ok(s.clone());
    }
    let s = match ext.kind {
        ExtensionKind::Boundary(Backend::Spectral) if ext.copies > 1 => spectral_boundary_eigh(ext)?,
        _ => eigh(&ext.matrix, &ext.grid)?,
    };
    Ok(ext.spectral.get_or_init(|| s).clone())
}

/// Eigenpairs of `(Q ⊗ 1) ⊕ₖ X_{θₖ} (Qᴴ ⊗ 1)` from the `r` single-copy blocks:
/// each block eigenvector `v` of `X_{θₖ}` lifts to `qₖ ⊗ v`.
fn spectral_boundary_eigh(ext: &SelfAdjointExtension) -> Result<SpectralData> {
    let r = ext.copies;
    let m = ext.grid.points_per_copy();
    let (q, _, blocks) = spectral_boundary_blocks(ext)?;
    let mut pairs: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(k, b)| b.eigenvalues.iter().enumerate().map(move |(j, &e)| (e, k, j)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let eigenvectors = ComplexMatrix::from_fn(r * m, r * m, |row, col| {
        let (_, k, j) = pairs[col];
        q.get(row / m, k) * blocks[k].eigenvectors.get(row % m, j)
    });
    Ok(SpectralData {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors,
    })
}

/// Central difference on `r` copies of the circle grid `j/m` with the
/// ghost samples eliminated through `φ(0) = uφ(1)` and `φ(1+h) = u⁻¹φ(h)`.
pub(crate) fn fd_twisted_matrix(m: usize, u: &ComplexMatrix) -> ComplexMatrix {
    let r = u.nrows();
    let h = 1.0 / m as f64;
    let c = 0.5 / h;
    let uinv = u.adjoint();
    let mut x = ComplexMatrix::zeros(r * m, r * m);
    for cp in 0..r {
        for j in 0..m {
            if j + 1 < m {
                x.set(cp * m + j, cp * m + j + 1, C64::new(0.0, c));
            }
            if j > 0 {
                x.set(cp * m + j, cp * m + j - 1, C64::new(0.0, -c));
            }
        }
    }
    for i in 0..r {
        for j in 0..r {
            let last_first = x.get(i * m + m - 1, j * m) + C64::new(0.0, c) * uinv.get(i, j);
            x.set(i * m + m - 1, j * m, last_first);
            let first_last = x.get(i * m, j * m + m - 1) - C64::new(0.0, c) * u.get(i, j);
            x.set(i * m, j * m + m - 1, first_last);
        }
    }
    x
}

/// `(Q ⊗ 1) ⊕ₖ X_{θₖ} (Qᴴ ⊗ 1)` for the eigen-decomposition `u = Q diag(e^{iθₖ}) Qᴴ`.
fn spectral_twisted_matrix(m: usize, u: &ComplexMatrix) -> ComplexMatrix {
    let (phases, q) = unitary_eigen(u);
    let blocks: Vec<ComplexMatrix> = phases.iter().map(|&t| twisted_fourier(m, t)).collect();
    lift_blocks(&q, &blocks)
}

/// `(Q ⊗ 1) ⊕ₖ Bₖ (Qᴴ ⊗ 1)` for `r` blocks of equal size.
pub(crate) fn lift_blocks(q: &ComplexMatrix, blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let r = q.nrows();
    let m = blocks[0].nrows();
    let mut x = ComplexMatrix::zeros(r * m, r * m);
    for c in 0..r {
        for d in 0..r {
            let coef: Vec<C64> = (0..r).map(|k| q.get(c, k) * q.get(d, k).conj()).collect();
            for j in 0..m {
                for l in 0..m {
                    let z: C64 = (0..r).map(|k| coef[k] * blocks[k].get(j, l)).sum();
                    x.set(c * m + j, d * m + l, z);
                }
            }
        }
    }
    x
}

/// Single-copy eigendata of a spectral boundary extension with `u = Q diag(e^{iθₖ}) Qᴴ`:
/// returns `Q`, the circle grid of one copy and the eigenpairs of each `X_{θₖ}`.
pub(crate) fn spectral_boundary_blocks(ext: &SelfAdjointExtension) -> Result<(ComplexMatrix, Grid, Vec<SpectralData>)> {
    let m = ext.grid.points_per_copy();
    let (phases, q) = unitary_eigen(ext.parameter.u());
    let single = Grid::periodic(m)?;
    let blocks = phases
        .iter()
        .map(|&t| eigh(&twisted_fourier(m, t), &single))
        .collect::<Result<Vec<_>>>()?;
    Ok((q, single, blocks))
}

/// Self-adjoint extension of an interval model fixed by `φᵢ(0) = Σⱼ uᵢⱼ φⱼ(1)`.
pub fn extend_by_boundary(op: &OperatorOnDomain, u: &ExtensionParameter) -> Result<SelfAdjointExtension> {
    let backend = op
        .interval_backend()
        .ok_or_else(|| Error::Config(format!("boundary extensions need an interval model (got {})", op.model_tag())))?;
    let r = op.copies();
    if u.dim() != r {
        return Err(Error::Config(format!("u is {}x{} but the model has {r} copies", u.dim(), u.dim())));
    }
    let defect = (&u.u.adjoint() * &u.u).identity_defect();
    if defect > 1e-10 {
        return Err(Error::Parameter(format!("u is not unitary (defect {defect:.3e})")));
    }
    match backend {
        Backend::FiniteDifference => {
            let n = op.points_per_copy();
            let m = n - 1;
            let grid = Arc::new(Grid::periodic(m)?.with_copies(r));
            let matrix = fd_twisted_matrix(m, &u.u);
            // Coordinates (c, j) ↦ parent sample j+1; the parent λ = 0 sample is uφ(1).
            let mut e = ComplexMatrix::zeros(r * n, r * m);
            for c in 0..r {
                for j in 0..m {
                    e.set(c * n + j + 1, c * m + j, C64::new(1.0, 0.0));
                }
                for d in 0..r {
                    e.set(c * n, d * m + m - 1, u.u.get(c, d));
                }
            }
            Ok(SelfAdjointExtension {
                matrix,
                parameter: u.clone(),
                parent_tag: op.model_tag().to_string(),
                grid,
                kind: ExtensionKind::Boundary(backend),
                copies: r,
                resolution: n,
                embedding: Some(e),
                unitary: None,
                spectral: OnceLock::new(),
            })
        }
        Backend::Spectral => {
            let m = op.points_per_copy();
            Ok(SelfAdjointExtension {
                matrix: spectral_twisted_matrix(m, &u.u),
                parameter: u.clone(),
                parent_tag: op.model_tag().to_string(),
                grid: op.grid().clone(),
                kind: ExtensionKind::Boundary(backend),
                copies: r,
                resolution: m + 1,
                embedding: None,
                unitary: None,
                spectral: OnceLock::new(),
            })
        }
    }
}

/// Inverse Cayley transform of `U = S ⊕ S′`, where `S′ = B₋ s′ B₊ᴴ W` maps
/// the discrete `L₊` onto `L₋`.
pub fn extend_by_cayley(op: &OperatorOnDomain, s_prime: &ComplexMatrix) -> Result<SelfAdjointExtension> {
    let grid = op.grid().clone();
    let (plus, minus) = codimension_spaces(op)?;
    if plus.dim() != minus.dim() {
        return Err(Error::Parameter(format!(
            "unequal deficiency indices ({}, {}) admit no self-adjoint extension",
            plus.dim(),
            minus.dim()
        )));
    }
    if s_prime.nrows() != minus.dim() || s_prime.ncols() != plus.dim() {
        return Err(Error::Parameter(format!(
            "s' must be {}x{} (got {}x{})",
            minus.dim(),
            plus.dim(),
            s_prime.nrows(),
            s_prime.ncols()
        )));
    }
    let iso = (&s_prime.adjoint() * s_prime).identity_defect();
    if iso > 1e-10 {
        return Err(Error::Parameter(format!("s' is not isometric (defect {iso:.3e})")));
    }
    let s = cayley_transform(op)?;
    let w = grid.ambient_weights();
    let bp_w = plus.basis().adjoint().scale_rows_cols(&vec![1.0; plus.dim()], &w);
    let s_extra = &(minus.basis() * s_prime) * &bp_w;
    let u = &s.matrix + &s_extra;
    let n = grid.len();
    let one = ComplexMatrix::identity(n);
    let lhs = &one - &u;
    let std_lhs = crate::hilbert::to_standard(&lhs, &grid);
    let svd = std_lhs.as_faer().svd();
    let svals = svd.s_diagonal();
    let (mut smin, mut jmin) = (f64::INFINITY, 0);
    for j in 0..svals.nrows() {
        let v = svals.read(j).re;
        if v < smin {
            smin = v;
            jmin = j;
        }
    }
    if smin < 1e-10 {
        let v = svd.v();
        let direction: Vec<C64> = (0..n)
            .map(|i| {
                let z = v.read(i, jmin);
                C64::new(z.re, z.im) / grid.weight(i).sqrt()
            })
            .collect();
        return Err(Error::EigenvalueOne {
            sigma_min: smin,
            direction,
        });
    }
    let rhs = (&one + &u).scale(C64::new(0.0, 1.0));
    let x = lhs.solve(&rhs);
    let adj = weighted_adjoint(&x, &grid);
    let defect = (&x - &adj).max_abs() / x.max_abs().max(f64::MIN_POSITIVE);
    if defect > 1e-8 {
        return Err(Error::Symmetry { defect });
    }
    let matrix = (&x + &adj).scale(C64::new(0.5, 0.0));
    Ok(SelfAdjointExtension {
        matrix,
        parameter: ExtensionParameter {
            u: s_prime.clone(),
            label: "cayley-s'".into(),
        },
        parent_tag: op.model_tag().to_string(),
        grid,
        kind: ExtensionKind::Cayley,
        copies: op.copies(),
        resolution: op.points_per_copy() + 1,
        embedding: None,
        unitary: Some(u),
        spectral: OnceLock::new(),
    })
}

/// `(X − i)(X + i)⁻¹` of a self-adjoint extension.
pub fn cayley_of_extension(ext: &SelfAdjointExtension) -> ComplexMatrix {
    let n = ext.matrix.nrows();
    let i = ComplexMatrix::identity(n).scale(C64::new(0.0, 1.0));
    let plus = &ext.matrix + &i;
    let minus = &ext.matrix - &i;
    // U = (X−i)(X+i)⁻¹ = (X+i)⁻¹(X−i).
    plus.solve(&minus)
}

/// The `s′` of [`extend_by_cayley`] that reproduces `ext` over `op`:
/// `B₋ᴴ W U B₊` with `U` the Cayley transform of `ext`.
pub fn calibrate_s_prime(op: &OperatorOnDomain, ext: &SelfAdjointExtension) -> Result<ComplexMatrix> {
    if ext.matrix.nrows() != op.ambient_dim() {
        return Err(Error::Dimension {
            expected: op.ambient_dim(),
            found: ext.matrix.nrows(),
        });
    }
    let (plus, minus) = codimension_spaces(op)?;
    let u = cayley_of_extension(ext);
    Ok(weighted_gram(minus.basis(), &(&u * plus.basis()), op.grid()))
}

/// Agreement of an extension with its parent on the parent domain, relative
/// to `‖X‖`.
///
/// Finite-difference boundary extensions are compared in weak form
/// (`⟨ψ, X_u φ⟩` against `⟨ψ, X φ⟩` over the domain basis), which is exact.
/// Cayley extensions are compared in strong form over the domain basis.
/// Spectral boundary extensions differ from the periodic parent by a
/// full-rank, spectrally small perturbation, so they are compared in strong
/// form on smooth compactly supported test functions.
pub fn parent_defect(ext: &SelfAdjointExtension, op: &OperatorOnDomain) -> Result<f64> {
    let scale = op.norm().max(f64::MIN_POSITIVE);
    let b = op.domain().basis();
    match (ext.kind, &ext.embedding) {
        (ExtensionKind::Boundary(Backend::FiniteDifference), Some(e)) => {
            // Domain vectors vanish at both parent endpoints, so Eᵀ B is their coordinate form.
            let c = &e.adjoint() * b;
            let g_ext = weighted_gram(&c, &(&ext.matrix * &c), &ext.grid);
            let g_par = weighted_gram(b, &(op.matrix() * b), op.grid());
            Ok((&g_ext - &g_par).max_abs() / scale)
        }
        (ExtensionKind::Cayley, _) => {
            let diff = &(&ext.matrix * b) - &(op.matrix() * b);
            Ok((0..diff.ncols())
                .map(|j| norm(&diff.column(j), op.grid()))
                .fold(0.0, f64::max)
                / scale)
        }
        _ => {
            let grid = op.grid();
            let mut worst: f64 = 0.0;
            for c in 0..op.copies() {
                for (lo, hi) in [(0.1, 0.5), (0.3, 0.9), (0.05, 0.95)] {
                    let phi: Vec<C64> = (0..grid.len())
                        .map(|k| {
                            let (cp, _) = grid.split(k);
                            let x = grid.point(k);
                            if cp != c {
                                return C64::new(0.0, 0.0);
                            }
                            C64::new(smooth_bump(x, lo, hi), 0.0)
                        })
                        .collect();
                    let phi = op.domain().project(&phi);
                    let diff: Vec<C64> = ext
                        .matrix
                        .mat_vec(&phi)
                        .iter()
                        .zip(op.apply(&phi))
                        .map(|(a, b)| a - b)
                        .collect();
                    worst = worst.max(norm(&diff, grid) / norm(&phi, grid));
                }
            }
            Ok(worst / scale)
        }
    }
}

/// `exp(−1/(1 − t²))` bump on `(lo, hi)`, smooth to all orders.
pub(crate) fn smooth_bump(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo || x >= hi {
        return 0.0;
    }
    let t = (2.0 * x - lo - hi) / (hi - lo);
    (-1.0 / (1.0 - t * t)).exp()
}

/// `u = e^{iξ} · 1_r`: every copy admits `e^{−iξλ}`, so `ξ` is an `r`-fold eigenvalue.
pub fn extension_with_degenerate_eigenvalue(op: &OperatorOnDomain, xi: f64) -> Result<ExtensionParameter> {
    if op.interval_backend().is_none() {
        return Err(Error::Contract(format!(
            "degenerate-eigenvalue extensions are constructed for interval models (got {})",
            op.model_tag()
        )));
    }
    let theta = (xi + PI).rem_euclid(2.0 * PI) - PI;
    let mut p = ExtensionParameter::scalar(op.copies(), theta);
    p.label = format!("degenerate(xi={xi})");
    Ok(p)
}

/// `φᵢ(ξ) = ⟨ξ,i|φ⟩` with `|ξ,i⟩` the normalized `e^{−iξλ}` on copy `i`.
/// Rows follow `xi_grid`, columns the copies.
pub fn isospinor_expansion(phi: &StateVec, op: &OperatorOnDomain, xi_grid: &[f64]) -> Result<ComplexMatrix> {
    if op.interval_backend().is_none() {
        return Err(Error::Contract(format!("isospinor expansion needs an interval model (got {})", op.model_tag())));
    }
    let grid = op.grid();
    if phi.components().len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            found: phi.components().len(),
        });
    }
    let r = op.copies();
    let mut out = ComplexMatrix::zeros(xi_grid.len(), r);
    for (a, &xi) in xi_grid.iter().enumerate() {
        for i in 0..r {
            let ket = isospinor_ket(grid, xi, i);
            out.set(a, i, crate::hilbert::inner(&ket, phi.components(), grid));
        }
    }
    Ok(out)
}

/// Normalized `e^{−iξλ}` supported on copy `i`.
pub fn isospinor_ket(grid: &Grid, xi: f64, copy: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..grid.len())
        .map(|k| {
            if grid.split(k).0 == copy {
                C64::from_polar(1.0, -xi * grid.point(k))
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let n = norm(&v, grid);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeReport {
    /// `max ‖[G, X]b‖ / ‖X‖` over the domain basis.
    pub commutator_defect: f64,
    /// Largest distance of `G b` from the domain.
    pub domain_preservation_defect: f64,
    /// `max |‖Gv‖ − ‖v‖|` over seeded normalized ambient vectors.
    pub isometry_defect: f64,
}

/// Seed for the random vectors of [`verify_gauge_isometry`].
pub const GAUGE_SEED: u64 = 0x6a;

pub fn verify_gauge_isometry(g: &ComplexMatrix, op: &OperatorOnDomain) -> Result<GaugeReport> {
    let n = op.ambient_dim();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension { expected: n, found: g.nrows() });
    }
    let grid = op.grid();
    let b = op.domain().basis();
    let gb = g * b;
    let comm = &(g * &(op.matrix() * b)) - &(op.matrix() * &gb);
    let scale = op.norm().max(f64::MIN_POSITIVE);
    let mut commutator_defect: f64 = 0.0;
    let mut domain_preservation_defect: f64 = 0.0;
    for j in 0..b.ncols() {
        commutator_defect = commutator_defect.max(norm(&comm.column(j), grid) / scale);
        domain_preservation_defect = domain_preservation_defect.max(op.domain().distance(&gb.column(j)));
    }
    let mut rng = rng::seeded(GAUGE_SEED);
    let mut isometry_defect: f64 = 0.0;
    for _ in 0..16 {
        let mut v: Vec<C64> = (0..n).map(|_| rng::complex_gaussian(&mut rng)).collect();
        let nv = norm(&v, grid);
        v.iter_mut().for_each(|z| *z /= nv);
        isometry_defect = isometry_defect.max((norm(&g.mat_vec(&v), grid) - 1.0).abs());
    }
    Ok(GaugeReport {
        commutator_defect,
        domain_preservation_defect,
        isometry_defect,
    })
}

/// Constant `u ∈ U(r)` acting on the copy index: `u ⊗ 1` on `r` copies of `m` samples.
pub fn copy_mixing(u: &ComplexMatrix, m: usize) -> ComplexMatrix {
    u.kron(&ComplexMatrix::identity(m))
}

/// Is the model one of the interval families with boundary extensions?
pub fn is_interval(op: &OperatorOnDomain) -> bool {
    matches!(op.kind(), ModelKind::Interval { .. })
}
