//! Translation flows `S_u(a) = exp(iaX_u)` of boundary extensions, their
//! compositions, the local phase operator `T = S_{u′}(−a) S_u(a)`, and the
//! span of the algebra generated by extension unitaries.
//!
//! `S_u(a)` moves functions to the right: `(S_u(a)φ)(λ) = φ(λ − a)`, where the
//! continuation past the ends follows `φ(λ + 1) = u⁻¹φ(λ)`. A part of `φ` that
//! leaves through `λ = 1` re-enters at `λ = 0` multiplied by `u`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extensions::{
    extend_by_boundary, extend_by_cayley, lift_blocks, spectral_boundary_blocks, spectrum, ExtensionKind,
    ExtensionParameter, SelfAdjointExtension,
};
use crate::hilbert::{inner, norm, weighted_adjoint, ComplexMatrix, Grid, SpectralData, C64};
use crate::ops::{Backend, ModelKind, OperatorOnDomain};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowBackend {
    /// `V diag(e^{iaμ}) Vᴴ W` from the spectral decomposition.
    SpectralExponential,
    /// Exact sample shift with the boundary phase applied at each wrap.
    AnalyticWrap,
}

impl std::fmt::Display for FlowBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowBackend::SpectralExponential => "spectral-exponential",
            FlowBackend::AnalyticWrap => "analytic-wrap",
        })
    }
}

#[derive(Clone, Debug)]
pub struct FlowUnitary {
    pub matrix: ComplexMatrix,
    pub parameter_a: f64,
    pub extension_label: String,
    pub backend: FlowBackend,
    pub grid: Arc<Grid>,
}

impl FlowUnitary {
    /// `max |UᴴWU − W|` in the weighted sense, i.e. `‖U^†U − 1‖`.
    pub fn unitary_defect(&self) -> f64 {
        let adj = weighted_adjoint(&self.matrix, &self.grid);
        (&adj * &self.matrix).identity_defect()
    }

    /// Weighted adjoint, which is the inverse flow.
    pub fn inverse(&self) -> FlowUnitary {
        FlowUnitary {
            matrix: weighted_adjoint(&self.matrix, &self.grid),
            parameter_a: -self.parameter_a,
            extension_label: self.extension_label.clone(),
            backend: self.backend,
            grid: self.grid.clone(),
        }
    }
}

/// `V diag(e^{iaμ}) Vᴴ W` from W-orthonormal eigenpairs.
fn exponentiate(s: &SpectralData, a: f64, grid: &Grid) -> ComplexMatrix {
    let phases: Vec<C64> = s.eigenvalues.iter().map(|&mu| C64::from_polar(1.0, a * mu)).collect();
    let v = &s.eigenvectors;
    let w = grid.ambient_weights();
    let vhw = v.adjoint().scale_rows_cols(&vec![1.0; v.ncols()], &w);
    &(v * &ComplexMatrix::from_diag(&phases)) * &vhw
}

/// Number of samples a shift by `a` moves on a circle grid of `m` samples,
/// if `a·m` is an integer.
pub fn commensurate_shift(a: f64, m: usize) -> Option<i64> {
    let k = a * m as f64;
    let kr = k.round();
    ((k - kr).abs() <= 1e-9 * k.abs().max(1.0)).then_some(kr as i64)
}

pub fn flow_unitary(ext: &SelfAdjointExtension, a: f64, backend: FlowBackend) -> Result<FlowUnitary> {
    let grid = ext.grid().clone();
    let matrix = match backend {
        FlowBackend::SpectralExponential if ext.kind() == ExtensionKind::Boundary(Backend::Spectral) && ext.copies() > 1 => {
            // The copies decouple in the eigenbasis of u, so exponentiate each block.
            let (q, single, blocks) = spectral_boundary_blocks(ext)?;
            let exps: Vec<ComplexMatrix> = blocks.iter().map(|s| exponentiate(s, a, &single)).collect();
            lift_blocks(&q, &exps)
        }
        FlowBackend::SpectralExponential => exponentiate(&spectrum(ext)?, a, &grid),
        FlowBackend::AnalyticWrap => {
            if !matches!(ext.kind(), ExtensionKind::Boundary(_)) {
                return Err(Error::Parameter("analytic-wrap flows need a boundary extension".into()));
            }
            let m = grid.points_per_copy();
            let k = commensurate_shift(a, m).ok_or_else(|| {
                Error::Parameter(format!("a = {a} is not a multiple of the grid spacing 1/{m}"))
            })?;
            wrap_shift(ext.parameter().u(), m, k)
        }
    };
    Ok(FlowUnitary {
        matrix,
        parameter_a: a,
        extension_label: ext.parameter().label().to_string(),
        backend,
        grid,
    })
}

/// `(Uφ)_{c,j} = φ(λⱼ − k/m)` on `r` copies of the circle grid `j/m`,
/// continued by `φ(λ) = u^{w} φ(λ + w)` for `w` whole wraps.
fn wrap_shift(u: &ComplexMatrix, m: usize, k: i64) -> ComplexMatrix {
    let r = u.nrows();
    let mi = m as i64;
    let mut out = ComplexMatrix::zeros(r * m, r * m);
    for j in 0..mi {
        // Sample index 1..=m of λⱼ − a, with `wraps` periods added.
        let src = j + 1 - k;
        let wraps = -(src - 1).div_euclid(mi);
        let local = (src + wraps * mi - 1) as usize;
        let factor = matrix_power(u, wraps);
        for c in 0..r {
            for d in 0..r {
                let z = factor.get(c, d);
                if z != C64::new(0.0, 0.0) {
                    out.set(c * m + j as usize, d * m + local, z);
                }
            }
        }
    }
    out
}

/// `u^p` for integer `p`, negative powers via `uᴴ`.
fn matrix_power(u: &ComplexMatrix, p: i64) -> ComplexMatrix {
    let base = if p < 0 { u.adjoint() } else { u.clone() };
    let mut acc = ComplexMatrix::identity(u.nrows());
    for _ in 0..p.unsigned_abs() {
        acc = &acc * &base;
    }
    acc
}

/// Ordered product, rightmost factor acting first.
pub fn compose(flows: &[FlowUnitary]) -> Result<ComplexMatrix> {
    let first = flows.first().ok_or_else(|| Error::Parameter("compose needs at least one flow".into()))?;
    let n = first.matrix.nrows();
    if let Some(f) = flows.iter().find(|f| f.matrix.nrows() != n || f.matrix.ncols() != n) {
        return Err(Error::Dimension { expected: n, found: f.matrix.nrows() });
    }
    let mut acc = first.matrix.clone();
    for f in &flows[1..] {
        acc = &acc * &f.matrix;
    }
    Ok(acc)
}

/// `T = S_{u′}(−a) S_u(a)` with its piecewise verification.
#[derive(Clone, Debug)]
pub struct LocalPhaseOp {
    pub t: ComplexMatrix,
    pub backend: FlowBackend,
    pub a: f64,
    /// `(u′)⁻¹u`, the phase expected on `(1 − a, 1)`.
    pub phase: ComplexMatrix,
    /// Sup error of `Tφ − φ` over bumps in `(0, 1 − a)`.
    pub identity_error: f64,
    /// Sup error of `Tφ − (u′)⁻¹uφ` over bumps in `(1 − a, 1)`.
    pub phase_error: f64,
    /// `(copy, λ, |Tφ − expected|)` for the sum of all test bumps.
    pub profile: Vec<(usize, f64, f64)>,
}

impl LocalPhaseOp {
    pub fn max_error(&self) -> f64 {
        self.identity_error.max(self.phase_error)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("copy,lambda,error\n");
        for (c, x, e) in &self.profile {
            s.push_str(&format!("{c},{x:.16e},{e:.16e}\n"));
        }
        s
    }
}

/// Squared-cosine bump on `(lo, hi)`.
pub fn cos2_bump(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo || x >= hi {
        return 0.0;
    }
    let t = (x - lo) / (hi - lo);
    (std::f64::consts::PI * (t - 0.5)).cos().powi(2)
}

/// Builds `T` from two boundary extensions of an interval model and checks
/// its action on squared-cosine bumps kept two cells away from `0, 1 − a, 1`.
///
/// The analytic-wrap backend is used when `a` is a multiple of the grid
/// spacing, the spectral exponential otherwise.
pub fn local_phase_op(
    op: &OperatorOnDomain,
    u: &ExtensionParameter,
    u_prime: &ExtensionParameter,
    a: f64,
) -> Result<LocalPhaseOp> {
    let m = op.points_per_copy() - usize::from(op.interval_backend() == Some(Backend::FiniteDifference));
    let backend = if commensurate_shift(a, m).is_some() {
        FlowBackend::AnalyticWrap
    } else {
        FlowBackend::SpectralExponential
    };
    local_phase_op_with(op, u, u_prime, a, backend)
}

pub fn local_phase_op_with(
    op: &OperatorOnDomain,
    u: &ExtensionParameter,
    u_prime: &ExtensionParameter,
    a: f64,
    backend: FlowBackend,
) -> Result<LocalPhaseOp> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Parameter(format!("a must lie in (0, 1) (got {a})")));
    }
    let ext = extend_by_boundary(op, u)?;
    let ext_prime = extend_by_boundary(op, u_prime)?;
    let forward = flow_unitary(&ext, a, backend)?;
    let back = flow_unitary(&ext_prime, -a, backend)?;
    let t = compose(&[back, forward])?;
    let phase = &u_prime.inverse() * u.u();

    let grid = ext.grid().clone();
    let m = grid.points_per_copy();
    let r = ext.copies();
    let h = 1.0 / m as f64;
    let margin = 2.0 * h;
    let regions = [(margin, 1.0 - a - margin, false), (1.0 - a + margin, 1.0 - margin, true)];
    let zero = C64::new(0.0, 0.0);
    let mut identity_error: f64 = 0.0;
    let mut phase_error: f64 = 0.0;
    let mut total = vec![zero; grid.len()];
    let mut total_expected = vec![zero; grid.len()];
    for &(lo, hi, rotated) in &regions {
        if hi <= lo {
            continue;
        }
        for c in 0..r {
            let phi: Vec<C64> = (0..grid.len())
                .map(|k| {
                    let (cp, _) = grid.split(k);
                    if cp == c {
                        C64::new(cos2_bump(grid.point(k), lo, hi), 0.0)
                    } else {
                        zero
                    }
                })
                .collect();
            let expected: Vec<C64> = if rotated {
                (0..grid.len())
                    .map(|k| {
                        let (cp, j) = grid.split(k);
                        phase.get(cp, c) * phi[c * m + j]
                    })
                    .collect()
            } else {
                phi.clone()
            };
            let got = t.mat_vec(&phi);
            let err = got.iter().zip(&expected).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            if rotated {
                phase_error = phase_error.max(err);
            } else {
                identity_error = identity_error.max(err);
            }
            total.iter_mut().zip(&phi).for_each(|(s, p)| *s += p);
            total_expected.iter_mut().zip(&expected).for_each(|(s, p)| *s += p);
        }
    }
    let got = t.mat_vec(&total);
    let profile = (0..grid.len())
        .map(|k| {
            let (c, _) = grid.split(k);
            (c, grid.point(k), (got[k] - total_expected[k]).norm())
        })
        .collect();
    Ok(LocalPhaseOp {
        t,
        backend,
        a,
        phase,
        identity_error,
        phase_error,
        profile,
    })
}

/// `S_u(a)` lifted to the ambient space of an interval model, so that it can
/// be tested as a gauge candidate against that model's domain.
pub fn ambient_translation(op: &OperatorOnDomain, u: &ExtensionParameter, a: f64) -> Result<ComplexMatrix> {
    let ext = extend_by_boundary(op, u)?;
    let flow = flow_unitary(&ext, a, FlowBackend::AnalyticWrap)?;
    match ext.embedding() {
        None => Ok(flow.matrix),
        Some(e) => {
            // Parent samples 1..=M of each copy are the coordinates; λ = 0 is re-derived by `e`.
            let n = op.points_per_copy();
            let m = n - 1;
            let mut restrict = ComplexMatrix::zeros(op.copies() * m, op.copies() * n);
            for c in 0..op.copies() {
                for j in 0..m {
                    restrict.set(c * m + j, c * n + j + 1, C64::new(1.0, 0.0));
                }
            }
            Ok(&(e * &flow.matrix) * &restrict)
        }
    }
}

/// Seed for the extension unitaries of [`generated_algebra_dimension`].
pub const ALGEBRA_SEED: u64 = 0xa16;

pub fn generated_algebra_dimension(model: &OperatorOnDomain, max_word_length: usize, extension_set_size: usize) -> Result<usize> {
    generated_algebra_dimension_seeded(model, max_word_length, extension_set_size, ALGEBRA_SEED).map(|r| r.dimension)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraReport {
    pub dimension: usize,
    /// Span dimension after each word length `0..=max_word_length` (or until saturation).
    pub by_length: Vec<usize>,
    pub target: usize,
}

/// Span dimension of all words of length `≤ max_word_length` in seeded
/// extension unitaries `U = S ⊕ S′` and their adjoints.
///
/// Breadth-first: only words accepted into the span at one length are
/// extended at the next. Stops once the span is the full matrix algebra.
pub fn generated_algebra_dimension_seeded(
    model: &OperatorOnDomain,
    max_word_length: usize,
    extension_set_size: usize,
    seed: u64,
) -> Result<AlgebraReport> {
    if !matches!(model.kind(), ModelKind::Matrix { .. }) {
        return Err(Error::Contract("algebra generation is defined for matrix models".into()));
    }
    let n = model.ambient_dim();
    if n > 8 {
        return Err(Error::Config(format!("algebra generation is limited to dimension <= 8 (got {n})")));
    }
    let target = n * n;
    let grid = model.grid().clone();
    let (plus, _) = crate::deficiency::codimension_spaces(model)?;
    let r = plus.dim();
    let mut rng = rng::seeded(seed);
    let mut gens = Vec::with_capacity(2 * extension_set_size);
    for _ in 0..extension_set_size {
        let s_prime = random_unitary(r, &mut rng);
        let ext = extend_by_cayley(model, &s_prime)?;
        let u = ext.unitary().cloned().expect("cayley extensions carry their unitary");
        gens.push(weighted_adjoint(&u, &grid));
        gens.push(u);
    }

    let mut span = Span::new(target);
    let id = ComplexMatrix::identity(n);
    span.try_add(&id);
    let mut by_length = vec![span.dim()];
    let mut frontier = vec![id];
    for _ in 0..max_word_length {
        if span.dim() == target {
            break;
        }
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let word = g * w;
                if span.try_add(&word) {
                    next.push(word);
                }
                if span.dim() == target {
                    break;
                }
            }
            if span.dim() == target {
                break;
            }
        }
        by_length.push(span.dim());
        frontier = next;
    }
    Ok(AlgebraReport {
        dimension: span.dim(),
        by_length,
        target,
    })
}

/// Haar-distributed `r × r` unitary from the QR factor of a complex Gaussian matrix.
fn random_unitary(r: usize, rng: &mut rand_chacha::ChaCha8Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(r, r, |_, _| rng::complex_gaussian(rng));
    let grid = Grid::counting(r).expect("r >= 1");
    let q = crate::hilbert::orthonormalize(&g, &Arc::new(grid), 1e-12);
    q.basis().clone()
}

/// Orthonormal basis (CGS2) of vectorized matrices.
struct Span {
    basis: Vec<Vec<C64>>,
    cap: usize,
}

impl Span {
    fn new(cap: usize) -> Self {
        Self { basis: Vec::new(), cap }
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn try_add(&mut self, m: &ComplexMatrix) -> bool {
        if self.basis.len() == self.cap {
            return false;
        }
        let mut v = m.row_major();
        let g = Grid::counting(v.len()).expect("non-empty");
        let n0 = norm(&v, &g);
        if n0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in &self.basis {
                let h = inner(b, &v, &g);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= y * h);
            }
        }
        let n1 = norm(&v, &g);
        if n1 < 1e-8 * n0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= n1);
        self.basis.push(v);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{build_interval_derivative, build_matrix_model, random_hermitian};

    #[test]
    fn zero_flow_is_identity_and_unit_flow_is_boundary_phase() {
        let op = build_interval_derivative(1, 65, Backend::Spectral).unwrap();
        let theta = 0.9;
        let ext = extend_by_boundary(&op, &ExtensionParameter::phase(theta)).unwrap();
        for backend in [FlowBackend::SpectralExponential, FlowBackend::AnalyticWrap] {
            let id = flow_unitary(&ext, 0.0, backend).unwrap();
            assert!(id.matrix.identity_defect() < 1e-10);
            let one = flow_unitary(&ext, 1.0, backend).unwrap();
            let target = ComplexMatrix::identity(64).scale(C64::from_polar(1.0, theta));
            assert!((&one.matrix - &target).max_abs() < 1e-9);
        }
    }

    #[test]
    fn backends_agree_and_group_law_holds() {
        let op = build_interval_derivative(1, 513, Backend::Spectral).unwrap();
        let ext = extend_by_boundary(&op, &ExtensionParameter::phase(1.3)).unwrap();
        let a = 154.0 / 512.0;
        let s = flow_unitary(&ext, a, FlowBackend::SpectralExponential).unwrap();
        let w = flow_unitary(&ext, a, FlowBackend::AnalyticWrap).unwrap();
        assert!((&s.matrix - &w.matrix).max_abs() < 1e-6);
        assert!(s.unitary_defect() < 1e-8);
        let b = flow_unitary(&ext, 0.2, FlowBackend::SpectralExponential).unwrap();
        let ab = flow_unitary(&ext, a + 0.2, FlowBackend::SpectralExponential).unwrap();
        assert!((&(&s.matrix * &b.matrix) - &ab.matrix).max_abs() < 1e-8);
        let back = compose(&[s.inverse(), s.clone()]).unwrap();
        assert!(back.identity_defect() < 1e-9);
    }

    #[test]
    fn analytic_wrap_rejects_incommensurate_shift() {
        let op = build_interval_derivative(1, 33, Backend::Spectral).unwrap();
        let ext = extend_by_boundary(&op, &ExtensionParameter::phase(0.0)).unwrap();
        assert!(matches!(
            flow_unitary(&ext, 0.3, FlowBackend::AnalyticWrap),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn same_extension_gives_identity_t() {
        let op = build_interval_derivative(1, 129, Backend::Spectral).unwrap();
        let u = ExtensionParameter::phase(0.7);
        let t = local_phase_op(&op, &u, &u, 0.25).unwrap();
        assert!(t.t.identity_defect() < 1e-10);
    }

    #[test]
    fn local_phase_rotation_on_tail() {
        let op = build_interval_derivative(1, 129, Backend::Spectral).unwrap();
        let theta = 1.1;
        let t = local_phase_op(&op, &ExtensionParameter::identity(1), &ExtensionParameter::phase(theta), 0.25).unwrap();
        assert_eq!(t.backend, FlowBackend::AnalyticWrap);
        assert!((t.phase.get(0, 0) - C64::from_polar(1.0, -theta)).norm() < 1e-15);
        assert!(t.max_error() < 1e-12);
        assert!(local_phase_op(&op, &ExtensionParameter::identity(1), &ExtensionParameter::phase(theta), 1.5).is_err());
    }

    #[test]
    fn translations_do_not_preserve_the_domain() {
        let op = build_interval_derivative(1, 65, Backend::Spectral).unwrap();
        let g = ambient_translation(&op, &ExtensionParameter::phase(0.4), 0.25).unwrap();
        let rep = crate::extensions::verify_gauge_isometry(&g, &op).unwrap();
        assert!(rep.domain_preservation_defect > 0.5);
        assert!(rep.isometry_defect < 1e-12);
    }

    #[test]
    fn word_length_zero_is_identity_only() {
        let op = build_matrix_model(&random_hermitian(4, 7), 1).unwrap();
        assert_eq!(generated_algebra_dimension(&op, 0, 3).unwrap(), 1);
    }

    #[test]
    fn span_is_monotone_in_word_length() {
        let op = build_matrix_model(&random_hermitian(4, 7), 1).unwrap();
        let rep = generated_algebra_dimension_seeded(&op, 6, 3, ALGEBRA_SEED).unwrap();
        assert!(rep.by_length.windows(2).all(|w| w[0] <= w[1]));
    }
}
