//! Deficiency spaces, indices, the Cayley transform and short-distance
//! classification.
//!
//! Convention: `L₊ = ((X+i)D)^⊥ = ker(X* − i)` and `L₋ = ((X−i)D)^⊥ = ker(X* + i)`.
//! For `X = i d/dλ` this puts `e^{+λ}` in `L₊` and `e^{−λ}` in `L₋`.
//!
//! Two index counts are produced. The codimension count is exact linear
//! algebra on the discretization and is authoritative for matrix models. For
//! differential models it counts discretization-level defects (two per copy
//! for a finite-difference Dirichlet domain), so the continuum count from the
//! closed-form kernel of `X* ∓ i` is authoritative there.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{norm, orthonormalize, range_and_complement, weighted_gram, ComplexMatrix, Grid, Subspace, C64, RANK_TOL};
use crate::ops::{check_symmetry, ModelKind, OperatorOnDomain, SYMMETRY_TOL};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeficiencyMethod {
    SubspaceCodimension,
    OdeNormalizability,
    /// Indices summed over the summands of a direct sum.
    BlockSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    SelfAdjoint,
    #[serde(rename = "fuzzy-A")]
    FuzzyA,
    #[serde(rename = "fuzzy-B")]
    FuzzyB,
    Mixed,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::SelfAdjoint => "self-adjoint",
            Classification::FuzzyA => "fuzzy-A",
            Classification::FuzzyB => "fuzzy-B",
            Classification::Mixed => "mixed",
        })
    }
}

impl fmt::Display for DeficiencyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeficiencyMethod::SubspaceCodimension => "subspace-codimension",
            DeficiencyMethod::OdeNormalizability => "ode-normalizability",
            DeficiencyMethod::BlockSum => "block-sum",
        })
    }
}

/// Indices with the bases of `L±` they were read from.
#[derive(Clone, Debug)]
pub struct DeficiencyReport {
    pub r_plus: usize,
    pub r_minus: usize,
    pub basis_plus: Subspace,
    pub basis_minus: Subspace,
    /// Method that produced `r_plus`, `r_minus`.
    pub method: DeficiencyMethod,
    pub classification: Classification,
    /// Discrete `L±` from the codimension method (always computed).
    pub codim_plus: Subspace,
    pub codim_minus: Subspace,
    /// Continuum count, for differential models.
    pub ode_indices: Option<(usize, usize)>,
    /// Per-summand reports of a direct sum.
    pub blocks: Vec<DeficiencyReport>,
    pub warnings: Vec<String>,
}

impl DeficiencyReport {
    pub fn codim_indices(&self) -> (usize, usize) {
        (self.codim_plus.dim(), self.codim_minus.dim())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": crate::SCHEMA,
            "r_plus": self.r_plus,
            "r_minus": self.r_minus,
            "method": self.method.to_string(),
            "classification": self.classification.to_string(),
            "codimension_indices": [self.codim_plus.dim(), self.codim_minus.dim()],
            "ode_indices": self.ode_indices.map(|(a, b)| vec![a, b]),
            "blocks": self.blocks.iter().map(|b| b.to_json()).collect::<Vec<_>>(),
            "warnings": self.warnings,
        })
    }
}

/// Deficiency spaces and indices of a symmetric operator.
pub fn deficiency_spaces(op: &OperatorOnDomain) -> Result<DeficiencyReport> {
    let defect = check_symmetry(op);
    if defect > SYMMETRY_TOL {
        return Err(Error::Symmetry { defect });
    }
    let (codim_plus, codim_minus) = codimension_spaces(op)?;
    let mut warnings = op.warnings().to_vec();

    if !op.blocks().is_empty() {
        let blocks = op
            .blocks()
            .iter()
            .map(deficiency_spaces)
            .collect::<Result<Vec<_>>>()?;
        let grid = op.grid().clone();
        let plus: Vec<&Subspace> = blocks.iter().map(|b| &b.basis_plus).collect();
        let minus: Vec<&Subspace> = blocks.iter().map(|b| &b.basis_minus).collect();
        let basis_plus = Subspace::direct_sum(&plus, grid.clone())?;
        let basis_minus = Subspace::direct_sum(&minus, grid)?;
        let mut report = DeficiencyReport {
            r_plus: basis_plus.dim(),
            r_minus: basis_minus.dim(),
            basis_plus,
            basis_minus,
            method: DeficiencyMethod::BlockSum,
            classification: Classification::SelfAdjoint,
            codim_plus,
            codim_minus,
            ode_indices: None,
            blocks,
            warnings,
        };
        report.classification = classify(&report, op);
        return Ok(report);
    }

    let ode = ode_spaces(op)?;
    let mut report = match ode {
        Some((plus, minus)) => {
            let (cp, cm) = (codim_plus.dim(), codim_minus.dim());
            if (cp, cm) != (plus.dim(), minus.dim()) {
                warnings.push(format!(
                    "discrete codimension indices ({cp},{cm}) differ from continuum indices ({},{}); continuum value is authoritative",
                    plus.dim(),
                    minus.dim()
                ));
            }
            DeficiencyReport {
                r_plus: plus.dim(),
                r_minus: minus.dim(),
                basis_plus: plus.clone(),
                basis_minus: minus.clone(),
                method: DeficiencyMethod::OdeNormalizability,
                classification: Classification::SelfAdjoint,
                codim_plus,
                codim_minus,
                ode_indices: Some((plus.dim(), minus.dim())),
                blocks: Vec::new(),
                warnings,
            }
        }
        None => DeficiencyReport {
            r_plus: codim_plus.dim(),
            r_minus: codim_minus.dim(),
            basis_plus: codim_plus.clone(),
            basis_minus: codim_minus.clone(),
            method: DeficiencyMethod::SubspaceCodimension,
            classification: Classification::SelfAdjoint,
            codim_plus,
            codim_minus,
            ode_indices: None,
            blocks: Vec::new(),
            warnings,
        },
    };
    report.classification = classify(&report, op);
    Ok(report)
}

/// `(X ± i)B` for the domain basis `B`.
fn shifted_images(op: &OperatorOnDomain) -> (ComplexMatrix, ComplexMatrix) {
    let b = op.domain().basis();
    let xb = op.matrix() * b;
    let ib = b.scale(C64::new(0.0, 1.0));
    (&xb + &ib, &xb - &ib)
}

/// `(((X+i)D)^⊥, ((X−i)D)^⊥)` by exact linear algebra.
pub(crate) fn codimension_spaces(op: &OperatorOnDomain) -> Result<(Subspace, Subspace)> {
    let (ap, am) = shifted_images(op);
    let (_, plus) = range_and_complement(&ap, op.grid())?;
    let (_, minus) = range_and_complement(&am, op.grid())?;
    Ok((plus, minus))
}

/// Closed-form solutions of `(X* ∓ i)φ = 0` for the differential models,
/// sampled on the grid; `None` for non-differential models.
fn ode_spaces(op: &OperatorOnDomain) -> Result<Option<(Subspace, Subspace)>> {
    let grid = op.grid().clone();
    let hbar = op.hbar();
    // Per-copy solution profiles s(λ) for the + and − kernels, and whether each
    // is square-integrable on the continuum domain.
    let (plus_profile, minus_profile, plus_ok, minus_ok): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, bool, bool) =
        match op.kind() {
            ModelKind::Interval { .. } | ModelKind::BoundaryParent => {
                // i φ' = ± i φ on [0, 1]: both exponentials are bounded.
                (Box::new(|x: f64| x.exp()), Box::new(|x: f64| (-x).exp()), true, true)
            }
            ModelKind::HalfLine { length } => {
                let l = *length;
                let plus = halfline_normalizable(|x| x.exp(), &grid, l);
                let minus = halfline_normalizable(|x| (-x).exp(), &grid, l);
                (Box::new(|x: f64| x.exp()), Box::new(|x: f64| (-x).exp()), plus, minus)
            }
            ModelKind::BetaPosition { beta, .. } => {
                // iħ(1+βp²)φ' = ± iφ  ⇒  φ = exp(± atan(√β p)/(ħ√β)); bounded on ℝ and
                // the β-measure has finite total mass π/√β, so both are normalizable.
                let sb = beta.sqrt();
                let c = 1.0 / (hbar * sb);
                (
                    Box::new(move |p: f64| (c * (sb * p).atan()).exp()),
                    Box::new(move |p: f64| (-c * (sb * p).atan()).exp()),
                    true,
                    true,
                )
            }
            _ => return Ok(None),
        };
    let r = op.copies();
    let build = |profile: &dyn Fn(f64) -> f64| -> Subspace {
        let n = grid.len();
        let cols: Vec<Vec<C64>> = (0..r)
            .map(|c| {
                (0..n)
                    .map(|k| {
                        if grid.split(k).0 == c {
                            C64::new(profile(grid.point(k)), 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        orthonormalize(&ComplexMatrix::from_columns(n, &cols), &grid, RANK_TOL)
    };
    let plus = if plus_ok { build(plus_profile.as_ref()) } else { Subspace::empty(grid.clone()) };
    let minus = if minus_ok { build(minus_profile.as_ref()) } else { Subspace::empty(grid.clone()) };
    Ok(Some((plus, minus)))
}

/// A solution counts as square-integrable when its norm over `[0, L]` agrees
/// with its norm over `[0, L/2]` to 1%.
fn halfline_normalizable(f: impl Fn(f64) -> f64, grid: &Arc<Grid>, length: f64) -> bool {
    let full: Vec<C64> = grid.points().iter().map(|&x| C64::new(f(x), 0.0)).collect();
    let half: Vec<C64> = grid
        .points()
        .iter()
        .map(|&x| C64::new(if x <= length / 2.0 { f(x) } else { 0.0 }, 0.0))
        .collect();
    let (a, b) = (norm(&full, grid), norm(&half, grid));
    (a - b).abs() <= 0.01 * a
}

/// Classification from the indices; direct sums whose summands include both
/// a self-adjoint block and a non-self-adjoint block are `Mixed`.
pub fn classify(report: &DeficiencyReport, op: &OperatorOnDomain) -> Classification {
    if !report.blocks.is_empty() && report.blocks.len() == op.blocks().len() {
        let kinds: Vec<Classification> = report
            .blocks
            .iter()
            .zip(op.blocks())
            .map(|(b, o)| classify(b, o))
            .collect();
        let has_sa = kinds.contains(&Classification::SelfAdjoint);
        let has_other = kinds.iter().any(|k| *k != Classification::SelfAdjoint);
        if has_sa && has_other {
            return Classification::Mixed;
        }
    }
    match (report.r_plus, report.r_minus) {
        (0, 0) => Classification::SelfAdjoint,
        (a, b) if a == b => Classification::FuzzyA,
        _ => Classification::FuzzyB,
    }
}

/// Isometry between two subspaces of one ambient space.
#[derive(Clone, Debug)]
pub struct PartialIsometry {
    pub matrix: ComplexMatrix,
    pub initial_space: Subspace,
    pub final_space: Subspace,
}

/// `S = (X−i)(X+i)⁻¹` on `(X+i)D`, zero on its complement.
pub fn cayley_transform(op: &OperatorOnDomain) -> Result<PartialIsometry> {
    let defect = check_symmetry(op);
    if defect > SYMMETRY_TOL {
        return Err(Error::Symmetry { defect });
    }
    let grid = op.grid();
    let (ap, am) = shifted_images(op);
    let (initial, _) = range_and_complement(&ap, grid)?;
    let (final_space, _) = range_and_complement(&am, grid)?;
    // A₊ = Q R with R = Qᴴ W A₊; S = A₋ R⁻¹ Qᴴ W.
    let q = initial.basis();
    let r = weighted_gram(q, &ap, grid);
    let w = grid.ambient_weights();
    let qhw = q.adjoint().scale_rows_cols(&vec![1.0; q.ncols()], &w);
    let matrix = if q.ncols() == 0 {
        ComplexMatrix::zeros(grid.len(), grid.len())
    } else {
        &am * &r.solve(&qhw)
    };
    Ok(PartialIsometry {
        matrix,
        initial_space: initial,
        final_space,
    })
}

/// Seed used by [`verify_isometry`].
pub const ISOMETRY_SEED: u64 = 0x150;

pub fn verify_isometry(s: &PartialIsometry, samples: usize) -> f64 {
    verify_isometry_seeded(s, samples, ISOMETRY_SEED)
}

/// `max |‖Sφ‖ − ‖φ‖|` over seeded normalized random vectors of the initial space.
pub fn verify_isometry_seeded(s: &PartialIsometry, samples: usize, seed: u64) -> f64 {
    let space = &s.initial_space;
    let grid = space.grid();
    if space.dim() == 0 {
        return 0.0;
    }
    let mut rng = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let c: Vec<C64> = (0..space.dim()).map(|_| rng::complex_gaussian(&mut rng)).collect();
        let mut v = space.combine(&c);
        let nv = norm(&v, grid);
        v.iter_mut().for_each(|z| *z /= nv);
        let sv = s.matrix.mat_vec(&v);
        worst = worst.max((norm(&sv, grid) - 1.0).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{build_interval_derivative, build_matrix_model, random_hermitian, Backend};
    use std::sync::Arc;

    fn scalar_model(x: f64, n: usize) -> OperatorOnDomain {
        let m = ComplexMatrix::identity(n).scale(C64::new(x, 0.0));
        build_matrix_model(&m, 0).unwrap()
    }

    #[test]
    fn cayley_of_scalars() {
        let zero = cayley_transform(&scalar_model(0.0, 4)).unwrap();
        assert!((&zero.matrix + &ComplexMatrix::identity(4)).max_abs() < 1e-12);
        let one = cayley_transform(&scalar_model(1.0, 4)).unwrap();
        let target = ComplexMatrix::identity(4).scale(C64::new(0.0, -1.0));
        assert!((&one.matrix - &target).max_abs() < 1e-12);
        assert!(verify_isometry(&one, 20) < 1e-12);
    }

    #[test]
    fn scaled_isometry_defect_equals_test_vector_norm() {
        let mut s = cayley_transform(&scalar_model(0.3, 5)).unwrap();
        s.matrix = s.matrix.scale(C64::new(2.0, 0.0));
        assert!((verify_isometry(&s, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_cayley_spaces_have_codimension_one_on_spectral_backend() {
        let op = build_interval_derivative(1, 64, Backend::Spectral).unwrap();
        let s = cayley_transform(&op).unwrap();
        assert_eq!(op.ambient_dim() - s.initial_space.dim(), 1);
        assert_eq!(op.ambient_dim() - s.final_space.dim(), 1);
        assert!(verify_isometry(&s, 20) < 1e-8);
    }

    #[test]
    fn matrix_model_indices_follow_codimension() {
        for (n, r) in [(6, 1), (8, 2)] {
            let op = build_matrix_model(&random_hermitian(n, 11), r).unwrap();
            let rep = deficiency_spaces(&op).unwrap();
            assert_eq!((rep.r_plus, rep.r_minus), (r, r));
            assert_eq!(rep.method, DeficiencyMethod::SubspaceCodimension);
            assert_eq!(rep.classification, Classification::FuzzyA);
        }
    }

    #[test]
    fn complement_of_cayley_initial_space_is_l_plus() {
        let op = build_matrix_model(&random_hermitian(6, 5), 1).unwrap();
        let rep = deficiency_spaces(&op).unwrap();
        let s = cayley_transform(&op).unwrap();
        let comp = crate::hilbert::complement(&s.initial_space);
        assert!(comp.max_angle_sine(&rep.basis_plus) < 1e-8);
    }

    #[test]
    fn json_uses_exact_keys() {
        let op = build_matrix_model(&random_hermitian(4, 1), 0).unwrap();
        let v = deficiency_spaces(&op).unwrap().to_json();
        assert_eq!(v["r_plus"], 0);
        assert_eq!(v["r_minus"], 0);
        assert_eq!(v["method"], "subspace-codimension");
        assert_eq!(v["classification"], "self-adjoint");
        assert_eq!(v["schema"], "fuzzyspec/1");
    }

    #[test]
    fn halfline_normalizability_proxy() {
        let grid = Arc::new(crate::hilbert::Grid::trapezoid(0.0, 20.0, 2001).unwrap());
        assert!(halfline_normalizable(|x| (-x).exp(), &grid, 20.0));
        assert!(!halfline_normalizable(|x| x.exp(), &grid, 20.0));
    }
}
