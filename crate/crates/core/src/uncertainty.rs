//! Minimal uncertainty `ΔX_min(ξ)`, GUP sampling and localizing sequences.
//!
//! For `φ = Bc` with `B` the orthonormal domain basis, `⟨X⟩ = cᴴK₁c` and
//! `⟨X²⟩ = ‖Xφ‖² = cᴴA₀c`, where `K₁ = BᴴWXB` and `A₀ = (XB)ᴴW(XB)`.
//! Minimizing `⟨(X − ξ)²⟩` at fixed `⟨X⟩ = ξ` leads to the ground state of
//! `A₀ + τK₁`; its mean `h(τ)` is non-increasing in `τ`, so the multiplier
//! is found by bracketing and an Illinois (regula falsi) iteration. The last
//! bracket is closed exactly by mixing its two ground states.

use std::sync::Arc;

use faer::Side;
use serde::Serialize;

use crate::deficiency::{deficiency_spaces, Classification};
use crate::error::{Error, Result};
use crate::hilbert::{from_c, inner, norm, weighted_gram, ComplexMatrix, Grid, StateVec, C64};
use crate::ops::{BetaAlgebraModel, ModelKind, OperatorOnDomain};
use crate::rng;

/// Quadratic forms of one operator on its domain, reusable across `ξ`.
#[derive(Clone, Debug)]
pub struct VarianceProblem {
    basis: ComplexMatrix,
    grid: Arc<Grid>,
    a0: ComplexMatrix,
    k1: ComplexMatrix,
    mean_range: (f64, f64),
    model_tag: String,
}

#[derive(Clone, Debug)]
pub struct MinUncertainty {
    pub dx_min: f64,
    pub minimizer: StateVec,
    /// `|⟨X⟩ − ξ|` of the minimizer.
    pub residual: f64,
    pub iterations: usize,
}

fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale(C64::new(0.5, 0.0))
}

/// Lowest eigenpair of a Hermitian matrix (ordinary inner product).
fn lowest(m: &ComplexMatrix) -> (f64, Vec<C64>) {
    let evd = m.as_faer().selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let mut best = 0;
    for i in 1..s.nrows() {
        if s.read(i).re < s.read(best).re {
            best = i;
        }
    }
    let u = evd.u();
    (s.read(best).re, (0..u.nrows()).map(|i| from_c(u.read(i, best))).collect())
}

fn quad(m: &ComplexMatrix, c: &[C64]) -> f64 {
    let mc = m.mat_vec(c);
    c.iter().zip(&mc).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

impl VarianceProblem {
    pub fn new(op: &OperatorOnDomain) -> Result<Self> {
        let basis = op.domain().basis().clone();
        if basis.ncols() == 0 {
            return Err(Error::Contract("operator has an empty domain".into()));
        }
        let grid = op.grid().clone();
        let xb = op.matrix() * &basis;
        let a0 = hermitize(&weighted_gram(&xb, &xb, &grid));
        let k1 = hermitize(&weighted_gram(&basis, &xb, &grid));
        let ev = k1.as_faer().selfadjoint_eigenvalues(Side::Lower);
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            basis,
            grid,
            a0,
            k1,
            mean_range: (lo, hi),
            model_tag: op.model_tag().to_string(),
        })
    }

    /// Achievable interval of `⟨X⟩` over normalized domain states.
    pub fn mean_range(&self) -> (f64, f64) {
        self.mean_range
    }

    fn ground(&self, tau: f64) -> (Vec<C64>, f64) {
        let m = &self.a0 + &self.k1.scale(C64::new(tau, 0.0));
        let (_, c) = lowest(&m);
        let h = quad(&self.k1, &c);
        (c, h)
    }

    pub fn solve(&self, xi: f64) -> Result<MinUncertainty> {
        let (lo, hi) = self.mean_range;
        let span = (hi - lo).abs().max(1.0);
        if !(xi > lo && xi < hi) {
            return Err(Error::Infeasible { xi, min: lo, max: hi });
        }
        let tol = 1e-11 * span;
        let (_, h0) = self.ground(0.0);
        let mut iterations = 1;
        let tau0 = -2.0 * (xi - h0);
        let (c0, g0) = self.ground(tau0);
        iterations += 1;
        if (g0 - xi).abs() <= tol {
            return Ok(self.finish(xi, c0, iterations));
        }
        // f(τ) = h(τ) − ξ is non-increasing; bracket its sign change.
        let mut step = tau0.abs().max(1.0);
        let (mut ta, mut ca, mut fa) = (tau0, c0.clone(), g0 - xi);
        let (mut tb, mut cb, mut fb);
        loop {
            let t = if fa > 0.0 { ta + step } else { ta - step };
            let (c, g) = self.ground(t);
            iterations += 1;
            let f = g - xi;
            if f.abs() <= tol {
                return Ok(self.finish(xi, c, iterations));
            }
            if (f > 0.0) == (fa > 0.0) {
                ta = t;
                ca = c;
                fa = f;
                step *= 2.0;
                if step > 1e15 {
                    return Err(Error::Infeasible { xi, min: lo, max: hi });
                }
            } else {
                tb = t;
                cb = c;
                fb = f;
                break;
            }
        }
        // Keep a on the f > 0 side.
        if fa < 0.0 {
            std::mem::swap(&mut ta, &mut tb);
            std::mem::swap(&mut ca, &mut cb);
            std::mem::swap(&mut fa, &mut fb);
        }
        let mut side = 0i8;
        for _ in 0..200 {
            if (tb - ta).abs() <= 1e-13 * (ta.abs() + tb.abs() + 1.0) {
                break;
            }
            let mut t = (ta * fb - tb * fa) / (fb - fa);
            if !(t > ta.min(tb) && t < ta.max(tb)) {
                t = 0.5 * (ta + tb);
            }
            let (c, g) = self.ground(t);
            iterations += 1;
            let f = g - xi;
            if f.abs() <= tol {
                return Ok(self.finish(xi, c, iterations));
            }
            if f > 0.0 {
                ta = t;
                ca = c;
                fa = f;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            } else {
                tb = t;
                cb = c;
                fb = f;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            }
        }
        let c = self.mix(xi, &ca, &cb);
        Ok(self.finish(xi, c, iterations))
    }

    /// Exact constrained optimum inside `span{ca, cb}`, whose means straddle `ξ`.
    fn mix(&self, xi: f64, ca: &[C64], cb: &[C64]) -> Vec<C64> {
        let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
        let q1 = ca.to_vec();
        let mut q2 = cb.to_vec();
        let p = dot(&q1, &q2);
        q2.iter_mut().zip(&q1).for_each(|(x, y)| *x -= y * p);
        let n2 = dot(&q2, &q2).re.sqrt();
        let (ha, hb) = (quad(&self.k1, ca), quad(&self.k1, cb));
        if n2 < 1e-12 {
            return if (ha - xi).abs() <= (hb - xi).abs() { ca.to_vec() } else { cb.to_vec() };
        }
        q2.iter_mut().for_each(|x| *x /= n2);
        let q = ComplexMatrix::from_columns(q1.len(), &[q1, q2]);
        let qh = q.adjoint();
        let k = &(&qh * &self.k1) * &q;
        let a = &(&qh * &self.a0) * &q;
        let shifted = hermitize(&(&k - &ComplexMatrix::identity(2).scale(C64::new(xi, 0.0))));
        let evd = shifted.as_faer().selfadjoint_eigendecomposition(Side::Lower);
        let ev = evd.s().column_vector();
        let (k_lo, k_hi) = (ev.read(0).re, ev.read(1).re);
        let (i_hi, i_lo) = if k_hi >= k_lo { (1, 0) } else { (0, 1) };
        let (k1v, k2v) = (k_hi.max(k_lo), k_hi.min(k_lo));
        let e = ComplexMatrix::from_fn(2, 2, |i, j| from_c(evd.u().read(i, if j == 0 { i_hi } else { i_lo })));
        if !(k1v >= 0.0 && k2v <= 0.0) || k1v - k2v <= 0.0 {
            return if (ha - xi).abs() <= (hb - xi).abs() { ca.to_vec() } else { cb.to_vec() };
        }
        let alpha = (-k2v / (k1v - k2v)).sqrt();
        let beta = (k1v / (k1v - k2v)).sqrt();
        let ae = &(&e.adjoint() * &a) * &e;
        let a12 = ae.get(0, 1);
        let phase = if a12.norm() > 0.0 { -a12.conj() / a12.norm() } else { C64::new(1.0, 0.0) };
        let coeff = e.mat_vec(&[C64::new(alpha, 0.0), phase * beta]);
        q.mat_vec(&coeff)
    }

    fn finish(&self, xi: f64, c: Vec<C64>, iterations: usize) -> MinUncertainty {
        let nc = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let c: Vec<C64> = c.iter().map(|z| z / nc).collect();
        let mean = quad(&self.k1, &c);
        let second = quad(&self.a0, &c);
        let var = (second - mean * mean).max(0.0);
        let phi = self.basis.mat_vec(&c);
        MinUncertainty {
            dx_min: var.sqrt(),
            minimizer: StateVec::new(phi, self.grid.clone()).expect("basis lives on the grid"),
            residual: (mean - xi).abs(),
            iterations,
        }
    }
}

pub fn min_uncertainty(op: &OperatorOnDomain, xi: f64) -> Result<MinUncertainty> {
    VarianceProblem::new(op)?.solve(xi)
}

/// `⟨X⟩` and `ΔX` of a state, with `⟨X²⟩ = ‖Xφ‖²`.
pub fn mean_and_spread(op: &OperatorOnDomain, phi: &[C64]) -> (f64, f64) {
    let g = op.grid();
    let n2 = norm(phi, g).powi(2);
    let xphi = op.apply(phi);
    let mean = inner(phi, &xphi, g).re / n2;
    let second = norm(&xphi, g).powi(2) / n2;
    (mean, (second - mean * mean).max(0.0).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct UncertaintyCurve {
    pub xi_values: Vec<f64>,
    pub dx_min: Vec<f64>,
    pub solver_residuals: Vec<f64>,
    pub model_tag: String,
    /// `(ξ, reason)` for points left out.
    pub infeasible: Vec<(f64, String)>,
}

impl UncertaintyCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi,dx_min,residual\n");
        for ((x, d), r) in self.xi_values.iter().zip(&self.dx_min).zip(&self.solver_residuals) {
            s.push_str(&format!("{x:.16e},{d:.16e},{r:.16e}\n"));
        }
        s
    }

    pub fn min(&self) -> Option<(f64, f64)> {
        self.xi_values
            .iter()
            .zip(&self.dx_min)
            .map(|(x, d)| (*x, *d))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// `ΔX_min` over a grid of `ξ`, in input order; failures are recorded, not raised.
pub fn uncertainty_curve(op: &OperatorOnDomain, xi_grid: &[f64]) -> Result<UncertaintyCurve> {
    let problem = VarianceProblem::new(op)?;
    let mut curve = UncertaintyCurve {
        xi_values: Vec::new(),
        dx_min: Vec::new(),
        solver_residuals: Vec::new(),
        model_tag: problem.model_tag.clone(),
        infeasible: Vec::new(),
    };
    for &xi in xi_grid {
        match problem.solve(xi) {
            Ok(m) => {
                curve.xi_values.push(xi);
                curve.dx_min.push(m.dx_min);
                curve.solver_residuals.push(m.residual);
            }
            Err(e) => curve.infeasible.push((xi, e.to_string())),
        }
    }
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GupReport {
    /// Smallest `ΔxΔp − (ħ/2)(1 + β(Δp)²)` over the sample.
    pub min_margin: f64,
    pub violations: usize,
    pub n_states: usize,
    pub seed: u64,
    /// Smallest Robertson margin `ΔxΔp − |⟨[x,p]⟩|/2`, an independent check.
    pub min_robertson_margin: f64,
}

/// Moments `(‖φ‖², ⟨x⟩, ⟨x²⟩, ⟨p⟩, ⟨p²⟩)` of states `φ = Sc` via `K × K` forms.
struct MomentForms {
    gram: ComplexMatrix,
    x: ComplexMatrix,
    x2: ComplexMatrix,
    p: ComplexMatrix,
    p2: ComplexMatrix,
    comm: ComplexMatrix,
}

impl MomentForms {
    fn new(m: &BetaAlgebraModel, s: &ComplexMatrix) -> Self {
        let g = m.x_op.grid();
        let xs = m.x_op.matrix() * s;
        let ps = m.p_op.matrix() * s;
        let comm_s = &(m.x_op.matrix() * &ps) - &(m.p_op.matrix() * &xs);
        Self {
            gram: hermitize(&weighted_gram(s, s, g)),
            x: hermitize(&weighted_gram(s, &xs, g)),
            x2: hermitize(&weighted_gram(&xs, &xs, g)),
            p: hermitize(&weighted_gram(s, &ps, g)),
            p2: hermitize(&weighted_gram(&ps, &ps, g)),
            comm: weighted_gram(s, &comm_s, g),
        }
    }

    /// `(Δx, Δp, |⟨[x,p]⟩|)` of the normalized state `Sc`.
    fn spreads(&self, c: &[C64]) -> (f64, f64, f64) {
        let nn = quad(&self.gram, c);
        let mx = quad(&self.x, c) / nn;
        let mp = quad(&self.p, c) / nn;
        let dx = (quad(&self.x2, c) / nn - mx * mx).max(0.0).sqrt();
        let dp = (quad(&self.p2, c) / nn - mp * mp).max(0.0).sqrt();
        let cc = self.comm.mat_vec(c);
        let comm: C64 = c.iter().zip(&cc).map(|(a, b)| a.conj() * b).sum::<C64>() / nn;
        (dx, dp, comm.norm())
    }
}

/// Seeded random smooth domain states against `ΔxΔp ≥ (ħ/2)(1 + β(Δp)²)`.
///
/// States are superpositions of the lowest `⌊N/8⌋` sine modes of `[−P, P]`
/// (which vanish at `±P`) with complex Gaussian coefficients.
pub fn sample_gup(m: &BetaAlgebraModel, n_states: usize, seed: u64) -> GupReport {
    let g = m.x_op.grid();
    let n = g.len();
    let modes = (n / 8).max(1);
    let cutoff = m.momentum_cutoff;
    let s = ComplexMatrix::from_fn(n, modes, |k, j| {
        if k == 0 || k == n - 1 {
            return C64::new(0.0, 0.0);
        }
        let p = g.point(k);
        let arg = (j + 1) as f64 * std::f64::consts::PI * (p + cutoff) / (2.0 * cutoff);
        C64::new(arg.sin(), 0.0)
    });
    let forms = MomentForms::new(m, &s);
    let hbar = m.hbar();
    let mut rng = rng::seeded(seed);
    let mut min_margin = f64::INFINITY;
    let mut min_robertson_margin = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n_states {
        let c: Vec<C64> = (0..modes).map(|_| rng::complex_gaussian(&mut rng)).collect();
        let (dx, dp, comm) = forms.spreads(&c);
        let bound = 0.5 * hbar * (1.0 + m.beta * dp * dp);
        let margin = dx * dp - bound;
        if margin < -1e-9 * bound.max(dx * dp) {
            violations += 1;
        }
        min_margin = min_margin.min(margin);
        min_robertson_margin = min_robertson_margin.min(dx * dp - 0.5 * comm);
    }
    GupReport {
        min_margin,
        violations,
        n_states,
        seed,
        min_robertson_margin,
    }
}

/// `(Δx, Δp)` of one state of the β-model.
pub fn gup_spreads(m: &BetaAlgebraModel, phi: &[C64]) -> (f64, f64) {
    let (_, dx) = mean_and_spread(&m.x_op, phi);
    let (_, dp) = mean_and_spread(&m.p_op, phi);
    (dx, dp)
}

#[derive(Clone, Debug)]
pub struct LocalizationSequence {
    /// States centred at `centers.0`, ordered by decreasing `ΔX`.
    pub states: Vec<StateVec>,
    /// Same profiles centred at `centers.1`.
    pub shifted_states: Vec<StateVec>,
    pub widths: Vec<f64>,
    pub dx_values: Vec<f64>,
    pub centers: (f64, f64),
    /// `|⟨φᵢ^{(ξ)} | φⱼ^{(ξ′)}⟩|`.
    pub overlap_matrix: ComplexMatrix,
}

impl LocalizationSequence {
    /// `|⟨φ^{(ξ)}|φ^{(ξ′)}⟩|` of the last (most localized) pair.
    pub fn final_overlap(&self) -> f64 {
        let k = self.states.len() - 1;
        self.overlap_matrix.get(k, k).re
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,width,dx,overlap\n");
        for k in 0..self.states.len() {
            s.push_str(&format!(
                "{k},{:.16e},{:.16e},{:.16e}\n",
                self.widths[k],
                self.dx_values[k],
                self.overlap_matrix.get(k, k).re
            ));
        }
        s
    }
}

/// Centres `ξ` and `ξ′` of the two families.
pub const LOCALIZATION_CENTERS: (f64, f64) = (0.0, 1.0);

/// `n` half-line states `sin²(πλ/w) e^{−iξλ}` on `[0, w]` with dyadic widths
/// `w = L/2ⁿ, …, L/2`; `ΔX` of `i d/dλ` falls as `w` grows.
pub fn fuzzyb_localizing_sequence(op: &OperatorOnDomain, n: usize) -> Result<LocalizationSequence> {
    let length = match op.kind() {
        ModelKind::HalfLine { length } => *length,
        _ => return Err(Error::Contract(format!("localizing sequences need a half-line model (got {})", op.model_tag()))),
    };
    let report = deficiency_spaces(op)?;
    if report.classification != Classification::FuzzyB {
        return Err(Error::Contract(format!("model is {} rather than fuzzy-B", report.classification)));
    }
    if n == 0 {
        return Err(Error::Parameter("sequence length must be >= 1".into()));
    }
    let grid = op.grid().clone();
    let (xi0, xi1) = LOCALIZATION_CENTERS;
    let make = |w: f64, xi: f64| -> Result<StateVec> {
        let comps: Vec<C64> = grid
            .points()
            .iter()
            .map(|&x| {
                if x < w {
                    C64::from_polar((std::f64::consts::PI * x / w).sin().powi(2), -xi * x)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        let comps = op.domain().project(&comps);
        Ok(StateVec::new(comps, grid.clone())?.normalized())
    };
    let widths: Vec<f64> = (0..n).map(|k| length / 2f64.powi((n - k) as i32)).collect();
    let states = widths.iter().map(|&w| make(w, xi0)).collect::<Result<Vec<_>>>()?;
    let shifted = widths.iter().map(|&w| make(w, xi1)).collect::<Result<Vec<_>>>()?;
    let dx_values: Vec<f64> = states.iter().map(|s| mean_and_spread(op, s.components()).1).collect();
    let overlap_matrix = ComplexMatrix::from_fn(n, n, |i, j| {
        C64::new(inner(states[i].components(), shifted[j].components(), &grid).norm(), 0.0)
    });
    Ok(LocalizationSequence {
        states,
        shifted_states: shifted,
        widths,
        dx_values,
        centers: (xi0, xi1),
        overlap_matrix,
    })
}
