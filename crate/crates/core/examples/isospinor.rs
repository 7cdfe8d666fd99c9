//! Isospinor components of a state over the degenerate eigenvectors, and a gauge check.

use std::sync::Arc;

use fuzzyspec::extensions::{copy_mixing, isospinor_ket};
use fuzzyspec::ops::{build_interval_derivative, Backend};
use fuzzyspec::{isospinor_expansion, verify_gauge_isometry, ComplexMatrix, Result, StateVec, C64};

fn main() -> Result<()> {
    let op = build_interval_derivative(2, 512, Backend::FiniteDifference)?;
    let grid = Arc::clone(op.grid());
    let phi = StateVec::new(isospinor_ket(&grid, 3.0, 0), Arc::clone(&grid))?;
    let xi: Vec<f64> = (0..=6).map(|k| k as f64).collect();
    let c = isospinor_expansion(&phi, &op, &xi)?;
    for (k, x) in xi.iter().enumerate() {
        println!("xi = {x}: |phi_0| = {:.6}  |phi_1| = {:.6}", c.get(k, 0).norm(), c.get(k, 1).norm());
    }

    // A constant U(2) rotation of the copy index commutes with X and keeps the domain.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = ComplexMatrix::from_fn(2, 2, |i, j| C64::new(if i == 1 && j == 0 { -s } else { s }, 0.0));
    let rep = verify_gauge_isometry(&copy_mixing(&u, 512), &op)?;
    println!(
        "gauge: commutator {:.1e}, domain {:.1e}, isometry {:.1e}",
        rep.commutator_defect, rep.domain_preservation_defect, rep.isometry_defect
    );
    Ok(())
}
