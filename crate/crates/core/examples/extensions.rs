//! Self-adjoint extensions of the interval derivative and their spectra.
//!
//! The boundary condition `φ(0) = e^{iθ}φ(1)` shifts the lattice `2πk` by `θ`.

use std::f64::consts::PI;

use fuzzyspec::ops::{build_interval_derivative, Backend};
use fuzzyspec::{extend_by_boundary, ExtensionParameter, Result};

fn main() -> Result<()> {
    let op = build_interval_derivative(1, 256, Backend::Spectral)?;
    for theta in [0.0, PI / 3.0, PI] {
        let ext = extend_by_boundary(&op, &ExtensionParameter::phase(theta))?;
        let mut low: Vec<f64> = ext.physical_spectrum()?.into_iter().filter(|e| e.abs() < 15.0).collect();
        low.sort_by(f64::total_cmp);
        let shown: Vec<String> = low.iter().map(|e| format!("{e:.6}")).collect();
        println!("theta = {theta:.4}: {}", shown.join(" "));
    }
    Ok(())
}
