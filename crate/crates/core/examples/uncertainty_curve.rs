//! Minimal position spread at fixed mean for the interval derivative.
//!
//! Without the boundary the spread cannot be pushed to zero: the curve stays near `π`.

use fuzzyspec::ops::{build_interval_derivative, Backend};
use fuzzyspec::{uncertainty_curve, Result};

fn main() -> Result<()> {
    let op = build_interval_derivative(1, 256, Backend::FiniteDifference)?;
    let xi: Vec<f64> = (-4..=4).map(|k| k as f64 * 1.5).collect();
    let curve = uncertainty_curve(&op, &xi)?;
    for (x, dx) in curve.xi_values.iter().zip(&curve.dx_min) {
        println!("xi = {x:+.2}  dx_min = {dx:.6}");
    }
    for (x, why) in &curve.infeasible {
        println!("xi = {x:+.2}  skipped: {why}");
    }
    Ok(())
}
