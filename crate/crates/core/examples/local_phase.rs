//! Two translation flows compose to a phase on the last stretch of the interval.

use fuzzyspec::ops::{build_interval_derivative, Backend};
use fuzzyspec::{local_phase_op, ExtensionParameter, Result};

fn main() -> Result<()> {
    let op = build_interval_derivative(1, 513, Backend::FiniteDifference)?;
    let (u, u_prime) = (ExtensionParameter::phase(0.0), ExtensionParameter::phase(1.1));
    let t = local_phase_op(&op, &u, &u_prime, 0.25)?;
    let phase = t.phase.get(0, 0);
    println!("backend {:?}, a = {}", t.backend, t.a);
    println!("expected phase on (1 - a, 1): {:.6} {:+.6}i", phase.re, phase.im);
    println!("identity error {:.2e}, phase error {:.2e}", t.identity_error, t.phase_error);
    Ok(())
}
