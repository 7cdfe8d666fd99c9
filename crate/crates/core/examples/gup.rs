//! Random states of the `[x, p] = iħ(1 + βp²)` model never beat the generalized bound.

use fuzzyspec::ops::build_beta_algebra;
use fuzzyspec::{min_uncertainty, sample_gup, Result};

fn main() -> Result<()> {
    let model = build_beta_algebra(1.0, 20.0, 512)?;
    let rep = sample_gup(&model, 2000, 7);
    println!("{} states, {} violations, smallest margin {:.3e}", rep.n_states, rep.violations, rep.min_margin);
    let best = min_uncertainty(&model.x_op, 0.0)?;
    println!("min dx at <x> = 0: {:.6} (cutoff closed form {:.6})", best.dx_min, model.truncated_min_dx());
    Ok(())
}
