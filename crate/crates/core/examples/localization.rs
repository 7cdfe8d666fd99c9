//! Half-line states localized in `X` around two centres.
//!
//! Spreading the profile over a longer stretch of `λ` drives `ΔX` towards zero.

use fuzzyspec::ops::build_halfline_derivative;
use fuzzyspec::{fuzzyb_localizing_sequence, Result};

fn main() -> Result<()> {
    let op = build_halfline_derivative(1024, 32.0)?;
    let seq = fuzzyb_localizing_sequence(&op, 6)?;
    println!("centres {:?}", seq.centers);
    for (w, dx) in seq.widths.iter().zip(&seq.dx_values) {
        println!("support width {w:.4e}  dx {dx:.4e}");
    }
    println!("overlap of the last pair {:.3e}", seq.final_overlap());
    Ok(())
}
