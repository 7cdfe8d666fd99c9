//! Unitaries from a few extensions of a matrix model generate the full matrix algebra.

use fuzzyspec::flows::generated_algebra_dimension_seeded;
use fuzzyspec::ops::{build_matrix_model, random_hermitian};
use fuzzyspec::Result;

fn main() -> Result<()> {
    for (n, codim) in [(4, 1), (6, 2)] {
        let op = build_matrix_model(&random_hermitian(n, 17), codim)?;
        let rep = generated_algebra_dimension_seeded(&op, 6, 3, 5)?;
        println!("n = {n}, codim = {codim}: span {} of {} by word length {:?}", rep.dimension, rep.target, rep.by_length);
    }
    Ok(())
}
