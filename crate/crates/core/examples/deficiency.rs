//! Deficiency indices and classification for the built-in model families.

use fuzzyspec::ops::{build_halfline_derivative, build_interval_derivative, build_matrix_model, random_hermitian, Backend};
use fuzzyspec::{deficiency_spaces, Result};

fn main() -> Result<()> {
    let models = [
        ("interval, 2 copies", build_interval_derivative(2, 256, Backend::FiniteDifference)?),
        ("half-line", build_halfline_derivative(512, 16.0)?),
        ("6x6 matrix, codim 2", build_matrix_model(&random_hermitian(6, 1), 2)?),
    ];
    for (name, op) in &models {
        let rep = deficiency_spaces(op)?;
        println!(
            "{name:>22}: (r+, r-) = ({}, {})  {}  via {}",
            rep.r_plus, rep.r_minus, rep.classification, rep.method
        );
        for w in &rep.warnings {
            println!("{:>24}{w}", "");
        }
    }
    Ok(())
}
