//! Nonsingular M-matrix checks: leading minors, a positive vector with a
//! positive image, and eigenvalues, plus the three test modes.
//!
//! cargo run --example mmatrix

use nalgebra::DMatrix;
use regime_switch::mmatrix::{assess, is_nonsingular_mmatrix, MMatrixTest};

fn show(label: &str, a: &DMatrix<f64>) -> Result<(), Box<dyn std::error::Error>> {
    let c = is_nonsingular_mmatrix(a)?;
    println!("{label}: verdict {}", c.verdict);
    println!("  leading minors      {:?}", c.minors);
    println!("  positive vector     {:?}", c.positive_vector);
    println!("  min real eigenvalue {:?}", c.min_real_eigenvalue);
    for test in [MMatrixTest::Strict, MMatrixTest::Semipositive, MMatrixTest::LeadingMinors] {
        println!("  {:<15} {:?}", test.name(), assess(a, test)?.outcome);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    show("diagonally dominant", &DMatrix::from_row_slice(2, 2, &[3.0, -1.0, -2.0, 4.0]))?;
    show("singular side", &DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -1.0, 1.0]))?;
    // positive minors, but not a Z-matrix: only the minors test passes
    show("sign pattern broken", &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 1.0]))?;
    Ok(())
}
