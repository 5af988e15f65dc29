mod common;

use common::*;

#[test]
fn invariant_measure_residuals() {
    invariant_measure_residual(1000, 50).unwrap();
}

#[test]
fn relabeling_permutes_invariant_measure() {
    permutation_equivariance(300).unwrap();
}

#[test]
fn classifiers_ignore_labels() {
    relabeling_invariance(300).unwrap();
}

#[test]
fn upper_triangular_ones_strictly_decrease() {
    triangular_strict_decrease(500).unwrap();
}

#[test]
fn coarsened_coefficients_increase() {
    coarsen_monotone(300).unwrap();
}

#[test]
fn ensembles_are_reproducible() {
    simulator_determinism(24).unwrap();
}

#[test]
fn constant_rates_are_their_own_bounds() {
    constant_bounds(200).unwrap();
}
