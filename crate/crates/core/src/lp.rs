//! Dense phase-one simplex for small feasibility problems.
//!
//! Finds `z >= 0` with `G z >= h`. Each row becomes `G z - s = h` with a
//! surplus `s >= 0`; rows with `h_i > 0` also get an artificial variable.
//! Bland's rule prevents cycling.

use nalgebra::{DMatrix, DVector};

use crate::error::LpError;

const PIVOT_TOL: f64 = 1e-11;

/// Returns a feasible point, `None` when the system is infeasible.
pub fn find_nonnegative(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<Option<DVector<f64>>, LpError> {
    let (rows, vars) = g.shape();
    assert_eq!(h.len(), rows, "right-hand side length must match the row count");
    if rows == 0 {
        return Ok(Some(DVector::zeros(vars)));
    }

    // Row i reads sign_i * (G z - s) = |h_i|.
    let artificial: Vec<Option<usize>> = {
        let mut next = vars + rows;
        (0..rows)
            .map(|i| {
                if h[i] > 0.0 {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };
    let n_art = artificial.iter().flatten().count();
    let cols = vars + rows + n_art;
    let width = cols + 1;
    let mut t = vec![0.0; (rows + 1) * width];
    let mut basis = vec![0usize; rows];

    for i in 0..rows {
        let sign = if h[i] > 0.0 { 1.0 } else { -1.0 };
        let row = &mut t[i * width..(i + 1) * width];
        for j in 0..vars {
            row[j] = sign * g[(i, j)];
        }
        row[vars + i] = -sign;
        row[cols] = sign * h[i];
        match artificial[i] {
            Some(a) => {
                row[a] = 1.0;
                basis[i] = a;
            }
            None => basis[i] = vars + i,
        }
    }
    // objective row: minimise the sum of artificials, stored as reduced costs
    {
        let (body, obj) = t.split_at_mut(rows * width);
        for i in 0..rows {
            if artificial[i].is_some() {
                for j in 0..width {
                    obj[j] -= body[i * width + j];
                }
            }
        }
        for a in artificial.iter().flatten() {
            obj[*a] = 0.0;
        }
    }

    let scale = g.amax().max(h.amax()).max(1.0);
    let tol = PIVOT_TOL * scale;
    let pivot_cap = 50 * (rows + cols).max(100);
    let mut pivots = 0;
    loop {
        let obj = &t[rows * width..];
        let entering = (0..cols).find(|&j| obj[j] < -tol);
        let Some(e) = entering else { break };
        // ratio test; Bland breaks ties by smallest basis index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let a = t[i * width + e];
            if a > tol {
                let ratio = t[i * width + cols] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14 * lr.abs().max(1.0)
                            || (ratio <= lr + 1e-14 * lr.abs().max(1.0) && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        // phase one is bounded below by zero, so an entering column always has a pivot row
        let Some((r, _)) = leave else { break };
        pivot(&mut t, width, rows, r, e);
        basis[r] = e;
        pivots += 1;
        if pivots > pivot_cap {
            return Err(LpError::PivotLimit(pivot_cap));
        }
    }

    let infeasibility = -t[rows * width + cols];
    let rhs_scale = h.amax().max(1.0);
    // Backward-error test: rounding in the tableau grows with the basic
    // values, so large certificates leave a residual of order eps * |G| |z|.
    let basic_max = (0..rows).map(|i| t[i * width + cols].abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * (rhs_scale + g.amax() * basic_max) {
        return Ok(None);
    }
    let mut z = DVector::zeros(vars);
    for (i, &b) in basis.iter().enumerate() {
        if b < vars {
            z[b] = t[i * width + cols].max(0.0);
        }
    }
    let violation = (h - g * &z).max().max(0.0);
    if violation > 1e-7 * rhs_scale * (1.0 + z.amax()) {
        return Err(LpError::Verification(violation));
    }
    Ok(Some(z))
}

fn pivot(t: &mut [f64], width: usize, rows: usize, r: usize, e: usize) {
    let p = t[r * width + e];
    for j in 0..width {
        t[r * width + j] /= p;
    }
    let pivot_row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
    for i in 0..=rows {
        if i == r {
            continue;
        }
        let f = t[i * width + e];
        if f != 0.0 {
            let row = &mut t[i * width..(i + 1) * width];
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
            row[e] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(g: &[f64], rows: usize, h: &[f64]) -> Option<DVector<f64>> {
        let g = DMatrix::from_row_slice(rows, g.len() / rows, g);
        find_nonnegative(&g, &DVector::from_column_slice(h)).unwrap()
    }

    #[test]
    fn trivial_system_is_feasible() {
        let z = solve(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, -1.0]).unwrap();
        assert!(z.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn finds_point_in_box() {
        let g = [1.0, 0.0, 0.0, 1.0, -1.0, -1.0];
        let z = solve(&g, 3, &[1.0, 2.0, -5.0]).unwrap();
        assert!(z[0] >= 1.0 - 1e-12 && z[1] >= 2.0 - 1e-12 && z[0] + z[1] <= 5.0 + 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // z1 >= 2 and -z1 >= -1
        assert!(solve(&[1.0, -1.0], 2, &[2.0, -1.0]).is_none());
    }

    #[test]
    fn negative_orthant_row_is_infeasible() {
        // -z1 - z2 >= 1 has no nonnegative solution
        assert!(solve(&[-1.0, -1.0], 1, &[1.0]).is_none());
    }

    #[test]
    fn large_certificate_is_accepted() {
        // [[1, -1], [-1, 1 + e]] x >= 1 needs x of order 1/e
        let e = 1e-8;
        let z = solve(&[1.0, -1.0, -1.0, 1.0 + e], 2, &[1.0, 1.0]).unwrap();
        assert!(z.min() > 1e7);
        assert!(solve(&[1.0, -1.0, -1.0, 1.0 - e], 2, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn degenerate_system_terminates() {
        let g = [1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let z = solve(&g, 4, &[0.0, 0.0, 1.0, 3.0]).unwrap();
        assert!((z[0] - z[1]).abs() < 1e-9);
        assert!(z[2] >= 1.0 - 1e-9);
    }
}
