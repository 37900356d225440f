//! Dense Gaussian elimination over any [`Scalar`], exact for rationals.

use crate::error::{DuelError, Result};
use crate::scalar::Scalar;

/// Solves `A x = b` for every right-hand side column in `rhs`.
/// `matrix` is row-major, `n × n`; `rhs` holds `k` columns per row.
pub fn solve<T: Scalar>(mut matrix: Vec<Vec<T>>, mut rhs: Vec<Vec<T>>) -> Result<Vec<Vec<T>>> {
    let n = matrix.len();
    debug_assert!(matrix.iter().all(|row| row.len() == n));
    debug_assert_eq!(rhs.len(), n);
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !matrix[r][col].is_zero())
            .max_by(|&a, &b| {
                matrix[a][col]
                    .abs()
                    .partial_cmp(&matrix[b][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or(DuelError::SingularSystem)?;
        matrix.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = T::one() / matrix[col][col].clone();
        for r in col + 1..n {
            if matrix[r][col].is_zero() {
                continue;
            }
            let factor = matrix[r][col].clone() * inv.clone();
            for c in col..n {
                let delta = factor.clone() * matrix[col][c].clone();
                matrix[r][c] = matrix[r][c].clone() - delta;
            }
            for c in 0..rhs[r].len() {
                let delta = factor.clone() * rhs[col][c].clone();
                rhs[r][c] = rhs[r][c].clone() - delta;
            }
        }
    }
    for col in (0..n).rev() {
        for c in 0..rhs[col].len() {
            let mut acc = rhs[col][c].clone();
            for k in col + 1..n {
                acc = acc - matrix[col][k].clone() * rhs[k][c].clone();
            }
            rhs[col][c] = acc / matrix[col][col].clone();
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0f64, 1.0], vec![1.0, 3.0]];
        let b = vec![vec![3.0], vec![5.0]];
        let x = solve(a, b).unwrap();
        assert!((x[0][0] - 0.8).abs() < 1e-12);
        assert!((x[1][0] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn exact_over_rationals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let a = vec![vec![r(0, 1), r(1, 1)], vec![r(1, 2), r(1, 3)]];
        let b = vec![vec![r(1, 1)], vec![r(1, 1)]];
        let x = solve(a, b).unwrap();
        assert_eq!(x[0][0], r(4, 3));
        assert_eq!(x[1][0], r(1, 1));
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(solve(a, vec![vec![1.0], vec![1.0]]), Err(DuelError::SingularSystem));
    }
}
