//! Small dense symmetric solves for the local normal equations.

/// Solves `A x = b` for a symmetric positive (semi-)definite `N x N` matrix by
/// an `LDL^T` factorisation without pivoting. Returns the solution and the
/// smallest diagonal pivot `d_k`; the caller decides whether the pivot is
/// large enough to trust the solution.
pub(crate) fn solve_symmetric<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> ([f64; N], f64) {
    let mut l = [[0.0; N]; N];
    let mut d = [0.0; N];
    let mut min_pivot = f64::INFINITY;
    for j in 0..N {
        let mut dj = a[j][j];
        for k in 0..j {
            dj -= l[j][k] * l[j][k] * d[k];
        }
        d[j] = dj;
        min_pivot = min_pivot.min(dj);
        for i in (j + 1)..N {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k] * d[k];
            }
            l[i][j] = if dj != 0.0 { v / dj } else { 0.0 };
        }
    }
    if !(min_pivot > 0.0) {
        return ([f64::NAN; N], min_pivot);
    }
    let mut y = *b;
    for i in 0..N {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
    }
    for i in 0..N {
        y[i] /= d[i];
    }
    for i in (0..N).rev() {
        for k in (i + 1)..N {
            y[i] -= l[k][i] * y[k];
        }
    }
    (y, min_pivot)
}

pub(crate) fn trace<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    (0..N).map(|i| a[i][i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let x = [1.0, -2.0, 0.5];
        let b = [
            4.0 - 2.0 + 0.25,
            1.0 - 6.0 + 0.1,
            0.5 - 0.4 + 1.0,
        ];
        let (sol, pivot) = solve_symmetric(&a, &b);
        assert!(pivot > 1.0);
        for i in 0..3 {
            assert!((sol[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_reports_zero_pivot() {
        let a = [[1.0, 1.0], [1.0, 1.0]];
        let (sol, pivot) = solve_symmetric(&a, &[1.0, 1.0]);
        assert_eq!(pivot, 0.0);
        assert!(sol[0].is_nan());
    }
}
