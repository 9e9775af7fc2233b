//! Small dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Determinant stored as `exp(ln_abs + i * phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> C64 {
        C64::from_polar(self.ln_abs.exp(), self.phase)
    }

    /// `det(self) / det(other)`, finite whenever `other` is nonzero.
    pub fn ratio(&self, other: &LogDet) -> C64 {
        C64::from_polar((self.ln_abs - other.ln_abs).exp(), self.phase - other.phase)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x % TAU;
    if y <= -PI {
        y += TAU;
    } else if y > PI {
        y -= TAU;
    }
    y
}

/// Log-determinant by LU factorisation with partial pivoting.
pub fn log_det(m: &CMatrix) -> LogDet {
    assert!(m.is_square(), "log_det needs a square matrix");
    let n = m.nrows();
    let mut a = m.clone();
    let mut ln_abs = 0.0;
    let mut phase = 0.0;
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs == 0.0 {
            return LogDet {
                ln_abs: f64::NEG_INFINITY,
                phase: 0.0,
            };
        }
        if pivot_row != col {
            a.swap_rows(pivot_row, col);
            phase += std::f64::consts::PI;
        }
        let pivot = a[(col, col)];
        ln_abs += pivot_abs.ln();
        phase += pivot.arg();
        for r in col + 1..n {
            let factor = a[(r, col)] / pivot;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for c in col + 1..n {
                let sub = factor * a[(col, c)];
                a[(r, c)] -= sub;
            }
        }
    }
    LogDet {
        ln_abs,
        phase: wrap_phase(phase),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value divided by the largest; 0 for an empty matrix
/// or an all-zero one.
pub fn relative_sigma_min(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Orthonormal (Euclidean) basis of the right null space: right singular
/// vectors whose singular value is below `rel_tol * sigma_max`.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    // pad to square so every right singular vector is returned
    let mut sq = CMatrix::zeros(n.max(m.nrows()), n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= rel_tol * sigma_max)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect()
}

/// Solves `m x = b`; `None` if `m` is singular.
pub fn solve(m: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().solve(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_det_matches_direct_determinant() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 2.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, -1.0),
                C64::new(2.0, 0.0),
                C64::new(-1.0, 1.0),
                C64::new(3.0, 0.5),
                C64::new(0.0, 0.0),
                C64::new(4.0, -2.0),
                C64::new(1.0, 1.0),
            ],
        );
        let direct = m.clone().determinant();
        let ld = log_det(&m);
        assert_relative_eq!((ld.value() - direct).norm(), 0.0, epsilon = 1e-12 * direct.norm());
    }

    #[test]
    fn log_det_of_singular_is_zero() {
        let m = CMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        let ld = log_det(&m);
        assert!(ld.is_zero() || ld.ln_abs < -30.0);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0)]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-12);
    }

    #[test]
    fn wrap_phase_range() {
        use std::f64::consts::PI;
        for x in [-7.0, -PI, 0.0, PI, 3.5, 100.0] {
            let y = wrap_phase(x);
            assert!(y > -PI - 1e-15 && y <= PI + 1e-15);
            assert!(((x - y) / (2.0 * PI)).fract().abs() < 1e-9 || ((x - y) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }
}
