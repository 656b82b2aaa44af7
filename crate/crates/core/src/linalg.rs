//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

/// Real symmetric eigen-decomposition with deterministic ordering and phases.
///
/// Eigenvalues ascend; ties are broken by the index of the largest eigenvector
/// component. Each eigenvector's largest-magnitude component is made positive.
pub fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let lead: Vec<usize> = (0..n)
        .map(|k| {
            let col = eig.eigenvectors.column(k);
            let mut best = 0;
            for i in 1..n {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            best
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(lead[a].cmp(&lead[b]))
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let sign = if eig.eigenvectors[(lead[src], src)] < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..n {
            vectors[(i, dst)] = sign * eig.eigenvectors[(i, src)];
        }
    }
    (values, vectors)
}

/// Largest absolute deviation from symmetry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub type C4 = [[Complex64; 4]; 4];

pub fn c4_identity() -> C4 {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn c4_mul(a: &C4, b: &C4) -> C4 {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn c4_norm1(a: &C4) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` for a 4×4 complex matrix by scaling and squaring with a Taylor core.
pub fn c4_expm(a: &C4) -> C4 {
    let norm = c4_norm1(a);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let mut x = *a;
    for row in x.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    let mut result = c4_identity();
    let mut term = c4_identity();
    for k in 1..=20 {
        term = c4_mul(&term, &x);
        let inv = 1.0 / k as f64;
        let mut size = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                term[i][j] *= inv;
                result[i][j] += term[i][j];
                size = size.max(term[i][j].norm());
            }
        }
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = c4_mul(&result, &result);
    }
    result
}

/// 2-norm condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number(m: &Matrix4<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `m x = b` by LU with partial pivoting; `None` when singular.
pub fn solve4(m: &Matrix4<f64>, b: &Vector4<f64>) -> Option<Vector4<f64>> {
    m.lu().solve(b)
}

/// Dense row-major complex matrix times vector, accumulating into `out`.
#[inline]
pub fn matvec_into(a: &[Complex64], n: usize, x: &[Complex64], out: &mut [Complex64]) {
    debug_assert_eq!(a.len(), n * n);
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let row = &a[i * n..(i + 1) * n];
        let mut re = 0.0;
        let mut im = 0.0;
        for (r, v) in row.iter().zip(x) {
            re += r.re * v.re - r.im * v.im;
            im += r.re * v.im + r.im * v.re;
        }
        *o = Complex64::new(re, im);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_and_sign_fixed() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -1.0]);
        let (w, v) = symmetric_eigen(m.clone());
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        for k in 0..3 {
            let col = v.column(k);
            let lead = col.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(lead > 0.0);
            let r = &m * col - col * w[k];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-i θ σx) on the first two levels.
        let th = 0.7;
        let mut a = [[Complex64::new(0.0, 0.0); 4]; 4];
        a[0][1] = Complex64::new(0.0, -th);
        a[1][0] = Complex64::new(0.0, -th);
        let e = c4_expm(&a);
        assert!((e[0][0] - Complex64::new(libm::cos(th), 0.0)).norm() < 1e-15);
        assert!((e[0][1] - Complex64::new(0.0, -libm::sin(th))).norm() < 1e-15);
        assert!((e[2][2] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn condition_of_singular_matrix_is_huge() {
        let m = Matrix4::new(
            1.0, 2.0, 0.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        );
        assert!(condition_number(&m) > 1e15);
        assert!((condition_number(&Matrix4::identity()) - 1.0).abs() < 1e-14);
    }
}
