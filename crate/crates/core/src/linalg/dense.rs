use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{cst, Real};

/// Solves `A x = b` for a small dense matrix by Gaussian elimination with partial pivoting.
pub fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, &v| m.max(Float::abs(v)));
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                Float::abs(a[i][k])
                    .partial_cmp(&Float::abs(a[j][k]))
                    .unwrap()
            })
            .unwrap();
        if !(Float::abs(a[p][k]) > scale * T::epsilon()) {
            return Err(Error::Factorization(format!("singular {n}x{n} system")));
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] = a[i][j] - m * a[k][j];
            }
            b[i] = b[i] - m * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s = s - a[k][j] * b[j];
        }
        b[k] = s / a[k][k];
    }
    Ok(b)
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// `d` is the diagonal, `e[i] = T[i][i+1]`. Returns eigenvalues ascending and the
/// matching orthonormal eigenvectors (`vectors[i]` belongs to `values[i]`).
pub fn tridiagonal_eigen<T: Real>(d: &[T], e: &[T]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<T> = (0..n)
        .map(|i| if i + 1 < n { e[i] } else { T::zero() })
        .collect();
    // z[k][i]: component k of eigenvector i
    let mut z = vec![vec![T::zero(); n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let two = cst::<T>(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = Float::abs(d[m]) + Float::abs(d[m + 1]);
                if Float::abs(e[m]) <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence {
                    what: "tridiagonal QL",
                    iterations: iter,
                    residual: e[l].as_f64(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r } else { -r });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let values = idx.iter().map(|&i| d[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| z.iter().map(|row| row[i]).collect())
        .collect();
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn dense_solve() {
        let a = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ];
        let x = solve_dense(a.clone(), vec![5.0, 3.0, 6.0]).unwrap();
        for i in 0..3 {
            let s: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((s - [5.0, 3.0, 6.0][i]).abs() < 1e-14);
        }
        assert!(solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn tridiagonal_matches_nalgebra() {
        let n = 30;
        let d: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let e: Vec<f64> = (0..n - 1)
            .map(|i| 0.3 + ((i * 5) % 3) as f64 * 0.2)
            .collect();
        let (vals, vecs) = tridiagonal_eigen(&d, &e).unwrap();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = d[i];
            if i + 1 < n {
                m[(i, i + 1)] = e[i];
                m[(i + 1, i)] = e[i];
            }
        }
        let mut oracle: Vec<f64> = m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in vals.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        for (lam, v) in vals.iter().zip(&vecs) {
            let x = nalgebra::DVector::from_vec(v.clone());
            let r = &m * &x - x.clone() * *lam;
            assert!(r.norm() < 1e-12);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }
}
