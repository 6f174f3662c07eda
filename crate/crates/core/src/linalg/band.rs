use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric banded matrix stored by diagonals: `diag[d][i] = A[i][i + d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBand<T> {
    n: usize,
    diag: Vec<Vec<T>>,
}

impl<T: Real> SymBand<T> {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        let diag = (0..=half_bandwidth)
            .map(|d| vec![T::zero(); n.saturating_sub(d)])
            .collect();
        SymBand { n, diag }
    }

    pub fn diagonal(values: &[T]) -> Self {
        SymBand {
            n: values.len(),
            diag: vec![values.to_vec()],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_bandwidth(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let d = j - i;
        if d < self.diag.len() {
            self.diag[d][i]
        } else {
            T::zero()
        }
    }

    /// Sets `A[i][j] = A[j][i] = v`; `|i - j|` must not exceed the bandwidth.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.diag[j - i][i] = v;
    }

    pub fn add_diagonal(&mut self, values: &[T]) {
        for (a, &v) in self.diag[0].iter_mut().zip(values) {
            *a = *a + v;
        }
    }

    /// `self + s * other`, widening the band if needed.
    pub fn add_scaled(&self, s: T, other: &SymBand<T>) -> SymBand<T> {
        let bw = self.half_bandwidth().max(other.half_bandwidth());
        let mut out = SymBand::zeros(self.n, bw);
        for (d, row) in out.diag.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                let a = self.diag.get(d).map_or(T::zero(), |x| x[i]);
                let b = other.diag.get(d).map_or(T::zero(), |x| x[i]);
                *v = a + s * b;
            }
        }
        out
    }

    pub fn scaled(&self, s: T) -> SymBand<T> {
        SymBand {
            n: self.n,
            diag: self
                .diag
                .iter()
                .map(|r| r.iter().map(|&v| s * v).collect())
                .collect(),
        }
    }

    pub fn abs_entries(&self) -> SymBand<T> {
        SymBand {
            n: self.n,
            diag: self
                .diag
                .iter()
                .map(|r| r.iter().map(|&v| Float::abs(v)).collect())
                .collect(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y: Vec<T> = self.diag[0].iter().zip(x).map(|(&a, &b)| a * b).collect();
        for (d, row) in self.diag.iter().enumerate().skip(1) {
            for (i, &a) in row.iter().enumerate() {
                y[i] = y[i] + a * x[i + d];
                y[i + d] = y[i + d] + a * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Banded Cholesky factor; fails if the matrix is not numerically positive definite.
    pub fn cholesky(&self) -> Result<BandCholesky<T>> {
        let n = self.n;
        let q = self.half_bandwidth();
        // l[i][k] = L[i][i - k], k = 0..=q
        let mut l = vec![vec![T::zero(); q + 1]; n];
        let scale = self.diag[0]
            .iter()
            .fold(T::zero(), |m, &v| m.max(Float::abs(v)));
        let floor = scale * T::epsilon() * T::from(16.0).unwrap();
        for i in 0..n {
            for k in (0..=q.min(i)).rev() {
                let j = i - k;
                let mut s = self.get(i, j);
                for m in 1..=(q - k).min(j) {
                    // L[i][j-m] * L[j][j-m]
                    s = s - l[i][k + m] * l[j][m];
                }
                if k == 0 {
                    if !(s > floor) {
                        return Err(Error::Factorization(format!(
                            "non-positive pivot {:e} at row {i}",
                            s.as_f64()
                        )));
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][k] = s / l[j][0];
                }
            }
        }
        Ok(BandCholesky { l, q })
    }
}

#[derive(Clone, Debug)]
pub struct BandCholesky<T> {
    l: Vec<Vec<T>>,
    q: usize,
}

impl<T: Real> BandCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.len();
        let q = self.q;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 1..=q.min(i) {
                s = s - self.l[i][k] * y[i - k];
            }
            y[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..=q.min(n - 1 - i) {
                s = s - self.l[i + k][k] * y[i + k];
            }
            y[i] = s / self.l[i][0];
        }
        y
    }

    /// Smallest diagonal entry of the factor, a cheap conditioning hint.
    pub fn min_pivot(&self) -> T {
        self.l.iter().fold(T::infinity(), |m, r| m.min(r[0]))
    }
}

/// LU factorisation with partial pivoting of a general banded matrix.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    // row i stores columns i - kl ..= i + kl + ku at offset j + kl - i
    rows: Vec<Vec<T>>,
    piv: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    /// Factorises the symmetric banded matrix `a` (treated as general).
    pub fn from_sym(a: &SymBand<T>) -> Result<Self> {
        let n = a.len();
        let q = a.half_bandwidth();
        let kl = q;
        let width = 2 * kl + q + 1;
        let mut rows = vec![vec![T::zero(); width]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            let lo = i.saturating_sub(q);
            let hi = (i + q).min(n - 1);
            for j in lo..=hi {
                row[j + kl - i] = a.get(i, j);
            }
        }
        let mut lu = BandLu {
            n,
            kl,
            width,
            rows,
            piv: vec![0; n],
        };
        lu.factor()?;
        Ok(lu)
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.rows[i][j + self.kl - i]
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.width - kl - 1; // kl + ku
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = Float::abs(self.at(k, k));
            for i in k + 1..=last {
                let v = Float::abs(self.at(i, k));
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return Err(Error::Factorization(format!(
                    "singular band matrix at column {k}"
                )));
            }
            self.piv[k] = p;
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.at(k, j);
                    let b = self.at(p, j);
                    self.rows[k][j + kl - k] = b;
                    self.rows[p][j + kl - p] = a;
                }
            }
            let pivot = self.at(k, k);
            for i in k + 1..=last {
                let m = self.at(i, k) / pivot;
                self.rows[i][k + kl - i] = m;
                if m != T::zero() {
                    for j in k + 1..=cmax {
                        let v = self.at(i, j) - m * self.at(k, j);
                        self.rows[i][j + kl - i] = v;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.width - kl - 1;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] = x[i] - self.at(i, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s = s - self.at(k, j) * x[j];
            }
            x[k] = s / self.at(k, k);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_like(n: usize) -> SymBand<f64> {
        let mut a = SymBand::zeros(n, 2);
        for i in 0..n {
            a.set(i, i, 6.0 + (i % 3) as f64);
            if i + 1 < n {
                a.set(i, i + 1, -2.0);
            }
            if i + 2 < n {
                a.set(i, i + 2, 0.5);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = laplace_like(40);
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = laplace_like(10);
        a.set(4, 4, -1.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn lu_solves_indefinite() {
        let mut a = laplace_like(50);
        for i in 0..50 {
            a.set(i, i, (i as f64 - 25.0) * 0.3 + 0.05);
        }
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.71).cos()).collect();
        let b = a.matvec(&x);
        let y = BandLu::from_sym(&a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-9, "{u} {v}");
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let a = laplace_like(7);
        let d = a.to_dense();
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let y = a.matvec(&x);
        for i in 0..7 {
            let s: f64 = (0..7).map(|j| d[i][j] * x[j]).sum();
            assert!((s - y[i]).abs() < 1e-14);
        }
    }
}
