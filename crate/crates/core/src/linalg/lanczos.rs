//! Lowest eigenpairs of `A x = λ B x` restricted to `{x : Cᵀx = 0}`.
//!
//! `A` is banded plus a non-negative low-rank term, `B` is banded SPD. The solver
//! runs shift-invert Lanczos in the `B` inner product with full
//! reorthogonalisation; the constraints enter through the saddle-point solve, so
//! every Krylov vector stays in the admissible subspace.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::band::{BandCholesky, SymBand};
use super::dense::{solve_dense, tridiagonal_eigen};
use crate::error::{Error, Result};
use crate::scalar::{cst, Real};

/// `coef · vec vecᵀ` with `coef ≥ 0`.
#[derive(Clone, Debug)]
pub struct RankOne<T> {
    pub coef: T,
    pub vec: Vec<T>,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            k: 6,
            tol: 1e-12,
            max_iter: 400,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair<T> {
    pub value: T,
    /// `B`-normalised eigenvector.
    pub vector: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    for (u, &v) in y.iter_mut().zip(x) {
        *u = *u + a * v;
    }
}

/// Inverse of `A - σB` (with its low-rank part) on the constrained subspace.
struct ShiftInvert<'a, T> {
    chol: BandCholesky<T>,
    low: &'a [RankOne<T>],
    low_solved: Vec<Vec<T>>,
    cap: Vec<Vec<T>>,
    cons: &'a [Vec<T>],
    cons_solved: Vec<Vec<T>>,
    schur: Vec<Vec<T>>,
}

impl<'a, T: Real> ShiftInvert<'a, T> {
    fn new(
        a: &SymBand<T>,
        low: &'a [RankOne<T>],
        b: &SymBand<T>,
        cons: &'a [Vec<T>],
        shift_hint: T,
    ) -> Result<(Self, T)> {
        let mut sigma = shift_hint;
        let mut chol = None;
        for _ in 0..40 {
            match a.add_scaled(-sigma, b).cholesky() {
                Ok(c) => {
                    chol = Some(c);
                    break;
                }
                Err(_) => sigma = sigma - (Float::abs(sigma) + T::one()),
            }
        }
        let chol =
            chol.ok_or_else(|| Error::Factorization("no positive definite shift found".into()))?;
        let mut op = ShiftInvert {
            chol,
            low,
            low_solved: Vec::new(),
            cap: Vec::new(),
            cons,
            cons_solved: Vec::new(),
            schur: Vec::new(),
        };
        op.low_solved = low.iter().map(|t| op.chol.solve(&t.vec)).collect();
        op.cap = (0..low.len())
            .map(|i| {
                (0..low.len())
                    .map(|j| {
                        let mut v = dot(&low[i].vec, &op.low_solved[j]);
                        if i == j {
                            v = v + T::one() / low[i].coef;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        op.cons_solved = cons
            .iter()
            .map(|c| op.solve_full(c))
            .collect::<Result<_>>()?;
        op.schur = (0..cons.len())
            .map(|i| {
                (0..cons.len())
                    .map(|j| dot(&cons[i], &op.cons_solved[j]))
                    .collect()
            })
            .collect();
        Ok((op, sigma))
    }

    fn solve_full(&self, y: &[T]) -> Result<Vec<T>> {
        let mut x = self.chol.solve(y);
        if !self.low.is_empty() {
            let rhs: Vec<T> = self.low.iter().map(|t| dot(&t.vec, &x)).collect();
            let c = solve_dense(self.cap.clone(), rhs)?;
            for (cj, zj) in c.iter().zip(&self.low_solved) {
                axpy(&mut x, -*cj, zj);
            }
        }
        Ok(x)
    }

    fn apply(&self, y: &[T]) -> Result<Vec<T>> {
        let mut x = self.solve_full(y)?;
        if !self.cons.is_empty() {
            let rhs: Vec<T> = self.cons.iter().map(|c| dot(c, &x)).collect();
            let mu = solve_dense(self.schur.clone(), rhs)?;
            for (m, z) in mu.iter().zip(&self.cons_solved) {
                axpy(&mut x, -*m, z);
            }
        }
        Ok(x)
    }
}

/// Rejects constraint sets whose normalised Gram matrix is numerically singular.
pub fn check_constraint_rank<T: Real>(cons: &[Vec<T>]) -> Result<()> {
    let k = cons.len();
    let norms: Vec<T> = cons.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut g: Vec<Vec<T>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| dot(&cons[i], &cons[j]) / (norms[i] * norms[j]))
                .collect()
        })
        .collect();
    // Cholesky with pivot inspection
    for j in 0..k {
        if !(norms[j] > T::zero()) {
            return Err(Error::RankDeficient { pivot: 0.0 });
        }
        let mut s = g[j][j];
        for m in 0..j {
            s = s - g[j][m] * g[j][m];
        }
        if !(s > cst(1e-10)) {
            return Err(Error::RankDeficient { pivot: s.as_f64() });
        }
        let d = s.sqrt();
        g[j][j] = d;
        for i in j + 1..k {
            let mut t = g[i][j];
            for m in 0..j {
                t = t - g[i][m] * g[j][m];
            }
            g[i][j] = t / d;
        }
    }
    Ok(())
}

/// Lowest `opts.k` eigenpairs, ascending. `shift_hint` should lie below the spectrum.
pub fn lowest_eigenpairs<T: Real>(
    a: &SymBand<T>,
    low: &[RankOne<T>],
    b: &SymBand<T>,
    cons: &[Vec<T>],
    shift_hint: T,
    opts: LanczosOptions,
) -> Result<Vec<EigenPair<T>>> {
    let n = a.len();
    if low.iter().any(|t| !(t.coef > T::zero())) {
        return Err(Error::Invalid(
            "low-rank coefficients must be positive".into(),
        ));
    }
    check_constraint_rank(cons)?;
    let dim = n.saturating_sub(cons.len());
    let k = opts.k.min(dim);
    if k == 0 {
        return Ok(Vec::new());
    }
    let (op, sigma) = ShiftInvert::new(a, low, b, cons, shift_hint)?;
    let b_norm = |x: &[T]| dot(x, &b.matvec(x)).max(T::zero()).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<T> = (0..n).map(|_| cst(rng.random_range(-1.0..1.0))).collect();
    let mut q = op.apply(&b.matvec(&start))?;
    let nq = b_norm(&q);
    q.iter_mut().for_each(|v| *v = *v / nq);

    let max_iter = opts.max_iter.min(dim).max(k);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(max_iter);
    let mut basis_b: Vec<Vec<T>> = Vec::with_capacity(max_iter);
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let tol = cst::<T>(opts.tol);
    let mut ritz: Option<(Vec<T>, Vec<Vec<T>>)> = None;
    let mut last_res = f64::NAN;

    for j in 0..max_iter {
        let bq = b.matvec(&q);
        basis.push(q);
        basis_b.push(bq);
        let qj = basis.last().unwrap();
        let mut w = op.apply(&basis_b[j])?;
        let a_j = dot(&w, &basis_b[j]);
        axpy(&mut w, -a_j, qj);
        if j > 0 {
            axpy(&mut w, -beta[j - 1], &basis[j - 1]);
        }
        for _ in 0..2 {
            for (v, bv) in basis.iter().zip(&basis_b) {
                let c = dot(&w, bv);
                axpy(&mut w, -c, v);
            }
        }
        alpha.push(a_j);
        let b_j = b_norm(&w);
        let m = j + 1;
        let exhausted = !(b_j > T::epsilon() * Float::abs(a_j) * cst(10.0));
        if m >= k && (m % 5 == 0 || exhausted || m == max_iter) {
            let (vals, vecs) = tridiagonal_eigen(&alpha, &beta)?;
            // largest θ ↔ smallest λ
            let top: Vec<usize> = (0..m).rev().take(k).collect();
            let mut worst = T::zero();
            for &i in &top {
                let est = Float::abs(b_j * vecs[i][m - 1]) / Float::abs(vals[i]);
                worst = worst.max(est);
            }
            last_res = worst.as_f64();
            let done = worst <= tol || exhausted || m == max_iter;
            if done {
                ritz = Some((
                    top.iter().map(|&i| vals[i]).collect(),
                    top.iter().map(|&i| vecs[i].clone()).collect(),
                ));
                if worst > tol && !exhausted {
                    return Err(Error::NonConvergence {
                        what: "Lanczos eigensolver",
                        iterations: m,
                        residual: last_res,
                    });
                }
                break;
            }
        }
        if exhausted {
            break;
        }
        beta.push(b_j);
        w.iter_mut().for_each(|v| *v = *v / b_j);
        q = w;
    }
    let (thetas, ys) = ritz.ok_or(Error::NonConvergence {
        what: "Lanczos eigensolver",
        iterations: max_iter,
        residual: last_res,
    })?;
    let mut pairs: Vec<EigenPair<T>> = thetas
        .iter()
        .zip(&ys)
        .map(|(&theta, y)| {
            let mut x = vec![T::zero(); n];
            for (c, v) in y.iter().zip(&basis) {
                axpy(&mut x, *c, v);
            }
            let nx = b_norm(&x);
            x.iter_mut().for_each(|v| *v = *v / nx);
            EigenPair {
                value: sigma + T::one() / theta,
                vector: x,
            }
        })
        .collect();
    pairs.sort_by(|p, q| p.value.partial_cmp(&q.value).unwrap());
    Ok(pairs)
}
