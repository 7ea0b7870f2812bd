//! Dense complex kernels: pivoted LU for the small element blocks and
//! Householder least squares for the reproduction-of-linears fits.
//!
//! All matrices are row-major slices.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::{Cplx, Real};

/// LU factorization `P A = L U` with row partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<Cplx<T>>,
    perm: Vec<usize>,
}

/// Pivot failure in a dense factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPivot {
    pub column: usize,
}

impl<T: Real> DenseLu<T> {
    /// Factor an `n x n` row-major matrix. Fails only on an exactly zero pivot
    /// column; callers judge near-singularity from [`DenseLu::pivot_range`].
    pub fn factor(n: usize, mut a: Vec<Cplx<T>>) -> Result<Self, ZeroPivot> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm();
            for i in (k + 1)..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == T::zero() {
                return Err(ZeroPivot { column: k });
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let inv = a[k * n + k].inv();
            for i in (k + 1)..n {
                let l = a[i * n + k] * inv;
                a[i * n + k] = l;
                if l.is_zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= l * u;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest and largest absolute pivot.
    pub fn pivot_range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for k in 0..self.n {
            let v = self.lu[k * self.n + k].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Cplx<T>]) {
        let n = self.n;
        let mut x: Vec<Cplx<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solve `A^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [Cplx<T>]) {
        let n = self.n;
        // A^H = U^H L^H P, so solve U^H y = b, L^H z = y, x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }

    /// Right-multiply a row-major `m x n` matrix by `A^{-1}` in place (`X <- X A^{-1}`).
    pub fn solve_right_in_place(&self, m: usize, x: &mut [Cplx<T>]) {
        let n = self.n;
        debug_assert_eq!(x.len(), m * n);
        // X A^{-1} = (A^{-H} X^H)^H, applied row by row.
        let mut row = vec![Complex::zero(); n];
        for r in 0..m {
            for j in 0..n {
                row[j] = x[r * n + j].conj();
            }
            self.solve_adjoint_in_place(&mut row);
            for j in 0..n {
                x[r * n + j] = row[j].conj();
            }
        }
    }

    /// Left-multiply a row-major `n x m` matrix by `A^{-1}` in place.
    pub fn solve_left_in_place(&self, m: usize, x: &mut [Cplx<T>]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n * m);
        let mut col = vec![Complex::zero(); n];
        for c in 0..m {
            for i in 0..n {
                col[i] = x[i * m + c];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                x[i * m + c] = col[i];
            }
        }
    }
}

/// `c -= a * b` for row-major `a: m x k`, `b: k x n`, `c: m x n`.
pub fn gemm_sub<T: Real>(m: usize, k: usize, n: usize, a: &[Cplx<T>], b: &[Cplx<T>], c: &mut [Cplx<T>]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail.is_zero() {
                continue;
            }
            let brow = &b[l * n..(l + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for (cij, &blj) in crow.iter_mut().zip(brow) {
                *cij -= ail * blj;
            }
        }
    }
}

/// `y += a * x` for row-major `a: m x n`.
pub fn gemv_add<T: Real>(m: usize, n: usize, a: &[Cplx<T>], x: &[Cplx<T>], y: &mut [Cplx<T>]) {
    for i in 0..m {
        let mut s = Complex::zero();
        for j in 0..n {
            s += a[i * n + j] * x[j];
        }
        y[i] += s;
    }
}

/// `y += a^H * x` for row-major `a: m x n` (so `x` has length `m`, `y` length `n`).
pub fn gemv_adjoint_add<T: Real>(m: usize, n: usize, a: &[Cplx<T>], x: &[Cplx<T>], y: &mut [Cplx<T>]) {
    for i in 0..m {
        let xi = x[i];
        if xi.is_zero() {
            continue;
        }
        for j in 0..n {
            y[j] += a[i * n + j].conj() * xi;
        }
    }
}

/// Least-squares failure: the columns (or rows, for wide systems) are
/// numerically dependent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDeficient {
    pub rank: usize,
    pub needed: usize,
}

/// Minimum-norm least-squares solution of `A x ≈ b` for a row-major `m x n`
/// matrix. Uses Householder QR of `A` when `m >= n` and of `A^H` otherwise.
///
/// `rel_tol` is the threshold on `|R_kk| / max |R_jj|` below which the system
/// is declared rank deficient.
pub fn least_squares<T: Real>(
    m: usize,
    n: usize,
    a: &[Cplx<T>],
    b: &[Cplx<T>],
    rel_tol: T,
) -> Result<Vec<Cplx<T>>, RankDeficient> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    if m >= n {
        let qr = HouseholderQr::factor(m, n, a.to_vec());
        qr.check_rank(rel_tol)?;
        let mut rhs = b.to_vec();
        qr.apply_qh(&mut rhs);
        let mut x = rhs[..n].to_vec();
        qr.solve_upper(&mut x);
        Ok(x)
    } else {
        // A^H = Q R, A = R^H Q^H; min-norm x = Q R^{-H} b.
        let mut ah = vec![Complex::zero(); n * m];
        for i in 0..m {
            for j in 0..n {
                ah[j * m + i] = a[i * n + j].conj();
            }
        }
        let qr = HouseholderQr::factor(n, m, ah);
        qr.check_rank(rel_tol)?;
        let mut y = b.to_vec();
        qr.solve_upper_adjoint(&mut y);
        let mut x = vec![Complex::zero(); n];
        x[..m].copy_from_slice(&y);
        qr.apply_q(&mut x);
        Ok(x)
    }
}

struct HouseholderQr<T> {
    m: usize,
    n: usize,
    /// R in the upper triangle, Householder vectors below (implicit unit head).
    qr: Vec<Cplx<T>>,
    tau: Vec<Cplx<T>>,
}

impl<T: Real> HouseholderQr<T> {
    fn factor(m: usize, n: usize, mut a: Vec<Cplx<T>>) -> Self {
        let mut tau = vec![Complex::zero(); n];
        for k in 0..n.min(m) {
            let mut norm2 = T::zero();
            for i in k..m {
                norm2 += a[i * n + k].norm_sqr();
            }
            let norm = norm2.sqrt();
            if norm == T::zero() {
                continue;
            }
            let akk = a[k * n + k];
            let phase = if akk.norm() == T::zero() {
                Complex::new(T::one(), T::zero())
            } else {
                akk / akk.norm()
            };
            let alpha = -phase * norm;
            let v0 = akk - alpha;
            for i in (k + 1)..m {
                a[i * n + k] = a[i * n + k] / v0;
            }
            // H = I - tau v v^H with v = [1, a(k+1.., k)].
            let t = (alpha - akk) / alpha;
            tau[k] = t;
            a[k * n + k] = alpha;
            for j in (k + 1)..n {
                let mut s = a[k * n + j];
                for i in (k + 1)..m {
                    s += a[i * n + k].conj() * a[i * n + j];
                }
                let s = s * t.conj();
                a[k * n + j] -= s;
                for i in (k + 1)..m {
                    let vik = a[i * n + k];
                    a[i * n + j] -= vik * s;
                }
            }
        }
        Self { m, n, qr: a, tau }
    }

    fn check_rank(&self, rel_tol: T) -> Result<(), RankDeficient> {
        let k = self.n.min(self.m);
        let mut max = T::zero();
        for j in 0..k {
            max = max.max(self.qr[j * self.n + j].norm());
        }
        let rank = (0..k)
            .filter(|&j| self.qr[j * self.n + j].norm() > rel_tol * max)
            .count();
        if rank < k || max == T::zero() {
            return Err(RankDeficient { rank, needed: k });
        }
        Ok(())
    }

    /// `b <- Q^H b`.
    fn apply_qh(&self, b: &mut [Cplx<T>]) {
        let (m, n) = (self.m, self.n);
        for k in 0..n.min(m) {
            let mut s = b[k];
            for i in (k + 1)..m {
                s += self.qr[i * n + k].conj() * b[i];
            }
            let s = s * self.tau[k].conj();
            b[k] -= s;
            for i in (k + 1)..m {
                b[i] -= self.qr[i * n + k] * s;
            }
        }
    }

    /// `b <- Q b`.
    fn apply_q(&self, b: &mut [Cplx<T>]) {
        let (m, n) = (self.m, self.n);
        for k in (0..n.min(m)).rev() {
            let mut s = b[k];
            for i in (k + 1)..m {
                s += self.qr[i * n + k].conj() * b[i];
            }
            let s = s * self.tau[k];
            b[k] -= s;
            for i in (k + 1)..m {
                b[i] -= self.qr[i * n + k] * s;
            }
        }
    }

    /// Solve `R x = b` with the leading `n x n` block of R.
    fn solve_upper(&self, x: &mut [Cplx<T>]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.qr[i * n + j] * x[j];
            }
            x[i] = s / self.qr[i * n + i];
        }
    }

    /// Solve `R^H y = b`.
    fn solve_upper_adjoint(&self, y: &mut [Cplx<T>]) {
        let n = self.n;
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.qr[j * n + i].conj() * y[j];
            }
            y[i] = s / self.qr[i * n + i].conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Complex::new(re, im)
    }

    fn sample(n: usize, seed: u64) -> Vec<Cplx<f64>> {
        // small deterministic LCG; keeps the unit tests free of rand
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
                c(a, b)
            })
            .collect()
    }

    fn matvec(m: usize, n: usize, a: &[Cplx<f64>], x: &[Cplx<f64>]) -> Vec<Cplx<f64>> {
        let mut y = vec![Complex::zero(); m];
        gemv_add(m, n, a, x, &mut y);
        y
    }

    #[test]
    fn lu_solves_and_adjoint_solves() {
        let n = 6;
        let a = sample(n * n, 3);
        let x = sample(n, 5);
        let b = matvec(n, n, &a, &x);
        let lu = DenseLu::factor(n, a.clone()).unwrap();
        let mut y = b.clone();
        lu.solve_in_place(&mut y);
        for (u, v) in y.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
        let mut bh = vec![Complex::zero(); n];
        gemv_adjoint_add(n, n, &a, &x, &mut bh);
        lu.solve_adjoint_in_place(&mut bh);
        for (u, v) in bh.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn lu_rejects_zero_column() {
        let a = vec![c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)];
        assert_eq!(DenseLu::factor(2, a).unwrap_err(), ZeroPivot { column: 1 });
    }

    #[test]
    fn right_and_left_solves() {
        let n = 4;
        let a = sample(n * n, 11);
        let lu = DenseLu::factor(n, a.clone()).unwrap();
        let x = sample(3 * n, 13);
        // (X A^{-1}) A == X
        let mut y = x.clone();
        lu.solve_right_in_place(3, &mut y);
        let mut back = vec![Complex::zero(); 3 * n];
        gemm_sub(3, n, n, &y, &a, &mut back);
        for (u, v) in back.iter().zip(&x) {
            assert!((u + v).norm() < 1e-12);
        }
        let z = sample(n * 2, 17);
        let mut w = z.clone();
        lu.solve_left_in_place(2, &mut w);
        let mut back = vec![Complex::zero(); n * 2];
        gemm_sub(n, n, 2, &a, &w, &mut back);
        for (u, v) in back.iter().zip(&z) {
            assert!((u + v).norm() < 1e-12);
        }
    }

    #[test]
    fn least_squares_tall_matches_normal_equations() {
        let (m, n) = (7, 4);
        let a = sample(m * n, 21);
        let b = sample(m, 23);
        let x = least_squares(m, n, &a, &b, 1e-12).unwrap();
        // residual orthogonal to range(A)
        let ax = matvec(m, n, &a, &x);
        let r: Vec<_> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
        let mut g = vec![Complex::zero(); n];
        gemv_adjoint_add(m, n, &a, &r, &mut g);
        assert!(g.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn least_squares_wide_is_minimum_norm() {
        let (m, n) = (3, 6);
        let a = sample(m * n, 31);
        let b = sample(m, 37);
        let x = least_squares(m, n, &a, &b, 1e-12).unwrap();
        let ax = matvec(m, n, &a, &x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        // minimum norm solutions lie in range(A^H): x = A^H y for the y solving A A^H y = b
        let mut aah = vec![Complex::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                let mut s = Complex::zero();
                for k in 0..n {
                    s += a[i * n + k] * a[j * n + k].conj();
                }
                aah[i * m + j] = s;
            }
        }
        let lu = DenseLu::factor(m, aah).unwrap();
        let mut y = b.clone();
        lu.solve_in_place(&mut y);
        let mut xr = vec![Complex::zero(); n];
        gemv_adjoint_add(m, n, &a, &y, &mut xr);
        for (u, v) in xr.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn least_squares_flags_dependent_columns() {
        let a = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0), c(3.0, 0.0), c(6.0, 0.0)];
        let b = vec![c(1.0, 0.0); 3];
        let err = least_squares(3, 2, &a, &b, 1e-10).unwrap_err();
        assert_eq!(err.rank, 1);
    }
}
