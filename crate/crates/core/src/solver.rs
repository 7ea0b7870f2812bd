//! Direct solver for the block-sparse PWDG systems: minimum-degree ordering
//! of the element graph, block LU with partial pivoting inside the diagonal
//! blocks, iterative refinement and a 1-norm condition estimate.

use std::collections::BTreeSet;
use std::time::Instant;

use num_complex::Complex;
use num_traits::Zero;

use crate::assembly::DGSystem;
use crate::dense::{gemm_sub, DenseLu};
use crate::scalar::{Cplx, Real};
use crate::Error;

/// Largest accepted relative residual `‖Ax - b‖ / ‖b‖` in double precision.
pub const RESIDUAL_LIMIT: f64 = 1e-10;
/// Pivots below this fraction of the largest pivot are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;
const REFINEMENT_STEPS: usize = 4;

/// Residual limit for scalar type `T`: [`RESIDUAL_LIMIT`], relaxed for
/// types whose precision cannot reach it.
pub fn residual_limit<T: Real>() -> f64 {
    RESIDUAL_LIMIT.max(1e3 * T::epsilon().to_f64_lossy())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub relative_residual: f64,
    /// Reciprocal 1-norm condition number estimate.
    pub rcond: f64,
    pub dofs: usize,
    pub seconds: f64,
}

/// Coefficient vector addressable by `(element, direction)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    p: usize,
    coeffs: Vec<Cplx<T>>,
}

impl<T: Real> Solution<T> {
    pub fn new(p: usize, coeffs: Vec<Cplx<T>>) -> Self {
        assert!(p > 0 && coeffs.len() % p == 0);
        Self { p, coeffs }
    }

    pub fn coeffs(&self) -> &[Cplx<T>] {
        &self.coeffs
    }

    pub fn get(&self, element: usize, direction: usize) -> Cplx<T> {
        self.coeffs[element * self.p + direction]
    }

    pub fn num_elements(&self) -> usize {
        self.coeffs.len() / self.p
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn into_coeffs(self) -> Vec<Cplx<T>> {
        self.coeffs
    }
}

/// Minimum-degree elimination order of a symmetric graph; ties go to the
/// lowest node id. Returns the order and, for each eliminated node, its
/// neighbors eliminated later (the structure of its factor row and column).
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = adjacency.len();
    let mut graph: Vec<BTreeSet<usize>> =
        adjacency.iter().enumerate().map(|(v, a)| a.iter().copied().filter(|&w| w != v).collect()).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (graph[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut later = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        let nbrs: Vec<usize> = graph[v].iter().copied().collect();
        for &a in &nbrs {
            queue.remove(&(graph[a].len(), a));
            graph[a].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                graph[a].insert(b);
                graph[b].insert(a);
            }
        }
        for &a in &nbrs {
            queue.insert((graph[a].len(), a));
        }
        graph[v].clear();
        order.push(v);
        later.push(nbrs);
    }
    (order, later)
}

/// Block LU factors in elimination order.
struct BlockLu<T> {
    p: usize,
    /// Original block index of the k-th eliminated block.
    order: Vec<usize>,
    diag: Vec<DenseLu<T>>,
    /// For step `k`: `(i, L_ik)` with `i` later than `k`.
    lower: Vec<Vec<(usize, Vec<Cplx<T>>)>>,
    /// For step `k`: `(j, U_kj = D_k^{-1} A_kj)` with `j` later than `k`.
    upper: Vec<Vec<(usize, Vec<Cplx<T>>)>>,
}

/// Working storage: one sorted row of blocks per eliminated position.
struct Rows<T> {
    cols: Vec<Vec<usize>>,
    blocks: Vec<Vec<Vec<Cplx<T>>>>,
}

impl<T: Real> Rows<T> {
    fn get_mut(&mut self, i: usize, j: usize) -> &mut Vec<Cplx<T>> {
        let k = self.cols[i].binary_search(&j).expect("block in symbolic pattern");
        &mut self.blocks[i][k]
    }

    fn take(&mut self, i: usize, j: usize) -> Vec<Cplx<T>> {
        std::mem::take(self.get_mut(i, j))
    }
}

impl<T: Real> BlockLu<T> {
    fn factor(a: &DGSystem<T>) -> Result<Self, Error> {
        let p = a.block_size();
        let n = a.num_block_rows();
        let adjacency: Vec<Vec<usize>> = (0..n).map(|r| a.row_columns(r).to_vec()).collect();
        let (order, later) = minimum_degree(&adjacency);
        let mut position = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            position[v] = k;
        }
        let later: Vec<Vec<usize>> = later
            .into_iter()
            .map(|l| {
                let mut l: Vec<usize> = l.into_iter().map(|v| position[v]).collect();
                l.sort_unstable();
                l
            })
            .collect();

        // Symbolic pattern: row k holds k itself and all later neighbors,
        // plus (by symmetry) the earlier steps that list k.
        let mut cols: Vec<Vec<usize>> = (0..n)
            .map(|k| {
                let mut c = later[k].clone();
                c.push(k);
                c
            })
            .collect();
        for k in 0..n {
            for &i in &later[k] {
                cols[i].push(k);
            }
        }
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
        }
        let pp = p * p;
        let mut rows = Rows { blocks: cols.iter().map(|c| vec![Vec::new(); c.len()]).collect(), cols };
        for r in 0..n {
            for &c in a.row_columns(r) {
                *rows.get_mut(position[r], position[c]) = a.block(r, c).expect("pattern").to_vec();
            }
        }
        // fill-in blocks start at zero
        for b in rows.blocks.iter_mut().flatten().filter(|b| b.is_empty()) {
            *b = vec![Cplx::zero(); pp];
        }

        let mut diag = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut max_pivot = T::zero();
        for k in 0..n {
            let d = rows.take(k, k);
            let lu = DenseLu::factor(p, d).map_err(|z| Error::Singular {
                column: order[k] * p + z.column,
                pivot: 0.0,
                rcond: 0.0,
            })?;
            let (lo, hi) = lu.pivot_range();
            max_pivot = max_pivot.max(hi);
            if lo < T::lit(PIVOT_TOLERANCE) * max_pivot {
                return Err(Error::Singular {
                    column: order[k] * p,
                    pivot: lo.to_f64_lossy(),
                    rcond: (lo / max_pivot).to_f64_lossy(),
                });
            }
            let mut u_k = Vec::with_capacity(later[k].len());
            for &j in &later[k] {
                let mut b = rows.take(k, j);
                lu.solve_left_in_place(p, &mut b);
                u_k.push((j, b));
            }
            let mut l_k = Vec::with_capacity(later[k].len());
            for &i in &later[k] {
                let lik = rows.take(i, k);
                for (j, ukj) in &u_k {
                    gemm_sub(p, p, p, &lik, ukj, rows.get_mut(i, *j));
                }
                l_k.push((i, lik));
            }
            diag.push(lu);
            lower.push(l_k);
            upper.push(u_k);
        }
        Ok(Self { p, order, diag, lower, upper })
    }

    fn gather(&self, b: &[Cplx<T>]) -> Vec<Vec<Cplx<T>>> {
        self.order.iter().map(|&v| b[v * self.p..(v + 1) * self.p].to_vec()).collect()
    }

    fn scatter(&self, y: Vec<Vec<Cplx<T>>>) -> Vec<Cplx<T>> {
        let mut out = vec![Cplx::zero(); self.order.len() * self.p];
        for (k, yk) in y.into_iter().enumerate() {
            let v = self.order[k];
            out[v * self.p..(v + 1) * self.p].copy_from_slice(&yk);
        }
        out
    }

    /// `A^{-1} b`.
    fn solve(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let p = self.p;
        let mut y = self.gather(b);
        for k in 0..y.len() {
            let mut yk = std::mem::take(&mut y[k]);
            self.diag[k].solve_in_place(&mut yk);
            for (i, lik) in &self.lower[k] {
                gemm_sub(p, p, 1, lik, &yk, &mut y[*i]);
            }
            y[k] = yk;
        }
        for k in (0..y.len()).rev() {
            let mut yk = std::mem::take(&mut y[k]);
            for (j, ukj) in &self.upper[k] {
                gemm_sub(p, p, 1, ukj, &y[*j], &mut yk);
            }
            y[k] = yk;
        }
        self.scatter(y)
    }

    /// `A^{-H} b`.
    fn solve_adjoint(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let p = self.p;
        let mut z = self.gather(b);
        for k in 0..z.len() {
            let zk = std::mem::take(&mut z[k]);
            for (j, ukj) in &self.upper[k] {
                let mut acc = vec![Cplx::zero(); p];
                crate::dense::gemv_adjoint_add(p, p, ukj, &zk, &mut acc);
                for (d, s) in z[*j].iter_mut().zip(acc) {
                    *d -= s;
                }
            }
            z[k] = zk;
        }
        for k in (0..z.len()).rev() {
            let mut zk = std::mem::take(&mut z[k]);
            for (i, lik) in &self.lower[k] {
                let mut acc = vec![Cplx::zero(); p];
                crate::dense::gemv_adjoint_add(p, p, lik, &z[*i], &mut acc);
                for (d, s) in zk.iter_mut().zip(acc) {
                    *d -= s;
                }
            }
            self.diag[k].solve_adjoint_in_place(&mut zk);
            z[k] = zk;
        }
        self.scatter(z)
    }
}

fn norm2<T: Real>(v: &[Cplx<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

fn norm1<T: Real>(v: &[Cplx<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), |a, b| a + b)
}

/// Hager–Higham estimate of `‖A^{-1}‖₁` from solves with `A` and `A^H`.
fn inverse_norm_estimate<T: Real>(lu: &BlockLu<T>, n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    let mut x = vec![Complex::new(T::one() / nf, T::zero()); n];
    let mut est = T::zero();
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let y = lu.solve(&x);
        let new_est = norm1(&y);
        if iter > 0 && new_est <= est {
            break;
        }
        est = new_est;
        let xi: Vec<Cplx<T>> = y
            .iter()
            .map(|v| if v.norm() == T::zero() { Complex::new(T::one(), T::zero()) } else { v / v.norm() })
            .collect();
        let z = lu.solve_adjoint(&xi);
        let (j, zj) = z
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bj, bv), (i, v)| if v.norm() > bv { (i, v.norm()) } else { (bj, bv) });
        let ztx: T = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).fold(T::zero(), |a, b| a + b);
        if iter > 0 && (zj <= ztx || j == last_j) {
            break;
        }
        last_j = j;
        x = vec![Cplx::zero(); n];
        x[j] = Complex::new(T::one(), T::zero());
    }
    // alternating test vector guards against the power iteration stalling
    let denom = T::from_usize_lossy(n.max(2) - 1);
    let alt: Vec<Cplx<T>> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { T::one() } else { -T::one() };
            Complex::new(s * (T::one() + T::from_usize_lossy(i) / denom), T::zero())
        })
        .collect();
    let alt_est = T::lit(2.0) * norm1(&lu.solve(&alt)) / (T::lit(3.0) * nf);
    est.max(alt_est)
}

/// Solve `A x = b`.
pub fn solve<T: Real>(system: &DGSystem<T>) -> Result<(Solution<T>, SolveReport), Error> {
    let start = Instant::now();
    let n = system.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("system has no degrees of freedom".into()));
    }
    let lu = BlockLu::factor(system)?;
    let b = system.rhs();
    let bnorm = norm2(b);
    let mut x = lu.solve(b);
    let residual = |x: &[Cplx<T>]| -> Vec<Cplx<T>> {
        let ax = system.matvec(x);
        b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut r = residual(&x);
    let mut rnorm = norm2(&r);
    for _ in 0..REFINEMENT_STEPS {
        if rnorm == T::zero() || rnorm <= T::epsilon() * bnorm {
            break;
        }
        let dx = lu.solve(&r);
        let cand: Vec<Cplx<T>> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let rc = residual(&cand);
        let rcn = norm2(&rc);
        if rcn >= rnorm {
            break;
        }
        x = cand;
        r = rc;
        rnorm = rcn;
    }
    let relative = if bnorm == T::zero() { rnorm } else { rnorm / bnorm };
    let rcond = T::one() / (system.norm_one() * inverse_norm_estimate(&lu, n));
    let report = SolveReport {
        relative_residual: relative.to_f64_lossy(),
        rcond: rcond.to_f64_lossy(),
        dofs: n,
        seconds: start.elapsed().as_secs_f64(),
    };
    let limit = residual_limit::<T>();
    if !(report.relative_residual <= limit) {
        return Err(Error::Residual { residual: report.relative_residual, limit });
    }
    Ok((Solution::new(system.block_size(), x), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, FluxParams, ProblemData};
    use crate::basis::PlaneWaveSpace;
    use crate::exact::ExactSolution;
    use crate::mesh::{make_initial_mesh, Domain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Cplx<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn one_by_one() {
        let sys = DGSystem::from_dense(1, vec![c(2.0)], vec![c(4.0)]).unwrap();
        let (x, rep) = solve(&sys).unwrap();
        assert_eq!(x.coeffs(), &[c(2.0)]);
        assert_eq!(rep.relative_residual, 0.0);
        assert!((rep.rcond - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_returns_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 9;
        let mut a = vec![c(0.0); n * n];
        for i in 0..n {
            a[i * n + i] = c(1.0);
        }
        let b: Vec<Cplx<f64>> = (0..n).map(|_| Complex::new(rng.gen(), rng.gen())).collect();
        let (x, _) = solve(&DGSystem::from_dense(n, a, b.clone()).unwrap()).unwrap();
        assert_eq!(x.coeffs(), &b[..]);
    }

    #[test]
    fn singular_and_empty_systems_fail() {
        let sys = DGSystem::from_dense(2, vec![c(1.0), c(2.0), c(2.0), c(4.0)], vec![c(1.0), c(1.0)]).unwrap();
        assert!(matches!(solve(&sys), Err(Error::Singular { .. })));
        let empty = DGSystem::<f64>::from_dense(0, vec![], vec![]).unwrap();
        assert!(solve(&empty).is_err());
    }

    #[test]
    fn minimum_degree_on_a_path() {
        // path 0-1-2-3: the two ends have degree one, lowest id first
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let (order, later) = minimum_degree(&adj);
        assert_eq!(order, vec![0, 1, 2, 3]);
        assert_eq!(later[0], vec![1]);
        assert!(later[3].is_empty());
    }

    #[test]
    fn condition_estimate_of_diagonal_matrix() {
        let n = 4;
        let mut a = vec![c(0.0); n * n];
        for (i, d) in [1.0, 10.0, 0.5, 2.0].iter().enumerate() {
            a[i * n + i] = c(*d);
        }
        let (_, rep) = solve(&DGSystem::from_dense(n, a, vec![c(1.0); n]).unwrap()).unwrap();
        // ‖A‖₁ = 10, ‖A^{-1}‖₁ = 2
        assert!((rep.rcond - 0.05).abs() < 1e-14);
    }

    #[test]
    fn sparse_solve_matches_residual_and_is_deterministic() {
        let mesh = make_initial_mesh::<f64>(Domain::LShape, 4).unwrap();
        let exact = ExactSolution::Bessel { order: 2.0 / 3.0, kappa: 12.0 };
        let space = PlaneWaveSpace::homogeneous(&mesh, 7, 12.0).unwrap();
        let data = ProblemData::from_exact(&mesh, exact);
        let sys = assemble(&mesh, &space, &data, &FluxParams::uwvf()).unwrap();
        let (x, rep) = solve(&sys).unwrap();
        assert!(rep.relative_residual <= 1e-10);
        assert!(rep.rcond > 0.0 && rep.rcond <= 1.0);
        assert_eq!(rep.dofs, sys.dim());
        let (y, _) = solve(&sys).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn adjoint_solve_inverts_adjoint() {
        let mesh = make_initial_mesh::<f64>(Domain::UnitSquare, 3).unwrap();
        let space = PlaneWaveSpace::homogeneous(&mesh, 4, 5.0).unwrap();
        let sys = assemble(&mesh, &space, &ProblemData::homogeneous(&mesh, 5.0), &FluxParams::uwvf()).unwrap();
        let lu = BlockLu::factor(&sys).unwrap();
        let b: Vec<Cplx<f64>> = (0..sys.dim()).map(|k| Complex::new((k as f64).sin(), (k as f64).cos())).collect();
        let x = lu.solve_adjoint(&b);
        let back = sys.matvec_adjoint(&x);
        let err = norm2(&back.iter().zip(&b).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err <= 1e-10 * norm2(&b));
        let x = lu.solve(&b);
        let back = sys.matvec(&x);
        let err = norm2(&back.iter().zip(&b).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err <= 1e-10 * norm2(&b));
    }
}
