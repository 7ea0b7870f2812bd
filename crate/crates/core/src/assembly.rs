//! PWDG linear system: flux parameters, the skeleton sesquilinear form and
//! the load functional, assembled edge by edge in closed form.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::basis::PlaneWaveSpace;
use crate::exact::{BcKind, ExactSolution};
use crate::geometry::Vec2;
use crate::mesh::{triangle_diameter, Edge, EdgeTag, Mesh};
use crate::quadrature::{adaptive_edge_integral, points_for_bandwidth, sinc, EDGE_DATA_MAX_POINTS};
use crate::scalar::{cis, Cplx, Real};
use crate::Error;

/// Relative tolerance of the adaptive Gauss rule for boundary-data integrals.
pub const DATA_RTOL: f64 = 1e-10;

/// Penalty parameter strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxParams<T> {
    /// `α = a h / h_e`, `β = b h / h_e`, `δ = min(d h / h_e, 1/2)`.
    MeshDependent { a: T, b: T, d: T },
    Constant { alpha: T, beta: T, delta: T },
}

/// Penalty values on one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFlux<T> {
    pub alpha: T,
    pub beta: T,
    pub delta: T,
}

impl<T: Real> FluxParams<T> {
    /// `α = β = δ = 1/2`, the ultra weak variational formulation.
    pub fn uwvf() -> Self {
        let h = T::lit(0.5);
        FluxParams::Constant { alpha: h, beta: h, delta: h }
    }

    pub fn mesh_dependent_default() -> Self {
        FluxParams::MeshDependent { a: T::one(), b: T::one(), d: T::lit(0.5) }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let (x, y, z) = match *self {
            FluxParams::MeshDependent { a, b, d } => (a, b, d),
            FluxParams::Constant { alpha, beta, delta } => {
                if !(delta < T::one()) {
                    return Err(Error::InvalidArgument(format!("constant δ = {delta} must be below 1")));
                }
                (alpha, beta, delta)
            }
        };
        if !(x > T::zero() && y > T::zero() && z > T::zero()) {
            return Err(Error::InvalidArgument("flux parameters must be positive".into()));
        }
        Ok(())
    }
}

/// `(α, β, δ)` on `edge` for global mesh size `h`.
pub fn flux_params_on_edge<T: Real>(params: &FluxParams<T>, edge: &Edge<T>, h: T) -> Result<EdgeFlux<T>, Error> {
    params.validate()?;
    Ok(match *params {
        FluxParams::MeshDependent { a, b, d } => {
            let r = h / edge.length;
            EdgeFlux { alpha: a * r, beta: b * r, delta: (d * r).min(T::lit(0.5)) }
        }
        FluxParams::Constant { alpha, beta, delta } => EdgeFlux { alpha, beta, delta },
    })
}

/// Boundary data callback `(point, outward normal) -> value`.
pub type BoundaryFn<T> = Arc<dyn Fn(Vec2<T>, Vec2<T>) -> Result<Cplx<T>, Error> + Send + Sync>;

/// Coefficients and data of the boundary value problem.
#[derive(Clone)]
pub struct ProblemData<T> {
    /// Free-space wavenumber.
    pub kappa: T,
    /// Relative permittivity per element.
    pub eps_r: Vec<T>,
    pub dirichlet: Option<BoundaryFn<T>>,
    pub impedance: Option<BoundaryFn<T>>,
}

impl<T: Real> fmt::Debug for ProblemData<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("kappa", &self.kappa)
            .field("eps_r", &self.eps_r)
            .field("dirichlet", &self.dirichlet.is_some())
            .field("impedance", &self.impedance.is_some())
            .finish()
    }
}

impl<T: Real> ProblemData<T> {
    /// Homogeneous medium with zero boundary data.
    pub fn homogeneous(mesh: &Mesh<T>, kappa: T) -> Self {
        Self { kappa, eps_r: vec![T::one(); mesh.num_triangles()], dirichlet: None, impedance: None }
    }

    /// Medium and boundary data taken from an exact solution.
    pub fn from_exact(mesh: &Mesh<T>, exact: ExactSolution<T>) -> Self {
        let dirichlet: BoundaryFn<T> = Arc::new(move |x, n| exact.boundary_data(BcKind::Dirichlet, x, n));
        let impedance: BoundaryFn<T> = Arc::new(move |x, n| exact.boundary_data(BcKind::Impedance, x, n));
        Self {
            kappa: exact.kappa(),
            eps_r: exact.eps_r_on_mesh(mesh),
            dirichlet: Some(dirichlet),
            impedance: Some(impedance),
        }
    }

    /// Wavenumber used on an edge of `tag` adjacent to element `t`: the local
    /// one on impedance edges, the free-space one elsewhere.
    pub fn edge_kappa(&self, tag: EdgeTag, t: usize) -> T {
        match tag {
            EdgeTag::Impedance => self.kappa * self.eps_r[t].sqrt(),
            _ => self.kappa,
        }
    }
}

/// Block-sparse system `A x = b`: element-pair blocks of size `p x p`, row
/// `(test element, test direction)`, column `(trial element, trial direction)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DGSystem<T> {
    p: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    blocks: Vec<Cplx<T>>,
    rhs: Vec<Cplx<T>>,
}

impl<T: Real> DGSystem<T> {
    /// Empty system with the sparsity pattern of the mesh adjacency.
    pub fn with_pattern(mesh: &Mesh<T>, p: usize) -> Self {
        let n = mesh.num_triangles();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for t in 0..n {
            let mut row: Vec<usize> = mesh.neighbors(t).chain(std::iter::once(t)).collect();
            row.sort_unstable();
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        let nb = cols.len();
        Self { p, row_ptr, cols, blocks: vec![Cplx::zero(); nb * p * p], rhs: vec![Cplx::zero(); n * p] }
    }

    /// Dense system with a single `n x n` block, for tests and small problems.
    pub fn from_dense(n: usize, matrix: Vec<Cplx<T>>, rhs: Vec<Cplx<T>>) -> Result<Self, Error> {
        if matrix.len() != n * n || rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n * n, found: matrix.len() });
        }
        Ok(Self { p: n, row_ptr: vec![0, 1], cols: vec![0], blocks: matrix, rhs })
    }

    pub fn block_size(&self) -> usize {
        self.p
    }

    pub fn num_block_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.cols.len()
    }

    /// Block columns of block row `r`, ascending.
    pub fn row_columns(&self, r: usize) -> &[usize] {
        &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let lo = self.row_ptr[r];
        self.row_columns(r).binary_search(&c).ok().map(|k| lo + k)
    }

    /// Block `(r, c)` row-major, if it is in the pattern.
    pub fn block(&self, r: usize, c: usize) -> Option<&[Cplx<T>]> {
        let pp = self.p * self.p;
        self.slot(r, c).map(|s| &self.blocks[s * pp..(s + 1) * pp])
    }

    fn block_mut(&mut self, r: usize, c: usize) -> &mut [Cplx<T>] {
        let pp = self.p * self.p;
        let s = self.slot(r, c).expect("block in sparsity pattern");
        &mut self.blocks[s * pp..(s + 1) * pp]
    }

    pub fn rhs(&self) -> &[Cplx<T>] {
        &self.rhs
    }

    pub fn rhs_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.rhs
    }

    /// Entry `(i, j)` of the assembled matrix (zero outside the pattern).
    pub fn entry(&self, i: usize, j: usize) -> Cplx<T> {
        let p = self.p;
        self.block(i / p, j / p).map_or(Cplx::zero(), |b| b[(i % p) * p + j % p])
    }

    /// `A x`.
    pub fn matvec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let p = self.p;
        let mut y = vec![Cplx::zero(); self.dim()];
        y.par_chunks_mut(p).enumerate().for_each(|(r, yr)| {
            for (k, &c) in self.row_columns(r).iter().enumerate() {
                let s = self.row_ptr[r] + k;
                let b = &self.blocks[s * p * p..(s + 1) * p * p];
                crate::dense::gemv_add(p, p, b, &x[c * p..(c + 1) * p], yr);
            }
        });
        y
    }

    /// `A^H x`.
    pub fn matvec_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let p = self.p;
        let mut y = vec![Cplx::zero(); self.dim()];
        for r in 0..self.num_block_rows() {
            for (k, &c) in self.row_columns(r).iter().enumerate() {
                let s = self.row_ptr[r] + k;
                let b = &self.blocks[s * p * p..(s + 1) * p * p];
                crate::dense::gemv_adjoint_add(p, p, b, &x[r * p..(r + 1) * p], &mut y[c * p..(c + 1) * p]);
            }
        }
        y
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        let p = self.p;
        let mut sums = vec![T::zero(); self.dim()];
        for r in 0..self.num_block_rows() {
            for (k, &c) in self.row_columns(r).iter().enumerate() {
                let s = self.row_ptr[r] + k;
                for i in 0..p {
                    for j in 0..p {
                        sums[c * p + j] += self.blocks[s * p * p + i * p + j].norm();
                    }
                }
            }
        }
        sums.into_iter().fold(T::zero(), T::max)
    }
}

/// One side of an edge as seen by the form: element, outward normal and the
/// phase of each basis function at the edge midpoint.
struct Side<T> {
    element: usize,
    normal: Vec2<T>,
    wavevectors: Vec<Vec2<T>>,
    /// `exp(i k_j · (m - c_K))`
    phase: Vec<Cplx<T>>,
}

fn side<T: Real>(space: &PlaneWaveSpace<T>, t: usize, normal: Vec2<T>, mid: Vec2<T>) -> Side<T> {
    let wavevectors: Vec<Vec2<T>> = (0..space.p()).map(|j| space.wavevector(t, j)).collect();
    let r = mid - space.centroid(t);
    let phase = wavevectors.iter().map(|k| cis(k.dot(r))).collect();
    Side { element: t, normal, wavevectors, phase }
}

/// `∫_e φ_u conj(φ_v) ds` with `φ = exp(i k·(x - c))`, via the midpoint phase
/// and a real sinc factor.
#[inline]
fn product_integral<T: Real>(u: &Side<T>, j: usize, v: &Side<T>, i: usize, tangent: Vec2<T>, len: T) -> Cplx<T> {
    let q = u.wavevectors[j] - v.wavevectors[i];
    u.phase[j] * v.phase[i].conj() * (len * sinc(q.dot(tangent) * len * T::lit(0.5)))
}

/// Contribution of one edge: `(test element, trial element, block)` triples
/// and `(element, load)` pairs.
struct EdgeContribution<T> {
    blocks: Vec<(usize, usize, Vec<Cplx<T>>)>,
    loads: Vec<(usize, Vec<Cplx<T>>)>,
}

fn interior_block<T: Real>(u: &Side<T>, v: &Side<T>, f: EdgeFlux<T>, kappa: T, tangent: Vec2<T>, len: T) -> Vec<Cplx<T>> {
    let p = u.wavevectors.len();
    let half = T::lit(0.5);
    let nn = u.normal.dot(v.normal);
    let mut out = vec![Cplx::zero(); p * p];
    for i in 0..p {
        let kv = v.wavevectors[i].dot(v.normal);
        for j in 0..p {
            let ku = u.wavevectors[j].dot(v.normal);
            let kun = u.wavevectors[j].dot(u.normal);
            // {u}[[∇v̄]] - [[v̄]]·{∇u} - (β/iκ)[[∇u]][[∇v̄]] + iκα [[u]]·[[v̄]]
            let im = -half * kv - half * ku + f.beta / kappa * kun * kv + kappa * f.alpha * nn;
            out[i * p + j] = Complex::new(T::zero(), im) * product_integral(u, j, v, i, tangent, len);
        }
    }
    out
}

fn impedance_block<T: Real>(s: &Side<T>, f: EdgeFlux<T>, kappa: T, tangent: Vec2<T>, len: T) -> Vec<Cplx<T>> {
    let p = s.wavevectors.len();
    let d = f.delta;
    let mut out = vec![Cplx::zero(); p * p];
    for i in 0..p {
        let kv = s.wavevectors[i].dot(s.normal);
        for j in 0..p {
            let ku = s.wavevectors[j].dot(s.normal);
            // -δ ∂u/∂ν v̄ + (1+δ) u ∂v̄/∂ν - (δ/iκ) ∂u/∂ν ∂v̄/∂ν - iκ(1-δ) u v̄
            let im = -(T::one() + d) * kv - d * ku + d / kappa * ku * kv - kappa * (T::one() - d);
            out[i * p + j] = Complex::new(T::zero(), im) * product_integral(s, j, s, i, tangent, len);
        }
    }
    out
}

fn dirichlet_block<T: Real>(s: &Side<T>, f: EdgeFlux<T>, kappa: T, tangent: Vec2<T>, len: T) -> Vec<Cplx<T>> {
    let p = s.wavevectors.len();
    let mut out = vec![Cplx::zero(); p * p];
    for i in 0..p {
        for j in 0..p {
            let ku = s.wavevectors[j].dot(s.normal);
            // -∂u/∂ν v̄ + iκα u v̄
            let im = -ku + kappa * f.alpha;
            out[i * p + j] = Complex::new(T::zero(), im) * product_integral(s, j, s, i, tangent, len);
        }
    }
    out
}

/// `∫_e g conj(φ_i) w_i ds` for every basis function `i` of `space` on
/// element `t`, where `w_i` is the real weight `weight(k_i · ν)`.
fn data_load<T: Real>(
    space: &PlaneWaveSpace<T>,
    t: usize,
    (a, b): (Vec2<T>, Vec2<T>),
    normal: Vec2<T>,
    g: &BoundaryFn<T>,
    weight: impl Fn(T) -> Cplx<T>,
) -> Result<Vec<Cplx<T>>, Error> {
    let p = space.p();
    let c = space.centroid(t);
    let ks: Vec<Vec2<T>> = (0..p).map(|j| space.wavevector(t, j)).collect();
    let weights: Vec<Cplx<T>> = ks.iter().map(|k| weight(k.dot(normal))).collect();
    let half_len = (b - a).norm() * T::lit(0.5);
    let n0 = points_for_bandwidth(space.kappa_local(t) * half_len * T::lit(2.0)).min(EDGE_DATA_MAX_POINTS / 4).max(4);
    let mut failure = None;
    let out = adaptive_edge_integral(a, b, p, n0, EDGE_DATA_MAX_POINTS, T::lit(DATA_RTOL), |x, buf| {
        let gx = match g(x, normal) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                Cplx::zero()
            }
        };
        for (i, k) in ks.iter().enumerate() {
            buf[i] = gx * cis(-k.dot(x - c)) * weights[i];
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn edge_contribution<T: Real>(
    mesh: &Mesh<T>,
    space: &PlaneWaveSpace<T>,
    data: &ProblemData<T>,
    params: &FluxParams<T>,
    h: T,
    e: usize,
) -> Result<EdgeContribution<T>, Error> {
    let edge = mesh.edge(e);
    let f = flux_params_on_edge(params, edge, h)?;
    let (a, b) = mesh.edge_points(e);
    let len = edge.length;
    let tangent = (b - a).scale(T::one() / len);
    let mid = a.midpoint(b);
    let normal = mesh.edge_normal(e);
    let t0 = edge.triangles[0];
    let s0 = side(space, t0, normal, mid);
    let mut out = EdgeContribution { blocks: Vec::new(), loads: Vec::new() };
    let i = Complex::new(T::zero(), T::one());
    match edge.tag {
        EdgeTag::Interior => {
            let t1 = edge.second_triangle().expect("interior edge has two triangles");
            let s1 = side(space, t1, -normal, mid);
            let kappa = data.edge_kappa(EdgeTag::Interior, t0);
            for (u, v) in [(&s0, &s0), (&s1, &s0), (&s0, &s1), (&s1, &s1)] {
                out.blocks.push((v.element, u.element, interior_block(u, v, f, kappa, tangent, len)));
            }
        }
        EdgeTag::Impedance => {
            let kappa = data.edge_kappa(EdgeTag::Impedance, t0);
            out.blocks.push((t0, t0, impedance_block(&s0, f, kappa, tangent, len)));
            if let Some(g) = &data.impedance {
                let d = f.delta;
                // (δ/κ)(k_v·ν) + (1 - δ)
                let load = data_load(space, t0, (a, b), normal, g, |kn| Complex::new(d / kappa * kn + T::one() - d, T::zero()))?;
                out.loads.push((t0, load));
            }
        }
        EdgeTag::Dirichlet => {
            let kappa = data.edge_kappa(EdgeTag::Dirichlet, t0);
            out.blocks.push((t0, t0, dirichlet_block(&s0, f, kappa, tangent, len)));
            if let Some(g) = &data.dirichlet {
                let alpha = f.alpha;
                // αiκ + i k_v·ν
                let load = data_load(space, t0, (a, b), normal, g, |kn| i * (alpha * kappa + kn))?;
                out.loads.push((t0, load));
            }
        }
    }
    Ok(out)
}

/// Largest element diameter, the `h` of the mesh-dependent penalties.
pub fn global_h<T: Real>(mesh: &Mesh<T>) -> T {
    (0..mesh.num_triangles()).map(|t| triangle_diameter(mesh.triangle_points(t))).fold(T::zero(), T::max)
}

/// Assemble the PWDG system on `mesh` for the plane-wave `space`.
pub fn assemble<T: Real>(
    mesh: &Mesh<T>,
    space: &PlaneWaveSpace<T>,
    data: &ProblemData<T>,
    params: &FluxParams<T>,
) -> Result<DGSystem<T>, Error> {
    params.validate()?;
    if space.num_elements() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), found: space.num_elements() });
    }
    if data.eps_r.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), found: data.eps_r.len() });
    }
    let h = global_h(mesh);
    let contributions: Vec<EdgeContribution<T>> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| edge_contribution(mesh, space, data, params, h, e))
        .collect::<Result<_, _>>()?;
    let p = space.p();
    let mut system = DGSystem::with_pattern(mesh, p);
    // insertion in edge order keeps the floating point sums reproducible
    for c in contributions {
        for (r, col, block) in c.blocks {
            for (dst, src) in system.block_mut(r, col).iter_mut().zip(block) {
                *dst += src;
            }
        }
        for (t, load) in c.loads {
            for (dst, src) in system.rhs[t * p..(t + 1) * p].iter_mut().zip(load) {
                *dst += src;
            }
        }
    }
    Ok(system)
}
