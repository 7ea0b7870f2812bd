//! Plane-wave Trefftz spaces: one set of `p` uniformly spaced directions per
//! element, phase referenced at the element centroid.

use num_complex::Complex;
use num_traits::Zero;

use crate::dense::least_squares;
use crate::geometry::Vec2;
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::scalar::{cis, Cplx, Real};
use crate::Error;

/// `d_j = (cos 2πj/p, sin 2πj/p)` for `j = 1..=p`.
pub fn directions<T: Real>(p: usize) -> Result<Vec<Vec2<T>>, Error> {
    if p < 1 {
        return Err(Error::InvalidArgument("direction count must be at least 1".into()));
    }
    Ok((1..=p)
        .map(|j| {
            let theta = T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(p);
            let (s, c) = theta.sin_cos();
            Vec2::new(c, s)
        })
        .collect())
}

/// Value and gradient of one basis function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisValue<T> {
    pub value: Cplx<T>,
    pub grad: [Cplx<T>; 2],
}

/// Discrete space `V_h`: `p` plane waves on every element of a mesh.
#[derive(Debug, Clone)]
pub struct PlaneWaveSpace<T> {
    p: usize,
    dirs: Vec<Vec2<T>>,
    kappa_local: Vec<T>,
    centroids: Vec<Vec2<T>>,
}

impl<T: Real> PlaneWaveSpace<T> {
    /// Space with local wavenumber `kappa * sqrt(eps_r[K])` on element `K`.
    pub fn new(mesh: &Mesh<T>, p: usize, kappa: T, eps_r: &[T]) -> Result<Self, Error> {
        if p < 3 {
            return Err(Error::InvalidArgument(format!("p = {p}: at least 3 plane waves per element are required")));
        }
        if !(kappa > T::zero()) {
            return Err(Error::InvalidArgument("wavenumber must be positive".into()));
        }
        if eps_r.len() != mesh.num_triangles() {
            return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), found: eps_r.len() });
        }
        if let Some(t) = eps_r.iter().position(|&e| !(e > T::zero())) {
            return Err(Error::InvalidArgument(format!("relative permittivity on element {t} is not positive")));
        }
        Ok(Self {
            p,
            dirs: directions(p)?,
            kappa_local: eps_r.iter().map(|&e| kappa * e.sqrt()).collect(),
            centroids: (0..mesh.num_triangles()).map(|t| mesh.centroid(t)).collect(),
        })
    }

    /// Homogeneous medium, `κ_K = κ` everywhere.
    pub fn homogeneous(mesh: &Mesh<T>, p: usize, kappa: T) -> Result<Self, Error> {
        Self::new(mesh, p, kappa, &vec![T::one(); mesh.num_triangles()])
    }

    pub fn num_elements(&self) -> usize {
        self.centroids.len()
    }

    /// Directions per element (uniform).
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn num_dofs(&self) -> usize {
        self.p * self.num_elements()
    }

    /// Global index of the first basis function of element `t`.
    pub fn offset(&self, t: usize) -> usize {
        t * self.p
    }

    pub fn directions(&self) -> &[Vec2<T>] {
        &self.dirs
    }

    pub fn kappa_local(&self, t: usize) -> T {
        self.kappa_local[t]
    }

    pub fn centroid(&self, t: usize) -> Vec2<T> {
        self.centroids[t]
    }

    /// Wavevector `κ_K d_j`.
    pub fn wavevector(&self, t: usize, j: usize) -> Vec2<T> {
        self.dirs[j].scale(self.kappa_local[t])
    }

    fn check(&self, t: usize) -> Result<(), Error> {
        if t >= self.num_elements() {
            return Err(Error::UnknownTriangle(t));
        }
        Ok(())
    }

    /// Every basis function of element `t` at `x` (which may lie outside the
    /// element, e.g. on a neighbor's edge).
    pub fn eval_basis(&self, t: usize, x: Vec2<T>) -> Result<Vec<BasisValue<T>>, Error> {
        self.check(t)?;
        let r = x - self.centroids[t];
        let i = Complex::new(T::zero(), T::one());
        Ok((0..self.p)
            .map(|j| {
                let k = self.wavevector(t, j);
                let value = cis(k.dot(r));
                BasisValue { value, grad: [i * value * k.x, i * value * k.y] }
            })
            .collect())
    }

    /// `u_h` and `∇u_h` on element `t` at `x` for global coefficients `coeffs`.
    pub fn eval_field(&self, coeffs: &[Cplx<T>], t: usize, x: Vec2<T>) -> (Cplx<T>, [Cplx<T>; 2]) {
        let c = &coeffs[self.offset(t)..self.offset(t) + self.p];
        let r = x - self.centroids[t];
        let mut u = Complex::zero();
        let mut g = [Complex::zero(); 2];
        for (j, &cj) in c.iter().enumerate() {
            let k = self.wavevector(t, j);
            let v = cj * cis(k.dot(r));
            u += v;
            g[0] += v * k.x;
            g[1] += v * k.y;
        }
        let i = Complex::new(T::zero(), T::one());
        (u, [i * g[0], i * g[1]])
    }

    /// Coefficients `α_{i,j}` (row-major `3 x p`) with
    /// `Σ_j α_{0,j} ψ_j ≈ 1`, `Σ_j α_{1,j} ψ_j ≈ x₁ - c₁`, `Σ_j α_{2,j} ψ_j ≈ x₂ - c₂`
    /// on element `t`, fitted in least squares to the moments of
    /// `{1, ξ₁, ξ₂, ξ₁², ξ₁ξ₂, ξ₂²}` (`ξ = x - c`) over the element.
    pub fn linear_reproduction_coeffs(&self, mesh: &Mesh<T>, t: usize) -> Result<Vec<Cplx<T>>, Error> {
        self.check(t)?;
        let p = self.p;
        let c = self.centroids[t];
        let [a, b, d] = mesh.triangle_points(t);
        let area = mesh.area(t);
        let h = crate::mesh::triangle_diameter([a, b, d]);
        let rule = TriangleRule::<T>::new(16);
        const DEG: [i32; 6] = [0, 1, 1, 2, 2, 2];
        let monomials = |x: Vec2<T>| {
            let r = x - c;
            [T::one(), r.x, r.y, r.x * r.x, r.x * r.y, r.y * r.y]
        };
        // m[row][col]: row = moment, col = basis function; rhs[row][f]
        let mut m = vec![Cplx::<T>::zero(); 6 * p];
        let mut rhs = [[T::zero(); 3]; 6];
        for (x, w) in rule.on_triangle(a, b, d) {
            let mono = monomials(x);
            for j in 0..p {
                let psi = cis(self.wavevector(t, j).dot(x - c));
                for (row, &q) in mono.iter().enumerate() {
                    m[row * p + j] += psi * (q * w);
                }
            }
            for (row, &q) in mono.iter().enumerate() {
                for f in 0..3 {
                    rhs[row][f] += q * mono[f] * w;
                }
            }
        }
        for (row, &deg) in DEG.iter().enumerate() {
            let s = T::one() / (area * h.powi(deg));
            for j in 0..p {
                m[row * p + j] = m[row * p + j] * s;
            }
            for f in 0..3 {
                rhs[row][f] *= s;
            }
        }
        let mut out = Vec::with_capacity(3 * p);
        for f in 0..3 {
            let b: Vec<Cplx<T>> = (0..6).map(|row| Complex::new(rhs[row][f], T::zero())).collect();
            let x = match least_squares(6, p, &m, &b, T::epsilon() * T::lit(16.0)) {
                Ok(x) => x,
                // As κh -> 0 the moment rows depend on d only through
                // {1, d1, d2, d1²-d2², d1 d2}; a sixth direction is O((κh)³).
                Err(e) if e.rank >= p.min(5) => damped_least_squares(6, p, &m, &b)?,
                Err(e) => {
                    return Err(Error::InvalidArgument(format!(
                        "moment system on element {t} is rank deficient ({} of {})",
                        e.rank, e.needed
                    )))
                }
            };
            out.extend(x);
        }
        Ok(out)
    }
}

/// `min |A x - b|² + λ |x|²` with `λ^{1/2}` a few ulps of `max |A_ij|`, solved
/// as a stacked full-rank least-squares problem.
fn damped_least_squares<T: Real>(m: usize, n: usize, a: &[Cplx<T>], b: &[Cplx<T>]) -> Result<Vec<Cplx<T>>, Error> {
    let scale = a.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let mu = scale * T::epsilon() * T::lit(64.0);
    let mut stacked = a.to_vec();
    stacked.resize((m + n) * n, Cplx::zero());
    for j in 0..n {
        stacked[(m + j) * n + j] = Complex::new(mu, T::zero());
    }
    let mut rhs = b.to_vec();
    rhs.resize(m + n, Cplx::zero());
    least_squares(m + n, n, &stacked, &rhs, T::epsilon())
        .map_err(|e| Error::InvalidArgument(format!("damped moment system has rank {} of {}", e.rank, e.needed)))
}
