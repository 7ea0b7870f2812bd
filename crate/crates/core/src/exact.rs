//! Closed-form solutions used as references: Bessel fields on the L-shape,
//! plane-wave transmission across `y = 0`, and single plane waves.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::basis::PlaneWaveSpace;
use crate::bessel::bessel_j;
use crate::geometry::Vec2;
use crate::mesh::{triangle_diameter, Mesh};
use crate::quadrature::TriangleRule;
use crate::scalar::{cis, Cplx, Real};
use crate::Error;

/// Boundary condition kind for [`ExactSolution::boundary_data`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Impedance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution<T> {
    /// `J_ξ(κr) sin(ξθ)` with `θ ∈ [0, 2π)` measured from the positive x axis.
    Bessel { order: T, kappa: T },
    /// Plane wave incident from `y < 0` (index `n1`) on the half plane
    /// `y > 0` (index `n2`); `d = (cos θ_i, sin θ_i)`.
    Transmission { n1: T, n2: T, kappa: T, theta_i: T },
    /// `exp(iκ d·x)`.
    PlaneWave { direction: Vec2<T>, kappa: T },
}

/// Reflection and transmission data of [`ExactSolution::Transmission`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionCoefficients<T> {
    pub k1: T,
    pub k2: Cplx<T>,
    pub r: Cplx<T>,
    pub t: Cplx<T>,
}

impl<T: Real> ExactSolution<T> {
    pub fn kappa(&self) -> T {
        match *self {
            ExactSolution::Bessel { kappa, .. }
            | ExactSolution::Transmission { kappa, .. }
            | ExactSolution::PlaneWave { kappa, .. } => kappa,
        }
    }

    /// Refractive index `n` at `x`; the local wavenumber is `κ n`.
    pub fn refractive_index(&self, x: Vec2<T>) -> T {
        match *self {
            ExactSolution::Transmission { n1, n2, .. } => {
                if x.y < T::zero() {
                    n1
                } else {
                    n2
                }
            }
            _ => T::one(),
        }
    }

    /// `ε_r = n²` per element, sampled at centroids.
    pub fn eps_r_on_mesh(&self, mesh: &Mesh<T>) -> Vec<T> {
        (0..mesh.num_triangles())
            .map(|t| self.refractive_index(mesh.centroid(t)).powi(2))
            .collect()
    }

    /// Critical angle (from the interface) for total internal reflection;
    /// `None` if every angle transmits.
    pub fn critical_angle(&self) -> Option<T> {
        match *self {
            ExactSolution::Transmission { n1, n2, .. } if n2 < n1 => Some((n2 / n1).acos()),
            _ => None,
        }
    }

    pub fn transmission_coefficients(&self) -> Option<TransmissionCoefficients<T>> {
        let ExactSolution::Transmission { n1, n2, kappa, theta_i } = *self else {
            return None;
        };
        let (d2, d1) = theta_i.sin_cos();
        let k1 = kappa * n1 * d1;
        let radicand = n2 * n2 - n1 * n1 * d1 * d1;
        let k2 = if radicand >= T::zero() {
            Complex::new(kappa * radicand.sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), kappa * (-radicand).sqrt())
        };
        let kn = Complex::new(kappa * n1 * d2, T::zero());
        let r = -(k2 - kn) / (k2 + kn);
        Some(TransmissionCoefficients { k1, k2, r, t: Complex::new(T::one(), T::zero()) + r })
    }

    /// `(u, ∇u)` at `x`. The Bessel gradient at the origin is returned as zero.
    pub fn eval(&self, x: Vec2<T>) -> Result<(Cplx<T>, [Cplx<T>; 2]), Error> {
        let i = Complex::new(T::zero(), T::one());
        match *self {
            ExactSolution::PlaneWave { direction, kappa } => {
                let k = direction.normalized().scale(kappa);
                let u = cis(k.dot(x));
                Ok((u, [i * u * k.x, i * u * k.y]))
            }
            ExactSolution::Transmission { n1, kappa, theta_i, .. } => {
                let c = self.transmission_coefficients().expect("transmission");
                let ky = kappa * n1 * theta_i.sin();
                let ex = cis(c.k1 * x.x);
                if x.y < T::zero() {
                    let inc = ex * cis(ky * x.y);
                    let refl = c.r * ex * cis(-ky * x.y);
                    let u = inc + refl;
                    Ok((u, [i * u * c.k1, i * (inc - refl) * ky]))
                } else {
                    let u = c.t * ex * (i * c.k2 * x.y).exp();
                    Ok((u, [i * u * c.k1, i * u * c.k2]))
                }
            }
            ExactSolution::Bessel { order, kappa } => {
                let r = x.norm();
                let mut theta = x.y.atan2(x.x);
                if theta < T::zero() {
                    theta += T::TAU();
                }
                let (j, dj) = bessel_j(order, kappa * r)?;
                let (s, c) = (order * theta).sin_cos();
                let u = Complex::new(j * s, T::zero());
                if r == T::zero() {
                    return Ok((u, [Complex::new(T::zero(), T::zero()); 2]));
                }
                let ur = kappa * dj * s;
                let ut = j * order * c / r;
                let (st, ct) = theta.sin_cos();
                let gx = ur * ct - ut * st;
                let gy = ur * st + ut * ct;
                Ok((u, [Complex::new(gx, T::zero()), Complex::new(gy, T::zero())]))
            }
        }
    }

    /// Dirichlet data `u`, or impedance data `∇u·ν - iκ n u`.
    pub fn boundary_data(&self, kind: BcKind, x: Vec2<T>, normal: Vec2<T>) -> Result<Cplx<T>, Error> {
        let (u, g) = self.eval(x)?;
        Ok(match kind {
            BcKind::Dirichlet => u,
            BcKind::Impedance => {
                let k = self.kappa() * self.refractive_index(x);
                g[0] * normal.x + g[1] * normal.y - Complex::new(T::zero(), k) * u
            }
        })
    }
}

/// Quadrature degree used on element `t`: at least `degree`, raised so the
/// rule resolves the oscillation of `|u_h - u|²` across the element.
fn element_degree<T: Real>(mesh: &Mesh<T>, space: &PlaneWaveSpace<T>, t: usize, degree: usize) -> usize {
    let h = triangle_diameter(mesh.triangle_points(t));
    let phase = (T::lit(2.0) * space.kappa_local(t) * h).to_f64_lossy();
    degree.max(phase.ceil() as usize + 8)
}

/// `‖u_h - u‖ / ‖u‖` in `L²(Ω)`.
pub fn relative_l2_error<T: Real>(
    mesh: &Mesh<T>,
    space: &PlaneWaveSpace<T>,
    coeffs: &[Cplx<T>],
    exact: &ExactSolution<T>,
    degree: usize,
) -> Result<T, Error> {
    if coeffs.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch { expected: space.num_dofs(), found: coeffs.len() });
    }
    if degree < 2 {
        return Err(Error::InvalidArgument(format!("quadrature degree {degree} < 2")));
    }
    let mut rules: BTreeMap<usize, TriangleRule<T>> = BTreeMap::new();
    let (mut err2, mut norm2) = (T::zero(), T::zero());
    for t in 0..mesh.num_triangles() {
        let d = element_degree(mesh, space, t, degree);
        let rule = rules.entry(d).or_insert_with(|| TriangleRule::new(d));
        let [a, b, c] = mesh.triangle_points(t);
        for (x, w) in rule.on_triangle(a, b, c) {
            let (u, _) = exact.eval(x)?;
            let (uh, _) = space.eval_field(coeffs, t, x);
            err2 += (uh - u).norm_sqr() * w;
            norm2 += u.norm_sqr() * w;
        }
    }
    if norm2 == T::zero() {
        return Err(Error::InvalidArgument("exact solution has zero L2 norm".into()));
    }
    Ok((err2 / norm2).sqrt())
}
