//! Closed-form plane-wave edge integrals plus Gauss rules on segments and triangles.

use num_complex::Complex;
use num_traits::Zero;

use crate::geometry::Vec2;
use crate::mesh::Mesh;
use crate::scalar::{cis, Cplx, Real};
use crate::Error;

/// Below this magnitude `sin(t)/t` is evaluated from its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

/// Largest per-edge Gauss rule used for boundary data.
pub const EDGE_DATA_MAX_POINTS: usize = 64;

/// `sin(t) / t`, continuous through `t = 0`.
pub fn sinc<T: Real>(t: T) -> T {
    if t.abs() < T::lit(SINC_SERIES_CUTOFF) {
        let t2 = t * t;
        T::one() - t2 / T::lit(6.0) + t2 * t2 / T::lit(120.0)
    } else {
        t.sin() / t
    }
}

/// Exact value of `∫_e exp(i k·x) ds` over the straight segment from `a` to `b`.
pub fn edge_integral_exp<T: Real>(a: Vec2<T>, b: Vec2<T>, k: Vec2<T>) -> Result<Cplx<T>, Error> {
    let d = b - a;
    let len = d.norm();
    if !(len > T::zero()) {
        return Err(Error::DegenerateEdge);
    }
    Ok(edge_integral_exp_unchecked(a, b, k))
}

/// As [`edge_integral_exp`] without the degeneracy check; mesh edges are
/// nondegenerate by construction.
#[inline]
pub(crate) fn edge_integral_exp_unchecked<T: Real>(a: Vec2<T>, b: Vec2<T>, k: Vec2<T>) -> Cplx<T> {
    let d = b - a;
    let m = a.midpoint(b);
    cis(k.dot(m)) * (d.norm() * sinc(k.dot(d) * T::lit(0.5)))
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        // Newton iteration in f64 from the Tricomi initial guess, then cast.
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Points and weights mapped onto the segment `a -> b` (weights include the length).
    pub fn on_segment(&self, a: Vec2<T>, b: Vec2<T>) -> impl Iterator<Item = (Vec2<T>, T)> + '_ {
        let half = (b - a).scale(T::lit(0.5));
        let mid = a.midpoint(b);
        let jac = half.norm();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half.scale(t), w * jac))
    }

    /// Integrate a complex function along the segment `a -> b`.
    pub fn integrate_segment<F: FnMut(Vec2<T>) -> Cplx<T>>(&self, a: Vec2<T>, b: Vec2<T>, mut f: F) -> Cplx<T> {
        let mut s = Complex::zero();
        for (x, w) in self.on_segment(a, b) {
            s += f(x) * w;
        }
        s
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Number of Gauss points that resolves a band-limited integrand on a segment.
///
/// `half_bandwidth` is the largest `|ω|` of the terms `exp(i ω t)`, `t ∈ [-1, 1]`,
/// making up the integrand. The resulting rule is exact far below roundoff.
pub fn points_for_bandwidth<T: Real>(half_bandwidth: T) -> usize {
    let w = half_bandwidth.abs().to_f64_lossy();
    ((1.5 * w).ceil() as usize + 12).min(400)
}

/// Composite-free adaptive Gauss integration of a vector-valued integrand along a
/// segment: starts at `n0` points and doubles until successive results differ by
/// less than `rtol` relative, or `max_points` is reached.
pub fn adaptive_edge_integral<T, F>(
    a: Vec2<T>,
    b: Vec2<T>,
    dim: usize,
    n0: usize,
    max_points: usize,
    rtol: T,
    mut f: F,
) -> Vec<Cplx<T>>
where
    T: Real,
    F: FnMut(Vec2<T>, &mut [Cplx<T>]),
{
    let mut buf = vec![Complex::zero(); dim];
    let mut eval = |n: usize, buf: &mut Vec<Cplx<T>>| {
        let rule = GaussLegendre::new(n);
        let mut acc = vec![Complex::zero(); dim];
        for (x, w) in rule.on_segment(a, b) {
            buf.iter_mut().for_each(|v| *v = Complex::zero());
            f(x, buf);
            for (s, v) in acc.iter_mut().zip(buf.iter()) {
                *s += *v * w;
            }
        }
        acc
    };
    let mut n = n0.clamp(1, max_points);
    let mut prev = eval(n, &mut buf);
    while n < max_points {
        n = (2 * n).min(max_points);
        let next = eval(n, &mut buf);
        let scale = next.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        let diff = next
            .iter()
            .zip(&prev)
            .map(|(u, v)| (u - v).norm())
            .fold(T::zero(), T::max);
        prev = next;
        if diff <= rtol * scale || scale == T::zero() {
            break;
        }
    }
    prev
}

/// Quadrature rule on a triangle in barycentric coordinates, weights summing to 1.
#[derive(Debug, Clone)]
pub struct TriangleRule<T> {
    pub degree: usize,
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> TriangleRule<T> {
    /// Collapsed-coordinate (Duffy) Gauss rule exact for polynomials of total
    /// degree `degree`.
    pub fn new(degree: usize) -> Self {
        let n = (degree + 2).div_ceil(2).max(1);
        let g = GaussLegendre::<T>::new(n);
        let half = T::lit(0.5);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let s = (g.nodes[i] + T::one()) * half;
            let ws = g.weights[i] * half;
            for j in 0..n {
                let t = (g.nodes[j] + T::one()) * half;
                let wt = g.weights[j] * half;
                let x = s;
                let y = (T::one() - s) * t;
                points.push([T::one() - x - y, x, y]);
                // reference area is 1/2; normalize to unit total weight
                weights.push(ws * wt * (T::one() - s) * T::lit(2.0));
            }
        }
        Self { degree, points, weights }
    }

    /// Physical points and area-scaled weights on triangle `(a, b, c)`.
    pub fn on_triangle(&self, a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> impl Iterator<Item = (Vec2<T>, T)> + '_ {
        let area = crate::geometry::signed_area2(a, b, c).abs() * T::lit(0.5);
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = a.scale(l[0]) + b.scale(l[1]) + c.scale(l[2]);
            (x, w * area)
        })
    }
}

/// `sqrt(Σ_K ∫_K |field|^2 dA)` where `field(element, point)` is evaluated element-wise.
pub fn l2_norm_on_mesh<T, F>(mesh: &Mesh<T>, degree: usize, field: F) -> Result<T, Error>
where
    T: Real,
    F: Fn(usize, Vec2<T>) -> Cplx<T>,
{
    if degree < 2 {
        return Err(Error::InvalidArgument(format!("quadrature degree {degree} < 2")));
    }
    let rule = TriangleRule::<T>::new(degree);
    let mut total = T::zero();
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle_points(t);
        for (x, w) in rule.on_triangle(a, b, c) {
            total += field(t, x).norm_sqr() * w;
        }
    }
    Ok(total.sqrt())
}
