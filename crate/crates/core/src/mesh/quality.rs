use super::Mesh;
use crate::geometry::{signed_area2, Vec2};
use crate::scalar::Real;

/// Shape and grading diagnostics of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshQuality<T> {
    /// Largest element diameter.
    pub h: T,
    /// Diameter of the smallest circle containing each element.
    pub h_k: Vec<T>,
    /// Diameter of the inscribed circle of each element.
    pub rho_k: Vec<T>,
    /// `max h_K / rho_K`.
    pub sigma: T,
    /// `max h_K1 / h_K2` over edge-adjacent pairs (1 when there are none).
    pub tau: T,
    /// `h / min h_K` over elements with an impedance edge (1 when there are none).
    pub tau_a: T,
    /// Smallest interior angle, radians.
    pub min_angle: T,
}

/// Diameter of the smallest enclosing circle: the longest side for right and
/// obtuse triangles, the circumcircle diameter otherwise.
pub fn triangle_diameter<T: Real>(p: [Vec2<T>; 3]) -> T {
    let l2 = [
        (p[1] - p[0]).norm_squared(),
        (p[2] - p[1]).norm_squared(),
        (p[0] - p[2]).norm_squared(),
    ];
    let (imax, &max2) = l2
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let others = l2[(imax + 1) % 3] + l2[(imax + 2) % 3];
    if max2 >= others {
        return max2.sqrt();
    }
    let area2 = signed_area2(p[0], p[1], p[2]).abs();
    // abc / (2 area) = abc / area2
    (l2[0].sqrt() * l2[1].sqrt() * l2[2].sqrt()) / area2
}

/// Diameter of the inscribed circle, `2 area / semiperimeter`.
pub fn triangle_inscribed_diameter<T: Real>(p: [Vec2<T>; 3]) -> T {
    let area = signed_area2(p[0], p[1], p[2]).abs() * T::lit(0.5);
    let perimeter = (p[1] - p[0]).norm() + (p[2] - p[1]).norm() + (p[0] - p[2]).norm();
    T::lit(4.0) * area / perimeter
}

fn min_angle_of<T: Real>(p: [Vec2<T>; 3]) -> T {
    let mut best = T::infinity();
    for k in 0..3 {
        let u = p[(k + 1) % 3] - p[k];
        let w = p[(k + 2) % 3] - p[k];
        let ang = u.cross(w).abs().atan2(u.dot(w));
        best = best.min(ang);
    }
    best
}

/// Compute [`MeshQuality`] for `mesh`.
pub fn mesh_stats<T: Real>(mesh: &Mesh<T>) -> MeshQuality<T> {
    let nt = mesh.num_triangles();
    let mut h_k = Vec::with_capacity(nt);
    let mut rho_k = Vec::with_capacity(nt);
    let mut sigma = T::zero();
    let mut min_angle = T::infinity();
    for t in 0..nt {
        let p = mesh.triangle_points(t);
        let hk = triangle_diameter(p);
        let rk = triangle_inscribed_diameter(p);
        sigma = sigma.max(hk / rk);
        min_angle = min_angle.min(min_angle_of(p));
        h_k.push(hk);
        rho_k.push(rk);
    }
    let h = h_k.iter().copied().fold(T::zero(), T::max);
    let mut tau = T::one();
    let mut min_near_impedance = T::infinity();
    for e in mesh.edges() {
        match e.second_triangle() {
            Some(s) => {
                let (a, b) = (h_k[e.triangles[0]], h_k[s]);
                tau = tau.max(a / b).max(b / a);
            }
            None if e.tag == super::EdgeTag::Impedance => {
                min_near_impedance = min_near_impedance.min(h_k[e.triangles[0]]);
            }
            None => {}
        }
    }
    let tau_a = if min_near_impedance.is_finite() { h / min_near_impedance } else { T::one() };
    MeshQuality { h, h_k, rho_k, sigma, tau, tau_a, min_angle }
}
