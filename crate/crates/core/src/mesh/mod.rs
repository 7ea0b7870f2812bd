//! Conforming triangle meshes: topology, boundary classification, quality
//! diagnostics and recursive longest-edge bisection.

mod build;
pub mod io;
mod quality;
mod refine;

use std::collections::HashMap;

use crate::geometry::{signed_area2, Vec2};
use crate::scalar::Real;
use crate::Error;

pub use build::{make_initial_mesh, BoundaryAssignment, Domain};
pub use quality::{mesh_stats, triangle_diameter, triangle_inscribed_diameter, MeshQuality};
pub use io::{read_mesh, write_mesh};
pub use refine::refine_leb;

/// Boundary classification of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Interior,
    Dirichlet,
    Impedance,
}

impl EdgeTag {
    pub fn is_boundary(self) -> bool {
        !matches!(self, EdgeTag::Interior)
    }
}

/// Mesh edge. `vertices` are ordered counterclockwise with respect to the first
/// adjacent triangle, so [`Edge::normal`] points out of that triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub vertices: [usize; 2],
    pub length: T,
    pub tag: EdgeTag,
    /// Interior edge separating two material regions.
    pub interface: bool,
    pub triangles: [usize; 2],
}

impl<T: Real> Edge<T> {
    pub const NO_TRIANGLE: usize = usize::MAX;

    pub fn is_interior(&self) -> bool {
        self.tag == EdgeTag::Interior
    }

    /// The neighbor on the far side of the normal, if any.
    pub fn second_triangle(&self) -> Option<usize> {
        (self.triangles[1] != Self::NO_TRIANGLE).then_some(self.triangles[1])
    }
}

/// Unordered vertex pair used to key edges.
#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    vertices: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<u8>,
    generation: Vec<u32>,
    parent: Vec<usize>,
    edges: Vec<Edge<T>>,
    /// `triangle_edges[t][k]` joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
}

impl<T: Real> Mesh<T> {
    /// Assemble a mesh from vertices and counterclockwise triangles.
    ///
    /// Boundary edges take their tag from `boundary_tags` (keyed by the
    /// sorted vertex pair) and default to [`EdgeTag::Dirichlet`]. Edges are
    /// numbered in order of first appearance unless `edge_order` supplies a
    /// rank for a key, in which case ranked edges come first in rank order.
    pub fn from_parts(
        vertices: Vec<Vec2<T>>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<u8>,
        generation: Vec<u32>,
        parent: Vec<usize>,
        boundary_tags: &HashMap<(usize, usize), EdgeTag>,
        edge_order: Option<&HashMap<(usize, usize), usize>>,
    ) -> Result<Self, Error> {
        let nt = triangles.len();
        if nt == 0 {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        if regions.len() != nt || generation.len() != nt || parent.len() != nt {
            return Err(Error::InvalidMesh("per-triangle arrays have mismatched lengths".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area2 = signed_area2(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area2 > T::zero()) {
                return Err(Error::InvalidMesh(format!("triangle {t} is not positively oriented")));
            }
        }

        // Collect edge records in first-appearance order.
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(nt * 2);
        let mut raw: Vec<([usize; 2], [usize; 2])> = Vec::with_capacity(nt * 2);
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = edge_key(a, b);
                match index.get(&key) {
                    Some(&e) => {
                        let rec = &mut raw[e];
                        if rec.1[1] != Edge::<T>::NO_TRIANGLE {
                            return Err(Error::InvalidMesh(format!(
                                "edge {a}-{b} is shared by more than two triangles"
                            )));
                        }
                        if rec.0 == [a, b] {
                            return Err(Error::InvalidMesh(format!(
                                "edge {a}-{b} has inconsistent orientation"
                            )));
                        }
                        rec.1[1] = t;
                    }
                    None => {
                        index.insert(key, raw.len());
                        raw.push(([a, b], [t, Edge::<T>::NO_TRIANGLE]));
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..raw.len()).collect();
        if let Some(rank) = edge_order {
            order.sort_by_key(|&e| {
                let key = edge_key(raw[e].0[0], raw[e].0[1]);
                (rank.get(&key).copied().unwrap_or(usize::MAX), e)
            });
        }
        let mut new_id = vec![0usize; raw.len()];
        let mut edges = Vec::with_capacity(raw.len());
        for (id, &e) in order.iter().enumerate() {
            new_id[e] = id;
            let (verts, tris) = raw[e];
            let length = (vertices[verts[1]] - vertices[verts[0]]).norm();
            let boundary = tris[1] == Edge::<T>::NO_TRIANGLE;
            let tag = if boundary {
                let t = boundary_tags
                    .get(&edge_key(verts[0], verts[1]))
                    .copied()
                    .unwrap_or(EdgeTag::Dirichlet);
                if t == EdgeTag::Interior {
                    EdgeTag::Dirichlet
                } else {
                    t
                }
            } else {
                EdgeTag::Interior
            };
            let interface = !boundary && regions[tris[0]] != regions[tris[1]];
            edges.push(Edge { vertices: verts, length, tag, interface, triangles: tris });
        }
        let mut triangle_edges = vec![[0usize; 3]; nt];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                triangle_edges[t][k] = new_id[index[&key]];
            }
        }
        Ok(Self { vertices, triangles, regions, generation, parent, edges, triangle_edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge<T> {
        &self.edges[e]
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Material region of each triangle (0 unless the domain has an interface).
    pub fn regions(&self) -> &[u8] {
        &self.regions
    }

    /// Number of bisections separating each triangle from the initial mesh.
    pub fn generations(&self) -> &[u32] {
        &self.generation
    }

    /// For each triangle, the index of the triangle in the previous mesh it
    /// came from (itself, for meshes not produced by refinement).
    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> T {
        let [a, b, c] = self.triangle_points(t);
        signed_area2(a, b, c) * T::lit(0.5)
    }

    pub fn centroid(&self, t: usize) -> Vec2<T> {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c).scale(T::one() / T::lit(3.0))
    }

    pub fn edge_points(&self, e: usize) -> (Vec2<T>, Vec2<T>) {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a], self.vertices[b])
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec2<T> {
        let (a, b) = self.edge_points(e);
        a.midpoint(b)
    }

    /// Unit normal pointing out of the edge's first triangle.
    pub fn edge_normal(&self, e: usize) -> Vec2<T> {
        let (a, b) = self.edge_points(e);
        (b - a).perp_cw().normalized()
    }

    /// Outward unit normal of triangle `t` on edge `e`.
    pub fn outward_normal(&self, t: usize, e: usize) -> Vec2<T> {
        let n = self.edge_normal(e);
        if self.edges[e].triangles[0] == t {
            n
        } else {
            -n
        }
    }

    /// Edge-adjacent neighbors of triangle `t`.
    pub fn neighbors(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.triangle_edges[t].into_iter().filter_map(move |e| {
            let a = self.edges[e].triangles[0];
            if a == t {
                self.edges[e].second_triangle()
            } else {
                Some(a)
            }
        })
    }

    /// Retag every boundary edge through `f(midpoint, current tag)`.
    pub fn retag_boundary<F: Fn(Vec2<T>, EdgeTag) -> EdgeTag>(&mut self, f: F) {
        for e in 0..self.edges.len() {
            if self.edges[e].tag.is_boundary() {
                let m = self.edge_midpoint(e);
                let tag = f(m, self.edges[e].tag);
                self.edges[e].tag = if tag == EdgeTag::Interior { EdgeTag::Dirichlet } else { tag };
            }
        }
    }

    /// Boundary tags keyed by sorted vertex pair.
    pub(crate) fn boundary_tag_map(&self) -> HashMap<(usize, usize), EdgeTag> {
        self.edges
            .iter()
            .filter(|e| e.tag.is_boundary())
            .map(|e| (edge_key(e.vertices[0], e.vertices[1]), e.tag))
            .collect()
    }

    pub fn total_area(&self) -> T {
        (0..self.num_triangles()).fold(T::zero(), |s, t| s + self.area(t))
    }

    /// Vertices lying strictly inside some edge they are not an endpoint of.
    pub fn hanging_nodes(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let (mut lo, mut hi) = (self.vertices[0], self.vertices[0]);
        for p in &self.vertices {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cells = ((n as f64).sqrt().ceil() as usize).max(1);
        let cw = ((hi.x - lo.x) / T::from_usize_lossy(cells)).max(T::epsilon());
        let ch = ((hi.y - lo.y) / T::from_usize_lossy(cells)).max(T::epsilon());
        let cell_of = |p: Vec2<T>| {
            let i = ((p.x - lo.x) / cw).to_f64_lossy().floor().clamp(0.0, (cells - 1) as f64) as usize;
            let j = ((p.y - lo.y) / ch).to_f64_lossy().floor().clamp(0.0, (cells - 1) as f64) as usize;
            (i, j)
        };
        let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (v, &p) in self.vertices.iter().enumerate() {
            let (i, j) = cell_of(p);
            grid[j * cells + i].push(v);
        }
        let tol = T::lit(1e-10);
        let mut hanging = Vec::new();
        for e in &self.edges {
            let (a, b) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
            let (i0, j0) = cell_of(Vec2::new(a.x.min(b.x), a.y.min(b.y)));
            let (i1, j1) = cell_of(Vec2::new(a.x.max(b.x), a.y.max(b.y)));
            let d = b - a;
            let len2 = d.norm_squared();
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for &v in &grid[j * cells + i] {
                        if v == e.vertices[0] || v == e.vertices[1] {
                            continue;
                        }
                        let w = self.vertices[v] - a;
                        let s = w.dot(d) / len2;
                        if s > tol && s < T::one() - tol && (w.cross(d)).abs() <= tol * len2 {
                            hanging.push(v);
                        }
                    }
                }
            }
        }
        hanging.sort_unstable();
        hanging.dedup();
        hanging
    }

    /// Verify the structural invariants: positive areas, edge multiplicities,
    /// consistent incidence and no hanging nodes.
    pub fn check_invariants(&self) -> Result<(), Error> {
        for t in 0..self.num_triangles() {
            if !(self.area(t) > T::zero()) {
                return Err(Error::InvalidMesh(format!("triangle {t} has nonpositive area")));
            }
            let tri = self.triangles[t];
            for k in 0..3 {
                let e = &self.edges[self.triangle_edges[t][k]];
                if edge_key(e.vertices[0], e.vertices[1]) != edge_key(tri[k], tri[(k + 1) % 3]) {
                    return Err(Error::InvalidMesh(format!("triangle {t} edge {k} incidence mismatch")));
                }
                if e.triangles[0] != t && e.triangles[1] != t {
                    return Err(Error::InvalidMesh(format!("edge of triangle {t} does not list it")));
                }
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !(e.length > T::zero()) {
                return Err(Error::InvalidMesh(format!("edge {i} has zero length")));
            }
            let two = e.second_triangle().is_some();
            if two != e.is_interior() {
                return Err(Error::InvalidMesh(format!("edge {i} tag disagrees with its adjacency")));
            }
        }
        let hanging = self.hanging_nodes();
        if !hanging.is_empty() {
            return Err(Error::InvalidMesh(format!("hanging nodes at vertices {hanging:?}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_with_hanging_node() -> Mesh<f64> {
        // lower-right triangle split at the diagonal midpoint, upper-left left intact
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.5),
        ];
        let t = vec![[0, 1, 4], [1, 2, 4], [0, 2, 3]];
        Mesh::from_parts(v, t, vec![0; 3], vec![0; 3], vec![0, 1, 2], &HashMap::new(), None).unwrap()
    }

    #[test]
    fn detects_hanging_node() {
        let m = square_with_hanging_node();
        assert_eq!(m.hanging_nodes(), vec![4]);
        assert!(m.check_invariants().is_err());
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)];
        let err = Mesh::from_parts(v, vec![[0, 1, 2]], vec![0], vec![0], vec![0], &HashMap::new(), None);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn normals_point_out_of_first_triangle() {
        let m = make_initial_mesh::<f64>(Domain::UnitSquare, 2).unwrap();
        for e in 0..m.num_edges() {
            let t = m.edge(e).triangles[0];
            let n = m.edge_normal(e);
            let to_mid = m.edge_midpoint(e) - m.centroid(t);
            assert!(n.dot(to_mid) > 0.0);
            assert!((n.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn neighbors_are_symmetric() {
        let m = make_initial_mesh::<f64>(Domain::LShape, 2).unwrap();
        for t in 0..m.num_triangles() {
            for s in m.neighbors(t) {
                assert!(m.neighbors(s).any(|r| r == t));
            }
        }
    }
}
