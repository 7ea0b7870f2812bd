use std::collections::{BTreeSet, HashMap};

use super::{edge_key, EdgeTag, Mesh};
use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::Error;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    region: u8,
    generation: u32,
    origin: usize,
}

/// Mutable working copy used while bisecting.
struct Workspace<T> {
    vertices: Vec<Vec2<T>>,
    tris: Vec<Option<Tri>>,
    edge_tris: HashMap<(usize, usize), [usize; 2]>,
    edge_ids: HashMap<(usize, usize), usize>,
    next_edge_id: usize,
    tags: HashMap<(usize, usize), EdgeTag>,
}

impl<T: Real> Workspace<T> {
    fn new(mesh: &Mesh<T>) -> Self {
        let tris = (0..mesh.num_triangles())
            .map(|t| {
                Some(Tri {
                    v: mesh.triangles[t],
                    region: mesh.regions[t],
                    generation: mesh.generation[t],
                    origin: t,
                })
            })
            .collect();
        let mut edge_tris = HashMap::with_capacity(mesh.num_edges() * 2);
        let mut edge_ids = HashMap::with_capacity(mesh.num_edges() * 2);
        for (id, e) in mesh.edges.iter().enumerate() {
            let key = edge_key(e.vertices[0], e.vertices[1]);
            edge_tris.insert(key, [e.triangles[0], e.triangles[1]]);
            edge_ids.insert(key, id);
        }
        Self {
            vertices: mesh.vertices.clone(),
            tris,
            edge_tris,
            edge_ids,
            next_edge_id: mesh.num_edges(),
            tags: mesh.boundary_tag_map(),
        }
    }

    fn alive(&self, t: usize) -> bool {
        self.tris[t].is_some()
    }

    /// Longest edge of `t` as a local index `k` (edge `v[k] -> v[k+1]`).
    /// Squared lengths are compared exactly; ties go to the lowest edge id.
    fn longest_local_edge(&self, t: usize) -> usize {
        let tri = self.tris[t].expect("live triangle");
        let mut best = 0;
        let mut best_len = T::neg_infinity();
        let mut best_id = usize::MAX;
        for k in 0..3 {
            let (a, b) = (tri.v[k], tri.v[(k + 1) % 3]);
            let len = (self.vertices[b] - self.vertices[a]).norm_squared();
            let id = self.edge_ids[&edge_key(a, b)];
            if len > best_len || (len == best_len && id < best_id) {
                best = k;
                best_len = len;
                best_id = id;
            }
        }
        best
    }

    fn longest_edge_key(&self, t: usize) -> (usize, usize) {
        let tri = self.tris[t].expect("live triangle");
        let k = self.longest_local_edge(t);
        edge_key(tri.v[k], tri.v[(k + 1) % 3])
    }

    fn other_triangle(&self, key: (usize, usize), t: usize) -> Option<usize> {
        let [a, b] = self.edge_tris[&key];
        let o = if a == t { b } else { a };
        (o != NONE).then_some(o)
    }

    fn new_edge_id(&mut self, key: (usize, usize)) {
        self.edge_ids.insert(key, self.next_edge_id);
        self.next_edge_id += 1;
    }

    fn replace_in_edge(&mut self, key: (usize, usize), old: usize, new: usize) {
        let slot = self.edge_tris.get_mut(&key).expect("edge present");
        for s in slot.iter_mut() {
            if *s == old {
                *s = new;
                return;
            }
        }
        unreachable!("triangle {old} not adjacent to edge {key:?}");
    }

    fn add_to_edge(&mut self, key: (usize, usize), t: usize) {
        let slot = self.edge_tris.entry(key).or_insert([NONE, NONE]);
        if slot[0] == NONE {
            slot[0] = t;
        } else {
            debug_assert_eq!(slot[1], NONE);
            slot[1] = t;
        }
    }

    /// Bisect every triangle adjacent to edge `key` through its midpoint.
    fn split_edge(&mut self, key: (usize, usize)) {
        let (a, b) = key;
        let m = self.vertices.len();
        self.vertices.push(self.vertices[a].midpoint(self.vertices[b]));
        let adjacent = self.edge_tris.remove(&key).expect("edge present");
        self.edge_ids.remove(&key);
        let (ka, kb) = (edge_key(a, m), edge_key(m, b));
        self.new_edge_id(ka);
        self.new_edge_id(kb);
        if let Some(tag) = self.tags.remove(&key) {
            self.tags.insert(ka, tag);
            self.tags.insert(kb, tag);
        }
        for t in adjacent {
            if t == NONE {
                continue;
            }
            let tri = self.tris[t].take().expect("live triangle");
            // rotate so the split edge is v0 -> v1
            let k = (0..3)
                .find(|&k| edge_key(tri.v[k], tri.v[(k + 1) % 3]) == key)
                .expect("edge belongs to triangle");
            let (v0, v1, v2) = (tri.v[k], tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]);
            let child = |v: [usize; 3]| Tri { v, generation: tri.generation + 1, ..tri };
            let c0 = self.tris.len();
            self.tris.push(Some(child([v0, m, v2])));
            let c1 = self.tris.len();
            self.tris.push(Some(child([m, v1, v2])));
            self.add_to_edge(edge_key(v0, m), c0);
            self.add_to_edge(edge_key(m, v1), c1);
            let km2 = edge_key(m, v2);
            self.new_edge_id(km2);
            self.add_to_edge(km2, c0);
            self.add_to_edge(km2, c1);
            self.replace_in_edge(edge_key(v2, v0), t, c0);
            self.replace_in_edge(edge_key(v1, v2), t, c1);
        }
    }

    /// Rivara's recursive longest-edge bisection of triangle `t`, propagating
    /// along the longest-edge propagation path until the mesh is conforming.
    fn refine(&mut self, t: usize) {
        let mut stack = vec![t];
        while let Some(&top) = stack.last() {
            if !self.alive(top) {
                stack.pop();
                continue;
            }
            let key = self.longest_edge_key(top);
            match self.other_triangle(key, top) {
                Some(n) if self.longest_edge_key(n) != key => stack.push(n),
                _ => {
                    self.split_edge(key);
                    stack.pop();
                }
            }
        }
    }

    fn into_mesh(self) -> Result<Mesh<T>, Error> {
        let mut triangles = Vec::new();
        let mut regions = Vec::new();
        let mut generation = Vec::new();
        let mut parent = Vec::new();
        for tri in self.tris.into_iter().flatten() {
            triangles.push(tri.v);
            regions.push(tri.region);
            generation.push(tri.generation);
            parent.push(tri.origin);
        }
        Mesh::from_parts(
            self.vertices,
            triangles,
            regions,
            generation,
            parent,
            &self.tags,
            Some(&self.edge_ids),
        )
    }
}

/// Refine `mesh` by recursive longest-edge bisection of the `marked`
/// triangles. Returns a new conforming mesh; triangles untouched by the
/// refinement keep their vertices, and `parents()` of the result maps every
/// triangle back to its ancestor in `mesh`.
pub fn refine_leb<T: Real>(mesh: &Mesh<T>, marked: &BTreeSet<usize>) -> Result<Mesh<T>, Error> {
    if let Some(&bad) = marked.iter().find(|&&t| t >= mesh.num_triangles()) {
        return Err(Error::UnknownTriangle(bad));
    }
    if marked.is_empty() {
        let mut same = mesh.clone();
        same.parent = (0..mesh.num_triangles()).collect();
        return Ok(same);
    }
    let mut ws = Workspace::new(mesh);
    for &t in marked {
        if ws.alive(t) {
            ws.refine(t);
        }
    }
    ws.into_mesh()
}
