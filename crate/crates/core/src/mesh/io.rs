//! ASCII mesh dump.
//!
//! ```text
//! pwdg-mesh v1
//! V <count>
//! <x> <y>                 (17 significant digits)
//! T <count>
//! <i> <j> <k> <region>
//! E <count>
//! <i> <j> <tag>           (0 interior, 1 Dirichlet, 2 impedance, 3 material interface)
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{edge_key, EdgeTag, Mesh};
use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::Error;

pub const HEADER: &str = "pwdg-mesh v1";

fn tag_code<T: Real>(e: &super::Edge<T>) -> u8 {
    match e.tag {
        EdgeTag::Interior if e.interface => 3,
        EdgeTag::Interior => 0,
        EdgeTag::Dirichlet => 1,
        EdgeTag::Impedance => 2,
    }
}

pub fn write_mesh<T: Real, W: Write>(mesh: &Mesh<T>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "V {}", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{:.16e} {:.16e}", p.x, p.y)?;
    }
    writeln!(w, "T {}", mesh.num_triangles())?;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        writeln!(w, "{} {} {} {}", tri[0], tri[1], tri[2], mesh.regions()[t])?;
    }
    writeln!(w, "E {}", mesh.num_edges())?;
    for e in mesh.edges() {
        writeln!(w, "{} {} {}", e.vertices[0], e.vertices[1], tag_code(e))?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, message: msg.into() }
}

/// Read a mesh written by [`write_mesh`]. Lineage is reset: every triangle is
/// its own parent at generation 0.
pub fn read_mesh<T: Real, R: BufRead>(r: R) -> Result<Mesh<T>, Error> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), Error> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s)),
            Some((n, Err(e))) => Err(parse_err(n, e.to_string())),
            None => Err(parse_err(0, format!("unexpected end of input, expected {what}"))),
        }
    };
    let (n, header) = next("header")?;
    if header.trim() != HEADER {
        return Err(parse_err(n, format!("expected `{HEADER}`")));
    }
    let count = |line: (usize, String), key: &str| -> Result<usize, Error> {
        let mut it = line.1.split_whitespace();
        if it.next() != Some(key) {
            return Err(parse_err(line.0, format!("expected `{key} <count>`")));
        }
        it.next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| parse_err(line.0, "bad count"))
    };
    fn fields<const N: usize>(line: &(usize, String)) -> Result<[&str; N], Error> {
        let parts: Vec<&str> = line.1.split_whitespace().collect();
        parts
            .try_into()
            .map_err(|_| parse_err(line.0, format!("expected {N} fields")))
    }

    let nv = count(next("vertex count")?, "V")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = next("vertex")?;
        let [x, y] = fields::<2>(&line)?;
        let x: f64 = x.parse().map_err(|_| parse_err(line.0, "bad coordinate"))?;
        let y: f64 = y.parse().map_err(|_| parse_err(line.0, "bad coordinate"))?;
        vertices.push(Vec2::new(T::lit(x), T::lit(y)));
    }
    let nt = count(next("triangle count")?, "T")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = next("triangle")?;
        let f = fields::<4>(&line)?;
        let mut v = [0usize; 3];
        for k in 0..3 {
            v[k] = f[k].parse().map_err(|_| parse_err(line.0, "bad vertex index"))?;
        }
        triangles.push(v);
        regions.push(f[3].parse().map_err(|_| parse_err(line.0, "bad region"))?);
    }
    let ne = count(next("edge count")?, "E")?;
    let mut tags = HashMap::new();
    let mut order = HashMap::new();
    for id in 0..ne {
        let line = next("edge")?;
        let [a, b, tag] = fields::<3>(&line)?;
        let a: usize = a.parse().map_err(|_| parse_err(line.0, "bad vertex index"))?;
        let b: usize = b.parse().map_err(|_| parse_err(line.0, "bad vertex index"))?;
        let tag = match tag {
            "0" | "3" => EdgeTag::Interior,
            "1" => EdgeTag::Dirichlet,
            "2" => EdgeTag::Impedance,
            other => return Err(parse_err(line.0, format!("bad edge tag `{other}`"))),
        };
        if tag.is_boundary() {
            tags.insert(edge_key(a, b), tag);
        }
        order.insert(edge_key(a, b), id);
    }
    let mesh = Mesh::from_parts(vertices, triangles, regions, vec![0; nt], (0..nt).collect(), &tags, Some(&order))?;
    if mesh.num_edges() != ne {
        return Err(parse_err(0, "edge list does not match triangle topology"));
    }
    Ok(mesh)
}
