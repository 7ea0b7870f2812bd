use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{EdgeTag, Mesh};
use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::Error;

/// Computational domains with structured initial meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `(-1,1)^2` minus `[0,1] x [-1,0]`, reentrant corner at the origin.
    LShape,
    /// `(-1,1)^2` with a material interface along `y = 0`.
    UnitSquareWithInterface,
    /// `(0,1)^2`.
    UnitSquare,
}

impl Domain {
    /// Lower-left corners of the unit squares making up the domain.
    fn unit_cells(self) -> &'static [(i64, i64)] {
        match self {
            Domain::LShape => &[(-1, -1), (-1, 0), (0, 0)],
            Domain::UnitSquareWithInterface => &[(-1, -1), (0, -1), (-1, 0), (0, 0)],
            Domain::UnitSquare => &[(0, 0)],
        }
    }

    pub fn area(self) -> f64 {
        self.unit_cells().len() as f64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::LShape => "lshape",
            Domain::UnitSquareWithInterface => "square-interface",
            Domain::UnitSquare => "unit-square",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lshape" | "l-shape" => Ok(Domain::LShape),
            "square-interface" | "unitsquarewithinterface" => Ok(Domain::UnitSquareWithInterface),
            "unit-square" | "unitsquare" => Ok(Domain::UnitSquare),
            other => Err(Error::InvalidArgument(format!("unknown domain `{other}`"))),
        }
    }
}

/// How boundary edges are split between Dirichlet and impedance conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryAssignment {
    AllDirichlet,
    AllImpedance,
    /// Dirichlet on an inner part of the boundary, impedance on the rest: the
    /// two edges meeting at the reentrant corner of the L-shape, or the left
    /// side of the squares.
    Mixed,
}

impl BoundaryAssignment {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryAssignment::AllDirichlet => "dirichlet",
            BoundaryAssignment::AllImpedance => "impedance",
            BoundaryAssignment::Mixed => "mixed",
        }
    }

    /// Tag for a boundary edge with midpoint `m` on `domain`.
    pub fn tag_for<T: Real>(self, domain: Domain, m: Vec2<T>) -> EdgeTag {
        match self {
            BoundaryAssignment::AllDirichlet => EdgeTag::Dirichlet,
            BoundaryAssignment::AllImpedance => EdgeTag::Impedance,
            BoundaryAssignment::Mixed => {
                let tol = T::lit(1e-12);
                let inner = match domain {
                    Domain::LShape => {
                        (m.x.abs() <= tol && m.y < T::zero()) || (m.y.abs() <= tol && m.x > T::zero())
                    }
                    Domain::UnitSquareWithInterface => (m.x + T::one()).abs() <= tol,
                    Domain::UnitSquare => m.x.abs() <= tol,
                };
                if inner {
                    EdgeTag::Dirichlet
                } else {
                    EdgeTag::Impedance
                }
            }
        }
    }
}

impl FromStr for BoundaryAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" | "all-dirichlet" => Ok(BoundaryAssignment::AllDirichlet),
            "impedance" | "all-impedance" => Ok(BoundaryAssignment::AllImpedance),
            "mixed" => Ok(BoundaryAssignment::Mixed),
            other => Err(Error::InvalidArgument(format!("unknown boundary assignment `{other}`"))),
        }
    }
}

/// Structured initial mesh: every unit square of `domain` is cut into a
/// `subdivisions x subdivisions` grid, each small square into two triangles
/// along its south-west to north-east diagonal. All boundary edges are
/// Dirichlet; interface squares above `y = 0` get region 1.
pub fn make_initial_mesh<T: Real>(domain: Domain, subdivisions: usize) -> Result<Mesh<T>, Error> {
    if subdivisions == 0 {
        return Err(Error::InvalidArgument("subdivisions must be at least 1".into()));
    }
    let n = subdivisions as i64;
    let nf = T::from_usize_lossy(subdivisions);
    let mut lattice: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Vec2<T>> = Vec::new();
    let mut vid = |i: i64, j: i64, vertices: &mut Vec<Vec2<T>>| -> usize {
        *lattice.entry((i, j)).or_insert_with(|| {
            let p = Vec2::new(T::lit(i as f64) / nf, T::lit(j as f64) / nf);
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for &(cx, cy) in domain.unit_cells() {
        let region = u8::from(domain == Domain::UnitSquareWithInterface && cy >= 0);
        for j in 0..n {
            for i in 0..n {
                let (x0, y0) = (cx * n + i, cy * n + j);
                let p00 = vid(x0, y0, &mut vertices);
                let p10 = vid(x0 + 1, y0, &mut vertices);
                let p11 = vid(x0 + 1, y0 + 1, &mut vertices);
                let p01 = vid(x0, y0 + 1, &mut vertices);
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
                regions.push(region);
                regions.push(region);
            }
        }
    }
    let nt = triangles.len();
    Mesh::from_parts(
        vertices,
        triangles,
        regions,
        vec![0; nt],
        (0..nt).collect(),
        &HashMap::new(),
        None,
    )
}
