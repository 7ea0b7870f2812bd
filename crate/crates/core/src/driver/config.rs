//! Run configuration: flat `key = value` text, one key per line, `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assembly::FluxParams;
use crate::exact::ExactSolution;
use crate::geometry::Vec2;
use crate::mesh::{BoundaryAssignment, Domain};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Bessel,
    Transmission,
    PlaneWave,
}

impl SolutionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolutionKind::Bessel => "bessel",
            SolutionKind::Transmission => "transmission",
            SolutionKind::PlaneWave => "plane-wave",
        }
    }
}

impl FromStr for SolutionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "bessel" => Ok(SolutionKind::Bessel),
            "transmission" => Ok(SolutionKind::Transmission),
            "plane-wave" | "planewave" => Ok(SolutionKind::PlaneWave),
            other => Err(Error::Config(format!("unknown solution kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorChoice {
    Dg,
    Weighted,
}

impl IndicatorChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorChoice::Dg => "dg",
            IndicatorChoice::Weighted => "weighted",
        }
    }
}

impl FromStr for IndicatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "dg" => Ok(IndicatorChoice::Dg),
            "weighted" => Ok(IndicatorChoice::Weighted),
            other => Err(Error::Config(format!("unknown indicator `{other}` (expected dg or weighted)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxChoice {
    Uwvf,
    MeshDependent,
    Constant,
}

impl FromStr for FluxChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "uwvf" => Ok(FluxChoice::Uwvf),
            "mesh-dependent" => Ok(FluxChoice::MeshDependent),
            "constant" => Ok(FluxChoice::Constant),
            other => Err(Error::Config(format!("unknown flux `{other}`"))),
        }
    }
}

impl fmt::Display for FluxChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxChoice::Uwvf => "uwvf",
            FluxChoice::MeshDependent => "mesh-dependent",
            FluxChoice::Constant => "constant",
        })
    }
}

/// Everything needed to reproduce one adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub solution: SolutionKind,
    /// Bessel order `ξ`.
    pub order: f64,
    pub kappa: f64,
    pub n1: f64,
    pub n2: f64,
    /// Incidence angle in degrees, measured from the interface.
    pub theta_i: f64,
    /// Plane-wave direction angle in degrees.
    pub direction: f64,
    pub boundary: BoundaryAssignment,
    pub p: usize,
    pub flux: FluxChoice,
    /// `(a, b, d)` of the mesh-dependent penalties.
    pub flux_abd: [f64; 3],
    /// `(α, β, δ)` of the constant penalties.
    pub flux_const: [f64; 3],
    pub indicator: IndicatorChoice,
    /// Exponent of the weighted indicator; `None` picks the domain default.
    pub s: Option<f64>,
    /// Dörfler bulk parameter.
    pub theta: f64,
    pub max_iter: usize,
    pub subdivisions: usize,
    /// Uniform refinement steps applied to the initial mesh.
    pub pre_refine: usize,
    pub quad_degree: usize,
    pub dof_cap: usize,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: Domain::LShape,
            solution: SolutionKind::Bessel,
            order: 2.0,
            kappa: 12.0,
            n1: 2.0,
            n2: 1.0,
            theta_i: 29.0,
            direction: 0.0,
            boundary: BoundaryAssignment::AllDirichlet,
            p: 7,
            flux: FluxChoice::Uwvf,
            flux_abd: [1.0, 1.0, 0.5],
            flux_const: [0.5, 0.5, 0.5],
            indicator: IndicatorChoice::Weighted,
            s: None,
            theta: 0.3,
            max_iter: 12,
            subdivisions: 4,
            pre_refine: 0,
            quad_degree: 10,
            dof_cap: 200_000,
            output: PathBuf::from("out"),
        }
    }
}

const KEYS: &[&str] = &[
    "domain", "solution", "order", "kappa", "n1", "n2", "theta_i", "direction", "boundary", "p", "flux", "a", "b",
    "d", "alpha", "beta", "delta", "indicator", "s", "theta", "max_iter", "subdivisions", "pre_refine",
    "quad_degree", "dof_cap", "output",
];

fn number<F: FromStr>(key: &str, value: &str) -> Result<F, Error> {
    value.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl RunConfig {
    /// Parse config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    /// Set one key; used by the parser and by command line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let value = value.trim();
        match key {
            "domain" => self.domain = value.parse().map_err(|e| Error::Config(strip(e)))?,
            "solution" => self.solution = value.parse()?,
            "order" => self.order = number(key, value)?,
            "kappa" => self.kappa = number(key, value)?,
            "n1" => self.n1 = number(key, value)?,
            "n2" => self.n2 = number(key, value)?,
            "theta_i" => self.theta_i = number(key, value)?,
            "direction" => self.direction = number(key, value)?,
            "boundary" => self.boundary = value.parse().map_err(|e| Error::Config(strip(e)))?,
            "p" => self.p = number(key, value)?,
            "flux" => self.flux = value.parse()?,
            "a" => self.flux_abd[0] = number(key, value)?,
            "b" => self.flux_abd[1] = number(key, value)?,
            "d" => self.flux_abd[2] = number(key, value)?,
            "alpha" => self.flux_const[0] = number(key, value)?,
            "beta" => self.flux_const[1] = number(key, value)?,
            "delta" => self.flux_const[2] = number(key, value)?,
            "indicator" => self.indicator = value.parse()?,
            "s" => self.s = Some(number(key, value)?),
            "theta" => self.theta = number(key, value)?,
            "max_iter" => self.max_iter = number(key, value)?,
            "subdivisions" => self.subdivisions = number(key, value)?,
            "pre_refine" => self.pre_refine = number(key, value)?,
            "quad_degree" => self.quad_degree = number(key, value)?,
            "dof_cap" => self.dof_cap = number(key, value)?,
            "output" => self.output = PathBuf::from(value),
            other => {
                return Err(Error::Config(format!("unknown key `{other}` (known keys: {})", KEYS.join(", "))));
            }
        }
        Ok(())
    }

    /// Indicator exponent, falling back to 1/6 on the L-shape and 1/2 elsewhere.
    pub fn s_value(&self) -> f64 {
        self.s.unwrap_or(match self.domain {
            Domain::LShape => 1.0 / 6.0,
            _ => 0.5,
        })
    }

    pub fn flux_params(&self) -> FluxParams<f64> {
        match self.flux {
            FluxChoice::Uwvf => FluxParams::uwvf(),
            FluxChoice::MeshDependent => {
                let [a, b, d] = self.flux_abd;
                FluxParams::MeshDependent { a, b, d }
            }
            FluxChoice::Constant => {
                let [alpha, beta, delta] = self.flux_const;
                FluxParams::Constant { alpha, beta, delta }
            }
        }
    }

    pub fn exact(&self) -> ExactSolution<f64> {
        match self.solution {
            SolutionKind::Bessel => ExactSolution::Bessel { order: self.order, kappa: self.kappa },
            SolutionKind::Transmission => ExactSolution::Transmission {
                n1: self.n1,
                n2: self.n2,
                kappa: self.kappa,
                theta_i: self.theta_i.to_radians(),
            },
            SolutionKind::PlaneWave => {
                let (s, c) = self.direction.to_radians().sin_cos();
                ExactSolution::PlaneWave { direction: Vec2::new(c, s), kappa: self.kappa }
            }
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa = {} must be positive", self.kappa));
        }
        if self.p < 3 {
            return bad(format!("p = {} must be at least 3", self.p));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta = {} outside (0, 1]", self.theta));
        }
        let s = self.s_value();
        if !(0.0..=0.5).contains(&s) {
            return bad(format!("s = {s} outside [0, 1/2]"));
        }
        if self.subdivisions == 0 {
            return bad("subdivisions must be at least 1".into());
        }
        if self.quad_degree < 2 {
            return bad(format!("quad_degree = {} must be at least 2", self.quad_degree));
        }
        if self.solution == SolutionKind::Bessel && !(self.order >= 0.0) {
            return bad(format!("order = {} must be nonnegative", self.order));
        }
        if self.solution == SolutionKind::Transmission && !(self.n1 > 0.0 && self.n2 > 0.0) {
            return bad("refractive indices must be positive".into());
        }
        self.flux_params().validate().map_err(|e| Error::Config(strip(e)))
    }
}

/// Message of an error without its variant prefix.
fn strip(e: Error) -> String {
    match e {
        Error::Config(m) | Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}
