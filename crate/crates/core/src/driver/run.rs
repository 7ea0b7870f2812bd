//! SOLVE, ESTIMATE, MARK, REFINE.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::assembly::{assemble, global_h, ProblemData};
use crate::basis::PlaneWaveSpace;
use crate::estimator::{doerfler_mark, eta_dg, eta_weighted, IndicatorReport};
use crate::exact::relative_l2_error;
use crate::mesh::{make_initial_mesh, refine_leb, Mesh};
use crate::scalar::Cplx;
use crate::Error;

use super::config::{IndicatorChoice, RunConfig};

/// One line of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub iter: usize,
    pub dofs: usize,
    pub elements: usize,
    pub h: f64,
    pub rel_l2_error: f64,
    pub eta: f64,
    /// `η` rescaled so that it equals the error at iteration 0.
    pub eta_scaled: f64,
    /// `rel_l2_error / eta_scaled`.
    pub efficiency: f64,
    pub rcond: f64,
    pub seconds: f64,
}

/// State of the loop after the estimate of one iteration.
pub struct Snapshot<'a> {
    pub row: &'a ConvergenceRow,
    pub mesh: &'a Mesh<f64>,
    pub p: usize,
    pub coeffs: &'a [Cplx<f64>],
    pub report: &'a IndicatorReport<f64>,
    /// Elements marked for refinement; empty on the last iteration.
    pub marked: &'a BTreeSet<usize>,
}

/// Receives every iteration as soon as it is complete.
pub trait Observer {
    fn iteration(&mut self, snapshot: &Snapshot<'_>) -> Result<(), Error>;
}

impl Observer for () {
    fn iteration(&mut self, _: &Snapshot<'_>) -> Result<(), Error> {
        Ok(())
    }
}

impl<F: FnMut(&Snapshot<'_>) -> Result<(), Error>> Observer for F {
    fn iteration(&mut self, snapshot: &Snapshot<'_>) -> Result<(), Error> {
        self(snapshot)
    }
}

/// Initial mesh of a run: structured mesh, optional uniform refinements and
/// the configured boundary conditions.
pub fn initial_mesh(cfg: &RunConfig) -> Result<Mesh<f64>, Error> {
    let mut mesh = make_initial_mesh::<f64>(cfg.domain, cfg.subdivisions)?;
    for _ in 0..cfg.pre_refine {
        let all: BTreeSet<usize> = (0..mesh.num_triangles()).collect();
        mesh = refine_leb(&mesh, &all)?;
    }
    let (assignment, domain) = (cfg.boundary, cfg.domain);
    mesh.retag_boundary(|m, _| assignment.tag_for(domain, m));
    Ok(mesh)
}

/// Run the adaptive loop. Rows go to `observer` as they are produced; on a
/// solver failure the rows already reported stay valid and the error is
/// returned.
pub fn run_adaptive(cfg: &RunConfig, observer: &mut dyn Observer) -> Result<Vec<ConvergenceRow>, Error> {
    cfg.validate()?;
    let exact = cfg.exact();
    let params = cfg.flux_params();
    let mut mesh = initial_mesh(cfg)?;
    let mut rows = Vec::new();
    let mut scale = None;
    for iter in 0..=cfg.max_iter {
        let start = Instant::now();
        let eps_r = exact.eps_r_on_mesh(&mesh);
        let space = PlaneWaveSpace::new(&mesh, cfg.p, cfg.kappa, &eps_r)?;
        let data = ProblemData::from_exact(&mesh, exact);
        let system = assemble(&mesh, &space, &data, &params)?;
        let (solution, solve_report) = crate::solver::solve(&system)?;
        let coeffs = solution.coeffs();
        let error = relative_l2_error(&mesh, &space, coeffs, &exact, cfg.quad_degree)?;
        let report = match cfg.indicator {
            IndicatorChoice::Dg => eta_dg(&mesh, &space, coeffs, &data, &params)?,
            IndicatorChoice::Weighted => eta_weighted(&mesh, &space, coeffs, &data, &params, cfg.s_value())?,
        };
        let scale = *scale.get_or_insert(if report.eta > 0.0 { error / report.eta } else { 1.0 });
        let eta_scaled = report.eta * scale;
        let last = iter == cfg.max_iter;
        let marked = if last { BTreeSet::new() } else { doerfler_mark(&report, cfg.theta)? };
        let row = ConvergenceRow {
            iter,
            dofs: space.num_dofs(),
            elements: mesh.num_triangles(),
            h: global_h(&mesh),
            rel_l2_error: error,
            eta: report.eta,
            eta_scaled,
            efficiency: if eta_scaled > 0.0 { error / eta_scaled } else { f64::INFINITY },
            rcond: solve_report.rcond,
            seconds: start.elapsed().as_secs_f64(),
        };
        observer.iteration(&Snapshot { row: &row, mesh: &mesh, p: cfg.p, coeffs, report: &report, marked: &marked })?;
        rows.push(row);
        if last || marked.is_empty() {
            break;
        }
        let next = refine_leb(&mesh, &marked)?;
        if next.num_triangles() * cfg.p > cfg.dof_cap {
            break;
        }
        mesh = next;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;

    fn small() -> RunConfig {
        RunConfig { kappa: 4.0, p: 5, subdivisions: 1, max_iter: 2, ..RunConfig::default() }
    }

    #[test]
    fn zero_iterations_give_one_row() {
        let cfg = RunConfig { max_iter: 0, ..small() };
        let rows = run_adaptive(&cfg, &mut ()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = rows[0];
        assert_eq!(r.dofs, 6 * 5);
        assert!((r.eta_scaled - r.rel_l2_error).abs() <= 1e-15 * r.rel_l2_error);
        assert!((r.efficiency - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dofs_grow_while_elements_are_marked() {
        let mut marked_sizes = Vec::new();
        let rows = run_adaptive(&small(), &mut |s: &Snapshot<'_>| {
            marked_sizes.push(s.marked.len());
            Ok(())
        })
        .unwrap();
        assert_eq!(rows.len(), 3);
        for (w, m) in rows.windows(2).zip(&marked_sizes) {
            assert!(*m > 0 && w[1].dofs > w[0].dofs);
        }
        assert_eq!(marked_sizes[2], 0);
    }

    #[test]
    fn dof_cap_stops_the_loop() {
        let cfg = RunConfig { dof_cap: 40, ..small() };
        assert_eq!(run_adaptive(&cfg, &mut ()).unwrap().len(), 1);
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = RunConfig { domain: Domain::UnitSquareWithInterface, solution: super::super::config::SolutionKind::Transmission, kappa: 3.0, ..small() };
        let a = run_adaptive(&cfg, &mut ()).unwrap();
        let b = run_adaptive(&cfg, &mut ()).unwrap();
        let strip = |r: &ConvergenceRow| ConvergenceRow { seconds: 0.0, ..*r };
        assert_eq!(a.iter().map(strip).collect::<Vec<_>>(), b.iter().map(strip).collect::<Vec<_>>());
    }
}
