//! The numerical core instantiated with `f32`.

use pwdg_core::assembly::{assemble, FluxParams, ProblemData};
use pwdg_core::basis::PlaneWaveSpace;
use pwdg_core::bessel::bessel_j;
use pwdg_core::estimator::{doerfler_mark, eta_weighted};
use pwdg_core::exact::{relative_l2_error, ExactSolution};
use pwdg_core::mesh::{make_initial_mesh, refine_leb, Domain, EdgeTag};
use pwdg_core::solver::solve;

#[test]
fn plane_wave_problem_in_single_precision() {
    let mut mesh = make_initial_mesh::<f32>(Domain::UnitSquare, 2).unwrap();
    mesh.retag_boundary(|_, _| EdgeTag::Impedance);
    let space = PlaneWaveSpace::homogeneous(&mesh, 4, 5.0f32).unwrap();
    let exact = ExactSolution::PlaneWave { direction: space.directions()[1], kappa: 5.0f32 };
    let data = ProblemData::from_exact(&mesh, exact);
    let (x, report) = solve(&assemble(&mesh, &space, &data, &FluxParams::uwvf()).unwrap()).unwrap();
    assert!(report.relative_residual < 1e-4);
    let err = relative_l2_error(&mesh, &space, x.coeffs(), &exact, 10).unwrap();
    assert!(err < 1e-4, "{err}");
    let r = eta_weighted(&mesh, &space, x.coeffs(), &data, &FluxParams::uwvf(), 0.5f32).unwrap();
    let marked = doerfler_mark(&r, 0.3).unwrap();
    assert!(refine_leb(&mesh, &marked).unwrap().check_invariants().is_ok());
}

#[test]
fn bessel_in_single_precision() {
    let (j, _) = bessel_j(2.0f32 / 3.0, 1.0f32).unwrap();
    assert!((j - 0.597_949_97).abs() < 1e-6);
}
