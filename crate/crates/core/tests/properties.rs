//! Property tests of the mesh, quadrature and solver invariants.

use std::collections::BTreeSet;

use num_complex::Complex;
use proptest::prelude::*;
use pwdg_core::assembly::{assemble, FluxParams, ProblemData};
use pwdg_core::basis::PlaneWaveSpace;
use pwdg_core::exact::{relative_l2_error, ExactSolution};
use pwdg_core::geometry::Vec2;
use pwdg_core::mesh::{make_initial_mesh, mesh_stats, refine_leb, Domain, EdgeTag, Mesh};
use pwdg_core::quadrature::{edge_integral_exp, GaussLegendre};
use pwdg_core::solver::solve;

fn refine_randomly(domain: Domain, rounds: &[Vec<usize>]) -> Vec<Mesh<f64>> {
    let mut meshes = vec![make_initial_mesh::<f64>(domain, 1).unwrap()];
    for picks in rounds {
        let last = meshes.last().unwrap();
        let n = last.num_triangles();
        let marked: BTreeSet<usize> = picks.iter().map(|&k| k % n).collect();
        meshes.push(refine_leb(last, &marked).unwrap());
    }
    meshes
}

fn rounds() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..10_000, 1..6), 1..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn refinement_stays_conforming(rounds in rounds(), domain in prop_oneof![Just(Domain::LShape), Just(Domain::UnitSquareWithInterface)]) {
        let meshes = refine_randomly(domain, &rounds);
        let angle0 = mesh_stats(&meshes[0]).min_angle;
        for m in &meshes {
            prop_assert!(m.hanging_nodes().is_empty());
            prop_assert!(m.check_invariants().is_ok());
            prop_assert!(mesh_stats(m).min_angle >= 0.5 * angle0);
        }
    }

    #[test]
    fn children_nest_in_parents(rounds in rounds()) {
        let meshes = refine_randomly(Domain::LShape, &rounds);
        for w in meshes.windows(2) {
            let (old, new) = (&w[0], &w[1]);
            let mut child_area = vec![0.0; old.num_triangles()];
            for (t, &parent) in new.parents().iter().enumerate() {
                child_area[parent] += new.area(t);
                // every child vertex lies in the closed parent triangle
                let [a, b, c] = old.triangle_points(parent);
                for x in new.triangle_points(t) {
                    for (p, q) in [(a, b), (b, c), (c, a)] {
                        prop_assert!((q - p).cross(x - p) >= -1e-14);
                    }
                }
            }
            for t in 0..old.num_triangles() {
                prop_assert!((child_area[t] - old.area(t)).abs() <= 1e-12 * old.area(t));
            }
            prop_assert!(mesh_stats(new).h <= mesh_stats(old).h);
        }
    }

    #[test]
    fn edge_integral_matches_gauss(ax in -1.0f64..1.0, ay in -1.0f64..1.0, dx in -1.0f64..1.0, dy in 0.01f64..1.0,
                                   phase in 0.0f64..150.0, angle in 0.0f64..std::f64::consts::TAU) {
        let a = Vec2::new(ax, ay);
        let b = Vec2::new(ax + dx, ay + dy);
        let len = (b - a).norm();
        let k = Vec2::new(angle.cos(), angle.sin()).scale(phase / len);
        let q = GaussLegendre::<f64>::new(64).integrate_segment(a, b, |x| Complex::from_polar(1.0, k.dot(x)));
        let exact = edge_integral_exp(a, b, k).unwrap();
        prop_assert!((exact - q).norm() <= 1e-12 * len);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// A plane wave in the basis is reproduced by the discrete solution on
    /// any refined mesh, with any mix of boundary conditions.
    #[test]
    fn trefftz_consistency_on_random_meshes(rounds in prop::collection::vec(prop::collection::vec(0usize..10_000, 1..4), 0..4),
                                            j in 0usize..5, kappa in 1.0f64..10.0, mixed in any::<bool>()) {
        let mut mesh = refine_randomly(Domain::LShape, &rounds).pop().unwrap();
        mesh.retag_boundary(|m, _| if mixed && m.x < 0.0 { EdgeTag::Dirichlet } else { EdgeTag::Impedance });
        let space = PlaneWaveSpace::homogeneous(&mesh, 5, kappa).unwrap();
        let exact = ExactSolution::PlaneWave { direction: space.directions()[j], kappa };
        let data = ProblemData::from_exact(&mesh, exact);
        let sys = assemble(&mesh, &space, &data, &FluxParams::mesh_dependent_default()).unwrap();
        let (x, report) = solve(&sys).unwrap();
        prop_assert!(report.relative_residual <= 1e-10);
        let err = relative_l2_error(&mesh, &space, x.coeffs(), &exact, 10).unwrap();
        prop_assert!(err <= 1e-8, "relative error {}", err);
    }
}

#[test]
fn solutions_are_addressable_by_element_and_direction() {
    let mesh = make_initial_mesh::<f64>(Domain::UnitSquare, 2).unwrap();
    let space = PlaneWaveSpace::homogeneous(&mesh, 4, 3.0).unwrap();
    let exact = ExactSolution::PlaneWave { direction: space.directions()[2], kappa: 3.0 };
    let data = ProblemData::from_exact(&mesh, exact);
    let (x, _) = solve(&assemble(&mesh, &space, &data, &FluxParams::uwvf()).unwrap()).unwrap();
    assert_eq!(x.num_elements(), mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let want = exact.eval(space.centroid(t)).unwrap().0;
        assert!((x.get(t, 2) - want).norm() < 1e-9);
        assert!(x.get(t, 0).norm() < 1e-9);
    }
}
