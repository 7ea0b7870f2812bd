//! Residual a posteriori indicators and Dörfler marking.
//!
//! Both indicators are sums of edge integrals of trace jumps and boundary
//! residuals. Interior edges are shared half and half by their two elements.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::assembly::{flux_params_on_edge, global_h, FluxParams, ProblemData};
use crate::basis::PlaneWaveSpace;
use crate::geometry::Vec2;
use crate::mesh::{EdgeTag, Mesh};
use crate::quadrature::{points_for_bandwidth, GaussLegendre};
use crate::scalar::{imag_unit, Cplx, Real};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndicatorKind<T> {
    /// `η_DG`, weighted by powers of `κ`.
    Dg,
    /// Edge terms weighted by `h_e^{2s}`, `0 ≤ s ≤ 1/2`.
    Weighted { s: T },
}

/// Global contributions of the four indicator terms, already weighted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IndicatorTerms<T> {
    pub jump: T,
    pub grad_jump: T,
    pub impedance: T,
    pub dirichlet: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorReport<T> {
    pub kind: IndicatorKind<T>,
    /// `η_K²` per element.
    pub eta_k2: Vec<T>,
    /// `η = (Σ η_K²)^{1/2}`.
    pub eta: T,
    pub terms: IndicatorTerms<T>,
}

/// Traces of a piecewise field: `(u, ∇u)` of element `t` at `x`.
type Trace<'a, T> = dyn Fn(usize, Vec2<T>) -> (Cplx<T>, [Cplx<T>; 2]) + Sync + 'a;

fn dot<T: Real>(g: [Cplx<T>; 2], n: Vec2<T>) -> Cplx<T> {
    g[0] * n.x + g[1] * n.y
}

/// Unweighted squared `L²(e)` norms of the edge residuals, with the element
/// they belong to.
struct EdgeNorms<T> {
    elements: [usize; 2],
    tag: EdgeTag,
    length: T,
    /// `‖[[u]]‖²` on interior edges, `‖u - g_D‖²` on Dirichlet edges,
    /// `‖g_A - ∂u/∂ν + iκu‖²` on impedance edges.
    value: T,
    /// `‖[[∇u]]‖²` on interior edges.
    grad: T,
}

fn edge_norms<T: Real>(
    mesh: &Mesh<T>,
    data: &ProblemData<T>,
    field: &Trace<'_, T>,
    kappa_max: T,
    e: usize,
) -> Result<EdgeNorms<T>, Error> {
    let edge = mesh.edge(e);
    let (a, b) = mesh.edge_points(e);
    let normal = mesh.edge_normal(e);
    let t0 = edge.triangles[0];
    // |.|² of plane-wave sums has frequencies up to 2κ
    let rule = GaussLegendre::<T>::new(points_for_bandwidth(kappa_max * edge.length * T::lit(2.0)));
    let mut out = EdgeNorms { elements: [t0, t0], tag: edge.tag, length: edge.length, value: T::zero(), grad: T::zero() };
    let i = imag_unit::<T>();
    match edge.tag {
        EdgeTag::Interior => {
            let t1 = edge.second_triangle().expect("interior edge has two triangles");
            out.elements[1] = t1;
            for (x, w) in rule.on_segment(a, b) {
                let (u0, g0) = field(t0, x);
                let (u1, g1) = field(t1, x);
                out.value += (u0 - u1).norm_sqr() * w;
                out.grad += (dot(g0, normal) - dot(g1, normal)).norm_sqr() * w;
            }
        }
        EdgeTag::Dirichlet => {
            for (x, w) in rule.on_segment(a, b) {
                let (u, _) = field(t0, x);
                let g = match &data.dirichlet {
                    Some(g) => g(x, normal)?,
                    None => Cplx::default(),
                };
                out.value += (u - g).norm_sqr() * w;
            }
        }
        EdgeTag::Impedance => {
            let kappa = data.edge_kappa(EdgeTag::Impedance, t0);
            for (x, w) in rule.on_segment(a, b) {
                let (u, gu) = field(t0, x);
                let g = match &data.impedance {
                    Some(g) => g(x, normal)?,
                    None => Cplx::default(),
                };
                out.value += (g - dot(gu, normal) + i * u * kappa).norm_sqr() * w;
            }
        }
    }
    Ok(out)
}

fn indicators<T: Real>(
    mesh: &Mesh<T>,
    data: &ProblemData<T>,
    params: &FluxParams<T>,
    kind: IndicatorKind<T>,
    field: &Trace<'_, T>,
    kappa_max: T,
) -> Result<IndicatorReport<T>, Error> {
    if let IndicatorKind::Weighted { s } = kind {
        if !(s >= T::zero() && s <= T::lit(0.5)) {
            return Err(Error::InvalidArgument(format!("indicator exponent s = {s} outside [0, 1/2]")));
        }
    }
    params.validate()?;
    let h = global_h(mesh);
    let norms: Vec<EdgeNorms<T>> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| edge_norms(mesh, data, field, kappa_max, e))
        .collect::<Result<_, _>>()?;
    let kappa = data.kappa;
    let mut eta_k2 = vec![T::zero(); mesh.num_triangles()];
    let mut terms = IndicatorTerms::default();
    let half = T::lit(0.5);
    for (e, n) in norms.into_iter().enumerate() {
        let f = flux_params_on_edge(params, mesh.edge(e), h)?;
        let (w_value, w_grad) = match kind {
            IndicatorKind::Dg => match n.tag {
                EdgeTag::Interior => (kappa * f.alpha, f.beta / kappa),
                EdgeTag::Dirichlet => (kappa * f.alpha, T::zero()),
                EdgeTag::Impedance => (f.delta / data.edge_kappa(EdgeTag::Impedance, n.elements[0]), T::zero()),
            },
            IndicatorKind::Weighted { s } => {
                let hs = n.length.powf(T::lit(2.0) * s);
                let k2 = T::one() / (kappa * kappa);
                match n.tag {
                    EdgeTag::Interior => (f.alpha * hs, f.beta * k2 * hs),
                    EdgeTag::Dirichlet => (f.alpha * hs, T::zero()),
                    EdgeTag::Impedance => {
                        let kl = data.edge_kappa(EdgeTag::Impedance, n.elements[0]);
                        (f.delta * hs / (kl * kl), T::zero())
                    }
                }
            }
        };
        let value = w_value * n.value;
        let grad = w_grad * n.grad;
        match n.tag {
            EdgeTag::Interior => {
                terms.jump += value;
                terms.grad_jump += grad;
                for t in n.elements {
                    eta_k2[t] += (value + grad) * half;
                }
            }
            EdgeTag::Dirichlet => {
                terms.dirichlet += value;
                eta_k2[n.elements[0]] += value;
            }
            EdgeTag::Impedance => {
                terms.impedance += value;
                eta_k2[n.elements[0]] += value;
            }
        }
    }
    let eta = eta_k2.iter().fold(T::zero(), |a, &b| a + b).sqrt();
    Ok(IndicatorReport { kind, eta_k2, eta, terms })
}

fn check_sizes<T: Real>(mesh: &Mesh<T>, space: &PlaneWaveSpace<T>, coeffs: &[Cplx<T>]) -> Result<(), Error> {
    if space.num_elements() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), found: space.num_elements() });
    }
    if coeffs.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch { expected: space.num_dofs(), found: coeffs.len() });
    }
    Ok(())
}

fn max_kappa<T: Real>(space: &PlaneWaveSpace<T>) -> T {
    (0..space.num_elements()).map(|t| space.kappa_local(t)).fold(T::zero(), T::max)
}

/// Indicator `η_DG`:
/// `κ⁻¹‖β^{1/2}[[∇u]]‖²_I + κ‖α^{1/2}[[u]]‖²_I + κ⁻¹‖δ^{1/2}(g_A - ∂u/∂ν + iκu)‖²_A + κ‖α^{1/2}(u - g_D)‖²_D`.
pub fn eta_dg<T: Real>(
    mesh: &Mesh<T>,
    space: &PlaneWaveSpace<T>,
    coeffs: &[Cplx<T>],
    data: &ProblemData<T>,
    params: &FluxParams<T>,
) -> Result<IndicatorReport<T>, Error> {
    check_sizes(mesh, space, coeffs)?;
    let field = |t: usize, x: Vec2<T>| space.eval_field(coeffs, t, x);
    indicators(mesh, data, params, IndicatorKind::Dg, &field, max_kappa(space))
}

/// Indicator with `h_e^{2s}` weights:
/// `‖α^{1/2}[[u]]‖² + κ⁻²‖β^{1/2}[[∇u]]‖² + κ⁻²‖δ^{1/2}(g_A - ∂u/∂ν + iκu)‖² + ‖α^{1/2}(u - g_D)‖²`.
pub fn eta_weighted<T: Real>(
    mesh: &Mesh<T>,
    space: &PlaneWaveSpace<T>,
    coeffs: &[Cplx<T>],
    data: &ProblemData<T>,
    params: &FluxParams<T>,
    s: T,
) -> Result<IndicatorReport<T>, Error> {
    check_sizes(mesh, space, coeffs)?;
    let field = |t: usize, x: Vec2<T>| space.eval_field(coeffs, t, x);
    indicators(mesh, data, params, IndicatorKind::Weighted { s }, &field, max_kappa(space))
}

/// `(Σ_e ‖g‖²_e)^{1/2}` over Dirichlet and impedance edges.
pub fn data_scale<T: Real>(mesh: &Mesh<T>, data: &ProblemData<T>, kappa_max: T) -> Result<T, Error> {
    let mut sum = T::zero();
    for e in 0..mesh.num_edges() {
        let edge = mesh.edge(e);
        let g = match edge.tag {
            EdgeTag::Interior => continue,
            EdgeTag::Dirichlet => &data.dirichlet,
            EdgeTag::Impedance => &data.impedance,
        };
        let Some(g) = g else { continue };
        let (a, b) = mesh.edge_points(e);
        let normal = mesh.edge_normal(e);
        let rule = GaussLegendre::<T>::new(points_for_bandwidth(kappa_max * edge.length * T::lit(2.0)));
        for (x, w) in rule.on_segment(a, b) {
            sum += g(x, normal)?.norm_sqr() * w;
        }
    }
    Ok(sum.sqrt())
}

/// Smallest set of elements, taken by decreasing `η_K²` (ties to the lower
/// id), whose contributions add up to at least `θ Σ η_K²`.
pub fn doerfler_mark<T: Real>(report: &IndicatorReport<T>, theta: T) -> Result<BTreeSet<usize>, Error> {
    if !(theta > T::zero() && theta <= T::one()) {
        return Err(Error::InvalidArgument(format!("bulk parameter θ = {theta} outside (0, 1]")));
    }
    if report.eta_k2.is_empty() {
        return Err(Error::InvalidArgument("empty indicator report".into()));
    }
    let mut order: Vec<usize> = (0..report.eta_k2.len()).collect();
    order.sort_by(|&a, &b| {
        report.eta_k2[b].partial_cmp(&report.eta_k2[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    // summing in the same order makes θ = 1 reach the total exactly
    let total = order.iter().fold(T::zero(), |s, &t| s + report.eta_k2[t]);
    let target = theta * total;
    let mut marked = BTreeSet::new();
    let mut sum = T::zero();
    for &t in &order {
        if sum >= target {
            break;
        }
        sum += report.eta_k2[t];
        marked.insert(t);
    }
    Ok(marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::exact::ExactSolution;
    use crate::mesh::{make_initial_mesh, Domain};
    use crate::solver::solve;
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn report(values: &[f64]) -> IndicatorReport<f64> {
        let eta = values.iter().sum::<f64>().sqrt();
        IndicatorReport { kind: IndicatorKind::Dg, eta_k2: values.to_vec(), eta, terms: IndicatorTerms::default() }
    }

    #[test]
    fn doerfler_examples() {
        assert_eq!(doerfler_mark(&report(&[4.0, 3.0, 2.0, 1.0]), 0.3).unwrap(), BTreeSet::from([0]));
        assert_eq!(doerfler_mark(&report(&[1.0, 0.0, 3.0, 2.0]), 1.0).unwrap(), BTreeSet::from([0, 2, 3]));
        assert_eq!(doerfler_mark(&report(&[2.0, 2.0]), 0.5).unwrap(), BTreeSet::from([0]));
        assert!(doerfler_mark(&report(&[1.0]), 0.0).is_err());
        assert!(doerfler_mark(&report(&[1.0]), 1.5).is_err());
        assert!(doerfler_mark(&report(&[]), 0.5).is_err());
    }

    proptest! {
        #[test]
        fn doerfler_is_minimal(values in prop::collection::vec(0.0f64..10.0, 1..60), theta in 0.01f64..1.0) {
            let r = report(&values);
            let marked = doerfler_mark(&r, theta).unwrap();
            let total: f64 = values.iter().sum();
            let sum: f64 = marked.iter().map(|&t| values[t]).sum();
            prop_assert!(sum >= theta * total * (1.0 - 1e-12));
            // drop the smallest marked contribution (the last one added)
            if let Some(&last) = marked.iter().min_by(|&&a, &&b| values[a].partial_cmp(&values[b]).unwrap().then(b.cmp(&a))) {
                prop_assert!(sum - values[last] < theta * total);
            }
            // every unmarked element is no larger than every marked one
            let min_marked = marked.iter().map(|&t| values[t]).fold(f64::INFINITY, f64::min);
            for (t, &v) in values.iter().enumerate() {
                if !marked.contains(&t) {
                    prop_assert!(v <= min_marked);
                }
            }
        }
    }

    fn plane_wave_setup(p: usize, kappa: f64) -> (Mesh<f64>, PlaneWaveSpace<f64>, ProblemData<f64>, Vec<Cplx<f64>>) {
        let mut mesh = make_initial_mesh::<f64>(Domain::UnitSquare, 2).unwrap();
        mesh.retag_boundary(|_, _| EdgeTag::Impedance);
        let space = PlaneWaveSpace::homogeneous(&mesh, p, kappa).unwrap();
        let d = space.directions()[1];
        let exact = ExactSolution::PlaneWave { direction: d, kappa };
        let data = ProblemData::from_exact(&mesh, exact);
        let mut coeffs = vec![Complex::new(0.0, 0.0); space.num_dofs()];
        for t in 0..mesh.num_triangles() {
            coeffs[space.offset(t) + 1] = exact.eval(space.centroid(t)).unwrap().0;
        }
        (mesh, space, data, coeffs)
    }

    #[test]
    fn exact_plane_wave_has_zero_indicators() {
        let (mesh, space, data, coeffs) = plane_wave_setup(4, 6.0);
        let scale = data_scale(&mesh, &data, 6.0).unwrap();
        assert!(scale > 1.0);
        let r = eta_dg(&mesh, &space, &coeffs, &data, &FluxParams::uwvf()).unwrap();
        assert!(r.eta <= 1e-12 * scale, "{}", r.eta);
        let r = eta_weighted(&mesh, &space, &coeffs, &data, &FluxParams::uwvf(), 0.5).unwrap();
        assert!(r.eta <= 1e-12 * scale, "{}", r.eta);
    }

    #[test]
    fn zero_field_without_data_has_zero_indicator() {
        let mesh = make_initial_mesh::<f64>(Domain::UnitSquare, 1).unwrap();
        let space = PlaneWaveSpace::homogeneous(&mesh, 3, 1.0).unwrap();
        let data = ProblemData::homogeneous(&mesh, 1.0);
        let r = eta_dg(&mesh, &space, &vec![Complex::new(0.0, 0.0); 6], &data, &FluxParams::uwvf()).unwrap();
        assert_eq!(r.eta, 0.0);
    }

    #[test]
    fn unit_jump_on_shared_edge() {
        // u = 1 on triangle 0 and 0 on triangle 1; boundary data matches u so
        // only the shared edge contributes
        let mesh = make_initial_mesh::<f64>(Domain::UnitSquare, 1).unwrap();
        let inner = (0..mesh.num_edges()).find(|&e| mesh.edge(e).is_interior()).unwrap();
        let h_e = mesh.edge(inner).length;
        let field = |t: usize, _x: Vec2<f64>| {
            let u = if t == 0 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
            (u, [Complex::new(0.0, 0.0); 2])
        };
        let mut data = ProblemData::homogeneous(&mesh, 1.0);
        let m = mesh.clone();
        let owner = move |x: Vec2<f64>, n: Vec2<f64>| -> usize {
            (0..m.num_edges())
                .find(|&e| {
                    let (a, b) = m.edge_points(e);
                    !m.edge(e).is_interior() && ((x - a).cross(b - a)).abs() < 1e-12 && m.edge_normal(e).dot(n) > 0.5
                })
                .map(|e| m.edge(e).triangles[0])
                .unwrap()
        };
        data.dirichlet = Some(Arc::new(move |x, n| Ok(if owner(x, n) == 0 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) })));
        let r = indicators(&mesh, &data, &FluxParams::uwvf(), IndicatorKind::Dg, &field, 1.0).unwrap();
        assert!((r.terms.jump - h_e / 2.0).abs() < 1e-14);
        assert_eq!(r.terms.dirichlet, 0.0);
        assert!((r.eta * r.eta - h_e / 2.0).abs() < 1e-14);
        assert!((r.eta_k2[0] - h_e / 4.0).abs() < 1e-14);
    }

    fn random_solution(seed: u64) -> (Mesh<f64>, PlaneWaveSpace<f64>, ProblemData<f64>, Vec<Cplx<f64>>) {
        let mut mesh = make_initial_mesh::<f64>(Domain::LShape, 2).unwrap();
        mesh.retag_boundary(|x, t| if x.x < -0.99 { EdgeTag::Impedance } else { t });
        let space = PlaneWaveSpace::homogeneous(&mesh, 5, 3.0).unwrap();
        let data = ProblemData::from_exact(&mesh, ExactSolution::Bessel { order: 2.0 / 3.0, kappa: 3.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..space.num_dofs()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (mesh, space, data, coeffs)
    }

    #[test]
    fn dg_indicator_is_kappa_times_unweighted_proxy() {
        let (mesh, space, data, coeffs) = random_solution(3);
        let params = FluxParams::mesh_dependent_default();
        let dg = eta_dg(&mesh, &space, &coeffs, &data, &params).unwrap();
        let w = eta_weighted(&mesh, &space, &coeffs, &data, &params, 0.0).unwrap();
        let k = data.kappa;
        for (a, b) in [
            (dg.terms.jump, w.terms.jump),
            (dg.terms.grad_jump, w.terms.grad_jump),
            (dg.terms.impedance, w.terms.impedance),
            (dg.terms.dirichlet, w.terms.dirichlet),
        ] {
            assert!(a > 0.0);
            assert!((a - k * b).abs() <= 1e-12 * a, "{a} {b}");
        }
    }

    #[test]
    fn per_element_sum_matches_global() {
        let (mesh, space, data, coeffs) = random_solution(4);
        for r in [
            eta_dg(&mesh, &space, &coeffs, &data, &FluxParams::uwvf()).unwrap(),
            eta_weighted(&mesh, &space, &coeffs, &data, &FluxParams::uwvf(), 1.0 / 6.0).unwrap(),
        ] {
            let t = r.terms;
            let total = t.jump + t.grad_jump + t.impedance + t.dirichlet;
            assert!((r.eta * r.eta - total).abs() <= 1e-12 * total);
            assert!(r.eta_k2.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn homogeneous_of_degree_one() {
        let (mesh, space, data, coeffs) = random_solution(5);
        let lambda = Complex::new(-1.5, 2.0);
        let scaled: Vec<Cplx<f64>> = coeffs.iter().map(|c| c * lambda).collect();
        let mut sdata = data.clone();
        let gd = data.dirichlet.clone().unwrap();
        let ga = data.impedance.clone().unwrap();
        sdata.dirichlet = Some(Arc::new(move |x, n| Ok(gd(x, n)? * lambda)));
        sdata.impedance = Some(Arc::new(move |x, n| Ok(ga(x, n)? * lambda)));
        for s in [None, Some(0.5)] {
            let run = |c: &[Cplx<f64>], d: &ProblemData<f64>| match s {
                None => eta_dg(&mesh, &space, c, d, &FluxParams::uwvf()).unwrap(),
                Some(s) => eta_weighted(&mesh, &space, c, d, &FluxParams::uwvf(), s).unwrap(),
            };
            let a = run(&coeffs, &data);
            let b = run(&scaled, &sdata);
            assert!((b.eta - lambda.norm() * a.eta).abs() <= 1e-12 * b.eta);
            assert_eq!(doerfler_mark(&a, 0.3).unwrap(), doerfler_mark(&b, 0.3).unwrap());
        }
    }

    #[test]
    fn edge_weight_scales_with_length() {
        // the same traces on a mesh scaled by 1/2: the jump term picks up
        // 2^{-2s} from the weight and 1/2 from the edge length
        let mesh = make_initial_mesh::<f64>(Domain::UnitSquare, 1).unwrap();
        let small = crate::mesh::Mesh::from_parts(
            mesh.vertices().iter().map(|v| v.scale(0.5)).collect(),
            mesh.triangles().to_vec(),
            mesh.regions().to_vec(),
            vec![0; 2],
            vec![0, 1],
            &mesh.boundary_tag_map(),
            None,
        )
        .unwrap();
        let field = |t: usize, _x: Vec2<f64>| {
            let u = if t == 0 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, -2.0) };
            (u, [Complex::new(0.0, 0.0); 2])
        };
        let s = 0.3;
        let kind = IndicatorKind::Weighted { s };
        let big = indicators(&mesh, &ProblemData::homogeneous(&mesh, 2.0), &FluxParams::uwvf(), kind, &field, 2.0).unwrap();
        let sm = indicators(&small, &ProblemData::homogeneous(&small, 2.0), &FluxParams::uwvf(), kind, &field, 2.0).unwrap();
        let ratio = sm.terms.jump / big.terms.jump;
        assert!((ratio - 0.5 * 2f64.powf(-2.0 * s)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_exponent_and_sizes() {
        let (mesh, space, data, coeffs) = random_solution(6);
        assert!(eta_weighted(&mesh, &space, &coeffs, &data, &FluxParams::uwvf(), 0.6).is_err());
        assert!(eta_weighted(&mesh, &space, &coeffs, &data, &FluxParams::uwvf(), -0.1).is_err());
        assert!(eta_dg(&mesh, &space, &coeffs[1..], &data, &FluxParams::uwvf()).is_err());
    }

    #[test]
    fn solved_plane_wave_has_small_indicators() {
        let (mesh, space, data, _) = plane_wave_setup(4, 6.0);
        let sys = assemble(&mesh, &space, &data, &FluxParams::uwvf()).unwrap();
        let (x, _) = solve(&sys).unwrap();
        let scale = data_scale(&mesh, &data, 6.0).unwrap();
        let r = eta_dg(&mesh, &space, x.coeffs(), &data, &FluxParams::uwvf()).unwrap();
        assert!(r.eta <= 1e-8 * scale);
    }
}
