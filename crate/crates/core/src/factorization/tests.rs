use super::*;
use crate::fem::{solve_neumann, BoundaryFunction, Conductivity, ScalarField};
use crate::geometry::{partition_boundary, triangulate, Domain, Mesh};
use approx::assert_relative_eq;

fn disk(h: f64) -> Mesh {
    let d = Domain::regular(32, 1.0).unwrap();
    triangulate(&d, h.min(d.shortest_edge())).unwrap()
}

fn bump(mesh: &Mesh) -> Conductivity {
    Conductivity::from_fn(mesh, |p| 1.0 + 0.5 * (-4.0 * p.dot(p)).exp()).unwrap()
}

fn cos_data(mesh: &Mesh) -> BoundaryFunction {
    BoundaryFunction::from_fn(mesh, |_, p| p.y.atan2(p.x).cos())
}

#[test]
fn beltrami_coefficient_examples() {
    let m = disk(0.3);
    let one = beltrami_coefficient(&Conductivity::constant(&m, 1.0).unwrap()).unwrap();
    assert_eq!(one.max_abs(), 0.0);
    let three = beltrami_coefficient(&Conductivity::constant(&m, 3.0).unwrap()).unwrap();
    assert!(three.values().iter().all(|z| (z.re + 0.5).abs() < 1e-15 && z.im == 0.0));
    let s = Conductivity::from_fn(&m, |p| 2f64.powf(p.x)).unwrap();
    assert!(beltrami_coefficient(&s).unwrap().max_abs() <= 1.0 / 3.0 + 1e-15);
}

#[test]
fn complex_derivative_of_coordinates() {
    let m = disk(0.3);
    let x = complex_derivative(&m, &ScalarField::from_fn(&m, |p| p.x)).unwrap();
    let y = complex_derivative(&m, &ScalarField::from_fn(&m, |p| p.y)).unwrap();
    for (a, b) in x.values().iter().zip(y.values()) {
        assert!((a - Complex64::new(0.5, 0.0)).norm() < 1e-13);
        assert!((b - Complex64::new(0.0, -0.5)).norm() < 1e-13);
    }
}

#[test]
fn complex_derivative_of_quadratic_converges() {
    // ∂(x² − y²) = z̄... componentwise ½(2x + 2iy) = x + iy
    let err = |h: f64| {
        let m = disk(h);
        let d = complex_derivative(&m, &ScalarField::from_fn(&m, |p| p.x * p.x - p.y * p.y)).unwrap();
        let exact = ComplexField::from_fn(&m, |p| Complex64::new(p.x, p.y));
        d.sub(&exact).l2_norm(&m)
    };
    let (a, b) = (err(0.2), err(0.1));
    assert!(b < 0.6 * a && b < 0.05, "{a} {b}");
}

#[test]
fn triangle_integral_matches_brute_force() {
    let p = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.2), Complex64::new(0.3, 0.9)];
    let brute = |z: Complex64| {
        // midpoint rule on a fine barycentric grid
        let n = 600;
        let mut s = Complex64::new(0.0, 0.0);
        let area = 0.5 * ((p[1] - p[0]).conj() * (p[2] - p[0])).im.abs();
        let cell = area / (n * n) as f64;
        for i in 0..n {
            for j in 0..n - i {
                for (a, b) in [(i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0), (i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0)] {
                    if a + b > n as f64 {
                        continue;
                    }
                    let w = p[0] + (p[1] - p[0]) * (a / n as f64) + (p[2] - p[0]) * (b / n as f64);
                    s += cell / (w - z);
                }
            }
        }
        s
    };
    for z in [Complex64::new(2.0, -1.0), Complex64::new(0.9, 0.9), Complex64::new(-0.3, 0.1)] {
        let exact = triangle_cauchy_integral(p, z);
        assert!((exact - brute(z)).norm() < 1e-4 * exact.norm(), "{exact} {}", brute(z));
    }
    // far away the integral is area / (c − z)
    let far = Complex64::new(1e4, 3e3);
    let c = (p[0] + p[1] + p[2]) / 3.0;
    let area = 0.5 * ((p[1] - p[0]).conj() * (p[2] - p[0])).im;
    assert!((triangle_cauchy_integral(p, far) - area / (c - far)).norm() < 1e-10);
    // reversing the orientation changes nothing
    let q = [p[0], p[2], p[1]];
    let z = Complex64::new(0.4, 0.3);
    assert!((triangle_cauchy_integral(p, z) - triangle_cauchy_integral(q, z)).norm() < 1e-13);
    // evaluation at a vertex stays finite
    assert!(triangle_cauchy_integral(p, p[1]).is_finite());
}

#[test]
fn cauchy_transform_basics() {
    let m = disk(0.15);
    let zero = cauchy_transform(&m, &ComplexField::zeros(m.num_nodes())).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let one = ComplexField::from_fn(&m, |_| Complex64::new(1.0, 0.0));
    let at0 = cauchy_transform_at(&m, &one, Complex64::new(0.0, 0.0)).unwrap();
    assert!(at0.norm() < 1e-3, "{at0}");
    // inside the unit disk C[1] = z̄
    let z = Complex64::new(0.3, -0.2);
    let v = cauchy_transform_at(&m, &one, z).unwrap();
    assert!((v - z.conj()).norm() < 1e-3, "{v}");
}

#[test]
fn cauchy_transform_inverts_dbar() {
    let g = |p: crate::geometry::Point| Complex64::new((2.0 * p.x).sin(), p.x * p.y + 0.5);
    let res = |h: f64| {
        let m = disk(h);
        let gf = ComplexField::from_fn(&m, g);
        let c = cauchy_transform(&m, &gf).unwrap();
        dbar_residual(&m, &c, &gf).unwrap()
    };
    let (a, b) = (res(0.2), res(0.1));
    assert!(b <= 0.1 && b < a, "{a} {b}");
}

#[test]
fn harmonic_case_reduces_to_twice_du() {
    let m = disk(0.15);
    let one = Conductivity::constant(&m, 1.0).unwrap();
    let u = solve_neumann(&m, &one, &cos_data(&m)).unwrap();
    let f = similarity_factorize(&m, &u, &one).unwrap();
    for (p, (phi, du)) in f.psi.values().iter().zip(f.phi.values().iter().zip(f.du().values())) {
        assert_relative_eq!(p.re, -(2f64.ln()), epsilon = 1e-14);
        assert_eq!(p.im, 0.0);
        assert!((phi - 2.0 * du).norm() < 1e-14);
    }
    assert!(f.reconstruction_error <= 1e-8);
    assert!(f.dbar_residual < 0.1 && !f.trivial);
}

#[test]
fn variable_conductivity_factorization() {
    // the polygon is refined with the mesh so that every boundary node is a vertex
    let mut last = f64::INFINITY;
    for n in [32, 64, 128] {
        let d = Domain::regular(n, 1.0).unwrap();
        let m = triangulate(&d, d.shortest_edge()).unwrap();
        let s = bump(&m);
        let u = solve_neumann(&m, &s, &cos_data(&m)).unwrap();
        let f = similarity_factorize(&m, &u, &s).unwrap();
        assert!(f.reconstruction_error <= 1e-8);
        assert!(f.dbar_residual < last, "{n}-gon: {} after {last}", f.dbar_residual);
        assert!(f.max_exp_neg_psi.is_finite() && f.conjugate_defect < 1e-2);
        last = f.dbar_residual;
    }
}

#[test]
fn trivial_factorization_is_flagged() {
    let m = disk(0.3);
    let s = bump(&m);
    let f = similarity_factorize(&m, &ScalarField::from_fn(&m, |_| 2.0), &s).unwrap();
    assert!(f.trivial);
    assert_eq!(f.phi.max_abs(), 0.0);
}

#[test]
fn anisotropic_input_is_rejected() {
    let m = disk(0.3);
    let s = Conductivity::anisotropic_from_fn(&m, |_| crate::fem::Sym2::new(1.0, 0.0, 4.0)).unwrap();
    assert!(beltrami_coefficient(&s).is_err());
}

#[test]
fn realified_psi_is_real_on_the_boundary() {
    let m = disk(0.15);
    let s = bump(&m);
    let u = solve_neumann(&m, &s, &cos_data(&m)).unwrap();
    let f = similarity_factorize(&m, &u, &s).unwrap();
    let r = realify_on_boundary(&m, &f).unwrap();
    let worst = r.psi.trace(&m).iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
    assert!(r.reconstruction_error < 1e-8);
}

#[test]
fn log_integral_of_constants() {
    let m = disk(0.3);
    let one = ComplexField::from_fn(&m, |_| Complex64::new(1.0, 0.0));
    assert_eq!(boundary_log_integral(&m, &one).unwrap(), 0.0);
    let c = ComplexField::from_fn(&m, |_| Complex64::new(0.0, 3.0));
    assert_relative_eq!(boundary_log_integral(&m, &c).unwrap(), m.perimeter() * 3f64.ln(), epsilon = 1e-12);
}

#[test]
fn log_integral_with_boundary_zero_is_stable() {
    let value = |h: f64| {
        let m = disk(h);
        let xi = m.boundary_point(0).to_complex();
        boundary_log_integral(&m, &ComplexField::from_fn(&m, |p| p.to_complex() - xi)).unwrap()
    };
    let (a, b) = (value(0.1), value(0.05));
    assert!(a.is_finite() && (a - b).abs() < 0.05, "{a} {b}");
}

#[test]
fn rolle_on_identically_zero_arc() {
    let m = disk(0.1);
    let nb = m.num_boundary();
    let b: Vec<bool> = (0..nb).map(|k| k >= 5 && k < 20).collect();
    let r = rolle_zero_set(&m, &BoundaryFunction::zeros(nb), &b, 1e-12).unwrap();
    assert_eq!(r.nodes, (6..19).collect::<Vec<_>>());
    assert!(r.diagnostic.is_none());
}

#[test]
fn rolle_rejects_isolated_zeros() {
    let m = disk(0.1);
    let nb = m.num_boundary();
    let s = m.arclength().to_vec();
    let (s1, s2) = (s[nb / 3], s[2 * nb / 3]);
    let v = BoundaryFunction::new(s.iter().map(|t| (t - s1) * (t - s2)).collect()).unwrap();
    let b = vanishing_set(&v, 1e-12);
    assert_eq!(b.iter().filter(|&&x| x).count(), 2);
    let r = rolle_zero_set(&m, &v, &b, 1e-12).unwrap();
    assert!(r.is_empty() && r.diagnostic.is_some());
}

#[test]
fn rolle_precondition_is_checked() {
    let m = disk(0.3);
    let nb = m.num_boundary();
    let v = BoundaryFunction::new(vec![1.0; nb]).unwrap();
    assert!(rolle_zero_set(&m, &v, &vec![true; nb], 1e-3).is_err());
}

#[test]
fn rolle_on_union_of_arcs() {
    let m = disk(0.05);
    let p = m.perimeter();
    let arcs = [(0.05, 0.2), (0.3, 0.37), (0.5, 0.52), (0.6, 0.85)];
    let inside = |s: f64| arcs.iter().any(|&(a, b)| s >= a * p && s <= b * p);
    let dist = |s: f64| {
        arcs.iter()
            .map(|&(a, b)| if inside(s) { 0.0 } else { (a * p - s).abs().min((s - b * p).abs()) })
            .fold(f64::INFINITY, f64::min)
    };
    let v = BoundaryFunction::new(m.arclength().iter().map(|&s| dist(s).powi(2)).collect()).unwrap();
    let b = vanishing_set(&v, 1e-12);
    let nb = m.num_boundary();
    let interior = (0..nb).filter(|&k| b[k] && b[(k + 1) % nb] && b[(k + nb - 1) % nb]).count();
    let r = rolle_zero_set(&m, &v, &b, 1e-12).unwrap();
    assert!(interior > 0 && r.len() as f64 >= 0.9 * interior as f64);
}

#[test]
fn norm_report_of_constant_and_linear() {
    let m = disk(0.1);
    let one = Conductivity::constant(&m, 1.0).unwrap();
    let c = norm_equivalence_report(&m, &ScalarField::from_fn(&m, |_| 1.5), &one, 2.0).unwrap();
    assert!(c.tangential < 1e-12 && c.normal < 1e-12 && c.maximal < 1e-12);
    let x = norm_equivalence_report(&m, &ScalarField::from_fn(&m, |p| p.x), &one, 2.0).unwrap();
    let v = [x.tangential, x.normal, x.maximal];
    let (lo, hi) = (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max));
    assert!(hi <= 3.0 * lo, "{v:?}");
    assert_relative_eq!(x.maximal, (m.perimeter()).sqrt(), epsilon = 1e-10);
    assert!(norm_equivalence_report(&m, &ScalarField::from_fn(&m, |p| p.x), &one, 1.0).is_err());
}

#[test]
fn norm_ratios_are_stable_under_refinement() {
    let ratios: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let m = disk(h);
            let s = bump(&m);
            let u = solve_neumann(&m, &s, &cos_data(&m)).unwrap();
            let r = norm_equivalence_report(&m, &u, &s, 2.0).unwrap();
            (r.tangential / r.normal, r.maximal / r.normal)
        })
        .collect();
    for w in ratios.windows(2) {
        assert!(w[1].0 / w[0].0 < 2.0 && w[0].0 / w[1].0 < 2.0);
        assert!(w[1].1 / w[0].1 < 2.0 && w[0].1 / w[1].1 < 2.0);
    }
}

#[test]
fn probe_verdicts() {
    let m = disk(0.15);
    let one = Conductivity::constant(&m, 1.0).unwrap();
    let nb = m.num_boundary();
    let near_east: Vec<bool> = (0..nb).map(|k| m.boundary_point(k).y.atan2(m.boundary_point(k).x).abs() < 0.3).collect();
    let zero = continuation_probe(&m, &ScalarField::zeros(m.num_nodes()), &one, &near_east, None).unwrap();
    assert_eq!((zero.eps1, zero.eps2, zero.verdict), (0.0, 0.0, Verdict::Consistent));
    let x = ScalarField::from_fn(&m, |p| p.x);
    let r = continuation_probe(&m, &x, &one, &near_east, None).unwrap();
    assert_eq!(r.verdict, Verdict::NotApplicable);
    assert!(r.eps1 > 0.5 && r.chain.is_none());
    // a solution pushed under an absolute threshold on γ but not inside
    let tiny = x.scaled(1e-9);
    let t = continuation_probe(&m, &tiny, &one, &near_east, Some(1e-6)).unwrap();
    assert_eq!(t.verdict, Verdict::Consistent);
    let chain = t.chain.unwrap();
    assert!(!chain.rolle_nodes.is_empty() && chain.max_phi_on_rolle < 1e-8 && chain.log_integral < -50.0);
}

#[test]
fn scaled_family_keeps_the_ratio() {
    let m = disk(0.15);
    let s = bump(&m);
    let spec = crate::fem::RobinSpec::new(
        &m,
        s,
        partition_boundary(&m, &[(0.0, 0.5 * m.perimeter())]).unwrap(),
        BoundaryFunction::from_fn(&m, |_, _| 1.0),
        BoundaryFunction::from_fn(&m, |_, p| 1.0 + p.x),
    )
    .unwrap();
    let nb = m.num_boundary();
    let gamma: Vec<bool> = (0..nb).map(|k| m.arclength()[k] > 0.6 * m.perimeter() && m.arclength()[k] < 0.85 * m.perimeter()).collect();
    let fam = continuation_family(&m, &spec, &gamma, 4).unwrap();
    for (k, r) in fam.iter().enumerate() {
        assert_relative_eq!(r.ratio, fam[0].ratio, max_relative = 1e-10);
        assert_relative_eq!(r.eps2, fam[0].eps2 * 0.5f64.powi(k as i32), max_relative = 1e-10);
        assert_eq!(r.threshold, fam[0].threshold);
    }
}
