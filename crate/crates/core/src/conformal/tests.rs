use super::*;
use crate::geometry::{build_polygon, Domain};
use approx::assert_relative_eq;

fn square() -> ConformalMap {
    schwarz_christoffel(&Domain::rectangle(1.0, 1.0).unwrap()).unwrap()
}

#[test]
fn square_has_equal_sides_and_symmetric_prevertices() {
    let m = square();
    for s in m.side_lengths() {
        assert_relative_eq!(*s, 1.0, epsilon = 1e-6);
    }
    for (k, t) in m.prevertices().iter().enumerate() {
        assert_relative_eq!(*t, k as f64 * PI / 2.0, epsilon = 1e-8);
    }
    let target = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    for (v, t) in m.vertices().iter().zip(target) {
        assert!(v.dist(Point::new(t.0, t.1)) < 1e-6);
    }
    let c = m.eval(Complex64::new(0.0, 0.0)).unwrap();
    assert!((c - Complex64::new(0.5, 0.5)).norm() < 1e-14);
}

#[test]
fn rectangle_opposite_sides_match() {
    let m = schwarz_christoffel(&Domain::rectangle(2.0, 1.0).unwrap()).unwrap();
    let s = m.side_lengths();
    assert!((s[0] - s[2]).abs() < 1e-6 && (s[1] - s[3]).abs() < 1e-6);
    assert_relative_eq!(s[0], 2.0, epsilon = 1e-6);
    assert_relative_eq!(s[1], 1.0, epsilon = 1e-6);
}

#[test]
fn nonconvex_polygon_solves() {
    let d = build_polygon(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]).unwrap();
    let m = schwarz_christoffel(&d).unwrap();
    for (a, b) in m.side_lengths().iter().zip(d.edge_lengths()) {
        assert_relative_eq!(*a, b, epsilon = 1e-6);
    }
    // an interior point maps inside
    let p = m.eval(Complex64::new(0.3, -0.2)).unwrap();
    assert!(d.contains(Point::new(p.re, p.im)));
}

#[test]
fn sixty_four_gon_is_nearly_the_identity() {
    let m = schwarz_christoffel(&Domain::regular(64, 1.0).unwrap()).unwrap();
    for j in 0..64 {
        let z = Complex64::from_polar(0.5, j as f64 * 0.1);
        let d = m.derivative(z).unwrap().norm();
        assert!((0.99..=1.01).contains(&d), "|φ′| = {d}");
    }
    // the polygon itself sits 1 − cos(π/64) ≈ 1.2e-3 inside the circle at edge midpoints
    let gap = 1.0 - (PI / 64.0).cos();
    let mut worst: f64 = 0.0;
    for j in 0..640 {
        let t = TWO_PI * (j as f64 + 0.25) / 640.0;
        let z = Complex64::from_polar(1.0, t);
        worst = worst.max((m.boundary_point(t).unwrap() - z).norm());
    }
    assert!(worst <= gap + 1e-4, "worst boundary deviation {worst}");
    let (a, b) = a2_of_derivative(&m, 512).unwrap();
    assert!(a <= 1.1 && b <= 1.1, "{a} {b}");
}

#[test]
fn prevertex_is_singular() {
    let m = square();
    assert!(matches!(map_derivative(&m, Complex64::new(1.0, 0.0)), Err(Error::OutOfDomain(_))));
    assert!(m.eval(Complex64::new(1.5, 0.0)).is_err());
    let v = m.eval(Complex64::new(0.0, 1.0)).unwrap();
    assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-6);
}

#[test]
fn derivative_turns_at_each_prevertex() {
    let d = build_polygon(&[(0.0, 0.0), (3.0, 0.0), (1.0, 2.0)]).unwrap();
    let m = schwarz_christoffel(&d).unwrap();
    let eps = 1e-7;
    for (k, (&t, &b)) in m.prevertices().iter().zip(m.turning_exponents()).enumerate() {
        let before = m.derivative(Complex64::from_polar(1.0, t - eps)).unwrap();
        let after = m.derivative(Complex64::from_polar(1.0, t + eps)).unwrap();
        let jump = (after / before).arg();
        assert!((jump - PI * b).abs() < 1e-5, "vertex {k}: jump {jump} vs {}", PI * b);
        assert_relative_eq!(PI * b, PI - d.interior_angles()[k], epsilon = 1e-12);
    }
}

#[test]
fn area_and_perimeter_identities() {
    let m = square();
    assert!((m.area_integral() - 1.0).abs() < 1e-2);
    assert!((m.perimeter() - 4.0).abs() < 4e-3);
    let full = m.boundary_rule(0.0, TWO_PI).unwrap().iter().map(|p| p.1).sum::<f64>();
    assert_relative_eq!(full, 4.0, epsilon = 1e-9);
}

#[test]
fn pullback_measures_arcs() {
    let m = square();
    assert_relative_eq!(arclength_pullback(&m, &[(0.0, 4.0)]).unwrap(), 4.0, epsilon = 1e-3);
    assert_relative_eq!(arclength_pullback(&m, &[(1.0, 2.0)]).unwrap(), 1.0, epsilon = 1e-3);
    assert_relative_eq!(arclength_pullback(&m, &[(0.25, 0.6), (3.5, 3.9)]).unwrap(), 0.75, epsilon = 1e-9);
    assert_eq!(arclength_pullback(&m, &[]).unwrap(), 0.0);
}

#[test]
fn boundary_correspondence_inverts() {
    let m = schwarz_christoffel(&Domain::rectangle(2.0, 1.0).unwrap()).unwrap();
    for s in [0.1, 1.0, 2.5, 3.2, 5.9] {
        let t = m.boundary_angle(s).unwrap();
        assert_relative_eq!(m.boundary_arclength(t).unwrap(), s, epsilon = 1e-12);
    }
    // boundary values agree with the radial integral slightly inside
    let t = m.boundary_angle(2.5).unwrap();
    let inner = m.eval(Complex64::from_polar(1.0 - 1e-9, t)).unwrap();
    assert!((inner - m.boundary_point(t).unwrap()).norm() < 1e-6);
}

#[test]
fn smirnov_norm_matches_boundary_l2() {
    let d = Domain::rectangle(1.0, 1.0).unwrap();
    let m = square();
    let n = 400;
    let s: Vec<f64> = (0..n).map(|j| 4.0 * j as f64 / n as f64).collect();
    let one = vec![Complex64::new(1.0, 0.0); n];
    assert_relative_eq!(smirnov_norm(&m, &s, &one).unwrap(), 2.0, epsilon = 1e-6);
    let zero = vec![Complex64::new(0.0, 0.0); n];
    assert_eq!(smirnov_norm(&m, &s, &zero).unwrap(), 0.0);
    let z: Vec<Complex64> = s.iter().map(|&t| d.point_at(t).to_complex()).collect();
    // ∫_{∂Ω} |z|² dΛ on the unit square: 1/3 + 4/3 + 4/3 + 1/3
    let direct: f64 = 10.0 / 3.0;
    assert_relative_eq!(smirnov_norm(&m, &s, &z).unwrap(), direct.sqrt(), epsilon = 1e-3);
}

#[test]
fn a2_constants_are_finite_stable_and_scale_invariant() {
    let m = square();
    let (a, b) = a2_of_derivative(&m, 512).unwrap();
    let (a2, b2) = a2_of_derivative(&m, 1024).unwrap();
    assert!(a.is_finite() && b.is_finite());
    assert!((a2 / a - 1.0).abs() < 0.1 && (b2 / b - 1.0).abs() < 0.1, "{a} {a2} {b} {b2}");
    let big = schwarz_christoffel(&Domain::rectangle(2.0, 2.0).unwrap()).unwrap();
    let (c, e) = a2_of_derivative(&big, 512).unwrap();
    assert_relative_eq!(a, c, epsilon = 1e-10);
    assert_relative_eq!(b, e, epsilon = 1e-10);
}

#[test]
fn reciprocal_derivative_is_bounded_inside() {
    let m = square();
    let (d, inv) = derivative_circle_norms(&m, 0.9, 128).unwrap();
    assert!(d.is_finite() && inv.is_finite() && inv > 0.0);
    let (d2, inv2) = derivative_circle_norms(&m, 0.9, 256).unwrap();
    assert_relative_eq!(d, d2, epsilon = 1e-8);
    assert_relative_eq!(inv, inv2, epsilon = 1e-8);
}

#[test]
fn text_round_trip() {
    let m = schwarz_christoffel(&Domain::rectangle(2.0, 1.0).unwrap()).unwrap();
    let back = ConformalMap::from_text(&m.to_text()).unwrap();
    assert_eq!(back.prevertices(), m.prevertices());
    assert_eq!(back.scale(), m.scale());
    for (a, b) in back.vertices().iter().zip(m.vertices()) {
        assert_eq!(a.x, b.x);
    }
    assert!(ConformalMap::from_text("scale 1 0\nprevertex 0 1").is_err());
}
