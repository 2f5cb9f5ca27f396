use super::*;
use crate::fem::{BoundaryFunction, Conductivity, ScalarField, Sym2};
use crate::geometry::{triangulate, Domain, Mesh, Point};
use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

fn square(h: f64) -> Mesh {
    triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), h).unwrap()
}

fn diag14(mesh: &Mesh) -> Conductivity {
    Conductivity::anisotropic_from_fn(mesh, |_| Sym2::new(1.0, 0.0, 4.0)).unwrap()
}

fn solved(mesh: &Mesh, sigma: &Conductivity, n: usize) -> BeltramiMap {
    let grid = BeltramiGrid::covering(mesh.domain(), n).unwrap();
    solve_beltrami(&sample_mu1(mesh, sigma, &grid).unwrap()).unwrap()
}

#[test]
fn mu1_hand_values() {
    assert_eq!(mu1_of(Sym2::new(1.0, 0.0, 4.0)).unwrap(), Complex64::new(1.0 / 3.0, 0.0));
    assert_eq!(mu1_of(Sym2::new(4.0, 0.0, 1.0)).unwrap(), Complex64::new(-1.0 / 3.0, 0.0));
    assert_eq!(mu1_of(Sym2::scalar(2.5)).unwrap(), Complex64::new(0.0, 0.0));
    assert!(mu1_of(Sym2::new(1.0, 2.0, 1.0)).is_err());
    assert!(mu1_of(Sym2::new(-1.0, 0.0, -1.0)).is_err());
    assert!(mu1_of(Sym2::new(f64::NAN, 0.0, 1.0)).is_err());
}

#[test]
fn mu1_vanishes_exactly_on_scalar_nodes() {
    let m = square(0.25);
    let s = Conductivity::anisotropic_from_fn(&m, |p| {
        if p.x < 0.5 {
            Sym2::scalar(1.0 + p.y)
        } else {
            Sym2::new(1.0, 0.3 * p.x, 2.0)
        }
    })
    .unwrap();
    let mu = mu1(&s).unwrap();
    for (i, z) in mu.values().iter().enumerate() {
        assert_eq!(*z == Complex64::new(0.0, 0.0), s.matrix_at(i).is_scalar());
    }
}

proptest! {
    #[test]
    fn mu1_is_strictly_inside_the_unit_disk(a in 0.05f64..20.0, b in 0.05f64..20.0, t in 0.0f64..std::f64::consts::PI) {
        let (c, s) = (t.cos(), t.sin());
        let m = Sym2::new(a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c);
        let mu = mu1_of(m).unwrap();
        prop_assert!(mu.norm() < 1.0);
        let expected = (a - b).abs() / (a + b + 2.0 * (a * b).sqrt());
        prop_assert!((mu.norm() - expected).abs() < 1e-12);
    }
}

#[test]
fn zero_mu_gives_the_identity() {
    let grid = BeltramiGrid::new(Point::new(-1.0, -1.0), 2.0 / 32.0, 32).unwrap();
    let map = solve_beltrami(&GridField::from_fn(grid, |_| Complex64::new(0.0, 0.0))).unwrap();
    assert_eq!(map.iterations, 0);
    assert!(map.converged);
    for p in [Point::new(0.1, 0.3), Point::new(-0.9, 0.2), Point::new(5.0, -3.0)] {
        assert!((map.eval(p) - p.to_complex()).norm() < 1e-12);
    }
    let z = map.inverse(Complex64::new(0.3, -0.4)).unwrap();
    assert!(z.dist(Point::new(0.3, -0.4)) < 1e-12);
}

#[test]
fn rejects_k_at_least_one() {
    let grid = BeltramiGrid::new(Point::new(-1.0, -1.0), 0.25, 8).unwrap();
    assert!(solve_beltrami(&GridField::from_fn(grid, |_| Complex64::new(1.0, 0.0))).is_err());
    assert!(solve_beltrami(&GridField::from_fn(grid, |_| Complex64::new(0.0, 1.2))).is_err());
}

#[test]
fn constant_mu_disk_is_affine_inside() {
    let grid = BeltramiGrid::new(Point::new(-2.0, -2.0), 4.0 / 128.0, 128).unwrap();
    let mu = GridField::from_fn(grid, |p| Complex64::new(if p.norm() < 1.0 { 1.0 / 3.0 } else { 0.0 }, 0.0));
    let map = solve_beltrami(&mu).unwrap();
    assert!(map.converged);
    let (d, dbar) = map.wirtinger_derivatives();
    let mut worst: f64 = 0.0;
    for (k, p) in grid.points().iter().enumerate() {
        if p.norm() < 0.6 {
            worst = worst.max((dbar.values[k] / d.values[k] - 1.0 / 3.0).norm());
        }
    }
    println!("disk ratio error {worst:e}");
    assert!(worst < 1e-3, "∂̄Θ/∂Θ deviates from 1/3 by {worst:e}");
}

#[test]
fn neumann_updates_contract_geometrically() {
    let grid = BeltramiGrid::new(Point::new(-2.0, -2.0), 4.0 / 64.0, 64).unwrap();
    let k = 0.5;
    let mu = GridField::from_fn(grid, |p| Complex64::from_polar(k * (-2.0 * p.dot(p)).exp(), p.x));
    let map = solve_beltrami(&mu).unwrap();
    assert!(map.converged);
    let ratios: Vec<f64> = map.updates.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    println!("iterations {} worst ratio {worst} k {}", map.iterations, map.k_bound);
    assert!(worst <= map.k_bound, "update ratio {worst} exceeds k = {}", map.k_bound);
}

#[test]
fn far_field_decays_like_one_over_z() {
    let grid = BeltramiGrid::new(Point::new(-2.0, -2.0), 4.0 / 64.0, 64).unwrap();
    let mu = GridField::from_fn(grid, |p| Complex64::new(0.3 * (-3.0 * p.dot(p)).exp(), 0.1 * p.x * (-3.0 * p.dot(p)).exp()));
    let map = solve_beltrami(&mu).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in [4.0, 8.0, 16.0, 32.0, 64.0] {
        let worst = (0..32)
            .map(|k| {
                let p = Point::new(r * (k as f64 * 0.196).cos(), r * (k as f64 * 0.196).sin());
                (map.eval(p) - p.to_complex()).norm()
            })
            .fold(0.0, f64::max);
        xs.push(f64::ln(r));
        ys.push(worst.ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    println!("far-field slope {slope}");
    assert!((slope + 1.0).abs() < 0.05, "decay slope {slope}");
    let ring = grid.point(0, 0);
    assert!((map.eval(ring) - ring.to_complex()).norm() * ring.norm() < 1.0);
}

#[test]
fn diag14_pushes_forward_to_two() {
    let mut residuals = Vec::new();
    let mut compositions = Vec::new();
    for (h, n) in [(0.1, 128), (0.05, 256)] {
        let m = square(h);
        let s = diag14(&m);
        let map = solved(&m, &s, n);
        assert!(map.converged);
        let push = pushforward_conductivity(&m, &s, &map).unwrap();
        for v in push.sigma_tilde.scalar_values().unwrap() {
            assert!((v - 2.0).abs() < 1e-2);
        }
        assert!(push.matrix_discrepancy < 1e-3, "matrix form off by {:e}", push.matrix_discrepancy);
        assert!(push.det_discrepancy < 1e-10);
        assert!(push.inversion_error < 1e-10);
        let u = ScalarField::new(m.nodes().iter().map(|p| p.x + 0.5 * p.y).collect()).unwrap();
        residuals.push(map.residual);
        compositions.push(composition_residual(&push, &u).unwrap());
    }
    assert!(residuals[1] < residuals[0], "{residuals:?}");
    assert!(compositions[1] < compositions[0], "{compositions:?}");
}

#[test]
fn text_round_trip() {
    let m = square(0.25);
    let map = solved(&m, &diag14(&m), 16);
    let back = BeltramiMap::from_text(&map.to_text()).unwrap();
    assert_eq!(back.theta(), map.theta());
    assert_eq!(back.h(), map.h());
    assert_eq!(back.residual, map.residual);
    assert_eq!(back.iterations, map.iterations);
    let f = map.mu();
    assert_eq!(&GridField::from_text(&f.to_text()).unwrap(), f);
    assert!(GridField::from_text("grid 0 0 1 8\n1 2\n").is_err());
    assert!(BeltramiMap::from_text("k_bound 0.1\n").is_err());
}

#[test]
fn boundary_data_transport() {
    let m = square(0.25);
    let nb = m.num_boundary();
    let dtau = BoundaryFunction::from_fn(&m, |k, p| 1.0 + p.x + 0.1 * k as f64);
    let flux = BoundaryFunction::from_fn(&m, |_, p| p.y - 0.5);
    let grid = BeltramiGrid::covering(m.domain(), 16).unwrap();

    let id = BeltramiMap::identity(grid);
    let same = pushforward_boundary_data(&m, &dtau, &flux, &id).unwrap();
    for k in 0..nb {
        assert_relative_eq!(same.tangential.values()[k], dtau.values()[k], epsilon = 1e-14);
        assert_relative_eq!(same.flux.values()[k], flux.values()[k], epsilon = 1e-14);
    }

    let doubled = BeltramiMap::from_theta(&GridField::from_fn(grid, |p| 2.0 * p.to_complex())).unwrap();
    let out = pushforward_boundary_data(&m, &dtau, &flux, &doubled).unwrap();
    for k in 0..nb {
        assert_relative_eq!(out.stretch[k], 2.0, epsilon = 1e-12);
        assert_relative_eq!(out.flux.values()[k], 0.5 * flux.values()[k], epsilon = 1e-12);
    }

    let map = solved(&m, &diag14(&m), 64);
    let there = pushforward_boundary_data(&m, &dtau, &flux, &map).unwrap();
    let (t, f) = pullback_boundary_data(&there).unwrap();
    for k in 0..nb {
        assert!((t.values()[k] - dtau.values()[k]).abs() < 1e-8);
        assert!((f.values()[k] - flux.values()[k]).abs() < 1e-8);
    }
    assert!(pushforward_boundary_data(&m, &BoundaryFunction::zeros(3), &flux, &map).is_err());
}

#[test]
fn degenerate_stretch_is_reported() {
    let m = square(0.25);
    let grid = BeltramiGrid::covering(m.domain(), 16).unwrap();
    let flat = BeltramiMap::from_theta(&GridField::from_fn(grid, |p| Complex64::new(p.x, 1e-10 * p.y))).unwrap();
    let f = BoundaryFunction::from_fn(&m, |_, p| p.x);
    let err = pushforward_boundary_data(&m, &f, &f, &flat).unwrap_err();
    assert!(err.to_string().contains("degenerate"), "{err}");
}

#[test]
fn scalar_conductivity_is_unchanged() {
    let m = square(0.2);
    let s = Conductivity::isotropic(m.nodes().iter().map(|p| 1.0 + p.x * p.y).collect()).unwrap();
    let grid = BeltramiGrid::covering(m.domain(), 32).unwrap();
    let mu = sample_mu1(&m, &s, &grid).unwrap();
    assert_eq!(mu.max_abs(), 0.0);
    let map = solve_beltrami(&mu).unwrap();
    let push = pushforward_conductivity(&m, &s, &map).unwrap();
    for (i, v) in push.sigma_tilde.scalar_values().unwrap().iter().enumerate() {
        assert_relative_eq!(*v, s.scalar_at(i), epsilon = 1e-12);
    }
    assert!(push.matrix_discrepancy < 1e-12);
    assert_eq!(push.image.nodes(), m.nodes());
}

#[test]
fn inverse_round_trips_through_the_grid() {
    let m = square(0.25);
    let map = solved(&m, &Conductivity::anisotropic_from_fn(&m, |p| Sym2::new(1.0 + p.x, 0.3, 2.0)).unwrap(), 64);
    for p in [Point::new(0.2, 0.7), Point::new(0.0, 0.0), Point::new(1.0, 0.5), Point::new(-0.3, 1.2)] {
        let back = map.inverse(map.eval(p)).unwrap();
        assert!(back.dist(p) < 1e-10, "{p:?} -> {back:?}");
    }
}

#[test]
fn linear_jacobian_matches_complex_derivatives() {
    let grid = BeltramiGrid::new(Point::new(-1.0, -1.0), 0.125, 16).unwrap();
    let map = BeltramiMap::from_theta(&GridField::from_fn(grid, |p| {
        let z = p.to_complex();
        z + z.conj() / 3.0
    }))
    .unwrap();
    let j = map.jacobian(Point::new(0.1, 0.2));
    let m = transport_matrix(j, Sym2::new(1.0, 0.0, 4.0)).unwrap();
    assert_relative_eq!(m.s11, 2.0, epsilon = 1e-12);
    assert_relative_eq!(m.s12, 0.0, epsilon = 1e-12);
    assert_relative_eq!(m.s22, 2.0, epsilon = 1e-12);
}
