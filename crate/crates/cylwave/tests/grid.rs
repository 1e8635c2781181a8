use cylwave::grid::{make_grid, RadialField, RadialGrid};
use cylwave::Error;
use proptest::prelude::*;
use std::sync::Arc;

fn standard() -> Arc<RadialGrid> {
    Arc::new(make_grid(1.0, 50.0, 512, 0.1).unwrap())
}

#[test]
fn clustered_spacing_near_contact_line() {
    let g = standard();
    assert!(g.first_spacing() <= 0.025);
    for p in g.nodes.windows(2) {
        if p[1] <= 1.5 {
            assert!(p[1] - p[0] <= 0.025 + 1e-15, "spacing {} at {}", p[1] - p[0], p[0]);
        }
    }
    assert_eq!(g.nodes[0], 1.0);
    assert_eq!(*g.nodes.last().unwrap(), 50.0);
    assert_eq!(g.len(), 512);
}

#[test]
fn weights_sum_to_area() {
    let g = standard();
    let s: f64 = g.quad_weights.iter().sum();
    assert!((s - 1249.5).abs() / 1249.5 < 1e-10, "{s}");
    assert!(g.quad_weights.iter().all(|&w| w > 0.0));
}

#[test]
fn rejects_bad_arguments() {
    assert!(matches!(make_grid(1.0, 2.0, 8, 10.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(make_grid(-1.0, 50.0, 64, 0.1), Err(Error::InvalidArgument(_))));
    assert!(matches!(make_grid(1.0, 50.0, 15, 0.1), Err(Error::InvalidArgument(_))));
    assert!(matches!(make_grid(0.2, 31.0, 64, 0.02), Err(Error::InvalidArgument(_))));
}

#[test]
fn derivative_examples() {
    let g = standard();
    let c = RadialField::from_fn(&g, |_| 3.7);
    let d = c.partial_r();
    for v in &d.values[1..g.len() - 1] {
        assert!(v.abs() <= 1e-8 * 3.7);
    }
    let lin = RadialField::from_fn(&g, |r| r);
    for v in &lin.d_r().values {
        assert!((v - 2.0).abs() < 1e-9);
    }
    let inv = RadialField::from_fn(&g, |r| 1.0 / r);
    let d = inv.d_r();
    for v in &d.values[1..g.len() - 1] {
        assert!(v.abs() <= 1e-6, "{v}");
    }
}

#[test]
fn derivative_is_fourth_order() {
    let err = |n: usize| {
        let g = Arc::new(make_grid(1.0, 11.0, n, 0.5).unwrap());
        let f = RadialField::from_fn(&g, |r| (2.0 * r).sin());
        let d = f.partial_r();
        g.nodes
            .iter()
            .zip(&d.values)
            .map(|(r, v)| (v - 2.0 * (2.0 * r).cos()).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(200), err(400));
    let order = (e1 / e2).log2();
    assert!(order > 3.5, "observed order {order}");
}

#[test]
fn quadrature_exact_for_cubics() {
    for grid in [standard(), Arc::new(make_grid(0.3, 7.0, 80, 0.2).unwrap())] {
        let (a, b) = (grid.radius, grid.r_max);
        for k in 0..4 {
            let f: Vec<f64> = grid.nodes.iter().map(|r| r.powi(k - 1)).collect();
            let exact = (b.powi(k + 1) - a.powi(k + 1)) / (k + 1) as f64;
            if k == 0 {
                continue;
            }
            let got = grid.integrate(&f);
            assert!(((got - exact) / exact).abs() < 1e-10, "k = {k}: {got} vs {exact}");
            let f: Vec<f64> = grid.nodes.iter().map(|r| r.powi(k)).collect();
            let exact = (b.powi(k + 2) - a.powi(k + 2)) / (k + 2) as f64;
            assert!(((grid.integrate(&f) - exact) / exact).abs() < 1e-10);
        }
    }
}

#[test]
fn discrete_integration_by_parts() {
    let g = Arc::new(make_grid(1.0, 50.0, 1024, 0.1).unwrap());
    let families: [(f64, f64); 4] = [(1.0, 0.5), (0.7, 1.0), (1.2, 0.8), (0.4, 0.3)];
    for &(a, b) in &families {
        let u = RadialField::from_fn(&g, |r| (-(r - 1.0) * a).exp() * (1.0 + r).cos());
        let v = RadialField::from_fn(&g, |r| (-(r - 1.0) * b).exp() / (1.0 + r * r));
        let lhs = g.inner(&u.partial_r().values, &v.values) + g.inner(&u.values, &v.d_r().values);
        let n = g.len() - 1;
        let bdry = g.radius * u.values[0] * v.values[0] - g.r_max * u.values[n] * v.values[n];
        let scale = g.norm_sq(&u.values).sqrt() * g.norm_sq(&v.values).sqrt();
        assert!((lhs + bdry).abs() <= 1e-6 * scale, "{a} {b}: {} vs {scale}", lhs + bdry);
    }
}

#[test]
fn norm_examples() {
    let g = standard();
    let z = RadialField::zeros(&g).norms(0.3);
    assert_eq!((z.l2r, z.h1r, z.h1kappa, z.h2kappa), (0.0, 0.0, 0.0, 0.0));
    let f = RadialField::from_fn(&g, |r| (-(r - 1.0)).exp());
    let n = f.norms(0.3);
    assert!((n.l2r * n.l2r - 0.75).abs() < 1e-6);
    // |f'|^2 = |f|^2, so H1_r^2 = 1.5
    assert!((n.h1r * n.h1r - 1.5).abs() < 1e-6);
    let n0 = f.norms(0.0);
    assert_eq!(n0.h1kappa, n0.l2r);
    assert_eq!(n0.h2kappa, n0.h1r);
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = standard();
    let b = Arc::new(make_grid(1.0, 40.0, 512, 0.1).unwrap());
    let fa = RadialField::zeros(&a);
    let fb = RadialField::zeros(&b);
    assert!(matches!(fa.inner(&fb), Err(Error::InvalidArgument(_))));
    assert!(RadialField::new(a.clone(), vec![0.0; 3]).is_err());
    assert!(RadialField::new(a.clone(), vec![f64::NAN; a.len()]).is_err());
}

#[test]
fn trace_examples() {
    let g = standard();
    assert_eq!(RadialField::from_fn(&g, |_| 3.0).trace(), 3.0);
    assert_eq!(RadialField::from_fn(&g, |r| r - 1.0).trace(), 0.0);
}

#[test]
fn csv_layout() {
    let g = Arc::new(RadialGrid::from_nodes((0..16).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap());
    let s = RadialField::from_fn(&g, |r| r).to_csv("zeta");
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "r,zeta");
    assert_eq!(lines.len(), 17);
    assert!(g.header_csv().starts_with("R,r_max,n\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grids_are_monotone_with_positive_weights(
        radius in 0.2f64..3.0,
        w in 0.02f64..0.5,
        extra in 5.0f64..60.0,
        n in 64usize..700,
    ) {
        let r_max = radius + 10.0 * w + extra;
        if let Ok(g) = make_grid(radius, r_max, n, w) {
            prop_assert_eq!(g.len(), n);
            prop_assert!(g.nodes.windows(2).all(|p| p[1] > p[0]));
            prop_assert!(g.quad_weights.iter().all(|&x| x > 0.0));
            let s: f64 = g.quad_weights.iter().sum();
            let exact = 0.5 * (r_max * r_max - radius * radius);
            prop_assert!(((s - exact) / exact).abs() < 1e-10);
        }
    }
}
