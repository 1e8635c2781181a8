mod common;

use cylwave::decay::*;
use cylwave::specfun::bessel_j1;
use cylwave::{Error, PhysParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn params(kappa: f64, nu: f64) -> PhysParams {
    PhysParams::linear(kappa, nu, 1.0, 1.0)
}

fn model(kappa: f64, nu: f64) -> DecayModel {
    DecayModel::new(params(kappa, nu)).unwrap()
}

fn grid(dt: f64, t_max: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

fn max_abs_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    a.iter().enumerate().fold(0.0f64, |m, (k, v)| m.max((v - b(k)).abs()))
}

#[test]
fn denominator_at_origin() {
    for (k, nu) in [(0.3, 0.0), (0.5, 0.3), (0.0, 0.1)] {
        let m = model(k, nu);
        assert_eq!(m.denominator_p(c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
        let ts = m.transfer(c(0.0, 0.0)).unwrap();
        assert!((ts.h - c(nu, 0.0)).norm() < 1e-15);
        assert!((ts.i - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(ts.j, c(0.0, 0.0));
    }
    assert!(matches!(model(0.3, 0.0).denominator_p(c(-0.1, 1.0)), Err(Error::Domain(_))));
    assert!(DecayModel::new(params(1.2, 0.0)).is_err());
}

#[test]
fn denominator_has_no_real_zero() {
    for (k, nu) in [(0.3, 0.0), (0.5, 0.3), (0.0, 0.1), (0.9, 0.9), (0.05, 0.0)] {
        let m = model(k, nu);
        for i in 1..=2000 {
            let eta = 0.05 * i as f64;
            let p = m.denominator_p(c(eta, 0.0)).unwrap();
            assert!(p.re >= 2.0 && p.im.abs() < 1e-12 * p.re, "P({eta}) = {p}");
        }
    }
}

#[test]
fn b_matches_integral_oracle() {
    let p = params(0.3, 0.1);
    let m = DecayModel::new(p.clone()).unwrap();
    for s in [c(1.0, 0.0), c(0.5, 2.0), c(3.0, -1.0)] {
        let arg = s / (c(1.0, 0.0) + s * 0.1 + s * s * 0.09).sqrt();
        let oracle = common::k_scaled_integral(0, arg) / common::k_scaled_integral(1, arg);
        let b = m.b(s).unwrap();
        assert!((b - oracle).norm() < 1e-10 * oracle.norm(), "{b} vs {oracle}");
        assert!(b.norm() <= 1.0);
    }
    let k = cummins_kernels(&p).unwrap();
    assert!((k.k_b_hat(c(1.0, 0.0)).unwrap() - m.b(c(1.0, 0.0)).unwrap() * 0.5).norm() < 1e-15);
}

#[test]
fn inverse_denominator_decays_beyond_dispersive_frequency() {
    for (k, nu) in [(0.5, 0.0), (0.3, 0.0), (0.3, 0.1), (0.5, 0.3)] {
        let m = model(k, nu);
        for w in [10.0 / k, -10.0 / k, 3.0 / k] {
            let p = m.denominator_p(c(0.0, w)).unwrap();
            assert!(1.0 / p.norm() <= 1.0 / (w * w * m.params.tau_buoy_sq), "kappa {k} nu {nu} w {w}");
        }
    }
}

#[test]
fn transfer_decays_faster_than_inverse_modulus() {
    for (k, nu) in [(0.5, 0.0), (0.3, 0.1), (0.0, 0.1), (0.0, 0.0)] {
        let m = model(k, nu);
        for j in 0..=16 {
            let th = -0.5 * PI + PI * j as f64 / 16.0;
            let s = c(th.cos(), th.sin()) * 1e6;
            let s = c(s.re.max(0.0), s.im);
            let h = m.transfer(s).unwrap().h;
            assert!((h * s).norm() < 2.0, "kappa {k} nu {nu} theta {th}: {}", (h * s).norm());
        }
    }
}

#[test]
fn extension_is_the_limit_from_the_right() {
    for (k, nu) in [(0.5, 0.0), (0.3, 0.1), (0.0, 0.2)] {
        let m = model(k, nu);
        for w in [-7.3, -2.5, -1.0, 0.4, 1.5, 2.7, 4.0, 12.0] {
            let edge = m.transfer(c(0.0, w)).unwrap().h;
            let near = m.transfer(c(1e-10, w)).unwrap().h;
            assert!((edge - near).norm() <= 1e-6 * edge.norm().max(1.0), "kappa {k} nu {nu} w {w}");
        }
    }
}

#[test]
fn branch_cut_examples() {
    let g = branch_cuts(&params(0.5, 0.0));
    assert_eq!(g.case.tag(), "nu_zero");
    assert_eq!(g.branch_points, vec![c(0.0, 2.0), c(0.0, -2.0)]);
    assert_eq!(g.cuts[0], Cut::Ray { from: c(0.0, 2.0), direction: c(0.0, 1.0) });
    assert!(!g.in_domain(c(0.0, 3.0)));
    assert!(g.in_domain(c(0.0, 1.5)));
    assert!(g.in_domain(c(1e-9, 3.0)));

    let g = branch_cuts(&params(0.0, 0.1));
    assert_eq!(g.case.tag(), "kappa_zero");
    assert_eq!(g.branch_points, vec![c(-10.0, 0.0)]);
    assert!(!g.in_domain(c(-12.0, 0.0)));

    let g = branch_cuts(&params(0.5, 0.3));
    assert_eq!(g.case.tag(), "nu_lt_2kappa");
    let expected = c(-0.6, (4.0f64 * 0.25 - 0.09).sqrt() / 0.5);
    assert!((g.branch_points[0] - expected).norm() < 1e-14);
    assert!((g.branch_points[0].im - 1.907878402833891).abs() < 1e-12);
    assert!(!g.in_domain(c(-0.6, 5.0)));
    assert!(g.in_domain(c(-0.6, 1.0)));

    let g = branch_cuts(&params(0.2, 0.5));
    assert_eq!(g.case.tag(), "nu_ge_2kappa");
    assert!(!g.in_domain(c(-6.25, 3.0)));
    assert!(!g.in_domain(c(-3.0, 0.0)));

    // the radial problem also excludes the negative real axis; the 1D one does not
    let radial = branch_cuts(&params(0.3, 0.1));
    assert!(!radial.in_domain(c(-1.0, 0.0)));
    let flat = one_d_mode(&params(0.3, 0.1)).unwrap().branch_cuts();
    assert!(flat.in_domain(c(-1.0, 0.0)));
}

#[test]
fn branch_points_solve_the_quadratic() {
    let mut rng = common::rng(11);
    for _ in 0..500 {
        let k = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..0.99) };
        let nu = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..0.99) };
        let g = branch_cuts(&params(k, nu));
        for b in &g.branch_points {
            assert!(g.residual(*b) <= 1e-12, "kappa {k} nu {nu}: {}", g.residual(*b));
        }
        for s in [c(0.5, 0.0), c(1e-3, 30.0), c(2.0, -7.0)] {
            assert!(g.in_domain(s));
        }
    }
}

#[test]
fn kernel_identity_on_random_points() {
    let mut rng = common::rng(5);
    for (k, nu) in [(0.3, 0.1), (0.5, 0.0), (0.0, 0.2), (0.2, 0.9)] {
        let kern = cummins_kernels(&params(k, nu)).unwrap();
        let m = model(k, nu);
        for _ in 0..1000 {
            let s = c(rng.gen_range(1e-4..20.0), rng.gen_range(-50.0..50.0));
            let [a, b, d] = kern.split_terms(s).unwrap();
            let lhs = a + b + d;
            let rhs = m.disc_sqrt(s).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm(), "{s}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn kernel_cases() {
    let inviscid = cummins_kernels(&params(0.5, 0.0)).unwrap();
    assert_eq!(inviscid.k0_hat(c(1.0, 2.0)).unwrap(), c(0.0, 0.0));
    assert_eq!(inviscid.k0_time(3.0, false).unwrap(), 0.0);
    assert!((inviscid.k1_time(0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((inviscid.k1_time(1.0).unwrap() - 0.5767248077568734).abs() < 1e-12);

    let both = cummins_kernels(&params(0.3, 0.1)).unwrap();
    assert!(matches!(both.k1_time(1.0), Err(Error::CaseMismatch(_))));
    assert!(matches!(both.k0_time(1.0, false), Err(Error::CaseMismatch(_))));
    let k0 = both.k0_time(1.0, true).unwrap();
    let expected = 0.3 / 0.1f64.powf(0.25) * (1.0 - (-0.1f64 / 0.09).exp()) / (2.0 * PI);
    assert!((k0 - expected).abs() < 1e-15);

    let shallow = cummins_kernels(&params(0.0, 0.2)).unwrap();
    assert!(matches!(shallow.k0_time(1.0, true), Err(Error::CaseMismatch(_))));
    assert_eq!(shallow.k0_hat(c(2.0, 1.0)).unwrap(), c(1.0, 0.0));
    assert!(matches!(shallow.k1_time(0.0), Err(Error::Domain(_))));
}

#[test]
fn normalized_shallow_kernel_transforms_to_k1_hat() {
    let nu = 0.2;
    let kern = cummins_kernels(&params(0.0, nu)).unwrap();
    let g = |t: f64| if t == 0.0 { f64::NAN } else { kern.k1_time_normalized(t).unwrap() };
    for s in [c(1.0, 0.0), c(2.0, 1.0)] {
        // 2u k1(u^2) is finite at u = 0; start just off the origin
        let num = common::forward_transform(|t| if t < 1e-300 { 0.0 } else { g(t) }, s, 40.0);
        let hat = kern.k1_hat(s).unwrap();
        assert!((num - hat).norm() < 1e-6, "{s}: {num} vs {hat}");
        // the tabulated normalization is larger by sqrt(2)
        let tab = common::forward_transform(|t| if t < 1e-300 { 0.0 } else { kern.k1_time(t).unwrap() }, s, 40.0);
        assert!((tab / hat - c(2f64.sqrt(), 0.0)).norm() < 1e-5);
    }
}

#[test]
fn dispersive_kernel_transforms_to_k1_hat() {
    let kern = cummins_kernels(&params(0.5, 0.0)).unwrap();
    for s in [c(1.0, 0.0), c(2.0, 1.0)] {
        let re = common::gauss5(|t| kern.k1_time(t).unwrap() * (-s * t).exp().re, 0.0, 40.0, 2000);
        let im = common::gauss5(|t| kern.k1_time(t).unwrap() * (-s * t).exp().im, 0.0, 40.0, 2000);
        let hat = kern.k1_hat(s).unwrap();
        assert!((c(re, im) - hat).norm() < 1e-8, "{s}");
    }
    assert!((bessel_j1(2.0) / 1.0 - kern.k1_time(1.0).unwrap()).abs() < 1e-15);
}

#[test]
fn inverse_of_first_order_pole() {
    let t = grid(0.01, 10.0);
    let inv = inverse_laplace(|s| Ok((s + 1.0).inv()), &t, &InversionOptions::default()).unwrap();
    assert!(inv.converged);
    assert!(max_abs_err(&inv.values, |k| (-t[k]).exp()) <= 1e-6);
}

#[test]
fn inverse_of_damped_oscillations() {
    let t = grid(0.01, 20.0);
    let opts = InversionOptions { n: 1 << 18, ..InversionOptions::default() };
    let inv = inverse_laplace(|s| Ok(((s + 1.0) * (s + 1.0) + 4.0).inv()), &t, &opts).unwrap();
    assert!(max_abs_err(&inv.values, |k| 0.5 * (-t[k]).exp() * (2.0 * t[k]).sin()) <= 1e-8);
    // a unit jump at t = 0; the worst error sits there
    let inv = inverse_laplace(|s| Ok(s / ((s + 0.1) * (s + 0.1) + 9.0)), &t, &InversionOptions::default()).unwrap();
    let exact = |x: f64| (-0.1 * x).exp() * ((3.0 * x).cos() - 0.1 / 3.0 * (3.0 * x).sin());
    assert!(max_abs_err(&inv.values, |k| exact(t[k])) <= 1e-6);
    assert!(inv.converged, "{}", inv.sigma_discrepancy);
}

#[test]
fn inversion_argument_checks() {
    let t = grid(0.1, 10.0);
    let f = |s: Complex64| Ok((s + 1.0).inv());
    let bad = InversionOptions { sigma: 0.0, ..InversionOptions::default() };
    assert!(inverse_laplace(f, &t, &bad).is_err());
    let bad = InversionOptions { n: 1000, ..InversionOptions::default() };
    assert!(inverse_laplace(f, &t, &bad).is_err());
    let bad = InversionOptions { period: Some(15.0), ..InversionOptions::default() };
    assert!(inverse_laplace(f, &t, &bad).is_err());
    assert!(inverse_laplace(f, &[], &InversionOptions::default()).is_err());
    let failing = |s: Complex64| if s.im > 100.0 { Err(Error::Domain("x".into())) } else { Ok(s) };
    assert!(inverse_laplace(failing, &t, &InversionOptions::default()).is_err());
}

#[test]
fn sigma_check_flags_a_growing_transform() {
    // 1/(s - 0.03) has its pole between sigma/2 and sigma
    let t = grid(0.1, 50.0);
    let inv = inverse_laplace(|s| Ok((s - 0.03).inv()), &t, &InversionOptions::default()).unwrap();
    assert!(!inv.converged);
    assert!(inv.sigma_discrepancy > 1e-3);
}

#[test]
fn one_d_inviscid_shallow_inversion_matches_exact_solution() {
    let p = params(0.0, 0.0);
    let m = one_d_mode(&p).unwrap();
    let t = grid(0.01, 30.0);
    let r = m.response(0.7, &t, &InversionOptions::default()).unwrap();
    assert!(r.converged);
    assert!(max_abs_err(&r.delta, |k| one_d_exact(&p, 0.7, t[k]).unwrap()) <= 1e-6);
    // delta_dot starts at rest and the acceleration starts at -delta0 / tau^2
    assert!(r.delta_dot[0].abs() < 1e-6);
    assert!((r.delta_ddot[0] + 0.7 / m.tau0()).abs() < 1e-4);
    assert!(matches!(one_d_exact(&params(0.1, 0.0), 1.0, 1.0), Err(Error::CaseMismatch(_))));
}

#[test]
fn damped_cosine_has_a_nonzero_initial_velocity() {
    let p = params(0.0, 0.0);
    let h = 1e-6;
    let v0 = (one_d_damped_cosine(&p, 1.0, h).unwrap() - one_d_damped_cosine(&p, 1.0, 0.0).unwrap()) / h;
    let tau = 1.0 + 1.0 / 8.0;
    assert!((v0 + 1.0 / (2.0 * tau)).abs() < 1e-5);
    let e = (one_d_exact(&p, 1.0, h).unwrap() - 1.0) / h;
    assert!(e.abs() < 1e-5);
}

#[test]
fn velocity_and_acceleration_are_derivatives_of_the_heave() {
    let m = model(0.3, 0.1);
    let dt = 0.005;
    let t = grid(dt, 40.0);
    let r = m.response(1.0, &t, &InversionOptions::default()).unwrap();
    for k in (1..t.len() - 1).step_by(50) {
        let d1 = (r.delta[k + 1] - r.delta[k - 1]) / (2.0 * dt);
        let d2 = (r.delta_dot[k + 1] - r.delta_dot[k - 1]) / (2.0 * dt);
        assert!((d1 - r.delta_dot[k]).abs() < 1e-5, "t = {}", t[k]);
        assert!((d2 - r.delta_ddot[k]).abs() < 1e-4, "t = {}", t[k]);
    }
    // Newton at t = 0: (tau^2 + kappa G(R)) delta_ddot = -delta0
    let g = cylwave::nonlocal_ops::g_at_contact(0.3, 1.0).unwrap();
    assert!((r.delta_ddot[0] * (m.tau0() + 0.3 * g) + 1.0).abs() < 1e-4);
}

#[test]
fn time_and_frequency_energies_agree() {
    let m = model(0.3, 0.1);
    let t = grid(0.02, 1000.0);
    let r = m.response(1.0, &t, &InversionOptions::for_horizon(1000.0)).unwrap();
    let time = weighted_tail(&r.delta, &t, |_| 1.0, 1000.0);
    let est = hardy_norm_estimate(|s| Ok(m.transfer(s)?.h), &HardyOptions::for_model(&m)).unwrap();
    let freq = est.norm_sq / (2.0 * PI);
    assert!(((time - freq) / freq).abs() < 0.02, "{time} vs {freq}");
    assert_eq!(est.argsup_eta, 0.0);
}

#[test]
fn laplace_fields_satisfy_the_transformed_equations() {
    for (k, nu) in [(0.3, 0.1), (0.5, 0.0), (0.0, 0.2)] {
        for m in [model(k, nu), one_d_mode(&params(k, nu)).unwrap()] {
            let flat = m.geometry == Geometry::OneD;
            for s in [c(1.0, 0.0), c(0.3, 2.0), c(2.0, -1.5)] {
                let vhat = c(0.4, -0.2);
                let (zb, qb) = m.zeta_q_laplace(1.0, s, vhat).unwrap();
                assert!((qb + vhat * 0.5).norm() < 1e-14);
                assert!(zb.norm() > 0.0);
                let q = |r: f64| m.zeta_q_laplace(r, s, vhat).unwrap().1;
                let z = |r: f64| m.zeta_q_laplace(r, s, vhat).unwrap().0;
                let h = 1e-4;
                for r in [1.3, 2.0, 4.5] {
                    let dq = (q(r + h) - q(r - h)) * (2.0 / (3.0 * h)) - (q(r + 2.0 * h) - q(r - 2.0 * h)) / (12.0 * h);
                    let drq = if flat { dq } else { dq + q(r) / r };
                    let res = s * z(r) + drq;
                    assert!(res.norm() <= 1e-6 * (s * z(r)).norm().max(1e-12), "kappa {k} nu {nu} s {s} r {r}");
                }
            }
            let far = m.zeta_q_laplace(40.0, c(1.0, 0.5), c(1.0, 0.0)).unwrap();
            assert!(far.0.norm() < 1e-10 && far.1.norm() < 1e-10);
            assert!(m.zeta_q_laplace(0.5, c(1.0, 0.0), c(1.0, 0.0)).is_err());
        }
    }
    let m = model(0.5, 0.0);
    assert!(matches!(m.zeta_q_laplace(2.0, c(0.0, 3.0), c(1.0, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn denominator_scan_examples() {
    let m = model(0.5, 0.3);
    let sc = scan_p_min(&m, Region { re: (0.0, 5.0), im: (-10.0, 10.0) }, 101, 101).unwrap();
    assert!(sc.min_abs > 0.0);
    assert!(sc.candidate_zeros.is_empty());
    // the origin corner holds P(0) = 2
    assert_eq!(sc.values[50 * 101], c(2.0, 0.0));
    assert!(sc.to_csv().starts_with("x,y,ReP,ImP,absP\n"));
    assert_eq!(sc.to_csv().lines().count(), 101 * 101 + 1);
    assert!(sc.crossings_csv().starts_with("kind,x,y\n"));

    let axis = scan_p_min(&m, Region { re: (0.0, 50.0), im: (0.0, 0.0) }, 2001, 1).unwrap();
    assert!(axis.min_abs >= 2.0);
    assert!(axis.re_crossings.is_empty());
    assert!(scan_p_min(&m, Region { re: (-1.0, 1.0), im: (0.0, 1.0) }, 4, 4).is_err());
}

#[test]
fn envelope_of_exponential_is_super_polynomial() {
    let t = grid(0.01, 300.0);
    let v: Vec<f64> = t.iter().map(|x| (-x).exp()).collect();
    let fit = decay_fit(&v, &t).unwrap();
    assert_eq!(fit.envelope, Envelope::SuperPolynomial);
    assert!(!fit.short_horizon);
    // int t^beta exp(-2t) dt = Gamma(beta + 1) / 2^(beta + 1)
    assert!((fit.tail(0.5).unwrap() - 0.313_328_534_328_87).abs() < 1e-3);
    // trapezoid error at dt = 0.01 is about 1e-5
    assert!((fit.tail(1.0).unwrap() - 0.25).abs() < 3e-5);
    assert!((fit.tail(2.0).unwrap() - 0.25).abs() < 3e-5);
}

#[test]
fn envelope_of_inverse_square_root_cosine() {
    let t: Vec<f64> = (0..=999_900).map(|i| 1.0 + i as f64 * 0.01).collect();
    let v: Vec<f64> = t.iter().map(|x| x.powf(-0.5) * x.cos()).collect();
    match envelope_exponent(&v, &t).unwrap() {
        Envelope::Power(p) => assert!((p + 0.5).abs() <= 0.05, "{p}"),
        e => panic!("{e:?}"),
    }
    let fit = decay_fit(&v[..5000], &t[..5000]).unwrap();
    assert!(fit.short_horizon);
    assert!(decay_fit(&v[..2], &t[..2]).is_err());
    assert!(decay_fit(&v[..10], &t[..9]).is_err());
}

#[test]
fn peaks_are_refined_between_samples() {
    let t = grid(0.1, 20.0);
    let v: Vec<f64> = t.iter().map(|x| (x - 0.05).cos()).collect();
    let peaks = envelope_peaks(&v, &t);
    assert!((peaks[0].0 - 0.05).abs() < 1e-12);
    assert!((peaks[1].0 - (PI + 0.05)).abs() < 2e-3);
    assert!((peaks[1].1 - 1.0).abs() < 1e-3);
}

#[test]
fn hardy_norm_of_first_order_pole() {
    let est = hardy_norm_estimate(|s| Ok((s + 1.0).inv()), &HardyOptions::default()).unwrap();
    assert!((est.norm_sq - PI).abs() < 1e-6 * PI, "{}", est.norm_sq);
    assert_eq!(est.argsup_eta, 0.0);
}

#[test]
fn hardy_norms_respect_the_bounds() {
    let p = params(0.5, 0.0);
    let m = DecayModel::new(p.clone()).unwrap();
    let scan = scan_p_min(&m, Region { re: (0.0, 5.0), im: (-20.0, 20.0) }, 201, 401).unwrap();
    let opts = HardyOptions::for_model(&m);
    let h = hardy_norm_estimate(|s| Ok(m.transfer(s)?.h), &opts).unwrap();
    assert!(h.norm() <= HARDY_CONSTANT * hardy_bound_h(&p, scan.min_abs), "{}", h.norm());
    let i = hardy_norm_estimate(|s| Ok(m.transfer(s)?.i), &opts).unwrap();
    assert!(i.norm_sq.is_finite() && i.norm_sq > 0.0);
    assert!(i.norm_sq <= HARDY_CONSTANT * hardy_bound_i_sq(&p, scan.min_abs));
    let j = hardy_norm_estimate(|s| Ok(m.transfer(s)?.j), &opts).unwrap();
    assert!(j.norm_sq <= HARDY_CONSTANT * hardy_bound_j_sq(&p, scan.min_abs));
}

#[test]
fn eta0_table() {
    assert!((one_d_mode(&params(0.5, 0.1)).unwrap().eta0() - 0.2).abs() < 1e-15);
    assert!((one_d_mode(&params(0.0, 0.25)).unwrap().eta0() - 4.0).abs() < 1e-15);
    let m = one_d_mode(&params(0.0, 0.0)).unwrap();
    assert!((m.eta0() - 1.0 / (2.0 * 1.125)).abs() < 1e-15);
}

#[test]
fn one_d_viscous_decay_is_exponential_at_rate_eta0() {
    let m = one_d_mode(&params(0.5, 0.1)).unwrap();
    let eta0 = m.eta0();
    let t = grid(0.01, 150.0);
    let r = m.response(1.0, &t, &InversionOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(envelope_exponent(&r.delta, &t).unwrap(), Envelope::SuperPolynomial);
    let scaled: Vec<f64> = r.delta.iter().zip(&t).map(|(d, x)| d * (0.5 * eta0 * x).exp()).collect();
    if let Envelope::Power(p) = envelope_exponent(&scaled, &t).unwrap() {
        assert!(p < 0.0, "{p}");
    }
    // the exp(eta0 t) weighted energy settles
    let w = |x: f64| (eta0 * x).exp();
    let tails: Vec<f64> = [37.5, 75.0, 150.0].iter().map(|&te| weighted_tail(&r.delta, &t, w, te)).collect();
    assert!(tails[2] >= tails[1] && tails[1] >= tails[0]);
    assert!(tails[2] - tails[1] <= 1e-4 * tails[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transfer_identities(
        kappa in 0.0f64..0.95, nu in 0.0f64..0.95,
        radius in 0.2f64..3.0, tau in 0.2f64..3.0,
        re in 0.0f64..30.0, im in -60.0f64..60.0,
    ) {
        prop_assume!(re > 0.0 || kappa == 0.0 || (kappa * im).abs() != 1.0);
        let m = DecayModel::new(PhysParams::linear(kappa, nu, radius, tau)).unwrap();
        let s = c(re, im);
        let ts = m.transfer(s).unwrap();
        let scale = |z: Complex64| z.norm().max(1e-300);
        prop_assert!((ts.i * ts.p_val - 1.0).norm() <= 1e-12);
        prop_assert!((ts.j - s * ts.i).norm() <= 1e-12 * scale(ts.j));
        prop_assert!((s * ts.h + ts.i * 2.0 - 1.0).norm() <= 1e-12 * (1.0 + (s * ts.h).norm()));
        if s.norm() > 0.0 {
            let h = (ts.p_val - 2.0) / (s * ts.p_val);
            prop_assert!((ts.h - h).norm() <= 1e-12 * scale(h));
        }
        prop_assert!(ts.b_val.norm() <= 1.0 + 1e-12);
    }
}
