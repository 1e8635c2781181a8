#![allow(dead_code)]
//! Independent numerical oracles shared by the integration tests.

use num_complex::Complex64;

fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on [a, b].
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let n = 64;
    let h = (b - a) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let lo = a + i as f64 * h;
        let hi = lo + h;
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_rec(&f, lo, hi, fa, fm, fb, whole, tol / n as f64, 40);
    }
    total
}

/// Laplace transform int_0^T g(t) exp(-s t) dt, integrated in u = sqrt(t) to
/// tame t^(-1/2) behaviour at the origin.
pub fn forward_transform(g: impl Fn(f64) -> f64, s: Complex64, upper_t: f64) -> Complex64 {
    let u_max = upper_t.sqrt();
    let re = simpson(|u| 2.0 * u * g(u * u) * (-s * u * u).exp().re, 0.0, u_max, 1e-12);
    let im = simpson(|u| 2.0 * u * g(u * u) * (-s * u * u).exp().im, 0.0, u_max, 1e-12);
    Complex64::new(re, im)
}

/// Composite five-point Gauss-Legendre rule on `panels` equal panels of [a, b].
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * h;
        total += X.iter().zip(&W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h;
    }
    total
}

/// exp(z) K_order(z) from int_0^inf exp(-z (cosh t - 1)) cosh(order t) dt, Re z > 0.
///
/// The integrand is even and entire in t, so the plain trapezoid rule
/// converges geometrically in the step count.
pub fn k_scaled_integral(order: u32, z: Complex64) -> Complex64 {
    let tmax = (1.0 + 50.0 / z.re.max(1e-3)).acosh() + 0.5;
    let osc = z.norm() * tmax.sinh();
    let n = ((tmax * (40.0 + 4.0 * osc)) as usize).max(4000);
    let h = tmax / n as f64;
    let g = |t: f64| {
        let sh = (0.5 * t).sinh();
        (-z * (2.0 * sh * sh)).exp() * (order as f64 * t).cosh()
    };
    let mut acc = g(0.0) * 0.5;
    for i in 1..=n {
        acc += g(i as f64 * h);
    }
    acc * h
}

/// K_order(z) from the same integral, unscaled.
pub fn k_integral(order: u32, z: Complex64) -> Complex64 {
    k_scaled_integral(order, z) * (-z).exp()
}

/// exp(-x) I_order(x) from (1/pi) int_0^pi exp(x (cos t - 1)) cos(order t) dt,
/// by the periodic trapezoid rule.
pub fn i_scaled_integral(order: u32, x: f64) -> f64 {
    let n = (4.0 * x.sqrt() * 10.0 + 200.0) as usize;
    let h = std::f64::consts::PI / n as f64;
    let f = |t: f64| (x * (t.cos() - 1.0)).exp() * (order as f64 * t).cos();
    let mut acc = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for i in 1..n {
        acc += f(i as f64 * h);
    }
    acc * h / std::f64::consts::PI
}

pub fn l2r(grid: &cylwave::grid::RadialGrid, f: &[f64]) -> f64 {
    grid.norm_sq(f).sqrt()
}

pub fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Seeded generator so test families are reproducible.
pub fn rng(seed: u64) -> rand::rngs::StdRng {
    use rand::SeedableRng;
    rand::rngs::StdRng::seed_from_u64(seed)
}
