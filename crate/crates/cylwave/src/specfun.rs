//! Modified Bessel functions of orders 0 and 1, the principal square root and
//! the ratio B(s) = K0(R p(s)) / K1(R p(s)).
//!
//! K0 and K1 accept complex arguments off the negative real axis. The algorithm
//! is split by modulus: power/log series for |z| <= 2, the Steed/Temme
//! continued fraction for 2 < |z| < 20, and the Debye expansion beyond. I0 and
//! I1 are only needed on the positive real half-line.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler-Mascheroni constant, 20 digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SERIES_RADIUS: f64 = 2.0;
const DEBYE_RADIUS: f64 = 20.0;
const EPS: f64 = 1e-17;

/// Result of a Bessel evaluation.
///
/// When `scaled` is set, `value` holds exp(z) K(z) for K or exp(-z) I(z) for I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub value: Complex64,
    pub scaled: bool,
    pub order: u8,
}

fn on_negative_axis(z: Complex64) -> bool {
    z.im == 0.0 && z.re < 0.0
}

/// Principal square root: the root with non-negative real part.
///
/// The real and imaginary parts follow sqrt((|s|+Re s)/2) and
/// sgn(Im s) sqrt((|s|-Re s)/2) with sgn(0) = +1. The smaller of the two is
/// recovered from Im s to avoid cancellation.
pub fn principal_sqrt(s: Complex64) -> Result<Complex64> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {s}")));
    }
    if on_negative_axis(s) {
        return Err(Error::Domain(format!("sqrt branch cut at {s}")));
    }
    Ok(sqrt_unchecked(s))
}

pub(crate) fn sqrt_unchecked(s: Complex64) -> Complex64 {
    let m = s.re.hypot(s.im);
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let sgn = if s.im < 0.0 { -1.0 } else { 1.0 };
    if s.re >= 0.0 {
        let a = ((m + s.re) * 0.5).sqrt();
        Complex64::new(a, s.im / (2.0 * a))
    } else {
        let b = ((m - s.re) * 0.5).sqrt();
        Complex64::new(s.im.abs() / (2.0 * b), sgn * b)
    }
}

/// Power series for I0 and I1 (any complex z, used for small modulus).
fn i01_series(z: Complex64) -> (Complex64, Complex64) {
    let y = z * z * 0.25;
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = Complex64::new(1.0, 0.0);
    let mut s0 = t0;
    let mut s1 = t1;
    for k in 1..500 {
        let kf = k as f64;
        t0 = t0 * y / (kf * kf);
        t1 = t1 * y / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.norm() <= EPS * s0.norm() && t1.norm() <= EPS * s1.norm() {
            break;
        }
    }
    (s0, s1 * z * 0.5)
}

/// Unscaled K0, K1 from the log-power series, |z| small.
fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let (i0, i1) = i01_series(z);
    let y = z * z * 0.25;
    let lz = (z * 0.5).ln();
    // K0 = -(ln(z/2) + gamma) I0 + sum_{k>=1} y^k/(k!)^2 H_k
    let mut t = Complex64::new(1.0, 0.0);
    let mut h = 0.0;
    let mut s0 = Complex64::new(0.0, 0.0);
    // K1 = 1/z + ln(z/2) I1 - (z/4) sum_{k>=0} (psi(k+1)+psi(k+2)) y^k/(k!(k+1)!)
    let mut u = Complex64::new(1.0, 0.0);
    let mut s1 = Complex64::new(1.0 - 2.0 * EULER_GAMMA, 0.0);
    for k in 1..500 {
        let kf = k as f64;
        t = t * y / (kf * kf);
        h += 1.0 / kf;
        let term0 = t * h;
        s0 += term0;
        u = u * y / (kf * (kf + 1.0));
        let psi_sum = -2.0 * EULER_GAMMA + 2.0 * h + 1.0 / (kf + 1.0);
        let term1 = u * psi_sum;
        s1 += term1;
        if term0.norm() <= EPS * s0.norm().max(1e-300) && term1.norm() <= EPS * s1.norm() {
            break;
        }
    }
    let k0 = -(lz + EULER_GAMMA) * i0 + s0;
    let k1 = z.inv() + lz * i1 - z * 0.25 * s1;
    (k0, k1)
}

/// Scaled K0, K1 through Steed's continued fraction (Temme's CF2, order 0).
fn k01_cf2_scaled(z: Complex64) -> Result<(Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    let mut b = (one + z) * 2.0;
    let mut d = b.inv();
    let mut delh = d;
    let mut h = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut converged = false;
    for i in 2..200_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += qnew * c;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - one) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-16 * s.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("K continued fraction at z = {z}")));
    }
    h *= a1;
    let k0 = sqrt_unchecked(Complex64::new(PI, 0.0) / (z * 2.0)) / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    Ok((k0, k1))
}

/// Scaled K_nu for nu in {0, 1} from the Debye series, large |z|.
fn k_debye_scaled(nu: u8, z: Complex64) -> Complex64 {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let zi = z.inv();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term = term * zi * ((mu - odd * odd) / (8.0 * kf));
        let tn = term.norm();
        if tn > prev {
            break;
        }
        sum += term;
        prev = tn;
        if tn <= EPS * sum.norm() {
            break;
        }
    }
    sqrt_unchecked(Complex64::new(PI, 0.0) / (z * 2.0)) * sum
}

/// Scaled pair (exp(z) K0(z), exp(z) K1(z)).
pub fn k01_scaled(z: Complex64) -> Result<(Complex64, Complex64)> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite Bessel argument {z}")));
    }
    if on_negative_axis(z) || z.norm() == 0.0 {
        return Err(Error::Domain(format!("K Bessel branch cut or origin at {z}")));
    }
    let m = z.norm();
    if m <= SERIES_RADIUS {
        let (k0, k1) = k01_series(z);
        let e = z.exp();
        Ok((k0 * e, k1 * e))
    } else if m < DEBYE_RADIUS {
        k01_cf2_scaled(z)
    } else {
        Ok((k_debye_scaled(0, z), k_debye_scaled(1, z)))
    }
}

/// Same as [`k01_scaled`] but forcing the continued fraction; used to
/// cross-validate the algorithm split on overlapping bands.
pub fn k01_scaled_cf2(z: Complex64) -> Result<(Complex64, Complex64)> {
    k01_cf2_scaled(z)
}

/// Same as [`k01_scaled`] but forcing the Debye series.
pub fn k01_scaled_debye(z: Complex64) -> (Complex64, Complex64) {
    (k_debye_scaled(0, z), k_debye_scaled(1, z))
}

/// Modified Bessel function of the second kind, order 0 or 1.
pub fn bessel_k(order: u8, z: Complex64, scaled: bool) -> Result<BesselEval> {
    if order > 1 {
        return Err(Error::InvalidArgument(format!("order {order} not supported")));
    }
    let (k0, k1) = k01_scaled(z)?;
    let ks = if order == 0 { k0 } else { k1 };
    let value = if scaled {
        ks
    } else {
        if z.re < -700.0 {
            return Err(Error::Overflow(format!("unscaled K at Re z = {}", z.re)));
        }
        ks * (-z).exp()
    };
    Ok(BesselEval { value, scaled, order })
}

/// Real scaled pair (exp(-x) I0(x), exp(-x) I1(x)) for x > 0.
pub fn i01_scaled_real(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("I Bessel needs x > 0, got {x}")));
    }
    if x <= DEBYE_RADIUS {
        let (i0, i1) = i01_series(Complex64::new(x, 0.0));
        let e = (-x).exp();
        Ok((i0.re * e, i1.re * e))
    } else {
        let f = |mu: f64| {
            let mut term = 1.0;
            let mut sum = 1.0;
            let mut prev = f64::INFINITY;
            for k in 1..200 {
                let kf = k as f64;
                let odd = 2.0 * kf - 1.0;
                term *= -(mu - odd * odd) / (8.0 * kf * x);
                if term.abs() > prev {
                    break;
                }
                sum += term;
                prev = term.abs();
                if term.abs() <= EPS * sum.abs() {
                    break;
                }
            }
            sum / (2.0 * PI * x).sqrt()
        };
        Ok((f(0.0), f(4.0)))
    }
}

/// Real scaled pair (exp(x) K0(x), exp(x) K1(x)) for x > 0.
pub fn k01_scaled_real(x: f64) -> Result<(f64, f64)> {
    let (a, b) = k01_scaled(Complex64::new(x, 0.0))?;
    Ok((a.re, b.re))
}

/// Modified Bessel function of the first kind on the positive real axis.
pub fn bessel_i(order: u8, x: f64, scaled: bool) -> Result<BesselEval> {
    if order > 1 {
        return Err(Error::InvalidArgument(format!("order {order} not supported")));
    }
    let (i0, i1) = i01_scaled_real(x)?;
    let is = if order == 0 { i0 } else { i1 };
    let value = if scaled {
        is
    } else {
        if x > 709.0 {
            return Err(Error::Overflow(format!("unscaled I at x = {x}")));
        }
        is * x.exp()
    };
    Ok(BesselEval { value: Complex64::new(value, 0.0), scaled, order })
}

/// Bessel function of the first kind J1 on the real line.
///
/// Uses J1(x) = (1/2pi) int_0^{2pi} cos(t - x sin t) dt; the periodic
/// trapezoid rule converges geometrically once the node count exceeds |x|.
pub fn bessel_j1(x: f64) -> f64 {
    let n = (x.abs() + 12.0 * x.abs().cbrt() + 64.0) as usize;
    let h = 2.0 * PI / n as f64;
    let mut s = 0.0;
    for j in 0..n {
        let t = j as f64 * h;
        s += (t - x * t.sin()).cos();
    }
    s / n as f64
}

/// The map p(s) = s / sqrt(1 + nu s + kappa^2 s^2).
pub fn p_map(s: Complex64, kappa: f64, nu: f64) -> Result<Complex64> {
    let d = Complex64::new(1.0, 0.0) + s * nu + s * s * (kappa * kappa);
    if on_negative_axis(d) || d.norm() == 0.0 {
        return Err(Error::Domain(format!("1 + nu s + kappa^2 s^2 on the cut at s = {s}")));
    }
    Ok(s / sqrt_unchecked(d))
}

/// B(s) = K0(R p(s)) / K1(R p(s)), with B(0) = 0, B(+-i/kappa) = 1 when
/// nu = 0, and the continuous extension onto {i w : |w| > 1/kappa} for nu = 0.
pub fn ratio_b(s: Complex64, kappa: f64, nu: f64, radius: f64) -> Result<Complex64> {
    if s.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = Complex64::new(1.0, 0.0) + s * nu + s * s * (kappa * kappa);
    if nu == 0.0 && kappa > 0.0 && s.re == 0.0 {
        let w = s.im.abs();
        let kw = kappa * w;
        if (kw - 1.0).abs() < 1e-12 || d.norm() == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        if kw > 1.0 {
            let x = radius * w / (kw * kw - 1.0).sqrt();
            let (k0, k1) = k01_scaled_real(x)?;
            return Ok(Complex64::new(k0 / k1, 0.0));
        }
    }
    if d.norm() == 0.0 {
        return Err(Error::Domain(format!("branch point at s = {s}")));
    }
    let p = p_map(s, kappa, nu)? * radius;
    if on_negative_axis(p) {
        return Err(Error::Domain(format!("p(s) on the negative axis at s = {s}")));
    }
    let (k0, k1) = k01_scaled(p)?;
    Ok(k0 / k1)
}
