//! Trace-level ODE system coupling the body motion (delta, delta_dot) to the
//! surface trace (zeta_bar, zeta_bar_dot) at the contact line.
//!
//! The system reads M dZ/dt + T Z = P + eps P~ with
//! P = (0, F, 0, f_hyd_bar) and P~ = (0, gamma + a delta_dot^2, 0, -frak_f_bar).

use crate::error::{Error, Result};
use crate::nonlocal_ops::g_at_contact;
use crate::params::PhysParams;

/// Z = (delta, delta_dot, zeta_bar, zeta_bar_dot).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceState {
    pub delta: f64,
    pub delta_dot: f64,
    pub zeta_bar: f64,
    pub zeta_bar_dot: f64,
}

impl TraceState {
    pub fn new(delta: f64, delta_dot: f64, zeta_bar: f64, zeta_bar_dot: f64) -> Self {
        Self { delta, delta_dot, zeta_bar, zeta_bar_dot }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.delta, self.delta_dot, self.zeta_bar, self.zeta_bar_dot]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Checks finiteness and that the body stays off the bottom.
    pub fn check(&self, params: &PhysParams) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite trace state".into()));
        }
        let clearance = 1.0 + params.epsilon * self.delta + (params.h_i_eq - 1.0);
        if clearance <= 0.0 {
            return Err(Error::Domain(format!("body touches the bottom: clearance {clearance}")));
        }
        Ok(())
    }
}

/// Which quadratic flux enters the trace equation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FluxVariant {
    /// zeta^2/2 + q^2/h
    #[default]
    HalfZetaSq,
    /// zeta^2/h + q^2/h
    ZetaSqOverH,
}

/// The matrices of the linear part and the determinant of M.
#[derive(Debug, Clone, PartialEq)]
pub struct ShodeMatrices {
    pub m: [[f64; 4]; 4],
    pub t: [[f64; 4]; 4],
    pub det_m: f64,
    pub g_at_r: f64,
}

/// Right-hand side of the trace system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShodeRhs {
    pub dz: [f64; 4],
    /// algebraic body acceleration
    pub delta_ddot: f64,
}

fn positive_height(h: f64, what: &str) -> Result<f64> {
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(Error::Domain(format!("non-positive water column {what} = {h}")))
    }
}

/// tau_kappa^2(eps delta) = tau_buoy^2 + kappa^2 + R^2/(8 h_i), h_i = 1 + eps delta.
pub fn tau_kappa_sq(eps_delta: f64, params: &PhysParams) -> Result<f64> {
    let hi = positive_height(1.0 + eps_delta, "h_i")?;
    let r = params.radius;
    Ok(params.tau_buoy_sq + params.kappa * params.kappa + r * r / (8.0 * hi))
}

/// a = R^2/(16 h_i^2) - R^2/(8 h_e^2) with h_i = 1 + eps delta, h_e = 1 + eps zeta_bar.
pub fn added_mass_a(delta: f64, zeta_bar: f64, params: &PhysParams) -> Result<f64> {
    let hi = positive_height(1.0 + params.epsilon * delta, "h_i")?;
    let he = positive_height(1.0 + params.epsilon * zeta_bar, "h_e")?;
    let r2 = params.radius * params.radius;
    Ok(r2 / (16.0 * hi * hi) - r2 / (8.0 * he * he))
}

/// Quadratic flux at the contact line, with q_bar = -(R/2) delta_dot.
pub fn frak_f_bar(z: &TraceState, params: &PhysParams, variant: FluxVariant) -> Result<f64> {
    let he = positive_height(1.0 + params.epsilon * z.zeta_bar, "h_e")?;
    let q = -0.5 * params.radius * z.delta_dot;
    Ok(match variant {
        FluxVariant::HalfZetaSq => 0.5 * z.zeta_bar * z.zeta_bar + q * q / he,
        FluxVariant::ZetaSqOverH => (z.zeta_bar * z.zeta_bar + q * q) / he,
    })
}

/// The three pieces of gamma: local, non-local and the factor multiplying F_ext.
pub fn gamma_terms(z: &TraceState, f_hyd_bar: f64, f_ext: f64, params: &PhysParams) -> Result<(f64, f64, f64)> {
    let g = g_at_contact(params.kappa, params.radius)?;
    gamma_terms_with_g(z, f_hyd_bar, f_ext, params, g, FluxVariant::default())
}

pub(crate) fn gamma_terms_with_g(
    z: &TraceState,
    f_hyd_bar: f64,
    _f_ext: f64,
    params: &PhysParams,
    g_at_r: f64,
    variant: FluxVariant,
) -> Result<(f64, f64, f64)> {
    let eps = params.epsilon;
    let hi = positive_height(1.0 + eps * z.delta, "h_i")?;
    let denom = tau_kappa_sq(eps * z.delta, params)? + params.kappa * g_at_r;
    if !(denom > 0.0) {
        return Err(Error::Singular(format!("tau^2 + kappa G = {denom}")));
    }
    let c = params.radius * params.radius / (8.0 * hi * denom);
    let a = added_mass_a(z.delta, z.zeta_bar, params)?;
    let ff = frak_f_bar(z, params, variant)?;
    let cd = c * z.delta;
    let loc = cd * (eps * a * z.delta_dot * z.delta_dot - eps * ff - z.delta - params.nu * z.delta_dot);
    Ok((loc, cd * f_hyd_bar, cd))
}

/// Builds M and T for the given parameters (kappa > 0).
pub fn shode_matrices(params: &PhysParams) -> Result<ShodeMatrices> {
    if !(params.kappa > 0.0) {
        return Err(Error::InvalidArgument("trace system needs kappa > 0".into()));
    }
    let g = g_at_contact(params.kappa, params.radius)?;
    Ok(shode_matrices_with_g(params, g)?)
}

pub(crate) fn shode_matrices_with_g(params: &PhysParams, g: f64) -> Result<ShodeMatrices> {
    let k = params.kappa;
    let nu = params.nu;
    let tau0 = tau_kappa_sq(0.0, params)?;
    let m = [
        [1.0, 0.0, 0.0, 0.0],
        [nu, tau0, -nu, -k * k],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, k * g, nu, k * k],
    ];
    let t = [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let det_m = det4(&m);
    Ok(ShodeMatrices { m, t, det_m, g_at_r: g })
}

/// Determinant of a 4x4 matrix by cofactor expansion along the first row.
pub fn det4(a: &[[f64; 4]; 4]) -> f64 {
    let det3 = |r: [usize; 3], c: [usize; 3]| -> f64 {
        a[r[0]][c[0]] * (a[r[1]][c[1]] * a[r[2]][c[2]] - a[r[1]][c[2]] * a[r[2]][c[1]])
            - a[r[0]][c[1]] * (a[r[1]][c[0]] * a[r[2]][c[2]] - a[r[1]][c[2]] * a[r[2]][c[0]])
            + a[r[0]][c[2]] * (a[r[1]][c[0]] * a[r[2]][c[1]] - a[r[1]][c[1]] * a[r[2]][c[0]])
    };
    let mut d = 0.0;
    let mut sign = 1.0;
    for j in 0..4 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != j).collect();
        d += sign * a[0][j] * det3([1, 2, 3], [cols[0], cols[1], cols[2]]);
        sign = -sign;
    }
    d
}

/// Solves a 4x4 system by Gaussian elimination with partial pivoting.
pub fn solve4(a: &[[f64; 4]; 4], b: [f64; 4]) -> Result<[f64; 4]> {
    let mut m = *a;
    let mut x = b;
    for col in 0..4 {
        let p = (col..4)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        if m[p][col].abs() < 1e-300 {
            return Err(Error::Singular("4x4 trace matrix".into()));
        }
        m.swap(col, p);
        x.swap(col, p);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..4).rev() {
        let mut s = x[col];
        for k in col + 1..4 {
            s -= m[col][k] * x[k];
        }
        x[col] = s / m[col][col];
    }
    Ok(x)
}

/// dZ/dt from the matrix form, plus the algebraic acceleration.
pub fn shode_rhs(
    mats: &ShodeMatrices,
    z: &TraceState,
    f_hyd_bar: f64,
    frak_f_bar: f64,
    f_ext: f64,
    params: &PhysParams,
) -> Result<ShodeRhs> {
    let eps = params.epsilon;
    let zz = z.to_array();
    let c = params.radius * params.radius / 8.0;
    let hi = positive_height(1.0 + eps * z.delta, "h_i")?;
    let denom = tau_kappa_sq(eps * z.delta, params)? + params.kappa * mats.g_at_r;
    let a = added_mass_a(z.delta, z.zeta_bar, params)?;
    let x = f_hyd_bar - eps * frak_f_bar + f_ext - params.nu * z.delta_dot - z.delta
        + eps * a * z.delta_dot * z.delta_dot;
    let cd = c * z.delta / (hi * denom);
    let gamma = cd * x;
    let p = [
        0.0,
        f_ext + eps * (gamma + a * z.delta_dot * z.delta_dot),
        0.0,
        f_hyd_bar - eps * frak_f_bar,
    ];
    let mut rhs = [0.0; 4];
    for i in 0..4 {
        let mut tz = 0.0;
        for j in 0..4 {
            tz += mats.t[i][j] * zz[j];
        }
        rhs[i] = p[i] - tz;
    }
    let dz = solve4(&mats.m, rhs)?;
    Ok(ShodeRhs { dz, delta_ddot: dz[1] })
}

/// dZ/dt by direct elimination of the two scalar trace equations.
pub fn shode_rhs_scalar(
    g_at_r: f64,
    z: &TraceState,
    f_hyd_bar: f64,
    frak_f_bar: f64,
    f_ext: f64,
    params: &PhysParams,
) -> Result<ShodeRhs> {
    let eps = params.epsilon;
    let k = params.kappa;
    if !(k > 0.0) {
        return Err(Error::InvalidArgument("trace system needs kappa > 0".into()));
    }
    let denom = tau_kappa_sq(eps * z.delta, params)? + k * g_at_r;
    let a = added_mass_a(z.delta, z.zeta_bar, params)?;
    let d = (f_hyd_bar - eps * frak_f_bar + f_ext - params.nu * z.delta_dot - z.delta
        + eps * a * z.delta_dot * z.delta_dot)
        / denom;
    let zdd = (f_hyd_bar - k * g_at_r * d - z.zeta_bar - params.nu * z.zeta_bar_dot - eps * frak_f_bar) / (k * k);
    Ok(ShodeRhs { dz: [z.delta_dot, d, z.zeta_bar_dot, zdd], delta_ddot: d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_example() {
        let p = PhysParams { kappa: 0.1, ..PhysParams::default() };
        assert!((tau_kappa_sq(0.0, &p).unwrap() - 1.135).abs() < 1e-14);
    }

    #[test]
    fn solve_matches_scalar() {
        let p = PhysParams { epsilon: 0.2, kappa: 0.3, nu: 0.1, ..PhysParams::default() };
        let mats = shode_matrices(&p).unwrap();
        let z = TraceState::new(0.3, -0.2, 0.1, 0.4);
        let a = shode_rhs(&mats, &z, 0.05, 0.02, 0.3, &p).unwrap();
        let b = shode_rhs_scalar(mats.g_at_r, &z, 0.05, 0.02, 0.3, &p).unwrap();
        for i in 0..4 {
            assert!((a.dz[i] - b.dz[i]).abs() < 1e-12 * (1.0 + b.dz[i].abs()));
        }
    }
}
