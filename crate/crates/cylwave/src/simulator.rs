//! Time integration of the exterior wave problem coupled to the body.
//!
//! The unknown is V = (zeta, q, w = kappa d_r q, delta, delta_dot, zeta_bar,
//! zeta_bar_dot). With h = 1 + eps zeta, f = zeta - nu w/kappa + eps frak_f and
//! g = eps q^2/(r h) + eps nu (zeta'/h)(w/kappa):
//!
//! d_t zeta = -w/kappa
//! d_t q    = -(r1 f)' - r0 g - (R/2) D K
//! d_t w    = (f - f_hyd)/kappa + D G
//!
//! where f_hyd = r1 f + kappa^2 d_r r0 g and D is the algebraic body
//! acceleration. The trace block goes through the trace ODE system.

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlocal_ops::OperatorWorkspace;
use crate::params::PhysParams;
use crate::shode::{
    frak_f_bar, shode_matrices_with_g, shode_rhs, shode_rhs_scalar, tau_kappa_sq, FluxVariant,
    ShodeMatrices, TraceState,
};
use std::sync::Arc;

/// Integrator and model settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub h_min: f64,
    /// fraction of [R, r_max] covered by the absorbing layer
    pub sponge_fraction: f64,
    /// peak damping rate in the absorbing layer
    pub sponge_strength: f64,
    pub flux_variant: FluxVariant,
    /// threshold of the blow-up monitor
    pub blowup_ceiling: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            h_min: 0.05,
            sponge_fraction: 0.15,
            sponge_strength: 2.0,
            flux_variant: FluxVariant::HalfZetaSq,
            blowup_ceiling: 1e6,
        }
    }
}

/// Full state of the coupled system.
#[derive(Debug, Clone)]
pub struct AugmentedState {
    pub zeta: RadialField,
    pub q: RadialField,
    /// kappa d_r q
    pub w: RadialField,
    pub z: TraceState,
    pub t: f64,
}

/// Time derivative of the state plus the quantities computed on the way.
#[derive(Debug, Clone)]
pub struct StateRate {
    pub zeta: Vec<f64>,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    pub z: [f64; 4],
    pub delta_ddot: f64,
    pub f_hyd_bar: f64,
}

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// dt = cfl min(4 min dr, kappa) / max speed, capped by kappa/4
    Auto { cfl: f64 },
}

/// One recorded output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub zeta_bar: f64,
    pub zeta_bar_dot: f64,
    pub e_tot: f64,
    pub flux_jump: f64,
}

/// Snapshot of the surface and discharge.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub zeta: Vec<f64>,
    pub q: Vec<f64>,
}

/// Blow-up monitor report.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp {
    pub t: f64,
    pub monitor: f64,
    pub min_h: f64,
    pub reason: String,
}

/// Output of [`Simulator::integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: AugmentedState,
    pub dt: f64,
    pub steps: usize,
    /// set when the run stopped early
    pub blow_up: Option<BlowUp>,
    /// largest per-step invariant violations seen
    pub max_trace_mismatch: f64,
    pub max_mass_residual: f64,
}

/// Energy budget of a state.
#[derive(Debug, Clone)]
pub struct EnergyDiagnostics {
    pub e_fluid: f64,
    pub e_solid: f64,
    pub e_tot: f64,
    /// exterior minus interior energy flux at the contact line
    pub flux_jump: f64,
    /// (R^2/2) F delta_dot
    pub power_in: f64,
    /// (R^2/2) nu delta_dot^2 + nu int |d_r q|^2/h r dr
    pub dissipation: f64,
    /// pointwise residual of the local energy balance
    pub local_residual: Vec<f64>,
}

/// Compatibility and existence horizons of the initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checks {
    pub compatibility: bool,
    pub t_ode: f64,
    pub t_eps_kappa_r: f64,
}

/// Interior fields under the body.
#[derive(Debug, Clone)]
pub struct Interior {
    pub r: Vec<f64>,
    pub q_i: Vec<f64>,
    pub zeta_i: f64,
    /// P_i / eps
    pub p_i: Vec<f64>,
    /// true when eps = 0 and the linearized surface and pressure are reported
    pub linearized: bool,
}

/// Everything needed to advance the coupled system.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub params: PhysParams,
    pub grid: Arc<RadialGrid>,
    pub ws: OperatorWorkspace,
    pub mats: ShodeMatrices,
    pub config: SimConfig,
    sponge: Vec<f64>,
    sponge_slope: Vec<f64>,
    sponge_start: usize,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// T_ODE = kappa^2/eps / ((1 + nu/kappa)(1 + nu/kappa + 1/R)); +inf at eps = 0.
pub fn t_ode(params: &PhysParams) -> f64 {
    if params.epsilon == 0.0 {
        return f64::INFINITY;
    }
    let a = 1.0 + params.nu / params.kappa;
    params.kappa * params.kappa / params.epsilon / (a * (a + 1.0 / params.radius))
}

/// The horizon of the higher-regularity existence result (nu = 0 case).
pub fn t_eps_kappa_r(params: &PhysParams) -> f64 {
    if params.epsilon == 0.0 {
        return f64::INFINITY;
    }
    let r = params.radius;
    let r_plus = r + 1e-3;
    let alpha = (2.0 * r_plus).max(9.0);
    let lam = alpha.sqrt() + (1.0f64).max(1.0 / (r * r)) / params.kappa;
    let c = 4.0 / params.epsilon / (1.0 + 1.0 / r);
    0.5 * (-lam + (lam * lam + c).sqrt())
}

impl AugmentedState {
    /// Rest state on the grid.
    pub fn rest(grid: &Arc<RadialGrid>) -> Self {
        Self {
            zeta: RadialField::zeros(grid),
            q: RadialField::zeros(grid),
            w: RadialField::zeros(grid),
            z: TraceState::default(),
            t: 0.0,
        }
    }

    /// State with a given surface profile, zero discharge and the body at
    /// displacement delta0 and rest; the trace is set to zeta(R).
    pub fn from_surface(grid: &Arc<RadialGrid>, zeta: impl Fn(f64) -> f64, delta0: f64) -> Self {
        let zeta = RadialField::from_fn(grid, zeta);
        let zb = zeta.trace();
        Self {
            zeta,
            q: RadialField::zeros(grid),
            w: RadialField::zeros(grid),
            z: TraceState::new(delta0, 0.0, zb, 0.0),
            t: 0.0,
        }
    }

    /// State built from arbitrary zeta and q, with w = kappa d_r q by finite
    /// differences and traces chosen to satisfy the compatibility conditions.
    pub fn from_fields(zeta: RadialField, q: RadialField, kappa: f64, radius: f64) -> Self {
        let w_vals: Vec<f64> = q.d_r().values.iter().map(|v| kappa * v).collect();
        let w = RadialField { grid: q.grid.clone(), values: w_vals };
        let z = TraceState::new(0.0, -2.0 * q.trace() / radius, zeta.trace(), -w.trace() / kappa);
        Self { zeta, q, w, z, t: 0.0 }
    }

    fn combine(&self, a: f64, k: &StateRate) -> Self {
        let mut s = self.clone();
        axpy(&mut s.zeta.values, a, &k.zeta);
        axpy(&mut s.q.values, a, &k.q);
        axpy(&mut s.w.values, a, &k.w);
        let mut z = s.z.to_array();
        for i in 0..4 {
            z[i] += a * k.z[i];
        }
        s.z = TraceState::from_array(z);
        s.t += a;
        s
    }
}

impl Simulator {
    pub fn new(params: PhysParams, grid: Arc<RadialGrid>, config: SimConfig) -> Result<Self> {
        params.validate()?;
        if !(config.h_min > 0.0 && config.h_min < 1.0) {
            return Err(Error::InvalidArgument(format!("h_min = {} not in (0, 1)", config.h_min)));
        }
        if !(0.0..0.5).contains(&config.sponge_fraction) {
            return Err(Error::InvalidArgument(format!(
                "sponge fraction = {} not in [0, 0.5)",
                config.sponge_fraction
            )));
        }
        if (grid.radius - params.radius).abs() > 1e-12 * params.radius {
            return Err(Error::InvalidArgument(format!(
                "grid starts at {} but R = {}",
                grid.radius, params.radius
            )));
        }
        let ws = OperatorWorkspace::new(grid.clone(), params.kappa)?;
        let mats = shode_matrices_with_g(&params, ws.g_at_r)?;
        let len = grid.r_max - grid.radius;
        let rs = grid.r_max - config.sponge_fraction * len;
        let width = (grid.r_max - rs).max(f64::MIN_POSITIVE);
        let mut sponge = Vec::with_capacity(grid.len());
        let mut sponge_slope = Vec::with_capacity(grid.len());
        for &r in &grid.nodes {
            if config.sponge_fraction > 0.0 && r > rs {
                let x = (r - rs) / width;
                sponge.push(config.sponge_strength * x * x);
                sponge_slope.push(2.0 * config.sponge_strength * x / width);
            } else {
                sponge.push(0.0);
                sponge_slope.push(0.0);
            }
        }
        let sponge_start = grid.nodes.iter().position(|&r| r > rs).unwrap_or(grid.len());
        Ok(Self { params, grid, ws, mats, config, sponge, sponge_slope, sponge_start })
    }

    /// Index of the first node inside the absorbing layer.
    pub fn sponge_start(&self) -> usize {
        self.sponge_start
    }

    fn heights(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        let eps = self.params.epsilon;
        let h: Vec<f64> = zeta.iter().map(|z| 1.0 + eps * z).collect();
        let (j, min_h) = h
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(jm, m), (j, &v)| if v < m || v.is_nan() { (j, v) } else { (jm, m) });
        if !(min_h > self.config.h_min) {
            return Err(Error::WaterColumnCollapse { min_h, r: self.grid.nodes[j] });
        }
        Ok(h)
    }

    fn local_flux(&self, zeta: &[f64], q: &[f64], h: &[f64]) -> Vec<f64> {
        zeta.iter()
            .zip(q.iter().zip(h))
            .map(|(z, (qq, hh))| match self.config.flux_variant {
                FluxVariant::HalfZetaSq => 0.5 * z * z + qq * qq / hh,
                FluxVariant::ZetaSqOverH => (z * z + qq * qq) / hh,
            })
            .collect()
    }

    /// The sources f and g of the momentum equation.
    fn sources(&self, s: &AugmentedState, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = &self.params;
        let (eps, nu, k) = (p.epsilon, p.nu, p.kappa);
        let zeta = &s.zeta.values;
        let q = &s.q.values;
        let w = &s.w.values;
        let n = zeta.len();
        let ff = self.local_flux(zeta, q, h);
        let f: Vec<f64> = (0..n).map(|j| zeta[j] - nu * w[j] / k + eps * ff[j]).collect();
        let mut g = vec![0.0; n];
        if eps != 0.0 {
            let dz = if nu != 0.0 { self.grid.partial_r(zeta) } else { vec![0.0; n] };
            for j in 0..n {
                let r = self.grid.nodes[j];
                g[j] = eps * q[j] * q[j] / (r * h[j]) + eps * nu * dz[j] / h[j] * w[j] / k;
            }
        }
        (f, g)
    }

    /// f_hyd and its trace.
    pub fn compute_f_hyd(&self, s: &AugmentedState) -> Result<(RadialField, f64)> {
        let h = self.heights(&s.zeta.values)?;
        let (f, g) = self.sources(s, &h);
        let r1f = self.ws.r1(&f);
        let (_, dr0g) = self.ws.r0_with_dr(&g);
        let k2 = self.params.kappa * self.params.kappa;
        let fh: Vec<f64> = r1f.iter().zip(&dr0g).map(|(a, b)| a + k2 * b).collect();
        let bar = fh[0];
        Ok((RadialField { grid: self.grid.clone(), values: fh }, bar))
    }

    /// Right-hand side of the coupled system at time t (the state time is ignored).
    pub fn rhs(&self, s: &AugmentedState, t: f64) -> Result<StateRate> {
        let p = &self.params;
        let k = p.kappa;
        let h = self.heights(&s.zeta.values)?;
        let (f, g) = self.sources(s, &h);
        let (r1f, dr1f) = self.ws.r1_with_dr(&f);
        let (r0g, dr0g) = self.ws.r0_with_dr(&g);
        let n = f.len();
        let k2 = k * k;
        let f_hyd_bar = r1f[0] + k2 * dr0g[0];
        let ffb = frak_f_bar(&s.z, p, self.config.flux_variant)?;
        let fext = p.forcing.at(t);
        let sh = shode_rhs(&self.mats, &s.z, f_hyd_bar, ffb, fext, p)?;
        let d = sh.delta_ddot;
        let half_r = 0.5 * p.radius;
        let kk = &self.ws.kernel_k;
        let gg = &self.ws.kernel_g;
        let mut dzeta = vec![0.0; n];
        let mut dq = vec![0.0; n];
        let mut dw = vec![0.0; n];
        for j in 0..n {
            let fh = r1f[j] + k2 * dr0g[j];
            dzeta[j] = -s.w.values[j] / k;
            dq[j] = -dr1f[j] - r0g[j] - half_r * d * kk[j];
            dw[j] = (f[j] - fh) / k + d * gg[j];
        }
        for j in self.sponge_start..n {
            let sg = self.sponge[j];
            dzeta[j] -= sg * s.zeta.values[j];
            dq[j] -= sg * s.q.values[j];
            dw[j] -= sg * s.w.values[j] + k * self.sponge_slope[j] * s.q.values[j];
        }
        Ok(StateRate { zeta: dzeta, q: dq, w: dw, z: sh.dz, delta_ddot: d, f_hyd_bar })
    }

    /// Second assembly of the wave part in flux form:
    /// d_t(zeta, q) = -d/dr (q, r1 f) + D (0, -(R/2) K) - (q/r, eps r0[q^2/(r h)])
    ///                - (0, nu r0[(ln h)' d_r q]).
    /// The radial derivative of q is taken by finite differences and the
    /// acceleration by scalar elimination, so no code is shared with [`Simulator::rhs`]
    /// beyond the operators themselves. Sponge damping is not included.
    pub fn rhs_flux_form(&self, s: &AugmentedState, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = &self.params;
        let (eps, nu, k) = (p.epsilon, p.nu, p.kappa);
        let zeta = &s.zeta.values;
        let q = &s.q.values;
        let n = zeta.len();
        let h = self.heights(zeta)?;
        let dq = self.grid.partial_r(q);
        let drq: Vec<f64> = s.w.values.iter().map(|w| w / k).collect();
        let frak: Vec<f64> = (0..n)
            .map(|j| match self.config.flux_variant {
                FluxVariant::HalfZetaSq => 0.5 * zeta[j] * zeta[j] + q[j] * q[j] / h[j],
                FluxVariant::ZetaSqOverH => (zeta[j] * zeta[j] + q[j] * q[j]) / h[j],
            })
            .collect();
        let f: Vec<f64> = (0..n).map(|j| zeta[j] - nu * drq[j] + eps * frak[j]).collect();
        let (r1f, dr1f) = self.ws.r1_with_dr(&f);
        let s_r: Vec<f64> = (0..n).map(|j| eps * q[j] * q[j] / (self.grid.nodes[j] * h[j])).collect();
        let (r0_sr, dr0_sr) = self.ws.r0_with_dr(&s_r);
        let mut s_nu = vec![0.0; n];
        if eps * nu != 0.0 {
            let dz = self.grid.partial_r(zeta);
            for j in 0..n {
                s_nu[j] = eps * dz[j] / h[j] * drq[j];
            }
        }
        let (r0_nu, dr0_nu) = self.ws.r0_with_dr(&s_nu);
        let f_hyd_bar = r1f[0] + k * k * (dr0_sr[0] + nu * dr0_nu[0]);
        let ffb = frak_f_bar(&s.z, p, self.config.flux_variant)?;
        let sh = shode_rhs_scalar(self.ws.g_at_r, &s.z, f_hyd_bar, ffb, p.forcing.at(t), p)?;
        let d = sh.delta_ddot;
        let mut dzeta = vec![0.0; n];
        let mut dqt = vec![0.0; n];
        for j in 0..n {
            let r = self.grid.nodes[j];
            dzeta[j] = -dq[j] - q[j] / r;
            dqt[j] = -dr1f[j] - 0.5 * p.radius * d * self.ws.kernel_k[j] - r0_sr[j] - nu * r0_nu[j];
        }
        Ok((dzeta, dqt))
    }

    /// One classical RK4 step.
    pub fn step(&self, s: &AugmentedState, dt: f64) -> Result<AugmentedState> {
        let t = s.t;
        let k1 = self.rhs(s, t)?;
        let s2 = s.combine(0.5 * dt, &k1);
        let k2 = self.rhs(&s2, t + 0.5 * dt)?;
        let s3 = s.combine(0.5 * dt, &k2);
        let k3 = self.rhs(&s3, t + 0.5 * dt)?;
        let s4 = s.combine(dt, &k3);
        let k4 = self.rhs(&s4, t + dt)?;
        let mut out = s.clone();
        let c = dt / 6.0;
        for (y, (a, (b, (cc, dd)))) in out
            .zeta
            .values
            .iter_mut()
            .zip(k1.zeta.iter().zip(k2.zeta.iter().zip(k3.zeta.iter().zip(&k4.zeta))))
        {
            *y += c * (a + 2.0 * b + 2.0 * cc + dd);
        }
        for (y, (a, (b, (cc, dd)))) in
            out.q.values.iter_mut().zip(k1.q.iter().zip(k2.q.iter().zip(k3.q.iter().zip(&k4.q))))
        {
            *y += c * (a + 2.0 * b + 2.0 * cc + dd);
        }
        for (y, (a, (b, (cc, dd)))) in
            out.w.values.iter_mut().zip(k1.w.iter().zip(k2.w.iter().zip(k3.w.iter().zip(&k4.w))))
        {
            *y += c * (a + 2.0 * b + 2.0 * cc + dd);
        }
        let mut z = s.z.to_array();
        for i in 0..4 {
            z[i] += c * (k1.z[i] + 2.0 * k2.z[i] + 2.0 * k3.z[i] + k4.z[i]);
        }
        out.z = TraceState::from_array(z);
        out.t = t + dt;
        Ok(out)
    }

    /// Time step for a policy and the current state.
    pub fn choose_dt(&self, s: &AugmentedState, policy: DtPolicy) -> Result<f64> {
        let k = self.params.kappa;
        match policy {
            DtPolicy::Fixed(dt) => {
                if dt > 0.0 && dt.is_finite() {
                    Ok(dt)
                } else {
                    Err(Error::InvalidArgument(format!("dt = {dt} must be positive")))
                }
            }
            DtPolicy::Auto { cfl } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(Error::InvalidArgument(format!("cfl = {cfl} not in (0, 1]")));
                }
                let h = self.heights(&s.zeta.values)?;
                let umax = s.q.values.iter().zip(&h).fold(0.0f64, |m, (q, h)| m.max((q / h).abs()));
                let speed = 1.0 + self.params.epsilon * umax;
                let dx = (4.0 * self.grid.min_spacing()).min(k);
                Ok((cfl * dx / speed).min(0.25 * k))
            }
        }
    }

    /// Blow-up monitor: |1/h| + |zeta| + |q| + |delta_dot| + 1/h_i + |F| in sup norms.
    pub fn blow_up_check(&self, s: &AugmentedState) -> Option<BlowUp> {
        let p = &self.params;
        let eps = p.epsilon;
        let min_h = s.zeta.values.iter().map(|z| 1.0 + eps * z).fold(f64::INFINITY, f64::min);
        let hi = 1.0 + eps * s.z.delta;
        let monitor = 1.0 / min_h
            + max_abs(&s.zeta.values)
            + max_abs(&s.q.values)
            + s.z.delta_dot.abs()
            + 1.0 / hi
            + p.forcing.at(s.t).abs();
        let all_finite = s.zeta.values.iter().chain(&s.q.values).chain(&s.w.values).all(|v| v.is_finite())
            && s.z.to_array().iter().all(|v| v.is_finite());
        let reason = if !all_finite || !monitor.is_finite() {
            Some("non-finite state".to_string())
        } else if !(min_h > self.config.h_min) {
            Some(format!("water column {min_h:.3e} below h_min {}", self.config.h_min))
        } else if !(hi > 0.0) {
            Some("body reached the bottom".to_string())
        } else if monitor > self.config.blowup_ceiling {
            Some(format!("monitor {monitor:.3e} above ceiling {:.3e}", self.config.blowup_ceiling))
        } else {
            None
        };
        reason.map(|reason| BlowUp { t: s.t, monitor, min_h, reason })
    }

    /// |q(R) + (R/2) delta_dot|.
    pub fn trace_mismatch(&self, s: &AugmentedState) -> f64 {
        (s.q.trace() + 0.5 * self.params.radius * s.z.delta_dot).abs()
    }

    /// Largest |d_t zeta + w/kappa| outside the absorbing layer for a rate.
    pub fn mass_residual(&self, s: &AugmentedState, rate: &StateRate) -> f64 {
        let k = self.params.kappa;
        (0..self.sponge_start)
            .map(|j| (rate.zeta[j] + s.w.values[j] / k).abs())
            .fold(0.0, f64::max)
    }

    /// ||w - kappa d_r q|| (L2_r, finite-difference d_r).
    pub fn w_consistency(&self, s: &AugmentedState) -> f64 {
        let drq = self.grid.d_r(&s.q.values);
        let diff: Vec<f64> =
            s.w.values.iter().zip(&drq).map(|(w, d)| w - self.params.kappa * d).collect();
        self.grid.norm_sq(&diff).sqrt()
    }

    /// Integrates to time `t_end`, recording a row every `output_every` steps
    /// and a field snapshot every `snapshot_every` steps (0 disables).
    pub fn integrate(
        &self,
        state: AugmentedState,
        t_end: f64,
        policy: DtPolicy,
        output_every: usize,
        snapshot_every: usize,
    ) -> Result<Trajectory> {
        let mut s = state;
        s.z.check(&self.params)?;
        let dt0 = self.choose_dt(&s, policy)?;
        let span = t_end - s.t;
        if !(span >= 0.0) {
            return Err(Error::InvalidArgument(format!("end time {t_end} before start {}", s.t)));
        }
        let steps = (span / dt0).ceil() as usize;
        let dt = if steps > 0 { span / steps as f64 } else { dt0 };
        let every = output_every.max(1);
        let mut rows = Vec::new();
        let mut snaps = Vec::new();
        let record = |s: &AugmentedState, rows: &mut Vec<TrajectoryRow>| -> Result<()> {
            let e = self.energy_diagnostics(s)?;
            rows.push(TrajectoryRow {
                t: s.t,
                delta: s.z.delta,
                delta_dot: s.z.delta_dot,
                zeta_bar: s.z.zeta_bar,
                zeta_bar_dot: s.z.zeta_bar_dot,
                e_tot: e.e_tot,
                flux_jump: e.flux_jump,
            });
            Ok(())
        };
        let mut blow_up = self.blow_up_check(&s);
        if blow_up.is_none() {
            record(&s, &mut rows)?;
        }
        if snapshot_every > 0 {
            snaps.push(Snapshot { t: s.t, zeta: s.zeta.values.clone(), q: s.q.values.clone() });
        }
        let mut max_trace: f64 = self.trace_mismatch(&s);
        let mut max_mass: f64 = 0.0;
        let t0 = s.t;
        let mut done = 0;
        while blow_up.is_none() && done < steps {
            let next = match self.step(&s, dt) {
                Ok(n) => n,
                Err(Error::WaterColumnCollapse { min_h, .. }) => {
                    blow_up = Some(BlowUp {
                        t: s.t,
                        monitor: f64::INFINITY,
                        min_h,
                        reason: format!("water column {min_h:.3e} below h_min {}", self.config.h_min),
                    });
                    break;
                }
                Err(e) => return Err(e),
            };
            s = next;
            done += 1;
            s.t = t0 + done as f64 * dt;
            blow_up = self.blow_up_check(&s);
            if blow_up.is_some() {
                break;
            }
            max_trace = max_trace.max(self.trace_mismatch(&s));
            if done % every == 0 || done == steps {
                let rate = self.rhs(&s, s.t)?;
                max_mass = max_mass.max(self.mass_residual(&s, &rate));
                record(&s, &mut rows)?;
            }
            if snapshot_every > 0 && (done % snapshot_every == 0 || done == steps) {
                snaps.push(Snapshot { t: s.t, zeta: s.zeta.values.clone(), q: s.q.values.clone() });
            }
        }
        Ok(Trajectory {
            rows,
            snapshots: snaps,
            final_state: s,
            dt,
            steps: done,
            blow_up,
            max_trace_mismatch: max_trace,
            max_mass_residual: max_mass,
        })
    }

    /// Energy of the fluid and the body, flux jump at the contact line and the
    /// local energy-balance residual.
    pub fn energy_diagnostics(&self, s: &AugmentedState) -> Result<EnergyDiagnostics> {
        let p = &self.params;
        let (eps, nu, k) = (p.epsilon, p.nu, p.kappa);
        let zeta = &s.zeta.values;
        let q = &s.q.values;
        let w = &s.w.values;
        let n = zeta.len();
        let h = self.heights(zeta)?;
        let dens: Vec<f64> = (0..n).map(|j| 0.5 * (zeta[j] * zeta[j] + (q[j] * q[j] + w[j] * w[j]) / h[j])).collect();
        let e_fluid = self.grid.integrate(&dens);
        let hi = 1.0 + eps * s.z.delta;
        let r2 = p.radius * p.radius;
        let e_solid = solid_energy(s.z.delta, s.z.delta_dot, p)?;
        let rate = self.rhs(s, s.t)?;
        let fext = p.forcing.at(s.t);
        let zb = s.z.zeta_bar;
        let zbd = s.z.zeta_bar_dot;
        let zbdd = rate.z[3];
        let d = rate.delta_ddot;
        let he = 1.0 + eps * zb;
        let q_e = q[0];
        let q_i = -0.5 * p.radius * s.z.delta_dot;
        // exterior flux uses the free-surface pressure; the interior flux uses
        // the contact-line pressure that balances the energy
        let flux_e = q_e * (k * k * zbdd + nu * zbd + zb + 0.5 * eps * q_e * q_e / (he * he));
        let p_bar = self.contact_pressure(s, d, zbdd);
        let zi = s.z.delta;
        let flux_i = q_i * (k * k * d + nu * s.z.delta_dot + zi + 0.5 * eps * q_i * q_i / (hi * hi) + p_bar);
        let flux_jump = flux_e - flux_i;
        let power_in = 0.5 * r2 * fext * s.z.delta_dot;
        let drq: Vec<f64> = w.iter().map(|v| v / k).collect();
        let visc: Vec<f64> = (0..n).map(|j| drq[j] * drq[j] / h[j]).collect();
        let dissipation = 0.5 * r2 * nu * s.z.delta_dot * s.z.delta_dot + nu * self.grid.integrate(&visc);

        let zt = &rate.zeta;
        let ztt: Vec<f64> = rate.w.iter().map(|v| -v / k).collect();
        let mut et = vec![0.0; n];
        let mut flux = vec![0.0; n];
        let mut rnu = vec![0.0; n];
        for j in 0..n {
            let hh = h[j];
            et[j] = zeta[j] * zt[j] + q[j] * rate.q[j] / hh + w[j] * rate.w[j] / hh
                - eps * zt[j] * (q[j] * q[j] + w[j] * w[j]) / (2.0 * hh * hh);
            flux[j] = q[j] * (k * k * ztt[j] + nu * zt[j] + zeta[j] + 0.5 * eps * q[j] * q[j] / (hh * hh));
            rnu[j] = q[j] * zt[j] * zeta[j] / hh;
        }
        let dflux = self.grid.d_r(&flux);
        let drnu = self.grid.d_r(&rnu);
        let dz = self.grid.partial_r(zeta);
        let local_residual = (0..n)
            .map(|j| {
                let hh = h[j];
                let rk = zeta[j] * ztt[j] / hh - drq[j].powi(3) / (2.0 * hh * hh) - q[j] * ztt[j] * dz[j] / hh;
                et[j] + dflux[j] + nu * drq[j] * drq[j] / hh - eps * (k * k * rk - nu * drnu[j])
            })
            .collect();
        Ok(EnergyDiagnostics {
            e_fluid,
            e_solid,
            e_tot: e_fluid + e_solid,
            flux_jump,
            power_in,
            dissipation,
            local_residual,
        })
    }

    /// P_i(R)/eps chosen so that the energy flux is continuous at r = R.
    fn contact_pressure(&self, s: &AugmentedState, delta_ddot: f64, zeta_bar_ddot: f64) -> f64 {
        let p = &self.params;
        let (eps, nu, k) = (p.epsilon, p.nu, p.kappa);
        let hi = 1.0 + eps * s.z.delta;
        let he = 1.0 + eps * s.z.zeta_bar;
        let qb = -0.5 * p.radius * s.z.delta_dot;
        s.z.zeta_bar - s.z.delta
            + nu * (s.z.zeta_bar_dot - s.z.delta_dot)
            + k * k * (zeta_bar_ddot - delta_ddot)
            + 0.5 * eps * (qb * qb) * (1.0 / (he * he) - 1.0 / (hi * hi))
    }

    /// Compatibility of the initial data and the two existence horizons.
    pub fn checks(&self, s: &AugmentedState) -> Checks {
        let p = &self.params;
        let scale = 1.0 + max_abs(&s.zeta.values) + max_abs(&s.q.values) + max_abs(&s.w.values) / p.kappa;
        let tol = 1e-10 * scale;
        let compatibility = (s.zeta.trace() - s.z.zeta_bar).abs() <= tol
            && (s.w.trace() / p.kappa + s.z.zeta_bar_dot).abs() <= tol
            && self.trace_mismatch(s) <= tol;
        Checks { compatibility, t_ode: t_ode(p), t_eps_kappa_r: t_eps_kappa_r(p) }
    }

    /// Interior discharge, surface and pressure under the body on `nr` points of [0, R].
    pub fn reconstruct_interior(&self, s: &AugmentedState, nr: usize) -> Result<Interior> {
        let rate = self.rhs(s, s.t)?;
        reconstruct_interior(&s.z, rate.delta_ddot, rate.z[3], &self.params, nr)
    }
}

/// Interior fields from the trace state and the two accelerations.
///
/// q_i = -(r/2) delta_dot; the surface under the body is delta + (h_i_eq - 1)/eps
/// (delta + h_i_eq - 1 at eps = 0); the pressure follows the radial momentum
/// balance with the contact value that makes the energy flux continuous.
pub fn reconstruct_interior(
    z: &TraceState,
    delta_ddot: f64,
    zeta_bar_ddot: f64,
    params: &PhysParams,
    nr: usize,
) -> Result<Interior> {
    let p = params;
    let (eps, nu, k) = (p.epsilon, p.nu, p.kappa);
    z.check(p)?;
    let nr = nr.max(2);
    let hi = 1.0 + eps * z.delta;
    let he = 1.0 + eps * z.zeta_bar;
    if !(hi > 0.0 && he > 0.0) {
        return Err(Error::Domain(format!("non-positive water column: h_i = {hi}, h_e = {he}")));
    }
    let linearized = eps == 0.0;
    let zeta_i = if linearized { z.delta + p.h_i_eq - 1.0 } else { z.delta + (p.h_i_eq - 1.0) / eps };
    let r2 = p.radius * p.radius;
    let p_r = z.zeta_bar - z.delta
        + nu * (z.zeta_bar_dot - z.delta_dot)
        + k * k * (zeta_bar_ddot - delta_ddot)
        + eps * r2 * z.delta_dot * z.delta_dot / 8.0 * (1.0 / (he * he) - 1.0 / (hi * hi));
    let coef = 0.5 * delta_ddot - 0.75 * eps * z.delta_dot * z.delta_dot / hi;
    let r: Vec<f64> = (0..nr).map(|i| p.radius * i as f64 / (nr - 1) as f64).collect();
    let q_i = r.iter().map(|x| -0.5 * x * z.delta_dot).collect();
    let p_i = r.iter().map(|x| (x * x - r2) / (2.0 * hi) * coef + p_r).collect();
    Ok(Interior { r, q_i, zeta_i, p_i, linearized })
}

/// Energy of the body at given displacement and velocity.
pub fn solid_energy(delta: f64, delta_dot: f64, params: &PhysParams) -> Result<f64> {
    let hi = 1.0 + params.epsilon * delta;
    let tau = tau_kappa_sq(params.epsilon * delta, params)?;
    let k = params.kappa;
    // the kappa^2 part of the added mass scales with 1/h_i in the energy
    let inertia = tau - k * k + k * k / hi;
    Ok(0.25 * params.radius * params.radius * (inertia * delta_dot * delta_dot + delta * delta))
}
