//! The six commands.

use crate::config::{Cmd, ConfigError, RunConfig};
use crate::output::{gnuplot, Artifacts};
use cylwave::decay::{
    branch_cuts, envelope_exponent, one_d_damped_cosine, one_d_exact, one_d_mode, scan_p_min, weighted_tail, Cut,
    DecayModel, Geometry, InversionOptions, Region, ASSUMPTION_LABEL,
};
use cylwave::grid::make_grid;
use cylwave::nonlocal_ops::{bounded_kernel_triplet, OperatorWorkspace};
use cylwave::simulator::{t_eps_kappa_r, t_ode, AugmentedState, Simulator};
use cylwave::specfun::{i01_scaled_real, k01_scaled_real};
use cylwave::{fmt17, Error, PhysParams};
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(String),
    BlowUp(String),
    SigmaCheck(String),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::BlowUp(_) => 4,
            Failure::SigmaCheck(_) => 5,
            Failure::Io(_) => 1,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config-error",
            Failure::Numerical(_) => "numerical-error",
            Failure::BlowUp(_) => "blow-up",
            Failure::SigmaCheck(_) => "sigma-check-failed",
            Failure::Io(_) => "io-error",
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
            Failure::BlowUp(m) => write!(f, "blow-up detected: {m}"),
            Failure::SigmaCheck(m) => write!(f, "inversion sigma check failed: {m}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) | Error::Resolution(m) => Failure::Config(ConfigError(vec![m])),
            Error::WaterColumnCollapse { .. } => Failure::BlowUp(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Key/value results collected for run.meta.
#[derive(Default)]
pub struct Facts(pub Vec<(String, String)>);

impl Facts {
    fn add(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }
}

fn horizon(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else if x.is_nan() {
        "undefined".into()
    } else {
        fmt17(x)
    }
}

/// Existence horizons; they need kappa > 0.
pub fn horizons(p: &PhysParams) -> (String, String) {
    if p.kappa > 0.0 {
        (horizon(t_ode(p)), horizon(t_eps_kappa_r(p)))
    } else {
        ("undefined".into(), "undefined".into())
    }
}

fn csv_row(values: &[f64]) -> String {
    let mut s = values.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

pub fn run(cfg: &RunConfig, out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let (a, b) = horizons(&cfg.params);
    facts.add("T_ode", a);
    facts.add("T_eps_kappa_R", b);
    facts.add("regime_warning", cfg.params.regime_warning());
    match cfg.command {
        Cmd::Simulate => simulate(cfg, out, facts),
        Cmd::Decay => decay(cfg, out, facts),
        Cmd::ScanDenominator => scan(cfg, out, facts),
        Cmd::BranchCuts => branches(cfg, out, facts),
        Cmd::SpecfunCheck => specfun_check(out, facts),
        Cmd::OperatorsCheck => operators_check(cfg, out, facts),
    }
}

fn simulate(cfg: &RunConfig, out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let p = &cfg.params;
    let g = Arc::new(make_grid(p.radius, cfg.grid.r_max, cfg.grid.n, cfg.grid.boundary_layer_width)?);
    let sim = Simulator::new(p.clone(), g.clone(), cfg.sim.clone())?;
    let init = &cfg.init;
    let bump = |r: f64| init.bump_amplitude * (-((r - init.bump_center) / init.bump_width).powi(2)).exp();
    let s0 = AugmentedState::from_surface(&g, bump, init.delta0);
    let checks = sim.checks(&s0);
    facts.add("compatibility", checks.compatibility);

    let tr = sim.integrate(s0, cfg.time.t_end, cfg.time.dt, cfg.time.output_every, cfg.time.snapshot_every)?;
    let mut csv = String::from("t,delta,delta_dot,zeta_bar,zeta_bar_dot,E_tot,flux_jump\n");
    for r in &tr.rows {
        csv.push_str(&csv_row(&[r.t, r.delta, r.delta_dot, r.zeta_bar, r.zeta_bar_dot, r.e_tot, r.flux_jump]));
    }
    out.write("trajectory.csv", &csv)?;
    if !tr.snapshots.is_empty() {
        let mut index = String::from("index,t\n");
        for (k, snap) in tr.snapshots.iter().enumerate() {
            let mut s = String::from("r,zeta,q\n");
            for j in 0..g.len() {
                s.push_str(&csv_row(&[g.nodes[j], snap.zeta[j], snap.q[j]]));
            }
            out.write(&format!("snapshot_{k:05}.csv"), &s)?;
            index.push_str(&format!("{k},{}\n", fmt17(snap.t)));
        }
        out.write("snapshot_index.csv", &index)?;
    }
    out.write(
        "trajectory.gp",
        &gnuplot(
            "trajectory.png",
            "t",
            "",
            "set multiplot layout 2,1\n\
             plot 'trajectory.csv' using 1:2 with lines, '' using 1:4 with lines\n\
             plot 'trajectory.csv' using 1:6 with lines\n\
             unset multiplot",
        ),
    )?;
    facts.add("dt", fmt17(tr.dt));
    facts.add("steps", tr.steps);
    facts.add("max_trace_mismatch", fmt17(tr.max_trace_mismatch));
    facts.add("max_mass_residual", fmt17(tr.max_mass_residual));
    facts.add("w_consistency_final", fmt17(sim.w_consistency(&tr.final_state)));
    if let Some(last) = tr.rows.last() {
        facts.add("t_final", fmt17(last.t));
        facts.add("E_tot_final", fmt17(last.e_tot));
    }
    if let Some(b) = tr.blow_up {
        facts.add("blow_up_t", fmt17(b.t));
        facts.add("blow_up_monitor", fmt17(b.monitor));
        facts.add("blow_up_min_h", fmt17(b.min_h));
        return Err(Failure::BlowUp(format!("t = {}: {}", b.t, b.reason)));
    }
    Ok(())
}

fn decay_model(cfg: &RunConfig) -> Result<DecayModel, Failure> {
    Ok(if cfg.decay.one_d { one_d_mode(&cfg.params)? } else { DecayModel::new(cfg.params.clone())? })
}

fn decay(cfg: &RunConfig, out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let d = &cfg.decay;
    let model = decay_model(cfg)?;
    let geometry = if model.geometry == Geometry::OneD { "one-d" } else { "radial" };
    facts.add("geometry", geometry);
    facts.add("branch_case", model.branch_cuts().case.tag());
    facts.add("tau_kappa_sq_0", fmt17(model.tau0()));

    let steps = (d.t_max / d.dt_out).round() as usize;
    let t: Vec<f64> = (0..=steps).map(|k| k as f64 * d.dt_out).collect();
    let mut opts = InversionOptions::for_horizon(d.t_max);
    if let Some(s) = d.sigma {
        opts.sigma = s;
    }
    opts.n = d.n_fft;
    let r = model.response(cfg.init.delta0, &t, &opts)?;
    out.write("response.csv", &r.to_csv())?;
    facts.add("sigma", fmt17(r.sigma));
    facts.add("fft_period", fmt17(r.period));
    facts.add("sigma_discrepancy", fmt17(r.sigma_discrepancy));
    facts.add("converged", r.converged);

    let mut tails = String::from("beta,tail\n");
    for &b in &d.betas {
        tails.push_str(&csv_row(&[b, weighted_tail(&r.delta, &t, |x| x.powf(b), d.t_max)]));
    }
    out.write("tails.csv", &tails)?;
    match envelope_exponent(&r.delta, &t) {
        Ok(e) => facts.add("envelope_exponent", e),
        Err(e) => facts.add("envelope_exponent", format!("unavailable ({e})")),
    }
    facts.add("short_horizon", d.t_max < 200.0);

    if model.geometry == Geometry::OneD {
        let eta0 = model.eta0();
        facts.add("eta0", fmt17(eta0));
        let w = |x: f64| (eta0 * x).exp();
        facts.add("exp_weighted_tail_half", fmt17(weighted_tail(&r.delta, &t, w, 0.5 * d.t_max)));
        facts.add("exp_weighted_tail", fmt17(weighted_tail(&r.delta, &t, w, d.t_max)));
        if cfg.params.kappa == 0.0 && cfg.params.nu == 0.0 {
            let mut s = String::from("t,delta,delta_damped_cosine,delta_exact\n");
            let d0 = cfg.init.delta0;
            for (k, &x) in t.iter().enumerate() {
                s.push_str(&csv_row(&[x, r.delta[k], one_d_damped_cosine(&cfg.params, d0, x)?, one_d_exact(&cfg.params, d0, x)?]));
            }
            out.write("closed_form.csv", &s)?;
        }
    }

    let omegas: Vec<f64> = (0..d.n_omega).map(|k| d.omega_max * k as f64 / (d.n_omega - 1) as f64).collect();
    let samples: Vec<_> = omegas.par_iter().map(|&w| model.transfer(Complex64::new(0.0, w)).ok()).collect();
    let mut axis = String::from("omega,ReH,ImH,absP\n");
    let mut skipped = 0;
    for (w, s) in omegas.iter().zip(&samples) {
        match s {
            Some(s) => axis.push_str(&csv_row(&[*w, s.h.re, s.h.im, s.p_val.norm()])),
            None => skipped += 1,
        }
    }
    out.write("axis.csv", &axis)?;
    facts.add("axis_points_on_branch_points", skipped);

    out.write(
        "decay.gp",
        &gnuplot(
            "decay.png",
            "t",
            "",
            "set multiplot layout 2,1\n\
             plot 'response.csv' using 1:2 with lines, '' using 1:3 with lines\n\
             set xlabel 'omega'\n\
             set logscale y\n\
             plot 'axis.csv' using 1:4 with lines\n\
             unset multiplot",
        ),
    )?;
    if !r.converged {
        return Err(Failure::SigmaCheck(format!(
            "results at sigma and sigma/2 differ by {:.3e} (relative)",
            r.sigma_discrepancy
        )));
    }
    Ok(())
}

fn scan(cfg: &RunConfig, out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let model = decay_model(cfg)?;
    let sc = &cfg.scan;
    let res = scan_p_min(&model, Region { re: sc.re, im: sc.im }, sc.nx, sc.ny)?;
    out.write("scan.csv", &res.to_csv())?;
    out.write("crossings.csv", &res.crossings_csv())?;
    out.write(
        "scan.gp",
        &gnuplot(
            "scan.png",
            "Re s",
            "Im s",
            &format!(
                "set view map\n\
                 set pm3d map\n\
                 set dgrid3d {ny},{nx}\n\
                 set title '|P(s)|'\n\
                 splot 'scan.csv' using 1:2:5 with pm3d notitle, \\\n  \
                 'crossings.csv' using 2:3:(0) with points pt 7 ps 0.3 notitle",
                nx = sc.nx,
                ny = sc.ny
            ),
        ),
    )?;
    facts.add("label", ASSUMPTION_LABEL);
    facts.add("min_abs_P", fmt17(res.min_abs));
    facts.add("argmin_re", fmt17(res.argmin.re));
    facts.add("argmin_im", fmt17(res.argmin.im));
    facts.add("re_crossings", res.re_crossings.len());
    facts.add("im_crossings", res.im_crossings.len());
    facts.add("candidate_zeros", res.candidate_zeros.len());
    println!(
        "{ASSUMPTION_LABEL}: min |P| = {} at s = ({}, {}) over {} x {} points; {} candidate zero cells",
        fmt17(res.min_abs),
        fmt17(res.argmin.re),
        fmt17(res.argmin.im),
        sc.nx,
        sc.ny,
        res.candidate_zeros.len()
    );
    Ok(())
}

fn branches(cfg: &RunConfig, out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let geo = if cfg.decay.one_d { decay_model(cfg)?.branch_cuts() } else { branch_cuts(&cfg.params) };
    let mut pts = String::from("re,im,residual\n");
    for b in &geo.branch_points {
        pts.push_str(&csv_row(&[b.re, b.im, geo.residual(*b)]));
    }
    out.write("branch_points.csv", &pts)?;
    let mut cuts = String::from("kind,x0,y0,x1,y1\n");
    for c in &geo.cuts {
        match c {
            Cut::Segment { from, to } => cuts.push_str(&format!("0,{}", csv_row(&[from.re, from.im, to.re, to.im]))),
            Cut::Ray { from, direction } => {
                cuts.push_str(&format!("1,{}", csv_row(&[from.re, from.im, direction.re, direction.im])))
            }
        }
    }
    out.write("cuts.csv", &cuts)?;
    out.write(
        "branch_cuts.gp",
        &gnuplot(
            "branch_cuts.png",
            "Re s",
            "Im s",
            "# cuts.csv: kind 0 is a segment (x0,y0)-(x1,y1), kind 1 a ray from (x0,y0) along (x1,y1)\n\
             plot 'cuts.csv' using 2:3:($1 == 0 ? $4 - $2 : 10 * $4):($1 == 0 ? $5 - $3 : 10 * $5) with vectors nohead title 'cuts', \\\n  \
             'branch_points.csv' using 1:2 with points pt 7 title 'branch points'",
        ),
    )?;
    facts.add("branch_case", geo.case.tag());
    facts.add("branch_points", geo.branch_points.len());
    facts.add("cuts", geo.cuts.len());
    let mut line = format!("case {}:", geo.case.tag());
    for b in &geo.branch_points {
        let _ = write!(line, " ({}, {})", fmt17(b.re), fmt17(b.im));
    }
    println!("{line}");
    Ok(())
}

/// Reference values of K0, K1, I0, I1 at 1.
const AT_ONE: [f64; 4] = [0.421_024_438_240_708_3, 0.601_907_230_197_234_6, 1.266_065_877_752_008_4, 0.565_159_103_992_485_1];

fn specfun_check(out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let mut csv = String::from("z,K0,K1,I0,I1,wronskian_rel_err\n");
    let mut worst = 0.0f64;
    for i in 0..500 {
        let z = 0.05 * 1000f64.powf(i as f64 / 499.0);
        let (i0, i1) = i01_scaled_real(z)?;
        let (k0, k1) = k01_scaled_real(z)?;
        let err = ((k0 * i1 + k1 * i0) * z - 1.0).abs();
        worst = worst.max(err);
        let (ez, emz) = (z.exp(), (-z).exp());
        csv.push_str(&csv_row(&[z, k0 * emz, k1 * emz, i0 * ez, i1 * ez, err]));
    }
    out.write("specfun_check.csv", &csv)?;
    let (k0, k1) = k01_scaled_real(1.0)?;
    let (i0, i1) = i01_scaled_real(1.0)?;
    let e = std::f64::consts::E;
    let got = [k0 / e, k1 / e, i0 * e, i1 * e];
    let ref_err = got.iter().zip(AT_ONE).fold(0.0f64, |m, (g, r)| m.max(((g - r) / r).abs()));
    facts.add("wronskian_max_rel_err", fmt17(worst));
    facts.add("values_at_one_max_rel_err", fmt17(ref_err));
    let pass = worst <= 1e-11 && ref_err <= 1e-13;
    facts.add("pass", pass);
    println!("Wronskian max relative error {worst:.3e}; K0, K1, I0, I1 at 1 within {ref_err:.3e}");
    if !pass {
        return Err(Failure::Numerical("special-function self-test out of tolerance".into()));
    }
    Ok(())
}

fn operators_check(cfg: &RunConfig, out: &mut Artifacts, facts: &mut Facts) -> Result<(), Failure> {
    let radius = cfg.params.radius;
    let mut csv = String::from("kappa,r0_residual,r1_residual\n");
    let mut worst = 0.0f64;
    for kappa in [0.05, 0.1, 0.3] {
        let g = Arc::new(make_grid(radius, radius + 39.0, 1024, kappa)?);
        let ws = OperatorWorkspace::new(g.clone(), kappa)?;
        let k2 = kappa * kappa;
        // u vanishes at R, v has zero slope there
        let (mut u, mut fu, mut v, mut fv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &r in &g.nodes {
            let x = r - radius;
            let e = (-x).exp();
            let (a, a1, a2) = (x * x * e, (2.0 * x - x * x) * e, (2.0 - 4.0 * x + x * x) * e);
            u.push(a);
            fu.push(a - k2 * (a2 + a1 / r - a / (r * r)));
            let (b, b1, b2) = ((1.0 + x) * e, -x * e, (x - 1.0) * e);
            v.push(b);
            fv.push(b - k2 * (b2 + b1 / r));
        }
        let rel = |got: Vec<f64>, want: &[f64]| {
            let d: Vec<f64> = got.iter().zip(want).map(|(a, b)| a - b).collect();
            (g.norm_sq(&d) / g.norm_sq(want)).sqrt()
        };
        let e0 = rel(ws.r0(&fu), &u);
        let e1 = rel(ws.r1(&fv), &v);
        worst = worst.max(e0).max(e1);
        csv.push_str(&csv_row(&[kappa, e0, e1]));
    }
    out.write("operators_check.csv", &csv)?;

    let n = 2000;
    let z: Vec<f64> = (0..n).map(|i| 0.05 * 2000f64.powf(i as f64 / (n - 1) as f64)).collect();
    let (f, gg, k) = bounded_kernel_triplet(&z)?;
    let mut tri = String::from("z,f,g,k\n");
    for i in 0..n {
        tri.push_str(&csv_row(&[z[i], f[i], gg[i], k[i]]));
    }
    out.write("kernel_triplet.csv", &tri)?;
    out.write(
        "kernel_triplet.gp",
        &gnuplot(
            "kernel_triplet.png",
            "z",
            "",
            "set logscale x\n\
             plot 'kernel_triplet.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines",
        ),
    )?;
    let sum = (0..n).fold(0.0f64, |m, i| m.max((f[i] + gg[i] - 1.0).abs()));
    let monotone = f.windows(2).all(|w| w[1] > w[0]);
    let f_max = f.iter().cloned().fold(f64::MIN, f64::max);
    let k_max = k.iter().cloned().fold(f64::MIN, f64::max);
    facts.add("inversion_max_rel_residual", fmt17(worst));
    facts.add("f_plus_g_max_err", fmt17(sum));
    facts.add("f_increasing", monotone);
    facts.add("f_max", fmt17(f_max));
    facts.add("k_max", fmt17(k_max));
    let pass = worst <= 1e-5 && sum <= 1e-12 && monotone && f_max <= 0.5 + 1e-9 && k_max <= 1.0 + 1e-6;
    facts.add("pass", pass);
    println!("operator inversion residual {worst:.3e}; |f + g - 1| {sum:.3e}; max f {f_max:.6}; max k {k_max:.6}");
    if !pass {
        return Err(Failure::Numerical("operator self-test out of tolerance".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::Domain("x".into())).exit_code(), 3);
        assert_eq!(Failure::from(Error::Overflow("x".into())).exit_code(), 3);
        assert_eq!(Failure::from(Error::InvalidArgument("x".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::Resolution("x".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::WaterColumnCollapse { min_h: 0.01, r: 2.0 }).exit_code(), 4);
        assert_eq!(Failure::SigmaCheck(String::new()).exit_code(), 5);
    }

    #[test]
    fn horizons_need_positive_kappa() {
        let p = PhysParams { epsilon: 0.01, kappa: 0.1, ..PhysParams::default() };
        assert!((horizons(&p).0.parse::<f64>().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(horizons(&PhysParams::default()).0, "inf");
        assert_eq!(horizons(&PhysParams { kappa: 0.0, ..PhysParams::default() }).0, "undefined");
    }
}
