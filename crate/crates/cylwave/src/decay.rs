//! Linear return-to-equilibrium analysis in the Laplace domain.
//!
//! With eps = 0 and the body released from delta0 on still water, the heave has
//! the transform delta_hat = H(s) delta0 where
//!
//!   P(s) = 2 tau^2 s^2 + 2 nu s + R s S(s) B(s) + 2,  S(s) = sqrt(1 + nu s + kappa^2 s^2),
//!   H = (P - 2) / (s P),  I = 1 / P,  J = s / P.
//!
//! The velocity and acceleration transforms are -2 I delta0 and -2 J delta0.
//! The module evaluates these functions, classifies their branch cuts, inverts
//! them along a Bromwich line with an FFT, scans |P| over rectangles and
//! measures the decay of the resulting time series. A 1D variant replaces B by 1.

use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::shode::tau_kappa_sq;
use crate::specfun::{bessel_j1, k01_scaled, principal_sqrt, ratio_b};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Label attached to every |P| scan report.
pub const ASSUMPTION_LABEL: &str = "Assumption check (numerical)";

/// Constant used when comparing a numerical Hardy norm with the analytical bound.
pub const HARDY_CONSTANT: f64 = 10.0;

/// Weights beta of the tails int |delta|^2 t^beta dt reported by [`decay_fit`].
pub const TAIL_BETAS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

/// Geometry of the radiating problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Axisymmetric problem around the cylinder, with the Bessel ratio B(s).
    Radial,
    /// Planar problem, B = 1.
    OneD,
}

/// Transfer functions of the linear decay test for a given parameter set.
#[derive(Debug, Clone)]
pub struct DecayModel {
    pub params: PhysParams,
    pub geometry: Geometry,
    tau0: f64,
}

/// P, H, I, J and B at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSample {
    pub s: C,
    pub p_val: C,
    pub h: C,
    pub i: C,
    pub j: C,
    pub b_val: C,
    pub in_domain: bool,
}

impl DecayModel {
    pub fn new(params: PhysParams) -> Result<Self> {
        params.validate_laplace()?;
        let tau0 = tau_kappa_sq(0.0, &params)?;
        Ok(Self { params, geometry: Geometry::Radial, tau0 })
    }

    /// Same parameters with B replaced by 1.
    pub fn one_d(params: PhysParams) -> Result<Self> {
        Ok(Self { geometry: Geometry::OneD, ..Self::new(params)? })
    }

    /// Added-mass coefficient tau_kappa^2(0).
    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Exponential weight of the 1D decay: nu/(2 kappa^2), 1/nu when kappa = 0,
    /// and R/(2 tau^2) in the inviscid non-dispersive case.
    pub fn eta0(&self) -> f64 {
        let (k, nu) = (self.params.kappa, self.params.nu);
        if k > 0.0 {
            nu / (2.0 * k * k)
        } else if nu > 0.0 {
            1.0 / nu
        } else {
            self.params.radius / (2.0 * self.tau0)
        }
    }

    /// S(s) = sqrt(1 + nu s + kappa^2 s^2), continued onto the imaginary axis
    /// from the right when nu = 0 and |Im s| > 1/kappa.
    pub fn disc_sqrt(&self, s: C) -> Result<C> {
        let (k, nu) = (self.params.kappa, self.params.nu);
        let d = ONE + s * nu + s * s * (k * k);
        if s.re == 0.0 && nu == 0.0 && k > 0.0 && d.re < 0.0 {
            let sgn = if s.im < 0.0 { -1.0 } else { 1.0 };
            return Ok(C::new(0.0, sgn * (-d.re).sqrt()));
        }
        if d.norm() == 0.0 {
            return Ok(ZERO);
        }
        principal_sqrt(d)
    }

    /// Ratio B(s), identically 1 for the 1D geometry.
    pub fn b(&self, s: C) -> Result<C> {
        match self.geometry {
            Geometry::OneD => Ok(ONE),
            Geometry::Radial => ratio_b(s, self.params.kappa, self.params.nu, self.params.radius),
        }
    }

    fn numerator(&self, s: C) -> Result<(C, C)> {
        let b = self.b(s)?;
        let sq = self.disc_sqrt(s)?;
        let n = s * (2.0 * self.tau0) + self.params.nu * 2.0 + sq * b * self.params.radius;
        Ok((n, b))
    }

    /// Denominator P(s) on the closed right half-plane.
    pub fn denominator_p(&self, s: C) -> Result<C> {
        check_closed_half_plane(s)?;
        let (n, _) = self.numerator(s)?;
        Ok(s * n + 2.0)
    }

    /// All transfer functions at `s` in the closed right half-plane.
    pub fn transfer(&self, s: C) -> Result<TransferSample> {
        check_closed_half_plane(s)?;
        let (n, b) = self.numerator(s)?;
        let p = s * n + 2.0;
        if p.norm() < 1e-300 {
            return Err(Error::Singular(format!("P vanishes at s = {s}")));
        }
        let inv = p.inv();
        Ok(TransferSample {
            s,
            p_val: p,
            h: n * inv,
            i: inv,
            j: s * inv,
            b_val: b,
            in_domain: self.branch_cuts().in_domain(s),
        })
    }

    /// Transfer samples on the imaginary axis s = i omega.
    pub fn axis_scan(&self, omegas: &[f64]) -> Result<Vec<TransferSample>> {
        omegas.par_iter().map(|&w| self.transfer(C::new(0.0, w))).collect()
    }

    pub fn branch_cuts(&self) -> BranchGeometry {
        branch_geometry(self.params.kappa, self.params.nu, self.geometry)
    }

    /// Laplace transforms of the discharge and the surface elevation at
    /// radius `r`, given the transform of the body velocity.
    pub fn zeta_q_laplace(&self, r: f64, s: C, delta_dot_hat: C) -> Result<(C, C)> {
        let radius = self.params.radius;
        if !(r >= radius) || !r.is_finite() {
            return Err(Error::Domain(format!("r = {r} outside [R, inf)")));
        }
        if !self.branch_cuts().in_domain(s) {
            return Err(Error::Domain(format!("s = {s} on a branch cut")));
        }
        let sq = self.disc_sqrt(s)?;
        let amp = -delta_dot_hat * (0.5 * radius);
        if s.norm() == 0.0 {
            return Ok(match self.geometry {
                Geometry::Radial => (ZERO, amp * (radius / r)),
                Geometry::OneD => (ZERO, amp),
            });
        }
        let p = s / sq;
        let decay = (-p * (r - radius)).exp();
        match self.geometry {
            Geometry::OneD => Ok((amp * decay / sq, amp * decay)),
            Geometry::Radial => {
                let (k0r, k1r) = k01_scaled(p * r)?;
                let (_, k1a) = k01_scaled(p * radius)?;
                Ok((amp * k0r / (k1a * sq) * decay, amp * k1r / k1a * decay))
            }
        }
    }

    /// Inverts delta_hat = H delta0 together with the velocity and the
    /// acceleration transforms on `t_grid`.
    pub fn response(&self, delta0: f64, t_grid: &[f64], opts: &InversionOptions) -> Result<DecayResponse> {
        let f = |s: C| -> Result<[C; 3]> {
            let ts = self.transfer(s)?;
            Ok([ts.h * delta0, ts.i * (-2.0 * delta0), ts.j * (-2.0 * delta0)])
        };
        let inv = invert_multi(f, t_grid, opts)?;
        let [delta, delta_dot, delta_ddot] = inv.values;
        Ok(DecayResponse {
            t: t_grid.to_vec(),
            delta,
            delta_dot,
            delta_ddot,
            sigma_discrepancy: inv.sigma_discrepancy,
            converged: inv.converged,
            sigma: inv.sigma,
            period: inv.period,
        })
    }

    /// Breakpoints for frequency integrals: the branch points on the axis.
    pub fn frequency_breakpoints(&self) -> Vec<f64> {
        if self.params.kappa > 0.0 && self.params.nu == 0.0 {
            vec![1.0 / self.params.kappa]
        } else {
            Vec::new()
        }
    }
}

fn check_closed_half_plane(s: C) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) || s.re < 0.0 {
        return Err(Error::Domain(format!("s = {s} outside the closed right half-plane")));
    }
    Ok(())
}

/// P(s) of the axisymmetric problem.
pub fn denominator_p(s: C, params: &PhysParams) -> Result<C> {
    DecayModel::new(params.clone())?.denominator_p(s)
}

/// Transfer functions of the axisymmetric problem.
pub fn transfer(s: C, params: &PhysParams) -> Result<TransferSample> {
    DecayModel::new(params.clone())?.transfer(s)
}

/// The 1D model (B = 1) with the same parameters.
pub fn one_d_mode(params: &PhysParams) -> Result<DecayModel> {
    DecayModel::one_d(params.clone())
}

// ---------------------------------------------------------------------------
// Branch cuts

/// Parameter regimes of the branch-cut classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchCase {
    KappaZero,
    NuZero,
    NuGeTwoKappa,
    NuLtTwoKappa,
}

impl BranchCase {
    pub fn tag(self) -> &'static str {
        match self {
            BranchCase::KappaZero => "kappa_zero",
            BranchCase::NuZero => "nu_zero",
            BranchCase::NuGeTwoKappa => "nu_ge_2kappa",
            BranchCase::NuLtTwoKappa => "nu_lt_2kappa",
        }
    }
}

/// A branch cut: a closed segment or a ray from `from` along `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cut {
    Segment { from: C, to: C },
    Ray { from: C, direction: C },
}

/// Branch points and cuts of sqrt(1 + nu s + kappa^2 s^2). In the radial
/// geometry the negative real axis is removed as well (where s/S(s) < 0).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchGeometry {
    pub branch_points: Vec<C>,
    pub cuts: Vec<Cut>,
    pub case: BranchCase,
    kappa: f64,
    nu: f64,
    geometry: Geometry,
}

impl BranchGeometry {
    /// |1 + nu s + kappa^2 s^2|.
    pub fn residual(&self, s: C) -> f64 {
        (ONE + s * self.nu + s * s * (self.kappa * self.kappa)).norm()
    }

    /// Membership in the domain where the transfer functions are defined.
    pub fn in_domain(&self, s: C) -> bool {
        if !(s.re.is_finite() && s.im.is_finite()) {
            return false;
        }
        let d = ONE + s * self.nu + s * s * (self.kappa * self.kappa);
        if d.im.abs() <= 1e-14 * (1.0 + d.norm()) && d.re <= 0.0 {
            return false;
        }
        if self.geometry == Geometry::Radial && s.norm() > 0.0 {
            let p = s / crate::specfun::sqrt_unchecked(d);
            if p.im.abs() <= 1e-14 * p.norm() && p.re < 0.0 {
                return false;
            }
        }
        true
    }
}

/// Branch geometry of the axisymmetric problem.
pub fn branch_cuts(params: &PhysParams) -> BranchGeometry {
    branch_geometry(params.kappa, params.nu, Geometry::Radial)
}

fn branch_geometry(kappa: f64, nu: f64, geometry: Geometry) -> BranchGeometry {
    let up = C::new(0.0, 1.0);
    let (case, branch_points, cuts) = if kappa == 0.0 {
        if nu > 0.0 {
            let b = C::new(-1.0 / nu, 0.0);
            (BranchCase::KappaZero, vec![b], vec![Cut::Ray { from: b, direction: -ONE }])
        } else {
            (BranchCase::KappaZero, Vec::new(), Vec::new())
        }
    } else if nu == 0.0 {
        let b = C::new(0.0, 1.0 / kappa);
        (
            BranchCase::NuZero,
            vec![b, b.conj()],
            vec![Cut::Ray { from: b, direction: up }, Cut::Ray { from: b.conj(), direction: -up }],
        )
    } else {
        let k2 = kappa * kappa;
        let disc = nu * nu - 4.0 * k2;
        let centre = C::new(-nu / (2.0 * k2), 0.0);
        if disc >= 0.0 {
            // stable roots: the product of the roots is 1/kappa^2
            let big = (-nu - disc.sqrt()) / (2.0 * k2);
            let small = 1.0 / (k2 * big);
            let (lo, hi) = (C::new(big, 0.0), C::new(small, 0.0));
            (
                BranchCase::NuGeTwoKappa,
                vec![hi, lo],
                vec![
                    Cut::Segment { from: lo, to: hi },
                    Cut::Ray { from: centre, direction: up },
                    Cut::Ray { from: centre, direction: -up },
                ],
            )
        } else {
            let b = centre + up * ((-disc).sqrt() / (2.0 * k2));
            (
                BranchCase::NuLtTwoKappa,
                vec![b, b.conj()],
                vec![Cut::Ray { from: b, direction: up }, Cut::Ray { from: b.conj(), direction: -up }],
            )
        }
    };
    BranchGeometry { branch_points, cuts, case, kappa, nu, geometry }
}

// ---------------------------------------------------------------------------
// Cummins kernels

/// Memory kernels of the Cummins form of the heave equation:
/// S(s) = kappa s + sqrt(nu s) k0_hat(s) + k1_hat(s), and k_B_hat = (R/2) B.
#[derive(Debug, Clone)]
pub struct CumminsKernels {
    model: DecayModel,
}

pub fn cummins_kernels(params: &PhysParams) -> Result<CumminsKernels> {
    Ok(CumminsKernels { model: DecayModel::new(params.clone())? })
}

impl CumminsKernels {
    pub fn from_model(model: DecayModel) -> Self {
        Self { model }
    }

    fn kn(&self) -> (f64, f64) {
        (self.model.params.kappa, self.model.params.nu)
    }

    pub fn k_b_hat(&self, s: C) -> Result<C> {
        Ok(self.model.b(s)? * (0.5 * self.model.params.radius))
    }

    /// 1 / (sqrt(1 + kappa^2 s / nu) + (kappa / sqrt nu) sqrt s); 0 when nu = 0
    /// and 1 (a Dirac mass in time) when kappa = 0.
    pub fn k0_hat(&self, s: C) -> Result<C> {
        check_closed_half_plane(s)?;
        let (k, nu) = self.kn();
        if nu == 0.0 {
            return Ok(ZERO);
        }
        if k == 0.0 {
            return Ok(ONE);
        }
        let a = principal_sqrt(ONE + s * (k * k / nu))?;
        let b = principal_sqrt(s)? * (k / nu.sqrt());
        Ok((a + b).inv())
    }

    /// 1 / (S(s) + sqrt(nu s + kappa^2 s^2)).
    pub fn k1_hat(&self, s: C) -> Result<C> {
        check_closed_half_plane(s)?;
        let (k, nu) = self.kn();
        let sq = self.model.disc_sqrt(s)?;
        // sqrt(s) sqrt(nu + kappa^2 s) is the principal root of nu s + kappa^2 s^2 on Re s >= 0
        let a = principal_sqrt(s)? * principal_sqrt(C::new(nu, 0.0) + s * (k * k))?;
        Ok((sq + a).inv())
    }

    /// The three terms kappa s, sqrt(nu s) k0_hat(s) and k1_hat(s), whose sum is S(s).
    pub fn split_terms(&self, s: C) -> Result<[C; 3]> {
        let (k, nu) = self.kn();
        let root = principal_sqrt(s * nu)?;
        Ok([s * k, root * self.k0_hat(s)?, self.k1_hat(s)?])
    }

    /// k1(t) where a closed form is tabulated: J1(t/kappa)/t for nu = 0, and
    /// sqrt(nu)(1 - exp(-t/nu)) / sqrt(2 pi t^3) for kappa = 0.
    pub fn k1_time(&self, t: f64) -> Result<f64> {
        let (k, nu) = self.kn();
        if nu == 0.0 && k > 0.0 {
            return Ok(j1_over_t(t, k));
        }
        if k == 0.0 && nu > 0.0 {
            check_positive_time(t)?;
            return Ok(nu.sqrt() * (-(-t / nu).exp_m1()) / (2.0 * PI * t.powi(3)).sqrt());
        }
        Err(Error::CaseMismatch(format!("k1(t) has no closed form for kappa = {k}, nu = {nu}")))
    }

    /// k1(t) normalized so that its Laplace transform is k1_hat: the kappa = 0
    /// form with sqrt(4 pi t^3) in the denominator.
    pub fn k1_time_normalized(&self, t: f64) -> Result<f64> {
        let (k, nu) = self.kn();
        if k == 0.0 && nu > 0.0 {
            check_positive_time(t)?;
            return Ok(nu.sqrt() * (-(-t / nu).exp_m1()) / (4.0 * PI * t.powi(3)).sqrt());
        }
        self.k1_time(t)
    }

    /// k0(t): zero for nu = 0; for kappa, nu > 0 the tabulated expression
    /// (kappa / nu^(1/4)) (1 - exp(-t nu / kappa^2)) / (2 pi t^3), returned only
    /// with `allow_tabulated`, since it is not the inverse of k0_hat.
    pub fn k0_time(&self, t: f64, allow_tabulated: bool) -> Result<f64> {
        let (k, nu) = self.kn();
        if nu == 0.0 {
            return Ok(0.0);
        }
        if k == 0.0 {
            return Err(Error::CaseMismatch("k0 is a Dirac mass when kappa = 0".into()));
        }
        if !allow_tabulated {
            return Err(Error::CaseMismatch(
                "the tabulated k0(t) for kappa, nu > 0 is unverified; pass allow_tabulated".into(),
            ));
        }
        check_positive_time(t)?;
        Ok(k / nu.powf(0.25) * (-(-t * nu / (k * k)).exp_m1()) / (2.0 * PI * t.powi(3)))
    }
}

fn check_positive_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("kernel singular at t = {t}")))
    }
}

fn j1_over_t(t: f64, k: f64) -> f64 {
    if t.abs() < 1e-6 * k {
        let x = t / k;
        return (1.0 - x * x / 8.0) / (2.0 * k);
    }
    bessel_j1(t / k) / t
}

// ---------------------------------------------------------------------------
// Bromwich inversion

/// Settings of the Bromwich-line FFT inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionOptions {
    /// abscissa of the inversion line
    pub sigma: f64,
    /// number of FFT points (frequencies on both sides of the axis)
    pub n: usize,
    /// FFT period in time; `None` picks max(2 t_max, 40/sigma)
    pub period: Option<f64>,
    /// fraction of the frequency band rolled off by the cosine taper
    pub taper: f64,
    /// repeat the inversion at sigma/2 and compare
    pub sigma_check: bool,
    /// relative tolerance of the sigma/2 comparison
    pub check_tol: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { sigma: 0.05, n: 1 << 20, period: None, taper: 0.1, sigma_check: true, check_tol: 1e-5 }
    }
}

impl InversionOptions {
    /// Defaults with sigma lowered to 12/t_max for long horizons, which keeps
    /// the exp(sigma t) amplification of rounding errors below exp(12).
    pub fn for_horizon(t_max: f64) -> Self {
        let d = Self::default();
        Self { sigma: d.sigma.min(12.0 / t_max), ..d }
    }

    fn resolved_period(&self, t_max: f64) -> f64 {
        self.period.unwrap_or((2.0 * t_max).max(40.0 / self.sigma))
    }
}

/// Inverse Laplace transform samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub values: Vec<f64>,
    /// max |f_sigma - f_{sigma/2}| / max |f_sigma| (0 when the check is off)
    pub sigma_discrepancy: f64,
    pub converged: bool,
    pub sigma: f64,
    pub period: f64,
}

/// Heave, velocity and acceleration of the decay test.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayResponse {
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_dot: Vec<f64>,
    pub delta_ddot: Vec<f64>,
    pub sigma_discrepancy: f64,
    pub converged: bool,
    pub sigma: f64,
    pub period: f64,
}

impl DecayResponse {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,delta,delta_dot,delta_ddot\n");
        for k in 0..self.t.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt17(self.t[k]),
                crate::fmt17(self.delta[k]),
                crate::fmt17(self.delta_dot[k]),
                crate::fmt17(self.delta_ddot[k])
            ));
        }
        s
    }
}

struct MultiInversion<const M: usize> {
    values: [Vec<f64>; M],
    sigma_discrepancy: f64,
    converged: bool,
    sigma: f64,
    period: f64,
}

/// Real inverse Laplace transform of `f` on `t_grid` (times in [0, period/2]).
///
/// `f` is sampled on Re s = sigma. The leading c1/(s+1) + c2/(s+1)^2 behaviour
/// is fitted at the top of the band and inverted exactly, the remainder goes
/// through a tapered inverse FFT, and the periodic samples are interpolated
/// onto `t_grid` with cubic Lagrange polynomials.
pub fn inverse_laplace<F>(f: F, t_grid: &[f64], opts: &InversionOptions) -> Result<Inversion>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let inv = invert_multi(|s| Ok([f(s)?]), t_grid, opts)?;
    let [values] = inv.values;
    Ok(Inversion {
        values,
        sigma_discrepancy: inv.sigma_discrepancy,
        converged: inv.converged,
        sigma: inv.sigma,
        period: inv.period,
    })
}

fn invert_multi<const M: usize, F>(f: F, t_grid: &[f64], opts: &InversionOptions) -> Result<MultiInversion<M>>
where
    F: Fn(C) -> Result<[C; M]> + Sync,
{
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if !(opts.sigma > 0.0) || !opts.sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma = {} must be positive", opts.sigma)));
    }
    if opts.n < 64 || !opts.n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("n = {} must be a power of two >= 64", opts.n)));
    }
    if !(0.0..0.5).contains(&opts.taper) {
        return Err(Error::InvalidArgument(format!("taper = {} not in [0, 0.5)", opts.taper)));
    }
    let t_max = t_grid.iter().cloned().fold(0.0f64, f64::max);
    if t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite and non-negative".into()));
    }
    let period = opts.resolved_period(t_max.max(1e-3));
    if t_max > 0.5 * period {
        return Err(Error::InvalidArgument(format!("t_max = {t_max} exceeds half the FFT period {period}")));
    }
    let main = bromwich_line(&f, opts.sigma, opts.n, period, opts.taper)?;
    let values: [Vec<f64>; M] = std::array::from_fn(|m| interpolate(&main.0, main.1, t_grid, m));
    let (mut disc, mut converged) = (0.0, true);
    if opts.sigma_check {
        let half = bromwich_line(&f, 0.5 * opts.sigma, opts.n, period, opts.taper)?;
        for m in 0..M {
            let other = interpolate(&half.0, half.1, t_grid, m);
            let scale = values[m].iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
            let diff = values[m].iter().zip(&other).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            disc = f64::max(disc, diff / scale);
        }
        converged = disc <= opts.check_tol;
    }
    Ok(MultiInversion { values, sigma_discrepancy: disc, converged, sigma: opts.sigma, period })
}

/// Periodic samples f(j dt), j < n/2, for each component, and dt.
fn bromwich_line<const M: usize, F>(f: &F, sigma: f64, n: usize, period: f64, taper: f64) -> Result<(Vec<[f64; M]>, f64)>
where
    F: Fn(C) -> Result<[C; M]> + Sync,
{
    let half = n / 2;
    let dw = 2.0 * PI / period;
    let w_max = half as f64 * dw;
    let line = |w: f64| C::new(sigma, w);

    // leading behaviour c1/(s+1) + c2/(s+1)^2 from two high frequencies
    let (sa, sb) = (line(0.5 * w_max), line(w_max));
    let (fa, fb) = (f(sa)?, f(sb)?);
    let (ua, ub) = ((sa + 1.0).inv(), (sb + 1.0).inv());
    let det = ua * ub * ub - ub * ua * ua;
    let coeffs: [(f64, f64); M] = std::array::from_fn(|m| {
        let c1 = (fa[m] * ub * ub - fb[m] * ua * ua) / det;
        let c2 = (ua * fb[m] - ub * fa[m]) / det;
        (c1.re, c2.re)
    });

    let roll = (1.0 - taper) * w_max;
    let window = |w: f64| {
        if w <= roll {
            1.0
        } else {
            let x = (w - roll) / (w_max - roll);
            0.5 * (1.0 + (PI * x).cos())
        }
    };
    let samples: Vec<[C; M]> = (0..=half)
        .into_par_iter()
        .map(|k| {
            let w = k as f64 * dw;
            let s = line(w);
            let v = f(s)?;
            let u = (s + 1.0).inv();
            let wt = if k == half { 0.0 } else { window(w) };
            Ok(std::array::from_fn(|m| (v[m] - u * coeffs[m].0 - u * u * coeffs[m].1) * wt))
        })
        .collect::<Result<_>>()?;

    let dt = period / n as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut out = vec![[0.0; M]; half];
    for m in 0..M {
        let mut buf = vec![ZERO; n];
        buf[0] = C::new(samples[0][m].re, 0.0);
        for k in 1..half {
            buf[k] = samples[k][m];
            buf[n - k] = samples[k][m].conj();
        }
        fft.process(&mut buf);
        for (j, o) in out.iter_mut().enumerate() {
            let t = j as f64 * dt;
            let e = (-t).exp();
            o[m] = (sigma * t).exp() * buf[j].re / period + coeffs[m].0 * e + coeffs[m].1 * t * e;
        }
    }
    Ok((out, dt))
}

fn interpolate<const M: usize>(samples: &[[f64; M]], dt: f64, t_grid: &[f64], m: usize) -> Vec<f64> {
    let len = samples.len();
    t_grid
        .iter()
        .map(|&t| {
            let x = t / dt;
            let j = (x.floor() as usize).min(len - 2);
            let start = j.saturating_sub(1).min(len - 4);
            let mut acc = 0.0;
            for a in 0..4 {
                let mut l = 1.0;
                for b in 0..4 {
                    if a != b {
                        l *= (x - (start + b) as f64) / (a as f64 - b as f64);
                    }
                }
                acc += l * samples[start + a][m];
            }
            acc
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Denominator scan

/// Rectangle [re.0, re.1] x [im.0, im.1] of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

/// |P| on a rectangular grid with sign-change data for Re P and Im P.
#[derive(Debug, Clone)]
pub struct DenominatorScan {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// P at (xs[i], ys[j]) stored at j * xs.len() + i; NaN where undefined
    pub values: Vec<C>,
    pub min_abs: f64,
    pub argmin: C,
    /// midpoints of grid edges across which Re P changes sign
    pub re_crossings: Vec<C>,
    /// midpoints of grid edges across which Im P changes sign
    pub im_crossings: Vec<C>,
    /// centres of cells where both Re P and Im P change sign
    pub candidate_zeros: Vec<C>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Scans |P| over `region` on an nx x ny grid (region within Re s >= 0).
pub fn scan_p_min(model: &DecayModel, region: Region, nx: usize, ny: usize) -> Result<DenominatorScan> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("scan grid needs at least one point per side".into()));
    }
    if region.re.0 < 0.0 || region.re.1 < region.re.0 || region.im.1 < region.im.0 {
        return Err(Error::InvalidArgument(format!("invalid scan region {region:?}")));
    }
    let xs = linspace(region.re.0, region.re.1, nx);
    let ys = linspace(region.im.0, region.im.1, ny);
    let values: Vec<C> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let s = C::new(xs[k % nx], ys[k / nx]);
            model.denominator_p(s).unwrap_or(C::new(f64::NAN, f64::NAN))
        })
        .collect();
    let mut min_abs = f64::INFINITY;
    let mut argmin = C::new(f64::NAN, f64::NAN);
    for (k, v) in values.iter().enumerate() {
        let a = v.norm();
        if a < min_abs {
            min_abs = a;
            argmin = C::new(xs[k % nx], ys[k / nx]);
        }
    }
    let at = |i: usize, j: usize| values[j * nx + i];
    let flips = |a: f64, b: f64| a.is_finite() && b.is_finite() && (a < 0.0) != (b < 0.0);
    let (mut re_crossings, mut im_crossings, mut candidate_zeros) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..ny {
        for i in 0..nx {
            let here = at(i, j);
            let mut edges = Vec::new();
            if i + 1 < nx {
                edges.push((at(i + 1, j), C::new(0.5 * (xs[i] + xs[i + 1]), ys[j])));
            }
            if j + 1 < ny {
                edges.push((at(i, j + 1), C::new(xs[i], 0.5 * (ys[j] + ys[j + 1]))));
            }
            for (other, mid) in edges {
                if flips(here.re, other.re) {
                    re_crossings.push(mid);
                }
                if flips(here.im, other.im) {
                    im_crossings.push(mid);
                }
            }
            if i + 1 < nx && j + 1 < ny {
                let c = [here, at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
                let changes = |g: fn(&C) -> f64| {
                    let v: Vec<f64> = c.iter().map(g).collect();
                    v.iter().all(|x| x.is_finite())
                        && v.iter().any(|x| *x < 0.0)
                        && v.iter().any(|x| *x >= 0.0)
                };
                if changes(|z| z.re) && changes(|z| z.im) {
                    candidate_zeros.push(C::new(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])));
                }
            }
        }
    }
    Ok(DenominatorScan { xs, ys, values, min_abs, argmin, re_crossings, im_crossings, candidate_zeros })
}

impl DenominatorScan {
    /// `x,y,ReP,ImP,absP` rows, x fastest.
    pub fn to_csv(&self) -> String {
        let nx = self.xs.len();
        let mut s = String::with_capacity(self.values.len() * 120);
        s.push_str("x,y,ReP,ImP,absP\n");
        for (k, v) in self.values.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                crate::fmt17(self.xs[k % nx]),
                crate::fmt17(self.ys[k / nx]),
                crate::fmt17(v.re),
                crate::fmt17(v.im),
                crate::fmt17(v.norm())
            ));
        }
        s
    }

    /// `kind,x,y` rows of the sign changes; kind 0 marks Re P, kind 1 marks Im P.
    pub fn crossings_csv(&self) -> String {
        let mut s = String::from("kind,x,y\n");
        for (kind, pts) in [(0, &self.re_crossings), (1, &self.im_crossings)] {
            for p in pts {
                s.push_str(&format!("{kind},{},{}\n", crate::fmt17(p.re), crate::fmt17(p.im)));
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Decay diagnostics

/// Oscillation envelope decay: a power t^p or faster than any power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Power(f64),
    SuperPolynomial,
}

impl std::fmt::Display for Envelope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Envelope::Power(p) => write!(f, "{p}"),
            Envelope::SuperPolynomial => write!(f, "super-polynomial"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// (beta, int_0^T |delta|^2 t^beta dt)
    pub weighted_tails: Vec<(f64, f64)>,
    pub envelope: Envelope,
    /// set when the record is shorter than 200 time units
    pub short_horizon: bool,
}

impl DecayFit {
    pub fn tail(&self, beta: f64) -> Option<f64> {
        self.weighted_tails.iter().find(|(b, _)| *b == beta).map(|(_, v)| *v)
    }
}

fn check_series(values: &[f64], t: &[f64]) -> Result<()> {
    if values.len() != t.len() || t.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need matching series of length >= 3, got {} and {}",
            values.len(),
            t.len()
        )));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be increasing".into()));
    }
    Ok(())
}

/// Trapezoid rule for int |v|^2 w(t) dt over the samples with t <= t_end.
pub fn weighted_tail<W: Fn(f64) -> f64>(values: &[f64], t: &[f64], weight: W, t_end: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..t.len().min(values.len()) {
        if t[k] > t_end {
            break;
        }
        let a = values[k - 1] * values[k - 1] * weight(t[k - 1]);
        let b = values[k] * values[k] * weight(t[k]);
        acc += 0.5 * (a + b) * (t[k] - t[k - 1]);
    }
    acc
}

/// Local maxima of |v| refined by a parabola through the three neighbouring samples.
pub fn envelope_peaks(values: &[f64], t: &[f64]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for k in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[k - 1].abs(), values[k].abs(), values[k + 1].abs());
        if b >= a && b > c {
            let denom = a - 2.0 * b + c;
            let (off, peak) = if denom < 0.0 {
                let off = 0.5 * (a - c) / denom;
                (off, b - 0.25 * (a - c) * off)
            } else {
                (0.0, b)
            };
            let h = if off < 0.0 { t[k] - t[k - 1] } else { t[k + 1] - t[k] };
            peaks.push((t[k] + off * h, peak));
        }
    }
    peaks
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Log-log slope of the envelope over the last decade of the record.
///
/// The envelope is read from the interpolated peaks of |v|, or from |v| itself
/// when there are too few peaks. It is declared super-polynomial when it
/// vanishes, or when the slope keeps steepening (late slope more than twice
/// the early slope and below -1).
pub fn envelope_exponent(values: &[f64], t: &[f64]) -> Result<Envelope> {
    check_series(values, t)?;
    let t_end = *t.last().unwrap();
    let t_start = (t_end / 10.0).max(t[0]);
    let mut pts: Vec<(f64, f64)> = envelope_peaks(values, t).into_iter().filter(|(x, _)| *x >= t_start && *x > 0.0).collect();
    if pts.len() < 4 {
        pts = t.iter().zip(values).filter(|(x, _)| **x >= t_start && **x > 0.0).map(|(x, v)| (*x, v.abs())).collect();
    }
    if pts.len() < 4 {
        return Err(Error::InvalidArgument("too few samples in the last decade".into()));
    }
    let floor = values.iter().fold(0.0f64, |a, v| a.max(v.abs())) * 1e-250;
    if pts.iter().any(|(_, e)| *e <= floor) {
        return Ok(Envelope::SuperPolynomial);
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|(x, e)| (x.ln(), e.ln())).collect();
    let mid = 0.5 * (logs[0].0 + logs[logs.len() - 1].0);
    let early: Vec<_> = logs.iter().cloned().filter(|p| p.0 <= mid).collect();
    let late: Vec<_> = logs.iter().cloned().filter(|p| p.0 > mid).collect();
    if early.len() >= 2 && late.len() >= 2 {
        let (se, sl) = (slope(&early), slope(&late));
        if sl < -1.0 && se < 0.0 && sl < 2.0 * se {
            return Ok(Envelope::SuperPolynomial);
        }
    }
    Ok(Envelope::Power(slope(&logs)))
}

/// Weighted tails for beta in [`TAIL_BETAS`] and the envelope exponent.
pub fn decay_fit(delta: &[f64], t: &[f64]) -> Result<DecayFit> {
    check_series(delta, t)?;
    let t_end = *t.last().unwrap();
    let weighted_tails = TAIL_BETAS.iter().map(|&b| (b, weighted_tail(delta, t, |x| x.powf(b), t_end))).collect();
    Ok(DecayFit { weighted_tails, envelope: envelope_exponent(delta, t)?, short_horizon: t_end - t[0] < 200.0 })
}

// ---------------------------------------------------------------------------
// Hardy norm

/// Frequency integration settings for [`hardy_norm_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct HardyOptions {
    /// abscissas eta over which the supremum is taken
    pub etas: Vec<f64>,
    /// frequencies where the integrand may be non-smooth
    pub breakpoints: Vec<f64>,
    /// panels of width at most `panel` cover [0, omega_split]; beyond, a mapped rule
    pub panel: f64,
    pub omega_split: f64,
    pub rel_tol: f64,
}

impl Default for HardyOptions {
    fn default() -> Self {
        Self {
            etas: vec![0.0, 1e-3, 1e-2, 0.03, 0.1, 0.3, 1.0, 3.0],
            breakpoints: Vec::new(),
            panel: 0.05,
            omega_split: 60.0,
            rel_tol: 1e-10,
        }
    }
}

impl HardyOptions {
    /// Defaults with the branch points of `model` as breakpoints and the
    /// panelled range scaled by 1/kappa.
    pub fn for_model(model: &DecayModel) -> Self {
        let k = model.params.kappa;
        let split = if k > 0.0 { (20.0 / k).max(60.0) } else { 60.0 };
        Self { breakpoints: model.frequency_breakpoints(), omega_split: split, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardyEstimate {
    /// sup over the sampled eta of int |F(eta + i w)|^2 dw
    pub norm_sq: f64,
    pub argsup_eta: f64,
    pub per_eta: Vec<(f64, f64)>,
}

impl HardyEstimate {
    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// Numerical Hardy norm: the largest line integral of |F|^2 over the sampled
/// vertical lines. Evaluation errors of F propagate.
pub fn hardy_norm_estimate<F>(f: F, opts: &HardyOptions) -> Result<HardyEstimate>
where
    F: Fn(C) -> Result<C> + Sync,
{
    if opts.etas.is_empty() || opts.etas.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidArgument("eta grid must be non-empty and non-negative".into()));
    }
    let mut cuts: Vec<f64> = vec![0.0];
    let panels = (opts.omega_split / opts.panel).ceil() as usize;
    for k in 1..=panels {
        cuts.push(opts.omega_split * k as f64 / panels as f64);
    }
    cuts.extend(opts.breakpoints.iter().filter(|b| **b > 0.0 && **b < opts.omega_split));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let per_eta: Vec<(f64, f64)> = opts
        .etas
        .par_iter()
        .map(|&eta| {
            let failure = std::sync::Mutex::new(None);
            let g = |w: f64| match (f(C::new(eta, w)), f(C::new(eta, -w))) {
                (Ok(a), Ok(b)) => a.norm_sqr() + b.norm_sqr(),
                (Err(e), _) | (_, Err(e)) => {
                    *failure.lock().unwrap() = Some(e);
                    0.0
                }
            };
            let mut total = 0.0;
            for w in cuts.windows(2) {
                total += crate::quad::integrate(&g, w[0], w[1], 0.0, opts.rel_tol).0;
            }
            total += crate::quad::integrate_to_inf(&g, opts.omega_split, 0.0, opts.rel_tol).0;
            match failure.into_inner().unwrap() {
                Some(e) => Err(e),
                None => Ok((eta, total)),
            }
        })
        .collect::<Result<_>>()?;
    let (argsup_eta, norm_sq) = per_eta.iter().cloned().fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(HardyEstimate { norm_sq, argsup_eta, per_eta })
}

fn kappa_star(params: &PhysParams) -> f64 {
    if params.kappa > 0.0 {
        params.kappa
    } else {
        1.0
    }
}

/// kappa*^(-1/2) (1 + R^2 sqrt(1 + nu/kappa*) + 1/kappa*) / P_min + sqrt(1/kappa*),
/// the Hardy-norm bound of H up to a constant.
pub fn hardy_bound_h(params: &PhysParams, p_min: f64) -> f64 {
    let ks = kappa_star(params);
    let r = params.radius;
    ks.powf(-0.5) * (1.0 + r * r * (1.0 + params.nu / ks).sqrt() + 1.0 / ks) / p_min + (1.0 / ks).sqrt()
}

/// 2/(kappa* P_min^2) + 2 kappa*^3 / (3 tau_buoy^4), bounding |I|^2 in norm.
pub fn hardy_bound_i_sq(params: &PhysParams, p_min: f64) -> f64 {
    let ks = kappa_star(params);
    2.0 / (ks * p_min * p_min) + 2.0 * ks.powi(3) / (3.0 * params.tau_buoy_sq.powi(2))
}

/// 2/(kappa* P_min^2) + 2 kappa* / tau_buoy^4, bounding |J|^2 in norm.
pub fn hardy_bound_j_sq(params: &PhysParams, p_min: f64) -> f64 {
    let ks = kappa_star(params);
    2.0 / (ks * p_min * p_min) + 2.0 * ks / params.tau_buoy_sq.powi(2)
}

// ---------------------------------------------------------------------------
// 1D closed forms

fn require_inviscid_shallow(params: &PhysParams) -> Result<f64> {
    if params.kappa != 0.0 || params.nu != 0.0 {
        return Err(Error::CaseMismatch(format!(
            "closed form needs kappa = nu = 0, got kappa = {}, nu = {}",
            params.kappa, params.nu
        )));
    }
    tau_kappa_sq(0.0, params)
}

/// delta0 cos(w t) exp(-R t / (2 tau^2)) with w = sqrt(4 tau^2 - R^2) / (2 tau^2),
/// the damped cosine quoted for the 1D inviscid non-dispersive decay.
pub fn one_d_damped_cosine(params: &PhysParams, delta0: f64, t: f64) -> Result<f64> {
    let tau = require_inviscid_shallow(params)?;
    let r = params.radius;
    let disc = 4.0 * tau - r * r;
    if disc <= 0.0 {
        return Err(Error::Domain(format!("4 tau^2 - R^2 = {disc} is not positive")));
    }
    let w = disc.sqrt() / (2.0 * tau);
    Ok(delta0 * (w * t).cos() * (-r * t / (2.0 * tau)).exp())
}

/// Exact inverse of H delta0 for the 1D model with kappa = nu = 0, where
/// P = 2 tau^2 s^2 + R s + 2: with a = R/(4 tau^2) and W = sqrt(16 tau^2 - R^2)/(4 tau^2),
/// delta = delta0 exp(-a t)(cos W t + (a/W) sin W t) in the underdamped case.
pub fn one_d_exact(params: &PhysParams, delta0: f64, t: f64) -> Result<f64> {
    let tau = require_inviscid_shallow(params)?;
    let r = params.radius;
    let a = r / (4.0 * tau);
    let disc = 16.0 * tau - r * r;
    let scale = 4.0 * tau;
    let e = (-a * t).exp();
    Ok(if disc > 0.0 {
        let w = disc.sqrt() / scale;
        delta0 * e * ((w * t).cos() + a / w * (w * t).sin())
    } else if disc == 0.0 {
        delta0 * e * (1.0 + a * t)
    } else {
        let w = (-disc).sqrt() / scale;
        delta0 * e * ((w * t).cosh() + a / w * (w * t).sinh())
    })
}
