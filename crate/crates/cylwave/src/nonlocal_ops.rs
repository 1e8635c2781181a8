//! The regularizing operators r0 = (1 - kappa^2 d_r-form)^-1 with Dirichlet
//! trace and r1 with Neumann trace, together with the boundary-layer kernels
//! K and G.
//!
//! Both operators are Green's-function integrals with modified Bessel kernels.
//! With z = r/kappa and scaled functions I~ = exp(-z) I, K~ = exp(z) K:
//!
//! r0 f = K~1(z) A1(r) + I~1(z) B1(r) - c K~1(z) exp(zR - z) B1(R)
//! r1 f = K~0(z) A0(r) + I~0(z) B0(r) + c K~0(z) exp(zR - z) B0(R)
//!
//! where c = I~1(zR)/K~1(zR) and the partial integrals
//! A(r) = int_R^r (s/k^2) I~(s/k) exp((s-r)/k) f ds,
//! B(r) = int_r^rmax (s/k^2) K~(s/k) exp((r-s)/k) f ds
//! are accumulated interval by interval. Each interval integral is a product
//! rule: f is replaced by its 6-point Lagrange interpolant and the Bessel
//! weight is integrated with Gauss-Legendre on sub-panels of length kappa/2.

use crate::error::{Error, Result};
use crate::grid::{stencil_start, RadialField, RadialGrid};
use crate::quad::gauss_legendre;
use crate::specfun::{i01_scaled_real, k01_scaled_real};
use std::sync::Arc;

const STENCIL: usize = 6;
const GL_POINTS: usize = 8;

/// Precomputed Bessel tables and product-quadrature weights on a grid.
#[derive(Debug, Clone)]
pub struct OperatorWorkspace {
    pub grid: Arc<RadialGrid>,
    pub kappa: f64,
    /// exp(-z) I0(z) at the nodes
    pub i0s: Vec<f64>,
    pub i1s: Vec<f64>,
    /// exp(z) K0(z) at the nodes
    pub k0s: Vec<f64>,
    pub k1s: Vec<f64>,
    /// K1(r/k)/K1(R/k)
    pub kernel_k: Vec<f64>,
    /// (R/2) K0(r/k)/K1(R/k)
    pub kernel_g: Vec<f64>,
    pub g_at_r: f64,
    c_hat: f64,
    // exp(-(r_{j+1} - r_j)/kappa)
    decay: Vec<f64>,
    start: Vec<usize>,
    // interval weights for A1, B1, A0, B0
    wa1: Vec<[f64; STENCIL]>,
    wb1: Vec<[f64; STENCIL]>,
    wa0: Vec<[f64; STENCIL]>,
    wb0: Vec<[f64; STENCIL]>,
}

/// Kernel G and its boundary diagnostics.
#[derive(Debug, Clone)]
pub struct KernelG {
    pub field: RadialField,
    pub g_at_r: f64,
    /// kappa (d_r-free) radial derivative of G at R; equals -R/2
    pub kappa_dr_g_at_r: f64,
}

impl OperatorWorkspace {
    /// Builds the workspace. Fails with a resolution error when the boundary
    /// layer is narrower than two mesh cells.
    pub fn new(grid: Arc<RadialGrid>, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
        }
        let hmin = grid.min_spacing();
        if kappa < 2.0 * hmin {
            return Err(Error::Resolution(format!(
                "kappa = {kappa} < 2 x min spacing = {}",
                2.0 * hmin
            )));
        }
        let n = grid.len();
        let nodes = &grid.nodes;
        let mut i0s = Vec::with_capacity(n);
        let mut i1s = Vec::with_capacity(n);
        let mut k0s = Vec::with_capacity(n);
        let mut k1s = Vec::with_capacity(n);
        for &r in nodes {
            let z = r / kappa;
            let (a, b) = i01_scaled_real(z)?;
            let (c, d) = k01_scaled_real(z)?;
            i0s.push(a);
            i1s.push(b);
            k0s.push(c);
            k1s.push(d);
        }
        let radius = grid.radius;
        let zr = radius / kappa;
        let c_hat = i1s[0] / k1s[0];
        let mut kernel_k = Vec::with_capacity(n);
        let mut kernel_g = Vec::with_capacity(n);
        for j in 0..n {
            let e = (zr - nodes[j] / kappa).exp();
            kernel_k.push(k1s[j] / k1s[0] * e);
            kernel_g.push(0.5 * radius * k0s[j] / k1s[0] * e);
        }
        kernel_k[0] = 1.0;
        let g_at_r = kernel_g[0];

        let (gx, gw) = gauss_legendre(GL_POINTS);
        let mut decay = Vec::with_capacity(n - 1);
        let mut start = Vec::with_capacity(n - 1);
        let mut wa1 = Vec::with_capacity(n - 1);
        let mut wb1 = Vec::with_capacity(n - 1);
        let mut wa0 = Vec::with_capacity(n - 1);
        let mut wb0 = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let (a, b) = (nodes[j], nodes[j + 1]);
            decay.push((-(b - a) / kappa).exp());
            let s = stencil_start(j, STENCIL, 2, n);
            start.push(s);
            let st = &nodes[s..s + STENCIL];
            let panels = ((b - a) / (0.5 * kappa)).ceil().max(1.0) as usize;
            let hp = (b - a) / panels as f64;
            let mut a1 = [0.0; STENCIL];
            let mut b1 = [0.0; STENCIL];
            let mut a0 = [0.0; STENCIL];
            let mut b0 = [0.0; STENCIL];
            for p in 0..panels {
                let lo = a + p as f64 * hp;
                for (xi, wi) in gx.iter().zip(&gw) {
                    let rho = lo + 0.5 * hp * (1.0 + xi);
                    let z = rho / kappa;
                    let (ti0, ti1) = i01_scaled_real(z)?;
                    let (tk0, tk1) = k01_scaled_real(z)?;
                    let base = 0.5 * hp * wi * rho / (kappa * kappa);
                    let ea = ((rho - b) / kappa).exp();
                    let eb = ((a - rho) / kappa).exp();
                    for m in 0..STENCIL {
                        let mut l = 1.0;
                        for k in 0..STENCIL {
                            if k != m {
                                l *= (rho - st[k]) / (st[m] - st[k]);
                            }
                        }
                        let bl = base * l;
                        a1[m] += bl * ti1 * ea;
                        a0[m] += bl * ti0 * ea;
                        b1[m] += bl * tk1 * eb;
                        b0[m] += bl * tk0 * eb;
                    }
                }
            }
            wa1.push(a1);
            wb1.push(b1);
            wa0.push(a0);
            wb0.push(b0);
        }
        Ok(Self {
            grid,
            kappa,
            i0s,
            i1s,
            k0s,
            k1s,
            kernel_k,
            kernel_g,
            g_at_r,
            c_hat,
            decay,
            start,
            wa1,
            wb1,
            wa0,
            wb0,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn partials(&self, f: &[f64], wa: &[[f64; STENCIL]], wb: &[[f64; STENCIL]]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let dot = |w: &[f64; STENCIL], s: usize| -> f64 {
            let mut acc = 0.0;
            for m in 0..STENCIL {
                acc += w[m] * f[s + m];
            }
            acc
        };
        let mut a = vec![0.0; n];
        for j in 0..n - 1 {
            a[j + 1] = self.decay[j] * a[j] + dot(&wa[j], self.start[j]);
        }
        let mut b = vec![0.0; n];
        for j in (0..n - 1).rev() {
            b[j] = self.decay[j] * b[j + 1] + dot(&wb[j], self.start[j]);
        }
        (a, b)
    }

    fn boundary_factor(&self, j: usize) -> f64 {
        let g = &self.grid;
        ((g.radius - g.nodes[j]) / self.kappa).exp()
    }

    /// r0 f and d_r r0 f.
    pub fn r0_with_dr(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.partials(f, &self.wa1, &self.wb1);
        let n = self.len();
        let b_r = b[0];
        let mut u = vec![0.0; n];
        let mut du = vec![0.0; n];
        for j in 0..n {
            let corr = self.c_hat * self.boundary_factor(j) * b_r;
            u[j] = self.k1s[j] * a[j] + self.i1s[j] * b[j] - self.k1s[j] * corr;
            du[j] = (-self.k0s[j] * a[j] + self.i0s[j] * b[j] + self.k0s[j] * corr) / self.kappa;
        }
        u[0] = 0.0;
        (u, du)
    }

    /// r0 f.
    pub fn r0(&self, f: &[f64]) -> Vec<f64> {
        self.r0_with_dr(f).0
    }

    /// r1 f and its radial derivative.
    pub fn r1_with_dr(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.partials(f, &self.wa0, &self.wb0);
        let n = self.len();
        let b_r = b[0];
        let mut v = vec![0.0; n];
        let mut dv = vec![0.0; n];
        for j in 0..n {
            let corr = self.c_hat * self.boundary_factor(j) * b_r;
            v[j] = self.k0s[j] * a[j] + self.i0s[j] * b[j] + self.k0s[j] * corr;
            dv[j] = (-self.k1s[j] * a[j] + self.i1s[j] * b[j] - self.k1s[j] * corr) / self.kappa;
        }
        dv[0] = 0.0;
        (v, dv)
    }

    /// r1 f.
    pub fn r1(&self, f: &[f64]) -> Vec<f64> {
        self.r1_with_dr(f).0
    }

    /// Radial derivative of r0 f, from d_r r0 f - r0 f / r.
    pub fn r0_partial(&self, f: &[f64]) -> Vec<f64> {
        let (u, du) = self.r0_with_dr(f);
        du.iter().zip(u.iter().zip(&self.grid.nodes)).map(|(d, (v, r))| d - v / r).collect()
    }

    /// d_r K at the nodes; equals -2G/(kappa R).
    pub fn kernel_k_dr(&self) -> Vec<f64> {
        let s = -2.0 / (self.kappa * self.grid.radius);
        self.kernel_g.iter().map(|g| s * g).collect()
    }

    /// Radial derivative of G at the nodes; kappa G' = -(R/2) K.
    pub fn kernel_g_partial(&self) -> Vec<f64> {
        let s = -0.5 * self.grid.radius / self.kappa;
        self.kernel_k.iter().map(|k| s * k).collect()
    }
}

/// K(r) = K1(r/kappa)/K1(R/kappa); equals 1 at R.
pub fn kernel_k(ws: &OperatorWorkspace) -> RadialField {
    RadialField { grid: ws.grid.clone(), values: ws.kernel_k.clone() }
}

/// G(r) = (R/2) K0(r/kappa)/K1(R/kappa), G(R) and kappa G'(R).
pub fn kernel_g(ws: &OperatorWorkspace) -> KernelG {
    KernelG {
        field: RadialField { grid: ws.grid.clone(), values: ws.kernel_g.clone() },
        g_at_r: ws.g_at_r,
        kappa_dr_g_at_r: ws.kappa * ws.kernel_g_partial()[0],
    }
}

fn check_field(ws: &OperatorWorkspace, f: &RadialField) -> Result<()> {
    if f.values.len() != ws.len() {
        return Err(Error::InvalidArgument("field and workspace grids differ".into()));
    }
    Ok(())
}

/// Dirichlet operator r0 applied to a field.
pub fn apply_r0(ws: &OperatorWorkspace, f: &RadialField) -> Result<RadialField> {
    check_field(ws, f)?;
    Ok(RadialField { grid: ws.grid.clone(), values: ws.r0(&f.values) })
}

/// Neumann operator r1 applied to a field.
pub fn apply_r1(ws: &OperatorWorkspace, f: &RadialField) -> Result<RadialField> {
    check_field(ws, f)?;
    Ok(RadialField { grid: ws.grid.clone(), values: ws.r1(&f.values) })
}

/// d_r r0 f.
pub fn apply_dr_r0(ws: &OperatorWorkspace, f: &RadialField) -> Result<RadialField> {
    check_field(ws, f)?;
    Ok(RadialField { grid: ws.grid.clone(), values: ws.r0_with_dr(&f.values).1 })
}

/// Radial derivative of r1 f.
pub fn apply_partial_r1(ws: &OperatorWorkspace, f: &RadialField) -> Result<RadialField> {
    check_field(ws, f)?;
    Ok(RadialField { grid: ws.grid.clone(), values: ws.r1_with_dr(&f.values).1 })
}

/// G(R) = (R/2) K0(R/kappa)/K1(R/kappa) without building a workspace.
pub fn g_at_contact(kappa: f64, radius: f64) -> Result<f64> {
    let (k0, k1) = k01_scaled_real(radius / kappa)?;
    Ok(0.5 * radius * k0 / k1)
}

/// The bounded products f(z) = z K0 I1, g(z) = z I0 K1 and k(z) = 2 z I1 K1.
pub fn bounded_kernel_triplet(z_grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut f = Vec::with_capacity(z_grid.len());
    let mut g = Vec::with_capacity(z_grid.len());
    let mut k = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("triplet needs z > 0, got {z}")));
        }
        let (i0, i1) = i01_scaled_real(z)?;
        let (k0, k1) = k01_scaled_real(z)?;
        f.push(z * k0 * i1);
        g.push(z * i0 * k1);
        k.push(2.0 * z * i1 * k1);
    }
    Ok((f, g, k))
}
