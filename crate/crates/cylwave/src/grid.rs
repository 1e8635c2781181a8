//! Truncated graded radial mesh on [R, r_max] with finite differences and
//! quadrature for the measure r dr.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use std::sync::Arc;

/// Radial mesh clustered near the contact line r = R.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub radius: f64,
    pub r_max: f64,
    pub nodes: Vec<f64>,
    /// weights for integrals of the form int f r dr
    pub quad_weights: Vec<f64>,
    d1_start: Vec<usize>,
    d1_weights: Vec<[f64; 6]>,
}

/// A scalar function sampled on a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

/// Weighted norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2r: f64,
    pub h1r: f64,
    pub h1kappa: f64,
    pub h2kappa: f64,
}

/// Finite-difference weights (Fornberg) for derivatives up to order `m` at `z`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// Start index of a stencil of `width` nodes around interval/node `j`,
/// shifted inward near the ends.
pub(crate) fn stencil_start(j: usize, width: usize, left_pad: usize, n: usize) -> usize {
    let s = j.saturating_sub(left_pad);
    s.min(n - width)
}

const X0: f64 = 9.0;
const SW: f64 = 3.0;
const MAX_GROWTH: f64 = 1.5;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Builds the graded mesh.
///
/// The node density is a + b / (1 + exp((x - 9w)/3w)) in x = r - R, with w the
/// boundary-layer width, tuned so the spacing is w/5 at x = 5w and below on
/// [R, R + 5w] and the total node count is n.
pub fn make_grid(radius: f64, r_max: f64, n: usize, boundary_layer_width: f64) -> Result<RadialGrid> {
    let w = boundary_layer_width;
    let mut bad = Vec::new();
    if !(radius > 0.0) {
        bad.push(format!("R = {radius} must be positive"));
    }
    if !(w > 0.0) {
        bad.push(format!("boundary layer width = {w} must be positive"));
    }
    if !(r_max > radius + 10.0 * w) {
        bad.push(format!("r_max = {r_max} must exceed R + 10 w = {}", radius + 10.0 * w));
    }
    if n < 16 {
        bad.push(format!("n = {n} must be at least 16"));
    }
    if !bad.is_empty() {
        return Err(Error::InvalidArgument(bad.join("; ")));
    }
    let len = r_max - radius;
    let x0 = X0 * w;
    let sw = SW * w;
    let g = |x: f64| 1.0 / (1.0 + ((x - x0) / sw).exp());
    let big_g = |x: f64| x - sw * softplus((x - x0) / sw);
    let ig = big_g(len) - big_g(0.0);
    let target = 5.0 / w;
    let g5 = g(5.0 * w);
    let m = (n - 1) as f64;
    let mut b = (target * len - m) / (g5 * len - ig);
    if b < 0.0 {
        b = 0.0;
    }
    let a = (m - b * ig) / len;
    if a <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "n = {n} too small to resolve boundary layer width {w} on [{radius}, {r_max}]"
        )));
    }
    let count = |x: f64| a * x + b * (big_g(x) - big_g(0.0));
    let dens = |x: f64| a + b * g(x);
    let mut nodes = Vec::with_capacity(n);
    nodes.push(radius);
    let mut x = 0.0;
    for j in 1..n - 1 {
        let jf = j as f64;
        let mut lo = x;
        let mut hi = len;
        let mut xn = x + 1.0 / dens(x);
        for _ in 0..200 {
            if !(xn > lo && xn < hi) {
                xn = 0.5 * (lo + hi);
            }
            let f = count(xn) - jf;
            if f > 0.0 {
                hi = xn;
            } else {
                lo = xn;
            }
            let step = f / dens(xn);
            xn -= step;
            if step.abs() < 1e-15 * (1.0 + xn) {
                break;
            }
        }
        x = xn.clamp(lo, hi);
        nodes.push(radius + x);
    }
    nodes.push(r_max);
    let worst = nodes
        .windows(3)
        .map(|p| (p[2] - p[1]) / (p[1] - p[0]))
        .fold(0.0, f64::max);
    if worst > MAX_GROWTH {
        return Err(Error::InvalidArgument(format!(
            "n = {n} too small for a smoothly graded mesh (spacing ratio {worst:.2} exceeds {MAX_GROWTH})"
        )));
    }
    RadialGrid::from_nodes(nodes)
}

impl RadialGrid {
    /// Builds the derivative and quadrature tables for arbitrary increasing nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 6 {
            return Err(Error::InvalidArgument(format!("need at least 6 nodes, got {n}")));
        }
        if nodes.windows(2).any(|p| !(p[1] > p[0])) || !(nodes[0] > 0.0) {
            return Err(Error::InvalidArgument("nodes must be positive and strictly increasing".into()));
        }
        let mut d1_start = Vec::with_capacity(n);
        let mut d1_weights = Vec::with_capacity(n);
        for j in 0..n {
            // centered 5-point stencils inside, 6-point one-sided at the two end pairs
            let width = if j < 2 || j + 2 >= n { 6 } else { 5 };
            let s = stencil_start(j, width, 2, n);
            let c = fd_weights(nodes[j], &nodes[s..s + width], 1);
            let mut wts = [0.0; 6];
            for k in 0..width {
                wts[k] = c[k][1];
            }
            d1_start.push(s);
            d1_weights.push(wts);
        }
        let (gx, gw) = gauss_legendre(4);
        let mut quad_weights = vec![0.0; n];
        for j in 0..n - 1 {
            let (a, b) = (nodes[j], nodes[j + 1]);
            let s = stencil_start(j, 6, 2, n);
            let st = &nodes[s..s + 6];
            for (xi, wi) in gx.iter().zip(&gw) {
                let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let wr = 0.5 * (b - a) * wi * r;
                for m in 0..6 {
                    let mut l = 1.0;
                    for k in 0..6 {
                        if k != m {
                            l *= (r - st[k]) / (st[m] - st[k]);
                        }
                    }
                    quad_weights[s + m] += wr * l;
                }
            }
        }
        Ok(Self {
            radius: nodes[0],
            r_max: nodes[n - 1],
            nodes,
            quad_weights,
            d1_start,
            d1_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fourth-order finite-difference radial derivative.
    pub fn partial_r(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|j| {
                let s = self.d1_start[j];
                let w = &self.d1_weights[j];
                let m = (self.len() - s).min(6);
                w[..m].iter().zip(&f[s..s + m]).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// d_r f = f' + f/r.
    pub fn d_r(&self, f: &[f64]) -> Vec<f64> {
        let mut d = self.partial_r(f);
        for (dj, (fj, r)) in d.iter_mut().zip(f.iter().zip(&self.nodes)) {
            *dj += fj / r;
        }
        d
    }

    /// int f r dr.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.quad_weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// int f g r dr.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.quad_weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| w * a * b).sum()
    }

    /// int f^2 r dr.
    pub fn norm_sq(&self, f: &[f64]) -> f64 {
        self.inner(f, f)
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn first_spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Header block describing the grid, as two CSV lines.
    pub fn header_csv(&self) -> String {
        format!(
            "R,r_max,n\n{},{},{}\n",
            crate::fmt17(self.radius),
            crate::fmt17(self.r_max),
            self.len()
        )
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite field value".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples a function at the grid nodes.
    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    fn same_grid(&self, other: &RadialField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes == other.grid.nodes {
            Ok(())
        } else {
            Err(Error::InvalidArgument("fields live on different grids".into()))
        }
    }

    pub fn partial_r(&self) -> RadialField {
        RadialField { grid: self.grid.clone(), values: self.grid.partial_r(&self.values) }
    }

    pub fn d_r(&self) -> RadialField {
        RadialField { grid: self.grid.clone(), values: self.grid.d_r(&self.values) }
    }

    /// Value at the contact line r = R.
    pub fn trace(&self) -> f64 {
        self.values[0]
    }

    /// int f g r dr; errors on mismatched grids.
    pub fn inner(&self, other: &RadialField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.inner(&self.values, &other.values))
    }

    /// The four weighted norms: L2_r, H1_r, H1_kappa (L2_r plus kappa^2 |d_r f|^2)
    /// and H2_kappa (H1_r plus kappa^2 |d/dr d_r f|^2).
    pub fn norms(&self, kappa: f64) -> Norms {
        let g = &self.grid;
        let l2 = g.norm_sq(&self.values);
        let dr = g.partial_r(&self.values);
        let drf = g.d_r(&self.values);
        let ddrf = g.partial_r(&drf);
        let h1 = l2 + g.norm_sq(&dr);
        let k2 = kappa * kappa;
        let h1k = l2 + k2 * g.norm_sq(&drf);
        let h2k = h1 + k2 * g.norm_sq(&ddrf);
        Norms { l2r: l2.sqrt(), h1r: h1.sqrt(), h1kappa: h1k.sqrt(), h2kappa: h2k.sqrt() }
    }

    /// CSV with columns r and `name`.
    pub fn to_csv(&self, name: &str) -> String {
        let mut s = format!("r,{name}\n");
        for (r, v) in self.grid.nodes.iter().zip(&self.values) {
            s.push_str(&crate::fmt17(*r));
            s.push(',');
            s.push_str(&crate::fmt17(*v));
            s.push('\n');
        }
        s
    }
}
