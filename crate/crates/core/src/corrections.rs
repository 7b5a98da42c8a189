//! Explicit inner correction terms and the two variation-of-parameters solves
//! for the `cos 2θ` and `cos 4θ` parts of the fourth-order correction.
//!
//! Notation: `h = 2εε_τ − ε²` is the self-similar dilation forcing, `B` the
//! `cos 2θ` amplitude of the second-order correction and `B_τ` its slow time
//! derivative.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inner::{ck_identity, far_exponent, FundamentalSystem, InnerGrid, StationaryProfile};
use crate::numerics::diff::{derivatives, uniform_derivative};
use crate::numerics::fit::least_squares;
use crate::numerics::interp::derivative_weights_at_node;
use crate::numerics::quad;
use crate::report::Check;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionParams {
    pub eps: f64,
    pub eps_tau: f64,
    pub b23: f64,
    pub b23_tau: f64,
    pub b3: f64,
}

impl CorrectionParams {
    pub fn new(eps: f64, eps_tau: f64, b23: f64, b23_tau: f64, b3: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if ![eps_tau, b23, b23_tau, b3].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("correction parameters must be finite".into()));
        }
        Ok(Self {
            eps,
            eps_tau,
            b23,
            b23_tau,
            b3,
        })
    }

    /// Amplitudes fixed by matching with the outer field: `B = ε²/8`,
    /// `B_τ = εε_τ/4`, `B₃ = −ε³/96`.
    pub fn from_matching(eps: f64, eps_tau: f64) -> Result<Self> {
        Self::new(eps, eps_tau, eps * eps / 8.0, eps * eps_tau / 4.0, -eps.powi(3) / 96.0)
    }

    /// Matched amplitudes at time `tau` on the width law `ε ∝ exp(−α√τ)`, where
    /// `ε_τ = −αε/(2√τ)`.
    pub fn on_width_law(eps: f64, tau: f64, alpha: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        Self::from_matching(eps, -alpha * eps / (2.0 * tau.sqrt()))
    }

    /// `h = 2εε_τ − ε²`.
    pub fn dilation(&self) -> f64 {
        2.0 * self.eps * self.eps_tau - self.eps * self.eps
    }

    /// `hB + B_τ ε²`, the far-field strength of the `cos 2θ` source.
    pub fn far_forcing(&self) -> f64 {
        self.dilation() * self.b23 + self.b23_tau * self.eps * self.eps
    }

    /// `3hB − B_τ ε²`, the strength of the `cos 2θ` source at the origin.
    pub fn origin_forcing(&self) -> f64 {
        3.0 * self.dilation() * self.b23 - self.b23_tau * self.eps * self.eps
    }
}

/// `dh/dτ` along the width law `ε ∝ exp(−α√τ)`.
pub fn width_law_dilation_rate(eps: f64, tau: f64, alpha: f64) -> f64 {
    let e2 = eps * eps;
    alpha * alpha * e2 / tau + alpha * e2 / (2.0 * tau.powf(1.5)) + alpha * e2 / tau.sqrt()
}

/// Sampled radial function with its derivative.
#[derive(Debug, Clone, Serialize)]
pub struct RadialFunction {
    pub label: String,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
}

impl RadialFunction {
    pub fn new(label: impl Into<String>, r: Vec<f64>, values: Vec<f64>, derivative: Vec<f64>) -> Result<Self> {
        if r.len() != values.len() || r.len() != derivative.len() {
            return Err(Error::InvalidInput("radial function arrays differ in length".into()));
        }
        if let Some(i) = r.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NotIncreasing { index: i + 1 });
        }
        Ok(Self {
            label: label.into(),
            r,
            values,
            derivative,
        })
    }

    /// Largest deviation between the stored derivative and a five-point
    /// difference of the values on `[lo, hi]`, relative to the largest stored
    /// derivative there.
    pub fn derivative_mismatch(&self, lo: f64, hi: f64) -> f64 {
        let n = self.r.len();
        let (mut worst, mut scale) = (0.0f64, 0.0f64);
        for i in 2..n.saturating_sub(2) {
            if self.r[i] < lo || self.r[i] > hi {
                continue;
            }
            let w = derivative_weights_at_node(&self.r[i - 2..=i + 2], 2);
            let fd: f64 = w.iter().zip(&self.values[i - 2..=i + 2]).map(|(a, b)| a * b).sum();
            worst = worst.max((fd - self.derivative[i]).abs());
            scale = scale.max(self.derivative[i].abs());
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

fn g1_kernel(t: f64) -> f64 {
    if t < 1e-4 {
        0.5 + t / 3.0 - t * t / 12.0
    } else {
        let u = 1.0 + t;
        u * u / (t * t) * (t.ln_1p() - t / u)
    }
}

fn kernel_integral(a: f64, b: f64) -> Result<f64> {
    // integrand grows like log t; split at 1 and at decades so each piece is smooth
    let mut edges = vec![a];
    let mut e = 1.0;
    while e < b {
        if e > a {
            edges.push(e);
        }
        e *= 10.0;
    }
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let tol = 1e-15 * (w[1] - w[0]) * g1_kernel(w[1]).max(1.0);
        total += quad::integrate(g1_kernel, w[0], w[1], tol)?;
    }
    Ok(total)
}

/// `∫₀^x (1+t)²/t² [log(1+t) − t/(1+t)] dt`.
pub fn g1_integral(x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "integral bound must be non-negative, got {x}"
        )));
    }
    kernel_integral(0.0, x)
}

/// `(g₁, ∂g₁/∂r)` given the kernel integral at `r²`.
fn g1_with_integral(r: f64, h: f64, integral: f64) -> (f64, f64) {
    let s = r * r;
    let q = 1.0 + s;
    let g = h * s / (q * q) * integral;
    let dg = h * ((2.0 * r / (q * q) - 4.0 * r * s / (q * q * q)) * integral + s / (q * q) * g1_kernel(s) * 2.0 * r);
    (g, dg)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be non-negative, got {r}")));
    }
    Ok(())
}

/// Radial flux function of the dilation correction; `r ∂V₂₁/∂r = g₁`.
pub fn g1(r: f64, p: &CorrectionParams) -> Result<f64> {
    check_radius(r)?;
    Ok(g1_with_integral(r, p.dilation(), g1_integral(r * r)?).0)
}

pub fn g1_derivative(r: f64, p: &CorrectionParams) -> Result<f64> {
    check_radius(r)?;
    Ok(g1_with_integral(r, p.dilation(), g1_integral(r * r)?).1)
}

/// `(Q₂₁, ∂V₂₁/∂r) = (−g₁'/r, g₁/r)`; both vanish at the origin.
pub fn q21_dv21(r: f64, p: &CorrectionParams) -> Result<(f64, f64)> {
    check_radius(r)?;
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (g, dg) = g1_with_integral(r, p.dilation(), g1_integral(r * r)?);
    Ok((-dg / r, g / r))
}

/// `cos 2θ` correction `(Q₂₃, V₂₃)`.
pub fn q23_v23(r: f64, b23: f64) -> (f64, f64) {
    let s = r * r;
    let q = 1.0 + s;
    (8.0 * b23 * s * (s + 3.0) / (q * q * q), b23 * s * (s + 3.0) / q)
}

fn dv23(r: f64, b23: f64) -> f64 {
    let q = 1.0 + r * r;
    2.0 * b23 * r * (1.0 + 2.0 / (q * q))
}

/// `cos 3θ` correction `(Q₃, V₃)`.
pub fn q3_v3(r: f64, b3: f64) -> (f64, f64) {
    let s = r * r;
    let q = 1.0 + s;
    let a = r * s * (2.0 * s + 4.0);
    (8.0 * b3 * a / (q * q * q), b3 * a / q)
}

/// Radial part of the quadratic correction: `(U, ∂W/∂r)`.
pub fn u421(r: f64, b23: f64) -> (f64, f64) {
    let s = r * r;
    let q = 1.0 + s;
    let b2 = b23 * b23;
    (
        2.0 * b2 * s * s * (s * s + 4.0 * s + 9.0) / q.powi(4),
        -b2 * r * s * s * (s + 3.0) / q.powi(3),
    )
}

fn relative(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if scale > 0.0 {
        sum.abs() / scale
    } else {
        0.0
    }
}

fn fd_step(r: f64) -> f64 {
    0.02 * r
}

/// Relative residuals of the homogeneous angular-`L` system for `(Q, V)` given as
/// functions of `r`, with derivatives by extrapolated differences.
fn angular_residual<FQ: Fn(f64) -> f64, FV: Fn(f64) -> f64>(l: u32, r: f64, q: FQ, v: FV) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    let st = StationaryProfile.eval(r)?;
    let l2 = (l * l) as f64;
    let (q0, q1, q2) = derivatives(q, r, fd_step(r));
    let (v0, v1, v2) = derivatives(v, r, fd_step(r));
    let first = relative(&[
        q2,
        q1 / r,
        -l2 * q0 / (r * r),
        -st.du * v1,
        2.0 * st.u * q0,
        -st.dv * q1,
    ]);
    let second = relative(&[v2, v1 / r, -l2 * v0 / (r * r), q0]);
    Ok((first, second))
}

/// Residuals of the `cos 2θ` closed form in its defining system.
pub fn q23_residual(r: f64, b23: f64) -> Result<(f64, f64)> {
    angular_residual(2, r, |x| q23_v23(x, b23).0, |x| q23_v23(x, b23).1)
}

/// Residuals of the `cos 3θ` closed form in its defining system.
pub fn q3_residual(r: f64, b3: f64) -> Result<(f64, f64)> {
    angular_residual(3, r, |x| q3_v3(x, b3).0, |x| q3_v3(x, b3).1)
}

/// Residuals of the radial quadratic correction: the once-integrated density
/// balance and the second-order equation for the moment `M = r ∂W/∂r`.
pub fn u421_residual(r: f64, b23: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    let st = StationaryProfile.eval(r)?;
    let (u, dw) = u421(r, b23);
    let (_, du, _) = derivatives(|x| u421(x, b23).0, r, fd_step(r));
    let flux = 0.5 * r * q23_v23(r, b23).0 * dv23(r, b23);
    let balance = relative(&[r * du, -st.u * r * dw, -r * u * st.dv, -flux]);
    let (m, dm, d2m) = derivatives(|x| x * u421(x, b23).1, r, fd_step(r));
    let q = 1.0 + r * r;
    let moment = relative(&[d2m, -dm / r, 8.0 / (q * q) * m, 4.0 * r / q * dm, flux]);
    Ok((balance, moment))
}

/// Angular components of the quadratic source: radial, `cos 2θ`, `cos 4θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sources {
    pub radial: f64,
    pub cos2: f64,
    pub cos4: f64,
}

/// Radial source `−(1/2r) ∂(r Q₂₃ ∂V₂₃/∂r)/∂r`, simplified.
pub fn source_radial(r: f64, b23: f64) -> f64 {
    let s = r * r;
    let q = 1.0 + s;
    -32.0 * b23 * b23 * s * (s * s + 9.0) / q.powi(6)
}

/// `cos 4θ` source `4Q₂₃V₂₃/r² − (1/2r) ∂(r Q₂₃ ∂V₂₃/∂r)/∂r`, simplified.
pub fn source_cos4(r: f64, b23: f64) -> f64 {
    let s = r * r;
    let q = 1.0 + s;
    32.0 * b23 * b23 * s * s * (s * s * s + 8.0 * s * s + 21.0 * s + 24.0) / q.powi(6)
}

fn source_cos2_with(r: f64, p: &CorrectionParams, g: f64, dg: f64) -> f64 {
    let s = r * r;
    let q = 1.0 + s;
    let (b, h, e2) = (p.b23, p.dilation(), p.eps * p.eps);
    -8.0 * b * r * (s * s + 4.0 * s + 9.0) / q.powi(3) * dg
        + 32.0 * b * (s - 3.0) / q.powi(4) * g
        + 8.0 * b * h * s / q.powi(4) * (s * s + 2.0 * s + 9.0)
        - p.b23_tau * 8.0 * e2 * s * (s + 3.0) / q.powi(3)
}

pub fn sources(r: f64, p: &CorrectionParams) -> Result<Sources> {
    check_radius(r)?;
    let (g, dg) = g1_with_integral(r, p.dilation(), g1_integral(r * r)?);
    Ok(Sources {
        radial: source_radial(r, p.b23),
        cos2: source_cos2_with(r, p, g, dg),
        cos4: source_cos4(r, p.b23),
    })
}

/// `I(r²)` at every radius of an increasing grid, accumulated interval by interval.
fn kernel_integral_profile(r: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(r.len());
    let mut acc = g1_integral(r[0] * r[0])?;
    out.push(acc);
    for w in r.windows(2) {
        acc += kernel_integral(w[0] * w[0], w[1] * w[1])?;
        out.push(acc);
    }
    Ok(out)
}

/// `det [ψ_i ψ_j ψ_k; ω_i ω_j ω_k; ω_i' ω_j' ω_k']` over the three modes other
/// than `m` (0-based), in increasing order.
fn minor(modes: [[f64; 4]; 4], m: usize) -> f64 {
    let cols: Vec<[f64; 4]> = (0..4).filter(|&k| k != m).map(|k| modes[k]).collect();
    let row = |c: &[f64; 4]| [c[0], c[2], c[3]];
    let (a, b, c) = (row(&cols[0]), row(&cols[1]), row(&cols[2]));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1])
}

/// Coefficients `c_m(r)` of a variation-of-parameters solution on the grid of
/// `fs`, together with the assembled `(Q, Q', V, V')`.
struct Variation {
    coeffs: [Vec<f64>; 4],
    integrands: [Vec<f64>; 4],
    q: Vec<f64>,
    dq: Vec<f64>,
    v: Vec<f64>,
    dv: Vec<f64>,
}

/// `c_m' = (−1)^{m+1} r² (r²+1)² S D_m / norm` with `c_m(0) = 0`. Below the
/// first grid point the integrand in `ln r` behaves like `r^2` (odd `m`) or
/// `r^{2L+2}` (even `m`) and is integrated analytically.
fn vary(fs: &FundamentalSystem, source: &[f64], norm: f64) -> Variation {
    let n = fs.r.len();
    let h = fs.step();
    let lf = fs.l as f64;
    let mut integrands: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
    for i in 0..n {
        let r = fs.r[i];
        let q = 1.0 + r * r;
        let modes: [[f64; 4]; 4] = std::array::from_fn(|k| fs.modes[k][i]);
        for (m, f) in integrands.iter_mut().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            f[i] = sign * r * r * r * q * q * source[i] * minor(modes, m) / norm;
        }
    }
    let coeffs: [Vec<f64>; 4] = std::array::from_fn(|m| {
        let p = if m % 2 == 0 { 2.0 } else { 2.0 * lf + 2.0 };
        let start = integrands[m][0] / p;
        quad::cumulative_uniform(&integrands[m], h)
            .into_iter()
            .map(|v| v + start)
            .collect()
    });
    let assemble = |c: usize| -> Vec<f64> {
        (0..n)
            .map(|i| (0..4).map(|k| coeffs[k][i] * fs.modes[k][i][c]).sum())
            .collect()
    };
    Variation {
        q: assemble(0),
        dq: assemble(1),
        v: assemble(2),
        dv: assemble(3),
        coeffs,
        integrands,
    }
}

/// Limit at infinity of a coefficient whose `ln r` integrand decays like
/// `r^{−decay}` beyond the grid.
fn limit_at_infinity(c: &[f64], f: &[f64], decay: f64) -> f64 {
    c[c.len() - 1] + f[f.len() - 1] / decay
}

/// Radii over which the forced systems are re-checked. Below `10⁻²` the solution
/// is a near-cancelling sum of singular and regular modes and its second
/// difference is dominated by rounding.
pub const RESIDUAL_WINDOW: (f64, f64) = (1e-2, 1e2);

/// Largest relative residual of the forced angular-`L` system on
/// [`RESIDUAL_WINDOW`]. Terms include the source.
fn forced_residual(fs: &FundamentalSystem, sol: &Variation, source: &[f64]) -> f64 {
    let h = fs.step();
    let l2 = (fs.l * fs.l) as f64;
    let rq: Vec<f64> = fs.r.iter().zip(&sol.dq).map(|(r, d)| r * d).collect();
    let rv: Vec<f64> = fs.r.iter().zip(&sol.dv).map(|(r, d)| r * d).collect();
    let drq = uniform_derivative(&rq, h);
    let drv = uniform_derivative(&rv, h);
    let mut worst = 0.0f64;
    for i in 3..fs.r.len() - 3 {
        let r = fs.r[i];
        if r < RESIDUAL_WINDOW.0 || r > RESIDUAL_WINDOW.1 {
            continue;
        }
        let q = 1.0 + r * r;
        // d(rf')/ds = r f' + r² f''
        let q2 = (drq[i] - rq[i]) / (r * r);
        let v2 = (drv[i] - rv[i]) / (r * r);
        let a = relative(&[
            q2,
            sol.dq[i] / r,
            -l2 * sol.q[i] / (r * r),
            32.0 * r / (q * q * q) * sol.dv[i],
            4.0 * r / q * sol.dq[i],
            16.0 / (q * q) * sol.q[i],
            source[i],
        ]);
        let b = relative(&[v2, sol.dv[i] / r, -l2 * sol.v[i] / (r * r), sol.q[i]]);
        worst = worst.max(a).max(b);
    }
    worst
}

/// Least-squares coefficients of `basis` fitted to `y` on grid points in `[lo, hi]`.
fn fit_window<B: Fn(f64) -> Vec<f64>>(
    r: &[f64],
    y: &[f64],
    lo: f64,
    hi: f64,
    basis: B,
    what: &'static str,
) -> Result<Vec<f64>> {
    let (mut rows, mut ys) = (Vec::new(), Vec::new());
    for (ri, yi) in r.iter().zip(y) {
        if *ri >= lo && *ri <= hi {
            rows.push(basis(*ri));
            ys.push(*yi);
        }
    }
    let fit = least_squares(&rows, &ys)?;
    if fit.relative_residual > 0.05 {
        return Err(Error::PoorFit {
            what,
            residual: fit.relative_residual,
            limit: 0.05,
        });
    }
    Ok(fit.coefficients)
}

fn require_l(fs: &FundamentalSystem, l: u32) -> Result<()> {
    if fs.l != l {
        return Err(Error::InvalidInput(format!(
            "fundamental system has L = {}, need L = {l}",
            fs.l
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Q422Checks {
    /// `b₁(r)/r²` at `r = 10⁻²` against `−(3hB − B_τε²)/16`.
    pub b1_small_r: Check,
    /// Coefficient of `log r` in `b₁`, divided by `hB + B_τε²`.
    pub b1_log_coefficient: Check,
    /// Constant far-field term of `Q₄₂₂` divided by `hB + B_τε²`.
    pub constant_term: Check,
    /// Coefficient of `r² log r` in `V₄₂₂`, divided by `hB + B_τε²`.
    pub v_log_coefficient: Check,
}

#[derive(Debug, Clone, Serialize)]
pub struct Q422Solution {
    pub q: RadialFunction,
    pub v: RadialFunction,
    pub coefficients: [Vec<f64>; 4],
    /// Limit of `b₃` at infinity (the growing homogeneous content).
    pub b42: f64,
    pub ck_product: f64,
    pub residual: f64,
    pub checks: Option<Q422Checks>,
}

pub const Q422_NORM: f64 = 3.0 * 4096.0;
pub const Q423_NORM: f64 = 16384.0 * 15.0;

/// Solves the forced `cos 2θ` system with the free homogeneous constants set to
/// zero and extracts its far-field structure.
pub fn solve_q422(p: &CorrectionParams, fs: &FundamentalSystem) -> Result<Q422Solution> {
    require_l(fs, 2)?;
    let integral = kernel_integral_profile(&fs.r)?;
    let h = p.dilation();
    let source: Vec<f64> =
        fs.r.iter()
            .zip(&integral)
            .map(|(&r, &i)| {
                let (g, dg) = g1_with_integral(r, h, i);
                source_cos2_with(r, p, g, dg)
            })
            .collect();
    let sol = vary(fs, &source, Q422_NORM);
    let g = far_exponent(2);
    let b42 = limit_at_infinity(&sol.coeffs[2], &sol.integrands[2], g - 2.0);
    let residual = forced_residual(fs, &sol, &source);
    let ck = fs.constants.c_l * fs.constants.k_l;

    let checks = if p.far_forcing() != 0.0 && p.origin_forcing() != 0.0 {
        let bx = p.far_forcing();
        let target_ck = ck_identity(2);
        let i = fs.r.partition_point(|&r| r < 1e-2);
        let small = sol.coeffs[0][i] / (fs.r[i] * fs.r[i]);
        let b1 = fit_window(
            &fs.r,
            &sol.coeffs[0],
            100.0,
            1000.0,
            |r| vec![1.0, r.ln(), r.powf(g - 4.0), r.ln() / (r * r)],
            "b1 log fit",
        )?;
        let qc: Vec<f64> = (0..fs.r.len()).map(|i| sol.q[i] - b42 * fs.modes[2][i][0]).collect();
        let qfit = fit_window(
            &fs.r,
            &qc,
            100.0,
            1000.0,
            |r| vec![1.0, r.powf(g - 4.0), r.ln() / (r * r), 1.0 / (r * r)],
            "Q422 constant fit",
        )?;
        let vc: Vec<f64> = (0..fs.r.len()).map(|i| sol.v[i] - b42 * fs.modes[2][i][2]).collect();
        let vfit = fit_window(
            &fs.r,
            &vc,
            100.0,
            1000.0,
            |r| vec![r * r * r.ln(), r * r, r.powf(g), r.ln(), 1.0],
            "V422 log fit",
        )?;
        Some(Q422Checks {
            b1_small_r: Check::relative("b1 small-r law", -p.origin_forcing() / 16.0, small, 0.02),
            b1_log_coefficient: Check::relative("b1 log coefficient", target_ck / 2.0, b1[1] / bx, 0.05),
            constant_term: Check::relative("Q422 constant term", -2.0 * 2f64.sqrt() * target_ck, qfit[0] / bx, 0.05),
            v_log_coefficient: Check::relative("V422 r^2 log r coefficient", target_ck / 2.0, vfit[0] / bx, 0.05),
        })
    } else {
        None
    };
    Ok(Q422Solution {
        q: RadialFunction::new("Q_{4,2,2}", fs.r.clone(), sol.q.clone(), sol.dq.clone())?,
        v: RadialFunction::new("V_{4,2,2}", fs.r.clone(), sol.v.clone(), sol.dv.clone())?,
        coefficients: sol.coeffs,
        b42,
        ck_product: ck,
        residual,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Q423Checks {
    /// `(c₁(r) − c₁(∞)) r²/B²` at `r = 100`.
    pub c1_tail: Check,
    /// `r⁴` coefficient of `V₄₂₃` (growing homogeneous part removed) against `3c₁(∞)`.
    pub v_quartic: Check,
}

#[derive(Debug, Clone, Serialize)]
pub struct Q423Solution {
    pub q: RadialFunction,
    pub v: RadialFunction,
    pub coefficients: [Vec<f64>; 4],
    pub c1_inf: f64,
    pub c3_inf: f64,
    pub residual: f64,
    pub checks: Option<Q423Checks>,
}

/// Solves the forced `cos 4θ` system with the free homogeneous constants set to zero.
pub fn solve_q423(p: &CorrectionParams, fs: &FundamentalSystem) -> Result<Q423Solution> {
    require_l(fs, 4)?;
    let source: Vec<f64> = fs.r.iter().map(|&r| source_cos4(r, p.b23)).collect();
    let sol = vary(fs, &source, Q423_NORM);
    let g = far_exponent(4);
    let c1_inf = limit_at_infinity(&sol.coeffs[0], &sol.integrands[0], 2.0);
    let c3_inf = limit_at_infinity(&sol.coeffs[2], &sol.integrands[2], g - 2.0);
    let residual = forced_residual(fs, &sol, &source);
    let checks = if p.b23 != 0.0 {
        let b2 = p.b23 * p.b23;
        let i = fs.r.partition_point(|&r| r < 100.0);
        let r = fs.r[i];
        let tail = (sol.coeffs[0][i] - c1_inf) * r * r / b2;
        let vc: Vec<f64> = (0..fs.r.len()).map(|k| sol.v[k] - c3_inf * fs.modes[2][k][2]).collect();
        let vfit = fit_window(
            &fs.r,
            &vc,
            100.0,
            1000.0,
            |r| vec![r.powi(4), r * r, r.powf(g - 2.0), 1.0],
            "V423 quartic fit",
        )?;
        Some(Q423Checks {
            c1_tail: Check::relative("c1 tail r^-2 law", 1.0 / 12.0, tail, 0.05),
            v_quartic: Check::relative("V423 r^4 coefficient", 3.0 * c1_inf, vfit[0], 0.02),
        })
    } else {
        None
    };
    Ok(Q423Solution {
        q: RadialFunction::new("Q_{4,2,3}", fs.r.clone(), sol.q.clone(), sol.dq.clone())?,
        v: RadialFunction::new("V_{4,2,3}", fs.r.clone(), sol.v.clone(), sol.dv.clone())?,
        coefficients: sol.coeffs,
        c1_inf,
        c3_inf,
        residual,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct G2Solution {
    pub g2: RadialFunction,
    /// Coefficient of `r² log r` in the `dh/dτ` part, divided by `ε² dh/dτ`.
    pub log_coefficient: Option<Check>,
    /// Coefficient of `r²` in the `h²` part, divided by `h²`.
    pub quadratic_coefficient: Option<Check>,
    pub residual: f64,
}

/// Radial fourth-order correction through its flux function `g₂`
/// (`U = −g₂'/r`, `∂W/∂r = g₂/r`), regular at the origin. `h_tau` is `dh/dτ`.
pub fn solve_g2(p: &CorrectionParams, h_tau: f64, grid: &InnerGrid) -> Result<G2Solution> {
    if !h_tau.is_finite() {
        return Err(Error::InvalidInput("dh/dtau must be finite".into()));
    }
    let n = grid.intervals + 1;
    let step = (grid.r_max / grid.r_min).ln() / grid.intervals as f64;
    let r: Vec<f64> = (0..n).map(|k| (grid.r_min.ln() + k as f64 * step).exp()).collect();
    let integral = kernel_integral_profile(&r)?;
    let h = p.dilation();
    let e2 = p.eps * p.eps;
    // source of g'' − g'/r + 4r/(1+r²) g' + 8/(1+r²)² g = S, split by forcing
    let mut s_rate = vec![0.0; n];
    let mut s_square = vec![0.0; n];
    for i in 0..n {
        let ri = r[i];
        let (g, dg) = g1_with_integral(ri, h, integral[i]);
        let q = 1.0 + ri * ri;
        s_rate[i] = e2 * h_tau * ri * ri / (q * q) * integral[i];
        s_square[i] = g * dg / ri - 0.5 * h * ri * dg;
    }
    // with g = r² F/(1+r²)²: (r³/(1+r²)² F')' = r S
    let particular = |s: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let f1: Vec<f64> = (0..n).map(|i| r[i] * r[i] * s[i]).collect();
        let start1 = f1[0] / 6.0;
        let inner: Vec<f64> = quad::cumulative_uniform(&f1, step)
            .into_iter()
            .map(|v| v + start1)
            .collect();
        let dfs: Vec<f64> = (0..n)
            .map(|i| {
                let q = 1.0 + r[i] * r[i];
                q * q / r[i].powi(3) * inner[i]
            })
            .collect();
        let f2: Vec<f64> = (0..n).map(|i| r[i] * dfs[i]).collect();
        let start2 = f2[0] / 4.0;
        let fs: Vec<f64> = quad::cumulative_uniform(&f2, step)
            .into_iter()
            .map(|v| v + start2)
            .collect();
        let mut g = vec![0.0; n];
        let mut dg = vec![0.0; n];
        for i in 0..n {
            let ri = r[i];
            let q = 1.0 + ri * ri;
            g[i] = ri * ri * fs[i] / (q * q);
            dg[i] = 2.0 * ri * (1.0 - ri * ri) / (q * q * q) * fs[i] + ri * ri / (q * q) * dfs[i];
        }
        (g, dg)
    };
    let (g_rate, dg_rate) = particular(&s_rate);
    let (g_sq, dg_sq) = particular(&s_square);
    let g2: Vec<f64> = g_rate.iter().zip(&g_sq).map(|(a, b)| a + b).collect();
    let dg2: Vec<f64> = dg_rate.iter().zip(&dg_sq).map(|(a, b)| a + b).collect();

    let total: Vec<f64> = s_rate.iter().zip(&s_square).map(|(a, b)| a + b).collect();
    let rd: Vec<f64> = r.iter().zip(&dg2).map(|(a, b)| a * b).collect();
    let drd = uniform_derivative(&rd, step);
    let mut residual = 0.0f64;
    for i in 3..n - 3 {
        let ri = r[i];
        let q = 1.0 + ri * ri;
        let d2 = (drd[i] - rd[i]) / (ri * ri);
        residual = residual.max(relative(&[
            d2,
            -dg2[i] / ri,
            4.0 * ri / q * dg2[i],
            8.0 / (q * q) * g2[i],
            -total[i],
        ]));
    }

    let log_coefficient = if h_tau != 0.0 {
        let y: Vec<f64> = g_rate.iter().map(|v| v / (e2 * h_tau)).collect();
        let c = fit_window(
            &r,
            &y,
            100.0,
            grid.r_max,
            |x| {
                let l = x.ln();
                vec![x * x * l, x * x, l * l, l, 1.0]
            },
            "g2 log fit",
        )?;
        Some(Check::relative("g2 r^2 log r coefficient", 0.25, c[0], 0.10))
    } else {
        None
    };
    let quadratic_coefficient = if h != 0.0 {
        let y: Vec<f64> = g_sq.iter().map(|v| v / (h * h)).collect();
        let c = fit_window(
            &r,
            &y,
            100.0,
            grid.r_max,
            |x| {
                let l = x.ln();
                vec![x * x, l * l, l, 1.0]
            },
            "g2 quadratic fit",
        )?;
        Some(Check::relative("g2 r^2 coefficient of h^2 part", -0.125, c[0], 0.10))
    } else {
        None
    };
    Ok(G2Solution {
        g2: RadialFunction::new("g_2", r, g2, dg2)?,
        log_coefficient,
        quadratic_coefficient,
        residual,
    })
}
