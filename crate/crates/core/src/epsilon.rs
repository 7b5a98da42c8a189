//! Peak-width dynamics: the matched constants, the width ODE in its full and
//! simplified forms, the blow-up rate fit, and the physical-space formulas.
//!
//! Widths decay like `e^{−α√τ}` and underflow long before `τ = 10⁶`, so every
//! integration runs in `u = log ε`. The full equation is carried by
//! `(u, k)` with `k = h/ε² = 2ε_τ/ε − 1`, which removes the overall `ε²`
//! scale from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::fit::least_squares;
use crate::numerics::ode::{advance_autonomous, Tolerance};

const TOL: Tolerance = Tolerance {
    rtol: 1e-13,
    atol: 1e-13,
};
const SAMPLES_PER_DECADE: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedConstants {
    pub a: f64,
    pub b: f64,
    /// `5/4 + 8B`.
    pub m: f64,
    /// `3/32 − 8A`, the constant driving the simplified equation.
    pub lc: f64,
    /// `√(2·lc)`.
    pub alpha: f64,
    /// `e^{−m}`.
    pub beta: f64,
}

/// Builds the width-law constants from the outer matching constants.
pub fn constants_from_ab(a: f64, b: f64) -> Result<MatchedConstants> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "constants must be finite, got A={a}, B={b}"
        )));
    }
    let lc = 3.0 / 32.0 - 8.0 * a;
    if lc <= 0.0 {
        return Err(Error::Regime(format!(
            "3/32 − 8A = {lc} is not positive (needs A < 3/256); the width law has no decaying branch"
        )));
    }
    let m = 1.25 + 8.0 * b;
    Ok(MatchedConstants {
        a,
        b,
        m,
        lc,
        alpha: (2.0 * lc).sqrt(),
        beta: (-m).exp(),
    })
}

/// Width constant `2e^{−(2+γ)/2}` of the single radially symmetric peak
/// (γ is Euler's constant); a reference value, not a two-peak prediction.
pub fn radial_width_constant() -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    2.0 * (-(2.0 + EULER_GAMMA) / 2.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub log_eps: f64,
    /// `e^{log_eps}`; underflows to zero for very late times.
    pub eps: f64,
    /// `ε_τ/ε`.
    pub rate: f64,
    /// `h/ε²` with `h = 2εε_τ − ε²`.
    pub h_scaled: f64,
}

impl TrajectorySample {
    fn new(tau: f64, log_eps: f64, rate: f64) -> Self {
        Self {
            tau,
            log_eps,
            eps: log_eps.exp(),
            rate,
            h_scaled: 2.0 * rate - 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonTrajectory {
    pub samples: Vec<TrajectorySample>,
    /// Minus the slope of `log ε` against `√τ` over the last two decades.
    pub fitted_alpha: f64,
    /// `e^{intercept}` of the same regression.
    pub beta_intercept: f64,
    /// `ε(τ₁)·e^{α√τ₁}` with the exact `α`: the prefactor seen at the end time.
    pub fitted_beta: f64,
    pub fit_residual: f64,
}

impl EpsilonTrajectory {
    /// `log ε` at a sampled time.
    pub fn log_eps_at(&self, tau: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| (s.tau - tau).abs() <= 1e-9 * tau.abs().max(1.0))
            .map(|s| s.log_eps)
    }
}

/// Log-spaced sample times from `tau0` to `tau1`, always including both ends
/// and every power of ten in between.
pub fn sample_times(tau0: f64, tau1: f64) -> Vec<f64> {
    let (l0, l1) = (tau0.log10(), tau1.log10());
    let n = ((l1 - l0) * SAMPLES_PER_DECADE as f64).ceil().max(1.0) as usize;
    let mut t: Vec<f64> = (0..=n)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / n as f64))
        .collect();
    let mut d = l0.ceil() as i32;
    while (d as f64) < l1 {
        t.push(10f64.powi(d));
        d += 1;
    }
    t.push(tau0);
    t.push(tau1);
    t.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    *t.first_mut().expect("non-empty") = tau0;
    *t.last_mut().expect("non-empty") = tau1;
    t
}

fn check_window(eps0: f64, tau0: f64, tau1: f64) -> Result<()> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "initial width must lie in (0, 1), got {eps0}"
        )));
    }
    if !(tau0 > 0.0 && tau1 > tau0 && tau1.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 < tau0 < tau1, got {tau0}, {tau1}")));
    }
    Ok(())
}

/// Closed-form solution of the simplified equation,
/// `(log ε + M)² = (log ε₀ + M)² + 2L(τ − τ₀)` on the decaying branch.
pub fn simplified_exact(c: &MatchedConstants, log_eps0: f64, tau0: f64, tau: f64) -> f64 {
    -c.m - ((log_eps0 + c.m).powi(2) + 2.0 * c.lc * (tau - tau0)).sqrt()
}

/// `(log ε)² + 2M log ε`, conserved up to `2Lτ` by the simplified equation.
pub fn first_integral(c: &MatchedConstants, log_eps: f64) -> f64 {
    log_eps * log_eps + 2.0 * c.m * log_eps
}

fn fit_rate(c: &MatchedConstants, samples: &[TrajectorySample]) -> Result<(f64, f64, f64, f64)> {
    let last = samples.last().expect("non-empty trajectory");
    let lo = last.tau / 100.0;
    let win: Vec<&TrajectorySample> = samples.iter().filter(|s| s.tau >= lo * (1.0 - 1e-12)).collect();
    let rows: Vec<Vec<f64>> = win.iter().map(|s| vec![s.tau.sqrt(), 1.0]).collect();
    let ys: Vec<f64> = win.iter().map(|s| s.log_eps).collect();
    let fit = least_squares(&rows, &ys)?;
    let end_beta = (last.log_eps + c.alpha * last.tau.sqrt()).exp();
    Ok((
        -fit.coefficients[0],
        fit.coefficients[1].exp(),
        end_beta,
        fit.relative_residual,
    ))
}

fn finish(c: &MatchedConstants, samples: Vec<TrajectorySample>) -> Result<EpsilonTrajectory> {
    let (fitted_alpha, beta_intercept, fitted_beta, fit_residual) = fit_rate(c, &samples)?;
    Ok(EpsilonTrajectory {
        samples,
        fitted_alpha,
        beta_intercept,
        fitted_beta,
        fit_residual,
    })
}

/// Integrates `ε_τ = L ε/(log ε + M)` from `(tau0, eps0)` to `tau1`.
pub fn integrate_simplified(c: &MatchedConstants, eps0: f64, tau0: f64, tau1: f64) -> Result<EpsilonTrajectory> {
    check_window(eps0, tau0, tau1)?;
    let u0 = eps0.ln();
    if u0 + c.m >= 0.0 {
        return Err(Error::Regime(format!(
            "log ε₀ + M = {} is not negative; the simplified equation is singular or growing",
            u0 + c.m
        )));
    }
    let (lc, m) = (c.lc, c.m);
    let rhs = move |y: &[f64; 1]| [lc / (y[0] + m)];
    let times = sample_times(tau0, tau1);
    let mut u = u0;
    let mut samples = vec![TrajectorySample::new(tau0, u0, lc / (u0 + m))];
    for w in times.windows(2) {
        u = advance_autonomous(rhs, [u], w[0], w[1], TOL)?[0];
        samples.push(TrajectorySample::new(w[1], u, lc / (u + m)));
    }
    finish(c, samples)
}

/// Largest relative mismatch of the sampled `log ε` against the closed form and
/// of the first integral against `2L(τ − τ₀)`.
pub fn simplified_errors(c: &MatchedConstants, traj: &EpsilonTrajectory) -> (f64, f64) {
    let s0 = traj.samples[0];
    let i0 = first_integral(c, s0.log_eps);
    let mut log_err: f64 = 0.0;
    let mut integral_err: f64 = 0.0;
    for s in &traj.samples[1..] {
        let exact = simplified_exact(c, s0.log_eps, s0.tau, s.tau);
        log_err = log_err.max(((s.log_eps - exact) / exact).abs());
        let want = 2.0 * c.lc * (s.tau - s0.tau);
        integral_err = integral_err.max(((first_integral(c, s.log_eps) - i0) - want).abs() / want);
    }
    (log_err, integral_err)
}

/// `d(u, k)/dτ` for the full width equation, `u = log ε`, `k = h/ε²`.
fn full_rhs(c: &MatchedConstants) -> impl Fn(&[f64; 2]) -> [f64; 2] + Copy {
    let (a, b) = (c.a, c.b);
    move |y: &[f64; 2]| {
        let (u, k) = (y[0], y[1]);
        let rate = 0.5 * (k + 1.0);
        let forcing = 3.0 / 16.0 + 8.0 * a + (8.0 * b - 1.0) * rate - 0.25 * k * k - 1.0 / 32.0;
        let h_tau = forcing / (0.5 * u + 0.625);
        [rate, h_tau - k * (k + 1.0)]
    }
}

/// Full width equation through `ε(τ₀) = eps0`.
///
/// Forward in τ the equation has a mode growing like `e^τ` on top of the
/// slowly decaying width, so an initial `h` can only be used if it lies on
/// the slow branch to all digits. The branch is found instead by sweeping
/// backwards from `tau1`, where that mode decays, and adjusting the terminal
/// width until the sweep passes through `eps0` at `tau0`.
pub fn integrate_full(c: &MatchedConstants, eps0: f64, tau0: f64, tau1: f64) -> Result<EpsilonTrajectory> {
    check_window(eps0, tau0, tau1)?;
    let u0 = eps0.ln();
    if u0 >= -1.25 {
        return Err(Error::Regime(format!(
            "log ε₀ = {u0} does not lie below −5/4, where the full equation degenerates"
        )));
    }
    if u0 + c.m >= 0.0 {
        return Err(Error::Regime(format!("log ε₀ + M = {} is not negative", u0 + c.m)));
    }
    let rhs = full_rhs(c);
    let times = sample_times(tau0, tau1);
    let sweep = |u1: f64| -> Result<Vec<[f64; 2]>> {
        let mut y = [u1, -1.0 + 2.0 * c.lc / (u1 + c.m)];
        let mut out = vec![y];
        for w in times.windows(2).rev() {
            y = advance_autonomous(rhs, y, w[1], w[0], TOL)?;
            if !(y[0] < -1.25) {
                return Err(Error::Regime(format!(
                    "log ε reached {} above −5/4 at τ = {}",
                    y[0], w[0]
                )));
            }
            out.push(y);
        }
        out.reverse();
        Ok(out)
    };
    // The terminal width is parametrised by `p = (u₁ + M)² − 2Lτ₁`, the
    // constant of the simplified first integral; the landing mismatch in
    // `(u + M)²` is then close to linear in `p`, whereas `u(τ₀)` itself reacts
    // to `u₁` with a gain of order `u₁/u₀`.
    let terminal = |p: f64| -c.m - (p + 2.0 * c.lc * tau1).max(0.0).sqrt();
    let target = (u0 + c.m).powi(2);
    let mismatch = |path: &[[f64; 2]]| (path[0][0] + c.m).powi(2) - target;
    let mut p0 = target - 2.0 * c.lc * tau0;
    let mut path = sweep(terminal(p0))?;
    let mut g0 = mismatch(&path);
    let mut p1 = p0 - g0;
    path = sweep(terminal(p1))?;
    let mut g1 = mismatch(&path);
    let mut iterations = 0;
    while (path[0][0] - u0).abs() > 1e-9 * u0.abs() {
        iterations += 1;
        if iterations > 60 || g1 == g0 {
            return Err(Error::Divergence {
                iterations,
                residual: (path[0][0] - u0).abs(),
            });
        }
        let p2 = p1 - g1 * (p1 - p0) / (g1 - g0);
        (p0, g0) = (p1, g1);
        p1 = p2;
        path = sweep(terminal(p1))?;
        g1 = mismatch(&path);
    }
    let samples = times
        .iter()
        .zip(&path)
        .map(|(&t, y)| TrajectorySample::new(t, y[0], 0.5 * (y[1] + 1.0)))
        .collect();
    finish(c, samples)
}

/// Peak width in the original variables, `β√(T−t)·e^{−α√|log(T−t)|}`.
pub fn width_physical(t: f64, t_blowup: f64, c: &MatchedConstants) -> Result<f64> {
    if !(t < t_blowup) {
        return Err(Error::InvalidInput(format!("need t < T, got t={t}, T={t_blowup}")));
    }
    let s = t_blowup - t;
    Ok(c.beta * s.sqrt() * (-c.alpha * s.ln().abs().sqrt()).exp())
}

/// Peak centres `x₀ ± (2, 0)√(T−t)` and their distance `4√(T−t)`.
pub fn peak_geometry(t: f64, t_blowup: f64, x0: [f64; 2]) -> Result<([f64; 2], [f64; 2], f64)> {
    if !(t < t_blowup) {
        return Err(Error::InvalidInput(format!("need t < T, got t={t}, T={t_blowup}")));
    }
    let s = (t_blowup - t).sqrt();
    let x1 = [x0[0] + 2.0 * s, x0[1]];
    let x2 = [x0[0] - 2.0 * s, x0[1]];
    Ok((x1, x2, 4.0 * s))
}

/// Separation at which two peaks of width `w` aggregate into a single one,
/// `(4e^{−α²}/β)·w·exp(α√(2|log w|))`, valid for small `w`.
pub fn critical_distance(w: f64, c: &MatchedConstants) -> Result<f64> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidInput(format!("width must lie in (0, 1), got {w}")));
    }
    Ok(4.0 * (-c.alpha * c.alpha).exp() / c.beta * w * (c.alpha * (2.0 * w.ln().abs()).sqrt()).exp())
}

/// Inner coefficients fixed by matching: `(B₂₃, B₃, c₁(∞)) = (ε²/8, −ε³/96, ε⁴/768)`.
pub fn matched_coefficients(eps: f64) -> (f64, f64, f64) {
    (eps * eps / 8.0, -eps.powi(3) / 96.0, eps.powi(4) / 768.0)
}

/// Ratio of the inner `cos 2θ` coefficient to the outer one, `√2·C₂K₂`.
pub fn cos2_match_ratio(ck2: f64) -> f64 {
    std::f64::consts::SQRT_2 * ck2
}
