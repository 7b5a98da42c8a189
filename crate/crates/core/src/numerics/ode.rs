//! Adaptive integration of radial ODE systems sampled on a uniform grid in `ln r`.
//!
//! The right-hand side is always supplied as `dy/d(ln r)`. Integration runs in an
//! auxiliary variable that starts at zero and increases, both for outward
//! (`r_end > r_start`) and inward sweeps, so the dense output of the underlying
//! Dormand-Prince 8(5,3) stepper is well-defined.
//!
//! The stepper's tableau places its twelfth stage at the left end of the step
//! instead of the right one, which only matters for non-autonomous systems. The
//! independent variable is therefore carried as an extra state component so the
//! system handed to the stepper is autonomous.

use ode_solvers::{DVector, Dop853, System};

use crate::error::{Error, Result};
use crate::numerics::interp::{lagrange_weights, stencil_start};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-300,
        }
    }
}

/// Solution samples on a uniform grid in `ln r`, ordered by increasing `r`.
#[derive(Debug, Clone)]
pub struct LogGridPath<const N: usize> {
    pub log_r0: f64,
    pub step: f64,
    pub r: Vec<f64>,
    pub y: Vec<[f64; N]>,
}

impl<const N: usize> LogGridPath<N> {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Six-point Lagrange interpolation in `ln r`.
    pub fn at(&self, r: f64) -> [f64; N] {
        let s = r.ln();
        let start = stencil_start(self.log_r0, self.step, self.len(), 6, s);
        let nodes: Vec<f64> = (start..start + 6).map(|k| self.log_r0 + k as f64 * self.step).collect();
        let w = lagrange_weights(&nodes, s);
        let mut out = [0.0; N];
        for (k, wk) in w.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.y[start + k].iter()) {
                *o += wk * v;
            }
        }
        out
    }

    /// Index of the sample closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let k = ((r.ln() - self.log_r0) / self.step).round();
        (k.max(0.0) as usize).min(self.len() - 1)
    }
}

struct LogSystem<F> {
    rhs: F,
    r_start: f64,
    direction: f64,
}

/// The clock component starts here rather than at zero so its error weight
/// `atol + rtol·|y|` is never dominated by a vanishing value.
const CLOCK_OFFSET: f64 = 1.0;

struct Autonomous<F, const N: usize>(LogSystem<F>);

impl<F, const N: usize> System<f64, DVector<f64>> for Autonomous<F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn system(&self, _s: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let sys = &self.0;
        let r = sys.r_start * (sys.direction * (y[N] - CLOCK_OFFSET)).exp();
        let state: [f64; N] = std::array::from_fn(|i| y[i]);
        let d = (sys.rhs)(r, &state);
        for i in 0..N {
            dy[i] = sys.direction * d[i];
        }
        dy[N] = 1.0;
    }
}

/// Integrates `dy/d(ln r) = rhs(r, y)` from `r_start` to `r_end` and returns
/// `intervals + 1` dense samples, uniformly spaced in `ln r`.
pub fn integrate_log<const N: usize, F>(
    rhs: F,
    r_start: f64,
    r_end: f64,
    y0: [f64; N],
    intervals: usize,
    tol: Tolerance,
) -> Result<LogGridPath<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(r_start > 0.0 && r_end > 0.0) || r_start == r_end || intervals < 6 {
        return Err(Error::InvalidInput(format!(
            "log-grid integration needs 0 < r_start != r_end and >= 6 intervals (got {r_start}, {r_end}, {intervals})"
        )));
    }
    let direction = if r_end > r_start { 1.0 } else { -1.0 };
    let span = (r_end / r_start).ln().abs();
    let step = span / intervals as f64;
    let system = LogSystem {
        rhs,
        r_start,
        direction,
    };
    let mut init = DVector::zeros(N + 1);
    init.rows_mut(0, N).copy_from_slice(&y0);
    init[N] = CLOCK_OFFSET;
    let mut solver = Dop853::from_param(
        Autonomous::<F, N>(system),
        0.0,
        span,
        step,
        init,
        tol.rtol,
        tol.atol,
        0.9,
        0.0,
        0.333,
        6.0,
        span,
        0.0,
        1_000_000,
        1000,
        ode_solvers::OutputType::Dense,
    );
    solver.integrate().map_err(|e| Error::Integration(format!("{e:?}")))?;

    let xs = solver.x_out();
    let ys = solver.y_out();
    if xs.len() < intervals + 1 {
        return Err(Error::Integration(format!(
            "dense output returned {} samples, expected {}",
            xs.len(),
            intervals + 1
        )));
    }
    let mut y: Vec<[f64; N]> = ys[..=intervals].iter().map(|v| std::array::from_fn(|i| v[i])).collect();
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Integration("non-finite state".into()));
    }
    let log_start = r_start.ln();
    let mut r: Vec<f64> = (0..=intervals)
        .map(|k| (log_start + direction * k as f64 * step).exp())
        .collect();
    if direction < 0.0 {
        r.reverse();
        y.reverse();
    }
    Ok(LogGridPath {
        log_r0: r[0].ln(),
        step,
        r,
        y,
    })
}

struct Reversible<F, const N: usize> {
    rhs: F,
    sign: f64,
}

impl<F, const N: usize> System<f64, DVector<f64>> for Reversible<F, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    fn system(&self, _s: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let state: [f64; N] = std::array::from_fn(|i| y[i]);
        let d = (self.rhs)(&state);
        for i in 0..N {
            dy[i] = self.sign * d[i];
        }
    }
}

/// Advances the autonomous system `dy/dt = rhs(y)` from `t0` to `t1` (either
/// direction) and returns the end state.
pub fn advance_autonomous<const N: usize, F>(rhs: F, y0: [f64; N], t0: f64, t1: f64, tol: Tolerance) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    if t0 == t1 {
        return Ok(y0);
    }
    let span = (t1 - t0).abs();
    let sign = (t1 - t0).signum();
    let mut solver = Dop853::from_param(
        Reversible::<F, N> { rhs, sign },
        0.0,
        span,
        span,
        DVector::from_column_slice(&y0),
        tol.rtol,
        tol.atol,
        0.9,
        0.0,
        0.333,
        6.0,
        span,
        0.0,
        10_000_000,
        // relaxation onto a slow branch is step-size limited by design;
        // the stiffness heuristic would abort such sweeps
        u32::MAX,
        ode_solvers::OutputType::Sparse,
    );
    solver.integrate().map_err(|e| Error::Integration(format!("{e:?}")))?;
    let reached = solver.x_out().last().copied().unwrap_or(0.0);
    if (reached - span).abs() > 1e-9 * span {
        return Err(Error::Integration(format!("stopped at {reached} of {span}")));
    }
    let last = solver
        .y_out()
        .last()
        .ok_or_else(|| Error::Integration("no output".into()))?;
    let out: [f64; N] = std::array::from_fn(|i| last[i]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration("non-finite state".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_equation_is_exact_power() {
        // r^2 y'' + r y' - 4 y = 0 has y = r^2; in ln r: (y, r y') -> (r y', 4 y)
        let rhs = |_r: f64, y: &[f64; 2]| [y[1], 4.0 * y[0]];
        let path = integrate_log(rhs, 1e-2, 1e2, [1e-4, 2e-4], 400, Tolerance::default()).unwrap();
        assert_eq!(path.len(), 401);
        for (r, y) in path.r.iter().zip(&path.y) {
            assert!((y[0] / (r * r) - 1.0).abs() < 1e-10, "r={r} y={}", y[0]);
        }
        let mid = path.at(3.7);
        assert!((mid[0] / (3.7 * 3.7) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn backward_sweep_is_ascending() {
        let rhs = |_r: f64, y: &[f64; 1]| [-3.0 * y[0]];
        let path = integrate_log(rhs, 10.0, 0.1, [1e-3], 200, Tolerance::default()).unwrap();
        assert!(path.r.windows(2).all(|w| w[0] < w[1]));
        // y = r^-3 through (10, 1e-3)
        let y = path.at(0.5)[0];
        assert!((y / 0.5f64.powi(-3) - 1.0).abs() < 1e-9);
        assert!((path.r_min() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn autonomous_both_directions() {
        let tol = Tolerance {
            rtol: 1e-12,
            atol: 1e-14,
        };
        let y = advance_autonomous(|y: &[f64; 2]| [y[1], -y[0]], [0.0, 1.0], 0.0, 2.0, tol).unwrap();
        assert!((y[0] - 2f64.sin()).abs() < 1e-11 && (y[1] - 2f64.cos()).abs() < 1e-11);
        let back = advance_autonomous(|y: &[f64; 2]| [y[1], -y[0]], y, 2.0, 0.0, tol).unwrap();
        assert!(back[0].abs() < 1e-11 && (back[1] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_degenerate_interval() {
        assert!(integrate_log(|_, y: &[f64; 1]| *y, 1.0, 1.0, [1.0], 10, Tolerance::default()).is_err());
    }
}
