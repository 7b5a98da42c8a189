//! Quadrature helpers: adaptive double-exponential rule for smooth integrands and
//! fourth-order cumulative sums on uniform grids.

use crate::error::{Error, Result};

/// Integral of `f` over `[a, b]` to the requested absolute error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let out = quadrature::double_exponential::integrate(f, a, b, abs_tol);
    if !out.integral.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
    }
    if out.error_estimate > abs_tol.max(1e-15 * out.integral.abs()) * 1e3 {
        return Err(Error::Quadrature(format!(
            "error estimate {:e} on [{a}, {b}] exceeds tolerance {abs_tol:e}",
            out.error_estimate
        )));
    }
    Ok(out.integral)
}

/// Running integral `F_k = ∫_{x_0}^{x_k} f` for samples `f_k` on a uniform grid of
/// spacing `h`. Each interval uses the cubic through four neighbouring samples.
pub fn cumulative_uniform(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
        }
        return out;
    }
    let c = h / 24.0;
    for i in 0..n - 1 {
        let f = values;
        let piece = if i == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            c * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_exponential_matches_closed_form() {
        let v = integrate(|x: f64| x.ln(), 1.0, 3.0, 1e-14).unwrap();
        assert!((v - (3.0 * 3f64.ln() - 2.0)).abs() < 1e-13);
    }

    #[test]
    fn cumulative_rule_is_exact_for_cubics() {
        let h = 0.1;
        let xs: Vec<f64> = (0..31).map(|k| k as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| 1.0 + x - 2.0 * x * x + x * x * x).collect();
        let acc = cumulative_uniform(&f, h);
        for (x, a) in xs.iter().zip(&acc) {
            let exact = x + x * x / 2.0 - 2.0 * x.powi(3) / 3.0 + x.powi(4) / 4.0;
            assert!((a - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn cumulative_rule_converges_at_fourth_order() {
        let err = |n: usize| {
            let h = std::f64::consts::PI / n as f64;
            let f: Vec<f64> = (0..=n).map(|k| (k as f64 * h).sin()).collect();
            (cumulative_uniform(&f, h)[n] - 2.0).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
