//! Linear least squares and one-dimensional minimisation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// `‖A c − b‖ / ‖b‖`.
    pub relative_residual: f64,
}

/// Least-squares solution of `Σ_j c_j basis_j(x_i) ≈ y_i` via SVD.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let m = rows.len();
    if m == 0 || m != y.len() {
        return Err(Error::InvalidInput(
            "least squares needs matching non-empty rows".into(),
        ));
    }
    let n = rows[0].len();
    if m < n {
        return Err(Error::InvalidInput(format!("{m} samples cannot fix {n} coefficients")));
    }
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let c = svd
        .solve(&b, 1e-14 * svd.singular_values.max())
        .map_err(|e| Error::LinearSolve(e.to_string()))?;
    let norm_b = b.norm();
    let res = (&a * &c - &b).norm();
    Ok(LinearFit {
        coefficients: c.iter().copied().collect(),
        relative_residual: if norm_b > 0.0 { res / norm_b } else { res },
    })
}

/// Fits `y ≈ exp(intercept) * x^slope` by a straight line in log-log coordinates.
pub fn power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.iter().chain(ys).any(|v| *v <= 0.0) {
        return Err(Error::InvalidInput("power-law fit needs positive data".into()));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, x.ln()]).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = least_squares(&rows, &ly)?;
    Ok((fit.coefficients[1], fit.coefficients[0], fit.relative_residual))
}

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_polynomial() {
        let xs: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x, x * x]).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 - x + 0.25 * x * x).collect();
        let fit = least_squares(&rows, &y).unwrap();
        for (c, e) in fit.coefficients.iter().zip([2.0, -1.0, 0.25]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!(fit.relative_residual < 1e-14);
    }

    #[test]
    fn power_law_slope() {
        let xs: Vec<f64> = (1..30).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.7)).collect();
        let (slope, intercept, _) = power_law(&xs, &ys).unwrap();
        assert!((slope + 1.7).abs() < 1e-12);
        assert!((intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_min(|x| (x - 0.37) * (x - 0.37), -1.0, 2.0, 1e-10);
        assert!((x - 0.37).abs() < 1e-9);
    }
}
