//! Richardson-extrapolated central differences, used to check closed forms
//! against their defining equations without hand-derived derivatives.

/// `(f(x), f'(x), f''(x))` from central differences with step `h`, `h/2`, `h/4`
/// combined by two rounds of Richardson extrapolation (error `O(h⁶)`).
pub fn derivatives<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> (f64, f64, f64) {
    let f0 = f(x);
    let d = |s: f64| {
        let (p, m) = (f(x + s), f(x - s));
        ((p - m) / (2.0 * s), (p - 2.0 * f0 + m) / (s * s))
    };
    let (a1, b1) = d(h);
    let (a2, b2) = d(h / 2.0);
    let (a3, b3) = d(h / 4.0);
    let rich = |v1: f64, v2: f64, v3: f64| {
        let w1 = (4.0 * v2 - v1) / 3.0;
        let w2 = (4.0 * v3 - v2) / 3.0;
        (16.0 * w2 - w1) / 15.0
    };
    (f0, rich(a1, a2, a3), rich(b1, b2, b3))
}

/// Sixth-order derivative `dy/ds` at interior points of a uniform grid with
/// spacing `h`; the three points at each end use one-sided fallbacks of
/// lower order.
pub fn uniform_derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n < 7 {
        for i in 0..n {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            out[i] = if a == b {
                0.0
            } else {
                (y[b] - y[a]) / ((b - a) as f64 * h)
            };
        }
        return out;
    }
    let c = [
        -1.0 / 60.0,
        3.0 / 20.0,
        -3.0 / 4.0,
        0.0,
        3.0 / 4.0,
        -3.0 / 20.0,
        1.0 / 60.0,
    ];
    for i in 3..n - 3 {
        out[i] = c.iter().enumerate().map(|(j, cj)| cj * y[i + j - 3]).sum::<f64>() / h;
    }
    // fourth-order one-sided stencils near the ends
    let fwd = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0];
    for i in 0..3 {
        out[i] = fwd.iter().enumerate().map(|(j, cj)| cj * y[i + j]).sum::<f64>() / h;
        let k = n - 1 - i;
        out[k] = -fwd.iter().enumerate().map(|(j, cj)| cj * y[k - j]).sum::<f64>() / h;
    }
    out
}
