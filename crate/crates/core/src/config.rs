//! Stationary peak configurations.
//!
//! A configuration `{y_j}` is stationary when every peak balances the self-similar
//! drift `y_j/2` against the logarithmic attraction of the others:
//! `y_j/2 − 4 Σ_{ℓ≠j} (y_j − y_ℓ)/|y_j − y_ℓ|² = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub points: Vec<Point>,
}

impl PointConfig {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a configuration needs at least two points".into()));
        }
        let c = Self { points };
        c.check_distinct()?;
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Smallest pairwise distance together with the indices attaining it.
    pub fn min_distance(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let d = dist(self.points[i], self.points[j]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        best
    }

    fn check_distinct(&self) -> Result<()> {
        let (d, i, j) = self.min_distance();
        if d.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::CoincidentPoints {
                first: i,
                second: j,
                distance: d,
            });
        }
        Ok(())
    }

    pub fn rotated(&self, angle: f64) -> Self {
        Self {
            points: self.points.iter().map(|&p| rotate(p, angle)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    pub xs: Vec<f64>,
}

impl LineConfig {
    pub fn new(xs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidInput(
                "a line configuration needs at least two points".into(),
            ));
        }
        if let Some(k) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NotIncreasing { index: k + 1 });
        }
        Ok(Self { xs })
    }

    pub fn to_points(&self) -> PointConfig {
        PointConfig {
            points: self.xs.iter().map(|&x| [x, 0.0]).collect(),
        }
    }
}

/// Three collinear peaks on the horizontal axis plus a mirrored pair `(alpha, ±beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asym5State {
    pub xs: [f64; 3],
    pub alpha: f64,
    pub beta: f64,
}

impl Asym5State {
    pub fn to_points(&self) -> PointConfig {
        let mut points: Vec<Point> = self.xs.iter().map(|&x| [x, 0.0]).collect();
        points.push([self.alpha, self.beta]);
        points.push([self.alpha, -self.beta]);
        PointConfig { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub residual_max: f64,
    pub centroid: Point,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn rotate(p: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Per-point force imbalance.
pub fn residual(config: &PointConfig) -> Result<Vec<Point>> {
    config.check_distinct()?;
    Ok(residual_unchecked(&config.points))
}

fn residual_unchecked(points: &[Point]) -> Vec<Point> {
    points
        .iter()
        .enumerate()
        .map(|(j, &yj)| {
            let mut f = [0.5 * yj[0], 0.5 * yj[1]];
            for (l, &yl) in points.iter().enumerate() {
                if l == j {
                    continue;
                }
                let d = [yj[0] - yl[0], yj[1] - yl[1]];
                let d2 = d[0] * d[0] + d[1] * d[1];
                f[0] -= 4.0 * d[0] / d2;
                f[1] -= 4.0 * d[1] / d2;
            }
            f
        })
        .collect()
}

pub fn residual_max(config: &PointConfig) -> Result<f64> {
    Ok(max_norm(&residual(config)?))
}

fn max_norm(r: &[Point]) -> f64 {
    r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Sum of the positions (vanishes for every stationary configuration).
pub fn centroid(config: &PointConfig) -> Point {
    config
        .points
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]])
}

pub fn verify(config: &PointConfig, tol: f64) -> Result<Verification> {
    let residual_max = residual_max(config)?;
    let c = centroid(config);
    if residual_max > tol {
        return Err(Error::Divergence {
            iterations: 0,
            residual: residual_max,
        });
    }
    Ok(Verification {
        residual_max,
        centroid: c,
    })
}

/// Energy whose critical points on the line are the collinear stationary states.
pub fn line_energy(line: &LineConfig) -> Result<f64> {
    let xs = &line.xs;
    let mut e: f64 = xs.iter().map(|x| x * x / 4.0).sum();
    for (k, &xk) in xs.iter().enumerate() {
        for (l, &xl) in xs.iter().enumerate() {
            if k == l {
                continue;
            }
            let d = (xk - xl).abs();
            if d == 0.0 {
                return Err(Error::CoincidentPoints {
                    first: k.min(l),
                    second: k.max(l),
                    distance: 0.0,
                });
            }
            e -= 2.0 * d.ln();
        }
    }
    Ok(e)
}

/// Gradient of [`line_energy`]; equals the residual restricted to the line.
pub fn line_gradient(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .enumerate()
        .map(|(k, &xk)| {
            0.5 * xk
                - 4.0
                    * xs.iter()
                        .enumerate()
                        .filter(|&(l, _)| l != k)
                        .map(|(_, &xl)| 1.0 / (xk - xl))
                        .sum::<f64>()
        })
        .collect()
}

fn line_hessian(xs: &[f64]) -> DMatrix<f64> {
    let n = xs.len();
    let mut h = DMatrix::zeros(n, n);
    for k in 0..n {
        h[(k, k)] = 0.5;
        for l in 0..n {
            if l != k {
                let w = 4.0 / (xs[k] - xs[l]).powi(2);
                h[(k, k)] += w;
                h[(k, l)] = -w;
            }
        }
    }
    h
}

/// Unique collinear stationary configuration with `n` peaks.
pub fn solve_line(n: usize) -> Result<LineConfig> {
    if n < 2 {
        return Err(Error::InvalidInput("solve_line needs N >= 2".into()));
    }
    let spread = 2.0 * (n as f64).sqrt();
    let init: Vec<f64> = (0..n)
        .map(|k| spread * (2.0 * k as f64 / (n - 1) as f64 - 1.0))
        .collect();
    let mut line = solve_line_from(&LineConfig::new(init)?)?;
    // the minimiser is odd; remove rounding asymmetry
    let xs = line.xs.clone();
    for k in 0..n {
        line.xs[k] = 0.5 * (xs[k] - xs[n - 1 - k]);
    }
    Ok(line)
}

/// Damped Newton descent of the strictly convex line energy from an ordered start.
pub fn solve_line_from(init: &LineConfig) -> Result<LineConfig> {
    let mut xs = init.xs.clone();
    let mut energy = line_energy(init)?;
    for _ in 0..200 {
        let g = line_gradient(&xs);
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= 1e-12 {
            return LineConfig::new(xs);
        }
        let step = line_hessian(&xs)
            .cholesky()
            .ok_or(Error::SingularJacobian)?
            .solve(&DVector::from_column_slice(&g));
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = xs.iter().zip(step.iter()).map(|(x, s)| x - t * s).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered {
                let e = line_energy(&LineConfig { xs: trial.clone() })?;
                if e <= energy + 1e-14 * energy.abs() || t < 1e-12 {
                    xs = trial;
                    energy = e;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Divergence {
                    iterations: 0,
                    residual: gnorm,
                });
            }
        }
    }
    let g = line_gradient(&xs);
    Err(Error::Divergence {
        iterations: 200,
        residual: g.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    })
}

/// Regular `n`-gon of circumradius `2√(n−1)`.
pub fn polygon(n: usize) -> Result<PointConfig> {
    if n < 2 {
        return Err(Error::InvalidInput("polygon needs N >= 2".into()));
    }
    Ok(ring(n, 2.0 * ((n - 1) as f64).sqrt(), 0.0))
}

/// Regular `m`-gon of circumradius `2√(m+1)` around a peak at the origin.
pub fn polygon_with_center(m: usize) -> Result<PointConfig> {
    if m < 2 {
        return Err(Error::InvalidInput("polygon_with_center needs m >= 2".into()));
    }
    let mut c = ring(m, 2.0 * ((m + 1) as f64).sqrt(), 0.0);
    c.points.push([0.0, 0.0]);
    Ok(c)
}

fn ring(n: usize, radius: f64, phase: f64) -> PointConfig {
    let points = (0..n)
        .map(|j| {
            let t = phase + 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    PointConfig { points }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Steps are shortened so no pair gets closer than this.
    pub min_distance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 100,
            min_distance: 1e-8,
        }
    }
}

fn jacobian(points: &[Point]) -> DMatrix<f64> {
    let n = points.len();
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        jac[(2 * j, 2 * j)] += 0.5;
        jac[(2 * j + 1, 2 * j + 1)] += 0.5;
        for l in 0..n {
            if l == j {
                continue;
            }
            let d = [points[j][0] - points[l][0], points[j][1] - points[l][1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            let d4 = d2 * d2;
            // derivative of d/|d|^2 with respect to d
            let m = [
                [(d2 - 2.0 * d[0] * d[0]) / d4, -2.0 * d[0] * d[1] / d4],
                [-2.0 * d[0] * d[1] / d4, (d2 - 2.0 * d[1] * d[1]) / d4],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    jac[(2 * j + a, 2 * j + b)] -= 4.0 * m[a][b];
                    jac[(2 * j + a, 2 * l + b)] += 4.0 * m[a][b];
                }
            }
        }
    }
    jac
}

/// Newton iteration on the full planar system with backtracking.
///
/// Rotations map solutions to solutions, so the Jacobian at a solution always has a
/// kernel. The point farthest from the origin is rotated onto the horizontal axis
/// and its vertical coordinate is frozen; the rotation is undone on return.
pub fn solve_newton(init: &PointConfig, opts: &NewtonOptions) -> Result<PointConfig> {
    init.check_distinct()?;
    let n = init.n();
    let pin = (0..n)
        .max_by(|&a, &b| {
            let ra = init.points[a][0].hypot(init.points[a][1]);
            let rb = init.points[b][0].hypot(init.points[b][1]);
            ra.total_cmp(&rb)
        })
        .unwrap_or(0);
    let angle = init.points[pin][1].atan2(init.points[pin][0]);
    let mut pts = init.rotated(-angle).points;
    pts[pin][1] = 0.0;
    let frozen = 2 * pin + 1;

    let mut res = residual_unchecked(&pts);
    let mut norm = max_norm(&res);
    // a few extra steps past the tolerance pin down weakly determined directions
    let mut polish = 0;
    for iter in 0..opts.max_iter {
        if norm <= opts.tol {
            polish += 1;
        }
        if polish > 3 {
            let out = PointConfig {
                points: polish_extended(&pts, pin),
            }
            .rotated(angle);
            out.check_distinct()?;
            return Ok(out);
        }
        let full = jacobian(&pts);
        let cols: Vec<usize> = (0..2 * n).filter(|&c| c != frozen).collect();
        let reduced = DMatrix::from_fn(2 * n, 2 * n - 1, |i, k| full[(i, cols[k])]);
        let svd = reduced.svd(true, true);
        // Truncated pseudo-inverse: directions with negligible curvature are left
        // alone instead of amplifying rounding noise.
        let cutoff = 1e-9 * svd.singular_values.max();
        let rank_deficient = svd.singular_values.min() <= cutoff;
        let rhs = DVector::from_iterator(2 * n, res.iter().flatten().copied());
        let delta = svd.solve(&rhs, cutoff).map_err(|e| Error::LinearSolve(e.to_string()))?;
        let mut step = vec![0.0; 2 * n];
        for (k, &c) in cols.iter().enumerate() {
            step[c] = delta[k];
        }

        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let trial: Vec<Point> = (0..n)
                .map(|j| [pts[j][0] - t * step[2 * j], pts[j][1] - t * step[2 * j + 1]])
                .collect();
            let too_close = PointConfig { points: trial.clone() }.min_distance().0 < opts.min_distance;
            if !too_close {
                let r = residual_unchecked(&trial);
                let rn = max_norm(&r);
                if rn.is_finite() && (rn < norm || (norm <= opts.tol && rn <= opts.tol)) {
                    pts = trial;
                    res = r;
                    norm = rn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted && norm <= opts.tol {
            polish = usize::MAX / 2;
            continue;
        }
        if !accepted {
            if rank_deficient {
                return Err(Error::SingularJacobian);
            }
            return Err(Error::Divergence {
                iterations: iter,
                residual: norm,
            });
        }
    }
    if norm <= opts.tol {
        return Ok(PointConfig {
            points: polish_extended(&pts, pin),
        }
        .rotated(angle));
    }
    Err(Error::Divergence {
        iterations: opts.max_iter,
        residual: norm,
    })
}

type Dd = TwoFloat;

/// `1/y` to double-double accuracy; the crate's own quotient computes the
/// correction term `1 − y·(1/y)` in plain doubles.
fn recip(y: Dd) -> Dd {
    let t = Dd::from(1.0 / y.hi());
    let e = Dd::from(1.0) - y * t;
    t + e * t
}

fn residual_extended(points: &[[Dd; 2]]) -> Vec<Dd> {
    let mut out = Vec::with_capacity(2 * points.len());
    for (j, yj) in points.iter().enumerate() {
        let mut f = [yj[0] * 0.5, yj[1] * 0.5];
        for (l, yl) in points.iter().enumerate() {
            if l != j {
                let d = [yj[0] - yl[0], yj[1] - yl[1]];
                let inv = recip(d[0] * d[0] + d[1] * d[1]) * 4.0;
                f[0] -= d[0] * inv;
                f[1] -= d[1] * inv;
            }
        }
        out.extend(f);
    }
    out
}

fn jacobian_extended(points: &[[Dd; 2]]) -> Vec<Vec<Dd>> {
    let n = points.len();
    let zero = Dd::from(0.0);
    let mut jac = vec![vec![zero; 2 * n]; 2 * n];
    for j in 0..n {
        jac[2 * j][2 * j] += 0.5;
        jac[2 * j + 1][2 * j + 1] += 0.5;
        for l in (0..n).filter(|&l| l != j) {
            let d = [points[j][0] - points[l][0], points[j][1] - points[l][1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            let inv4 = recip(d2 * d2) * 4.0;
            let m = [
                [(d2 - d[0] * d[0] * 2.0) * inv4, -(d[0] * d[1] * 2.0) * inv4],
                [-(d[0] * d[1] * 2.0) * inv4, (d2 - d[1] * d[1] * 2.0) * inv4],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    jac[2 * j + a][2 * j + b] -= m[a][b];
                    jac[2 * j + a][2 * l + b] += m[a][b];
                }
            }
        }
    }
    jac
}

/// Gaussian elimination with partial pivoting; `None` on an exactly zero pivot.
fn solve_extended(mut a: Vec<Vec<Dd>>, mut b: Vec<Dd>) -> Option<Vec<Dd>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().hi().total_cmp(&a[j][k].abs().hi()))?;
        if a[p][k].hi() == 0.0 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        let inv = recip(a[k][k]);
        for i in k + 1..n {
            let f = a[i][k] * inv;
            for c in k..n {
                let v = a[k][c];
                a[i][c] -= f * v;
            }
            let v = b[k];
            b[i] -= f * v;
        }
    }
    let mut x = vec![Dd::from(0.0); n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k][c] * x[c];
        }
        x[k] = s * recip(a[k][k]);
    }
    Some(x)
}

/// Newton iteration in double-double arithmetic from a converged root.
///
/// Some roots (the regular 7-gon, the triangle with a centre) have null
/// directions of the Jacobian besides rotation. Along them the residual grows
/// only cubically, so a residual evaluated in doubles fixes the root to about
/// `(10⁻¹⁶)^{1/3}`. With the residual and Jacobian carried to ~32 digits plain
/// Newton keeps contracting those directions linearly. `pts` must have
/// `pts[pin]` on the horizontal axis; that vertical coordinate stays frozen and
/// the matching equation is dropped, being implied by the others through the
/// vanishing total torque.
fn polish_extended(pts: &[Point], pin: usize) -> Vec<Point> {
    const MAX_STEPS: usize = 200;
    let n = pts.len();
    let frozen = 2 * pin + 1;
    let mut y: Vec<[Dd; 2]> = pts.iter().map(|p| [Dd::from(p[0]), Dd::from(p[1])]).collect();
    let norm = |r: &[Dd]| r.iter().fold(0.0f64, |m, v| m.max(v.hi().abs()));
    let mut best = (norm(&residual_extended(&y)), y.clone());
    let mut quiet = 0;
    for _ in 0..MAX_STEPS {
        let res = residual_extended(&y);
        let jac = jacobian_extended(&y);
        let keep: Vec<usize> = (0..2 * n).filter(|&c| c != frozen).collect();
        let a = keep
            .iter()
            .map(|&i| keep.iter().map(|&c| jac[i][c]).collect())
            .collect();
        let b = keep.iter().map(|&i| res[i]).collect();
        let Some(step) = solve_extended(a, b) else { break };
        for (&c, s) in keep.iter().zip(&step) {
            y[c / 2][c % 2] -= *s;
        }
        let r = norm(&residual_extended(&y));
        if !r.is_finite() {
            break;
        }
        if r < best.0 {
            best = (r, y.clone());
        }
        // stop once the steps no longer move the double-precision coordinates
        let moved = step.iter().fold(0.0f64, |m, s| m.max(s.hi().abs()));
        quiet = if moved < 1e-17 { quiet + 1 } else { 0 };
        if quiet >= 3 {
            break;
        }
    }
    best.1
        .iter()
        .map(|p| [p[0].hi() + p[0].lo(), p[1].hi() + p[1].lo()])
        .collect()
}

/// Vertical offset of the mirrored pair: the root on `(2, ∞)` of
/// `1/8 = Σ_k 1/((α−x_k)² + β²) + 1/(2β²)`, whose right-hand side decreases in β.
pub fn asym5_beta(xs: &[f64; 3], alpha: f64) -> f64 {
    let g = |b: f64| xs.iter().map(|x| 1.0 / ((alpha - x).powi(2) + b * b)).sum::<f64>() + 0.5 / (b * b) - 0.125;
    let (mut lo, mut hi) = (2.0, 4.0);
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn asym5_state(xs: [f64; 3]) -> Asym5State {
    let alpha = -(xs[0] + xs[1] + xs[2]) / 2.0;
    let beta = asym5_beta(&xs, alpha);
    Asym5State { xs, alpha, beta }
}

/// Balance of the three collinear peaks with α, β slaved to them.
fn asym5_reduced(xs: [f64; 3]) -> [f64; 3] {
    let s = asym5_state(xs);
    std::array::from_fn(|k| {
        let xk = xs[k];
        let mut f = xk / 8.0;
        for (j, &xj) in xs.iter().enumerate() {
            if j != k {
                f -= 1.0 / (xk - xj);
            }
        }
        f - 2.0 * (xk - s.alpha) / ((s.alpha - xk).powi(2) + s.beta * s.beta)
    })
}

fn asym5_newton(seed: [f64; 3]) -> Option<Asym5State> {
    let mut xs = seed;
    let mut f = asym5_reduced(xs);
    let norm = |f: &[f64; 3]| f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..80 {
        if norm(&f) < 1e-14 {
            break;
        }
        let mut jac = nalgebra::Matrix3::<f64>::zeros();
        for c in 0..3 {
            let h = 1e-6 * xs[c].abs().max(1.0);
            let mut p = xs;
            let mut m = xs;
            p[c] += h;
            m[c] -= h;
            let (fp, fm) = (asym5_reduced(p), asym5_reduced(m));
            for r in 0..3 {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let step = jac.lu().solve(&nalgebra::Vector3::from(f))?;
        let mut t = 1.0;
        loop {
            let trial = [xs[0] - t * step[0], xs[1] - t * step[1], xs[2] - t * step[2]];
            if trial[0] < trial[1] && trial[1] < trial[2] {
                let ft = asym5_reduced(trial);
                if norm(&ft) < norm(&f) {
                    xs = trial;
                    f = ft;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-10 {
                return None;
            }
        }
    }
    let s = asym5_state(xs);
    let full = residual(&s.to_points()).ok()?;
    (max_norm(&full) <= 1e-10 && s.beta > 2.0).then_some(s)
}

/// Constructive search for a five-peak state made of three collinear peaks and a
/// mirrored pair: Newton on the three abscissas, with the pair's offset from the
/// centroid balance and its height from a monotone bisection.
pub fn solve_asymmetric5() -> Result<(Asym5State, PointConfig)> {
    let base = 2.0 * 3f64.sqrt();
    let mut seeds = vec![[-0.9 * base, 0.0, 0.9 * base]];
    for i in 0..8 {
        for j in 0..8 {
            let left = -1.0 - 0.75 * i as f64;
            let right = 1.0 + 0.75 * j as f64;
            for mid in [-0.5, 0.0, 0.5] {
                let m = mid * left.abs().min(right);
                seeds.push([left, m, right]);
            }
        }
    }
    for seed in seeds {
        if let Some(s) = asym5_newton(seed) {
            let cfg = s.to_points();
            return Ok((s, cfg));
        }
    }
    Err(Error::Divergence {
        iterations: 80,
        residual: f64::NAN,
    })
}

/// A named stationary configuration paired with its closed-form reference.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub computed: PointConfig,
    pub reference: PointConfig,
}

fn line_reference(xs: &[f64]) -> PointConfig {
    PointConfig {
        points: xs.iter().map(|&x| [x, 0.0]).collect(),
    }
}

/// Deterministic, non-symmetric relative nudge of every point by about `scale`.
pub fn perturbed(c: &PointConfig, scale: f64) -> PointConfig {
    let points = c
        .points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let t = 0.7 + 1.3 * j as f64;
            [
                p[0] * (1.0 + scale * t.sin()) + scale * t.cos(),
                p[1] * (1.0 - scale * t.cos()) + scale * (2.0 * t).sin(),
            ]
        })
        .collect();
    PointConfig { points }
}

/// The nine explicit configurations for N = 2..5, each recomputed by a solver.
pub fn catalog() -> Result<Vec<CatalogEntry>> {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let s10 = 10f64.sqrt();
    let opts = NewtonOptions::default();

    let r4 = 2.0 * (s6 + 3.0).sqrt();
    let t4 = (5.0 - 2.0 * s6).sqrt();
    let r5 = s3 / 3.0 * 10f64.powf(0.25) * (s10 - 2.0).sqrt() * (s10 + 2.0);
    let t5 = (7.0 / 3.0 - 2.0 / 3.0 * s10).sqrt();

    let center = |m: usize, init_radius: f64| -> Result<PointConfig> {
        // symmetric seed: the triangle+center root is degenerate (its Jacobian has
        // two null directions besides rotation) so off-symmetry seeds converge slowly
        let mut seed = ring(m, init_radius, 0.0);
        seed.points.push([0.0, 0.0]);
        solve_newton(&seed, &opts)
    };

    Ok(vec![
        CatalogEntry {
            name: "pair",
            computed: solve_line(2)?.to_points(),
            reference: line_reference(&[-2.0, 2.0]),
        },
        CatalogEntry {
            name: "line3",
            computed: solve_line(3)?.to_points(),
            reference: line_reference(&[-2.0 * s3, 0.0, 2.0 * s3]),
        },
        CatalogEntry {
            name: "triangle",
            computed: solve_newton(&perturbed(&polygon(3)?, 0.01), &opts)?,
            reference: ring(3, 2.0 * 2f64.sqrt(), 0.0),
        },
        CatalogEntry {
            name: "line4",
            computed: solve_line(4)?.to_points(),
            reference: line_reference(&[-r4, -t4 * r4, t4 * r4, r4]),
        },
        CatalogEntry {
            name: "square",
            computed: solve_newton(&perturbed(&polygon(4)?, 0.01), &opts)?,
            reference: ring(4, 2.0 * s3, 0.0),
        },
        CatalogEntry {
            name: "triangle_center",
            computed: center(3, 3.9)?,
            reference: {
                let mut c = ring(3, 4.0, 0.0);
                c.points.push([0.0, 0.0]);
                c
            },
        },
        CatalogEntry {
            name: "line5",
            computed: solve_line(5)?.to_points(),
            reference: line_reference(&[-r5, -t5 * r5, 0.0, t5 * r5, r5]),
        },
        CatalogEntry {
            name: "pentagon",
            computed: solve_newton(&perturbed(&polygon(5)?, 0.01), &opts)?,
            reference: ring(5, 4.0, 0.0),
        },
        CatalogEntry {
            name: "square_center",
            computed: center(4, 4.4)?,
            reference: {
                let mut c = ring(4, 2.0 * 5f64.sqrt(), 0.0);
                c.points.push([0.0, 0.0]);
                c
            },
        },
    ])
}

/// Rotation-invariant distance between two configurations: the largest mismatch of
/// the sorted radii and of the sorted pairwise distances.
pub fn shape_distance(a: &PointConfig, b: &PointConfig) -> f64 {
    if a.n() != b.n() {
        return f64::INFINITY;
    }
    let sorted = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v
    };
    let radii = |c: &PointConfig| sorted(c.points.iter().map(|p| p[0].hypot(p[1])).collect());
    let pairs = |c: &PointConfig| {
        let mut v = Vec::new();
        for i in 0..c.n() {
            for j in i + 1..c.n() {
                v.push(dist(c.points[i], c.points[j]));
            }
        }
        sorted(v)
    };
    let max_diff = |x: Vec<f64>, y: Vec<f64>| x.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    max_diff(radii(a), radii(b)).max(max_diff(pairs(a), pairs(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hermite_zeros(n: usize) -> Vec<f64> {
        // Golub-Welsch: eigenvalues of the Jacobi matrix of the physicists' Hermite weight
        let jm = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut z: Vec<f64> = jm.symmetric_eigenvalues().iter().copied().collect();
        z.sort_by(f64::total_cmp);
        z
    }

    #[test]
    fn residual_examples() {
        let pair = PointConfig::new(vec![[2.0, 0.0], [-2.0, 0.0]]).unwrap();
        assert!(residual_max(&pair).unwrap() < 1e-14);
        assert!(residual_max(&pair.rotated(0.83)).unwrap() < 1e-14);
        let wide = PointConfig::new(vec![[3.0, 0.0], [-3.0, 0.0]]).unwrap();
        let r = residual(&wide).unwrap();
        assert!((r[0][0] - 5.0 / 6.0).abs() < 1e-15 && r[0][1] == 0.0);
    }

    #[test]
    fn coincident_points_are_named() {
        let c = PointConfig {
            points: vec![[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        match residual(&c) {
            Err(Error::CoincidentPoints { first, second, .. }) => assert_eq!((first, second), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn centroid_examples() {
        let c = PointConfig {
            points: vec![[1.0, 0.0]; 3],
        };
        assert_eq!(centroid(&c), [3.0, 0.0]);
        let c = centroid(&polygon(2).unwrap());
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15);
    }

    #[test]
    fn line_energy_of_pair() {
        let e = line_energy(&LineConfig::new(vec![-2.0, 2.0]).unwrap()).unwrap();
        assert!((e - (2.0 - 4.0 * 4f64.ln())).abs() < 1e-14);
        // symmetric pair is minimised at a = 2
        let a = crate::numerics::fit::golden_min(
            |a| line_energy(&LineConfig { xs: vec![-a, a] }).unwrap(),
            0.5,
            5.0,
            1e-10,
        );
        assert!((a - 2.0).abs() < 1e-7);
    }

    #[test]
    fn line_solutions_are_scaled_hermite_zeros() {
        for n in 2..=8 {
            let line = solve_line(n).unwrap();
            let z = hermite_zeros(n);
            for (x, z) in line.xs.iter().zip(&z) {
                assert!((x - 2.0 * 2f64.sqrt() * z).abs() < 1e-10, "n={n}");
            }
            let g = line_gradient(&line.xs);
            assert!(g.iter().all(|v| v.abs() <= 1e-12));
        }
        let l3 = solve_line(3).unwrap();
        assert!((l3.xs[2] - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn polygons_are_stationary() {
        for n in 2..=12 {
            assert!(residual_max(&polygon(n).unwrap()).unwrap() <= 1e-12, "n={n}");
        }
        for m in [3, 4, 5] {
            assert!(residual_max(&polygon_with_center(m).unwrap()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn newton_recovers_square() {
        let sol = solve_newton(&perturbed(&polygon(4).unwrap(), 0.01), &NewtonOptions::default()).unwrap();
        for p in &sol.points {
            assert!((p[0].hypot(p[1]) - 2.0 * 3f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn heptagon_is_pinned_despite_flat_directions() {
        // the regular 7-gon has two null directions besides rotation
        let sol = solve_newton(&perturbed(&polygon(7).unwrap(), 0.01), &NewtonOptions::default()).unwrap();
        let c = centroid(&sol);
        for p in &sol.points {
            assert!(((p[0] - c[0]).hypot(p[1] - c[1]) - 2.0 * 6f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn extended_reciprocal() {
        for y in [3.0, 7.1, -0.3, 1e5] {
            let y = Dd::from(y) + Dd::from(y * 1e-17);
            let e = y * recip(y) - Dd::from(1.0);
            assert!(e.hi().abs() < 1e-30, "{e:?}");
        }
    }

    #[test]
    fn newton_rejects_coincident_seed() {
        let c = PointConfig {
            points: vec![[1.0, 1.0], [1.0, 1.0]],
        };
        assert!(solve_newton(&c, &NewtonOptions::default()).is_err());
    }

    #[test]
    fn asymmetric_five_is_verified() {
        let (state, cfg) = solve_asymmetric5().unwrap();
        assert!(state.beta > 2.0);
        assert!(residual_max(&cfg).unwrap() <= 1e-10);
        let c = centroid(&cfg);
        assert!(c[0].abs() < 1e-10 && c[1].abs() < 1e-10);
        assert!((state.alpha + (state.xs.iter().sum::<f64>()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn catalog_matches_references() {
        for e in catalog().unwrap() {
            let v = verify(&e.computed, 1e-10).unwrap();
            assert!(
                v.centroid[0].abs() <= 1e-10 && v.centroid[1].abs() <= 1e-10,
                "{}",
                e.name
            );
            assert!(shape_distance(&e.computed, &e.reference) <= 1e-8, "{}", e.name);
            assert!(residual_max(&e.reference).unwrap() <= 1e-10, "{}", e.name);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn residual_is_rotation_equivariant(theta in -3.2f64..3.2) {
            let c = PointConfig::new(vec![[1.0, 0.3], [-0.4, 2.0], [0.7, -1.1], [3.0, 0.2]]).unwrap();
            let r = residual(&c).unwrap();
            let rr = residual(&c.rotated(theta)).unwrap();
            for (a, b) in r.iter().zip(&rr) {
                let ra = rotate(*a, theta);
                prop_assert!((ra[0] - b[0]).abs() < 1e-12 && (ra[1] - b[1]).abs() < 1e-12);
            }
        }

        #[test]
        fn gradient_matches_finite_differences(
            xs in prop::collection::vec(-5.0f64..5.0, 2..7)
        ) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            prop_assume!(xs.windows(2).all(|w| w[1] - w[0] > 0.05));
            let g = line_gradient(&xs);
            let h = 1e-6;
            for k in 0..xs.len() {
                let mut p = xs.clone();
                let mut m = xs.clone();
                p[k] += h;
                m[k] -= h;
                let fd = (line_energy(&LineConfig { xs: p }).unwrap()
                    - line_energy(&LineConfig { xs: m }).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0));
            }
            // and the gradient is the on-axis residual
            let r = residual(&LineConfig { xs: xs.clone() }.to_points()).unwrap();
            for (a, b) in r.iter().zip(&g) {
                prop_assert!((a[0] - b).abs() < 1e-12);
            }
        }

        #[test]
        fn line_solution_is_unique_and_odd(n in 2usize..=8, seed in prop::collection::vec(0.1f64..3.0, 8)) {
            let mut x = -10.0;
            let init: Vec<f64> = seed[..n].iter().map(|d| { x += d; x }).collect();
            let sol = solve_line_from(&LineConfig::new(init).unwrap()).unwrap();
            let reference = solve_line(n).unwrap();
            for (a, b) in sol.xs.iter().zip(&reference.xs) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
            for k in 0..n {
                prop_assert!((reference.xs[k] + reference.xs[n - 1 - k]).abs() <= 1e-10);
            }
        }
    }
}
