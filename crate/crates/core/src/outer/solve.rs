//! Remainder solves for Ω and Z and extraction of their matching constants.
//!
//! With `S = Σ_j D_j b_j η_j` the spliced singular part, the unknown is the
//! bounded remainder `φ = Ω − S`, solving `Lφ = −L S` with `φ = 0` on the
//! excision circles and on `|y| = R`. Z is treated the same way with the Z
//! brackets and source `2Ω`. The constants are read off the ring means of
//! `φ/D_j` around each peak, where the axisymmetric part of the remainder is
//! `A + O(s)` plus the `(δ/s)⁴` trace of the Dirichlet condition at `s = δ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::fit::{golden_min, least_squares};
use crate::numerics::interp::lagrange_weights;
use crate::numerics::sparse::SparseLu;

use super::grid::{CompositeGrid, NodeKind, OuterDomain};
use super::singular::{spliced, Expansion};

/// Exponent of the slowest decaying non-axisymmetric remainder mode near a peak.
pub fn probe_exponent() -> f64 {
    5f64.sqrt() - 2.0
}

/// Window `[lo·δ, hi·δ]` of patch rings used in the fits.
const FIT_WINDOW: (f64, f64) = (2.0, 16.0);
/// Probe radii, in units of δ, reported alongside the fitted constant.
const PROBES: [f64; 3] = [2.0, 4.0, 8.0];
/// Largest admissible relative residual of the linear solves.
const SOLVE_TOLERANCE: f64 = 1e-10;

/// Remainder fields of one grid level plus everything read off them.
pub struct LevelSolution {
    pub grid: CompositeGrid,
    pub d: [f64; 2],
    /// `φ = Ω − S_Ω` at every node.
    pub omega_remainder: Vec<f64>,
    /// `ζ = Z − S_Z` at every node.
    pub z_remainder: Vec<f64>,
    pub summary: LevelSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: u32,
    pub delta: f64,
    pub r_outer: f64,
    pub h: f64,
    pub unknowns: usize,
    /// `A` at `a` and at `−a`.
    pub a_peaks: [f64; 2],
    pub b_peaks: [f64; 2],
    /// `(s, ring mean of φ/D)` at the probe radii, around `a`.
    pub a_probes: Vec<(f64, f64)>,
    pub b_probes: Vec<(f64, f64)>,
    /// Fitted exponent of the `cos θ` remainder mode around `a`.
    pub decay_exponent: f64,
    /// Largest reflection asymmetry of `φ` relative to `max|φ|`.
    pub symmetry_err: f64,
    pub max_remainder: f64,
    pub solve_residual: f64,
}

impl LevelSolution {
    /// Ω itself at node `i`.
    pub fn omega(&self, i: usize) -> f64 {
        self.omega_remainder[i] + spliced(Expansion::Omega, self.d, self.grid.xy[i]).0
    }
}

fn check_residual(res: f64) -> Result<()> {
    if res > SOLVE_TOLERANCE {
        return Err(Error::LinearSolve(format!(
            "relative residual {res:e} above {SOLVE_TOLERANCE:e}"
        )));
    }
    Ok(())
}

/// Remainder `φ` of Ω for the peak weights `d`.
pub fn solve_omega_remainder(grid: &CompositeGrid, lu: &SparseLu, d: [f64; 2]) -> Result<(Vec<f64>, f64)> {
    let rhs = grid.rhs(|_, y| -spliced(Expansion::Omega, d, y).1, |_| 0.0);
    let (phi, res) = lu.solve(&rhs)?;
    check_residual(res)?;
    Ok((phi, res))
}

/// Remainder `ζ` of Z, driven by `2Ω` with `Ω = φ + S_Ω`. Passing
/// `omega_remainder = None` drops Ω from the source; `singular = false` drops
/// the Z brackets.
pub fn solve_z_remainder(
    grid: &CompositeGrid,
    lu: &SparseLu,
    d: [f64; 2],
    omega_remainder: Option<&[f64]>,
    singular: bool,
) -> Result<(Vec<f64>, f64)> {
    let rhs = grid.rhs(
        |i, y| {
            let omega = match omega_remainder {
                Some(phi) => phi[i] + spliced(Expansion::Omega, d, y).0,
                None => 0.0,
            };
            let lz = if singular { spliced(Expansion::Z, d, y).1 } else { 0.0 };
            2.0 * omega - lz
        },
        |_| 0.0,
    );
    let (z, res) = lu.solve(&rhs)?;
    check_residual(res)?;
    Ok((z, res))
}

/// Fourier coefficient of order `n` on ring `i` of patch `p`
/// (mean for `n = 0`, `cos nθ` amplitude otherwise).
pub fn ring_mode(grid: &CompositeGrid, field: &[f64], p: usize, i: usize, n: u32) -> f64 {
    let ring = grid.ring(field, p, i);
    let m = ring.len() as f64;
    if n == 0 {
        return ring.iter().sum::<f64>() / m;
    }
    2.0 * ring
        .iter()
        .enumerate()
        .map(|(k, v)| v * (n as f64 * grid.patch_angle(k)).cos())
        .sum::<f64>()
        / m
}

fn window(grid: &CompositeGrid) -> Vec<usize> {
    let d = grid.domain.delta;
    (0..grid.rho.len())
        .filter(|&i| grid.rho[i] >= FIT_WINDOW.0 * d * (1.0 - 1e-12) && grid.rho[i] <= FIT_WINDOW.1 * d)
        .collect()
}

/// Constant term of the ring means of `field/scale` around peak `p`, fitted
/// with `{1, s, s², (δ/s)⁴}` over the ring window.
pub fn fit_constant(grid: &CompositeGrid, field: &[f64], p: usize, scale: f64) -> Result<f64> {
    let d = grid.domain.delta;
    let idx = window(grid);
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let s = grid.rho[i];
            vec![1.0, s, s * s, (d / s).powi(4)]
        })
        .collect();
    let ys: Vec<f64> = idx.iter().map(|&i| ring_mode(grid, field, p, i, 0) / scale).collect();
    Ok(least_squares(&rows, &ys)?.coefficients[0])
}

/// Ring means of `field/scale` around peak `p` interpolated to the probe radii.
pub fn probes(grid: &CompositeGrid, field: &[f64], p: usize, scale: f64) -> Vec<(f64, f64)> {
    let logs: Vec<f64> = grid.rho.iter().map(|r| r.ln()).collect();
    PROBES
        .iter()
        .map(|m| {
            let s = m * grid.domain.delta;
            let pos = logs.partition_point(|&v| v < s.ln());
            let i0 = pos.saturating_sub(2).min(logs.len() - 4);
            let w = lagrange_weights(&logs[i0..i0 + 4], s.ln());
            let v: f64 = (0..4).map(|k| w[k] * ring_mode(grid, field, p, i0 + k, 0)).sum();
            (s, v / scale)
        })
        .collect()
}

/// Exponent `γ` of the `cos θ` remainder mode around peak `p`, fitted with
/// `{s^γ(1 − (δ/s)^{2√5}), s, s²}` over the ring window; the second factor is
/// the companion mode `s^{−2−√5}` enforced by the Dirichlet condition at `δ`.
pub fn fit_decay_exponent(grid: &CompositeGrid, field: &[f64], p: usize) -> Result<f64> {
    let d = grid.domain.delta;
    let idx = window(grid);
    let ys: Vec<f64> = idx.iter().map(|&i| ring_mode(grid, field, p, i, 1)).collect();
    let gap = 2.0 * 5f64.sqrt();
    let misfit = |g: f64| {
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let s = grid.rho[i];
                vec![s.powf(g) * (1.0 - (d / s).powf(gap)), s, s * s]
            })
            .collect();
        least_squares(&rows, &ys)
            .map(|f| f.relative_residual)
            .unwrap_or(f64::INFINITY)
    };
    let g = golden_min(misfit, 0.02, 0.9, 1e-6);
    if !misfit(g).is_finite() {
        return Err(Error::PoorFit {
            what: "remainder decay exponent",
            residual: f64::INFINITY,
            limit: 1.0,
        });
    }
    Ok(g)
}

/// Largest violation of the two reflection symmetries of a field computed
/// with `D₁ = D₂`, sampled on the patch rings, relative to the field's size.
pub fn symmetry_error(grid: &CompositeGrid, field: &[f64]) -> f64 {
    let nt = grid.nt;
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for i in 0..grid.rho.len() {
        for k in 0..nt {
            let v = field[grid.patch_index(0, i, k)];
            // y₂ → −y₂ keeps the patch; y₁ → −y₁ swaps the peaks
            let flip_y = field[grid.patch_index(0, i, (nt - k) % nt)];
            let flip_x = field[grid.patch_index(1, i, (nt / 2 + nt - k) % nt)];
            worst = worst.max((v - flip_y).abs()).max((v - flip_x).abs());
            size = size.max(v.abs());
        }
    }
    if size > 0.0 {
        worst / size
    } else {
        0.0
    }
}

/// Full solve on one grid level: Ω and Z remainders, constants at both peaks,
/// probes, decay exponent and symmetry.
pub fn solve_level(domain: OuterDomain, d: [f64; 2]) -> Result<LevelSolution> {
    if !(d[0] > 0.0 && d[1] > 0.0) {
        return Err(Error::InvalidInput(format!("peak weights must be positive, got {d:?}")));
    }
    let grid = CompositeGrid::new(domain)?;
    let lu = grid.factor()?;
    let (phi, res_o) = solve_omega_remainder(&grid, &lu, d)?;
    let (zeta, res_z) = solve_z_remainder(&grid, &lu, d, Some(&phi), true)?;
    let a_peaks = [fit_constant(&grid, &phi, 0, d[0])?, fit_constant(&grid, &phi, 1, d[1])?];
    let b_peaks = [
        fit_constant(&grid, &zeta, 0, d[0])?,
        fit_constant(&grid, &zeta, 1, d[1])?,
    ];
    let max_remainder = phi
        .iter()
        .zip(&grid.kind)
        .filter(|(_, k)| **k != NodeKind::Inactive)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    let summary = LevelSummary {
        level: domain.level,
        delta: domain.delta,
        r_outer: domain.r_outer,
        h: domain.h(),
        unknowns: grid.len(),
        a_peaks,
        b_peaks,
        a_probes: probes(&grid, &phi, 0, d[0]),
        b_probes: probes(&grid, &zeta, 0, d[0]),
        decay_exponent: fit_decay_exponent(&grid, &phi, 0)?,
        symmetry_err: symmetry_error(&grid, &phi),
        max_remainder,
        solve_residual: res_o.max(res_z),
    };
    Ok(LevelSolution {
        grid,
        d,
        omega_remainder: phi,
        z_remainder: zeta,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementEntry {
    pub delta: f64,
    pub r_outer: f64,
    pub h: f64,
    pub a: f64,
    pub b: f64,
}

/// Refinement study over grid levels `1..=levels`.
#[derive(Debug, Clone, Serialize)]
pub struct OuterStudy {
    pub d: [f64; 2],
    pub levels: Vec<LevelSummary>,
    pub refinement_history: Vec<RefinementEntry>,
    /// Second-order Richardson extrapolation of the two finest levels.
    pub a_estimate: f64,
    /// Difference of the two finest levels (infinite with a single level).
    pub a_err: f64,
    pub b_estimate: f64,
    pub b_err: f64,
    /// `|X₁ − X₂| / |X₂ − X₃|` over the last three levels (`None` with fewer).
    pub a_convergence_ratio: Option<f64>,
    pub b_convergence_ratio: Option<f64>,
    /// `A` and `B` at `−a` on the finest level minus those at `a`.
    pub a_peak_gap: f64,
    pub b_peak_gap: f64,
    pub decay_exponent: f64,
    pub symmetry_err: f64,
}

fn richardson(values: &[f64]) -> (f64, f64) {
    match values {
        [] => (f64::NAN, f64::INFINITY),
        [v] => (*v, f64::INFINITY),
        [.., p, q] => (q + (q - p) / 3.0, (q - p).abs()),
    }
}

fn ratio(values: &[f64]) -> Option<f64> {
    match values {
        [.., a, b, c] => Some((a - b).abs() / (b - c).abs()),
        _ => None,
    }
}

/// Solves every level up to `levels` and extrapolates the constants. The
/// finest level is returned alongside the study for field output.
pub fn refine(delta: f64, r_outer: f64, levels: u32, d: [f64; 2]) -> Result<(OuterStudy, LevelSolution)> {
    if levels == 0 {
        return Err(Error::InvalidInput("need at least one refinement level".into()));
    }
    let mut summaries = Vec::new();
    let mut last = None;
    for level in 1..=levels {
        let sol = solve_level(OuterDomain::new(delta, r_outer, level)?, d)?;
        summaries.push(sol.summary.clone());
        last = Some(sol);
    }
    let last = last.expect("at least one level");
    let a: Vec<f64> = summaries.iter().map(|s| 0.5 * (s.a_peaks[0] + s.a_peaks[1])).collect();
    let b: Vec<f64> = summaries.iter().map(|s| 0.5 * (s.b_peaks[0] + s.b_peaks[1])).collect();
    let (a_estimate, a_err) = richardson(&a);
    let (b_estimate, b_err) = richardson(&b);
    let fine = summaries.last().expect("non-empty");
    let study = OuterStudy {
        d,
        refinement_history: summaries
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(s, (a, b))| RefinementEntry {
                delta: s.delta,
                r_outer: s.r_outer,
                h: s.h,
                a: *a,
                b: *b,
            })
            .collect(),
        a_estimate,
        a_err,
        b_estimate,
        b_err,
        a_convergence_ratio: ratio(&a),
        b_convergence_ratio: ratio(&b),
        a_peak_gap: fine.a_peaks[1] - fine.a_peaks[0],
        b_peak_gap: fine.b_peaks[1] - fine.b_peaks[0],
        decay_exponent: fine.decay_exponent,
        symmetry_err: fine.symmetry_err,
        levels: summaries,
    };
    Ok((study, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::diff::derivatives;
    use crate::outer::singular::drift;

    fn coarse_grid() -> CompositeGrid {
        CompositeGrid::new(OuterDomain::new(0.05, 20.0, 1).unwrap()).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_z() {
        let g = coarse_grid();
        let lu = g.factor().unwrap();
        let (z, _) = solve_z_remainder(&g, &lu, [8.0, 8.0], None, false).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert_eq!(fit_constant(&g, &z, 0, 8.0).unwrap(), 0.0);
    }

    fn smooth(y: [f64; 2]) -> f64 {
        (-(y[0] * y[0] + y[1] * y[1]) / 16.0).exp() * (1.0 + 0.3 * y[0] + 0.2 * y[0] * y[1])
    }

    fn manufactured_error(level: u32) -> f64 {
        let g = CompositeGrid::new(OuterDomain::new(0.05, 20.0, level).unwrap()).unwrap();
        let lu = g.factor().unwrap();
        let src = |y: [f64; 2]| {
            let (v, fx, fxx) = derivatives(|x| smooth([x, y[1]]), y[0], 1e-2);
            let (_, fy, fyy) = derivatives(|t| smooth([y[0], t]), y[1], 1e-2);
            let c = drift(y);
            fxx + fyy + c[0] * fx + c[1] * fy - v
        };
        let rhs = g.rhs(|_, y| src(y), smooth);
        let (u, res) = lu.solve(&rhs).unwrap();
        assert!(res < 1e-10);
        (0..g.len())
            .filter(|&i| g.kind[i] != NodeKind::Inactive)
            .map(|i| (u[i] - smooth(g.xy[i])).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let e1 = manufactured_error(1);
        let e2 = manufactured_error(2);
        assert!(e1 < 1e-2, "{e1}");
        assert!(e1 / e2 > 3.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn coarse_level_properties() {
        let d = [8.0, 8.0];
        let sol = solve_level(OuterDomain::new(0.05, 20.0, 1).unwrap(), d).unwrap();
        let s = &sol.summary;
        assert!(s.symmetry_err < 1e-9, "{}", s.symmetry_err);
        assert!((s.a_peaks[0] - s.a_peaks[1]).abs() < 1e-9);
        assert!(s.max_remainder.is_finite() && s.max_remainder < 10.0);
        assert!(s.a_peaks[0].is_finite() && s.b_peaks[0].is_finite());
        // Ω is reproduced on the excision circle
        let i = sol.grid.patch_index(0, 0, 3);
        let want = crate::outer::singular::bracket(Expansion::Omega, crate::outer::singular::PEAK, sol.grid.xy[i]);
        assert!((sol.omega(i) / d[0] - want).abs() < 1e-12 * want);

        // doubling the weights doubles the fields and leaves the constants alone
        let lu = sol.grid.factor().unwrap();
        let (phi2, _) = solve_omega_remainder(&sol.grid, &lu, [16.0, 16.0]).unwrap();
        let a2 = fit_constant(&sol.grid, &phi2, 0, 16.0).unwrap();
        assert!((a2 - s.a_peaks[0]).abs() < 1e-12);
        let (z2, _) = solve_z_remainder(&sol.grid, &lu, [16.0, 16.0], Some(&phi2), true).unwrap();
        let b2 = fit_constant(&sol.grid, &z2, 0, 16.0).unwrap();
        assert!((b2 - s.b_peaks[0]).abs() < 1e-12);
    }

    #[test]
    fn richardson_and_ratio() {
        let (e, err) = richardson(&[1.0, 0.25]);
        assert!((e - 0.0).abs() < 1e-15 && (err - 0.75).abs() < 1e-15);
        assert_eq!(richardson(&[2.0]).1, f64::INFINITY);
        assert_eq!(ratio(&[1.0, 0.5, 0.375]), Some(4.0));
    }
}
