//! Closed-form pieces of the two-peak outer problem: the drift of the outer
//! operator, the leading outer potential gradient, the local singular
//! expansions of Ω and Z near each peak, and the cutoff used to splice them
//! into the discrete problem.

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Peak location `a`; the second peak sits at `−a`.
pub const PEAK: Vec2 = [2.0, 0.0];

fn dot(u: Vec2, v: Vec2) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn sub(u: Vec2, v: Vec2) -> Vec2 {
    [u[0] - v[0], u[1] - v[1]]
}

/// `∇W₀(y) = −4(y−a)/|y−a|² − 4(y+a)/|y+a|²`.
pub fn w0_grad(y: Vec2) -> Result<Vec2> {
    let mut g = [0.0; 2];
    for c in [PEAK, [-PEAK[0], -PEAK[1]]] {
        let d = sub(y, c);
        let r2 = dot(d, d);
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        g[0] -= 4.0 * d[0] / r2;
        g[1] -= 4.0 * d[1] / r2;
    }
    Ok(g)
}

/// Regular part of `∇W₀` near the peak `a`, i.e. `∇W₀ + 4Y/|Y|²` with `Y = y − a`,
/// as the Taylor polynomial through cubic order (plus the single quartic
/// term that is customarily carried along with it).
pub fn w0_grad_taylor(a: Vec2, y_rel: Vec2) -> Vec2 {
    let a2 = dot(a, a);
    let ay = dot(a, y_rel);
    let yy = dot(y_rel, y_rel);
    let mut out = [0.0; 2];
    for i in 0..2 {
        let (ai, yi) = (a[i], y_rel[i]);
        out[i] = -2.0 * ai / a2 - yi / a2 + 2.0 * ai * ay / (a2 * a2) + yy * ai / (2.0 * a2 * a2)
            - 2.0 * ay * ay * ai / a2.powi(3)
            + ay * yi / (a2 * a2)
            - ay * yy * ai / a2.powi(3)
            - yy * yy * ai / (16.0 * a2.powi(3))
            + 2.0 * ay.powi(3) * ai / a2.powi(4)
            + yy * yi / (4.0 * a2 * a2)
            - ay * ay * yi / a2.powi(3);
    }
    out
}

/// Drift of the outer operator `L = Δ + drift·∇ − 1`:
/// `−y/2 + 4(y−a)/|y−a|² + 4(y+a)/|y+a|²`.
pub fn drift(y: Vec2) -> Vec2 {
    let mut c = [-0.5 * y[0], -0.5 * y[1]];
    for p in [PEAK, [-PEAK[0], -PEAK[1]]] {
        let d = sub(y, p);
        let r2 = dot(d, d);
        c[0] += 4.0 * d[0] / r2;
        c[1] += 4.0 * d[1] / r2;
    }
    c
}

/// `G(Y) = −1/(4|Y|²) − (log|Y|)²/8 + cos(2θ)/32`, with `−ΔG = 1/|Y|⁴ + Ψ₁(Y)`
/// for the peak on the horizontal axis.
pub fn g_closed(y_rel: Vec2) -> Result<f64> {
    let r2 = dot(y_rel, y_rel);
    if r2 == 0.0 {
        return Err(Error::SingularPoint);
    }
    let lr = 0.5 * r2.ln();
    let cos2 = (y_rel[0] * y_rel[0] - y_rel[1] * y_rel[1]) / r2;
    Ok(-0.25 / r2 - lr * lr / 8.0 + cos2 / 32.0)
}

/// The singular profiles attached to a peak at `a` with `|a| = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularBasis {
    pub a: Vec2,
}

impl SingularBasis {
    pub fn new(a: Vec2) -> Result<Self> {
        if (dot(a, a).sqrt() - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("peak must satisfy |a| = 2, got {a:?}")));
        }
        Ok(Self { a })
    }

    fn parts(&self, y_rel: Vec2) -> Result<(f64, f64)> {
        let r2 = dot(y_rel, y_rel);
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok((r2, dot(self.a, y_rel)))
    }

    pub fn inv4(&self, y_rel: Vec2) -> Result<f64> {
        let (r2, _) = self.parts(y_rel)?;
        Ok(1.0 / (r2 * r2))
    }

    pub fn psi1(&self, y_rel: Vec2) -> Result<f64> {
        let (r2, ay) = self.parts(y_rel)?;
        Ok((2.0 / r2 + ay * ay / (r2 * r2)) / 16.0)
    }

    pub fn psi2(&self, y_rel: Vec2) -> Result<f64> {
        let (r2, ay) = self.parts(y_rel)?;
        Ok(ay / (96.0 * r2) * (3.0 - ay * ay / r2))
    }

    pub fn psi3(&self, y_rel: Vec2) -> Result<f64> {
        let (r2, ay) = self.parts(y_rel)?;
        Ok(ay.powi(4) / (256.0 * r2 * r2))
    }

    /// `1/|Y|⁴ + Ψ₁ + Ψ₂ + Ψ₃`, the bracket multiplying `D` in Ω near the peak.
    pub fn omega_bracket(&self, y_rel: Vec2) -> Result<f64> {
        Ok(self.inv4(y_rel)? + self.psi1(y_rel)? + self.psi2(y_rel)? + self.psi3(y_rel)?)
    }

    /// `−1/(2|Y|²) + (log|Y|)/8 − (a·Y)²/(16|Y|²)`, the bracket multiplying `D` in Z
    /// near the peak (without its constant).
    pub fn z_bracket(&self, y_rel: Vec2) -> Result<f64> {
        let (r2, ay) = self.parts(y_rel)?;
        Ok(-0.5 / r2 + r2.ln() / 16.0 - ay * ay / (16.0 * r2))
    }
}

/// Which local expansion to splice in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    Omega,
    Z,
}

/// One angular harmonic `f(ρ) cos(n(θ − θ_a))` with
/// `f = Σ c ρ^p + ℓ log ρ`.
struct Harmonic {
    n: f64,
    powers: &'static [(f64, f64)],
    log: f64,
}

// Polar forms of the brackets above (|a| = 2, angle measured from a).
const OMEGA_TERMS: [Harmonic; 4] = [
    Harmonic {
        n: 0.0,
        powers: &[(1.0, -4.0), (0.25, -2.0), (3.0 / 128.0, 0.0)],
        log: 0.0,
    },
    Harmonic {
        n: 2.0,
        powers: &[(1.0 / 8.0, -2.0), (1.0 / 32.0, 0.0)],
        log: 0.0,
    },
    Harmonic {
        n: 3.0,
        powers: &[(-1.0 / 48.0, -1.0)],
        log: 0.0,
    },
    Harmonic {
        n: 4.0,
        powers: &[(1.0 / 128.0, 0.0)],
        log: 0.0,
    },
];
const Z_TERMS: [Harmonic; 2] = [
    Harmonic {
        n: 0.0,
        powers: &[(-0.5, -2.0), (-1.0 / 8.0, 0.0)],
        log: 1.0 / 8.0,
    },
    Harmonic {
        n: 2.0,
        powers: &[(-1.0 / 8.0, 0.0)],
        log: 0.0,
    },
];

fn terms(kind: Expansion) -> &'static [Harmonic] {
    match kind {
        Expansion::Omega => &OMEGA_TERMS,
        Expansion::Z => &Z_TERMS,
    }
}

/// Value and polar derivatives `(v, v_ρ, v_ρρ, v_θ, v_θθ)` of a bracket at
/// distance `rho` and relative angle `phi`.
fn polar_jet(kind: Expansion, rho: f64, phi: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    for t in terms(kind) {
        let (mut f, mut fp, mut fpp) = (0.0, 0.0, 0.0);
        for &(c, p) in t.powers {
            f += c * rho.powf(p);
            fp += c * p * rho.powf(p - 1.0);
            fpp += c * p * (p - 1.0) * rho.powf(p - 2.0);
        }
        if t.log != 0.0 {
            f += t.log * rho.ln();
            fp += t.log / rho;
            fpp -= t.log / (rho * rho);
        }
        let (s, c) = (t.n * phi).sin_cos();
        out[0] += f * c;
        out[1] += fp * c;
        out[2] += fpp * c;
        out[3] -= t.n * f * s;
        out[4] -= t.n * t.n * f * c;
    }
    out
}

/// Bracket value in polar form; equals [`SingularBasis::omega_bracket`] or
/// [`SingularBasis::z_bracket`] for the peak `center`.
pub fn bracket(kind: Expansion, center: Vec2, y: Vec2) -> f64 {
    let (rho, phi) = local_polar(center, y);
    polar_jet(kind, rho, phi)[0]
}

/// Distance and angle of `y` seen from `center`, the angle measured from the
/// direction of `center` itself.
fn local_polar(center: Vec2, y: Vec2) -> (f64, f64) {
    let d = sub(y, center);
    let theta = d[1].atan2(d[0]);
    let theta_a = center[1].atan2(center[0]);
    (d[0].hypot(d[1]), theta - theta_a)
}

/// Septic smoothstep cutoff `(η, η', η'')`: one for `ρ ≤ 1`, zero for `ρ ≥ 2`,
/// three continuous derivatives.
pub fn cutoff(rho: f64) -> (f64, f64, f64) {
    let t = (rho - 1.0).clamp(0.0, 1.0);
    let s = t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3));
    let ds = 140.0 * t.powi(3) * (1.0 - t).powi(3);
    let dds = 420.0 * t * t * (1.0 - t).powi(2) * (1.0 - 2.0 * t);
    (1.0 - s, -ds, -dds)
}

/// Outer operator applied to a bracket at a point where it is smooth,
/// `L(b) = Δb + drift·∇b − b`, evaluated from the polar jet.
pub fn operator_on_bracket(kind: Expansion, center: Vec2, y: Vec2) -> f64 {
    let (rho, phi) = local_polar(center, y);
    let j = polar_jet(kind, rho, phi);
    let (cr, ct) = radial_drift(center, y, rho);
    j[2] + j[1] / rho + j[4] / (rho * rho) + cr * j[1] + ct * j[3] / rho - j[0]
}

fn radial_drift(center: Vec2, y: Vec2, rho: f64) -> (f64, f64) {
    let c = drift(y);
    let d = sub(y, center);
    let (er, et) = ([d[0] / rho, d[1] / rho], [-d[1] / rho, d[0] / rho]);
    (dot(c, er), dot(c, et))
}

/// `(Σ_j D_j b_j η_j, Σ_j D_j L(b_j η_j))` over the peaks `±a`: the spliced
/// singular part and the operator applied to it.
pub fn spliced(kind: Expansion, d: [f64; 2], y: Vec2) -> (f64, f64) {
    let mut val = 0.0;
    let mut lval = 0.0;
    for (j, center) in [PEAK, [-PEAK[0], -PEAK[1]]].into_iter().enumerate() {
        let (rho, phi) = local_polar(center, y);
        if rho >= 2.0 || d[j] == 0.0 {
            continue;
        }
        let jet = polar_jet(kind, rho, phi);
        let (e, ep, epp) = cutoff(rho);
        let (cr, ct) = radial_drift(center, y, rho);
        let lb = jet[2] + jet[1] / rho + jet[4] / (rho * rho) + cr * jet[1] + ct * jet[3] / rho - jet[0];
        val += d[j] * jet[0] * e;
        lval += d[j] * (e * lb + jet[0] * (epp + ep / rho + cr * ep) + 2.0 * jet[1] * ep);
    }
    (val, lval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::diff::derivatives;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn w0_grad_examples() {
        let g = w0_grad([0.0, 0.0]).unwrap();
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        let g = w0_grad([4.0, 0.0]).unwrap();
        assert!((g[0] + 8.0 / 3.0).abs() < 1e-14 && g[1].abs() < 1e-15);
        assert!(w0_grad(PEAK).is_err());
    }

    #[test]
    fn w0_taylor_is_cubic_accurate() {
        let err_on_ring = |r: f64| {
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..36 {
                let t = k as f64 * std::f64::consts::TAU / 36.0;
                let yr = [r * t.cos(), r * t.sin()];
                let y = [PEAK[0] + yr[0], PEAK[1] + yr[1]];
                let g = w0_grad(y).unwrap();
                let r2 = dot(yr, yr);
                let reg = [g[0] + 4.0 * yr[0] / r2, g[1] + 4.0 * yr[1] / r2];
                let t = w0_grad_taylor(PEAK, yr);
                worst = worst.max((reg[0] - t[0]).hypot(reg[1] - t[1]));
                scale = scale.max(reg[0].hypot(reg[1]));
            }
            worst / scale
        };
        let e1 = err_on_ring(0.1);
        let e2 = err_on_ring(0.05);
        assert!(e1 <= 1e-3, "{e1}");
        // quartic remainder: halving the ring shrinks the error ~16x
        assert!(e1 / e2 > 12.0, "{}", e1 / e2);
    }

    #[test]
    fn g_closed_examples_and_parity() {
        assert!((g_closed([1.0, 0.0]).unwrap() + 7.0 / 32.0).abs() < 1e-15);
        let y = [0.3, -1.7];
        assert_eq!(g_closed(y).unwrap(), g_closed([-y[0], -y[1]]).unwrap());
        assert!(g_closed([0.0, 0.0]).is_err());
    }

    fn neg_laplacian(f: impl Fn(Vec2) -> f64, y: Vec2, h: f64) -> f64 {
        let (_, _, fxx) = derivatives(|x| f([x, y[1]]), y[0], h);
        let (_, _, fyy) = derivatives(|t| f([y[0], t]), y[1], h);
        -(fxx + fyy)
    }

    #[test]
    fn g_closed_laplacian_identity() {
        let basis = SingularBasis::new(PEAK).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let r: f64 = rng.gen_range(0.3..3.0);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let y = [r * t.cos(), r * t.sin()];
            let lhs = neg_laplacian(|p| g_closed(p).unwrap(), y, 0.02 * r);
            let rhs = basis.inv4(y).unwrap() + basis.psi1(y).unwrap();
            assert!(((lhs - rhs) / rhs).abs() <= 1e-6, "y={y:?} {lhs} {rhs}");
        }
    }

    #[test]
    fn polar_tables_match_closed_brackets() {
        for center in [PEAK, [-2.0, 0.0], [0.0, 2.0]] {
            let basis = SingularBasis::new(center).unwrap();
            for (r, t) in [(0.1, 0.3), (0.7, 2.0), (1.3, -2.5)] {
                let y = [center[0] + r * f64::cos(t), center[1] + r * f64::sin(t)];
                let yr = sub(y, center);
                let o = basis.omega_bracket(yr).unwrap();
                assert!(((bracket(Expansion::Omega, center, y) - o) / o).abs() < 1e-13);
                let z = basis.z_bracket(yr).unwrap();
                assert!(((bracket(Expansion::Z, center, y) - z) / z).abs() < 1e-13);
            }
        }
        assert!(SingularBasis::new([1.0, 0.0]).is_err());
    }

    #[test]
    fn operator_on_omega_bracket_matches_high_precision_values() {
        // reference values from a 40-digit symbolic differentiation of the bracket
        let cases = [
            ([2.3, 0.1], -0.07883445945945933),
            ([1.5, -0.4], -0.1442037755193701),
            ([2.1, 0.05], 0.19342007434944156),
        ];
        for (y, want) in cases {
            let got = operator_on_bracket(Expansion::Omega, PEAK, y);
            // the ρ⁻⁶ and ρ⁻⁵ pieces cancel; at ρ ≈ 0.1 that costs ~1e-8 relative
            assert!(((got - want) / want).abs() < 1e-7, "{y:?}: {got} vs {want}");
            let (_, spliced_l) = spliced(Expansion::Omega, [1.0, 0.0], y);
            assert!((spliced_l - got).abs() < 1e-14);
        }
    }

    #[test]
    fn omega_bracket_residual_is_order_inverse_distance() {
        // the bracket cancels L through O(ρ⁻²); what remains grows no faster than 1/ρ
        for rho in [0.2, 0.1, 0.05, 0.02] {
            let mut worst: f64 = 0.0;
            for k in 0..12 {
                let t = 0.3 + k as f64 * 0.5;
                let y = [PEAK[0] + rho * f64::cos(t), PEAK[1] + rho * f64::sin(t)];
                worst = worst.max(operator_on_bracket(Expansion::Omega, PEAK, y).abs());
            }
            assert!(worst * rho < 0.1, "rho={rho}: {}", worst * rho);
        }
    }

    #[test]
    fn z_bracket_balances_twice_omega() {
        // L(Z bracket) − 2·(Ω bracket) is at most O(1/ρ)
        for rho in [0.2, 0.05, 0.02] {
            let y = [PEAK[0] + rho * 0.8, PEAK[1] + rho * 0.6];
            let r = operator_on_bracket(Expansion::Z, PEAK, y) - 2.0 * bracket(Expansion::Omega, PEAK, y);
            assert!(r.abs() * rho < 0.2, "rho={rho}: {}", r * rho);
        }
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.5), (1.0, 0.0, 0.0));
        assert_eq!(cutoff(2.5), (0.0, 0.0, 0.0));
        let (e, _, _) = cutoff(1.5);
        assert!((e - 0.5).abs() < 1e-15);
        // derivatives agree with differences
        let (_, d1, d2) = derivatives(|r| cutoff(r).0, 1.37, 1e-3);
        let (_, ep, epp) = cutoff(1.37);
        assert!((d1 - ep).abs() < 1e-9 && (d2 - epp).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn spliced_operator_matches_finite_differences(r in 0.3f64..2.2, t in 0.0f64..6.28, far in proptest::bool::ANY) {
            // the cutoff is only C³ at ρ = 1 and ρ = 2; keep the stencils off the kinks
            let c = if far { [-2.0, 0.0] } else { PEAK };
            let y = [c[0] + r * t.cos(), c[1] + r * t.sin()];
            for p in [PEAK, [-2.0, 0.0]] {
                let rp = (y[0] - p[0]).hypot(y[1] - p[1]);
                prop_assume!((rp - 1.0).abs() > 0.05 && (rp - 2.0).abs() > 0.05);
            }
            let d = [8.0, 5.0];
            for kind in [Expansion::Omega, Expansion::Z] {
                let f = |p: Vec2| spliced(kind, d, p).0;
                let h = 0.01 * r.min(1.0);
                let (v, fx, fxx) = derivatives(|x| f([x, y[1]]), y[0], h);
                let (_, fy, fyy) = derivatives(|s| f([y[0], s]), y[1], h);
                let c = drift(y);
                let lfd = fxx + fyy + c[0] * fx + c[1] * fy - v;
                let (_, l) = spliced(kind, d, y);
                prop_assert!((lfd - l).abs() <= 1e-5 * (1.0 + l.abs()), "{kind:?} {y:?}: {lfd} vs {l}");
            }
        }

        #[test]
        fn drift_is_odd(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            prop_assume!((x - 2.0).hypot(y) > 0.1 && (x + 2.0).hypot(y) > 0.1);
            let c = drift([x, y]);
            let m = drift([-x, -y]);
            prop_assert!((c[0] + m[0]).abs() < 1e-12 && (c[1] + m[1]).abs() < 1e-12);
        }
    }
}
