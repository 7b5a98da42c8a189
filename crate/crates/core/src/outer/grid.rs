//! Composite overset grid for the punctured disk `B_R \ (B_δ(a) ∪ B_δ(−a))`.
//!
//! Three kinds of patch share one unknown vector:
//! - two polar patches around `±a`, log-graded in the radius on `[δ, 1]`;
//! - a uniform Cartesian square `[−5, 5]²` whose nodes closer than 0.55 to
//!   a peak are either glued to the polar patch or switched off;
//! - a polar annulus `4 ≤ |y| ≤ R` carrying the far field.
//!
//! Patch edges are glued by bicubic Lagrange interpolation from the
//! overlapping patch; every interior node carries the second-order
//! discretisation of `L = Δ + drift·∇ − 1`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::numerics::interp::lagrange_weights;
use crate::numerics::sparse::{SparseLu, TripletBuilder};

use super::singular::{drift, Vec2, PEAK};

const PATCH_OUTER: f64 = 1.0;
const HOLE: f64 = 0.55;
const BOX: f64 = 5.0;
const ANNULUS_INNER: f64 = 4.0;
// level-1 resolution: radial nodes per ln(20) in the patches, patch angles,
// Cartesian spacing, annulus radial spacing, annulus angles
const BASE_RADIAL: f64 = 30.0;
const BASE_ANGLES: usize = 64;
const BASE_H: f64 = 0.1;
const BASE_HR: f64 = 0.2;
const BASE_ANNULUS_ANGLES: usize = 128;

/// Excision radius, outer radius and refinement level (each level halves
/// every mesh width).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OuterDomain {
    pub delta: f64,
    pub r_outer: f64,
    pub level: u32,
}

impl OuterDomain {
    pub fn new(delta: f64, r_outer: f64, level: u32) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(Error::InvalidInput(format!(
                "excision radius must lie in (0, 0.25], got {delta}"
            )));
        }
        if !(r_outer > 8.0 && r_outer.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "outer radius must exceed 8, got {r_outer}"
            )));
        }
        if !(1..=5).contains(&level) {
            return Err(Error::InvalidInput(format!(
                "refinement level must be 1..=5, got {level}"
            )));
        }
        Ok(Self { delta, r_outer, level })
    }

    fn factor(&self) -> f64 {
        (1u32 << (self.level - 1)) as f64
    }

    /// Cartesian mesh width at this level.
    pub fn h(&self) -> f64 {
        BASE_H / self.factor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Carries the discrete operator.
    Interior,
    /// Prescribed value (excision circles, `|y| = R`).
    Dirichlet,
    /// Equals the interpolant of an overlapping patch.
    Glue,
    /// Cartesian node buried inside a polar patch; pinned to zero.
    Inactive,
}

pub struct CompositeGrid {
    pub domain: OuterDomain,
    /// Patch radii `δ = ρ_0 < … < ρ_m = 1`.
    pub rho: Vec<f64>,
    /// Angles per patch ring.
    pub nt: usize,
    /// Cartesian coordinates (same in x and y).
    pub xc: Vec<f64>,
    pub h: f64,
    /// Annulus radii.
    pub ra: Vec<f64>,
    pub nta: usize,
    offsets: [usize; 4],
    n: usize,
    pub kind: Vec<NodeKind>,
    pub xy: Vec<Vec2>,
    op: TripletBuilder,
}

fn centers() -> [Vec2; 2] {
    [PEAK, [-PEAK[0], -PEAK[1]]]
}

impl CompositeGrid {
    pub fn new(domain: OuterDomain) -> Result<Self> {
        let f = domain.factor();
        let span = (PATCH_OUTER / domain.delta).ln();
        let nr = ((BASE_RADIAL * f * span / 20f64.ln()) as usize).max(8);
        let rho: Vec<f64> = (0..=nr)
            .map(|i| domain.delta * (span * i as f64 / nr as f64).exp())
            .collect();
        let nt = BASE_ANGLES * f as usize;
        let h = domain.h();
        let nc = (2.0 * BOX / h).round() as usize;
        let xc: Vec<f64> = (0..=nc).map(|i| -BOX + i as f64 * h).collect();
        let na = ((domain.r_outer - ANNULUS_INNER) / (BASE_HR / f)).round() as usize;
        let ra: Vec<f64> = (0..=na)
            .map(|i| ANNULUS_INNER + (domain.r_outer - ANNULUS_INNER) * i as f64 / na as f64)
            .collect();
        let nta = BASE_ANNULUS_ANGLES * f as usize;

        let first_gap = (rho[1] - rho[0]).max(domain.delta * TAU / nt as f64);
        if first_gap > domain.delta / 4.0 {
            return Err(Error::InvalidInput(format!(
                "mesh width {first_gap:e} too coarse for excision radius {}",
                domain.delta
            )));
        }

        let np = (nr + 1) * nt;
        let offsets = [0, np, 2 * np, 2 * np + (nc + 1) * (nc + 1)];
        let n = offsets[3] + (na + 1) * nta;
        let mut grid = Self {
            domain,
            rho,
            nt,
            xc,
            h,
            ra,
            nta,
            offsets,
            n,
            kind: vec![NodeKind::Interior; n],
            xy: vec![[0.0; 2]; n],
            op: TripletBuilder::new(n),
        };
        grid.assemble();
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of stored matrix entries.
    pub fn nnz(&self) -> usize {
        self.op.nnz()
    }

    /// Unknown index of ring `i`, angle `k` in the patch around peak `p`
    /// (0 for `a`, 1 for `−a`).
    pub fn patch_index(&self, p: usize, i: usize, k: usize) -> usize {
        self.offsets[p] + i * self.nt + k % self.nt
    }

    fn cart_index(&self, i: usize, j: usize) -> usize {
        self.offsets[2] + i * self.xc.len() + j
    }

    fn annulus_index(&self, i: usize, k: usize) -> usize {
        self.offsets[3] + i * self.nta + k % self.nta
    }

    /// Values on ring `i` of patch `p`, at angles `2πk/nt`.
    pub fn ring<'a>(&self, field: &'a [f64], p: usize, i: usize) -> &'a [f64] {
        let s = self.patch_index(p, i, 0);
        &field[s..s + self.nt]
    }

    /// Node angle `k` on a patch ring, measured from the horizontal axis.
    pub fn patch_angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.nt as f64
    }

    /// `A·field`: the discrete `L` on interior rows, the constraint residual
    /// operand elsewhere.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        self.op.apply(field)
    }

    pub fn factor(&self) -> Result<SparseLu> {
        self.op.factor()
    }

    /// Right-hand side with `interior(y)` on interior rows, `boundary(y)` on
    /// Dirichlet rows and zero on glue and inactive rows.
    pub fn rhs(&self, interior: impl Fn(usize, Vec2) -> f64, boundary: impl Fn(Vec2) -> f64) -> Vec<f64> {
        (0..self.n)
            .map(|i| match self.kind[i] {
                NodeKind::Interior => interior(i, self.xy[i]),
                NodeKind::Dirichlet => boundary(self.xy[i]),
                NodeKind::Glue | NodeKind::Inactive => 0.0,
            })
            .collect()
    }

    fn polar_stencil(
        nodes: &[f64],
        nt: usize,
        r: f64,
        t: f64,
        index: impl Fn(usize, usize) -> usize,
    ) -> Vec<(usize, f64)> {
        let pos = nodes.partition_point(|&v| v < r);
        let i0 = pos.saturating_sub(2).min(nodes.len() - 4);
        let rw = lagrange_weights(&nodes[i0..i0 + 4], r);
        let dt = TAU / nt as f64;
        let t = t.rem_euclid(TAU);
        let k0 = (t / dt).floor() as isize - 1;
        let tn: Vec<f64> = (0..4).map(|m| (k0 + m) as f64 * dt).collect();
        let tw = lagrange_weights(&tn, t);
        let mut out = Vec::with_capacity(16);
        for (a, wa) in rw.iter().enumerate() {
            for (b, wb) in tw.iter().enumerate() {
                let k = (k0 + b as isize).rem_euclid(nt as isize) as usize;
                out.push((index(i0 + a, k), wa * wb));
            }
        }
        out
    }

    fn cart_stencil(&self, x: f64, y: f64) -> Vec<(usize, f64)> {
        let start =
            |v: f64| ((((v + BOX) / self.h).floor() as isize) - 1).clamp(0, self.xc.len() as isize - 4) as usize;
        let (i0, j0) = (start(x), start(y));
        let xw = lagrange_weights(&self.xc[i0..i0 + 4], x);
        let yw = lagrange_weights(&self.xc[j0..j0 + 4], y);
        let mut out = Vec::with_capacity(16);
        for (a, wa) in xw.iter().enumerate() {
            for (b, wb) in yw.iter().enumerate() {
                out.push((self.cart_index(i0 + a, j0 + b), wa * wb));
            }
        }
        out
    }

    fn glue(&mut self, row: usize, stencil: Vec<(usize, f64)>) {
        self.kind[row] = NodeKind::Glue;
        self.op.push(row, row, 1.0);
        for (c, w) in stencil {
            self.op.push(row, c, -w);
        }
    }

    /// Polar-coordinate stencil row around `center` at radius index `i` of
    /// `radii` (possibly non-uniform), angle `t`.
    #[allow(clippy::too_many_arguments)]
    fn polar_row(
        &mut self,
        row: usize,
        radii: &[f64],
        i: usize,
        nt: usize,
        t: f64,
        center: Vec2,
        index: impl Fn(usize, usize) -> usize,
    ) {
        let (r0, r1, r2) = (radii[i - 1], radii[i], radii[i + 1]);
        let (hm, hp) = (r1 - r0, r2 - r1);
        let d1 = [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))];
        let d2 = [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))];
        let (s, c) = t.sin_cos();
        let y = [center[0] + r1 * c, center[1] + r1 * s];
        let dr = drift(y);
        let cr = dr[0] * c + dr[1] * s;
        let ct = -dr[0] * s + dr[1] * c;
        let dt = TAU / nt as f64;
        let k = (t / dt).round() as usize;
        let ang = 1.0 / (r1 * r1 * dt * dt);
        let k_prev = (k + nt - 1) % nt;
        self.op.push(row, index(i - 1, k), d2[0] + (1.0 / r1 + cr) * d1[0]);
        self.op.push(row, index(i + 1, k), d2[2] + (1.0 / r1 + cr) * d1[2]);
        self.op
            .push(row, row, d2[1] + (1.0 / r1 + cr) * d1[1] - 2.0 * ang - 1.0);
        self.op.push(row, index(i, k + 1), ang + ct / (2.0 * r1 * dt));
        self.op.push(row, index(i, k_prev), ang - ct / (2.0 * r1 * dt));
        self.xy[row] = y;
    }

    fn assemble(&mut self) {
        let nt = self.nt;
        let nr = self.rho.len() - 1;
        let rho = self.rho.clone();
        for (p, center) in centers().into_iter().enumerate() {
            for i in 0..=nr {
                for k in 0..nt {
                    let row = self.patch_index(p, i, k);
                    let t = self.patch_angle(k);
                    let y = [center[0] + rho[i] * t.cos(), center[1] + rho[i] * t.sin()];
                    self.xy[row] = y;
                    if i == 0 {
                        self.kind[row] = NodeKind::Dirichlet;
                        self.op.push(row, row, 1.0);
                    } else if i == nr {
                        let st = self.cart_stencil(y[0], y[1]);
                        self.glue(row, st);
                    } else {
                        let offs = self.offsets[p];
                        self.polar_row(row, &rho, i, nt, t, center, |a, b| offs + a * nt + b % nt);
                    }
                }
            }
        }

        let nc = self.xc.len() - 1;
        let h = self.h;
        for i in 0..=nc {
            for j in 0..=nc {
                let row = self.cart_index(i, j);
                let (x, y) = (self.xc[i], self.xc[j]);
                self.xy[row] = [x, y];
                if i == 0 || j == 0 || i == nc || j == nc {
                    let offs = self.offsets[3];
                    let nta = self.nta;
                    let st = Self::polar_stencil(&self.ra, nta, x.hypot(y), y.atan2(x), |a, b| offs + a * nta + b);
                    self.glue(row, st);
                    continue;
                }
                let dist = centers().map(|c| (x - c[0]).hypot(y - c[1]));
                let p = if dist[0] <= dist[1] { 0 } else { 1 };
                if dist[p] < HOLE {
                    let c = centers()[p];
                    let near_edge = [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
                        .iter()
                        .any(|&(a, b)| (self.xc[a] - c[0]).hypot(self.xc[b] - c[1]) >= HOLE);
                    if near_edge {
                        let offs = self.offsets[p];
                        let st = Self::polar_stencil(&rho, nt, dist[p], (y - c[1]).atan2(x - c[0]), |a, b| {
                            offs + a * nt + b
                        });
                        self.glue(row, st);
                    } else {
                        self.kind[row] = NodeKind::Inactive;
                        self.op.push(row, row, 1.0);
                    }
                    continue;
                }
                let d = drift([x, y]);
                let w = 1.0 / (h * h);
                self.op.push(row, row, -4.0 * w - 1.0);
                self.op.push(row, self.cart_index(i + 1, j), w + d[0] / (2.0 * h));
                self.op.push(row, self.cart_index(i - 1, j), w - d[0] / (2.0 * h));
                self.op.push(row, self.cart_index(i, j + 1), w + d[1] / (2.0 * h));
                self.op.push(row, self.cart_index(i, j - 1), w - d[1] / (2.0 * h));
            }
        }

        let na = self.ra.len() - 1;
        let nta = self.nta;
        let ra = self.ra.clone();
        for i in 0..=na {
            for k in 0..nta {
                let row = self.annulus_index(i, k);
                let t = TAU * k as f64 / nta as f64;
                let y = [ra[i] * t.cos(), ra[i] * t.sin()];
                self.xy[row] = y;
                if i == na {
                    self.kind[row] = NodeKind::Dirichlet;
                    self.op.push(row, row, 1.0);
                } else if i == 0 {
                    let st = self.cart_stencil(y[0], y[1]);
                    self.glue(row, st);
                } else {
                    let offs = self.offsets[3];
                    self.polar_row(row, &ra, i, nta, t, [0.0, 0.0], |a, b| offs + a * nta + b % nta);
                }
            }
        }
    }
}
