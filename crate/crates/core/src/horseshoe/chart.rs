//! Charts around the saddles of a periodic orbit in which the local
//! unstable manifold is the `u`-axis and the local stable manifold the
//! `s`-axis.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::dd::{Dd, TWO_PI};
use crate::error::{HorseshoeError, TwistError};
use crate::twist::{minimize_periodic, GeneratingFunction, StandardFamily, TwistMap};

/// Size of the linear seed on the eigen-directions.
const SEED: f64 = 1e-12;
/// Chart coordinates are trusted up to this magnitude.
pub const CHART_REACH: f64 = 1.5;

/// A twist map that can also be stepped in double-double precision.
pub trait PreciseStep: GeneratingFunction {
    fn forward_dd(&self, p: [Dd; 2]) -> [Dd; 2];
    fn backward_dd(&self, p: [Dd; 2]) -> [Dd; 2];
}

impl PreciseStep for StandardFamily {
    fn forward_dd(&self, p: [Dd; 2]) -> [Dd; 2] {
        let c = Dd::new(self.k) / TWO_PI;
        let xp = p[0] + p[1] - c * p[0].sin_2pi();
        [xp, xp - p[0]]
    }
    fn backward_dd(&self, p: [Dd; 2]) -> [Dd; 2] {
        let c = Dd::new(self.k) / TWO_PI;
        let x = p[0] - p[1];
        [x, p[1] + c * x.sin_2pi()]
    }
}

pub fn to_dd(p: [f64; 2]) -> [Dd; 2] {
    [Dd::new(p[0]), Dd::new(p[1])]
}

pub fn to_f64(p: [Dd; 2]) -> [f64; 2] {
    [p[0].to_f64(), p[1].to_f64()]
}

/// `F^n` in double-double precision (`n < 0` steps backwards).
pub fn iterate_dd<G: PreciseStep>(gf: &G, mut p: [Dd; 2], n: i64) -> [Dd; 2] {
    for _ in 0..n.unsigned_abs() {
        p = if n > 0 { gf.forward_dd(p) } else { gf.backward_dd(p) };
    }
    p
}

/// `DF^n` at `p` along the forward (or backward) orbit.
pub fn jacobian_power<G: GeneratingFunction>(tm: &TwistMap<G>, mut p: [f64; 2], n: i64) -> Matrix2<f64> {
    let mut m = Matrix2::identity();
    for _ in 0..n.unsigned_abs() {
        if n > 0 {
            m = tm.jacobian(p) * m;
            p = tm.forward(p);
        } else {
            m = tm.jacobian_inverse(p) * m;
            p = tm.backward(p);
        }
    }
    m
}

fn eigvec(m: &Matrix2<f64>, l: f64) -> Vector2<f64> {
    let a = Vector2::new(m[(0, 1)], l - m[(0, 0)]);
    let b = Vector2::new(l - m[(1, 1)], m[(1, 0)]);
    let v = if a.norm() >= b.norm() { a } else { b };
    v / v.norm()
}

/// Chart `Φ(u, s) = P_u(u) + P_s(s) − x` at a saddle `x` of period `q`,
/// where `P_u`, `P_s` parametrize the local manifolds so that
/// `F^q(P_u(u)) = P_u(λu)` and `F^{-q}(P_s(s)) = P_s(λs)`.
///
/// `u > 0` is the branch of the unstable manifold leaving to the right,
/// `s > 0` the branch of the stable manifold arriving from the left.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chart {
    pub index: usize,
    pub saddle: [Dd; 2],
    pub p: i64,
    pub q: usize,
    pub lambda: f64,
    pub unstable: [f64; 2],
    pub stable: [f64; 2],
    seed_steps: usize,
    basis_inverse: [[f64; 2]; 2],
}

impl Chart {
    pub fn saddle_f64(&self) -> [f64; 2] {
        to_f64(self.saddle)
    }

    /// `F^{q·n}` on the cover, translated back by `n·p` so the saddle is fixed.
    pub fn return_dd<G: PreciseStep>(&self, gf: &G, p: [Dd; 2], n: i64) -> [Dd; 2] {
        let r = iterate_dd(gf, p, n * self.q as i64);
        [r[0] - Dd::new((n * self.p) as f64), r[1]]
    }

    pub fn return_f64<G: GeneratingFunction>(&self, tm: &TwistMap<G>, p: [f64; 2], n: i64) -> [f64; 2] {
        let r = tm.iterate(p, n * self.q as i64);
        [r[0] - (n * self.p) as f64, r[1]]
    }

    fn local_dd<G: PreciseStep>(&self, gf: &G, t: f64, unstable: bool) -> [Dd; 2] {
        let e = if unstable { self.unstable } else { self.stable };
        let v = t * self.lambda.powi(-(self.seed_steps as i32));
        let seed = [self.saddle[0] + Dd::new(v * e[0]), self.saddle[1] + Dd::new(v * e[1])];
        let n = self.seed_steps as i64;
        self.return_dd(gf, seed, if unstable { n } else { -n })
    }

    pub fn local_unstable<G: PreciseStep>(&self, gf: &G, u: f64) -> [f64; 2] {
        to_f64(self.local_dd(gf, u, true))
    }

    pub fn local_stable<G: PreciseStep>(&self, gf: &G, s: f64) -> [f64; 2] {
        to_f64(self.local_dd(gf, s, false))
    }

    pub fn phi<G: PreciseStep>(&self, gf: &G, u: f64, s: f64) -> [f64; 2] {
        let a = self.local_dd(gf, u, true);
        let b = self.local_dd(gf, s, false);
        to_f64([a[0] + b[0] - self.saddle[0], a[1] + b[1] - self.saddle[1]])
    }

    /// Chart coordinates of a cover point, after an integer shift of `x`
    /// towards the saddle. `None` when the point is out of reach.
    pub fn inverse<G: PreciseStep>(&self, gf: &G, z: [f64; 2]) -> Option<[f64; 2]> {
        let x0 = self.saddle_f64();
        let shift = (z[0] - x0[0]).round();
        let z = [z[0] - shift, z[1]];
        let bi = &self.basis_inverse;
        let lin = |d: [f64; 2]| [bi[0][0] * d[0] + bi[0][1] * d[1], bi[1][0] * d[0] + bi[1][1] * d[1]];
        let mut c = lin([z[0] - x0[0], z[1] - x0[1]]);
        for _ in 0..80 {
            if !(c[0].abs() <= CHART_REACH && c[1].abs() <= CHART_REACH) {
                return None;
            }
            let f = self.phi(gf, c[0], c[1]);
            let d = lin([z[0] - f[0], z[1] - f[1]]);
            c = [c[0] + d[0], c[1] + d[1]];
            if d[0].abs().max(d[1].abs()) < 1e-15 {
                return Some(c);
            }
        }
        None
    }

    /// Point of the whole unstable branch, `F^{qm}(P_u(λ^{−m}U))` with `|λ^{−m}U| ≤ 1`.
    pub fn unstable_point<G: PreciseStep>(&self, tm: &TwistMap<G>, big_u: f64) -> [f64; 2] {
        let m = self.scale_steps(big_u);
        let z = self.local_unstable(&tm.gf, big_u * self.lambda.powi(-(m as i32)));
        self.return_f64(tm, z, m as i64)
    }

    pub fn stable_point<G: PreciseStep>(&self, tm: &TwistMap<G>, big_s: f64) -> [f64; 2] {
        let m = self.scale_steps(big_s);
        let z = self.local_stable(&tm.gf, big_s * self.lambda.powi(-(m as i32)));
        self.return_f64(tm, z, -(m as i64))
    }

    fn scale_steps(&self, t: f64) -> usize {
        if t.abs() <= 1.0 {
            0
        } else {
            (t.abs().ln() / self.lambda.ln()).ceil().max(0.0) as usize
        }
    }
}

/// Saddles of the minimizing `(p, q)` orbit, one chart each, sorted by
/// position on the circle.
pub fn saddle_charts<G: PreciseStep>(tm: &TwistMap<G>, p: i64, q: usize) -> Result<Vec<Chart>, HorseshoeError> {
    let gf = &tm.gf;
    let per = minimize_periodic(gf, p, q)?;
    let mut pts: Vec<[f64; 2]> = per.orbit(gf, 0, q as i64);
    for z in pts.iter_mut() {
        let s = z[0].floor();
        z[0] -= s;
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    pts.iter()
        .enumerate()
        .map(|(index, &z)| {
            let saddle = refine_saddle(tm, z, p, q)?;
            let m = jacobian_power(tm, to_f64(saddle), q as i64);
            let tr = m.trace();
            if tr <= 2.0 {
                return Err(TwistError::NotSaddle { trace: tr }.into());
            }
            let lambda = (tr + (tr * tr - 4.0).sqrt()) / 2.0;
            let mut eu = eigvec(&m, lambda);
            let mut es = eigvec(&m, 1.0 / lambda);
            if eu[0] < 0.0 {
                eu = -eu;
            }
            if es[0] > 0.0 {
                es = -es;
            }
            let basis = Matrix2::from_columns(&[eu, es]);
            let bi = basis.try_inverse().ok_or(HorseshoeError::NoTransverseIntersection)?;
            let seed_steps = ((1.0 / SEED).ln() / lambda.ln()).ceil() as usize;
            Ok(Chart {
                index,
                saddle,
                p,
                q,
                lambda,
                unstable: [eu[0], eu[1]],
                stable: [es[0], es[1]],
                seed_steps,
                basis_inverse: [[bi[(0, 0)], bi[(0, 1)]], [bi[(1, 0)], bi[(1, 1)]]],
            })
        })
        .collect()
}

/// Newton in double-double for `F^q(z) = z + (p, 0)`.
fn refine_saddle<G: PreciseStep>(tm: &TwistMap<G>, z: [f64; 2], p: i64, q: usize) -> Result<[Dd; 2], HorseshoeError> {
    let mut w = to_dd(z);
    for _ in 0..20 {
        let f = iterate_dd(&tm.gf, w, q as i64);
        let r = [f[0] - w[0] - Dd::new(p as f64), f[1] - w[1]];
        let j = jacobian_power(tm, to_f64(w), q as i64) - Matrix2::identity();
        let inv = j.try_inverse().ok_or(TwistError::NotSaddle { trace: 2.0 })?;
        let d = inv * Vector2::new(r[0].to_f64(), r[1].to_f64());
        w = [w[0] - Dd::new(d[0]), w[1] - Dd::new(d[1])];
        if d.norm() < 1e-31 {
            break;
        }
    }
    Ok(w)
}
