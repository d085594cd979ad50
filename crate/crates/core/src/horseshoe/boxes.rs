//! Points of the horseshoe with a prescribed itinerary, located by
//! multiple shooting in double-double precision, and the nested boxes
//! `D^s_n ∩ D^u_n` around them.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::chart::{iterate_dd, jacobian_power, to_f64, PreciseStep};
use super::markov::{check_admissible, TransitionMatrix};
use super::partition::{Geometry, Strip};
use crate::dd::Dd;
use crate::error::HorseshoeError;

/// Orbit segment `z_0, …, z_{m−1}` of `g` with `z_{j+1} = g(z_j) − (shift_j, 0)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chain {
    pub word: Vec<usize>,
    pub points: Vec<[Dd; 2]>,
    /// Largest residual of the chain equations.
    pub residual: f64,
    pub cyclic: bool,
}

/// Parallelogram `center + a·axes[0] + b·axes[1]`, `|a| ≤ half[0]`, `|b| ≤ half[1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestedBox {
    pub word: Vec<usize>,
    /// Position of the central letter in `word`.
    pub center_index: usize,
    pub center: [Dd; 2],
    /// Unit unstable and stable directions.
    pub axes: [[f64; 2]; 2],
    pub half: [f64; 2],
    pub diameter: f64,
    pub chain: Chain,
}

impl NestedBox {
    /// Box coordinates `(a, b)` of `z` relative to the center.
    pub fn local(&self, z: [Dd; 2]) -> [f64; 2] {
        let d = [(z[0] - self.center[0]).to_f64(), (z[1] - self.center[1]).to_f64()];
        let m = Matrix2::new(self.axes[0][0], self.axes[1][0], self.axes[0][1], self.axes[1][1]);
        let inv = m.try_inverse().unwrap_or_else(Matrix2::zeros);
        let c = inv * Vector2::new(d[0], d[1]);
        [c[0], c[1]]
    }

    pub fn contains(&self, z: [Dd; 2], slack: f64) -> bool {
        let c = self.local(z);
        c[0].abs() <= self.half[0] * (1.0 + slack) && c[1].abs() <= self.half[1] * (1.0 + slack)
    }

    pub fn distance_to(&self, z: [Dd; 2]) -> f64 {
        (z[0] - self.center[0]).to_f64().hypot((z[1] - self.center[1]).to_f64())
    }

    /// Separating-axis gap to another box; positive when they are disjoint.
    pub fn separation(&self, other: &NestedBox) -> f64 {
        let d = [(other.center[0] - self.center[0]).to_f64(), (other.center[1] - self.center[1]).to_f64()];
        let radius = |b: &NestedBox, n: [f64; 2]| {
            (0..2).map(|i| (b.half[i] * (b.axes[i][0] * n[0] + b.axes[i][1] * n[1])).abs()).sum::<f64>()
        };
        let mut best = f64::NEG_INFINITY;
        for b in [self, other] {
            for ax in b.axes {
                let n = [-ax[1], ax[0]];
                let gap = (d[0] * n[0] + d[1] * n[1]).abs() - radius(self, n) - radius(other, n);
                best = best.max(gap);
            }
        }
        best
    }
}

/// Closing conditions are met once below this.
const CLOSE_TOL: f64 = 1e-13;

fn dg<G: PreciseStep>(geo: &Geometry<G>, z: [f64; 2]) -> Matrix2<f64> {
    jacobian_power(geo.tm, z, (geo.period() * geo.n) as i64)
}

/// Chart derivative columns `∂Φ/∂u`, `∂Φ/∂s` at chart point `c`.
fn chart_frame<G: PreciseStep>(geo: &Geometry<G>, k: usize, c: [f64; 2]) -> [[f64; 2]; 2] {
    let h = 1e-7;
    let d = |e: [f64; 2]| {
        let a = geo.phi(k, [c[0] + h * e[0], c[1] + h * e[1]]);
        let b = geo.phi(k, [c[0] - h * e[0], c[1] - h * e[1]]);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    };
    [d([1.0, 0.0]), d([0.0, 1.0])]
}

/// Gradient of the chart coordinate `i` at cover point `z`.
fn coord_gradient<G: PreciseStep>(geo: &Geometry<G>, k: usize, z: [f64; 2], i: usize) -> Option<[f64; 2]> {
    let h = 1e-8;
    let mut g = [0.0; 2];
    for (e, gi) in g.iter_mut().enumerate() {
        let mut a = z;
        let mut b = z;
        a[e] += h;
        b[e] -= h;
        *gi = (geo.coords(k, a)?[i] - geo.coords(k, b)?[i]) / (2.0 * h);
    }
    Some(g)
}

/// Solves the chain for `word` by Newton's method. Open chains close with
/// `s(z_0) = s_mid` and `u(z_{m−1})` at the middle of its chord; cyclic
/// chains close on themselves.
pub fn shoot<G: PreciseStep>(geo: &Geometry<G>, matrix: &TransitionMatrix, strips: &[Strip], word: &[usize], cyclic: bool) -> Result<Chain, HorseshoeError> {
    check_admissible(matrix, word)?;
    if cyclic && !matrix.allows(*word.last().unwrap(), word[0]) {
        return Err(HorseshoeError::NotAdmissible { position: word.len() as i64 - 1 });
    }
    let m = word.len();
    let shape = geo.shape;
    let s_mid = 0.5 * (shape.delta_s - shape.eta);
    let chart = |j: usize| strips[word[j]].label.0;
    let steps = (geo.period() * geo.n) as i64;
    let mut z: Vec<[Dd; 2]> = (0..m)
        .map(|j| {
            let prev = if j > 0 { Some(word[j - 1]) } else if cyclic { Some(word[m - 1]) } else { None };
            let s = prev.map_or(s_mid, |p| 0.5 * (strips[p].image_s[0] + strips[p].image_s[1]));
            let c = strips[word[j]].chord_at(s);
            let p = geo.phi(chart(j), [0.5 * (c[0] + c[1]), s]);
            [Dd::new(p[0]), Dd::new(p[1])]
        })
        .collect();
    let links = if cyclic { m } else { m - 1 };
    let dim = 2 * m;
    // Chain rows are exact to double-double; closing rows only to f64.
    let residual = |z: &[[Dd; 2]]| -> Option<(Vec<Dd>, f64, f64)> {
        let mut r = Vec::with_capacity(dim);
        for j in 0..links {
            let next = (j + 1) % m;
            let gz = iterate_dd(&geo.tm.gf, z[j], steps);
            let sh = Dd::new(strips[word[j]].shift as f64);
            r.push(gz[0] - sh - z[next][0]);
            r.push(gz[1] - z[next][1]);
        }
        let chain_norm = r.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
        let mut close_norm: f64 = 0.0;
        if !cyclic {
            let c0 = geo.coords(chart(0), to_f64(z[0]))?;
            let cl = geo.coords(chart(m - 1), to_f64(z[m - 1]))?;
            let ch = strips[word[m - 1]].chord_at(cl[1]);
            for v in [c0[1] - s_mid, cl[0] - 0.5 * (ch[0] + ch[1])] {
                r.push(Dd::new(v));
                close_norm = close_norm.max(v.abs());
            }
        }
        Some((r, chain_norm, close_norm))
    };
    let merit = |a: f64, b: f64| a + (b - CLOSE_TOL).max(0.0);
    let (mut r, mut norm, mut close) = residual(&z).ok_or(HorseshoeError::EmptyClip { depth: 0 })?;
    for _ in 0..40 {
        if norm < 1e-30 && close < CLOSE_TOL {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..links {
            let next = (j + 1) % m;
            let d = dg(geo, to_f64(z[j]));
            for a in 0..2 {
                for b in 0..2 {
                    jac[(2 * j + a, 2 * j + b)] += d[(a, b)];
                }
                jac[(2 * j + a, 2 * next + a)] -= 1.0;
            }
        }
        if !cyclic {
            let g0 = coord_gradient(geo, chart(0), to_f64(z[0]), 1).ok_or(HorseshoeError::EmptyClip { depth: 0 })?;
            let gl = coord_gradient(geo, chart(m - 1), to_f64(z[m - 1]), 0).ok_or(HorseshoeError::EmptyClip { depth: m })?;
            jac[(dim - 2, 0)] = g0[0];
            jac[(dim - 2, 1)] = g0[1];
            jac[(dim - 1, dim - 2)] = gl[0];
            jac[(dim - 1, dim - 1)] = gl[1];
        }
        let rhs = DVector::from_iterator(dim, r.iter().map(|v| -v.to_f64()));
        let delta = jac.lu().solve(&rhs).ok_or(HorseshoeError::EmptyClip { depth: 0 })?;
        let mut t = 1.0;
        let mut accepted = false;
        let before = merit(norm, close);
        for _ in 0..30 {
            let trial: Vec<[Dd; 2]> = (0..m)
                .map(|j| [z[j][0] + Dd::new(t * delta[2 * j]), z[j][1] + Dd::new(t * delta[2 * j + 1])])
                .collect();
            if let Some((rt, nt, ct)) = residual(&trial) {
                if merit(nt, ct) < before {
                    z = trial;
                    r = rt;
                    norm = nt;
                    close = ct;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm > 1e-26 || close > 1e-10 {
        return Err(HorseshoeError::EmptyClip { depth: m });
    }
    Ok(Chain { word: word.to_vec(), points: z, residual: norm, cyclic })
}

/// Nested box of `word` around its letter at `center_index`.
pub fn point_from_itinerary<G: PreciseStep>(
    geo: &Geometry<G>,
    matrix: &TransitionMatrix,
    strips: &[Strip],
    word: &[usize],
    center_index: usize,
) -> Result<NestedBox, HorseshoeError> {
    let chain = shoot(geo, matrix, strips, word, false)?;
    let m = word.len();
    // Every point must sit in its strip.
    for (j, z) in chain.points.iter().enumerate() {
        let st = &strips[word[j]];
        let depth = j.abs_diff(center_index);
        let c = geo.coords(st.label.0, to_f64(*z)).ok_or(HorseshoeError::EmptyClip { depth })?;
        if !geo.shape.contains(c) || !st.contains(c, 1e-9) {
            return Err(HorseshoeError::EmptyClip { depth });
        }
    }
    let pts: Vec<[f64; 2]> = chain.points.iter().map(|&p| to_f64(p)).collect();
    let chart = |j: usize| strips[word[j]].label.0;
    let c0 = geo.coords(chart(0), pts[0]).unwrap();
    let cl = geo.coords(chart(m - 1), pts[m - 1]).unwrap();
    let f0 = chart_frame(geo, chart(0), c0);
    let fl = chart_frame(geo, chart(m - 1), cl);
    // Unstable direction: chart u-axis at the start pushed to the center.
    let mut vu = Vector2::new(f0[0][0], f0[0][1]);
    for p in &pts[..center_index] {
        vu = dg(geo, *p) * vu;
        vu /= vu.norm();
    }
    // Stable direction: chart s-axis at the end pulled back to the center.
    let mut vs = Vector2::new(fl[1][0], fl[1][1]);
    for p in pts[center_index..m - 1].iter().rev() {
        vs = dg(geo, *p).try_inverse().unwrap_or_else(Matrix2::zeros) * vs;
        vs /= vs.norm();
    }
    // Expansion from the center to the far end along each axis.
    let mut eu = vu;
    let mut grow_u = 1.0;
    for p in &pts[center_index..m - 1] {
        eu = dg(geo, *p) * eu;
        grow_u *= eu.norm();
        eu /= eu.norm();
    }
    let mut es = vs;
    let mut grow_s = 1.0;
    for p in pts[..center_index].iter().rev() {
        es = dg(geo, *p).try_inverse().unwrap_or_else(Matrix2::zeros) * es;
        grow_s *= es.norm();
        es /= es.norm();
    }
    let chord = strips[word[m - 1]].chord_at(cl[1]);
    let du = Vector2::new(fl[0][0], fl[0][1]).norm();
    let ds = Vector2::new(f0[1][0], f0[1][1]).norm();
    let half_u = 0.5 * (chord[1] - chord[0]) * du / grow_u;
    let half_s = 0.5 * (geo.shape.delta_s + geo.shape.eta) * ds / grow_s;
    let diag = |sg: f64| (2.0 * half_u * vu + sg * 2.0 * half_s * vs).norm();
    let diameter = diag(1.0).max(diag(-1.0));
    Ok(NestedBox {
        word: word.to_vec(),
        center_index,
        center: chain.points[center_index],
        axes: [[vu[0], vu[1]], [vs[0], vs[1]]],
        half: [half_u, half_s],
        diameter,
        chain,
    })
}

/// Strip index containing each point, or `None` outside all strips.
pub fn measured_itinerary<G: PreciseStep>(geo: &Geometry<G>, strips: &[Strip], points: &[[Dd; 2]]) -> Vec<Option<usize>> {
    points
        .iter()
        .map(|&z| {
            let z = to_f64(z);
            geo.locate(z).and_then(|(k, c)| strips.iter().position(|st| st.label.0 == k && st.contains(c, 1e-9)))
        })
        .collect()
}
