//! Global branches of the invariant manifolds and their transverse
//! intersections.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::chart::{Chart, PreciseStep};
use crate::error::HorseshoeError;
use crate::twist::TwistMap;

/// Smallest parameter on a branch; the first segment is the linear seed.
const FIRST_PARAM: f64 = 1e-7;
pub const TANGENCY_TOLERANCE: f64 = 1e-6;
pub const TRANSVERSALITY: f64 = 1e-2;
const MAX_TURN: f64 = 0.2;
/// Relative parameter step below which growth stops.
const RESOLUTION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Unstable,
    Stable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifoldPolyline {
    pub chart: usize,
    pub kind: ManifoldKind,
    /// `+1` for the branch towards the neighbouring saddle, `−1` otherwise.
    pub side: i8,
    pub base: [f64; 2],
    /// Cover translation added to every point.
    pub offset: f64,
    pub params: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub arclength: Vec<f64>,
    /// Growth stopped before the budget because the parameter ran out of precision.
    pub truncated: bool,
}

impl ManifoldPolyline {
    pub fn total_length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn branch_point<G: PreciseStep>(tm: &TwistMap<G>, chart: &Chart, kind: ManifoldKind, t: f64) -> [f64; 2] {
    match kind {
        ManifoldKind::Unstable => chart.unstable_point(tm, t),
        ManifoldKind::Stable => chart.stable_point(tm, t),
    }
}

/// Grows one branch by adaptive stepping in its parameter until the
/// polyline has the requested arclength. Consecutive points are at most
/// `step` apart and turn by at most `MAX_TURN` radians.
pub fn grow_manifold<G: PreciseStep>(
    tm: &TwistMap<G>,
    chart: &Chart,
    kind: ManifoldKind,
    side: i8,
    budget: f64,
    step: f64,
) -> Result<ManifoldPolyline, HorseshoeError> {
    let sign = if side >= 0 { 1.0 } else { -1.0 };
    let base = chart.saddle_f64();
    let e = match kind {
        ManifoldKind::Unstable => chart.unstable,
        ManifoldKind::Stable => chart.stable,
    };
    let first = branch_point(tm, chart, kind, sign * FIRST_PARAM);
    let d = [first[0] - base[0], first[1] - base[1]];
    let cross = (d[0] * e[1] - d[1] * e[0]).abs() / d[0].hypot(d[1]);
    if !(cross < TANGENCY_TOLERANCE) {
        return Err(HorseshoeError::SeedTooLarge { angle: cross.asin() });
    }
    let mut params = vec![0.0, sign * FIRST_PARAM];
    let mut points = vec![base, first];
    let mut arclength = vec![0.0, dist(base, first)];
    let mut dt = FIRST_PARAM;
    let mut truncated = false;
    while *arclength.last().unwrap() < budget {
        let n = points.len();
        let (t, last, prev) = (*params.last().unwrap(), points[n - 1], points[n - 2]);
        let mut accepted = None;
        while dt >= RESOLUTION * t.abs().max(1.0) {
            let cand = branch_point(tm, chart, kind, t + sign * dt);
            let len = dist(cand, last);
            let a = [last[0] - prev[0], last[1] - prev[1]];
            let b = [cand[0] - last[0], cand[1] - last[1]];
            let turn = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).abs();
            if len <= step && (turn <= MAX_TURN || len <= 1e-3 * step) {
                accepted = Some((cand, len));
                break;
            }
            dt *= 0.5;
        }
        // Past a close passage by a saddle the parameter can no longer
        // resolve the branch; the polyline stops there.
        let Some((cand, len)) = accepted else {
            truncated = true;
            break;
        };
        params.push(t + sign * dt);
        points.push(cand);
        arclength.push(arclength[n - 1] + len);
        if len < 0.25 * step {
            dt *= 2.0;
        }
    }
    Ok(ManifoldPolyline { chart: chart.index, kind, side, base, offset: 0.0, params, points, arclength, truncated })
}

/// A transverse intersection `P_u(U) = P_s(S)` between the unstable branch of
/// one saddle and the stable branch of the next.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CyclePoint {
    pub point: [f64; 2],
    pub u: f64,
    pub s: f64,
    /// Crossing angle in radians.
    pub angle: f64,
    pub orbit: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeteroclinicCycle {
    pub saddles: Vec<[f64; 2]>,
    pub period: usize,
    /// `points[k]`: one representative per orbit from saddle `k` to saddle `k+1`,
    /// in order along the unstable branch.
    pub points: Vec<Vec<CyclePoint>>,
    pub counts: Vec<usize>,
}

fn segment_hit(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> Option<(f64, f64)> {
    let r = [a1[0] - a0[0], a1[1] - a0[1]];
    let s = [b1[0] - b0[0], b1[1] - b0[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let w = [b0[0] - a0[0], b0[1] - a0[1]];
    let t = (w[0] * s[1] - w[1] * s[0]) / den;
    let v = (w[0] * r[1] - w[1] * r[0]) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&v)).then_some((t, v))
}

/// Parameter pairs where two polylines cross, via a uniform grid.
pub fn polyline_crossings(a: &ManifoldPolyline, b: &ManifoldPolyline) -> Vec<(f64, f64)> {
    let cell = a
        .points
        .windows(2)
        .chain(b.points.windows(2))
        .map(|w| dist(w[0], w[1]))
        .fold(1e-9, f64::max)
        * 2.0;
    let key = |p: [f64; 2]| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, w) in b.points.windows(2).enumerate() {
        let (k0, k1) = (key(w[0]), key(w[1]));
        for x in k0.0.min(k1.0)..=k0.0.max(k1.0) {
            for y in k0.1.min(k1.1)..=k0.1.max(k1.1) {
                grid.entry((x, y)).or_default().push(i);
            }
        }
    }
    let bo = [b.offset, 0.0];
    let ao = [a.offset, 0.0];
    let shift = |p: [f64; 2], o: [f64; 2]| [p[0] + o[0], p[1] + o[1]];
    let mut out = Vec::new();
    for (i, w) in a.points.windows(2).enumerate() {
        let (p0, p1) = (shift(w[0], ao), shift(w[1], ao));
        let (k0, k1) = (key([p0[0] - bo[0], p0[1]]), key([p1[0] - bo[0], p1[1]]));
        let mut seen = Vec::new();
        for x in k0.0.min(k1.0)..=k0.0.max(k1.0) {
            for y in k0.1.min(k1.1)..=k0.1.max(k1.1) {
                for &j in grid.get(&(x, y)).into_iter().flatten() {
                    if seen.contains(&j) {
                        continue;
                    }
                    seen.push(j);
                    let (q0, q1) = (shift(b.points[j], bo), shift(b.points[j + 1], bo));
                    if let Some((t, v)) = segment_hit(p0, p1, q0, q1) {
                        let ta = a.params[i] + t * (a.params[i + 1] - a.params[i]);
                        let tb = b.params[j] + v * (b.params[j + 1] - b.params[j]);
                        out.push((ta, tb));
                    }
                }
            }
        }
    }
    out
}

/// Newton on `P_u(U) = P_s(S) + offset` with difference quotients.
fn refine_crossing<G: PreciseStep>(
    tm: &TwistMap<G>,
    from: &Chart,
    to: &Chart,
    offset: f64,
    mut u: f64,
    mut s: f64,
) -> Option<(f64, f64, [f64; 2], f64)> {
    let pu = |u: f64| from.unstable_point(tm, u);
    let ps = |s: f64| {
        let p = to.stable_point(tm, s);
        [p[0] + offset, p[1]]
    };
    for _ in 0..40 {
        let (a, b) = (pu(u), ps(s));
        let r = [a[0] - b[0], a[1] - b[1]];
        let (hu, hs) = (1e-7 * u.abs().max(1e-3), 1e-7 * s.abs().max(1e-3));
        let du = {
            let (p, m) = (pu(u + hu), pu(u - hu));
            [(p[0] - m[0]) / (2.0 * hu), (p[1] - m[1]) / (2.0 * hu)]
        };
        let ds = {
            let (p, m) = (ps(s + hs), ps(s - hs));
            [(p[0] - m[0]) / (2.0 * hs), (p[1] - m[1]) / (2.0 * hs)]
        };
        // [du, −ds] (δu, δs)ᵀ = −r
        let det = du[0] * (-ds[1]) - (-ds[0]) * du[1];
        if det == 0.0 {
            return None;
        }
        let dx = (-r[0] * (-ds[1]) - (-ds[0]) * (-r[1])) / det;
        let dy = (du[0] * (-r[1]) - (-r[0]) * du[1]) / det;
        u += dx;
        s += dy;
        if dx.abs() < 1e-14 * u.abs().max(1e-3) && dy.abs() < 1e-14 * s.abs().max(1e-3) {
            let (nu, ns) = (du[0].hypot(du[1]), ds[0].hypot(ds[1]));
            let sin = (du[0] * ds[1] - du[1] * ds[0]).abs() / (nu * ns);
            return Some((u, s, pu(u), sin.min(1.0).asin()));
        }
    }
    None
}

/// Fractional part of `log_λ t`, the position of `t` in a fundamental domain.
fn phase(t: f64, lambda: f64) -> f64 {
    (t.ln() / lambda.ln()).rem_euclid(1.0)
}

/// Intersections of the right-going unstable branch of each saddle with the
/// left-arriving stable branch of the next one, reduced to primary orbits.
///
/// A crossing is primary when no other crossing comes before it along both
/// branches; crossings on one `F^q`-orbit are collapsed to a representative
/// chosen so that the order along the unstable branch is the reverse of the
/// order along the stable branch.
pub fn find_cycle<G: PreciseStep>(
    tm: &TwistMap<G>,
    charts: &[Chart],
    budget: f64,
    step: f64,
) -> Result<HeteroclinicCycle, HorseshoeError> {
    let q = charts.len();
    let mut all = Vec::with_capacity(q);
    for k in 0..q {
        let from = &charts[k];
        let to = &charts[(k + 1) % q];
        let offset = if k + 1 == q { 1.0 } else { 0.0 };
        let wu = grow_manifold(tm, from, ManifoldKind::Unstable, 1, budget, step)?;
        let mut ws = grow_manifold(tm, to, ManifoldKind::Stable, 1, budget, step)?;
        ws.offset = offset;
        let mut found: Vec<(f64, f64, [f64; 2], f64)> = Vec::new();
        for (u, s) in polyline_crossings(&wu, &ws) {
            if u <= 0.0 || s <= 0.0 {
                continue;
            }
            if let Some(c) = refine_crossing(tm, from, to, offset, u, s) {
                if c.0 > 0.0 && c.1 > 0.0 && c.3 >= TRANSVERSALITY && !found.iter().any(|f| dist(f.2, c.2) < 1e-9) {
                    found.push(c);
                }
            }
        }
        let primary: Vec<_> = found
            .iter()
            .filter(|c| !found.iter().any(|d| d.0 < c.0 * (1.0 - 1e-9) && d.1 < c.1 * (1.0 - 1e-9)))
            .cloned()
            .collect();
        let lambda = from.lambda;
        // Group by F^q-orbit: same phase in u, opposite phase shift in s.
        let mut orbits: Vec<(f64, f64, [f64; 2], f64)> = Vec::new();
        for c in &primary {
            let same = orbits.iter().any(|o| {
                let j = (c.0 / o.0).ln() / lambda.ln();
                let i = (o.1 / c.1).ln() / lambda.ln();
                (j - j.round()).abs() < 1e-6 && (i - j).abs() < 1e-6
            });
            if !same {
                orbits.push(*c);
            }
        }
        if orbits.is_empty() {
            return Err(HorseshoeError::NoTransverseIntersection);
        }
        orbits.sort_by(|a, b| phase(a.0, lambda).total_cmp(&phase(b.0, lambda)));
        let mut chosen = None;
        for start in 0..orbits.len() {
            // Fundamental domain centred where the first orbit is balanced, U ≈ S.
            let l0 = (orbits[start].0 * orbits[start].1).sqrt().ln() / lambda.ln() - 0.5;
            let reps: Vec<_> = (0..orbits.len())
                .map(|i| {
                    let o = orbits[(start + i) % orbits.len()];
                    // Move o along its orbit so that log_λ U lies in [l0, l0 + 1).
                    let lo = o.0.ln() / lambda.ln();
                    let f = lambda.powi((l0 - lo - 1e-9).ceil() as i32);
                    let (u, sv) = (o.0 * f, o.1 / f);
                    let angle = refine_crossing(tm, from, to, offset, u, sv).map_or(o.3, |c| c.3);
                    (u, sv, from.unstable_point(tm, u), angle)
                })
                .collect();
            if reps.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1) {
                chosen = Some(reps);
                break;
            }
        }
        let reps = chosen.ok_or(HorseshoeError::OrderingInconsistent)?;
        all.push(
            reps.into_iter()
                .enumerate()
                .map(|(orbit, (u, s, point, angle))| CyclePoint { point, u, s, angle, orbit })
                .collect::<Vec<_>>(),
        );
    }
    Ok(HeteroclinicCycle {
        saddles: charts.iter().map(|c| c.saddle_f64()).collect(),
        period: q,
        counts: all.iter().map(|v| v.len()).collect(),
        points: all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horseshoe::chart::saddle_charts;
    use crate::twist::standard_family;

    #[test]
    fn unstable_seed_is_tangent_and_branches_meet() {
        let (_, tm) = standard_family(1.0).unwrap();
        let charts = saddle_charts(&tm, 0, 1).unwrap();
        let wu = grow_manifold(&tm, &charts[0], ManifoldKind::Unstable, 1, 4.0, 0.01).unwrap();
        let d = [wu.points[1][0] - wu.base[0], wu.points[1][1] - wu.base[1]];
        let e = charts[0].unstable;
        assert!((d[0] * e[1] - d[1] * e[0]).abs() / d[0].hypot(d[1]) < 1e-6);
        assert!(wu.total_length() >= 4.0);
        assert!(wu.points.windows(2).all(|w| dist(w[0], w[1]) <= 0.01 + 1e-12));
        let cycle = find_cycle(&tm, &charts, 4.0, 0.01).unwrap();
        assert!(cycle.counts[0] >= 1);
        assert!(cycle.points[0].iter().all(|p| p.angle > 1e-2));
    }
}
