//! Markov strips inside the saddle boxes and the verified transition matrix.
//!
//! Each saddle carries a box `Q = Φ([−η, δ_u] × [−η, δ_s])`. For the return
//! map `g = F^{qN}` the strips are the components of `Q ∩ g⁻¹(Q)` that cross
//! `Q` from the bottom side to the top side; `g` stretches each of them
//! across the full `u`-width of a box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{Chart, PreciseStep};
use super::manifold::HeteroclinicCycle;
use crate::error::HorseshoeError;
use crate::twist::TwistMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxShape {
    pub delta_u: f64,
    pub delta_s: f64,
    pub eta: f64,
}

impl Default for BoxShape {
    fn default() -> Self {
        BoxShape { delta_u: 0.06, delta_s: 0.06, eta: 0.01 }
    }
}

impl BoxShape {
    pub fn contains(&self, c: [f64; 2]) -> bool {
        self.depth(c) > 0.0
    }

    /// Signed distance to the box boundary in chart units, positive inside.
    pub fn depth(&self, c: [f64; 2]) -> f64 {
        (c[0] + self.eta).min(self.delta_u - c[0]).min(c[1] + self.eta).min(self.delta_s - c[1])
    }

    pub fn u_range(&self) -> [f64; 2] {
        [-self.eta, self.delta_u]
    }

    pub fn s_range(&self) -> [f64; 2] {
        [-self.eta, self.delta_s]
    }
}

/// Sampling density of the strip boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub lines: usize,
    pub per_chord: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { lines: 17, per_chord: 17 }
    }
}

impl Sampling {
    pub fn doubled(self) -> Sampling {
        Sampling { lines: 2 * self.lines - 1, per_chord: 2 * self.per_chord - 1 }
    }
}

/// Return map, chart lookup and box membership for one configuration.
pub struct Geometry<'a, G> {
    pub tm: &'a TwistMap<G>,
    pub charts: &'a [Chart],
    pub shape: BoxShape,
    pub n: usize,
}

impl<G: PreciseStep> Geometry<'_, G> {
    pub fn period(&self) -> usize {
        self.charts[0].q
    }

    /// `g = F^{qN}` on the cover.
    pub fn g(&self, z: [f64; 2]) -> [f64; 2] {
        self.tm.iterate(z, (self.period() * self.n) as i64)
    }

    pub fn phi(&self, k: usize, c: [f64; 2]) -> [f64; 2] {
        self.charts[k].phi(&self.tm.gf, c[0], c[1])
    }

    pub fn coords(&self, k: usize, z: [f64; 2]) -> Option<[f64; 2]> {
        self.charts[k].inverse(&self.tm.gf, z)
    }

    /// Chart and coordinates of the box containing `z`, if any.
    pub fn locate(&self, z: [f64; 2]) -> Option<(usize, [f64; 2])> {
        self.charts.iter().enumerate().find_map(|(k, c)| {
            let x0 = c.saddle_f64();
            let dx = (z[0] - x0[0]) - (z[0] - x0[0]).round();
            if dx.hypot(z[1] - x0[1]) > 2.0 * CHART_BALL {
                return None;
            }
            self.coords(k, z).filter(|w| self.shape.contains(*w)).map(|w| (k, w))
        })
    }

    /// Largest depth inside any box over `F^{−j}(z)`, `0 ≤ j < qN`; positive
    /// exactly when `z` lies in the neighbourhood `⋃_j F^j(Q)`.
    pub fn neighborhood_depth(&self, z: [f64; 2]) -> f64 {
        let mut w = z;
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.period() * self.n {
            if j > 0 {
                w = self.tm.backward(w);
            }
            for k in 0..self.charts.len() {
                let x0 = self.charts[k].saddle_f64();
                let dx = (w[0] - x0[0]) - (w[0] - x0[0]).round();
                if dx.hypot(w[1] - x0[1]) > 2.0 * CHART_BALL {
                    continue;
                }
                if let Some(c) = self.coords(k, w) {
                    best = best.max(self.shape.depth(c));
                }
            }
        }
        best
    }
}

/// Boxes live well inside this Euclidean radius around their saddle.
const CHART_BALL: f64 = 0.75;

/// A vertical strip of `Q_k` mapped by `g` across `Q_target`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Strip {
    /// `(chart, index)`; index 0 is the strip through the saddle.
    pub label: (usize, usize),
    pub target: usize,
    /// Integer `x`-translation taking `g` of the strip back next to the target saddle.
    pub shift: i64,
    /// Heteroclinic orbit whose point on the local unstable manifold the strip contains.
    pub orbit: Option<usize>,
    pub anchor_u: f64,
    pub landing_s: f64,
    pub lines: Vec<f64>,
    /// `[a, b]` in chart `u` on each line `s = lines[i]`.
    pub chords: Vec<[f64; 2]>,
    /// Range of chart `s` over the `g`-image of the sampled strip.
    pub image_s: [f64; 2],
    /// Distance of the strip from the stable sides of `Q`.
    pub margin_u: f64,
    /// Distance of the image from the unstable sides of the target box.
    pub margin_s: f64,
    /// Largest slope `|du/ds|` of the strip sides and `|ds/du|` of the image sides.
    pub slope: f64,
    /// Largest residual of the chord endpoints against the box sides.
    pub endpoint_residual: f64,
}

impl Strip {
    pub fn proper(&self) -> bool {
        self.margin_u > 0.0 && self.margin_s > 0.0 && self.slope < 1.0
    }

    /// Chord at height `s` by linear interpolation between lines.
    pub fn chord_at(&self, s: f64) -> [f64; 2] {
        let n = self.lines.len();
        let i = self.lines.partition_point(|&l| l <= s).clamp(1, n - 1);
        let t = (s - self.lines[i - 1]) / (self.lines[i] - self.lines[i - 1]);
        let (a, b) = (self.chords[i - 1], self.chords[i]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    pub fn contains(&self, c: [f64; 2], slack: f64) -> bool {
        let ch = self.chord_at(c[1]);
        c[0] >= ch[0] - slack && c[0] <= ch[1] + slack
    }
}

/// Chart `u` of `g(Φ_k(u, s))` read in the target chart.
fn image_coords<G: PreciseStep>(geo: &Geometry<G>, k: usize, target: usize, u: f64, s: f64) -> Option<[f64; 2]> {
    geo.coords(target, geo.g(geo.phi(k, [u, s])))
}

/// Solves `image_u(u) = value` by damped secant steps starting at `u0`.
fn solve_image_u<G: PreciseStep>(
    geo: &Geometry<G>,
    k: usize,
    target: usize,
    s: f64,
    value: f64,
    u0: f64,
    width: f64,
) -> Option<f64> {
    let f = |u: f64| image_coords(geo, k, target, u, s).map(|c| c[0] - value);
    let mut u = u0;
    let mut fu = f(u)?;
    let h = (width * 1e-4).max(1e-12);
    for _ in 0..60 {
        let d = (f(u + h)? - fu) / h;
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let mut step = -fu / d;
        // Keep steps within a few strip widths.
        step = step.clamp(-4.0 * width, 4.0 * width);
        let mut next = u + step;
        let mut fnext = f(next);
        let mut tries = 0;
        while fnext.is_none_or(|v| v.abs() > fu.abs()) && tries < 30 {
            step *= 0.5;
            next = u + step;
            fnext = f(next);
            tries += 1;
        }
        let fnext = fnext?;
        u = next;
        fu = fnext;
        if fu.abs() < 1e-13 || step.abs() < 1e-16 {
            return Some(u);
        }
    }
    (fu.abs() < 1e-10).then_some(u)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rejected {
    pub chart: usize,
    pub orbit: Option<usize>,
    pub anchor_u: f64,
    pub reason: String,
}

/// Traces one candidate strip line by line, starting from its anchor on the
/// local unstable manifold.
pub fn trace_strip<G: PreciseStep>(
    geo: &Geometry<G>,
    k: usize,
    target: usize,
    anchor_u: f64,
    landing_s: f64,
    sampling: Sampling,
) -> Result<Strip, String> {
    let shape = geo.shape;
    let lam = geo.charts[k].lambda.powi(geo.n as i32);
    let width = (shape.delta_u + shape.eta) / lam;
    let lines: Vec<f64> =
        (0..sampling.lines).map(|i| -shape.eta + (shape.delta_s + shape.eta) * i as f64 / (sampling.lines - 1) as f64).collect();
    let mid_value = 0.5 * (shape.delta_u - shape.eta);
    // March outwards from s = 0 so every line starts near its neighbour.
    let start = lines.partition_point(|&l| l < 0.0).min(lines.len() - 1);
    let mut mids = vec![f64::NAN; lines.len()];
    let order: Vec<usize> = (start..lines.len()).chain((0..start).rev()).collect();
    for &i in &order {
        let guess = if i >= start {
            if i == start { anchor_u } else { mids[i - 1] }
        } else {
            mids[i + 1]
        };
        let m = solve_image_u(geo, k, target, lines[i], mid_value, guess, width)
            .ok_or_else(|| format!("strip lost at s = {:.4}", lines[i]))?;
        mids[i] = m;
    }
    let mut chords = Vec::with_capacity(lines.len());
    let mut image_s = [f64::INFINITY, f64::NEG_INFINITY];
    let mut margin_u = f64::INFINITY;
    let mut endpoint_residual: f64 = 0.0;
    let mut slope: f64 = 0.0;
    for (i, &s) in lines.iter().enumerate() {
        let lo = solve_image_u(geo, k, target, s, -shape.eta, mids[i], width)
            .ok_or_else(|| format!("no lower end at s = {s:.4}"))?;
        let hi = solve_image_u(geo, k, target, s, shape.delta_u, mids[i], width)
            .ok_or_else(|| format!("no upper end at s = {s:.4}"))?;
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        for (u, v) in [(lo, -shape.eta), (hi, shape.delta_u)] {
            let c = image_coords(geo, k, target, u, s).ok_or("endpoint image out of chart")?;
            endpoint_residual = endpoint_residual.max((c[0] - v).abs());
        }
        margin_u = margin_u.min(a + shape.eta).min(shape.delta_u - b);
        let mut prev: Option<[f64; 2]> = None;
        for j in 0..sampling.per_chord {
            let u = a + (b - a) * j as f64 / (sampling.per_chord - 1) as f64;
            let c = image_coords(geo, k, target, u, s).ok_or("image out of chart")?;
            image_s = [image_s[0].min(c[1]), image_s[1].max(c[1])];
            if let Some(p) = prev {
                let du = c[0] - p[0];
                if (du > 0.0) != (lo < hi) {
                    return Err(format!("image not monotone at s = {s:.4}"));
                }
                slope = slope.max(((c[1] - p[1]) / du).abs());
            }
            prev = Some(c);
        }
        chords.push([a, b]);
    }
    for w in 0..lines.len() - 1 {
        let ds = lines[w + 1] - lines[w];
        for e in 0..2 {
            slope = slope.max(((chords[w + 1][e] - chords[w][e]) / ds).abs());
        }
    }
    let margin_s = (image_s[0] + shape.eta).min(shape.delta_s - image_s[1]);
    let probe = geo.g(geo.phi(k, [mids[start], lines[start]]));
    let shift = (probe[0] - geo.charts[target].saddle_f64()[0]).round() as i64;
    Ok(Strip {
        label: (k, 0),
        target,
        shift,
        orbit: None,
        anchor_u,
        landing_s,
        lines,
        chords,
        image_s,
        margin_u,
        margin_s,
        slope,
        endpoint_residual,
    })
}

/// Proper strips for a given `N`, plus the candidates that failed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripSet {
    pub n: usize,
    pub strips: Vec<Strip>,
    pub rejected: Vec<Rejected>,
    /// Smallest gap between chords of distinct strips on a common line.
    pub separation: f64,
}

/// Candidate anchors `(orbit, u, s)` for chart `k`: points `λ^{−a}U_y` of
/// heteroclinic orbits on the local unstable manifold whose `g`-image lands
/// at `λ^{a−N}S_y` on the local stable manifold, both inside `Q`.
fn candidates(cycle: &HeteroclinicCycle, chart: &Chart, n: usize, shape: BoxShape) -> Vec<(usize, f64, f64)> {
    let lam = chart.lambda;
    let mut out = Vec::new();
    for y in &cycle.points[chart.index] {
        // a ranges over all splits of the N returns between the two sides.
        for a in -(4 * n as i32)..=(4 * n as i32) {
            let u = y.u * lam.powi(-a);
            let s = y.s * lam.powi(a - n as i32);
            if u > 0.0 && u < shape.delta_u && s > 0.0 && s < shape.delta_s {
                out.push((y.orbit, u, s));
            }
        }
    }
    out
}

/// Builds all strips for `N`; `template` is the orbit of the heteroclinic
/// connection in the Aubry-Mather set and is listed right after the saddle strip.
pub fn build_strips<G: PreciseStep>(
    geo: &Geometry<G>,
    cycle: &HeteroclinicCycle,
    template: &[usize],
    sampling: Sampling,
) -> StripSet {
    let q = geo.charts.len();
    let mut jobs: Vec<(usize, usize, Option<usize>, f64, f64)> = Vec::new();
    for k in 0..q {
        jobs.push((k, k, None, 0.0, 0.0));
        let mut c = candidates(cycle, &geo.charts[k], geo.n, geo.shape);
        c.sort_by_key(|x| (x.0 != template[k], x.0));
        for (orbit, u, s) in c {
            jobs.push((k, (k + 1) % q, Some(orbit), u, s));
        }
    }
    let traced: Vec<Result<Strip, String>> = jobs
        .par_iter()
        .map(|&(k, target, orbit, u, s)| {
            trace_strip(geo, k, target, u, s, sampling).map(|mut st| {
                st.orbit = orbit;
                st
            })
        })
        .collect();
    let mut strips: Vec<Strip> = Vec::new();
    let mut rejected = Vec::new();
    for (job, r) in jobs.iter().zip(traced) {
        match r {
            Ok(st) if st.proper() => strips.push(st),
            Ok(st) => rejected.push(Rejected {
                chart: job.0,
                orbit: job.2,
                anchor_u: job.3,
                reason: format!("margins u {:.3e}, s {:.3e}, slope {:.3}", st.margin_u, st.margin_s, st.slope),
            }),
            Err(reason) => rejected.push(Rejected { chart: job.0, orbit: job.2, anchor_u: job.3, reason }),
        }
    }
    // Overlapping strips would be the same component traced twice.
    let mut separation = f64::INFINITY;
    let mut keep: Vec<Strip> = Vec::new();
    for st in strips {
        let clash = keep.iter().filter(|o| o.label.0 == st.label.0).map(|o| chord_gap(o, &st)).fold(f64::INFINITY, f64::min);
        if clash <= 0.0 {
            rejected.push(Rejected {
                chart: st.label.0,
                orbit: st.orbit,
                anchor_u: st.anchor_u,
                reason: "duplicate component".into(),
            });
            continue;
        }
        separation = separation.min(clash);
        keep.push(st);
    }
    let mut counters = vec![0usize; q];
    for st in keep.iter_mut() {
        let k = st.label.0;
        st.label = (k, counters[k]);
        counters[k] += 1;
    }
    StripSet { n: geo.n, strips: keep, rejected, separation }
}

fn chord_gap(a: &Strip, b: &Strip) -> f64 {
    a.chords
        .iter()
        .zip(&b.chords)
        .map(|(x, y)| (y[0] - x[1]).max(x[0] - y[1]))
        .fold(f64::INFINITY, f64::min)
}

impl StripSet {
    /// Template present: for each chart, the saddle strip and a strip of the template orbit.
    pub fn has_template(&self, q: usize, template: &[usize]) -> bool {
        (0..q).all(|k| {
            let mine: Vec<&Strip> = self.strips.iter().filter(|s| s.label.0 == k).collect();
            mine.iter().any(|s| s.orbit.is_none()) && mine.iter().any(|s| s.orbit == Some(template[k]))
        })
    }

    pub fn index_of(&self, label: (usize, usize)) -> Option<usize> {
        self.strips.iter().position(|s| s.label == label)
    }
}

/// Smallest `N ≤ cap` for which every chart carries its saddle strip and a
/// strip of the template orbit.
pub fn tune_common_n<G: PreciseStep>(
    tm: &TwistMap<G>,
    charts: &[Chart],
    cycle: &HeteroclinicCycle,
    shape: BoxShape,
    template: &[usize],
    sampling: Sampling,
    cap: usize,
) -> Result<StripSet, HorseshoeError> {
    for n in 1..=cap {
        let geo = Geometry { tm, charts, shape, n };
        let set = build_strips(&geo, cycle, template, sampling);
        if set.has_template(charts.len(), template) {
            return Ok(set);
        }
    }
    Err(HorseshoeError::BudgetExceeded { cap })
}
