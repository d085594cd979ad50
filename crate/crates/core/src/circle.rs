//! Denjoy circle homeomorphisms with one wandering-interval orbit.
//!
//! The map is described in rotation coordinates: a point of the minimal set
//! with coordinate `t ∈ [0, 1)` sits at
//! `X(t) = t·μ + Σ_{m ≠ 0, {mα} < t} ℓ_m`, where `μ` is the mass left to the
//! minimal set. Gap `m` occupies `[X({mα}), X({mα}) + ℓ_m]`; gap 0 is placed
//! at the end of the circle so that its right endpoint is the point `0`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::angle::{convergents, Angle};
use crate::error::CircleError;
use crate::symbolic::{sturmian_symbol, CentralWindow};

pub const DEFAULT_CUTOFF: usize = 10_000;
pub const MIN_CUTOFF: usize = 1_000;
/// `c` with `Σ_{n∈Z} c/((|n|+1)(|n|+2)) = 1/2`.
pub const GAP_CONSTANT: f64 = 1.0 / 3.0;

/// Where a point of the circle falls relative to the gap structure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Location {
    /// Closed gap `index`, at relative position `frac ∈ [0, 1]` from its left end.
    Gap { index: i64, frac: f64 },
    /// Minimal-set point with rotation coordinate `t`.
    Point { t: f64 },
}

#[derive(Clone, Debug)]
pub struct DenjoyMap {
    alpha: Angle,
    c: f64,
    cutoff: usize,
    /// Mass of the minimal set, `1 − Σ_{|n| ≤ M} ℓ_n`.
    mu: f64,
    /// Gaps `m ≠ 0` sorted by coordinate: `(t_m, m, left endpoint)`.
    table: Vec<(f64, i64, f64)>,
    /// Position in `table` of gap `m`, indexed by `m + M`.
    slot: Vec<usize>,
}

pub fn gap_length(c: f64, n: i64) -> f64 {
    let a = n.unsigned_abs() as f64;
    c / ((a + 1.0) * (a + 2.0))
}

impl DenjoyMap {
    pub fn build(alpha: Angle, cutoff: usize) -> Result<Self, CircleError> {
        let a = alpha.value();
        if !(a > 0.0 && a < 1.0) {
            return Err(CircleError::AlphaOutOfRange(a));
        }
        if let Some((p, q)) = alpha.rational_approximation(1_000_000, 1e-14) {
            return Err(CircleError::RationalAlpha(format!("{p}/{q}")));
        }
        if cutoff < MIN_CUTOFF {
            return Err(CircleError::CutoffTooSmall(cutoff));
        }
        let c = GAP_CONSTANT;
        let m = cutoff as i64;
        let mut table: Vec<(f64, i64, f64)> = (-m..=m)
            .filter(|&n| n != 0)
            .map(|n| ((n as f64 * a).rem_euclid(1.0), n, 0.0))
            .collect();
        table.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total: f64 = (-m..=m).map(|n| gap_length(c, n)).sum();
        let mu = 1.0 - total;
        let mut acc = 0.0;
        let mut slot = vec![0usize; 2 * cutoff + 1];
        for (i, e) in table.iter_mut().enumerate() {
            e.2 = e.0 * mu + acc;
            acc += gap_length(c, e.1);
            slot[(e.1 + m) as usize] = i;
        }
        Ok(DenjoyMap { alpha, c, cutoff, mu, table, slot })
    }

    pub fn alpha(&self) -> &Angle {
        &self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Lebesgue mass of the minimal set (with gaps past the cutoff treated as points).
    pub fn minimal_mass(&self) -> f64 {
        self.mu
    }

    /// Mass of the gaps beyond the cutoff, `2c/(M+2)`; the positional error
    /// budget of every evaluation.
    pub fn tail_mass(&self) -> f64 {
        2.0 * self.c / (self.cutoff as f64 + 2.0)
    }

    pub fn gap_len(&self, n: i64) -> f64 {
        gap_length(self.c, n)
    }

    fn in_range(&self, n: i64) -> bool {
        n.unsigned_abs() as usize <= self.cutoff
    }

    /// Rotation coordinate `{nα}` of gap `n`.
    pub fn gap_coordinate(&self, n: i64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if self.in_range(n) {
            return self.table[self.slot[(n + self.cutoff as i64) as usize]].0;
        }
        (n as f64 * self.alpha.value()).rem_euclid(1.0)
    }

    /// Closed gap `[left, right]`; gap 0 is `[1 − ℓ_0, 1]`.
    pub fn gap(&self, n: i64) -> Option<(f64, f64)> {
        if !self.in_range(n) {
            return None;
        }
        let l = if n == 0 { 1.0 - self.gap_len(0) } else { self.table[self.slot[(n + self.cutoff as i64) as usize]].2 };
        Some((l, l + self.gap_len(n)))
    }

    /// Left endpoint of gap 0.
    pub fn a_point(&self) -> f64 {
        1.0 - self.gap_len(0)
    }

    /// Right endpoint of gap 0 (the point `0`).
    pub fn b_point(&self) -> f64 {
        0.0
    }

    /// Position of the minimal-set point with coordinate `t` (left convention at gaps).
    pub fn position(&self, t: f64) -> f64 {
        let t = t.rem_euclid(1.0);
        let i = self.table.partition_point(|e| e.0 < t);
        let before = if i == 0 { 0.0 } else { self.table[i - 1].2 + self.gap_len(self.table[i - 1].1) - self.table[i - 1].0 * self.mu };
        t * self.mu + before
    }

    pub fn locate(&self, x: f64) -> Location {
        let x = x.rem_euclid(1.0);
        let g0 = self.a_point();
        if x == 0.0 || x >= g0 {
            let frac = if x == 0.0 { 1.0 } else { (x - g0) / self.gap_len(0) };
            return Location::Gap { index: 0, frac: frac.min(1.0) };
        }
        // Last gap whose left endpoint is ≤ x.
        let i = self.table.partition_point(|e| e.2 <= x);
        if i == 0 {
            return Location::Point { t: x / self.mu };
        }
        let (t, n, l) = self.table[i - 1];
        let len = self.gap_len(n);
        if x <= l + len {
            return Location::Gap { index: n, frac: ((x - l) / len).clamp(0.0, 1.0) };
        }
        Location::Point { t: (t + (x - l - len) / self.mu).min(1.0 - f64::EPSILON) }
    }

    fn place(&self, loc: Location) -> f64 {
        match loc {
            Location::Gap { index, frac } => match self.gap(index) {
                Some((l, r)) => {
                    let x = l + frac * (r - l);
                    if x >= 1.0 {
                        x - 1.0
                    } else {
                        x
                    }
                }
                None => self.position(self.gap_coordinate(index)),
            },
            Location::Point { t } => self.position(t),
        }
    }

    /// Image under `j` iterates of a located point.
    pub fn advance(&self, loc: Location, j: i64) -> Location {
        match loc {
            Location::Gap { index, frac } => {
                let m = index + j;
                if self.in_range(m) {
                    Location::Gap { index: m, frac }
                } else {
                    Location::Point { t: self.gap_coordinate(m) }
                }
            }
            Location::Point { t } => Location::Point { t: (t + j as f64 * self.alpha.value()).rem_euclid(1.0) },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.place(self.advance(self.locate(x), 1))
    }

    pub fn eval_inverse(&self, x: f64) -> f64 {
        self.place(self.advance(self.locate(x), -1))
    }

    /// Semi-conjugacy to the rotation: the minimal-set mass from `b` to `x`,
    /// normalized by the total minimal mass. Constant on closed gaps.
    pub fn semi_conjugacy(&self, x: f64) -> f64 {
        match self.locate(x) {
            Location::Gap { index, .. } => self.gap_coordinate(index),
            Location::Point { t } => t,
        }
    }

    /// Lift of the semi-conjugacy to `[0, 1]`: gap 0 at the end of the circle maps to 1.
    pub fn semi_conjugacy_lift(&self, x: f64) -> f64 {
        match self.locate(x) {
            Location::Gap { index: 0, .. } if x.rem_euclid(1.0) != 0.0 => 1.0,
            _ => self.semi_conjugacy(x),
        }
    }

    /// `(H^n(x) − x)/n` for the lift `H` with `H(x) − x ∈ [0, 1)`.
    pub fn rotation_estimate(&self, x: f64, n: usize) -> f64 {
        let mut y = x.rem_euclid(1.0);
        let mut lift = 0.0;
        for _ in 0..n {
            let z = self.eval(y);
            lift += (z - y).rem_euclid(1.0);
            y = z;
        }
        lift / n as f64
    }

    /// Sample orbit `x, h(x), …` of length `n`.
    pub fn orbit(&self, x: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut y = x.rem_euclid(1.0);
        for _ in 0..n {
            out.push(y);
            y = self.eval(y);
        }
        out
    }

    pub fn coding_intervals(&self) -> CodingIntervals {
        let mid = |n: i64| {
            let (l, r) = self.gap(n).expect("gaps 0 and 1 are always tabulated");
            (l + r) / 2.0
        };
        let (m0, m1) = (mid(0), mid(1));
        CodingIntervals { i0: (m0, m1), i1: (m1, m0) }
    }

    fn symbol_at(&self, loc: Location) -> u8 {
        let a = self.alpha.value();
        match loc {
            // Gap 0 and gap 1 are split by the coding arcs at their midpoints.
            Location::Gap { index: 0, frac } => (frac < 0.5) as u8,
            Location::Gap { index: 1, frac } => (frac > 0.5) as u8,
            Location::Gap { index, .. } => {
                sturmian_symbol(&self.alpha, &Angle::zero(), index).unwrap_or((self.gap_coordinate(index) >= a) as u8)
            }
            Location::Point { t } => (t >= a) as u8,
        }
    }

    /// Symbols of `h^k(x)` for `|k| ≤ radius` with respect to the coding arcs.
    pub fn itinerary(&self, x: f64, radius: usize) -> Result<CentralWindow, CircleError> {
        let loc = self.locate(x);
        if let Location::Gap { index, frac } = loc {
            if frac > 1e-12 && frac < 1.0 - 1e-12 {
                return Err(CircleError::NotInMinimalSet { x, gap: index });
            }
        }
        Ok(CentralWindow::from_fn(radius, |k| self.symbol_at(self.advance(loc, k))))
    }

    /// Structured text: the rotation number as a convergent pair, `c` and `M`.
    pub fn to_text(&self) -> String {
        let a = self.alpha.value();
        let (p, q) = convergents(a, 64)
            .into_iter()
            .take_while(|&(_, q)| q <= 1_000_000_000_000)
            .last()
            .unwrap_or((0, 1));
        let mut s = String::new();
        let _ = writeln!(s, "alpha={p}/{q}");
        if let Some(e) = self.alpha.exact() {
            let _ = writeln!(s, "alpha_exact={e}");
        }
        let _ = writeln!(s, "c={}", self.c);
        let _ = writeln!(s, "M={}", self.cutoff);
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CircleError> {
        let mut alpha = None;
        let mut exact = None;
        let mut cutoff = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| CircleError::Format(line.to_string()))?;
            match k.trim() {
                "alpha" => {
                    let (p, q) = v.split_once('/').ok_or_else(|| CircleError::Format(line.to_string()))?;
                    let p: f64 = p.trim().parse().map_err(|_| CircleError::Format(line.to_string()))?;
                    let q: f64 = q.trim().parse().map_err(|_| CircleError::Format(line.to_string()))?;
                    alpha = Some(Angle::from_f64(p / q));
                }
                "alpha_exact" => exact = Some(v.trim().parse::<Angle>().map_err(|e| CircleError::Format(e.to_string()))?),
                "c" => {
                    let c: f64 = v.trim().parse().map_err(|_| CircleError::Format(line.to_string()))?;
                    if (c - GAP_CONSTANT).abs() > 1e-12 {
                        return Err(CircleError::Format(format!("unsupported gap constant {c}")));
                    }
                }
                "M" => cutoff = Some(v.trim().parse().map_err(|_| CircleError::Format(line.to_string()))?),
                _ => return Err(CircleError::Format(format!("unknown key {k}"))),
            }
        }
        let alpha = exact.or(alpha).ok_or_else(|| CircleError::Format("missing alpha".into()))?;
        DenjoyMap::build(alpha, cutoff.unwrap_or(DEFAULT_CUTOFF))
    }
}

/// The two closed coding arcs `[from, to]` in the direct sense, meeting at the
/// midpoints of gap 0 and gap 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodingIntervals {
    pub i0: (f64, f64),
    pub i1: (f64, f64),
}

impl CodingIntervals {
    /// Arc containing `x`; `None` only for the two shared endpoints.
    pub fn symbol(&self, x: f64) -> Option<u8> {
        let x = x.rem_euclid(1.0);
        let inside = |(a, b): (f64, f64)| {
            let len = (b - a).rem_euclid(1.0);
            let d = (x - a).rem_euclid(1.0);
            d > 0.0 && d < len
        };
        if inside(self.i0) {
            Some(0)
        } else if inside(self.i1) {
            Some(1)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::sturmian_window;

    fn golden_map() -> DenjoyMap {
        DenjoyMap::build(Angle::golden(), DEFAULT_CUTOFF).unwrap()
    }

    #[test]
    fn gap_constant_gives_half_mass() {
        // Partial sums of the two-sided schedule miss exactly 2c/(N+2) of 1/2.
        for n in [1_000i64, 100_000] {
            let s: f64 = (-n..=n).map(|k| gap_length(GAP_CONSTANT, k)).sum();
            assert!((s + 2.0 * GAP_CONSTANT / (n as f64 + 2.0) - 0.5).abs() < 1e-12);
        }
        assert_eq!(gap_length(GAP_CONSTANT, 0), GAP_CONSTANT / 2.0);
        let h = golden_map();
        assert!((h.minimal_mass() - 0.5 - h.tail_mass()).abs() < 1e-9);
    }

    #[test]
    fn gaps_are_disjoint() {
        let h = golden_map();
        let mut gaps: Vec<(f64, f64)> = (-10_000..=10_000).map(|n| h.gap(n).unwrap()).collect();
        gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in gaps.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
        assert!(gaps.last().unwrap().1 <= 1.0 + 1e-15);
    }

    #[test]
    fn endpoints_and_midpoints_follow_the_gap_orbit() {
        let h = golden_map();
        let (l0, r0) = h.gap(0).unwrap();
        let (l1, r1) = h.gap(1).unwrap();
        assert!((h.eval(l0) - l1).abs() < 1e-15);
        assert!((h.eval((l0 + r0) / 2.0) - (l1 + r1) / 2.0).abs() < 1e-15);
        assert!((h.eval(h.b_point()) - r1).abs() < 1e-15);
        assert!((h.eval_inverse(r1) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn semi_conjugacy_normalization() {
        let h = golden_map();
        let a = Angle::golden().value();
        assert_eq!(h.semi_conjugacy(h.b_point()), 0.0);
        assert!((h.semi_conjugacy(h.eval(h.b_point())) - a).abs() < 1e-15);
        let mut prev = -1.0;
        for i in 0..1000 {
            let k = h.semi_conjugacy_lift(i as f64 / 1000.0);
            assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn rotation_estimate_is_close() {
        let h = golden_map();
        let r = h.rotation_estimate(0.123, 100_000);
        assert!((r - Angle::golden().value()).abs() < 2e-5);
    }

    #[test]
    fn itinerary_of_b_is_sturmian() {
        let h = golden_map();
        let a = Angle::golden();
        let it = h.itinerary(h.b_point(), 1000).unwrap();
        assert_eq!(it, sturmian_window(&a, &Angle::zero(), 1000).unwrap());
        let head: Vec<u8> = (0..=6).map(|k| it.get(k).unwrap()).collect();
        assert_eq!(head, vec![0, 1, 1, 0, 1, 1, 0]);
        let ia = h.itinerary(h.a_point(), 5).unwrap();
        assert_ne!(ia.get(0), it.get(0));
        let shifted = h.itinerary(h.eval(h.b_point()), 20).unwrap();
        let ib = h.itinerary(h.b_point(), 21).unwrap();
        for k in -20..=20 {
            assert_eq!(shifted.get(k), ib.get(k + 1));
        }
    }

    #[test]
    fn itinerary_rejects_gap_interior() {
        let h = golden_map();
        let (l, r) = h.gap(3).unwrap();
        assert!(matches!(h.itinerary((l + r) / 2.0, 4), Err(CircleError::NotInMinimalSet { gap: 3, .. })));
    }

    #[test]
    fn coding_arcs_cover_the_orbit() {
        let h = golden_map();
        let ci = h.coding_intervals();
        let it = h.itinerary(h.b_point(), 50).unwrap();
        for k in 2..=50 {
            let x = h.place(h.advance(h.locate(0.0), k));
            assert_eq!(ci.symbol(x), it.get(k));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(DenjoyMap::build(Angle::rational(2, 5), 2000), Err(CircleError::RationalAlpha(_))));
        assert!(matches!(DenjoyMap::build(Angle::golden(), 10), Err(CircleError::CutoffTooSmall(10))));
        assert!(matches!(DenjoyMap::build(Angle::from_f64(1.5), 2000), Err(CircleError::AlphaOutOfRange(_))));
    }

    #[test]
    fn text_round_trip() {
        let h = DenjoyMap::build(Angle::golden(), 2000).unwrap();
        let g = DenjoyMap::from_text(&h.to_text()).unwrap();
        assert_eq!(g.alpha(), h.alpha());
        assert_eq!(g.cutoff(), 2000);
        let mut plain = h.to_text().lines().filter(|l| !l.starts_with("alpha_exact")).collect::<Vec<_>>().join("\n");
        plain.push('\n');
        let f = DenjoyMap::from_text(&plain).unwrap();
        assert!((f.alpha().value() - h.alpha().value()).abs() < 1e-15);
    }
}
