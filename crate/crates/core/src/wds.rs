//! Symbolic weak Denjoy sub-systems: Sturmian subshifts together with the
//! circular order their cylinders inherit from the circle.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{Angle, Rational};
use crate::error::WdsError;
use crate::symbolic::{
    estimate_rotation_interval, factor_family, factor_set, shift_distance, sturmian_window, symbolic_hausdorff,
    word_to_string, CentralWindow, FactorFamily, FareyInterval, ShiftDistance, Word,
};

pub const DEFAULT_DEPTH: usize = 6;
pub const DEFAULT_RADIUS: usize = 1000;

/// Sturmian subshift of `α`, known through its factors up to length `2n+1`.
#[derive(Clone, Debug)]
pub struct WdsSymbolic {
    alpha: Angle,
    depth: usize,
    window: CentralWindow,
    family: FactorFamily,
    /// Circle orientation flipped (`K ↦ −K`); the subshift itself is unchanged.
    reversed: bool,
}

impl WdsSymbolic {
    pub fn alpha(&self) -> &Angle {
        &self.alpha
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn window(&self) -> &CentralWindow {
        &self.window
    }

    pub fn family(&self) -> &FactorFamily {
        &self.family
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// Admissible central words of length `2n+1`.
    pub fn central_words(&self) -> &BTreeSet<Word> {
        &self.family[&(2 * self.depth + 1)].members
    }

    /// The same subshift with the orientation of the circle reversed; the
    /// rotation number becomes `1 − α`.
    pub fn reversed(&self) -> WdsSymbolic {
        WdsSymbolic { alpha: self.alpha.complement(), reversed: !self.reversed, ..self.clone() }
    }
}

pub fn build_wds(alpha: &Angle, depth: usize) -> Result<WdsSymbolic, WdsError> {
    build_wds_with_radius(alpha, depth, DEFAULT_RADIUS.max(16 * (2 * depth + 1)))
}

pub fn build_wds_with_radius(alpha: &Angle, depth: usize, radius: usize) -> Result<WdsSymbolic, WdsError> {
    let a = alpha.value();
    if !(a > 0.0 && a < 0.5) {
        return Err(WdsError::AlphaOutOfRange(a));
    }
    if let Some((p, q)) = alpha.rational_approximation(1_000_000, 1e-14) {
        return Err(WdsError::RationalAlpha(format!("{p}/{q}")));
    }
    let window = sturmian_window(alpha, &Angle::zero(), radius)?;
    let max_len = 2 * depth + 1;
    if window.symbols().len() < max_len + 1 {
        return Err(WdsError::NotSaturated(radius));
    }
    let family = factor_family(&window, max_len)?;
    for (n, f) in &family {
        if f.len() != n + 1 {
            return Err(WdsError::NotSaturated(radius));
        }
    }
    // Balance is what separates Sturmian families from other complexity-(n+1) ones.
    if crate::symbolic::balance_defect(&window, max_len)? > 1 {
        return Err(WdsError::Symbolic(crate::error::SymbolicError::NotSturmian("unbalanced".into())));
    }
    Ok(WdsSymbolic { alpha: *alpha, depth, window, family, reversed: false })
}

/// Word of length `2n+1` coding `θ` (symbol 0 iff `{θ + kα} ∈ [0, α)`).
fn coding_word(alpha: f64, theta: f64, depth: usize) -> Word {
    let n = depth as i64;
    (-n..=n)
        .map(|k| {
            let y = (theta + k as f64 * alpha).rem_euclid(1.0);
            (y >= alpha) as u8
        })
        .collect()
}

/// A coding arc `[start, start + len)` of the circle and its cylinder word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodingArc {
    pub start: f64,
    pub len: f64,
    pub word: Word,
}

/// Cylinders at depth `n` listed in circular order.
#[derive(Clone, Debug, PartialEq)]
pub struct CircularOrderGraph {
    depth: usize,
    arcs: Vec<CodingArc>,
    index: HashMap<Word, usize>,
}

impl CircularOrderGraph {
    pub fn from_cylinders(depth: usize, arcs: Vec<CodingArc>) -> Self {
        let index = arcs.iter().enumerate().map(|(i, a)| (a.word.clone(), i)).collect();
        CircularOrderGraph { depth, arcs, index }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn arcs(&self) -> &[CodingArc] {
        &self.arcs
    }

    pub fn cylinders(&self) -> Vec<&Word> {
        self.arcs.iter().map(|a| &a.word).collect()
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn position(&self, w: &[u8]) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// `a ≺ b ≺ c`: `b` lies on the closed arc from `a` to `c` in the positive
    /// direction, the whole circle when `a = c`.
    pub fn in_order(&self, a: usize, b: usize, c: usize) -> bool {
        let m = self.arcs.len();
        if a == c {
            return true;
        }
        (b + m - a) % m <= (c + m - a) % m
    }

    /// The order graph as triples of positions.
    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let m = self.arcs.len();
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    if self.in_order(a, b, c) {
                        out.push((a, b, c));
                    }
                }
            }
        }
        out
    }

    /// Triples of words; the form used to compare graphs built independently.
    pub fn word_triples(&self) -> BTreeSet<(Word, Word, Word)> {
        self.triples()
            .into_iter()
            .map(|(a, b, c)| (self.arcs[a].word.clone(), self.arcs[b].word.clone(), self.arcs[c].word.clone()))
            .collect()
    }

    /// Cylinders `b` with `(a, b, c)` in the graph, as a contiguous list.
    pub fn interval(&self, a: usize, c: usize) -> Vec<usize> {
        let m = self.arcs.len();
        if a == c {
            return (0..m).map(|i| (a + i) % m).collect();
        }
        let len = (c + m - a) % m;
        (0..=len).map(|i| (a + i) % m).collect()
    }

    /// Same cylinders, inverse circular order.
    pub fn reversed(&self) -> CircularOrderGraph {
        let mut arcs = self.arcs.clone();
        arcs.reverse();
        CircularOrderGraph::from_cylinders(self.depth, arcs)
    }

    /// The four circular-order axioms on the cylinder list. The
    /// antisymmetry and transitivity clauses are checked for distinct
    /// endpoints, since `G(a, a)` is the whole set by convention.
    pub fn check_axioms(&self) -> bool {
        let m = self.arcs.len();
        let o = |x, y, z| self.in_order(x, y, z);
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    if !(o(x, y, z) || o(z, y, x)) {
                        return false;
                    }
                    if x != z && (o(x, y, z) && o(z, y, x)) != (x == y || y == z) {
                        return false;
                    }
                    if o(x, y, z) && !o(y, z, x) {
                        return false;
                    }
                    if x != z {
                        for t in 0..m {
                            if x != t && o(x, y, z) && o(x, z, t) && !o(x, y, t) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// Coding arcs at depth `n`, listed from the arc whose left end is `0`.
///
/// The cut points are `{mα}` for `m ∈ [−n, n+1]`; for a reversed system the
/// circle is read through `θ ↦ −θ`.
pub fn cylinder_order(w: &WdsSymbolic) -> Result<CircularOrderGraph, WdsError> {
    let n = w.depth as i64;
    let base = if w.reversed { w.alpha.complement().value() } else { w.alpha.value() };
    let sign = if w.reversed { -1.0 } else { 1.0 };
    let mut cuts: Vec<f64> = (-n..=n + 1).map(|m| (sign * m as f64 * base).rem_euclid(1.0)).collect();
    cuts.sort_by(f64::total_cmp);
    let words = w.central_words();
    let mut arcs = Vec::with_capacity(cuts.len());
    for (i, &s) in cuts.iter().enumerate() {
        let e = if i + 1 < cuts.len() { cuts[i + 1] } else { 1.0 + cuts[0] };
        let mid = (s + e) / 2.0;
        let word = coding_word(base, sign * mid, w.depth);
        arcs.push(CodingArc { start: s, len: e - s, word });
    }
    let found: BTreeSet<&Word> = arcs.iter().map(|a| &a.word).collect();
    if let Some(missing) = words.iter().find(|u| !found.contains(u)) {
        return Err(WdsError::DegenerateArc(word_to_string(missing)));
    }
    if found.len() != arcs.len() || arcs.iter().any(|a| !words.contains(&a.word)) {
        return Err(WdsError::DegenerateArc("arc words do not match the factor family".into()));
    }
    Ok(CircularOrderGraph::from_cylinders(w.depth as usize, arcs))
}

fn word_distance(u: &[u8], v: &[u8]) -> Rational {
    let r = u.len() / 2;
    let a = CentralWindow::new(r, u.to_vec()).expect("odd-length word");
    let b = CentralWindow::new(r, v.to_vec()).expect("odd-length word");
    shift_distance(&a, &b).value
}

fn directed_hausdorff(d: &[Vec<Rational>], t1: &[(usize, usize, usize)], t2: &[(usize, usize, usize)]) -> Rational {
    t1.par_iter()
        .map(|&(a, b, c)| {
            t2.iter()
                .map(|&(x, y, z)| d[a][x].max(d[b][y]).max(d[c][z]))
                .min()
                .unwrap_or(Rational::one())
        })
        .max()
        .unwrap_or(Rational::zero())
}

/// Hausdorff distance between the two order graphs under the product shift
/// metric, taking the better of `g2` and its inverse order.
pub fn graph_hausdorff(g1: &CircularOrderGraph, g2: &CircularOrderGraph) -> Result<ShiftDistance, WdsError> {
    if g1.depth != g2.depth {
        return Err(WdsError::DepthMismatch(g1.depth, g2.depth));
    }
    let d: Vec<Vec<Rational>> = g1
        .arcs
        .iter()
        .map(|a| g2.arcs.iter().map(|b| word_distance(&a.word, &b.word)).collect())
        .collect();
    let dt: Vec<Vec<Rational>> = (0..g2.len()).map(|j| (0..g1.len()).map(|i| d[i][j]).collect()).collect();
    let t1 = g1.triples();
    let t2 = g2.triples();
    let t2r: Vec<_> = t2.iter().map(|&(a, b, c)| (c, b, a)).collect();
    let h = |t: &[(usize, usize, usize)]| directed_hausdorff(&d, &t1, t).max(directed_hausdorff(&dt, t, &t1));
    let value = h(&t2).min(h(&t2r));
    Ok(ShiftDistance { value, truncated: false })
}

/// Rotation number modulo sign, as an interval in `[0, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationClass {
    pub lower: Rational,
    pub upper: Rational,
}

impl RotationClass {
    pub fn fold(iv: &FareyInterval) -> Self {
        let half = Rational::new(1, 2);
        let one = Rational::one();
        let (lo, hi) = (iv.lower, iv.upper);
        if hi <= half {
            RotationClass { lower: lo, upper: hi }
        } else if lo >= half {
            RotationClass { lower: one - hi, upper: one - lo }
        } else {
            RotationClass { lower: lo.min(one - hi), upper: half }
        }
    }

    /// `[0, 1/2]`, the class when nothing is known.
    pub fn full() -> Self {
        RotationClass { lower: Rational::new(0, 1), upper: Rational::new(1, 2) }
    }

    pub fn contains(&self, a: &Angle) -> bool {
        let x = a.value().rem_euclid(1.0);
        let x = x.min(1.0 - x);
        let (lo, hi) = (crate::angle::rational_to_f64(&self.lower), crate::angle::rational_to_f64(&self.upper));
        lo - 1e-15 <= x && x <= hi + 1e-15
    }

    pub fn overlaps(&self, other: &RotationClass) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    pub fn width(&self) -> f64 {
        crate::angle::rational_to_f64(&(self.upper - self.lower))
    }
}

pub fn rotation_class(w: &WdsSymbolic) -> Result<RotationClass, WdsError> {
    Ok(RotationClass::fold(&estimate_rotation_interval(&w.window)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equivalence {
    EqualOrder,
    ReversedOrder,
    NotEquivalent,
}

/// Which of the two order relations hold; both can only hold with at most
/// two cylinders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub same_family: bool,
    pub equal: bool,
    pub reversed: bool,
}

pub fn equivalence_report(w1: &WdsSymbolic, w2: &WdsSymbolic) -> Result<EquivalenceReport, WdsError> {
    if w1.depth != w2.depth {
        return Err(WdsError::DepthMismatch(w1.depth, w2.depth));
    }
    if w1.central_words() != w2.central_words() {
        return Ok(EquivalenceReport { same_family: false, equal: false, reversed: false });
    }
    let g1 = cylinder_order(w1)?;
    let g2 = cylinder_order(w2)?;
    let t1 = g1.word_triples();
    let equal = t1 == g2.word_triples();
    let reversed = t1 == g2.reversed().word_triples();
    Ok(EquivalenceReport { same_family: true, equal, reversed })
}

pub fn equivalence_test(w1: &WdsSymbolic, w2: &WdsSymbolic) -> Result<Equivalence, WdsError> {
    let r = equivalence_report(w1, w2)?;
    Ok(if r.equal {
        Equivalence::EqualOrder
    } else if r.reversed {
        Equivalence::ReversedOrder
    } else {
        Equivalence::NotEquivalent
    })
}

/// Two central words equal except on one interior 2-block, where they read
/// `01` and `10`: the codings of the two endpoints of one gap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapPair {
    pub first: Word,
    pub second: Word,
    /// Words agree for all `k ≥ forward_from`.
    pub forward_from: i64,
    /// Words agree for all `k ≤ backward_to`.
    pub backward_to: i64,
}

impl GapPair {
    /// Index `j` of the differing block `(j, j+1)`.
    pub fn block(&self) -> i64 {
        self.forward_from - 2
    }
}

/// Asymptotic pairs among a set of central words of length `2n+1`.
pub fn asymptotic_pairs_of(words: &BTreeSet<Word>) -> Vec<GapPair> {
    let Some(len) = words.iter().next().map(Vec::len) else {
        return Vec::new();
    };
    let n = (len / 2) as i64;
    let mut out = Vec::new();
    for u in words {
        for j in 1..len.saturating_sub(2) {
            if u[j] == 1 && u[j + 1] == 0 {
                let mut v = u.clone();
                v.swap(j, j + 1);
                if words.contains(&v) {
                    let k = j as i64 - n;
                    out.push(GapPair { first: u.clone(), second: v, forward_from: k + 2, backward_to: k - 1 });
                }
            }
        }
    }
    out
}

/// Number of shift orbits formed by the asymptotic pairs.
pub fn gap_orbits_of(words: &BTreeSet<Word>) -> usize {
    let pairs = asymptotic_pairs_of(words);
    let mut parent: Vec<usize> = (0..pairs.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    // Index by the overlap of a shifted pair: drop the first symbol of the
    // later pair and the last symbol of the earlier one.
    let mut by_tail: HashMap<(Vec<u8>, Vec<u8>), Vec<usize>> = HashMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_tail.entry((p.first[1..].to_vec(), p.second[1..].to_vec())).or_default().push(i);
    }
    for (i, p) in pairs.iter().enumerate() {
        let key = (p.first[..p.first.len() - 1].to_vec(), p.second[..p.second.len() - 1].to_vec());
        if let Some(js) = by_tail.get(&key) {
            for &j in js {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..pairs.len()).filter(|&i| find(&mut parent, i) == i).count()
}

pub fn asymptotic_pairs(w: &WdsSymbolic) -> Vec<GapPair> {
    asymptotic_pairs_of(w.central_words())
}

pub fn gap_orbit_count(w: &WdsSymbolic) -> usize {
    gap_orbits_of(w.central_words())
}

/// One perturbed rotation number in a continuity probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub alpha: f64,
    /// Largest `R ≤ N` with the two windows equal on `[−R, R]`.
    pub agreement_radius: usize,
    pub symbolic_bound: f64,
    /// Order-graph distance at the probe depth, when the graph can be built.
    pub graph_distance: Option<f64>,
    pub class: Option<RotationClass>,
    pub base_class: RotationClass,
    /// Class read off the shared window `[−R, R]`.
    pub agreement_class: RotationClass,
    /// Both classes meet the agreement class, so they sit within its width of each other.
    pub classes_overlap: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub alpha0: f64,
    pub radius: usize,
    pub depth: usize,
    pub entries: Vec<ProbeEntry>,
    /// Closer rotation numbers never give a shorter agreement or a larger bound.
    pub monotone: bool,
}

pub fn continuity_probe(alpha0: &Angle, radius: usize, depth: usize, perturbations: &[Angle]) -> Result<ContinuityReport, WdsError> {
    let w0 = sturmian_window(alpha0, &Angle::zero(), radius)?;
    let fam_len = (2 * depth + 1).min(w0.symbols().len());
    let f0 = factor_family(&w0, fam_len)?;
    let base_class = RotationClass::fold(&estimate_rotation_interval(&w0)?);
    let g0 = build_wds(alpha0, depth).and_then(|w| cylinder_order(&w))?;
    let entries = perturbations
        .par_iter()
        .map(|a| -> Result<ProbeEntry, WdsError> {
            let w = sturmian_window(a, &Angle::zero(), radius)?;
            let r = radius as i64;
            let agreement_radius = (0..=r)
                .find(|&m| w.get(m) != w0.get(m) || w.get(-m) != w0.get(-m))
                .map(|m| (m - 1).max(0) as usize)
                .unwrap_or(radius);
            let f = factor_family(&w, fam_len)?;
            let symbolic_bound = if w == w0 { 0.0 } else { symbolic_hausdorff(&f0, &f, depth).to_f64() };
            let graph_distance = build_wds(a, depth)
                .and_then(|w| cylinder_order(&w))
                .and_then(|g| graph_hausdorff(&g0, &g))
                .ok()
                .map(|d| d.to_f64());
            let class = estimate_rotation_interval(&w).ok().map(|iv| RotationClass::fold(&iv));
            let agreement_class = estimate_rotation_interval(&w0.restrict(agreement_radius))
                .map(|iv| RotationClass::fold(&iv))
                .unwrap_or_else(|_| RotationClass::full());
            let classes_overlap = class.map(|c| c.overlaps(&agreement_class) && base_class.overlaps(&agreement_class)).unwrap_or(false);
            Ok(ProbeEntry { alpha: a.value(), agreement_radius, symbolic_bound, graph_distance, class, base_class, agreement_class, classes_overlap })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<&ProbeEntry> = entries.iter().collect();
    let a0 = alpha0.value();
    order.sort_by(|x, y| (x.alpha - a0).abs().total_cmp(&(y.alpha - a0).abs()).reverse());
    let monotone = order.windows(2).all(|p| {
        p[1].agreement_radius >= p[0].agreement_radius
            && p[1].symbolic_bound <= p[0].symbolic_bound
            && match (p[0].graph_distance, p[1].graph_distance) {
                (Some(a), Some(b)) => b <= a,
                _ => true,
            }
    });
    Ok(ContinuityReport { alpha0: a0, radius, depth, entries, monotone })
}

/// Factor set at the order depth of a window, for callers holding only a window.
pub fn central_words_of(w: &CentralWindow, depth: usize) -> Result<BTreeSet<Word>, WdsError> {
    Ok(factor_set(w, 2 * depth + 1)?.members)
}
