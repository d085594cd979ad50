//! Binary itineraries: Sturmian coding of rotations, the shift metric,
//! factor complexity, balance, and rotation-number recovery.
//!
//! Coding convention: symbol `0` iff `{θ + kα} ∈ [0, α)`, symbol `1` on the
//! closed complement `[α, 1)`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::angle::{exact_frac_below_alpha, rational_to_f64, Angle, ExactValue, QuadSurd, Rational};
use crate::error::SymbolicError;

/// Half-width of the band around arc endpoints where the float fast path
/// defers to exact arithmetic. Grows with `|k|` to absorb `k·ulp(α)`.
pub const GUARD_BAND: f64 = 1e-12;

/// Default cap on Farey denominators during Stern-Brocot refinement.
pub const DEFAULT_MAX_DENOMINATOR: i64 = 1_000_000;

pub type Word = Vec<u8>;

pub fn word_to_string(w: &[u8]) -> String {
    w.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

pub fn word_from_str(s: &str) -> Option<Word> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}

/// Symbols of an itinerary on the index range `[-N, N]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CentralWindow {
    radius: usize,
    symbols: Vec<u8>,
}

impl CentralWindow {
    pub fn new(radius: usize, symbols: Vec<u8>) -> Option<Self> {
        (symbols.len() == 2 * radius + 1 && symbols.iter().all(|&s| s <= 1))
            .then_some(CentralWindow { radius, symbols })
    }

    pub fn from_fn(radius: usize, mut f: impl FnMut(i64) -> u8) -> Self {
        let r = radius as i64;
        let symbols = (-r..=r).map(|k| f(k).min(1)).collect();
        CentralWindow { radius, symbols }
    }

    pub fn constant(radius: usize, symbol: u8) -> Self {
        CentralWindow { radius, symbols: vec![symbol.min(1); 2 * radius + 1] }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Symbol at index `k`, `None` outside `[-N, N]`.
    pub fn get(&self, k: i64) -> Option<u8> {
        let i = k + self.radius as i64;
        (0..self.symbols.len() as i64).contains(&i).then(|| self.symbols[i as usize])
    }

    /// The symbols in index order `-N..=N`.
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Central sub-window of a smaller radius.
    pub fn restrict(&self, radius: usize) -> CentralWindow {
        let radius = radius.min(self.radius);
        let off = self.radius - radius;
        CentralWindow { radius, symbols: self.symbols[off..off + 2 * radius + 1].to_vec() }
    }

    /// Line format: `N=<radius>` then one `k symbol` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("N={}\n", self.radius);
        let r = self.radius as i64;
        for (i, b) in self.symbols.iter().enumerate() {
            let _ = writeln!(s, "{} {}", i as i64 - r, b);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SymbolicError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(SymbolicError::Format { line: 1, msg: "missing header".into() })?;
        let radius: usize = header
            .trim()
            .strip_prefix("N=")
            .and_then(|v| v.parse().ok())
            .ok_or(SymbolicError::Format { line: 1, msg: "expected N=<radius>".into() })?;
        let mut symbols = vec![None; 2 * radius + 1];
        for (i, line) in lines {
            let bad = |msg: &str| SymbolicError::Format { line: i + 1, msg: msg.to_string() };
            let mut it = line.split_whitespace();
            let k: i64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad index"))?;
            let b: u8 = it.next().and_then(|v| v.parse().ok()).filter(|&b| b <= 1).ok_or_else(|| bad("bad symbol"))?;
            if k.unsigned_abs() as usize > radius {
                return Err(bad("index outside [-N, N]"));
            }
            let slot = &mut symbols[(k + radius as i64) as usize];
            if slot.is_some() {
                return Err(bad("duplicate index"));
            }
            *slot = Some(b);
        }
        let symbols = symbols
            .into_iter()
            .collect::<Option<Vec<u8>>>()
            .ok_or(SymbolicError::Format { line: 0, msg: "missing indices".into() })?;
        Ok(CentralWindow { radius, symbols })
    }
}

/// Sturmian symbol of the rotation by `alpha` started at `theta`, at time `k`.
pub fn sturmian_symbol(alpha: &Angle, theta: &Angle, k: i64) -> Result<u8, SymbolicError> {
    let a = alpha.value();
    let y = theta.value() + k as f64 * a;
    let fr = y - y.floor();
    let guard = GUARD_BAND + 4.0 * f64::EPSILON * (k.unsigned_abs() as f64 + 1.0);
    let near = |p: f64| (fr - p).abs() < guard;
    if !(near(0.0) || near(1.0) || near(a.rem_euclid(1.0))) {
        return Ok(if fr < a { 0 } else { 1 });
    }
    match exact_frac_below_alpha(alpha, theta, k) {
        Some(true) => Ok(0),
        Some(false) => Ok(1),
        None => Err(SymbolicError::BoundaryUndecidable { k }),
    }
}

pub fn sturmian_window(alpha: &Angle, theta: &Angle, radius: usize) -> Result<CentralWindow, SymbolicError> {
    let r = radius as i64;
    let symbols = (-r..=r)
        .map(|k| sturmian_symbol(alpha, theta, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CentralWindow { radius, symbols })
}

/// Value of the shift metric `max_k |u_k − v_k| / (|k| + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftDistance {
    pub value: Rational,
    /// Set when the windows had different radii and only the common part was
    /// compared; the value is then a lower bound.
    pub truncated: bool,
}

impl ShiftDistance {
    pub fn zero() -> Self {
        ShiftDistance { value: Rational::zero(), truncated: false }
    }

    /// The radius `1/(n+2)` of an `n`-cylinder.
    pub fn cylinder_radius(n: usize) -> Self {
        ShiftDistance { value: Rational::new(1, n as i64 + 2), truncated: false }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }
}

pub fn shift_distance(u: &CentralWindow, v: &CentralWindow) -> ShiftDistance {
    let r = u.radius.min(v.radius) as i64;
    let truncated = u.radius != v.radius;
    // The maximum is attained at the smallest |k| where the windows differ.
    let first = (0..=r).find(|&m| u.get(m) != v.get(m) || u.get(-m) != v.get(-m));
    let value = match first {
        Some(m) => Rational::new(1, m + 1),
        None => Rational::zero(),
    };
    ShiftDistance { value, truncated }
}

/// Distinct length-`n` blocks of a window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSet {
    pub n: usize,
    pub members: BTreeSet<Word>,
}

impl FactorSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, w: &[u8]) -> bool {
        self.members.contains(w)
    }

    /// `n=<len>` header followed by the sorted words.
    pub fn to_text(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for w in &self.members {
            s.push_str(&word_to_string(w));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SymbolicError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(SymbolicError::Format { line: 1, msg: "missing header".into() })?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or(SymbolicError::Format { line: 1, msg: "expected n=<len>".into() })?;
        let mut members = BTreeSet::new();
        for (i, line) in lines {
            let w = word_from_str(line.trim())
                .filter(|w| w.len() == n)
                .ok_or(SymbolicError::Format { line: i + 1, msg: "bad word".into() })?;
            members.insert(w);
        }
        Ok(FactorSet { n, members })
    }
}

pub fn factor_set(w: &CentralWindow, n: usize) -> Result<FactorSet, SymbolicError> {
    let len = w.symbols.len();
    if n == 0 || len < n {
        return Err(SymbolicError::WindowTooShort { len, n });
    }
    let members = w.symbols.windows(n).map(|b| b.to_vec()).collect();
    Ok(FactorSet { n, members })
}

pub fn complexity(w: &CentralWindow, n: usize) -> Result<usize, SymbolicError> {
    let len = w.symbols.len();
    if n == 0 || len < n {
        return Err(SymbolicError::WindowTooShort { len, n });
    }
    Ok(w.symbols.windows(n).collect::<HashSet<_>>().len())
}

/// Largest difference in the number of `1`s between two length-`n` factors.
pub fn balance_defect(w: &CentralWindow, n: usize) -> Result<usize, SymbolicError> {
    let (lo, hi) = count_range(&w.symbols, n, 1)?;
    Ok(hi - lo)
}

fn count_range(symbols: &[u8], n: usize, symbol: u8) -> Result<(usize, usize), SymbolicError> {
    let len = symbols.len();
    if n == 0 || len < n {
        return Err(SymbolicError::WindowTooShort { len, n });
    }
    let mut c = symbols[..n].iter().filter(|&&s| s == symbol).count();
    let (mut lo, mut hi) = (c, c);
    for i in n..len {
        c += (symbols[i] == symbol) as usize;
        c -= (symbols[i - n] == symbol) as usize;
        lo = lo.min(c);
        hi = hi.max(c);
    }
    Ok((lo, hi))
}

/// Closed interval of rotation numbers with rational endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FareyInterval {
    pub lower: Rational,
    pub upper: Rational,
    /// The window repeats with a short period (a coding of a rational rotation
    /// or too short to tell).
    pub periodic: bool,
}

impl FareyInterval {
    pub fn width(&self) -> f64 {
        rational_to_f64(&(self.upper - self.lower))
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lower <= *r && *r <= self.upper
    }

    /// Exact membership test for an angle in `[0, 1]`.
    pub fn contains(&self, a: &Angle) -> bool {
        !matches!(cmp_angle_rational(a, &self.lower), std::cmp::Ordering::Less)
            && !matches!(cmp_angle_rational(a, &self.upper), std::cmp::Ordering::Greater)
    }

    /// Endpoints are Farey neighbors (`|p q' − p' q| = 1`) or coincide.
    pub fn endpoints_are_farey_neighbors(&self) -> bool {
        let (p, q) = (*self.lower.numer() as i128, *self.lower.denom() as i128);
        let (pp, qq) = (*self.upper.numer() as i128, *self.upper.denom() as i128);
        self.lower == self.upper || (pp * q - p * qq) == 1
    }
}

pub(crate) fn cmp_angle_rational(a: &Angle, r: &Rational) -> std::cmp::Ordering {
    match a.exact_value() {
        ExactValue::Surd(s) => s
            .checked_add(&QuadSurd::rational(-*r.numer(), *r.denom()))
            .expect("overflow")
            .signum(),
        ExactValue::Dyadic(x) => {
            let rr = num_rational::BigRational::new((*r.numer()).into(), (*r.denom()).into());
            x.cmp(&rr)
        }
    }
}

/// Smallest period `p` with `w[i] = w[i+p]` for all valid `i`.
fn least_period(symbols: &[u8]) -> usize {
    // KMP failure function.
    let n = symbols.len();
    let mut fail = vec![0usize; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && symbols[i] != symbols[k] {
            k = fail[k - 1];
        }
        if symbols[i] == symbols[k] {
            k += 1;
        }
        fail[i] = k;
    }
    n - fail[n - 1]
}

/// Rotation interval with the default denominator cap.
pub fn estimate_rotation_interval(w: &CentralWindow) -> Result<FareyInterval, SymbolicError> {
    estimate_rotation_interval_with(w, DEFAULT_MAX_DENOMINATOR)
}

/// Farey interval containing every `α` whose Sturmian language contains all
/// factors of `w`.
///
/// For a rotation coding, any length-`n` block has `⌊nα⌋` or `⌊nα⌋ + 1`
/// zeros. Each observed count therefore pins `α` to an open interval with
/// denominator `n`; intersecting over all `n ≤ 2N+1` gives the slope set, which
/// is then snapped onto the Stern-Brocot tree.
pub fn estimate_rotation_interval_with(w: &CentralWindow, max_den: i64) -> Result<FareyInterval, SymbolicError> {
    let s = &w.symbols;
    let len = s.len();
    if len == 0 {
        return Err(SymbolicError::EmptyWindow);
    }
    for n in 1..=len.min(50) {
        let c = complexity(w, n)?;
        if c > n + 1 {
            return Err(SymbolicError::NotSturmian(format!("complexity({n}) = {c} > {}", n + 1)));
        }
        let b = balance_defect(w, n)?;
        if b > 1 {
            return Err(SymbolicError::NotSturmian(format!("balance defect {b} at n = {n}")));
        }
    }
    let mut lo = Rational::zero();
    let mut hi = Rational::one();
    for n in 1..=len {
        let (zmin, zmax) = count_range(s, n, 0)?;
        let ni = n as i64;
        let (l, u) = match zmax - zmin {
            0 => (Rational::new(zmin as i64 - 1, ni), Rational::new(zmin as i64 + 1, ni)),
            1 => (Rational::new(zmin as i64, ni), Rational::new(zmax as i64, ni)),
            _ => return Err(SymbolicError::NotSturmian(format!("zero counts span {zmin}..{zmax} at n = {n}"))),
        };
        lo = lo.max(l);
        hi = hi.min(u);
    }
    if lo > hi {
        return Err(SymbolicError::NotSturmian("empty slope interval".into()));
    }
    // Stern-Brocot descent to the Farey pair bracketing [lo, hi].
    let (mut lp, mut lq, mut rp, mut rq) = (0i64, 1i64, 1i64, 1i64);
    loop {
        let (mp, mq) = (lp + rp, lq + rq);
        if mq > max_den {
            break;
        }
        let m = Rational::new(mp, mq);
        if m <= lo {
            // Jump over runs of identical moves.
            let steps = jump_count(lp, lq, rp, rq, &lo, true, max_den);
            lp += steps * rp;
            lq += steps * rq;
        } else if m >= hi {
            let steps = jump_count(rp, rq, lp, lq, &hi, false, max_den);
            rp += steps * lp;
            rq += steps * lq;
        } else {
            break;
        }
    }
    let interval = FareyInterval {
        lower: Rational::new(lp, lq),
        upper: Rational::new(rp, rq),
        periodic: least_period(s) * 4 <= len,
    };
    let freq = Rational::new(s.iter().filter(|&&b| b == 0).count() as i64, len as i64);
    let slack = Rational::new(1, len as i64);
    if freq + slack < interval.lower || freq - slack > interval.upper {
        return Err(SymbolicError::NotSturmian("symbol frequency outside slope interval".into()));
    }
    Ok(interval)
}

/// Number `t ≥ 1` of repeated mediant moves of the `moving` endpoint towards
/// `fixed` that keep it on the same side of `target`.
fn jump_count(mp: i64, mq: i64, fp: i64, fq: i64, target: &Rational, moving_is_left: bool, max_den: i64) -> i64 {
    let ok = |t: i64| {
        let q = mq + t * fq;
        if q > max_den {
            return false;
        }
        let m = Rational::new(mp + t * fp, q);
        if moving_is_left {
            m <= *target
        } else {
            m >= *target
        }
    };
    let mut t = 1i64;
    while ok(t * 2) {
        t *= 2;
    }
    let (mut a, mut b) = (t, t * 2);
    while b - a > 1 {
        let c = (a + b) / 2;
        if ok(c) {
            a = c;
        } else {
            b = c;
        }
    }
    a
}

/// Factor sets for every length `1..=max_len`.
pub type FactorFamily = BTreeMap<usize, FactorSet>;

pub fn factor_family(w: &CentralWindow, max_len: usize) -> Result<FactorFamily, SymbolicError> {
    (1..=max_len).map(|n| factor_set(w, n).map(|f| (n, f))).collect()
}

/// Hausdorff bound between two subshifts known through their factor families.
///
/// If the `(2m+1)`-factor sets agree for `m = depth`, the subshifts are within
/// `1/(depth+2)`; otherwise the bound is taken at the largest agreeing `m`.
pub fn symbolic_hausdorff(a: &FactorFamily, b: &FactorFamily, depth: usize) -> ShiftDistance {
    let agrees = |m: usize| match (a.get(&(2 * m + 1)), b.get(&(2 * m + 1))) {
        (Some(x), Some(y)) => x.members == y.members,
        _ => false,
    };
    match (0..=depth).rev().find(|&m| agrees(m)) {
        Some(m) => ShiftDistance::cylinder_radius(m),
        None => ShiftDistance { value: Rational::one(), truncated: false },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha_star() -> Angle {
        Angle::golden()
    }

    #[test]
    fn symbols_at_small_k() {
        let a = alpha_star();
        let z = Angle::zero();
        assert_eq!(sturmian_symbol(&a, &z, 0).unwrap(), 0);
        assert_eq!(sturmian_symbol(&a, &z, 1).unwrap(), 1);
        assert_eq!(sturmian_symbol(&a, &z, 3).unwrap(), 0);
    }

    #[test]
    fn windows_match_fractional_parts() {
        let a = alpha_star();
        let w = sturmian_window(&a, &Angle::zero(), 2).unwrap();
        assert_eq!(w.symbols(), &[0, 1, 0, 1, 1]);
        let w6 = sturmian_window(&a, &Angle::zero(), 6).unwrap();
        let tail: Vec<u8> = (0..=6).map(|k| w6.get(k).unwrap()).collect();
        assert_eq!(tail, vec![0, 1, 1, 0, 1, 1, 0]);
        let w0 = sturmian_window(&Angle::from_f64(0.3), &Angle::zero(), 0).unwrap();
        assert_eq!(w0.symbols(), &[0]);
    }

    #[test]
    fn undecidable_boundary_is_reported() {
        // θ = −3α exactly on the coding orbit, α exact surd, θ a bare float near it.
        let a = alpha_star();
        let theta = Angle::from_f64((-3.0 * a.value()).rem_euclid(1.0));
        let err = sturmian_window(&a, &theta, 4).unwrap_err();
        assert!(matches!(err, SymbolicError::BoundaryUndecidable { k: 3 | 4 }));
    }

    #[test]
    fn shift_distance_examples() {
        let u = CentralWindow::constant(5, 0);
        assert_eq!(shift_distance(&u, &u).value, Rational::zero());
        let v = CentralWindow::from_fn(5, |k| (k == 3) as u8);
        assert_eq!(shift_distance(&u, &v).value, Rational::new(1, 4));
        let v0 = CentralWindow::from_fn(5, |k| (k == 0) as u8);
        assert_eq!(shift_distance(&u, &v0).value, Rational::one());
        let short = CentralWindow::constant(2, 0);
        let d = shift_distance(&v, &short);
        assert!(d.truncated);
        assert_eq!(d.value, Rational::zero());
    }

    #[test]
    fn factor_sets_of_golden_window() {
        let w = sturmian_window(&alpha_star(), &Angle::zero(), 200).unwrap();
        let f1 = factor_set(&w, 1).unwrap();
        assert_eq!(f1.len(), 2);
        let f2 = factor_set(&w, 2).unwrap();
        let words: Vec<String> = f2.members.iter().map(|w| word_to_string(w)).collect();
        assert_eq!(words, vec!["01", "10", "11"]);
        let z = CentralWindow::constant(10, 0);
        assert_eq!(complexity(&z, 5).unwrap(), 1);
        assert!(matches!(factor_set(&z, 22), Err(SymbolicError::WindowTooShort { .. })));
    }

    #[test]
    fn balance_examples() {
        let w = sturmian_window(&alpha_star(), &Angle::zero(), 500).unwrap();
        assert!(balance_defect(&w, 10).unwrap() <= 1);
        assert_eq!(balance_defect(&CentralWindow::constant(7, 1), 4).unwrap(), 0);
        let w = CentralWindow::from_fn(10, |k| [0, 0, 1, 1][(k.rem_euclid(4)) as usize]);
        assert_eq!(balance_defect(&w, 2).unwrap(), 2);
    }

    #[test]
    fn rotation_interval_of_golden_window() {
        let a = alpha_star();
        let w = sturmian_window(&a, &Angle::zero(), 1000).unwrap();
        let iv = estimate_rotation_interval(&w).unwrap();
        assert!(iv.width() <= 2e-3);
        assert!(iv.contains(&a));
        assert!(iv.endpoints_are_farey_neighbors());
        assert!(!iv.periodic);
    }

    #[test]
    fn rotation_interval_of_periodic_windows() {
        let n = 50usize;
        let z = CentralWindow::constant(n, 0);
        let iv = estimate_rotation_interval(&z).unwrap();
        assert!(iv.periodic);
        // All-zero coding: α ≡ 0 approached from above 1 − 1/(2N+1).
        assert_eq!(iv.upper, Rational::one());
        assert!(iv.lower >= Rational::new(2 * n as i64, 2 * n as i64 + 1));
        let alt = CentralWindow::from_fn(n, |k| k.rem_euclid(2) as u8);
        let iv = estimate_rotation_interval(&alt).unwrap();
        assert!(iv.periodic);
        assert!(iv.contains_rational(&Rational::new(1, 2)));
    }

    #[test]
    fn not_sturmian_rejected() {
        let w = CentralWindow::from_fn(20, |k| [0, 0, 1, 1][(k.rem_euclid(4)) as usize]);
        assert!(matches!(estimate_rotation_interval(&w), Err(SymbolicError::NotSturmian(_))));
    }

    #[test]
    fn text_round_trip() {
        let w = sturmian_window(&alpha_star(), &Angle::zero(), 7).unwrap();
        assert_eq!(CentralWindow::from_text(&w.to_text()).unwrap(), w);
        let f = factor_set(&w, 3).unwrap();
        assert_eq!(FactorSet::from_text(&f.to_text()).unwrap(), f);
        assert!(CentralWindow::from_text("N=1\n0 1\n").is_err());
    }

    #[test]
    fn symbolic_hausdorff_examples() {
        let a = alpha_star();
        let w = sturmian_window(&a, &Angle::zero(), 300).unwrap();
        let fa = factor_family(&w, 13).unwrap();
        assert_eq!(symbolic_hausdorff(&fa, &fa, 6), ShiftDistance::cylinder_radius(6));
        let w2 = sturmian_window(&Angle::from_f64(0.1), &Angle::zero(), 300).unwrap();
        let fb = factor_family(&w2, 13).unwrap();
        // Both use both letters, but the 3-blocks already differ.
        let d = symbolic_hausdorff(&fa, &fb, 6);
        assert_eq!(d, ShiftDistance::cylinder_radius(0));
        let fz = factor_family(&CentralWindow::constant(20, 0), 13).unwrap();
        assert_eq!(symbolic_hausdorff(&fa, &fz, 6).value, Rational::one());
    }
}
