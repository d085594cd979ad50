//! Exact symplectic twist maps given by a generating function, and the
//! Frenkel-Kontorova action on configurations.
//!
//! Momenta follow `y = −∂₁h(x, x′)`, `y′ = ∂₂h(x, x′)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::convergents;
use crate::error::TwistError;

pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const TAIL_TOLERANCE: f64 = 1e-6;
pub const MULTI_STARTS: usize = 20;
const START_SEED: u64 = 0x5eed_0f_a11;
const MAX_NEWTON: usize = 400;

/// A generating function `h(x, x′)` with `∂₁₂h < 0` and `h(x+1, x′+1) = h(x, x′)`.
pub trait GeneratingFunction: Sync {
    fn h(&self, x: f64, xp: f64) -> f64;
    fn h1(&self, x: f64, xp: f64) -> f64;
    fn h2(&self, x: f64, xp: f64) -> f64;
    fn h11(&self, x: f64, xp: f64) -> f64;
    fn h12(&self, x: f64, xp: f64) -> f64;
    fn h22(&self, x: f64, xp: f64) -> f64;

    /// Upper bound of `∂₁₂h`, negative for a twist map.
    fn twist_bound(&self) -> f64;

    /// `x′` with `−∂₁h(x, x′) = y`.
    fn next_x(&self, x: f64, y: f64) -> f64 {
        let mut xp = x + y;
        for _ in 0..100 {
            let r = -self.h1(x, xp) - y;
            let step = r / self.h12(x, xp);
            xp += step;
            if step.abs() < 1e-15 * (1.0 + xp.abs()) {
                break;
            }
        }
        xp
    }

    /// `x` with `∂₂h(x, x′) = y′`.
    fn prev_x(&self, xp: f64, yp: f64) -> f64 {
        let mut x = xp - yp;
        for _ in 0..100 {
            let r = self.h2(x, xp) - yp;
            let step = r / self.h12(x, xp);
            x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

/// `h(x, x′) = (x′ − x)²/2 + (K/4π²) cos 2πx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardFamily {
    pub k: f64,
}

impl StandardFamily {
    pub fn new(k: f64) -> Result<Self, TwistError> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(TwistError::Invalid(format!("coupling must be ≥ 0, got {k}")));
        }
        Ok(StandardFamily { k })
    }
}

impl GeneratingFunction for StandardFamily {
    fn h(&self, x: f64, xp: f64) -> f64 {
        let d = xp - x;
        0.5 * d * d + self.k / (4.0 * PI * PI) * (2.0 * PI * x).cos()
    }
    fn h1(&self, x: f64, xp: f64) -> f64 {
        -(xp - x) - self.k / (2.0 * PI) * (2.0 * PI * x).sin()
    }
    fn h2(&self, x: f64, xp: f64) -> f64 {
        xp - x
    }
    fn h11(&self, x: f64, _xp: f64) -> f64 {
        1.0 - self.k * (2.0 * PI * x).cos()
    }
    fn h12(&self, _x: f64, _xp: f64) -> f64 {
        -1.0
    }
    fn h22(&self, _x: f64, _xp: f64) -> f64 {
        1.0
    }
    fn twist_bound(&self) -> f64 {
        -1.0
    }
    fn next_x(&self, x: f64, y: f64) -> f64 {
        x + y - self.k / (2.0 * PI) * (2.0 * PI * x).sin()
    }
    fn prev_x(&self, xp: f64, yp: f64) -> f64 {
        xp - yp
    }
}

/// The lift `F` on `R²` induced by a generating function.
#[derive(Clone, Copy, Debug)]
pub struct TwistMap<G> {
    pub gf: G,
}

impl<G: GeneratingFunction> TwistMap<G> {
    pub fn new(gf: G) -> Self {
        TwistMap { gf }
    }

    pub fn forward(&self, p: [f64; 2]) -> [f64; 2] {
        let xp = self.gf.next_x(p[0], p[1]);
        [xp, self.gf.h2(p[0], xp)]
    }

    pub fn backward(&self, p: [f64; 2]) -> [f64; 2] {
        let x = self.gf.prev_x(p[0], p[1]);
        [x, -self.gf.h1(x, p[0])]
    }

    pub fn iterate(&self, mut p: [f64; 2], n: i64) -> [f64; 2] {
        for _ in 0..n.unsigned_abs() {
            p = if n > 0 { self.forward(p) } else { self.backward(p) };
        }
        p
    }

    /// `DF` by implicit differentiation of `y = −∂₁h(x, x′)`.
    pub fn jacobian(&self, p: [f64; 2]) -> Matrix2<f64> {
        let x = p[0];
        let xp = self.gf.next_x(x, p[1]);
        let (h11, h12, h22) = (self.gf.h11(x, xp), self.gf.h12(x, xp), self.gf.h22(x, xp));
        let dxp_dx = -h11 / h12;
        let dxp_dy = -1.0 / h12;
        Matrix2::new(dxp_dx, dxp_dy, h12 + h22 * dxp_dx, h22 * dxp_dy)
    }

    pub fn jacobian_inverse(&self, p: [f64; 2]) -> Matrix2<f64> {
        let q = self.backward(p);
        self.jacobian(q).try_inverse().expect("area preserving")
    }

    /// Projection to the annulus `T × R`.
    pub fn annulus(p: [f64; 2]) -> [f64; 2] {
        [p[0].rem_euclid(1.0), p[1]]
    }
}

pub fn standard_family(k: f64) -> Result<(StandardFamily, TwistMap<StandardFamily>), TwistError> {
    let gf = StandardFamily::new(k)?;
    Ok((gf, TwistMap::new(gf)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigKind {
    /// `x_{i+q} = x_i + p`; the stored values are `x_0..x_{q-1}`.
    Periodic { p: i64, q: usize },
    /// `x_0..x_L` with both ends held fixed.
    Clamped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub x: Vec<f64>,
    pub kind: ConfigKind,
    pub well_ordered: bool,
    pub action: f64,
    pub residual: f64,
}

impl Configuration {
    /// `x_i` for any integer `i` (periodic), or within `0..=L` (clamped).
    pub fn at(&self, i: i64) -> f64 {
        match self.kind {
            ConfigKind::Periodic { p, q } => {
                let q = q as i64;
                self.x[i.rem_euclid(q) as usize] + (p * i.div_euclid(q)) as f64
            }
            ConfigKind::Clamped => self.x[i as usize],
        }
    }

    /// Translate `i ↦ x_{i+shift} + add`.
    pub fn translate(&self, shift: i64, add: i64) -> Configuration {
        let n = self.x.len() as i64;
        let x = match self.kind {
            ConfigKind::Periodic { .. } => (0..n).map(|i| self.at(i + shift) + add as f64).collect(),
            ConfigKind::Clamped => self.x.iter().map(|v| v + add as f64).collect(),
        };
        Configuration { x, ..self.clone() }
    }

    /// Orbit points `(x_i, y_i)` on the cover for `i ∈ [from, to)`.
    pub fn orbit<G: GeneratingFunction>(&self, gf: &G, from: i64, to: i64) -> Vec<[f64; 2]> {
        (from..to).map(|i| [self.at(i), -gf.h1(self.at(i), self.at(i + 1))]).collect()
    }
}

pub fn action_periodic<G: GeneratingFunction>(gf: &G, x: &[f64], p: i64) -> f64 {
    let q = x.len();
    (0..q)
        .map(|i| {
            let next = if i + 1 < q { x[i + 1] } else { x[0] + p as f64 };
            gf.h(x[i], next)
        })
        .sum()
}

fn periodic_gradient<G: GeneratingFunction>(gf: &G, x: &[f64], p: i64) -> DVector<f64> {
    let q = x.len();
    let at = |i: i64| x[i.rem_euclid(q as i64) as usize] + (p * i.div_euclid(q as i64)) as f64;
    DVector::from_iterator(
        q,
        (0..q as i64).map(|i| gf.h2(at(i - 1), at(i)) + gf.h1(at(i), at(i + 1))),
    )
}

fn periodic_hessian<G: GeneratingFunction>(gf: &G, x: &[f64], p: i64) -> DMatrix<f64> {
    let q = x.len();
    let mut m = DMatrix::zeros(q, q);
    for i in 0..q {
        let j = (i + 1) % q;
        let (a, b) = (x[i], if i + 1 < q { x[i + 1] } else { x[0] + p as f64 });
        m[(i, i)] += gf.h11(a, b);
        m[(j, j)] += gf.h22(a, b);
        m[(i, j)] += gf.h12(a, b);
        m[(j, i)] += gf.h12(a, b);
    }
    m
}

/// Damped Newton on a smooth function given value, gradient and Hessian;
/// falls back to Levenberg-Marquardt shifts when the Hessian is indefinite.
fn damped_newton(
    mut x: Vec<f64>,
    value: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> DVector<f64>,
    hess: impl Fn(&[f64]) -> DMatrix<f64>,
) -> Result<(Vec<f64>, f64), TwistError> {
    let mut best = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let g = grad(&x);
        let r = g.amax();
        best = best.min(r);
        if r <= GRADIENT_TOLERANCE {
            return Ok((x, r));
        }
        let h = hess(&x);
        let n = x.len();
        let mut shift = 0.0;
        let dir = loop {
            let m = &h + DMatrix::identity(n, n) * shift;
            if let Some(ch) = m.cholesky() {
                break ch.solve(&(-&g));
            }
            shift = if shift == 0.0 { 1e-6 * (1.0 + h.amax()) } else { shift * 4.0 };
            if shift > 1e12 {
                break -&g;
            }
        };
        let f0 = value(&x);
        let slope = g.dot(&dir);
        let mut t = 1.0;
        // Close to a minimum the action no longer resolves the decrease.
        let trust = r < 1e-6 && shift == 0.0;
        loop {
            let y: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            if trust || value(&y) <= f0 + 1e-4 * t * slope || t < 1e-10 {
                x = y;
                break;
            }
            t *= 0.5;
        }
    }
    Err(TwistError::NoConvergence { iterations: MAX_NEWTON, residual: best })
}

fn is_well_ordered(x: &[f64], p: i64) -> bool {
    let q = x.len() as i64;
    let at = |i: i64| x[i.rem_euclid(q) as usize] + (p * i.div_euclid(q)) as f64;
    (1..q).all(|s| {
        let d: Vec<f64> = (0..q).map(|k| at(k + s) - at(k)).collect();
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // No integer translate may sit between two configuration points.
        hi - lo < 1e-12 || lo.ceil() > hi
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Periodic minimizer of rotation type `(p, q)` with multi-start global search.
pub fn minimize_periodic<G: GeneratingFunction>(gf: &G, p: i64, q: usize) -> Result<Configuration, TwistError> {
    minimize_periodic_seeded(gf, p, q, START_SEED)
}

pub fn minimize_periodic_seeded<G: GeneratingFunction>(gf: &G, p: i64, q: usize, seed: u64) -> Result<Configuration, TwistError> {
    if q == 0 || gcd(p, q as i64) != 1 {
        return Err(TwistError::InvalidRotation { p, q: q as i64 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..MULTI_STARTS)
        .map(|s| {
            let phase = (s as f64 + rng.gen::<f64>()) / MULTI_STARTS as f64;
            (0..q).map(|i| (i as f64 * p as f64 + phase) / q as f64 + 0.02 * (rng.gen::<f64>() - 0.5) / q as f64).collect()
        })
        .collect();
    let runs: Vec<Result<(Vec<f64>, f64), TwistError>> = starts
        .into_par_iter()
        .map(|x0| {
            damped_newton(
                x0,
                |x| action_periodic(gf, x, p),
                |x| periodic_gradient(gf, x, p),
                |x| periodic_hessian(gf, x, p),
            )
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut worst_residual = f64::INFINITY;
    for r in runs {
        match r {
            Ok((x, res)) => {
                let w = action_periodic(gf, &x, p);
                if best.as_ref().is_none_or(|b| w < b.1 - 1e-13) {
                    best = Some((x, w, res));
                }
            }
            Err(TwistError::NoConvergence { residual, .. }) => worst_residual = worst_residual.min(residual),
            Err(e) => return Err(e),
        }
    }
    let (mut x, action, residual) =
        best.ok_or(TwistError::NoConvergence { iterations: MAX_NEWTON, residual: worst_residual })?;
    let shift = x[0].floor();
    for v in &mut x {
        *v -= shift;
    }
    let well_ordered = is_well_ordered(&x, p);
    Ok(Configuration { x, kind: ConfigKind::Periodic { p, q }, well_ordered, action, residual })
}

pub fn config_gradient<G: GeneratingFunction>(gf: &G, c: &Configuration) -> Vec<f64> {
    match c.kind {
        ConfigKind::Periodic { p, .. } => periodic_gradient(gf, &c.x, p).iter().cloned().collect(),
        ConfigKind::Clamped => (1..c.x.len() - 1).map(|i| gf.h2(c.x[i - 1], c.x[i]) + gf.h1(c.x[i], c.x[i + 1])).collect(),
    }
}

/// Solve a symmetric tridiagonal system by `LDLᵀ`; `None` unless positive definite.
fn tridiagonal_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let prev = if i > 0 { l[i - 1] * l[i - 1] * d[i - 1] } else { 0.0 };
        d[i] = diag[i] - prev;
        if d[i] <= 0.0 || !d[i].is_finite() {
            return None;
        }
        if i + 1 < n {
            l[i] = off[i] / d[i];
        }
        z[i] = rhs[i] - if i > 0 { l[i - 1] * z[i - 1] } else { 0.0 };
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = z[i] / d[i] - if i + 1 < n { l[i] * x[i + 1] } else { 0.0 };
    }
    Some(x)
}

fn clamped_action<G: GeneratingFunction>(gf: &G, x: &[f64]) -> f64 {
    x.windows(2).map(|w| gf.h(w[0], w[1])).sum()
}

/// Minimize the action over `x_0..x_L` with both ends fixed.
pub fn minimize_clamped<G: GeneratingFunction>(gf: &G, mut x: Vec<f64>) -> Result<(Vec<f64>, f64), TwistError> {
    let n = x.len();
    if n < 3 {
        return Err(TwistError::Invalid("segment needs at least 3 points".into()));
    }
    let mut best = f64::INFINITY;
    for _ in 0..MAX_NEWTON * 4 {
        let g: Vec<f64> = (1..n - 1).map(|i| gf.h2(x[i - 1], x[i]) + gf.h1(x[i], x[i + 1])).collect();
        let r = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        best = best.min(r);
        if r <= GRADIENT_TOLERANCE {
            return Ok((x, r));
        }
        let diag: Vec<f64> = (1..n - 1).map(|i| gf.h22(x[i - 1], x[i]) + gf.h11(x[i], x[i + 1])).collect();
        let off: Vec<f64> = (1..n - 2).map(|i| gf.h12(x[i], x[i + 1])).collect();
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut shift = 0.0;
        let dir = loop {
            let dd: Vec<f64> = diag.iter().map(|v| v + shift).collect();
            if let Some(s) = tridiagonal_solve(&dd, &off, &rhs) {
                break s;
            }
            shift = if shift == 0.0 { 1e-6 } else { shift * 4.0 };
        };
        let f0 = clamped_action(gf, &x);
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let trust = r < 1e-6 && shift == 0.0;
        let mut t = 1.0;
        loop {
            let mut y = x.clone();
            for i in 1..n - 1 {
                y[i] += t * dir[i - 1];
            }
            if trust || clamped_action(gf, &y) <= f0 + 1e-4 * t * slope || t < 1e-10 {
                x = y;
                break;
            }
            t *= 0.5;
        }
    }
    Err(TwistError::NoConvergence { iterations: MAX_NEWTON * 4, residual: best })
}

/// Clamped-segment minimizer joining a periodic minimizer to a translate of it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Heteroclinic {
    pub config: Configuration,
    /// Action minus the periodic action per step, comparable across windows.
    pub renormalized_action: f64,
    /// Largest distance of the first and last `q` points to the end orbits.
    pub tail_residual: f64,
    pub monotone: bool,
}

pub fn heteroclinic_minimizer<G: GeneratingFunction>(
    gf: &G,
    left: &Configuration,
    right: &Configuration,
    window: usize,
) -> Result<Heteroclinic, TwistError> {
    let ConfigKind::Periodic { p, q } = left.kind else {
        return Err(TwistError::Invalid("left end must be periodic".into()));
    };
    if window < 50 * q {
        return Err(TwistError::Invalid(format!("window {window} shorter than 50·q")));
    }
    let l = window as i64;
    // Newton keeps the reflection symmetry of its start, so both symmetric
    // placements of the transition (on a site, between sites) are tried.
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut last_err = None;
    for center in [l as f64 / 2.0, l as f64 / 2.0 + 0.5] {
        let x0: Vec<f64> = (0..=l)
            .map(|i| {
                let w = match i {
                    0 => 0.0,
                    i if i == l => 1.0,
                    _ => 0.5 * (1.0 + ((i as f64 - center) / q as f64).tanh()),
                };
                (1.0 - w) * left.at(i) + w * right.at(i)
            })
            .collect();
        match minimize_clamped(gf, x0) {
            Ok((x, r)) => {
                let a = clamped_action(gf, &x);
                if best.as_ref().is_none_or(|b| a < b.1) {
                    best = Some((x, a, r));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((x, _, residual)) = best else {
        return Err(last_err.expect("at least one start"));
    };
    let qq = q as i64;
    let tail_residual = (0..qq.min(l))
        .map(|i| (x[i as usize] - left.at(i)).abs())
        .chain((l - qq.min(l)..=l).map(|i| (x[i as usize] - right.at(i)).abs()))
        .fold(0.0, f64::max);
    if tail_residual > TAIL_TOLERANCE {
        return Err(TwistError::TailNotSettled { residual: tail_residual, tolerance: TAIL_TOLERANCE });
    }
    let action = clamped_action(gf, &x);
    let per_step = left.action / q as f64;
    let renormalized_action = action - per_step * l as f64;
    let up = right.at(0) > left.at(0);
    let monotone = (0..(l - qq).max(0) as usize).all(|i| {
        let d = x[i + q] - x[i] - p as f64;
        if up {
            d >= -1e-12
        } else {
            d <= 1e-12
        }
    });
    let config = Configuration { x, kind: ConfigKind::Clamped, well_ordered: false, action, residual };
    Ok(Heteroclinic { config, renormalized_action, tail_residual, monotone })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl std::str::FromStr for Branch {
    type Err = TwistError;
    fn from_str(s: &str) -> Result<Self, TwistError> {
        match s {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            _ => Err(TwistError::Invalid(format!("branch must be plus or minus, got {s}"))),
        }
    }
}

/// Nearest integer translate `i ↦ x_{i+s} + j` strictly above (or below) `x`.
pub fn neighbor_translate(c: &Configuration, above: bool) -> Configuration {
    let ConfigKind::Periodic { q, .. } = c.kind else {
        return c.clone();
    };
    let x0 = c.at(0);
    let mut best: Option<(f64, i64, i64)> = None;
    for s in 0..q as i64 {
        let v = c.at(s);
        let j = if above { (x0 - v).floor() as i64 + 1 } else { (x0 - v).ceil() as i64 - 1 };
        let gap = (v + j as f64 - x0).abs();
        if gap > 1e-12 && best.is_none_or(|b| gap < b.0) {
            best = Some((gap, s, j));
        }
    }
    let (_, s, j) = best.expect("nonempty configuration");
    c.translate(s, j)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Periodic,
    HeteroclinicPlus,
    HeteroclinicMinus,
}

/// Finite sample of an Aubry-Mather set on the annulus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AubryMatherApprox {
    pub points: Vec<[f64; 2]>,
    pub roles: Vec<Role>,
    pub rotation: f64,
    pub lipschitz: f64,
    pub partial_graph: bool,
    pub heteroclinic_count: usize,
    /// `(Lip + 1)/ε` with `ε` the smallest gap between periodic points.
    pub heteroclinic_bound: f64,
    pub periodic: Configuration,
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Largest slope `|Δy|/|Δx|` over pairs and whether all `x` are distinct.
pub fn lipschitz_scan(points: &[[f64; 2]]) -> (f64, bool) {
    let mut sorted: Vec<[f64; 2]> = points.iter().map(|p| [p[0].rem_euclid(1.0), p[1]]).collect();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut lip: f64 = 0.0;
    let mut distinct = true;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let dx = circle_dist(sorted[i][0], sorted[j][0]);
            let dy = (sorted[i][1] - sorted[j][1]).abs();
            if dx < 1e-13 {
                if dy > 1e-9 {
                    distinct = false;
                }
                continue;
            }
            lip = lip.max(dy / dx);
        }
    }
    (lip, distinct)
}

pub fn periodic_points<G: GeneratingFunction>(gf: &G, c: &Configuration) -> Vec<[f64; 2]> {
    c.orbit(gf, 0, c.x.len() as i64).into_iter().map(|p| [p[0].rem_euclid(1.0), p[1]]).collect()
}

pub fn assemble_am_set<G: GeneratingFunction>(gf: &G, p: i64, q: usize, branch: Branch) -> Result<AubryMatherApprox, TwistError> {
    assemble_am_set_window(gf, p, q, branch, (50 * q).max(60))
}

pub fn assemble_am_set_window<G: GeneratingFunction>(
    gf: &G,
    p: i64,
    q: usize,
    branch: Branch,
    window: usize,
) -> Result<AubryMatherApprox, TwistError> {
    let per = minimize_periodic(gf, p, q)?;
    let tm = TwistMap::new(GfRef(gf));
    let orbit = per.orbit(gf, 0, q as i64);
    hyperbolicity_report(&tm, &orbit, 0.0)?;
    let other = neighbor_translate(&per, branch == Branch::Plus);
    let het = heteroclinic_minimizer(gf, &per, &other, window)?;
    let per_pts = periodic_points(gf, &per);
    let mut points = per_pts.clone();
    let mut roles = vec![Role::Periodic; points.len()];
    let role = if branch == Branch::Plus { Role::HeteroclinicPlus } else { Role::HeteroclinicMinus };
    let x = &het.config.x;
    for i in 0..x.len() - 1 {
        let pt = [x[i].rem_euclid(1.0), -gf.h1(x[i], x[i + 1])];
        let near = per_pts.iter().any(|pp| circle_dist(pp[0], pt[0]) < 1e-7 && (pp[1] - pt[1]).abs() < 1e-6);
        if !near {
            points.push(pt);
            roles.push(role);
        }
    }
    let (lipschitz, partial_graph) = lipschitz_scan(&points);
    let mut xs: Vec<f64> = per_pts.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let eps = if xs.len() < 2 { 1.0 } else { (0..xs.len()).map(|i| circle_dist(xs[i], xs[(i + 1) % xs.len()])).fold(1.0, f64::min) };
    Ok(AubryMatherApprox {
        points,
        roles,
        rotation: p as f64 / q as f64,
        lipschitz,
        partial_graph,
        heteroclinic_count: 1,
        heteroclinic_bound: (lipschitz + 1.0) / eps,
        periodic: per,
    })
}

/// Adapter so a borrowed generating function can drive a [`TwistMap`].
#[derive(Clone, Copy, Debug)]
pub struct GfRef<'a, G>(pub &'a G);

impl<G: GeneratingFunction> GeneratingFunction for GfRef<'_, G> {
    fn h(&self, x: f64, xp: f64) -> f64 {
        self.0.h(x, xp)
    }
    fn h1(&self, x: f64, xp: f64) -> f64 {
        self.0.h1(x, xp)
    }
    fn h2(&self, x: f64, xp: f64) -> f64 {
        self.0.h2(x, xp)
    }
    fn h11(&self, x: f64, xp: f64) -> f64 {
        self.0.h11(x, xp)
    }
    fn h12(&self, x: f64, xp: f64) -> f64 {
        self.0.h12(x, xp)
    }
    fn h22(&self, x: f64, xp: f64) -> f64 {
        self.0.h22(x, xp)
    }
    fn twist_bound(&self) -> f64 {
        self.0.twist_bound()
    }
    fn next_x(&self, x: f64, y: f64) -> f64 {
        self.0.next_x(x, y)
    }
    fn prev_x(&self, xp: f64, yp: f64) -> f64 {
        self.0.prev_x(xp, yp)
    }
}

/// Cone conditions checked on a grid around each orbit point, in the frame
/// of the unstable/stable directions with the max norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub trace: f64,
    pub det: f64,
    pub lambda: f64,
    pub mu: f64,
    pub unstable: [f64; 2],
    pub stable: [f64; 2],
    pub cone_expansion: f64,
    pub iterate: usize,
    pub radius: f64,
    pub grid: usize,
    pub invariance_ok: bool,
    pub forward_ok: bool,
    pub backward_ok: bool,
    pub invariance_margin: f64,
    pub forward_margin: f64,
    pub backward_margin: f64,
}

const CONE_EXPANSION: f64 = 1.2;
const CONE_GRID: usize = 5;

fn eigvec(m: &Matrix2<f64>, l: f64) -> Vector2<f64> {
    let a = Vector2::new(m[(0, 1)], l - m[(0, 0)]);
    let b = Vector2::new(l - m[(1, 1)], m[(1, 0)]);
    let v = if a.norm() >= b.norm() { a } else { b };
    let v = v / v.norm();
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        -v
    } else {
        v
    }
}

pub fn hyperbolicity_report<G: GeneratingFunction>(
    tm: &TwistMap<G>,
    orbit: &[[f64; 2]],
    radius: f64,
) -> Result<HyperbolicityReport, TwistError> {
    let q = orbit.len();
    if q == 0 {
        return Err(TwistError::Invalid("empty orbit".into()));
    }
    let mut m = Matrix2::identity();
    for p in orbit {
        m = tm.jacobian(*p) * m;
    }
    let trace = m.trace();
    let det = m.determinant();
    if trace <= 2.0 {
        return Err(TwistError::NotSaddle { trace });
    }
    let s = (trace * trace - 4.0).sqrt();
    let lambda = (trace + s) / 2.0;
    let mu = 2.0 / (trace + s);
    let eu = eigvec(&m, lambda);
    let es = eigvec(&m, mu);
    // Frames along the orbit: columns are the transported eigen-directions.
    let mut frames = Vec::with_capacity(q);
    let (mut u, mut v) = (eu, es);
    for p in orbit {
        frames.push(Matrix2::from_columns(&[u / u.norm(), v / v.norm()]));
        let d = tm.jacobian(*p);
        u = d * u;
        v = d * v;
    }
    let frame_inv: Vec<Matrix2<f64>> = frames.iter().map(|f| f.try_inverse().expect("transverse directions")).collect();
    let coords = |i: usize, w: Vector2<f64>| frame_inv[i % q] * w;
    let norm = |c: Vector2<f64>| c[0].abs().max(c[1].abs());
    let samples: Vec<(usize, [f64; 2])> = (0..q)
        .flat_map(|i| {
            let g = if radius > 0.0 { CONE_GRID } else { 1 };
            (0..g).flat_map(move |a| {
                (0..g).map(move |b| {
                    let t = |k: usize| if g == 1 { 0.0 } else { radius * (2.0 * k as f64 / (g - 1) as f64 - 1.0) };
                    (i, [orbit[i][0] + t(a), orbit[i][1] + t(b)])
                })
            })
        })
        .collect();
    let unstable_cone = [Vector2::new(1.0, 1.0), Vector2::new(1.0, -1.0), Vector2::new(1.0, 0.0)];
    let stable_cone = [Vector2::new(1.0, 1.0), Vector2::new(-1.0, 1.0), Vector2::new(0.0, 1.0)];
    let mut invariance_margin = f64::INFINITY;
    for &(i, p) in &samples {
        let d = tm.jacobian(p);
        for c in &unstable_cone {
            let w = coords(i + 1, d * frames[i] * c);
            invariance_margin = invariance_margin.min(1.0 / CONE_EXPANSION - w[1].abs() / w[0].abs());
        }
    }
    let expansion = |iter: usize, forward: bool| -> f64 {
        let mut worst = f64::INFINITY;
        for &(i, p) in &samples {
            let cone = if forward { &unstable_cone } else { &stable_cone };
            for c in cone {
                let mut w = frames[i] * c;
                let mut z = p;
                let mut idx = i as i64;
                for _ in 0..iter {
                    if forward {
                        w = tm.jacobian(z) * w;
                        z = tm.forward(z);
                        idx += 1;
                    } else {
                        w = tm.jacobian_inverse(z) * w;
                        z = tm.backward(z);
                        idx -= 1;
                    }
                }
                let ratio = norm(coords(idx.rem_euclid(q as i64) as usize, w)) / norm(*c);
                worst = worst.min(ratio - CONE_EXPANSION);
            }
        }
        worst
    };
    let mut iterate = 0;
    let (mut forward_margin, mut backward_margin) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for it in 1..=4 * q.max(1) {
        forward_margin = expansion(it, true);
        backward_margin = expansion(it, false);
        iterate = it;
        if forward_margin > 0.0 && backward_margin > 0.0 {
            break;
        }
    }
    Ok(HyperbolicityReport {
        trace,
        det,
        lambda,
        mu,
        unstable: [eu[0], eu[1]],
        stable: [es[0], es[1]],
        cone_expansion: CONE_EXPANSION,
        iterate,
        radius,
        grid: if radius > 0.0 { CONE_GRID } else { 1 },
        invariance_ok: invariance_margin > 0.0,
        forward_ok: forward_margin > 0.0,
        backward_ok: backward_margin > 0.0,
        invariance_margin,
        forward_margin,
        backward_margin,
    })
}

/// Outcome of the discrete Jacobi test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobiCheck {
    pub ok: bool,
    /// First index where the Jacobi field started at `ξ_0 = 0` returns to `≤ 0`.
    pub witness: Option<usize>,
}

/// No conjugate points along `x_0..x_L`: the Jacobi field with `ξ_0 = 0`,
/// `ξ_1 = 1` stays positive.
pub fn no_conjugate_points_check<G: GeneratingFunction>(gf: &G, x: &[f64]) -> JacobiCheck {
    let n = x.len();
    if n < 3 {
        return JacobiCheck { ok: true, witness: None };
    }
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    for i in 1..n - 1 {
        let d = gf.h22(x[i - 1], x[i]) + gf.h11(x[i], x[i + 1]);
        let next = -(gf.h12(x[i - 1], x[i]) * prev + d * cur) / gf.h12(x[i], x[i + 1]);
        if next <= 0.0 {
            return JacobiCheck { ok: false, witness: Some(i + 1) };
        }
        // Only the sign matters; keep the field bounded.
        let s = next.abs().max(cur.abs());
        prev = cur / s;
        cur = next / s;
    }
    JacobiCheck { ok: true, witness: None }
}

/// Minimizing orbits for successive convergents of an irrational rotation number.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IrrationalAm {
    pub p: i64,
    pub q: usize,
    pub am: AubryMatherApprox,
    /// Hausdorff distance between the orbits of convergents `k−1` and `k`, for `k = 2..=d`.
    pub drift: Vec<f64>,
}

/// Hausdorff distance between finite annulus point sets.
pub fn annulus_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let d = |p: &[f64; 2], r: &[f64; 2]| circle_dist(p[0], r[0]).max((p[1] - r[1]).abs());
    let one = |s: &[[f64; 2]], t: &[[f64; 2]]| {
        s.iter().map(|p| t.iter().map(|r| d(p, r)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

pub fn irrational_am_set<G: GeneratingFunction>(gf: &G, omega: f64, depth: usize) -> Result<IrrationalAm, TwistError> {
    if depth < 3 {
        return Err(TwistError::Invalid(format!("convergent depth must be ≥ 3, got {depth}")));
    }
    let cs: Vec<(i64, i64)> = convergents(omega, depth + 1).into_iter().filter(|c| c.1 > 0).collect();
    if cs.len() <= depth {
        return Err(TwistError::Invalid(format!("{omega} has fewer than {} convergents", depth + 1)));
    }
    let orbits: Vec<(Configuration, Vec<[f64; 2]>)> = cs[1..=depth]
        .par_iter()
        .map(|&(p, q)| {
            let c = minimize_periodic(gf, p, q as usize)?;
            let pts = periodic_points(gf, &c);
            Ok((c, pts))
        })
        .collect::<Result<_, TwistError>>()?;
    let drift = orbits.windows(2).map(|w| annulus_hausdorff(&w[0].1, &w[1].1)).collect();
    let (c, pts) = orbits.last().cloned().expect("depth ≥ 3");
    let (p, q) = cs[depth];
    let (lipschitz, partial_graph) = lipschitz_scan(&pts);
    let n = pts.len();
    Ok(IrrationalAm {
        p,
        q: q as usize,
        am: AubryMatherApprox {
            roles: vec![Role::Periodic; n],
            points: pts,
            rotation: p as f64 / q as f64,
            lipschitz,
            partial_graph,
            heteroclinic_count: 0,
            heteroclinic_bound: 0.0,
            periodic: c,
        },
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_map_is_area_preserving() {
        let (_, tm) = standard_family(1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = [rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0];
            assert!((tm.jacobian(p).determinant() - 1.0).abs() <= 1e-10);
            let back = tm.backward(tm.forward(p));
            assert!((back[0] - p[0]).abs() < 1e-12 && (back[1] - p[1]).abs() < 1e-12);
            let shifted = tm.forward([p[0] + 1.0, p[1]]);
            let f = tm.forward(p);
            assert!((shifted[0] - f[0] - 1.0).abs() < 1e-12 && (shifted[1] - f[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn traces_at_fixed_points() {
        for k in [0.5, 1.0, 2.0] {
            let (_, tm) = standard_family(k).unwrap();
            assert!((tm.jacobian([0.5, 0.0]).trace() - (2.0 + k)).abs() < 1e-10);
            assert!((tm.jacobian([0.0, 0.0]).trace() - (2.0 - k)).abs() < 1e-10);
            let f = tm.forward([0.5, 0.0]);
            assert!((f[0] - 0.5).abs() < 1e-15 && f[1].abs() < 1e-15);
        }
    }

    #[test]
    fn generic_newton_matches_closed_form() {
        struct Plain(StandardFamily);
        impl GeneratingFunction for Plain {
            fn h(&self, x: f64, xp: f64) -> f64 { self.0.h(x, xp) }
            fn h1(&self, x: f64, xp: f64) -> f64 { self.0.h1(x, xp) }
            fn h2(&self, x: f64, xp: f64) -> f64 { self.0.h2(x, xp) }
            fn h11(&self, x: f64, xp: f64) -> f64 { self.0.h11(x, xp) }
            fn h12(&self, x: f64, xp: f64) -> f64 { self.0.h12(x, xp) }
            fn h22(&self, x: f64, xp: f64) -> f64 { self.0.h22(x, xp) }
            fn twist_bound(&self) -> f64 { -1.0 }
        }
        let sf = StandardFamily::new(0.9).unwrap();
        let (a, b) = (TwistMap::new(sf), TwistMap::new(Plain(sf)));
        for p in [[0.1, 0.2], [0.7, -0.4], [2.3, 1.1]] {
            let (u, v) = (a.forward(p), b.forward(p));
            assert!((u[0] - v[0]).abs() < 1e-13 && (u[1] - v[1]).abs() < 1e-13);
            let (u, v) = (a.backward(p), b.backward(p));
            assert!((u[0] - v[0]).abs() < 1e-13 && (u[1] - v[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn fixed_point_minimizer() {
        let gf = StandardFamily::new(1.0).unwrap();
        let c = minimize_periodic(&gf, 0, 1).unwrap();
        assert!((c.x[0] - 0.5).abs() < 1e-10);
        assert!(c.residual <= 1e-10);
        // Brute-force grid of h(x, x).
        let grid = (0..10_000).map(|i| i as f64 / 10_000.0).min_by(|a, b| gf.h(*a, *a).total_cmp(&gf.h(*b, *b))).unwrap();
        assert!((grid - 0.5).abs() < 1e-4);
    }

    #[test]
    fn period_two_minimizer_is_well_ordered() {
        let gf = StandardFamily::new(1.0).unwrap();
        let c = minimize_periodic(&gf, 1, 2).unwrap();
        assert!(c.well_ordered);
        let d = c.x[1] - c.x[0];
        assert!(d > 0.0 && d < 1.0);
        assert!(config_gradient(&gf, &c).iter().all(|g| g.abs() <= 1e-10));
    }

    #[test]
    fn bad_rotation_rejected() {
        let gf = StandardFamily::new(1.0).unwrap();
        assert!(matches!(minimize_periodic(&gf, 2, 4), Err(TwistError::InvalidRotation { .. })));
        assert!(matches!(minimize_periodic(&gf, 1, 0), Err(TwistError::InvalidRotation { .. })));
    }

    #[test]
    fn homoclinic_plus_and_minus() {
        let gf = StandardFamily::new(1.0).unwrap();
        let c = minimize_periodic(&gf, 0, 1).unwrap();
        let up = neighbor_translate(&c, true);
        assert!((up.x[0] - 1.5).abs() < 1e-10);
        let h = heteroclinic_minimizer(&gf, &c, &up, 60).unwrap();
        assert!(h.monotone);
        let x = &h.config.x;
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        let h2 = heteroclinic_minimizer(&gf, &c, &up, 120).unwrap();
        assert!((h.renormalized_action - h2.renormalized_action).abs() <= 1e-8);
        let down = neighbor_translate(&c, false);
        let m = heteroclinic_minimizer(&gf, &c, &down, 60).unwrap();
        assert!(m.config.x.windows(2).all(|w| w[1] < w[0]));
        assert!((m.renormalized_action - h.renormalized_action).abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_saddle_and_elliptic_point() {
        let (_, tm) = standard_family(1.0).unwrap();
        let r = hyperbolicity_report(&tm, &[[0.5, 0.0]], 1e-3).unwrap();
        assert!((r.lambda - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((r.mu - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((r.lambda * r.mu - 1.0).abs() < 1e-10);
        assert!(r.invariance_ok && r.forward_ok && r.backward_ok);
        assert_eq!(r.iterate, 1);
        assert!(matches!(hyperbolicity_report(&tm, &[[0.0, 0.0]], 0.0), Err(TwistError::NotSaddle { .. })));
    }

    #[test]
    fn jacobi_test() {
        let gf = StandardFamily::new(1.0).unwrap();
        assert!(no_conjugate_points_check(&gf, &[0.5; 30]).ok);
        let r = no_conjugate_points_check(&gf, &[0.0; 30]);
        assert_eq!(r, JacobiCheck { ok: false, witness: Some(3) });
    }

    #[test]
    fn am_set_for_rotation_zero() {
        let gf = StandardFamily::new(1.0).unwrap();
        let am = assemble_am_set(&gf, 0, 1, Branch::Plus).unwrap();
        assert_eq!(am.roles.iter().filter(|r| **r == Role::Periodic).count(), 1);
        assert!(am.partial_graph);
        assert!(am.lipschitz.is_finite());
        let wide = assemble_am_set_window(&gf, 0, 1, Branch::Plus, 120).unwrap();
        assert!((wide.lipschitz - am.lipschitz).abs() < 1e-3 * am.lipschitz.max(1.0));
    }

    #[test]
    fn convergent_orbits_drift_less() {
        let gf = StandardFamily::new(1.0).unwrap();
        let omega = (3.0 - 5f64.sqrt()) / 2.0 / 3.0;
        let am = irrational_am_set(&gf, omega, 4).unwrap();
        assert!((am.am.rotation - omega).abs() <= 1.0 / am.q as f64);
        assert!(am.am.partial_graph);
    }
}
