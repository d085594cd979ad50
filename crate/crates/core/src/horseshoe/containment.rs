//! Aubry-Mather sets with rotation number just above `p/q` inside the
//! horseshoe neighbourhood, the separation test on the other branch, and
//! the Jacobi test on periodic horseshoe orbits.

use serde::{Deserialize, Serialize};

use super::boxes::shoot;
use super::chart::{to_f64, Chart, PreciseStep};
use super::certificate::HorseshoeCertificate;
use super::partition::Geometry;
use crate::twist::{assemble_am_set, minimize_periodic, no_conjugate_points_check, Branch, Role, TwistMap};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaRow {
    pub p: i64,
    pub q: usize,
    pub omega: f64,
    pub points: usize,
    pub contained: bool,
    /// Smallest neighbourhood depth over the orbit; positive when contained.
    pub margin: f64,
    /// Every point moves right under `F^q` faster than the translation by `p`,
    /// so the orbit stays out of the separating set.
    pub avoids_separating_set: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JacobiRow {
    pub word: String,
    pub length: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub k: f64,
    pub r: (i64, usize),
    pub rows: Vec<OmegaRow>,
    /// Largest tested `ω − r` whose orbit is fully contained.
    pub epsilon: f64,
    /// Points of the `−` branch outside the neighbourhood that were tested.
    pub separation_tested: usize,
    /// Smallest `x + p − π₁F^q(x)` over those points; the separating set is
    /// where this displacement exceeds half of it.
    pub separation_min: f64,
    /// All tested points lie in the separating set (`separation_min > 0`).
    pub separation_ok: bool,
    pub jacobi: Vec<JacobiRow>,
}

impl ContainmentReport {
    pub fn jacobi_ok(&self) -> bool {
        self.jacobi.iter().all(|r| r.ok)
    }

    pub fn row(&self, p: i64, q: usize) -> Option<&OmegaRow> {
        self.rows.iter().find(|r| r.p == p && r.q == q)
    }
}

/// Primitive binary words up to length `max_len`, one per rotation class.
pub fn necklaces(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for bits in 0..1u32 << len {
            let w: Vec<u8> = (0..len).map(|i| ((bits >> (len - 1 - i)) & 1) as u8).collect();
            let least = (1..len).all(|r| {
                let rot: Vec<u8> = w[r..].iter().chain(&w[..r]).copied().collect();
                rot > w
            });
            if least {
                out.push(w);
            }
        }
    }
    out
}

pub fn theorem_run<G: PreciseStep>(tm: &TwistMap<G>, charts: &[Chart], cert: &HorseshoeCertificate, omegas: &[(i64, usize)]) -> ContainmentReport {
    let geo = Geometry { tm, charts, shape: cert.shape, n: cert.n };
    let r = cert.p as f64 / cert.q as f64;
    let mut rows = Vec::new();
    for &(p, q) in omegas {
        let omega = p as f64 / q as f64;
        let row = match minimize_periodic(&tm.gf, p, q) {
            Ok(c) => {
                let pts = c.orbit(&tm.gf, 0, q as i64);
                let margin = pts.iter().map(|&z| geo.neighborhood_depth(z)).fold(f64::INFINITY, f64::min);
                let avoids_separating_set =
                    pts.iter().all(|&z| tm.iterate(z, cert.q as i64)[0] > z[0] + cert.p as f64);
                OmegaRow { p, q, omega, points: pts.len(), contained: margin > 0.0, margin, avoids_separating_set }
            }
            Err(_) => OmegaRow {
                p,
                q,
                omega,
                points: 0,
                contained: false,
                margin: f64::NEG_INFINITY,
                avoids_separating_set: false,
            },
        };
        rows.push(row);
    }
    let epsilon = rows.iter().filter(|r| r.contained).map(|row| row.omega - r).fold(0.0, f64::max);

    let mut separation_tested = 0;
    let mut separation_min = f64::INFINITY;
    if let Ok(am) = assemble_am_set(&tm.gf, cert.p, cert.q, Branch::Minus) {
        for (z, role) in am.points.iter().zip(&am.roles) {
            if *role != Role::HeteroclinicMinus || geo.neighborhood_depth(*z) > 0.0 {
                continue;
            }
            let fz = tm.iterate(*z, cert.q as i64);
            separation_min = separation_min.min(z[0] + cert.p as f64 - fz[0]);
            separation_tested += 1;
        }
    }
    let separation_ok = separation_tested == 0 || separation_min > 0.0;

    let mut jacobi = Vec::new();
    if let Some(s2) = &cert.sigma2 {
        for w in necklaces(4) {
            let word = s2.encode(&w);
            let label: String = w.iter().map(|b| char::from(b'0' + b)).collect();
            let ok = match shoot(&geo, &cert.matrix, &cert.strips, &word, true) {
                Ok(chain) => {
                    let steps = cert.q * cert.n;
                    let mut xs = Vec::new();
                    let mut offset = 0.0;
                    for _ in 0..2 {
                        for (j, z) in chain.points.iter().enumerate() {
                            let mut v = to_f64(*z);
                            for _ in 0..steps {
                                xs.push(v[0] + offset);
                                v = tm.forward(v);
                            }
                            offset += cert.strips[word[j]].shift as f64;
                        }
                    }
                    xs.push(to_f64(chain.points[0])[0] + offset);
                    no_conjugate_points_check(&tm.gf, &xs).ok
                }
                Err(_) => false,
            };
            jacobi.push(JacobiRow { word: label, length: w.len(), ok });
        }
    }
    ContainmentReport {
        k: cert.k,
        r: (cert.p, cert.q),
        rows,
        epsilon,
        separation_tested,
        separation_min,
        separation_ok,
        jacobi,
    }
}
