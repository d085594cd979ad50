//! Rectangles of the partition, the verified transition matrix and the
//! full 2-shift inside it.

use serde::{Deserialize, Serialize};

use super::chart::{Chart, PreciseStep};
use super::manifold::HeteroclinicCycle;
use super::partition::{Geometry, StripSet};
use crate::error::HorseshoeError;
use crate::twist::{assemble_am_set, Branch, Role, TwistMap};

/// Curved rectangle given by its boundary curves on the cover.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rectangle {
    pub label: (usize, usize),
    /// Left and right sides, along the stable direction.
    pub stable_sides: [Vec<[f64; 2]>; 2],
    /// Bottom and top sides, along the unstable direction.
    pub unstable_sides: [Vec<[f64; 2]>; 2],
    pub corners: [[f64; 2]; 4],
    /// Worst cone slack of the sides (positive inside the cones).
    pub cone_margin: f64,
}

impl Rectangle {
    /// Closed boundary, counter-clockwise in chart coordinates.
    pub fn outline(&self) -> Vec<[f64; 2]> {
        let mut out = self.unstable_sides[0].clone();
        out.extend(self.stable_sides[1].iter().skip(1));
        out.extend(self.unstable_sides[1].iter().rev().skip(1));
        out.extend(self.stable_sides[0].iter().rev().skip(1));
        out
    }
}

/// Boundary polylines of every strip.
pub fn build_rectangles<G: PreciseStep>(geo: &Geometry<G>, set: &StripSet) -> Result<Vec<Rectangle>, HorseshoeError> {
    let shape = geo.shape;
    set.strips
        .iter()
        .map(|st| {
            let k = st.label.0;
            let side = |e: usize| -> Vec<[f64; 2]> {
                st.lines.iter().zip(&st.chords).map(|(&s, c)| geo.phi(k, [c[e], s])).collect()
            };
            let m = 9;
            let horizontal = |i: usize| -> Vec<[f64; 2]> {
                let c = st.chords[i];
                (0..m).map(|j| geo.phi(k, [c[0] + (c[1] - c[0]) * j as f64 / (m - 1) as f64, st.lines[i]])).collect()
            };
            let last = st.lines.len() - 1;
            let cone_margin = 1.0 - st.slope;
            if cone_margin <= 0.0 {
                return Err(HorseshoeError::RectangleDegenerate {
                    label: format!("{:?}", st.label),
                    reason: format!("side slope {:.3} leaves its cone", st.slope),
                });
            }
            if st.lines[0] > -shape.eta + 1e-12 || st.lines[last] < shape.delta_s - 1e-12 {
                return Err(HorseshoeError::RectangleDegenerate {
                    label: format!("{:?}", st.label),
                    reason: "strip does not span the box".into(),
                });
            }
            let (left, right) = (side(0), side(1));
            let corners = [left[0], right[0], right[last], left[last]];
            Ok(Rectangle {
                label: st.label,
                stable_sides: [left, right],
                unstable_sides: [horizontal(0), horizontal(last)],
                corners,
                cone_margin,
            })
        })
        .collect()
}

/// Evidence for a transition `j → l`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub from: usize,
    pub to: usize,
    /// Residual of the image chords against the stable sides of the target box.
    pub crossing_residual: f64,
    /// Gap between the image of the unstable sides and the unstable sides of the target.
    pub unstable_margin: f64,
    /// Gap between the stable sides of the target rectangle and those of its box.
    pub stable_margin: f64,
}

impl Witness {
    pub fn margin(&self) -> f64 {
        self.unstable_margin.min(self.stable_margin)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub labels: Vec<(usize, usize)>,
    pub n: usize,
    pub entries: Vec<Vec<u8>>,
    pub witnesses: Vec<Witness>,
    /// For each zero entry, distance between the image box and the target box.
    pub absent: Vec<(usize, usize, f64)>,
    pub irreducible: bool,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn allows(&self, j: usize, l: usize) -> bool {
        self.entries[j][l] == 1
    }

    pub fn min_margin(&self) -> f64 {
        self.witnesses.iter().map(Witness::margin).fold(f64::INFINITY, f64::min)
    }

    /// Perron root by power iteration on `A + I`.
    pub fn perron_root(&self) -> f64 {
        perron_root(&self.entries)
    }

    pub fn entropy(&self) -> f64 {
        self.perron_root().ln()
    }
}

pub fn perron_root(a: &[Vec<u8>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0; n];
    let mut rho = 0.0;
    for _ in 0..2000 {
        let w: Vec<f64> = (0..n).map(|i| v[i] + (0..n).map(|j| a[i][j] as f64 * v[j]).sum::<f64>()).collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / v.iter().cloned().fold(0.0, f64::max);
        v = w.iter().map(|x| x / norm).collect();
        if (next - rho).abs() < 1e-15 * next {
            rho = next;
            break;
        }
        rho = next;
    }
    rho - 1.0
}

pub fn is_irreducible(a: &[Vec<u8>]) -> bool {
    let n = a.len();
    (0..n).all(|start| {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if a[i][j] == 1 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    })
}

/// `A[j][l] = 1` when `g` maps strip `j` across the box holding strip `l`:
/// the image is then a full-width horizontal strip, which cuts `l` in an
/// unstable subrectangle.
pub fn detect_transitions<G: PreciseStep>(
    geo: &Geometry<G>,
    set: &StripSet,
    template: &[usize],
) -> Result<TransitionMatrix, HorseshoeError> {
    let strips = &set.strips;
    let n = strips.len();
    let mut entries = vec![vec![0u8; n]; n];
    let mut witnesses = Vec::new();
    let mut absent = Vec::new();
    let radius: Vec<f64> = geo.charts.iter().map(|c| box_radius(geo, c)).collect();
    for (j, a) in strips.iter().enumerate() {
        for (l, b) in strips.iter().enumerate() {
            if a.target == b.label.0 && a.margin_s > 0.0 && b.margin_u > 0.0 {
                entries[j][l] = 1;
                witnesses.push(Witness {
                    from: j,
                    to: l,
                    crossing_residual: a.endpoint_residual,
                    unstable_margin: a.margin_s,
                    stable_margin: b.margin_u,
                });
            } else {
                let (x, y) = (geo.charts[a.target].saddle_f64(), geo.charts[b.label.0].saddle_f64());
                let dx = (x[0] - y[0]) - (x[0] - y[0]).round();
                absent.push((j, l, dx.hypot(x[1] - y[1]) - radius[a.target] - radius[b.label.0]));
            }
        }
    }
    let q = geo.charts.len();
    let find = |k: usize, orbit: Option<usize>| strips.iter().position(|s| s.label.0 == k && s.orbit == orbit);
    for k in 0..q {
        let k1 = (k + 1) % q;
        let pairs = [
            (find(k, None), find(k, None)),
            (find(k, None), find(k, Some(template[k]))),
            (find(k, Some(template[k])), find(k1, None)),
            (find(k, Some(template[k])), find(k1, Some(template[k1]))),
        ];
        for (from, to) in pairs {
            match (from, to) {
                (Some(j), Some(l)) if entries[j][l] == 1 => {}
                _ => return Err(HorseshoeError::TemplateMissing { from: from.unwrap_or(usize::MAX), to: to.unwrap_or(usize::MAX) }),
            }
        }
    }
    let irreducible = is_irreducible(&entries);
    Ok(TransitionMatrix { labels: strips.iter().map(|s| s.label).collect(), n: set.n, entries, witnesses, absent, irreducible })
}

fn box_radius<G: PreciseStep>(geo: &Geometry<G>, chart: &Chart) -> f64 {
    let [u0, u1] = geo.shape.u_range();
    let [s0, s1] = geo.shape.s_range();
    let x0 = chart.saddle_f64();
    [[u0, s0], [u1, s0], [u1, s1], [u0, s1]]
        .iter()
        .map(|&c| {
            let z = geo.phi(chart.index, c);
            (z[0] - x0[0]).hypot(z[1] - x0[1])
        })
        .fold(0.0, f64::max)
}

/// For each chart, the orbit of the cycle that carries the minimizing
/// heteroclinic connection of the `+` branch.
pub fn template_orbits<G: PreciseStep>(tm: &TwistMap<G>, cycle: &HeteroclinicCycle, p: i64, q: usize) -> Result<Vec<usize>, HorseshoeError> {
    let am = assemble_am_set(&tm.gf, p, q, Branch::Plus)?;
    let het: Vec<[f64; 2]> = am.points.iter().zip(&am.roles).filter(|(_, r)| **r == Role::HeteroclinicPlus).map(|(p, _)| *p).collect();
    let dist = |z: [f64; 2]| {
        het.iter()
            .map(|h| {
                let dx = (z[0] - h[0]) - (z[0] - h[0]).round();
                dx.hypot(z[1] - h[1])
            })
            .fold(f64::INFINITY, f64::min)
    };
    cycle
        .points
        .iter()
        .map(|pts| {
            let mut best: Option<(f64, usize)> = None;
            for y in pts {
                let mut d = dist(y.point);
                let (mut f, mut b) = (y.point, y.point);
                for _ in 0..4 * q {
                    f = tm.forward(f);
                    b = tm.backward(b);
                    d = d.min(dist(f)).min(dist(b));
                }
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, y.orbit));
                }
            }
            best.map(|b| b.1).ok_or(HorseshoeError::NoTransverseIntersection)
        })
        .collect()
}

/// Two loops through a common vertex whose free concatenations are admissible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sigma2 {
    pub loops: [Vec<usize>; 2],
    /// Common loop length `N′`.
    pub power: usize,
}

impl Sigma2 {
    /// Matrix word of a binary word.
    pub fn encode(&self, word: &[u8]) -> Vec<usize> {
        word.iter().flat_map(|&b| self.loops[b as usize].iter().copied()).collect()
    }

    pub fn entropy(&self) -> f64 {
        perron_root(&[vec![1, 1], vec![1, 1]]).ln() / self.power as f64
    }
}

pub fn select_sigma2(a: &[Vec<u8>]) -> Result<Sigma2, HorseshoeError> {
    let n = a.len();
    for v in 0..n {
        for w in v + 1..n {
            if a[v][v] == 1 && a[v][w] == 1 && a[w][v] == 1 && a[w][w] == 1 {
                return Ok(Sigma2 { loops: [vec![v], vec![w]], power: 1 });
            }
        }
    }
    for len in 1..=2 * n {
        for v in 0..n {
            let mut found: Vec<Vec<usize>> = Vec::new();
            closed_walks(a, v, len, &mut vec![v], &mut found);
            if found.len() >= 2 {
                return Ok(Sigma2 { loops: [found[0].clone(), found[1].clone()], power: len });
            }
        }
    }
    Err(HorseshoeError::NoDisjointLoops)
}

fn closed_walks(a: &[Vec<u8>], v: usize, len: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if out.len() >= 2 {
        return;
    }
    let last = *path.last().unwrap();
    if path.len() == len {
        if a[last][v] == 1 {
            out.push(path.clone());
        }
        return;
    }
    for j in 0..a.len() {
        if a[last][j] == 1 {
            path.push(j);
            closed_walks(a, v, len, path, out);
            path.pop();
        }
    }
}

/// Matrix word is admissible and each letter names a strip.
pub fn check_admissible(m: &TransitionMatrix, word: &[usize]) -> Result<(), HorseshoeError> {
    if let Some(i) = word.iter().position(|&w| w >= m.size()) {
        return Err(HorseshoeError::NotAdmissible { position: i as i64 });
    }
    for (i, &w) in word.iter().enumerate() {
        if i + 1 < word.len() && !m.allows(w, word[i + 1]) {
            return Err(HorseshoeError::NotAdmissible { position: i as i64 });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma2_on_small_graphs() {
        let full = vec![vec![1, 1], vec![1, 1]];
        assert_eq!(select_sigma2(&full).unwrap(), Sigma2 { loops: [vec![0], vec![1]], power: 1 });
        let cycle = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]];
        assert!(matches!(select_sigma2(&cycle), Err(HorseshoeError::NoDisjointLoops)));
        let golden = vec![vec![1, 1], vec![1, 0]];
        let s = select_sigma2(&golden).unwrap();
        assert_eq!(s.power, 2);
        assert_ne!(s.loops[0], s.loops[1]);
        assert!((perron_root(&golden) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(is_irreducible(&golden) && !is_irreducible(&[vec![1, 1], vec![0, 1]]));
    }
}
