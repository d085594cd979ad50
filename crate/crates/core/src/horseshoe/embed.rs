//! Sturmian systems carried into the horseshoe through a full 2-shift.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::boxes::{point_from_itinerary, NestedBox};
use super::chart::PreciseStep;
use super::markov::{Sigma2, TransitionMatrix};
use super::partition::{Geometry, Strip};
use crate::angle::Angle;
use crate::error::HorseshoeError;
use crate::symbolic::Word;
use crate::wds::{asymptotic_pairs, build_wds};

/// The pieces every embedding routine needs.
pub struct Coder<'a, G> {
    pub geo: Geometry<'a, G>,
    pub matrix: &'a TransitionMatrix,
    pub strips: &'a [Strip],
    pub sigma2: &'a Sigma2,
}

impl<G: PreciseStep> Coder<'_, G> {
    /// Box of a binary word whose letter `center` is the time-zero symbol.
    pub fn binary_box(&self, word: &[u8], center: usize) -> Result<NestedBox, HorseshoeError> {
        let w = self.sigma2.encode(word);
        point_from_itinerary(&self.geo, self.matrix, self.strips, &w, center * self.sigma2.power)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddedBox {
    pub symbols: Word,
    pub cell: NestedBox,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Embedding {
    pub depth: usize,
    pub boxes: Vec<EmbeddedBox>,
    /// Smallest separating-axis gap over all pairs.
    pub min_separation: f64,
    /// Largest `dist(g^{N′}(center of w), center of σw) / diameter(σw)`.
    pub equivariance: f64,
}

impl Embedding {
    pub fn disjoint(&self) -> bool {
        self.min_separation > 0.0
    }

    pub fn equivariant(&self) -> bool {
        self.equivariance <= 1.0
    }
}

/// Boxes of all central words of the Sturmian system of `alpha` at `depth`.
pub fn embed_wds<G: PreciseStep>(coder: &Coder<G>, alpha: &Angle, depth: usize) -> Result<Embedding, HorseshoeError> {
    let wds = build_wds(alpha, depth)?;
    let mut boxes = Vec::new();
    for w in wds.central_words() {
        boxes.push(EmbeddedBox { symbols: w.clone(), cell: coder.binary_box(w, depth)? });
    }
    let mut min_separation = f64::INFINITY;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            min_separation = min_separation.min(boxes[i].cell.separation(&boxes[j].cell));
        }
    }
    let mut equivariance: f64 = 0.0;
    if depth >= 1 {
        let mut shifted: HashMap<Word, NestedBox> = HashMap::new();
        for b in &boxes {
            let tail = b.symbols[2..].to_vec();
            if !shifted.contains_key(&tail) {
                let cell = coder.binary_box(&tail, depth - 1)?;
                shifted.insert(tail.clone(), cell);
            }
            let target = &shifted[&tail];
            let image = b.cell.chain.points[b.cell.center_index + coder.sigma2.power];
            equivariance = equivariance.max(target.distance_to(image) / target.diameter);
        }
    }
    Ok(Embedding { depth, boxes, min_separation, equivariance })
}

/// Distances between the orbits of the two boxes of a gap pair of `alpha`
/// (words agreeing from time 1 on), over `iterates` returns of `g^{N′}`.
pub fn gap_pair_decay<G: PreciseStep>(coder: &Coder<G>, alpha: &Angle, depth: usize, iterates: usize) -> Result<Vec<f64>, HorseshoeError> {
    let wide = depth + iterates;
    let wds = build_wds(alpha, wide)?;
    let pair = asymptotic_pairs(&wds)
        .into_iter()
        .find(|p| p.forward_from == 1)
        .ok_or(HorseshoeError::NotAdmissible { position: 0 })?;
    let from = wide - depth;
    let a = coder.binary_box(&pair.first[from..], depth)?;
    let b = coder.binary_box(&pair.second[from..], depth)?;
    let step = coder.sigma2.power;
    Ok((0..=iterates)
        .map(|i| {
            let (x, y) = (a.chain.points[a.center_index + i * step], b.chain.points[b.center_index + i * step]);
            (x[0] - y[0]).to_f64().hypot((x[1] - y[1]).to_f64())
        })
        .collect())
}
