//! End-to-end construction of the horseshoe and its certificate.

use serde::{Deserialize, Serialize};

use super::chart::{saddle_charts, Chart, PreciseStep};
use super::manifold::{find_cycle, grow_manifold, HeteroclinicCycle, ManifoldKind, ManifoldPolyline};
use super::markov::{build_rectangles, detect_transitions, select_sigma2, template_orbits, Rectangle, Sigma2, TransitionMatrix};
use super::partition::{build_strips, tune_common_n, BoxShape, Geometry, Sampling, Strip, StripSet};
use crate::error::HorseshoeError;
use crate::twist::{standard_family, StandardFamily, TwistMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeParams {
    pub shape: BoxShape,
    /// Arclength parameter budget when growing the manifolds.
    pub budget: f64,
    pub step: f64,
    pub cap: usize,
    pub sampling: Sampling,
}

impl Default for HorseshoeParams {
    fn default() -> Self {
        HorseshoeParams { shape: BoxShape::default(), budget: 4.0, step: 0.01, cap: 12, sampling: Sampling::default() }
    }
}

/// Everything needed to re-check the horseshoe, in serializable form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorseshoeCertificate {
    pub k: f64,
    pub p: i64,
    pub q: usize,
    pub shape: BoxShape,
    pub n: usize,
    pub template: Vec<usize>,
    pub strips: Vec<Strip>,
    pub matrix: TransitionMatrix,
    /// Smallest boundary-disjointness margin over verified transitions.
    pub min_margin: f64,
    /// Same margin with doubled boundary sampling.
    pub resampled_margin: f64,
    /// Bound on the contraction of nested boxes per step.
    pub lambda_obs: f64,
    /// Largest Euclidean diameter of a rectangle.
    pub box_bound: f64,
    /// Smallest chord gap between distinct strips of one box.
    pub separation: f64,
    pub entropy: f64,
    pub irreducible: bool,
    pub sigma2: Option<Sigma2>,
    pub sigma2_entropy: f64,
    pub rejected: usize,
    pub neighborhood: String,
}

pub struct HorseshoeBuild<G> {
    pub tm: TwistMap<G>,
    pub charts: Vec<Chart>,
    pub cycle: HeteroclinicCycle,
    pub strips: StripSet,
    pub rectangles: Vec<Rectangle>,
    pub certificate: HorseshoeCertificate,
}

impl<G: PreciseStep> HorseshoeBuild<G> {
    pub fn geometry(&self) -> Geometry<'_, G> {
        Geometry { tm: &self.tm, charts: &self.charts, shape: self.certificate.shape, n: self.certificate.n }
    }

    /// Manifold branches drawn in figures.
    pub fn manifolds(&self, budget: f64, step: f64) -> Vec<ManifoldPolyline> {
        let mut out = Vec::new();
        for c in &self.charts {
            for kind in [ManifoldKind::Unstable, ManifoldKind::Stable] {
                if let Ok(m) = grow_manifold(&self.tm, c, kind, 1, budget, step) {
                    out.push(m);
                }
            }
        }
        out
    }
}

/// Horseshoe around the `(p, q)` saddles of the standard family at `K`.
pub fn build_horseshoe(k: f64, p: i64, q: usize, params: &HorseshoeParams) -> Result<HorseshoeBuild<StandardFamily>, HorseshoeError> {
    let (_, tm) = standard_family(k)?;
    let charts = saddle_charts(&tm, p, q)?;
    let cycle = find_cycle(&tm, &charts, params.budget, params.step)?;
    let template = template_orbits(&tm, &cycle, p, q)?;
    let strips = tune_common_n(&tm, &charts, &cycle, params.shape, &template, params.sampling, params.cap)?;
    let geo = Geometry { tm: &tm, charts: &charts, shape: params.shape, n: strips.n };
    let rectangles = build_rectangles(&geo, &strips)?;
    let matrix = detect_transitions(&geo, &strips, &template)?;
    let fine = build_strips(&geo, &cycle, &template, params.sampling.doubled());
    let resampled = detect_transitions(&geo, &fine, &template).map(|m| m.min_margin()).unwrap_or(f64::NEG_INFINITY);
    let lambda_obs = contraction_bound(&strips.strips, params.shape);
    let box_bound = rectangles
        .iter()
        .map(|r| {
            let o = r.outline();
            o.iter().flat_map(|a| o.iter().map(move |b| (a[0] - b[0]).hypot(a[1] - b[1]))).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let sigma2 = select_sigma2(&matrix.entries).ok();
    let sigma2_entropy = sigma2.as_ref().map_or(0.0, Sigma2::entropy);
    let certificate = HorseshoeCertificate {
        k,
        p,
        q,
        shape: params.shape,
        n: strips.n,
        template,
        strips: strips.strips.clone(),
        min_margin: matrix.min_margin(),
        resampled_margin: resampled,
        lambda_obs,
        box_bound,
        separation: strips.separation,
        entropy: matrix.entropy(),
        irreducible: matrix.irreducible,
        sigma2,
        sigma2_entropy,
        rejected: strips.rejected.len(),
        neighborhood: format!("union of F^j(Q_k) for 0 <= j < {}", q * strips.n),
        matrix,
    };
    Ok(HorseshoeBuild { tm, charts, cycle, strips, rectangles, certificate })
}

/// Per-step shrink factor of nested boxes: the worst of the strip width
/// against the box width and the image height against the box height,
/// inflated by the spread of chord widths inside a strip.
fn contraction_bound(strips: &[Strip], shape: BoxShape) -> f64 {
    let mut worst: f64 = 0.0;
    for st in strips {
        let widths: Vec<f64> = st.chords.iter().map(|c| c[1] - c[0]).collect();
        let wmax = widths.iter().cloned().fold(0.0, f64::max);
        let wmin = widths.iter().cloned().fold(f64::INFINITY, f64::min);
        let distortion = wmax / wmin;
        let cu = wmax / (shape.delta_u + shape.eta);
        let cs = (st.image_s[1] - st.image_s[0]) / (shape.delta_s + shape.eta);
        worst = worst.max(cu.max(cs) * distortion);
    }
    worst
}
