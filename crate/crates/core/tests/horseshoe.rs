use std::sync::OnceLock;

use wds_core::angle::Angle;
use wds_core::horseshoe::boxes::{measured_itinerary, point_from_itinerary};
use wds_core::horseshoe::containment::theorem_run;
use wds_core::horseshoe::embed::{embed_wds, gap_pair_decay, Coder};
use wds_core::horseshoe::manifold::{find_cycle, grow_manifold, ManifoldKind};
use wds_core::horseshoe::partition::{tune_common_n, BoxShape, Sampling};
use wds_core::horseshoe::*;
use wds_core::error::HorseshoeError;
use wds_core::twist::{standard_family, StandardFamily};

fn build() -> &'static HorseshoeBuild<StandardFamily> {
    static B: OnceLock<HorseshoeBuild<StandardFamily>> = OnceLock::new();
    B.get_or_init(|| build_horseshoe(1.0, 0, 1, &HorseshoeParams::default()).unwrap())
}

fn coder(b: &HorseshoeBuild<StandardFamily>) -> Coder<'_, StandardFamily> {
    let c = &b.certificate;
    Coder { geo: b.geometry(), matrix: &c.matrix, strips: &c.strips, sigma2: c.sigma2.as_ref().unwrap() }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

#[test]
fn unstable_branch_is_invariant() {
    let (_, tm) = standard_family(1.0).unwrap();
    let charts = saddle_charts(&tm, 0, 1).unwrap();
    let wu = grow_manifold(&tm, &charts[0], ManifoldKind::Unstable, 1, 3.0, 0.001).unwrap();
    // Images of the part of the branch that stays inside the polyline.
    for (i, p) in wu.points.iter().enumerate().filter(|(i, _)| i % 37 == 0) {
        if wu.arclength[i] * charts[0].lambda > 2.5 {
            break;
        }
        let f = tm.forward(*p);
        let d = wu.points.windows(2).map(|w| segment_distance(f, w[0], w[1])).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-6, "image of point {i} is {d:e} away");
    }
}

#[test]
fn homoclinic_orbits_are_stable_under_longer_branches() {
    let (_, tm) = standard_family(1.0).unwrap();
    let charts = saddle_charts(&tm, 0, 1).unwrap();
    let short = find_cycle(&tm, &charts, 4.0, 0.01).unwrap();
    let long = find_cycle(&tm, &charts, 8.0, 0.01).unwrap();
    assert_eq!(short.counts, long.counts);
    assert!(short.counts[0] >= 1);
    assert!(short.points[0].iter().all(|p| p.angle > 1e-2));
}

#[test]
fn full_two_shift_at_k_one() {
    let b = build();
    let c = &b.certificate;
    assert_eq!(c.matrix.entries, vec![vec![1, 1], vec![1, 1]]);
    assert!(c.irreducible);
    assert!(c.min_margin > 0.0 && c.resampled_margin > 0.0);
    assert!(c.matrix.witnesses.iter().all(|w| w.margin() > 0.0));
    assert!((c.entropy - 2f64.ln()).abs() < 1e-9);
    assert!(c.lambda_obs > 0.0 && c.lambda_obs < 1.0);
    assert!(c.separation > 0.0);
    assert_eq!(c.sigma2.as_ref().unwrap().power, 1);
    // The saddle strip holds the saddle.
    assert!(c.strips[0].orbit.is_none() && c.strips[0].contains([0.0, 0.0], 0.0));
    assert_eq!(b.rectangles.len(), 2);
    assert!(b.rectangles.iter().all(|r| r.cone_margin > 0.0));
}

#[test]
fn wider_boxes_never_need_more_returns() {
    let (_, tm) = standard_family(1.0).unwrap();
    let charts = saddle_charts(&tm, 0, 1).unwrap();
    let cycle = find_cycle(&tm, &charts, 4.0, 0.01).unwrap();
    let template = &build().certificate.template;
    let mut last = usize::MAX;
    for du in [0.03, 0.04, 0.05, 0.06] {
        let shape = BoxShape { delta_u: du, ..BoxShape::default() };
        let set = tune_common_n(&tm, &charts, &cycle, shape, template, Sampling::default(), 12).unwrap();
        assert!(set.n <= last, "delta_u {du}: N {} after {last}", set.n);
        last = set.n;
    }
}

#[test]
fn nested_boxes_shrink_and_separate() {
    let b = build();
    let c = &b.certificate;
    let geo = b.geometry();
    let saddle = b.charts[0].saddle;
    let mut prev = None;
    for n in 1..=10 {
        let bx = point_from_itinerary(&geo, &c.matrix, &c.strips, &vec![0; 2 * n + 1], n).unwrap();
        assert!(bx.distance_to(saddle) <= bx.diameter);
        if let Some(p) = prev {
            assert!(bx.diameter / p <= c.lambda_obs);
        }
        prev = Some(bx.diameter);
    }
    let words: Vec<Vec<usize>> = (0..16u32).map(|bits| (0..7).map(|i| ((bits >> (i % 4)) & 1) as usize).collect()).collect();
    let boxes: Vec<_> = words.iter().map(|w| point_from_itinerary(&geo, &c.matrix, &c.strips, w, 3).unwrap()).collect();
    for i in 0..boxes.len() {
        let it = measured_itinerary(&geo, &c.strips, &boxes[i].chain.points);
        assert!(it.iter().zip(&words[i]).all(|(m, w)| *m == Some(*w)));
        for j in i + 1..boxes.len() {
            if words[i] != words[j] {
                assert!(boxes[i].separation(&boxes[j]) > 0.0);
            }
        }
    }
    let bad = point_from_itinerary(&geo, &c.matrix, &c.strips, &[0, 5, 0], 1);
    assert!(matches!(bad, Err(HorseshoeError::NotAdmissible { .. })));
}

#[test]
fn golden_sturmian_system_embeds() {
    let b = build();
    let e = embed_wds(&coder(b), &Angle::golden(), 6).unwrap();
    assert_eq!(e.boxes.len(), 14);
    assert!(e.disjoint() && e.equivariant());
    let d = gap_pair_decay(&coder(b), &Angle::golden(), 6, 10).unwrap();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn nearby_aubry_mather_sets_are_contained() {
    let b = build();
    let r = theorem_run(&b.tm, &b.charts, &b.certificate, &[(0, 1), (1, 13)]);
    assert!(r.row(0, 1).unwrap().contained);
    let row = r.row(1, 13).unwrap();
    assert!(row.contained && row.margin > 0.0 && row.avoids_separating_set);
    assert!(r.separation_ok && r.separation_tested > 0);
    assert!(r.jacobi_ok() && !r.jacobi.is_empty());
    assert!(r.epsilon >= 1.0 / 13.0);
}

#[test]
fn certificate_round_trips_through_json() {
    let c = &build().certificate;
    let text = serde_json::to_string(c).unwrap();
    let back: HorseshoeCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back.matrix.entries, c.matrix.entries);
    assert_eq!(back.strips.len(), c.strips.len());
}
