mod common;

use std::sync::OnceLock;

use common::small_irrational;
use proptest::prelude::*;
use wds_core::horseshoe::boxes::{measured_itinerary, shoot};
use wds_core::horseshoe::embed::{embed_wds, Coder};
use wds_core::horseshoe::markov::check_admissible;
use wds_core::horseshoe::partition::build_strips;
use wds_core::horseshoe::{build_horseshoe, HorseshoeBuild, HorseshoeParams};
use wds_core::twist::StandardFamily;

fn build() -> &'static HorseshoeBuild<StandardFamily> {
    static B: OnceLock<HorseshoeBuild<StandardFamily>> = OnceLock::new();
    B.get_or_init(|| build_horseshoe(1.0, 0, 1, &HorseshoeParams::default()).unwrap())
}

fn coder(b: &HorseshoeBuild<StandardFamily>) -> Coder<'_, StandardFamily> {
    let c = &b.certificate;
    Coder { geo: b.geometry(), matrix: &c.matrix, strips: &c.strips, sigma2: c.sigma2.as_ref().unwrap() }
}

#[test]
fn transitions_survive_denser_sampling() {
    let b = build();
    let c = &b.certificate;
    let params = HorseshoeParams::default();
    let fine = build_strips(&b.geometry(), &b.cycle, &c.template, params.sampling.doubled());
    let m = wds_core::horseshoe::markov::detect_transitions(&b.geometry(), &fine, &c.template).unwrap();
    assert_eq!(m.entries, c.matrix.entries);
    assert!(c.resampled_margin > 0.0 && m.min_margin() > 0.0);
}

#[test]
fn entropy_is_positive_for_mixing_matrices() {
    let c = &build().certificate;
    let m = &c.matrix;
    let permutation = m.entries.iter().all(|r| r.iter().map(|&e| e as usize).sum::<usize>() == 1);
    if m.irreducible && !permutation {
        assert!(c.entropy > 0.0);
    }
    assert!(c.sigma2_entropy >= std::f64::consts::LN_2 - 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every admissible word of radius at most 6 has a nonempty box, and the
    /// points found inside read back their own itinerary.
    #[test]
    fn admissible_words_have_nonempty_boxes(word in prop::collection::vec(0u8..=1, 1..=13)) {
        let b = build();
        let cd = coder(b);
        let center = word.len() / 2;
        let bx = cd.binary_box(&word, center).unwrap();
        prop_assert!(bx.diameter > 0.0 && bx.diameter.is_finite());
        let encoded = cd.sigma2.encode(&word);
        let read = measured_itinerary(&cd.geo, cd.strips, &bx.chain.points);
        prop_assert!(read.iter().zip(&encoded).all(|(m, w)| *m == Some(*w)));
    }

    /// Periodic points of the horseshoe have admissible measured itineraries.
    #[test]
    fn invariant_set_points_read_admissibly(word in prop::collection::vec(0u8..=1, 1..=6)) {
        let b = build();
        let cd = coder(b);
        let encoded = cd.sigma2.encode(&word);
        let chain = shoot(&cd.geo, cd.matrix, cd.strips, &encoded, true).unwrap();
        let read: Option<Vec<usize>> = measured_itinerary(&cd.geo, cd.strips, &chain.points).into_iter().collect();
        let read = read.expect("every point lies in a strip");
        prop_assert!(check_admissible(cd.matrix, &read).is_ok());
    }

    #[test]
    fn boxes_contract_with_depth(word in prop::collection::vec(0u8..=1, 21)) {
        let b = build();
        let cd = coder(b);
        let lambda = b.certificate.lambda_obs;
        prop_assert!(lambda < 1.0);
        let mut prev: Option<f64> = None;
        for n in 1..=10 {
            let bx = cd.binary_box(&word[10 - n..=10 + n], n).unwrap();
            if let Some(p) = prev {
                prop_assert!(bx.diameter / p <= lambda, "depth {}: {} / {}", n, bx.diameter, p);
            }
            prev = Some(bx.diameter);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn embeddings_are_shift_equivariant(alpha in small_irrational(), depth in 2usize..=6) {
        let e = embed_wds(&coder(build()), &alpha, depth).unwrap();
        prop_assert_eq!(e.boxes.len(), 2 * depth + 2);
        prop_assert!(e.disjoint());
        prop_assert!(e.equivariant(), "equivariance {}", e.equivariance);
    }
}
