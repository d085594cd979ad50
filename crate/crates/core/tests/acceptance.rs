//! The eleven acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p wds-core --test acceptance -- --nocapture` to see the lines.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wds_core::angle::{Angle, QuadSurd, Rational};
use wds_core::circle::{DenjoyMap, DEFAULT_CUTOFF};
use wds_core::horseshoe::containment::theorem_run;
use wds_core::horseshoe::embed::{embed_wds, gap_pair_decay, Coder};
use wds_core::horseshoe::{build_horseshoe, HorseshoeBuild, HorseshoeParams};
use wds_core::symbolic::{complexity, estimate_rotation_interval, shift_distance, sturmian_window, CentralWindow};
use wds_core::twist::{
    config_gradient, hyperbolicity_report, minimize_periodic, periodic_points, standard_family, StandardFamily,
};
use wds_core::wds::{build_wds, continuity_probe, equivalence_test, gap_orbit_count, rotation_class, Equivalence};

type Verdict = (bool, String);

fn golden() -> Angle {
    Angle::golden()
}

/// `[0; prefix…, t]` with the tail `t = (1 + √5)/2`, as an exact surd.
fn with_golden_tail(prefix: &[i64]) -> Angle {
    let (mut p, mut pp, mut q, mut qp) = (0i64, 1i64, 1i64, 0i64);
    for &a in prefix {
        (p, pp) = (a * p + pp, p);
        (q, qp) = (a * q + qp, q);
    }
    // value = (p t + pp) / (q t + qp) with t = (1 + √5)/2
    let (a, b) = (p + 2 * pp, q + 2 * qp);
    let (mut num0, mut num1, mut den) = (a * b - 5 * p * q, p * b - a * q, b * b - 5 * q * q);
    if den < 0 {
        (num0, num1, den) = (-num0, -num1, -den);
    }
    Angle::surd(QuadSurd::new(num0, num1, 5, den))
}

fn build() -> &'static (HorseshoeBuild<StandardFamily>, Duration) {
    static B: OnceLock<(HorseshoeBuild<StandardFamily>, Duration)> = OnceLock::new();
    B.get_or_init(|| {
        let t = Instant::now();
        let b = build_horseshoe(1.0, 0, 1, &HorseshoeParams::default()).expect("horseshoe at K = 1");
        (b, t.elapsed())
    })
}

fn coder(b: &HorseshoeBuild<StandardFamily>) -> Coder<'_, StandardFamily> {
    let c = &b.certificate;
    Coder { geo: b.geometry(), matrix: &c.matrix, strips: &c.strips, sigma2: c.sigma2.as_ref().expect("full 2-shift") }
}

fn c1_complexity() -> Verdict {
    let t = Instant::now();
    let w = sturmian_window(&golden(), &Angle::zero(), 2000).unwrap();
    let bad = (1..=50).filter(|&n| complexity(&w, n).unwrap() != n + 1).count();
    let secs = t.elapsed().as_secs_f64();
    (bad == 0 && secs < 5.0, format!("{bad} mismatches for n <= 50, {secs:.3} s"))
}

fn c2_metric_duality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = 20usize;
    let mut violations = 0;
    for _ in 0..10_000 {
        let u: Vec<u8> = (0..2 * r + 1).map(|_| rng.gen_range(0..=1)).collect();
        let keep = rng.gen_range(0..=r + 1) as i64;
        let v = CentralWindow::from_fn(r, |k| {
            let i = (k + r as i64) as usize;
            if k.abs() < keep {
                u[i]
            } else {
                rng.gen_range(0..=1)
            }
        });
        let u = CentralWindow::new(r, u).unwrap();
        let d = shift_distance(&u, &v);
        for n in 0..=r as i64 {
            let agree = (-n..=n).all(|k| u.get(k) == v.get(k));
            if (d.value <= Rational::new(1, n + 2)) != agree {
                violations += 1;
            }
        }
    }
    (violations == 0, format!("{violations} violations over 10000 pairs, n <= 20"))
}

fn c3_rotation_intervals() -> Verdict {
    let t = Instant::now();
    let ds = [2i64, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 17, 18, 19, 20, 21, 22, 23, 24];
    let mut worst: f64 = 0.0;
    let mut missed = 0;
    for d in ds {
        let a = Angle::surd(QuadSurd::new(0, 1, d, 1)).frac();
        let w = sturmian_window(&a, &Angle::zero(), 1000).unwrap();
        let iv = estimate_rotation_interval(&w).unwrap();
        worst = worst.max(iv.width());
        missed += !iv.contains(&a) as usize;
    }
    let secs = t.elapsed().as_secs_f64();
    (worst <= 2e-3 && missed == 0 && secs < 10.0, format!("20 generators, max width {worst:.3e}, {missed} misses, {secs:.3} s"))
}

fn c4_denjoy() -> Verdict {
    let a = golden();
    let h = DenjoyMap::build(a.clone(), DEFAULT_CUTOFF).unwrap();
    let err = (h.rotation_estimate(0.0, 100_000) - a.value()).abs();
    let it = h.itinerary(h.b_point(), 1000).unwrap();
    let same = it == sturmian_window(&a, &Angle::zero(), 1000).unwrap();
    (err <= 2e-5 && same, format!("rotation error {err:.3e}, itinerary of b matches for |k| <= 1000: {same}"))
}

fn c5_continuity() -> Verdict {
    // Golden with one partial quotient changed at depths 6, 8 and 10.
    let perturbed: Vec<Angle> =
        [6usize, 8, 10].iter().map(|&k| with_golden_tail(&[&[2][..], &vec![1; k - 1], &[2]].concat())).collect();
    let rep = continuity_probe(&golden(), 1000, 6, &perturbed).unwrap();
    let bound = 1.0 / 8.0;
    let close = rep.entries.iter().all(|e| e.graph_distance.is_some_and(|d| d <= bound));
    let overlap = rep.entries.iter().all(|e| e.classes_overlap);
    let dists: Vec<String> = rep
        .entries
        .iter()
        .map(|e| format!("R={} d={:.4}", e.agreement_radius, e.graph_distance.unwrap_or(f64::NAN)))
        .collect();
    (close && overlap && rep.monotone, format!("{}; overlap {overlap}, monotone {}", dists.join(", "), rep.monotone))
}

fn c6_equivalence() -> Verdict {
    let alphas = [golden(), Angle::surd(QuadSurd::new(-1, 1, 2, 1)), Angle::surd(QuadSurd::new(-3, 1, 11, 1)),
        Angle::surd(QuadSurd::new(-4, 1, 17, 1)), Angle::surd(QuadSurd::new(-1, 1, 3, 2))];
    let mut ok = 0;
    let mut gaps = Vec::new();
    for a in &alphas {
        let w = build_wds(a, 6).unwrap();
        let r = w.reversed();
        if equivalence_test(&w, &r).unwrap() == Equivalence::ReversedOrder && rotation_class(&w).unwrap() == rotation_class(&r).unwrap() {
            ok += 1;
        }
        gaps.push(gap_orbit_count(&build_wds(a, 30).unwrap()));
    }
    let one_gap = gaps.iter().all(|&g| g == 1);
    (ok == alphas.len() && one_gap, format!("{ok}/5 reversed-equivalent with equal classes, gap orbits at depth 30 {gaps:?}"))
}

fn c7_twist() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut det_err: f64 = 0.0;
    for _ in 0..1000 {
        let (_, tm) = standard_family(rng.gen_range(0.0..4.0)).unwrap();
        let p = [rng.gen_range(0.0..1.0), rng.gen_range(-2.0..2.0)];
        det_err = det_err.max((tm.jacobian(p).determinant() - 1.0).abs());
    }
    let mut trace_err: f64 = 0.0;
    let mut lm_err: f64 = 0.0;
    let mut min_err: f64 = 0.0;
    let mut grad: f64 = 0.0;
    for k in [0.5, 1.0, 2.0] {
        let (gf, tm) = standard_family(k).unwrap();
        let c = minimize_periodic(&gf, 0, 1).unwrap();
        min_err = min_err.max((c.x[0].rem_euclid(1.0) - 0.5).abs());
        grad = grad.max(config_gradient(&gf, &c).iter().fold(0.0, |m, g| m.max(g.abs())));
        let r = hyperbolicity_report(&tm, &periodic_points(&gf, &c), 1e-3).unwrap();
        trace_err = trace_err.max((r.trace - (2.0 + k)).abs());
        lm_err = lm_err.max((r.lambda * r.mu - 1.0).abs());
    }
    (
        det_err <= 1e-10 && trace_err <= 1e-10 && min_err <= 1e-10 && grad <= 1e-10 && lm_err <= 1e-8,
        format!("|det-1| {det_err:.1e}, trace err {trace_err:.1e}, |x-1/2| {min_err:.1e}, grad {grad:.1e}, |lm-1| {lm_err:.1e}"),
    )
}

fn c8_horseshoe() -> Verdict {
    let (b, took) = build();
    let c = &b.certificate;
    let full = c.matrix.size() == 2 && c.matrix.entries.iter().flatten().all(|&e| e == 1);
    let margin = c.min_margin.min(c.resampled_margin);
    let entropy_ok = c.sigma2_entropy >= std::f64::consts::LN_2 - 1e-6;
    let secs = took.as_secs_f64();
    (
        full && margin > 0.0 && entropy_ok && secs < 120.0,
        format!("full 2x2 {full}, N = {}, min margin {margin:.3e}, entropy {:.9}, build {secs:.2} s", c.n, c.sigma2_entropy),
    )
}

fn c9_nested_boxes() -> Verdict {
    let (b, _) = build();
    let cd = coder(b);
    let lambda = b.certificate.lambda_obs;
    let nonempty = (0..128u32)
        .filter(|bits| {
            let w: Vec<u8> = (0..7).map(|i| ((bits >> i) & 1) as u8).collect();
            cd.binary_box(&w, 3).is_ok_and(|bx| bx.diameter > 0.0)
        })
        .count();
    let diam = |n: usize| cd.binary_box(&vec![0; 2 * n + 1], n).unwrap();
    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        worst = worst.max(diam(n).diameter / diam(n - 1).diameter);
    }
    let saddle = b.charts[0].saddle;
    let top = diam(10);
    let holds = top.distance_to(saddle) <= top.diameter;
    (
        nonempty == 128 && lambda < 1.0 && worst <= lambda && holds,
        format!("{nonempty}/128 boxes, worst ratio {worst:.3e} <= lambda_obs {lambda:.4}, saddle in constant box {holds}"),
    )
}

fn c10_embedding() -> Verdict {
    let (b, _) = build();
    let cd = coder(b);
    let e = embed_wds(&cd, &golden(), 6).unwrap();
    let decay = gap_pair_decay(&cd, &golden(), 6, 10).unwrap();
    let monotone = decay.windows(2).all(|w| w[1] < w[0]);
    (
        e.boxes.len() == 14 && e.disjoint() && e.equivariant() && monotone,
        format!(
            "{} boxes, separation {:.2e}, equivariance {:.3}, gap distance {:.2e} -> {:.2e} monotone {monotone}",
            e.boxes.len(),
            e.min_separation,
            e.equivariance,
            decay[0],
            decay[decay.len() - 1]
        ),
    )
}

fn c11_containment() -> Verdict {
    let (b, _) = build();
    let rep = theorem_run(&b.tm, &b.charts, &b.certificate, &[(1, 8), (1, 13), (2, 25)]);
    let rows: Vec<String> =
        rep.rows.iter().map(|r| format!("{}/{} {} ({:.3e})", r.p, r.q, r.contained, r.margin)).collect();
    let pass = rep.row(1, 13).is_some_and(|r| r.contained && r.avoids_separating_set) && rep.jacobi_ok() && !rep.jacobi.is_empty();
    (pass, format!("{}; Jacobi {} words ok {}; epsilon {}", rows.join(", "), rep.jacobi.len(), rep.jacobi_ok(), rep.epsilon))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("C1 golden complexity", c1_complexity),
        ("C2 metric/cylinder duality", c2_metric_duality),
        ("C3 rotation intervals", c3_rotation_intervals),
        ("C4 Denjoy rotation and itinerary", c4_denjoy),
        ("C5 continuity of the family", c5_continuity),
        ("C6 reversal and gap orbit", c6_equivalence),
        ("C7 twist engine", c7_twist),
        ("C8 horseshoe at K = 1", c8_horseshoe),
        ("C9 nested boxes", c9_nested_boxes),
        ("C10 golden embedding", c10_embedding),
        ("C11 containment run", c11_containment),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let (ok, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
