#![allow(dead_code)]

use proptest::prelude::*;
use wds_core::angle::{Angle, QuadSurd};

/// `frac(m √d / c)` for small non-square `d`: exact quadratic irrationals.
pub fn irrational() -> impl Strategy<Value = Angle> {
    (prop::sample::select(vec![2i64, 3, 5, 6, 7, 10, 11, 13]), 1i64..=4, 1i64..=4)
        .prop_map(|(d, m, c)| Angle::surd(QuadSurd::new(0, m, d, c)).frac())
}

/// Same, folded into `(0, 1/2)`.
pub fn small_irrational() -> impl Strategy<Value = Angle> {
    irrational().prop_map(|a| if a.value() > 0.5 { a.complement() } else { a })
}
