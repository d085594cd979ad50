//! Heteroclinic horseshoes around hyperbolic Aubry-Mather sets: invariant
//! manifolds, the transverse cycle, a Markov partition near the saddles and
//! the symbolic embedding of Sturmian systems.

pub mod boxes;
pub mod certificate;
pub mod chart;
pub mod containment;
pub mod embed;
pub mod manifold;
pub mod markov;
pub mod partition;

pub use certificate::{build_horseshoe, HorseshoeBuild, HorseshoeCertificate, HorseshoeParams};
pub use chart::{saddle_charts, Chart, PreciseStep};
