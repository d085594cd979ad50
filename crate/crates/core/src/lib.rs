pub mod angle;
pub mod dd;
pub mod error;
pub mod symbolic;
pub mod circle;
pub mod wds;
pub mod twist;
pub mod horseshoe;
