pub mod cli;
pub mod eps;
pub mod geometry;
pub mod pipeline;
pub mod placement;
pub mod psfrag;
pub mod tagging;
pub mod texgen;
pub mod ticks;
