//! Exact homological algebra for the category of pruned level trees.

pub mod acyclicity;
pub mod barkoszul;
pub mod cobar;
pub mod diagrams;
pub mod homalg;
pub mod iteratedbar;
pub mod morphisms;
pub mod signs;
pub mod trees;
