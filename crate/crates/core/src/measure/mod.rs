//! Permuton representations: step grids, slope-±1 segment measures and
//! permutation-induced grids, with CDFs, metrics, coarsening and sampling.

mod grid;
mod metric;
mod permutation;
mod sample;
mod segment;

pub use grid::{CdfField, GridPermuton, Rebalanced, STRUCTURAL_TOL};
pub(crate) use grid::sinkhorn;
pub use metric::{cdf_linf_distance, rect_distance};
pub use permutation::Permutation;
pub use sample::{derive_seed, sample_permutation, PointSampler, Sampleable};
pub use segment::{gamma_ab, Segment, SegmentPermuton, Slope};
