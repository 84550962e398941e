//! # permutons
//!
//! Computing with permutons: probability measures on the unit square with
//! uniform marginals, the limit objects of large permutations.
//!
//! The crate covers
//!
//! - grid, segment and permutation-induced permutons, their CDFs, the
//!   rectangle metric, coarsening and seeded point sampling ([`measure`]);
//! - exact and Monte-Carlo pattern densities ([`patterns`]);
//! - permuton entropy, Riemann refinement and heat-flow smoothing ([`entropy`]);
//! - insertion measures and the characteristic-flow reconstruction ([`insertion`]);
//! - the closed-form 1 2 model, star-model free energies and their Legendre
//!   duals ([`starmodel`]);
//! - direct entropy maximization under pattern-density constraints ([`optimizer`]);
//! - feasible-region boundaries ([`regions`]) and exact combinatorial
//!   oracles, including the Mahonian large-deviations check ([`oracle`]);
//! - a command-line front end ([`cli`]) and file formats ([`io`]).
//!
//! ```rust
//! use permutons::measure::{GridPermuton, Permutation};
//! use permutons::patterns::{density_grid_exact, PatternSpec};
//!
//! let pi = Permutation::new(vec![2, 4, 1, 3]).unwrap();
//! let g = GridPermuton::from_permutation(&pi, 4).unwrap();
//! let rho = density_grid_exact(&g, &"12".parse::<PatternSpec>().unwrap()).unwrap();
//! assert!(rho > 0.0 && rho < 1.0);
//! ```

#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod entropy;
mod error;
pub mod insertion;
pub mod io;
pub mod measure;
pub mod optimizer;
pub mod oracle;
pub mod patterns;
mod quadrature;
pub mod regions;
pub mod starmodel;

pub use error::{Error, Result};
pub use measure::{CdfField, GridPermuton, Permutation, Segment, SegmentPermuton};
pub use patterns::{DensityEstimate, PatternSpec};
