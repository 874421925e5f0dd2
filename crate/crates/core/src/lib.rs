//! Optimal incomplete transportation between empirical measures and the
//! uniform law on `[0,1]^d`.
//!
//! A sample of `n` points may discard a fraction `alpha` of its mass before
//! being transported; the cost of the best such *trimmed* transport decays
//! like `n^{-1/d}` in every dimension, instead of the classical
//! `n^{-1/2}` / `sqrt(log n / n)` rates in dimensions one and two.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measures`] | samples, trim vectors, trimmed measures, feasibility |
//! | [`wasserstein1d`] | quantile-based 1-D distances, `f_p`, objective split |
//! | [`trim1d`] | envelopes, sandwich bounds and exact 1-D trimmed solver |
//! | [`partial_matching`] | sample-to-sample partial matching via min-cost flow |
//! | [`stripe`] | slab/stripe transport maps for `d >= 2` |
//! | [`quantization`] | fully trimmed (random quantization) costs |
//! | [`harness`] | seeded replications, rate fits, CSV/SVG reports |

// `!(x >= y)` is used on purpose so NaN arguments are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod kdtree;
pub mod measures;
pub mod partial_matching;
pub mod quantization;
pub mod stripe;
pub mod trim1d;
pub mod wasserstein1d;

pub use error::{Error, Result};
pub use measures::{Sample, TrimParams, TrimVector, TrimmedMeasure};
