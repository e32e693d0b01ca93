//! Algorithmic complexity estimates for large k-ary objects.
//!
//! The pipeline quantizes a real-valued matrix to `q`-bit symbols, splits the
//! symbols into bit-planes, scores every plane with the block decomposition
//! method over a CTM lookup table and normalizes the total against seeded
//! random baselines of the same shape.
//!
//! ```no_run
//! use qubd_core::{ctm, qubd, Grid, PartitionSpec};
//!
//! let table = ctm::load_table("ctm-b2-d4x4.ctmt", Some((4, 4))).unwrap();
//! let weights = Grid::from_fn(32, 32, |r, c| ((r * 7 + c) % 5) as f64);
//! let spec = PartitionSpec::default();
//! let score = qubd::qubd_score(&weights, 8, &table, &spec).unwrap();
//! println!("{} bits", score.total);
//! ```

pub mod bdm;
pub mod ctm;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod quantize;
pub mod qubd;
pub mod represent;
pub mod rng;

pub use bdm::{BlockMultiset, BoundaryPolicy, PartitionSpec};
pub use ctm::{CtmDistribution, CtmTable};
pub use error::{Error, Result};
pub use grid::Grid;
pub use quantize::QuantizedTensor;
pub use qubd::{ComplexityReport, LayerRecord};
pub use represent::{BinaryMatrix, Provenance, ResidualSplit};
