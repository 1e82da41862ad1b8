//! Loss-level differential privacy: Laplace noise, tree aggregation of
//! prefix sums, and the private protocol built on them.

mod budget;
mod dope;
mod laplace;
mod tree;

pub(crate) use budget::extended_float;
pub use budget::{budget, PrivacyBudget};
pub use dope::{gradient_stream_id, scalar_stream_id, DopeNetworkState, DopeStepRecord, DpManifest};
pub use laplace::{laplace_sample, laplace_scalar};
pub use tree::{level_count, AggregationTree};
