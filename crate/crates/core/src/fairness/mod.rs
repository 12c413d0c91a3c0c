//! The unfairness penalty: random Fourier feature embeddings of
//! predictions, inverse-propensity weighting per sensitive group, the
//! barycenter form of the pairwise kernel distances, and a mellowmax over
//! adjustment candidates.

mod ipw;
mod kernel;
mod penalty;

pub use ipw::{group_weights, ipw_weights, quantile_sorted, weighted_embedding, GroupIndex, IpwWeights, PROPENSITY_FLOOR};
pub use kernel::{
    barycenter_spread, gaussian_kernel, median_heuristic, mellowmax, mellowmax_weights, pairwise_spread, RffMap,
};
pub use penalty::{penalty, PenaltyBatch, PenaltyConfig, PenaltyValue};
