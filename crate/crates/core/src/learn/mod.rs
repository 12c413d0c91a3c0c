//! Predictor and propensity networks, the optimizer, and the penalized
//! training loop.

mod mlp;
mod optim;
mod propensity;
mod train;

pub use mlp::{Cache, Head, Mlp, Standardizer};
pub use optim::AdamW;
pub use propensity::{fit_propensity, fit_propensity_table, PropensityConfig, PropensityModel};
pub use train::{
    epoch_log_csv, evaluate_penalty, input_variables, lambda_grid, objective, target_bandwidth, train, train_fixed, EpochLog, FairnessData,
    LambdaScore, Method, Objective, Task, TrainConfig, TrainOutcome, TrainSet,
};
