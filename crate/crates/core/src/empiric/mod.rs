//! Empirical side of the upper bound: risks, projected SGD on the trainable
//! factor, Monte Carlo Rademacher complexity, empirical covers, Lipschitz
//! probes of the factor maps, and gap sweeps over `(r, N)`.

mod cover;
mod diameter;
mod probe;
mod rademacher;
mod risk;
pub mod stats;
mod sweep;
mod task;
mod train;

pub use cover::{empirical_cover, grid_sup_distance, tabulate_lora, FunctionTable};
pub use diameter::{diameter_event_frequency, DiameterEvent};
pub use probe::{lipschitz_probe_asymmetric_vs_full, LipschitzProbe};
pub use rademacher::{
    chaining_bound, greedy_l2s_cover, lora_loss_matrix, rademacher_exact, rademacher_lora,
    rademacher_mc, LossMatrix, RademacherEstimate,
};
pub use risk::{clipped_abs_loss, empirical_risk, FnModel, LabeledSample, LoraModel, Predictor};
pub use sweep::{
    gap_sweep, mean_gaps, measure_gap, run_cell, write_csv, CellStatus, ExperimentRecord,
    GapEstimate, SweepConfig, CSV_HEADER,
};
pub use task::{InputLaw, SyntheticTask, TaskSpec};
pub use train::{train_projected_sgd, TrainConfig, TrainOutcome};
