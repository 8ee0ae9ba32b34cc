//! Policy-gradient training: the trajectory buffer, generalized advantage
//! estimation, clipped-surrogate losses, the decision environment, and the
//! training workflow under three actor/critic topologies.

mod buffer;
mod env;
mod gae;
mod ppo;
mod trainer;

pub use buffer::{TrajectoryBuffer, Transition};
pub use env::{ActionDesign, EnvConfig, StepOutcome, TrafficEnv, DEFAULT_SLOT_S, DEFAULT_SPD_CHOICES};
pub use gae::compute_gae;
pub use ppo::{ppo_loss_and_grads, ppo_losses, LossReport, PpoSample, PpoSettings};
pub use trainer::{
    decode_joint, encode_joint, evaluate, evaluate_with_mode, head_layout, train, train_with_callback, EpisodeStats,
    EvalEpisode, EvalReport, Topology, TrainConfig, TrainOutput,
};
pub(crate) use trainer::{episode_summary, summarize};
