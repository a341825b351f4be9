//! Exact finite-distribution arithmetic.

mod channel;
mod dist;
mod distance;
mod space;

pub use channel::Channel;
pub use dist::{FiniteDist, JointDist};
pub use distance::{
    indistinguishability_delta, indistinguishability_delta_for_ratio,
    joint_indistinguishability_delta, max_divergence, maximal_leakage, min_delta_for_eps,
    min_delta_for_ratio, min_eps_for_delta, pushforward, statistical_distance,
};
pub(crate) use distance::{excess_mass, half_l1};
pub use space::Space;
