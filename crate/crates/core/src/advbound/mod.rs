//! Lower-bound machinery: the identity-emulating adapter on a ReLU net, its
//! operator-norm admissibility, Gaussian singular-value tails, small-ball
//! probabilities of sign sums, and the assembled experiment.

mod construct;
mod experiment;
mod gordon;
mod smallball;
mod source;

pub use construct::{
    build_identity_interpolator, construct_adversarial, eta_star, padded_identity,
    AdversarialInstance,
};
pub use experiment::{lower_bound_experiment, LowerBoundConfig, LowerBoundReport};
pub use gordon::{gordon_verify, union_gordon, GordonCheck, DEFAULT_GORDON_C};
pub use smallball::{
    rademacher_sum_pmf, small_ball, small_ball_at, small_ball_exact, SmallBallEstimate, EXACT_LIMIT,
};
pub use source::{sample_assumption_dist, BernoulliSource};
