//! Candidate ego plans: quintic fitting, behavior-menu generation and
//! collision checks against predictions.

pub mod candidates;
pub mod collision;
pub mod exchange;
pub mod spline;

pub use candidates::{
    build_candidate, generate_candidates, Behavior, BehaviorMenuPlanner, BehaviorProfile, CandidateMenu,
    CandidatePlan, EgoState, LongitudinalBehavior, PlanGenerator,
};
pub use collision::{collision_check, footprints_overlap, CollisionPair, CollisionReport, Footprint};
pub use exchange::{PlanExchange, Units};
pub use spline::{downsample_to_knots, fit_quintic, fit_waypoints, sample_spline, QuinticSpline};
