//! Equilibrium and socially optimal joining strategies for a passenger-taxi
//! double-ended Markov queue with impatient passengers, dynamically
//! controlled taxi arrivals, finite taxi capacity and a two-mass-point
//! matching time, under two information levels, cross-validated by an
//! independent continuous-time Markov chain simulation.
//!
//! The state is the signed queue difference: positive values count waiting
//! passengers, negative values waiting taxis (bounded by the capacity).
//! Arriving passengers either join with a probability chosen in equilibrium
//! (partially observable case) or follow a threshold rule on the observed
//! passenger queue (observable case).
//!
//! ```
//! use taxiq::model::{validate, InfoLevel, ModelParams};
//! use taxiq::strategy::equilibrium_q;
//!
//! let params = ModelParams {
//!     lambda: 6.0, mu1: 4.0, mu2: 5.5, alpha: 2.0, capacity_n: 20,
//!     k1: 3.0, k2: 5.0, reward_r: 16.0, price_p: 6.0,
//!     cost_cp: 4.0, cost_ct: 3.0, cost_cmp: 3.0, cost_cmt: 3.0,
//! };
//! let validated = validate(params, InfoLevel::PartiallyObservable).unwrap();
//! let eq = equilibrium_q(&validated.params).unwrap();
//! assert!(eq.q_e > 0.0 && eq.q_e < 1.0);
//! ```

pub mod error;
pub mod experiments;
pub mod model;
pub mod observable;
pub mod partial_obs;
pub mod sim;
pub mod strategy;

pub use error::{Error, ErrorClass};
pub use model::{InfoLevel, ModelParams, Policy};
