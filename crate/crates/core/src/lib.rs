//! Online learning over mixed discrete and continuous decisions.
//!
//! Each round a learner picks a set of at most `H` elements from a ground set
//! of size `n` together with a point of a convex domain, and receives only the
//! reward value. The crate provides the building blocks (an Exp3.S bandit and
//! a zeroth-order OCO learner), their compositions, the reward families and
//! adversaries used in experiments, brute-force oracles, and a harness that
//! measures dynamic regret.

pub mod bandit;
pub mod domains;
pub mod error;
pub mod harness;
pub mod oco;
pub mod omdco;
pub mod oracle;
pub mod rewards;
pub mod selftest;
pub mod subset;

pub use error::{Error, Result};
pub use subset::Subset;
