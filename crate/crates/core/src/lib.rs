//! Joint channel pairing, channel-user assignment and power allocation for
//! dual-hop, multi-channel, multi-user relay networks.
//!
//! The weighted sum-rate problem is solved through its Lagrangian dual:
//! per-path powers in closed form (decode-and-forward) or by a scalar
//! search (amplify-and-forward upper bound), the assignment by the
//! Hungarian algorithm, and the multipliers by projected subgradient
//! descent over two regions known to contain the optimum.

pub mod assign;
pub mod baselines;
pub mod dual;
pub mod error;
pub mod model;
mod numeric;
pub mod oracle;
pub mod power;
pub mod rates;
pub mod sim;

pub use baselines::{solve_scheme, Scheme};
pub use dual::{dcdm_solve, dcdm_solve_with, DcdmOptions};
pub use error::{Error, Result};
pub use model::{
    Assignment, DualDiagnostics, Multipliers, PowerAllocation, RegionUsed, Scenario, SolveResult,
    Strategy, ALPHA,
};
