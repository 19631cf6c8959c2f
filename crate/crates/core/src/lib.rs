//! Energy-efficiency-optimal bandwidth and transmit-power allocation for
//! multiuser transmission over parallel (non-interfering) frequency channels.
//!
//! Given per-user channel gains, minimum-rate floors, and bandwidth / power
//! budgets, the library answers two questions:
//!
//! * **Fixed bandwidths** ([`waterfill`], [`ee_fixed`]): for pre-assigned
//!   channel widths, how should a total transmit power be split across users
//!   (a multi-level water-filling rule with rate floors), and which total
//!   power maximizes energy efficiency — bits per joule against an amplifier
//!   efficiency and constant circuit draw?
//! * **Joint allocation** ([`joint`], [`ee_joint`]): when the widths are
//!   adjustable too, the sum-rate optimum pins every user except the
//!   best-gain one at its floor via Lambert-W closed forms; the efficiency
//!   optimum then spends the whole bandwidth budget and line-searches the
//!   total power on a derivative sign indicator.
//!
//! Both searches exploit that the optimal-allocation efficiency is either
//! strictly decreasing or strictly quasiconcave in the total power, so a
//! derivative-sign bisection finds the unique optimum.
//!
//! All optimizers come with independent brute-force [`oracle`]s, a KKT
//! residual certificate, and deterministic seeded scenario generation, so
//! every closed form can be re-checked mechanically.
//!
//! All types are immutable values and all operations are pure functions;
//! everything is safe to call concurrently.

pub mod ee_fixed;
pub mod ee_joint;
pub mod error;
pub mod joint;
pub mod model;
pub mod oracle;
pub mod special;
pub mod waterfill;

pub use error::{Error, Result};
pub use model::{
    energy_efficiency, rate, validate, Allocation, BoundaryCase, Mode, PowerModel, Scenario,
    UserAllocation, UserChannel, Violation,
};
