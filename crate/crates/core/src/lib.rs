//! Shortest collision-free coordinated motions for two discs in the plane.
//!
//! [`planner::plan`] returns the optimal motion together with the closed-form
//! lower bound it attains; [`oracle`] provides independent checks.

pub mod geom;
pub mod motion;
pub mod oracle;
pub mod planner;
pub mod support;
