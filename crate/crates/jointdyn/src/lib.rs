//! Joint action-conditional video frame and reward prediction at desk scale.
//!
//! The crate bundles a small reverse-mode tensor engine ([`tensorgrad`]),
//! the three-stage encoder / action-transform / decoder network with a
//! ternary reward head ([`netmodel`]), the compound multi-step training
//! objective with curriculum support ([`training`]), procedurally rendered
//! pixel games with scripted agents ([`toyenv`]), a trajectory dataset
//! pipeline ([`datapipe`]) and a cumulative-reward-error evaluation harness
//! ([`evalharness`]).
//!
//! The long-form guide lives in `book/`; its code snippets compile and run
//! as doc-tests of this crate.

pub mod error;
pub mod tensorgrad;
pub mod util;

pub use error::{Error, Result};
