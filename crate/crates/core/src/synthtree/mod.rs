//! Synthetic trees and the bottom-up construction environment.
//!
//! A tree is built by a sequence of [`Action`]s: `Add` starts a sub-tree from
//! a building block, `Expand` extends the most recent root, `Merge` joins the
//! two roots and `End` finishes. At most two roots exist at any time. The
//! [`Environment`] owns the validity masks and the deterministic transition.

mod env;
mod tree;

pub use env::{ActionSet, Environment, DEFAULT_T_MAX};
pub use tree::{Action, ActionKind, MdpState, MolNode, ReactionNode, Role, Rt1, SyntheticTree, TREE_FORMAT_VERSION};

use crate::reactions::ReactionError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error("replay diverged at step {step}: {reason}")]
    ReplayDivergence { step: usize, reason: String },
    #[error("format error: {0}")]
    Format(String),
}
