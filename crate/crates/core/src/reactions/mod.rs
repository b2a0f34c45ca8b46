//! Reaction templates: pattern parsing, substructure matching, graph
//! rewriting and building-block compatibility masks.

mod io;
mod masks;
pub mod matcher;
pub mod pattern;
mod template;

pub use io::{load_blocks, load_templates, parse_blocks, parse_templates};
pub use masks::{CompatibilityMasks, World};
pub use matcher::{has_match, match_pattern, Embedding};
pub use pattern::{parse_pattern, Pattern, PatternAtom, PatternBond, PatternBondKind};
pub use template::{parse_template, parse_template_named, Arity, ReactionTemplate};

use crate::molgraph::MolError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReactionError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error("templates allow 1-2 reactants and one product, got {reactants} and {products}")]
    Arity { reactants: usize, products: usize },
    #[error("reactant {position} does not match its pattern")]
    NoMatch { position: usize },
    #[error("template takes {expected} reactants, got {got}")]
    ReactantCount { expected: usize, got: usize },
    #[error("{file}:{line}: {source}")]
    File {
        file: String,
        line: usize,
        #[source]
        source: Box<ReactionError>,
    },
    #[error("{file}:{line}: {source}")]
    Block {
        file: String,
        line: usize,
        #[source]
        source: MolError,
    },
    #[error("{0}")]
    Io(String),
}
