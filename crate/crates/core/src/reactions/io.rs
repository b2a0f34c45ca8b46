use std::path::Path;

use crate::molgraph::{parse_smiles, Molecule};

use super::template::{parse_template_named, ReactionTemplate};
use super::ReactionError;

/// Parses a template file: `name<TAB>pattern[<TAB>tag,tag]` per line, `#` comments.
pub fn parse_templates(text: &str, file: &str) -> Result<Vec<ReactionTemplate>, ReactionError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let wrap = |source: ReactionError| ReactionError::File {
            file: file.to_string(),
            line: ln + 1,
            source: Box::new(source),
        };
        let mut fields = line.split('\t');
        let name = fields.next().unwrap_or_default().trim();
        let pattern = fields.next().ok_or_else(|| {
            wrap(ReactionError::Syntax {
                pos: 0,
                msg: "expected name<TAB>pattern".into(),
            })
        })?;
        let mut t = parse_template_named(out.len(), name, pattern).map_err(wrap)?;
        if let Some(tags) = fields.next() {
            t.tags = tags
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
        }
        out.push(t);
    }
    Ok(out)
}

pub fn load_templates(path: &Path) -> Result<Vec<ReactionTemplate>, ReactionError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReactionError::Io(format!("{}: {e}", path.display())))?;
    parse_templates(&text, &path.display().to_string())
}

/// Parses a building-block list: the first whitespace-separated token of each
/// non-blank, non-`#` line is a SMILES string.
pub fn parse_blocks(text: &str, file: &str) -> Result<Vec<Molecule>, ReactionError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let Some(tok) = line.split_whitespace().next() else {
            continue;
        };
        if tok.starts_with('#') {
            continue;
        }
        let mol = parse_smiles(tok).map_err(|source| ReactionError::Block {
            file: file.to_string(),
            line: ln + 1,
            source,
        })?;
        out.push(mol);
    }
    Ok(out)
}

pub fn load_blocks(path: &Path) -> Result<Vec<Molecule>, ReactionError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReactionError::Io(format!("{}: {e}", path.display())))?;
    parse_blocks(&text, &path.display().to_string())
}
