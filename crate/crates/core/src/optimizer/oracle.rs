use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::molgraph::{
    descriptors, parse_smiles, tanimoto_bits, write_canonical_smiles, DescriptorKind, FingerprintSpec, MolError,
    Molecule,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle command failed: {0}")]
    Command(String),
    #[error("oracle command timed out after {0:?}")]
    Timeout(Duration),
    #[error("oracle output line {line}: {msg}")]
    Output { line: usize, msg: String },
    #[error("oracle returned a non-finite score")]
    NonFinite,
    #[error("invalid oracle reference: {0}")]
    Reference(#[from] MolError),
}

/// Serializable oracle description, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Tanimoto similarity to a reference molecule.
    Similarity { reference: String },
    /// Gaussian bump `exp(-((v - target) / width)^2 / 2)` around a descriptor target.
    Descriptor {
        descriptor: DescriptorKind,
        target: f64,
        width: f64,
    },
    /// External program: one SMILES per line on stdin, one score per line on stdout.
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        /// Molecules per invocation.
        #[serde(default = "default_batch")]
        batch: usize,
    },
}

fn default_timeout() -> f64 {
    60.0
}

fn default_batch() -> usize {
    64
}

/// Scores molecules; higher is better.
#[derive(Debug, Clone)]
pub enum Oracle {
    Similarity {
        reference: Molecule,
        fp: FingerprintSpec,
        reference_fp: BitSet,
    },
    Descriptor {
        descriptor: DescriptorKind,
        target: f64,
        width: f64,
    },
    External {
        command: Vec<String>,
        timeout: Duration,
        batch: usize,
    },
}

impl Oracle {
    /// `fp` is the fingerprint the similarity oracle compares with.
    pub fn from_spec(spec: &OracleSpec, fp: FingerprintSpec) -> Result<Self, OracleError> {
        Ok(match spec {
            OracleSpec::Similarity { reference } => Self::similarity(parse_smiles(reference)?, fp),
            OracleSpec::Descriptor {
                descriptor,
                target,
                width,
            } => {
                if width.is_nan() || *width <= 0.0 || !target.is_finite() {
                    return Err(OracleError::Command(format!(
                        "descriptor width must be positive, got {width}"
                    )));
                }
                Self::Descriptor {
                    descriptor: *descriptor,
                    target: *target,
                    width: *width,
                }
            }
            OracleSpec::External {
                command,
                timeout_secs,
                batch,
            } => {
                if command.is_empty() {
                    return Err(OracleError::Command("empty command".into()));
                }
                Self::External {
                    command: command.clone(),
                    timeout: Duration::from_secs_f64(timeout_secs.max(0.0)),
                    batch: (*batch).max(1),
                }
            }
        })
    }

    pub fn similarity(reference: Molecule, fp: FingerprintSpec) -> Self {
        let reference_fp = fp.compute(&reference).into_bits();
        Self::Similarity {
            reference,
            fp,
            reference_fp,
        }
    }

    pub fn score_one(&self, mol: &Molecule) -> Result<f64, OracleError> {
        self.score(std::slice::from_ref(mol))
            .pop()
            .expect("one result per molecule")
    }

    /// One result per input molecule, in order.
    pub fn score(&self, mols: &[Molecule]) -> Vec<Result<f64, OracleError>> {
        match self {
            Oracle::Similarity { fp, reference_fp, .. } => mols
                .par_iter()
                .map(|m| Ok(tanimoto_bits(fp.compute(m).bits(), reference_fp)))
                .collect(),
            Oracle::Descriptor {
                descriptor,
                target,
                width,
            } => mols
                .par_iter()
                .map(|m| {
                    let z = (descriptor.value(&descriptors(m)) - target) / width;
                    finite((-0.5 * z * z).exp())
                })
                .collect(),
            Oracle::External {
                command,
                timeout,
                batch,
            } => {
                // Chunks run one at a time so the external tool is never flooded.
                let mut out = Vec::with_capacity(mols.len());
                for chunk in mols.chunks(*batch) {
                    match run_external(command, *timeout, chunk) {
                        Ok(scores) => out.extend(scores),
                        Err(e) => out.extend(chunk.iter().map(|_| Err(e.clone()))),
                    }
                }
                out
            }
        }
    }
}

fn finite(v: f64) -> Result<f64, OracleError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(OracleError::NonFinite)
    }
}

fn run_external(
    command: &[String],
    timeout: Duration,
    mols: &[Molecule],
) -> Result<Vec<Result<f64, OracleError>>, OracleError> {
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| OracleError::Command(format!("{}: {e}", command[0])))?;
    let input: String = mols.iter().map(|m| write_canonical_smiles(m) + "\n").collect();
    let mut stdin = child.stdin.take().expect("piped");
    let writer = std::thread::spawn(move || {
        // A tool that exits without reading everything closes the pipe; that is not our error.
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(OracleError::Timeout(timeout));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(OracleError::Command(e.to_string())),
        }
    };
    let _ = writer.join();
    let text = reader
        .join()
        .expect("reader thread")
        .map_err(|e| OracleError::Command(e.to_string()))?;
    if !status.success() {
        return Err(OracleError::Command(format!("{} exited with {status}", command[0])));
    }
    let mut lines = text.lines();
    Ok((0..mols.len())
        .map(|i| {
            let line = lines.next().ok_or(OracleError::Output {
                line: i + 1,
                msg: "missing score".into(),
            })?;
            let v: f64 = line.trim().parse().map_err(|e| OracleError::Output {
                line: i + 1,
                msg: format!("{e}"),
            })?;
            finite(v)
        })
        .collect())
}
