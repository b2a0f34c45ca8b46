use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::hash::fnv1a;
use crate::synthtree::{ActionKind, Environment, Rt1, SyntheticTree, TreeError};

use super::features::Featurizer;
use super::DatagenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkTag {
    Act,
    Rt1,
    Rxn,
    Rt2,
}

impl NetworkTag {
    pub const ALL: [NetworkTag; 4] = [NetworkTag::Act, NetworkTag::Rt1, NetworkTag::Rxn, NetworkTag::Rt2];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(usize::from(c)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NetworkTag::Act => "act",
            NetworkTag::Rt1 => "rt1",
            NetworkTag::Rxn => "rxn",
            NetworkTag::Rt2 => "rt2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Class(u32),
    Bits(BitSet),
}

/// One supervised example. Inputs are binary, so they are kept packed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub tag: NetworkTag,
    pub input: BitSet,
    pub target: Target,
}

/// Teacher-forced examples along the tree's action log, conditioned on its own root.
pub fn extract_training_examples(
    tree: &SyntheticTree,
    env: &Environment,
    fz: &Featurizer,
) -> Result<Vec<TrainingExample>, TreeError> {
    let root = tree
        .root()
        .ok_or_else(|| TreeError::InvalidAction("tree is not complete".into()))?;
    let z_target = fz.mlp_fp(tree.molecule(root));
    let (mut t, mut s) = env.new_tree();
    let mut out = Vec::new();
    for &a in &tree.action_log {
        let z_state = fz.state(&t, &s);
        let act_in = fz.act_input(&z_state, &z_target);
        out.push(TrainingExample {
            tag: NetworkTag::Act,
            input: act_in.clone(),
            target: Target::Class(a.kind.index() as u32),
        });
        if a.kind != ActionKind::End {
            let rt1_mol = match a.rt1 {
                Some(Rt1::Block(b)) => {
                    out.push(TrainingExample {
                        tag: NetworkTag::Rt1,
                        input: act_in,
                        target: Target::Bits(fz.knn_fp(&env.world.blocks[b])),
                    });
                    &env.world.blocks[b]
                }
                _ => t.molecule(s.most_recent.expect("non-Add action has a root")),
            };
            let z_rt1 = fz.mlp_fp(rt1_mol);
            let tpl = a.template.expect("non-End action has a template");
            out.push(TrainingExample {
                tag: NetworkTag::Rxn,
                input: fz.rxn_input(&z_state, &z_target, &z_rt1),
                target: Target::Class(tpl as u32),
            });
            if let (Some(b2), true) = (a.rt2, a.kind != ActionKind::Merge) {
                out.push(TrainingExample {
                    tag: NetworkTag::Rt2,
                    input: fz.rt2_input(&z_state, &z_target, &z_rt1, tpl),
                    target: Target::Bits(fz.knn_fp(&env.world.blocks[b2])),
                });
            }
        }
        env.step(&mut t, &mut s, a)?;
    }
    Ok(out)
}

const SHARD_MAGIC: &[u8; 8] = b"SRSHARD\0";
const SHARD_VERSION: u32 = 1;

fn put_bits(buf: &mut Vec<u8>, b: &BitSet) {
    buf.extend_from_slice(&(b.len() as u32).to_le_bytes());
    buf.extend_from_slice(&b.to_bytes());
}

/// Binary shard: header, records `{tag, input, target}`, trailing checksum.
pub fn encode_shard(examples: &[TrainingExample]) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(SHARD_MAGIC);
    buf.extend_from_slice(&SHARD_VERSION.to_le_bytes());
    buf.extend_from_slice(&(examples.len() as u64).to_le_bytes());
    for e in examples {
        buf.push(e.tag.code());
        put_bits(&mut buf, &e.input);
        match &e.target {
            Target::Class(c) => {
                buf.push(0);
                buf.extend_from_slice(&c.to_le_bytes());
            }
            Target::Bits(b) => {
                buf.push(1);
                put_bits(&mut buf, b);
            }
        }
    }
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DatagenError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| DatagenError::Format("truncated shard".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DatagenError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DatagenError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DatagenError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bits(&mut self) -> Result<BitSet, DatagenError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        BitSet::from_bytes(len, bytes).ok_or_else(|| DatagenError::Format("stray bits in packed vector".into()))
    }
}

pub fn decode_shard(data: &[u8]) -> Result<Vec<TrainingExample>, DatagenError> {
    if data.len() < SHARD_MAGIC.len() + 4 + 8 + 8 || &data[..8] != SHARD_MAGIC {
        return Err(DatagenError::Format("not an example shard".into()));
    }
    let (body, tail) = data.split_at(data.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err(DatagenError::Format("shard checksum mismatch".into()));
    }
    let mut c = Cursor { data: body, pos: 8 };
    let version = c.u32()?;
    if version != SHARD_VERSION {
        return Err(DatagenError::Format(format!("shard version {version}")));
    }
    let n = c.u64()? as usize;
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let tag = NetworkTag::from_code(c.u8()?).ok_or_else(|| DatagenError::Format("bad tag".into()))?;
        let input = c.bits()?;
        let target = match c.u8()? {
            0 => Target::Class(c.u32()?),
            1 => Target::Bits(c.bits()?),
            k => return Err(DatagenError::Format(format!("bad target kind {k}"))),
        };
        out.push(TrainingExample { tag, input, target });
    }
    if c.pos != body.len() {
        return Err(DatagenError::Format("trailing bytes in shard".into()));
    }
    Ok(out)
}

pub fn write_shard(path: &Path, examples: &[TrainingExample]) -> Result<u64, DatagenError> {
    let bytes = encode_shard(examples);
    let mut f = std::fs::File::create(path).map_err(|e| DatagenError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| DatagenError::io(path, e))?;
    Ok(fnv1a(&bytes))
}

pub fn read_shard(path: &Path) -> Result<Vec<TrainingExample>, DatagenError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| DatagenError::io(path, e))?;
    decode_shard(&bytes)
}
