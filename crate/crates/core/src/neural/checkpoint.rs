use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::datagen::NetworkTag;
use crate::hash::fnv1a;
use crate::Scalar;

use super::mlp::{Hidden, Mlp};
use super::policy::{Policy, PolicyDims};
use super::NeuralError;

const MAGIC: &[u8; 8] = b"SRCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    dims: PolicyDims,
    templates_hash: u64,
    blocks_hash: u64,
}

fn put<T: Scalar>(buf: &mut Vec<u8>, values: impl IntoIterator<Item = T>) {
    for v in values {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
}

/// Header, then every tensor as little-endian `f32` in a fixed order
/// (act, rt1, rxn, rt2; per hidden layer w, gamma, beta, running mean and
/// variance; then output weights and bias), then an FNV-1a checksum.
pub fn encode_checkpoint<T: Scalar>(p: &Policy<T>) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        dims: p.dims,
        templates_hash: p.templates_hash,
        blocks_hash: p.blocks_hash,
    })
    .expect("header serializes");
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    for tag in NetworkTag::ALL {
        let net = p.net(tag);
        for h in &net.hidden {
            put(&mut buf, h.w.iter().copied());
            put(&mut buf, h.gamma.iter().copied());
            put(&mut buf, h.beta.iter().copied());
            put(&mut buf, h.running_mean.iter().copied());
            put(&mut buf, h.running_var.iter().copied());
        }
        put(&mut buf, net.w_out.iter().copied());
        put(&mut buf, net.b_out.iter().copied());
    }
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn bytes(&mut self, n: usize) -> Result<&[u8], NeuralError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| NeuralError::Format("truncated checkpoint".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NeuralError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn floats<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>, NeuralError> {
        let raw = self.bytes(
            n.checked_mul(4)
                .ok_or_else(|| NeuralError::Format("tensor too large".into()))?,
        )?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| T::of(f64::from(f32::from_le_bytes(c.try_into().unwrap()))))
            .collect())
    }

    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> Result<Array2<T>, NeuralError> {
        Ok(Array2::from_shape_vec((rows, cols), self.floats(rows * cols)?).expect("shape matches length"))
    }

    fn vector<T: Scalar>(&mut self, n: usize) -> Result<Array1<T>, NeuralError> {
        Ok(Array1::from(self.floats(n)?))
    }
}

pub fn decode_checkpoint<T: Scalar>(data: &[u8]) -> Result<Policy<T>, NeuralError> {
    if data.len() < MAGIC.len() + 16 || &data[..MAGIC.len()] != MAGIC {
        return Err(NeuralError::Format("not a checkpoint file".into()));
    }
    let (body, tail) = data.split_at(data.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err(NeuralError::Format("checksum mismatch".into()));
    }
    let mut r = Reader {
        data: body,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(NeuralError::Format(format!(
            "checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let hlen = r.u32()? as usize;
    let header: Header =
        serde_json::from_slice(r.bytes(hlen)?).map_err(|e| NeuralError::Format(format!("header: {e}")))?;
    header.dims.validate().map_err(|e| NeuralError::Format(e.to_string()))?;
    let dims = header.dims;
    let mut read_net = |tag: NetworkTag| -> Result<Mlp<T>, NeuralError> {
        let width = dims.hidden[tag.code() as usize];
        let mut fan_in = dims.input_dim(tag);
        let mut hidden = Vec::with_capacity(dims.depth);
        for _ in 0..dims.depth {
            hidden.push(Hidden {
                w: r.matrix(fan_in, width)?,
                gamma: r.vector(width)?,
                beta: r.vector(width)?,
                running_mean: r.vector(width)?,
                running_var: r.vector(width)?,
            });
            fan_in = width;
        }
        let out = dims.output_dim(tag);
        Ok(Mlp {
            kind: PolicyDims::kind(tag),
            hidden,
            w_out: r.matrix(fan_in, out)?,
            b_out: r.vector(out)?,
        })
    };
    let act = read_net(NetworkTag::Act)?;
    let rt1 = read_net(NetworkTag::Rt1)?;
    let rxn = read_net(NetworkTag::Rxn)?;
    let rt2 = read_net(NetworkTag::Rt2)?;
    if r.pos != body.len() {
        return Err(NeuralError::Format("trailing bytes after tensors".into()));
    }
    let p = Policy {
        dims,
        templates_hash: header.templates_hash,
        blocks_hash: header.blocks_hash,
        act,
        rt1,
        rxn,
        rt2,
    };
    if !p.all_finite() {
        return Err(NeuralError::Format("non-finite weights".into()));
    }
    Ok(p)
}

pub fn save_checkpoint<T: Scalar>(p: &Policy<T>, path: &Path) -> Result<u64, NeuralError> {
    let bytes = encode_checkpoint(p);
    std::fs::write(path, &bytes).map_err(|e| NeuralError::Io(format!("{}: {e}", path.display())))?;
    Ok(fnv1a(&bytes))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Policy<T>, NeuralError> {
    let bytes = std::fs::read(path).map_err(|e| NeuralError::Io(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}
