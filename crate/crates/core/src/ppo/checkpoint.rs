//! Versioned binary checkpoint for [`PolicyParams`].
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "IHANDPP1"
//! version    u32      currently 1
//! obs_dim    u32
//! act_dim    u32
//! n_hidden   u32
//! hidden     u32 × n_hidden
//! params     f64 × …  actor layers (weights then biases, layer by layer),
//!                     critic layers (weights then biases, layer by layer),
//!                     log_std, adam m, adam v
//! adam_step  u64
//! ```
//!
//! Weight matrices are stored row-major, exactly as held in memory, so a
//! save/load cycle is bit-exact and resuming from a checkpoint continues
//! the optimizer trajectory unchanged.

use std::path::Path;

use super::adam::AdamState;
use super::net::Mlp;
use super::policy::PolicyParams;
use super::PpoError;

/// File signature.
pub const MAGIC: &[u8; 8] = b"IHANDPP1";
/// Current format version.
pub const VERSION: u32 = 1;

/// Upper bound on any header dimension; a header beyond this is corrupt.
const MAX_DIM: u32 = 1_000_000;
/// Upper bound on the hidden-layer count.
const MAX_HIDDEN: u32 = 64;

/// Serializes the policy to the checkpoint byte format.
pub fn serialize_checkpoint(params: &PolicyParams) -> Vec<u8> {
    let hidden = &params.actor.sizes[1..params.actor.sizes.len() - 1];
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, params.obs_dim() as u32);
    push_u32(&mut out, params.act_dim() as u32);
    push_u32(&mut out, hidden.len() as u32);
    for &h in hidden {
        push_u32(&mut out, h as u32);
    }
    for net in [&params.actor, &params.critic] {
        for l in 0..net.layers() {
            push_f64s(&mut out, &net.weights[l]);
            push_f64s(&mut out, &net.biases[l]);
        }
    }
    push_f64s(&mut out, &params.log_std);
    push_f64s(&mut out, &params.adam.m);
    push_f64s(&mut out, &params.adam.v);
    out.extend_from_slice(&params.adam.step.to_le_bytes());
    out
}

/// Parses a checkpoint byte buffer back into a policy.
pub fn deserialize_checkpoint(bytes: &[u8]) -> Result<PolicyParams, PpoError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(8)?;
    if magic != MAGIC {
        return Err(PpoError::BadCheckpoint(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(PpoError::BadCheckpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let obs_dim = cur.dim("obs_dim")?;
    let act_dim = cur.dim("act_dim")?;
    let n_hidden = cur.u32()?;
    if n_hidden == 0 || n_hidden > MAX_HIDDEN {
        return Err(PpoError::BadCheckpoint(format!(
            "implausible hidden layer count {n_hidden}"
        )));
    }
    let mut hidden = Vec::with_capacity(n_hidden as usize);
    for _ in 0..n_hidden {
        hidden.push(cur.dim("hidden size")?);
    }

    let mut actor_sizes = vec![obs_dim];
    actor_sizes.extend_from_slice(&hidden);
    actor_sizes.push(act_dim);
    let mut critic_sizes = vec![obs_dim];
    critic_sizes.extend_from_slice(&hidden);
    critic_sizes.push(1);

    let actor = cur.mlp(&actor_sizes)?;
    let critic = cur.mlp(&critic_sizes)?;
    let log_std = cur.f64s(act_dim)?;
    let param_count = actor.param_count() + critic.param_count() + act_dim;
    let m = cur.f64s(param_count)?;
    let v = cur.f64s(param_count)?;
    let step = cur.u64()?;
    if cur.pos != bytes.len() {
        return Err(PpoError::BadCheckpoint(format!(
            "{} trailing bytes after checkpoint payload",
            bytes.len() - cur.pos
        )));
    }
    Ok(PolicyParams {
        actor,
        critic,
        log_std,
        adam: AdamState { m, v, step },
    })
}

/// Writes the checkpoint to `path`.
pub fn save_checkpoint(params: &PolicyParams, path: &Path) -> Result<(), PpoError> {
    std::fs::write(path, serialize_checkpoint(params))?;
    Ok(())
}

/// Reads a checkpoint from `path`.
pub fn load_checkpoint(path: &Path) -> Result<PolicyParams, PpoError> {
    deserialize_checkpoint(&std::fs::read(path)?)
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], PpoError> {
        if self.pos + n > self.bytes.len() {
            return Err(PpoError::BadCheckpoint(format!(
                "truncated: wanted {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, PpoError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, PpoError> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    /// Reads a dimension field and rejects implausible values before any
    /// allocation is sized from them.
    fn dim(&mut self, what: &str) -> Result<usize, PpoError> {
        let v = self.u32()?;
        if v == 0 || v > MAX_DIM {
            return Err(PpoError::BadCheckpoint(format!("implausible {what} {v}")));
        }
        Ok(v as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, PpoError> {
        let b = self.take(n * 8)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn mlp(&mut self, sizes: &[usize]) -> Result<Mlp, PpoError> {
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            weights.push(self.f64s(sizes[l + 1] * sizes[l])?);
            biases.push(self.f64s(sizes[l + 1])?);
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }
}
