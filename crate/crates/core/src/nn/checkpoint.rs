//! Parameter blobs: `OSC1`, a little-endian u32 tensor count, per tensor a
//! u32 rank and its u32 dims, then every tensor's data as f32 LE in order.

use std::io::{Read, Write};

use super::NnError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"OSC1";

fn u32_of(v: usize, what: &str) -> Result<u32, NnError> {
    u32::try_from(v).map_err(|_| NnError::Checkpoint(format!("{what} {v} does not fit in u32")))
}

pub fn save_checkpoint<T: Scalar, W: Write>(params: &[Tensor<T>], mut out: W) -> Result<(), NnError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&u32_of(params.len(), "tensor count")?.to_le_bytes());
    for p in params {
        buf.extend_from_slice(&u32_of(p.rank(), "rank")?.to_le_bytes());
        for &d in p.shape() {
            buf.extend_from_slice(&u32_of(d, "dimension")?.to_le_bytes());
        }
    }
    for p in params {
        for v in p.data() {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            NnError::Checkpoint(format!("truncated at byte {} (need {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

pub fn load_checkpoint<T: Scalar, R: Read>(mut input: R) -> Result<Vec<Tensor<T>>, NnError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("missing OSC1 magic".into()));
    }
    let count = cur.u32()?;
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = cur.u32()?;
        let shape = (0..rank).map(|_| cur.u32()).collect::<Result<Vec<_>, _>>()?;
        shapes.push(shape);
    }
    let mut out = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let n: usize = shape.iter().product();
        let raw = cur.take(n.checked_mul(4).ok_or_else(|| NnError::Checkpoint("tensor too large".into()))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect();
        out.push(Tensor::from_vec(&shape, data)?);
    }
    if cur.pos != bytes.len() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(out)
}
