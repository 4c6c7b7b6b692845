//! Flat binary parameter files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "QCAEWGT1"
//! count        u32      number of tensors
//! per tensor:  u32 rank, then rank × u32 dims
//! payload      f64 values of every tensor, in order, row-major
//! ```

use std::io::{Read, Write};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const WEIGHTS_MAGIC: &[u8; 8] = b"QCAEWGT1";

pub fn write_tensors<T: Real, W: Write>(out: &mut W, tensors: &[&Tensor<T>]) -> Result<()> {
    out.write_all(WEIGHTS_MAGIC)?;
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        out.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
    }
    for t in tensors {
        for &v in t.data() {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_tensors<T: Real, R: Read>(input: &mut R) -> Result<Vec<Tensor<T>>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    let magic = cur.take(8)?;
    if magic != WEIGHTS_MAGIC {
        return Err(Error::Parse { offset: 0, message: "bad weights magic".into() });
    }
    let count = cur.u32()? as usize;
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = cur.u32()? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(cur.u32()? as usize);
        }
        shapes.push(shape);
    }
    let mut tensors = Vec::with_capacity(count);
    for shape in shapes {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = cur.take(8)?;
            data.push(T::lit(f64::from_le_bytes(raw.try_into().expect("8 bytes"))));
        }
        tensors.push(Tensor::new(shape, data)?);
    }
    if cur.pos != bytes.len() {
        return Err(Error::Parse {
            offset: cur.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - cur.pos),
        });
    }
    Ok(tensors)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Parse {
                offset: self.pos as u64,
                message: format!("need {n} bytes, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
