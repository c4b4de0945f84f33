//! Little-endian binary layout of a sketch, used as gossip message payload.
//!
//! ```text
//! magic     4 bytes  "FDCS"
//! version   u16      1
//! d         u32
//! w         u32
//! hash_seed u64
//! d*w cells, row-major; each cell is two counters of
//!     item    u32    (0 when absent)
//!     present u8     (0 or 1)
//!     fhat    f64
//! ```

use super::{Counter, SSummary, Sketch};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FDCS";
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8;
const COUNTER_LEN: usize = 4 + 1 + 8;

/// Size in bytes of an encoded `d x w` sketch.
pub fn encoded_len(d: usize, w: usize) -> usize {
    HEADER_LEN + d * w * 2 * COUNTER_LEN
}

pub fn encode(sketch: &Sketch) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(sketch.depth(), sketch.width()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sketch.depth() as u32).to_le_bytes());
    out.extend_from_slice(&(sketch.width() as u32).to_le_bytes());
    out.extend_from_slice(&sketch.hash_seed().to_le_bytes());
    for cell in sketch.cells() {
        for c in &cell.counters {
            out.extend_from_slice(&c.item.unwrap_or(0).to_le_bytes());
            out.push(c.item.is_some() as u8);
            out.extend_from_slice(&c.fhat.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Decode(format!("truncated input at byte {}", self.pos)))?;
        self.pos = end;
        Ok(bytes.try_into().expect("length checked"))
    }
}

pub fn decode(buf: &[u8]) -> Result<Sketch> {
    let mut r = Reader { buf, pos: 0 };
    if r.take::<4>()? != MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.take()?);
    if version != FORMAT_VERSION {
        return Err(Error::Decode(format!("unsupported format version {version}")));
    }
    let d = u32::from_le_bytes(r.take()?) as usize;
    let w = u32::from_le_bytes(r.take()?) as usize;
    let seed = u64::from_le_bytes(r.take()?);
    let mut sketch = Sketch::new(d, w, seed).map_err(|e| Error::Decode(e.to_string()))?;
    if buf.len() != encoded_len(d, w) {
        return Err(Error::Decode(format!(
            "expected {} bytes for a {d}x{w} sketch, got {}",
            encoded_len(d, w),
            buf.len()
        )));
    }
    for cell in sketch.cells_mut() {
        let mut counters = [Counter::EMPTY; 2];
        for c in &mut counters {
            let item = u32::from_le_bytes(r.take()?);
            let present = r.take::<1>()?[0];
            let fhat = f64::from_le_bytes(r.take()?);
            if !(fhat.is_finite() && fhat >= 0.0) {
                return Err(Error::Decode(format!("invalid counter value {fhat}")));
            }
            *c = match present {
                1 => Counter::new(item, fhat),
                0 if item == 0 && fhat == 0.0 => Counter::EMPTY,
                0 => return Err(Error::Decode("absent counter carries data".into())),
                other => return Err(Error::Decode(format!("invalid present flag {other}"))),
            };
        }
        if let (Some(a), Some(b)) = (counters[0].item, counters[1].item) {
            if a == b {
                return Err(Error::Decode(format!("item {a} monitored twice in one cell")));
            }
        }
        *cell = SSummary { counters };
    }
    Ok(sketch)
}
