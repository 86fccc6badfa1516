//! Binary signal files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size    field
//! 0       4       magic "FFTU"
//! 4       4       format version (u32, currently 1)
//! 8       4       d (u32, number of dimensions, >= 1)
//! 12      8 * d   n_1 .. n_d (u64 each, >= 1)
//! ...     16 * N  N complex values as (re, im) f64 pairs, row-major
//! ```

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{TensorShape, TensorSignal};

pub const MAGIC: &[u8; 4] = b"FFTU";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode(x: &TensorSignal) -> Vec<u8> {
    let dims = x.shape().dims();
    let mut out = Vec::with_capacity(12 + 8 * dims.len() + 16 * x.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &n in dims {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for v in x.data() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn format_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(format_error(
                self.bytes.len(),
                format!("truncated {what}: need {n} bytes at offset {}", self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<TensorSignal> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(format_error(
            0,
            format!("bad magic {magic:?}, expected \"FFTU\""),
        ));
    }
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(format_error(
            4,
            format!("unsupported format version {version}"),
        ));
    }
    let d = cur.u32("dimension count")?;
    if d == 0 {
        return Err(format_error(8, "dimension count is zero"));
    }
    let mut dims = Vec::with_capacity(d as usize);
    let mut total: u64 = 1;
    for l in 0..d as usize {
        let at = cur.pos;
        let n = cur.u64("dimension")?;
        if n == 0 {
            return Err(format_error(at, format!("dimension {l} is zero")));
        }
        total = total
            .checked_mul(n)
            .filter(|t| t.checked_mul(16).is_some())
            .ok_or_else(|| format_error(at, "element count overflows"))?;
        dims.push(usize::try_from(n).map_err(|_| format_error(at, "dimension too large"))?);
    }
    let header = cur.pos;
    let expected = total as usize * 16;
    let available = bytes.len() - header;
    if available != expected {
        return Err(format_error(
            header + available.min(expected),
            format!("payload has {available} bytes, shape needs {expected}"),
        ));
    }
    let data = bytes[header..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    TensorSignal::new(TensorShape::new(dims)?, data)
}

pub fn read_signal(path: &Path) -> Result<TensorSignal> {
    decode(&std::fs::read(path)?)
}

pub fn write_signal(path: &Path, x: &TensorSignal) -> Result<()> {
    std::fs::write(path, encode(x))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn signal(dims: &[usize]) -> TensorSignal {
        let shape = TensorShape::new(dims).unwrap();
        TensorSignal::from_fn(shape, |c| {
            Complex64::new(c.iter().sum::<usize>() as f64 * 0.5, -(c[0] as f64))
        })
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&signal(&[2, 3]));
        assert_eq!(&bytes[..4], b"FFTU");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], 2u32.to_le_bytes());
        assert_eq!(bytes[12..20], 2u64.to_le_bytes());
        assert_eq!(bytes[20..28], 3u64.to_le_bytes());
        assert_eq!(bytes.len(), 28 + 6 * 16);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.fftu");
        let x = signal(&[4, 2, 3]);
        write_signal(&path, &x).unwrap();
        assert_eq!(read_signal(&path).unwrap(), x);
    }

    #[test]
    fn malformed_headers() {
        let good = encode(&signal(&[4]));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 0, .. })));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 4, .. })));

        let mut bad = good.clone();
        bad[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 8, .. })));

        let mut bad = good.clone();
        bad[12..20].copy_from_slice(&0u64.to_le_bytes());
        assert!(matches!(
            decode(&bad),
            Err(Error::Format { offset: 12, .. })
        ));

        assert!(matches!(
            decode(&good[..good.len() - 3]),
            Err(Error::Format { .. })
        ));
        assert!(matches!(decode(&good[..6]), Err(Error::Format { .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(Error::Format { .. })));
    }

    proptest! {
        #[test]
        fn encode_decode_is_bit_exact(
            dims in prop::collection::vec(1usize..4, 1..4),
            bits in prop::collection::vec(any::<u64>(), 128),
        ) {
            let shape = TensorShape::new(dims).unwrap();
            let data = (0..shape.len())
                .map(|i| Complex64::new(f64::from_bits(bits[2 * i % 128]), f64::from_bits(bits[(2 * i + 1) % 128])))
                .collect();
            let x = TensorSignal::new(shape, data).unwrap();
            let y = decode(&encode(&x)).unwrap();
            prop_assert_eq!(x.shape(), y.shape());
            for (a, b) in x.data().iter().zip(y.data()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
