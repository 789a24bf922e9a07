//! Dataset snapshot file format.
//!
//! Layout, all little-endian:
//! ```text
//! magic   4 bytes  "ALDK"
//! version u32      currently 1
//! count   u32      number of arrays
//! per array:
//!   rows  u32
//!   cols  u32
//!   data  rows*cols f64, row-major
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use alada_core::{DatasetSnapshot, Matrix};

pub const MAGIC: &[u8; 4] = b"ALDK";
pub const VERSION: u32 = 1;

#[derive(Debug)]
pub enum SnapshotError {
    Io(io::Error),
    BadMagic([u8; 4]),
    BadVersion(u32),
    BadDims { rows: u32, cols: u32 },
}

impl std::fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnapshotError::Io(e) => write!(f, "snapshot io: {e}"),
            SnapshotError::BadMagic(m) => write!(f, "snapshot magic {m:?} is not ALDK"),
            SnapshotError::BadVersion(v) => write!(f, "unsupported snapshot version {v}"),
            SnapshotError::BadDims { rows, cols } => {
                write!(f, "snapshot array with zero extent {rows}x{cols}")
            }
        }
    }
}

impl std::error::Error for SnapshotError {}

impl From<io::Error> for SnapshotError {
    fn from(e: io::Error) -> Self {
        SnapshotError::Io(e)
    }
}

pub fn write_snapshot<W: Write>(mut w: W, snapshot: &DatasetSnapshot) -> Result<(), SnapshotError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(snapshot.arrays.len() as u32).to_le_bytes())?;
    for arr in &snapshot.arrays {
        w.write_all(&(arr.rows() as u32).to_le_bytes())?;
        w.write_all(&(arr.cols() as u32).to_le_bytes())?;
        for v in arr.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<DatasetSnapshot, SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let count = read_u32(&mut r)?;
    let mut arrays = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let rows = read_u32(&mut r)?;
        let cols = read_u32(&mut r)?;
        if rows == 0 || cols == 0 {
            return Err(SnapshotError::BadDims { rows, cols });
        }
        let len = rows as usize * cols as usize;
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        arrays.push(
            Matrix::from_vec(rows as usize, cols as usize, data)
                .expect("dims checked above"),
        );
    }
    Ok(DatasetSnapshot { arrays })
}

pub fn save_snapshot(path: &Path, snapshot: &DatasetSnapshot) -> Result<(), SnapshotError> {
    let file = File::create(path)?;
    write_snapshot(BufWriter::new(file), snapshot)
}

pub fn load_snapshot(path: &Path) -> Result<DatasetSnapshot, SnapshotError> {
    let file = File::open(path)?;
    read_snapshot(BufReader::new(file))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, SnapshotError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let snap = DatasetSnapshot {
            arrays: vec![
                Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.371 - 1.0).unwrap(),
                Matrix::from_fn(5, 1, |i, _| -(i as f64) / 7.0).unwrap(),
            ],
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        assert_eq!(&buf[..4], b"ALDK");
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back.arrays.len(), 2);
        for (a, b) in snap.arrays.iter().zip(&back.arrays) {
            assert_eq!(a.dims(), b.dims());
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_foreign_magic() {
        let buf = b"NOPE\x01\x00\x00\x00\x00\x00\x00\x00".to_vec();
        assert!(matches!(
            read_snapshot(buf.as_slice()),
            Err(SnapshotError::BadMagic(_))
        ));
    }
}
