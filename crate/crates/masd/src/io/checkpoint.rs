//! Self-describing binary checkpoint container.
//!
//! Layout (all little-endian):
//! - magic `MASDCKPT`, format version u32
//! - named i64 metadata entries (count, then name-length/name/value)
//! - named f64 arrays (count, then name-length/name/rows/cols/data)
//!
//! Saves write to a temporary sibling file and rename into place, so a
//! crash never leaves a torn checkpoint. Loads verify magic, version,
//! and exact length.

use crate::numerics::Matrix;
use crate::{Error, Result};
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 8] = b"MASDCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    metas: Vec<(String, i64)>,
    arrays: Vec<(String, Matrix)>,
}

impl Default for Checkpoint {
    fn default() -> Self {
        Self::new()
    }
}

impl Checkpoint {
    pub fn new() -> Self {
        Self {
            version: FORMAT_VERSION,
            metas: Vec::new(),
            arrays: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, name: &str, value: i64) {
        self.metas.push((name.to_string(), value));
    }

    pub fn push_array(&mut self, name: &str, array: Matrix) {
        self.arrays.push((name.to_string(), array));
    }

    pub fn meta(&self, name: &str) -> Result<i64> {
        self.metas
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Checkpoint(format!("missing meta entry {name}")))
    }

    pub fn array(&self, name: &str) -> Result<&Matrix> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
            .ok_or_else(|| Error::Checkpoint(format!("missing array {name}")))
    }

    pub fn metas(&self) -> &[(String, i64)] {
        &self.metas
    }

    pub fn arrays(&self) -> &[(String, Matrix)] {
        &self.arrays
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
            f.write_all(MAGIC)?;
            f.write_all(&self.version.to_le_bytes())?;
            f.write_all(&(self.metas.len() as u32).to_le_bytes())?;
            for (name, value) in &self.metas {
                write_name(&mut f, name)?;
                f.write_all(&value.to_le_bytes())?;
            }
            f.write_all(&(self.arrays.len() as u32).to_le_bytes())?;
            for (name, array) in &self.arrays {
                write_name(&mut f, name)?;
                f.write_all(&(array.rows() as u64).to_le_bytes())?;
                f.write_all(&(array.cols() as u64).to_le_bytes())?;
                for v in array.data() {
                    f.write_all(&v.to_le_bytes())?;
                }
            }
            f.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut r = Cursor { buf: &bytes, pos: 0 };
        let magic = r.take(8)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let meta_count = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let mut metas = Vec::with_capacity(meta_count);
        for _ in 0..meta_count {
            let name = read_name(&mut r)?;
            let value = i64::from_le_bytes(r.take(8)?.try_into().unwrap());
            metas.push((name, value));
        }
        let array_count = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let mut arrays = Vec::with_capacity(array_count);
        for _ in 0..array_count {
            let name = read_name(&mut r)?;
            let rows = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Checkpoint("array size overflow".into()))?;
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
            }
            arrays.push((
                name,
                Matrix::from_vec(rows, cols, data)
                    .map_err(|e| Error::Checkpoint(format!("bad array shape: {e}")))?,
            ));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "trailing bytes: read {} of {}",
                r.pos,
                bytes.len()
            )));
        }
        Ok(Self {
            version,
            metas,
            arrays,
        })
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "truncated file: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

fn write_name(f: &mut impl Write, name: &str) -> Result<()> {
    f.write_all(&(name.len() as u32).to_le_bytes())?;
    f.write_all(name.as_bytes())?;
    Ok(())
}

fn read_name(r: &mut Cursor) -> Result<String> {
    let len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
    if len > 4096 {
        return Err(Error::Checkpoint(format!("implausible name length {len}")));
    }
    String::from_utf8(r.take(len)?.to_vec())
        .map_err(|_| Error::Checkpoint("non-utf8 name".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn sample() -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.push_meta("episode", 42);
        ck.push_meta("negative", -7);
        let mut rng = RngStream::seed_from(3);
        let mut m = Matrix::zeros(3, 5);
        for v in m.data_mut() {
            *v = rng.uniform(-10.0, 10.0);
        }
        ck.push_array("weights", m);
        ck.push_array("empty", Matrix::zeros(0, 4));
        ck
    }

    #[test]
    fn roundtrip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        let ck = sample();
        ck.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(ck, loaded);

        // Byte-level determinism of the container itself.
        let path2 = dir.path().join("ck2.bin");
        ck.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        sample().save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = path.with_extension("cut");
        std::fs::write(&cut, &bytes[..bytes.len() - 9]).unwrap();
        match Checkpoint::load(&cut) {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("truncated"), "{msg}"),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        sample().save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(Checkpoint::load(&path).is_err());

        let mut ck = sample();
        ck.version = 99;
        ck.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }

    #[test]
    fn missing_entries_reported_by_name() {
        let ck = sample();
        match ck.meta("nope") {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("nope")),
            other => panic!("{other:?}"),
        }
        match ck.array("nada") {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("nada")),
            other => panic!("{other:?}"),
        }
    }
}
