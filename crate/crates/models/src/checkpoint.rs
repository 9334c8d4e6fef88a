//! Binary parameter files.
//!
//! Layout (little-endian): magic `SMOLCKPT`, `u32` version, `u64` FNV-1a
//! hash of the model's layout tag, `u64` float count, then the parameters as
//! `f64` in declaration order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndcore::{fnv1a, ParamStore};

use crate::error::{ModelError, Result};

pub const MAGIC: &[u8; 8] = b"SMOLCKPT";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, layout_tag: &str, params: &ParamStore) -> Result<()> {
    let values = params.flatten();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&fnv1a(layout_tag.as_bytes()).to_le_bytes())?;
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Loads into `params`, which must already have the layout named by
/// `layout_tag`.
pub fn read_checkpoint<R: Read>(mut r: R, layout_tag: &str, params: &mut ParamStore) -> Result<()> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    if u64::from_le_bytes(b8) != fnv1a(layout_tag.as_bytes()) {
        return Err(ModelError::Checkpoint("layout hash differs from the model".into()));
    }
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    if count != params.scalar_count() {
        return Err(ModelError::Checkpoint(format!(
            "{count} floats stored, model has {}",
            params.scalar_count()
        )));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    params.load_flat(&values);
    Ok(())
}

pub fn save_checkpoint(path: impl AsRef<Path>, layout_tag: &str, params: &ParamStore) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), layout_tag, params)
}

pub fn load_checkpoint(path: impl AsRef<Path>, layout_tag: &str, params: &mut ParamStore) -> Result<()> {
    read_checkpoint(BufReader::new(File::open(path)?), layout_tag, params)
}
