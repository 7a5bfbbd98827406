//! Field snapshot persistence.
//!
//! Layout: magic `LFPPFLD1`, little-endian u32 n, u32 mesh refinement,
//! u8 kind, u64 seed, then (n+1)² float64 values row-major. Round-trips are
//! bit-exact. Snapshots with a different magic (including older versions)
//! are rejected, never reinterpreted.

use crate::gff::{FieldKind, FieldSample};
use crate::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"LFPPFLD1";

pub fn write_field<W: Write>(w: &mut W, field: &FieldSample) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&field.n.to_le_bytes())?;
    w.write_all(&field.mesh_refinement.to_le_bytes())?;
    w.write_all(&[field.kind.as_byte()])?;
    w.write_all(&field.seed.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<FieldSample> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::SnapshotVersion {
            found: String::from_utf8_lossy(&magic).into_owned(),
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
        });
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4);
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let kind = FieldKind::from_byte(b1[0])?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    if n > 1 << 20 {
        return Err(Error::SnapshotFormat(format!("implausible scale {n}")));
    }
    if m == 0 {
        return Err(Error::SnapshotFormat("zero mesh refinement".into()));
    }
    let count = (n as usize + 1) * (n as usize + 1);
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    // must be at end of stream
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::SnapshotFormat("trailing bytes after values".into()));
    }
    Ok(FieldSample::new(n, m, kind, seed, values))
}

pub fn save_field(path: &Path, field: &FieldSample) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<FieldSample> {
    read_field(&mut BufReader::new(File::open(path)?))
}
