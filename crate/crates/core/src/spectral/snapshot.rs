//! `SQGF` snapshot files: magic `SQGF`, u32 version, u32 n, f64 time, then
//! n·n f64 samples (y outer, x inner). All numbers little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{PhysicalField, SpectralError, WaveGrid};

pub const MAGIC: &[u8; 4] = b"SQGF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, field: &PhysicalField, time: f64) -> Result<(), SpectralError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.grid().n() as u32).to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(PhysicalField, f64), SpectralError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SpectralError::Snapshot("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(SpectralError::Snapshot(format!("unsupported version {version}")));
    }
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let grid = WaveGrid::new(n)?;
    let mut dword = [0u8; 8];
    r.read_exact(&mut dword)?;
    let time = f64::from_le_bytes(dword);
    let mut values = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        r.read_exact(&mut dword)?;
        values.push(f64::from_le_bytes(dword));
    }
    Ok((PhysicalField::new(&grid, values)?, time))
}

pub fn save_snapshot(path: &Path, field: &PhysicalField, time: f64) -> Result<(), SpectralError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, field, time)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<(PhysicalField, f64), SpectralError> {
    read_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_field;

    #[test]
    fn header_layout() {
        let g = WaveGrid::new(8).unwrap();
        let f = PhysicalField::constant(&g, 0.25);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 1.5).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 64 * 8);
        assert_eq!(&buf[0..4], b"SQGF");
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(&buf[8..12], &[8, 0, 0, 0]);
        assert_eq!(&buf[12..20], &1.5f64.to_le_bytes());
        assert_eq!(&buf[20..28], &0.25f64.to_le_bytes());
    }

    #[test]
    fn bit_exact_round_trip() {
        let g = WaveGrid::new(16).unwrap();
        let f = random_field(&g, 1.0, 6.0, 11).to_physical();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, -0.125).unwrap();
        let (back, t) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(t.to_bits(), (-0.125f64).to_bits());
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let mut again = Vec::new();
        write_snapshot(&mut again, &back, t).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_corrupt_headers() {
        assert!(read_snapshot(&b"SQGX\x01\0\0\0"[..]).is_err());
        assert!(read_snapshot(&b"SQGF\x02\0\0\0\x08\0\0\0"[..]).is_err());
        assert!(read_snapshot(&b"SQGF\x01\0\0\0\x06\0\0\0"[..]).is_err());
        assert!(read_snapshot(&b"SQGF\x01\0\0\0\x08\0\0\0\0\0\0\0\0\0\0\0"[..]).is_err());
    }
}
