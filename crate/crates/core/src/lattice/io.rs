//! Binary format for lattice data: a little-endian header (`d: u64`, `n: u64`,
//! `L: f64`) followed by the `n^d` site values as `f64`, row-major.

use std::io::{Read, Write};

use super::TorusLattice;
use crate::error::{Error, Result};

pub fn write_lattice_values<W: Write>(w: &mut W, lattice: &TorusLattice, values: &[f64]) -> Result<()> {
    if values.len() != lattice.num_sites() {
        return Err(Error::Format(format!(
            "{} values for a lattice of {} sites",
            values.len(),
            lattice.num_sites()
        )));
    }
    w.write_all(&(lattice.dim() as u64).to_le_bytes())?;
    w.write_all(&(lattice.sites_per_side() as u64).to_le_bytes())?;
    w.write_all(&lattice.side().to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_word<R: Read>(r: &mut R) -> Result<[u8; 8]> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated lattice file: {e}")))?;
    Ok(buf)
}

pub fn read_lattice_values<R: Read>(r: &mut R) -> Result<(TorusLattice, Vec<f64>)> {
    let dim = u64::from_le_bytes(read_word(r)?);
    let n = u64::from_le_bytes(read_word(r)?);
    let side = f64::from_le_bytes(read_word(r)?);
    if dim == 0 || dim > 8 || n > 1 << 20 {
        return Err(Error::Format(format!("implausible header d={dim} n={n}")));
    }
    let lattice = TorusLattice::new(dim as usize, n as usize, side)
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let count = lattice.num_sites();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(f64::from_le_bytes(read_word(r)?));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after lattice data".into()));
    }
    Ok((lattice, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FieldSample, SourceField};

    #[test]
    fn roundtrip_in_memory() {
        let lat = TorusLattice::new(3, 4, 2.5).unwrap();
        let values: Vec<f64> = (0..64).map(|i| (i as f64).sqrt() - 3.0).collect();
        let mut buf = Vec::new();
        write_lattice_values(&mut buf, &lat, &values).unwrap();
        assert_eq!(buf.len(), 24 + 64 * 8);
        let (lat2, values2) = read_lattice_values(&mut buf.as_slice()).unwrap();
        assert_eq!(lat, lat2);
        assert_eq!(values, values2);
    }

    #[test]
    fn rejects_truncated_and_trailing() {
        let lat = TorusLattice::new(1, 4, 1.0).unwrap();
        let mut buf = Vec::new();
        write_lattice_values(&mut buf, &lat, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(read_lattice_values(&mut &buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(read_lattice_values(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let lat = TorusLattice::new(2, 8, 3.0).unwrap();
        let phi = FieldSample::new(lat, (0..64).map(|i| i as f64 * 0.5).collect(), Some(3));
        let path = dir.path().join("phi.bin");
        phi.save(&path).unwrap();
        let back = FieldSample::load(&path).unwrap();
        assert_eq!(back.values(), phi.values());
        let j = SourceField::delta(lat, 5);
        let jpath = dir.path().join("j.bin");
        j.save(&jpath).unwrap();
        assert_eq!(SourceField::load(&jpath).unwrap().values(), j.values());
    }
}
