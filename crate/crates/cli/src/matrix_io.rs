//! The `EABGZ1` dense matrix format: the 6-byte magic, `u64` rows, `u64`
//! cols, then row-major `f64` values, all little-endian.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use eagle_core::Mat;

use crate::error::{CliError, Result};

pub const MATRIX_MAGIC: &[u8; 6] = b"EABGZ1";

pub fn write_matrix<W: Write>(w: &mut W, m: &Mat) -> io::Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for row in m.row_iter() {
        for x in row.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn read_matrix<R: Read>(r: &mut R) -> io::Result<Mat> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(invalid("not an EABGZ1 matrix"));
    }
    let rows = usize::try_from(read_u64(r)?).map_err(|_| invalid("row count too large"))?;
    let cols = usize::try_from(read_u64(r)?).map_err(|_| invalid("column count too large"))?;
    let len = rows.checked_mul(cols).ok_or_else(|| invalid("matrix too large"))?;
    // grow as data arrives so a corrupt header cannot force a huge allocation
    let mut values = Vec::with_capacity(len.min(1 << 20));
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(Mat::from_row_slice(rows, cols, &values))
}

pub fn save_matrix(path: &Path, m: &Mat) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix(&mut w, m)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<Mat> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_matrix(&mut BufReader::new(file)).map_err(|e| CliError::io(path, e))
}
