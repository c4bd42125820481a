//! Matrix file formats.
//!
//! * Binary: the 4-byte magic `KSKM`, then `rows` and `cols` as little-endian
//!   `u64`, then `rows·cols` little-endian IEEE-754 doubles in row-major
//!   order. Round-trips are bit exact.
//! * Matrix Market `array real general` text, column-major as the format
//!   requires. Values are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DenseMatrix, Vector};
use crate::error::{KskError, Result};

pub const KSKM_MAGIC: &[u8; 4] = b"KSKM";

pub fn write_kskm<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    w.write_all(KSKM_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_kskm<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != KSKM_MAGIC {
        return Err(KskError::Format("missing KSKM magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| KskError::Format(format!("{rows}x{cols} overflows")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(KskError::Format(format!(
            "expected {} payload bytes for {rows}x{cols}, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseMatrix::new(rows, cols, data)
}

pub fn write_matrix_market<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            writeln!(w, "{:e}", m.get(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<DenseMatrix> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| KskError::Format("empty Matrix Market file".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(KskError::Format(format!("bad Matrix Market banner: {header}")));
    }
    if fields[2] != "array" || fields[3] != "real" || fields[4] != "general" {
        return Err(KskError::Format(format!(
            "only 'array real general' is supported, got '{} {} {}'",
            fields[2], fields[3], fields[4]
        )));
    }

    let mut body = lines.filter(|l| match l {
        Ok(s) => {
            let t = s.trim();
            !t.is_empty() && !t.starts_with('%')
        }
        Err(_) => true,
    });
    let size = body.next().ok_or_else(|| KskError::Format("missing size line".into()))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| KskError::Format(format!("bad size line: {size}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(KskError::Format(format!("size line needs two entries: {size}")));
    };

    let mut col_major = Vec::with_capacity(rows * cols);
    for line in body {
        let line = line?;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| KskError::Format(format!("bad value: {tok}")))?;
            col_major.push(v);
        }
    }
    if col_major.len() != rows * cols {
        return Err(KskError::Format(format!(
            "expected {} values for {rows}x{cols}, found {}",
            rows * cols,
            col_major.len()
        )));
    }
    let mut data = vec![0.0; rows * cols];
    for j in 0..cols {
        for i in 0..rows {
            data[i * cols + j] = col_major[j * rows + i];
        }
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn save_kskm(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_kskm(BufWriter::new(File::create(path)?), m)
}

pub fn save_matrix_market(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_matrix_market(BufWriter::new(File::create(path)?), m)
}

/// Loads either format, chosen by the leading bytes of the file.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let mut reader = BufReader::new(File::open(path)?);
    let head = reader.fill_buf()?;
    if head.starts_with(KSKM_MAGIC) {
        read_kskm(reader)
    } else {
        read_matrix_market(reader)
    }
}

/// Loads a vector stored as an `n × 1` (or `1 × n`) matrix.
pub fn load_vector(path: impl AsRef<Path>) -> Result<Vector> {
    let m = load_matrix(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(KskError::Format(format!("expected a vector, found a {}x{} matrix", m.rows(), m.cols())));
    }
    Vector::new(m.into_data())
}

pub fn save_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    save_kskm(path, &DenseMatrix::new(v.len(), 1, v.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kskm_layout() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_kskm(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"KSKM");
        assert_eq!(&buf[4..12], &1u64.to_le_bytes());
        assert_eq!(&buf[12..20], &3u64.to_le_bytes());
        assert_eq!(&buf[20..28], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 20 + 24);
    }

    #[test]
    fn kskm_rejects_truncated_and_foreign_input() {
        let m = DenseMatrix::identity(2);
        let mut buf = Vec::new();
        write_kskm(&mut buf, &m).unwrap();
        assert!(read_kskm(&buf[..buf.len() - 1]).is_err());
        assert!(read_kskm(&b"NOPE0000000000000000"[..]).is_err());
    }

    #[test]
    fn matrix_market_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n% comment\n2 3\n1\n4\n2\n5\n3\n6\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
        assert!(read_matrix_market("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n".as_bytes()).is_err());
        assert!(read_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n".as_bytes()).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
    }

    proptest! {
        #[test]
        fn both_formats_round_trip_bit_exact(rows in 1usize..6, cols in 1usize..6, vals in prop::collection::vec(finite(), 36)) {
            let m = DenseMatrix::new(rows, cols, vals[..rows * cols].to_vec()).unwrap();
            let mut bin = Vec::new();
            write_kskm(&mut bin, &m).unwrap();
            let back = read_kskm(&bin[..]).unwrap();
            prop_assert!(back.data().iter().zip(m.data()).all(|(a, b)| a.to_bits() == b.to_bits()));

            let mut txt = Vec::new();
            write_matrix_market(&mut txt, &m).unwrap();
            let back = read_matrix_market(&txt[..]).unwrap();
            prop_assert!(back.data().iter().zip(m.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
