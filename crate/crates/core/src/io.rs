//! Binary coefficient files.
//!
//! Layout (little-endian): `"NLEF"`, version byte `0x01`, `u32 n`, `u32 d`,
//! kind byte (0 past, 1 future), `f64 eta`, then the coefficients of degrees
//! `2..=d` as `n^k` doubles each in Kronecker order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kron::{checked_pow, CoeffVector};
use crate::polynomial::{EnergyCoefficients, EnergyKind};

pub const MAGIC: [u8; 4] = *b"NLEF";
pub const VERSION: u8 = 1;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn write_coefficients<W: Write>(mut w: W, ec: &EnergyCoefficients) -> Result<()> {
    let n = u32::try_from(ec.n()).map_err(|_| format_err("state dimension does not fit in 32 bits"))?;
    let d = u32::try_from(ec.degree()).map_err(|_| format_err("degree does not fit in 32 bits"))?;
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&[match ec.kind() {
        EnergyKind::Past => 0,
        EnergyKind::Future => 1,
    }])?;
    w.write_all(&ec.eta().to_le_bytes())?;
    for c in ec.coeffs() {
        for v in c.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => format_err(format!("file ends inside the {what}")),
        _ => Error::Io(e),
    })
}

pub fn read_coefficients<R: Read>(mut r: R) -> Result<EnergyCoefficients> {
    let mut header = [0u8; 22];
    read_exact(&mut r, &mut header, "header")?;
    if header[..4] != MAGIC {
        return Err(format_err("bad magic number"));
    }
    if header[4] != VERSION {
        return Err(format_err(format!("unsupported version {}", header[4])));
    }
    let n = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
    let kind = match header[13] {
        0 => EnergyKind::Past,
        1 => EnergyKind::Future,
        other => return Err(format_err(format!("unknown energy kind byte {other}"))),
    };
    let eta = f64::from_le_bytes(header[14..22].try_into().unwrap());
    if n == 0 || d < 2 {
        return Err(format_err(format!("invalid header: n = {n}, d = {d}")));
    }

    let mut coeffs = Vec::with_capacity(d - 1);
    let mut word = [0u8; 8];
    for k in 2..=d {
        let len = checked_pow(n, k).map_err(|_| format_err(format!("n^{k} overflows")))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            read_exact(&mut r, &mut word, "payload")?;
            data.push(f64::from_le_bytes(word));
        }
        coeffs.push(CoeffVector::new(n, k, data)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(format_err("trailing bytes after the payload"));
    }
    EnergyCoefficients::new(n, eta, kind, coeffs)
}

pub fn save_coefficients(path: impl AsRef<Path>, ec: &EnergyCoefficients) -> Result<()> {
    write_coefficients(BufWriter::new(File::create(path)?), ec)
}

pub fn load_coefficients(path: impl AsRef<Path>) -> Result<EnergyCoefficients> {
    read_coefficients(BufReader::new(File::open(path)?))
}
