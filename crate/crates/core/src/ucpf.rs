//! The UCPF binary field container.
//!
//! Layout: `b"UCPF"`, u32 version (1), u64 n, f64 center_x, f64 center_y,
//! f64 half_side, u8 dtype (0 real, 1 complex), then `n²` little-endian f64
//! values (re, im pairs for complex), row-major from the bottom-left cell.
//! Only square grids can be stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::field::{ComplexField, Grid, RealField, C64};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"UCPF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum UcpfField {
    Real(RealField),
    Complex(ComplexField),
}

impl UcpfField {
    pub fn grid(&self) -> &Grid {
        match self {
            UcpfField::Real(f) => f.grid(),
            UcpfField::Complex(f) => f.grid(),
        }
    }

    pub fn into_real(self) -> Result<RealField> {
        match self {
            UcpfField::Real(f) => Ok(f),
            UcpfField::Complex(_) => Err(Error::Format("expected a real field, found complex".into())),
        }
    }

    pub fn into_complex(self) -> ComplexField {
        match self {
            UcpfField::Real(f) => f.to_complex(),
            UcpfField::Complex(f) => f,
        }
    }
}

fn header(w: &mut impl Write, g: &Grid, dtype: u8) -> Result<()> {
    if !g.is_square() {
        return Err(Error::Format(format!("UCPF stores square grids only, got {}x{}", g.nx, g.ny)));
    }
    let c = g.center();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    for v in [c.re, c.im, g.half_side()] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[dtype])?;
    Ok(())
}

pub fn write_real(w: &mut impl Write, f: &RealField) -> Result<()> {
    header(w, f.grid(), 0)?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_complex(w: &mut impl Write, f: &ComplexField) -> Result<()> {
    header(w, f.grid(), 1)?;
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write(w: &mut impl Write, f: &UcpfField) -> Result<()> {
    match f {
        UcpfField::Real(f) => write_real(w, f),
        UcpfField::Complex(f) => write_complex(w, f),
    }
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read(r: &mut impl Read) -> Result<UcpfField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a UCPF file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported UCPF version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8);
    if n > 1 << 16 {
        return Err(Error::Format(format!("implausible grid size {n}")));
    }
    let n = n as usize;
    let (cx, cy, half) = (read_f64(r)?, read_f64(r)?, read_f64(r)?);
    let mut dtype = [0u8; 1];
    r.read_exact(&mut dtype)?;
    let grid = Grid::square(C64::new(cx, cy), half, n)?;
    match dtype[0] {
        0 => {
            let values = (0..n * n).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
            Ok(UcpfField::Real(RealField::new(grid, values)?))
        }
        1 => {
            let values = (0..n * n)
                .map(|_| Ok(C64::new(read_f64(r)?, read_f64(r)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(UcpfField::Complex(ComplexField::new(grid, values)?))
        }
        d => Err(Error::Format(format!("unknown dtype {d}"))),
    }
}

pub fn save(path: impl AsRef<Path>, f: &UcpfField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<UcpfField> {
    read(&mut BufReader::new(File::open(path)?))
}
