//! NVF1 binary fields, CSV export and key=value sidecars.

use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::{Grid, Role};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"NVF1";
const HEADER: usize = 24;

pub fn encode(f: &ComplexField) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.l().to_le_bytes());
    out.push(g.role().code());
    out.extend_from_slice(&[0u8; 7]);
    for c in f.data() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ComplexField> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing NVF1 magic".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let role = Role::from_code(bytes[16]).ok_or_else(|| Error::Format(format!("unknown role byte {}", bytes[16])))?;
    if bytes[17..24].iter().any(|&b| b != 0) {
        return Err(Error::Format("non-zero header padding".into()));
    }
    let grid = Grid::new(n, l, role).map_err(|e| Error::Format(e.to_string()))?;
    let want = HEADER + 16 * grid.len();
    if bytes.len() != want {
        return Err(Error::Format(format!("expected {want} bytes, found {}", bytes.len())));
    }
    let data = bytes[HEADER..]
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::new(grid, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_field(path: &Path, f: &ComplexField) -> Result<()> {
    fs::write(path, encode(f))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ComplexField> {
    decode(&fs::read(path)?)
}

/// Columns x1,x2,re,im with 17 significant digits.
pub fn write_csv(path: &Path, f: &ComplexField) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x1,x2,re,im")?;
    for (i, c) in f.data().iter().enumerate() {
        let z = f.grid().point_at(i);
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", z.re, z.im, c.re, c.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metadata(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", no + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_key_values(&fs::read_to_string(path)?)
}
