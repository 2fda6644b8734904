//! Raster and text-grid outputs.
//!
//! * Patterns: binary PBM (`P4`), lit columns white.
//! * Code images: 16-bit PGM, invalid pixels 65535.
//! * Depth maps: 16-bit PGM in whole millimetres, invalid pixels 0.
//! * Text grids: a `width height` line, then one row per line with `nan`
//!   for invalid entries. Values are written so they parse back exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sge_core::{DepthEncodedImage, DepthMap, DisparityMap, Grid};

use crate::error::{Error, Result};

pub const INVALID_CODE_PGM: u16 = u16::MAX;

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(Error::io(path))?))
}

pub fn write_pbm(path: &Path, pattern: &Grid<bool>) -> Result<()> {
    let mut w = create(path)?;
    let (width, height) = pattern.dims();
    let mut write = || -> std::io::Result<()> {
        write!(w, "P4\n{width} {height}\n")?;
        let mut row = vec![0u8; width.div_ceil(8)];
        for y in 0..height {
            row.fill(0);
            for (x, &lit) in pattern.row(y).iter().enumerate() {
                // PBM 1 is black.
                if !lit {
                    row[x / 8] |= 0x80 >> (x % 8);
                }
            }
            w.write_all(&row)?;
        }
        w.flush()
    };
    write().map_err(Error::io(path))
}

fn write_pgm16(path: &Path, dims: (usize, usize), values: impl Iterator<Item = u16>) -> Result<()> {
    let mut w = create(path)?;
    let write = || -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n65535\n", dims.0, dims.1)?;
        for v in values {
            w.write_all(&v.to_be_bytes())?;
        }
        w.flush()
    };
    write().map_err(Error::io(path))
}

pub fn write_code_pgm(path: &Path, image: &DepthEncodedImage) -> Result<()> {
    let values = image.codes().as_slice().iter().map(|c| match c {
        Some(c) => (*c).min(u32::from(INVALID_CODE_PGM) - 1) as u16,
        None => INVALID_CODE_PGM,
    });
    write_pgm16(path, image.dims(), values)
}

pub fn write_depth_pgm(path: &Path, depth: &DepthMap) -> Result<()> {
    let values = depth.values().iter().map(|d| match d {
        Some(d) => d.round().clamp(1.0, 65535.0) as u16,
        None => 0,
    });
    write_pgm16(path, depth.dims(), values)
}

fn write_text_grid<T>(path: &Path, grid: &Grid<Option<T>>, fmt: impl Fn(&T) -> String) -> Result<()> {
    let mut w = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{} {}", grid.width(), grid.height())?;
        for y in 0..grid.height() {
            let mut line = String::new();
            for (x, v) in grid.row(y).iter().enumerate() {
                if x > 0 {
                    line.push(' ');
                }
                match v {
                    Some(v) => line.push_str(&fmt(v)),
                    None => line.push_str("nan"),
                }
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    };
    write().map_err(Error::io(path))
}

pub fn write_depth_text(path: &Path, depth: &DepthMap) -> Result<()> {
    write_text_grid(path, depth.grid(), f64::to_string)
}

pub fn write_disparity_text(path: &Path, disparity: &DisparityMap) -> Result<()> {
    write_text_grid(path, disparity.grid(), f64::to_string)
}

pub fn write_codes_text(path: &Path, image: &DepthEncodedImage) -> Result<()> {
    write_text_grid(path, image.codes(), u32::to_string)
}

/// Reads a text grid; `nan` and non-finite values become invalid.
pub fn read_grid_text(path: &Path) -> Result<Grid<Option<f64>>> {
    let file = fs::File::open(path).map_err(Error::io(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };
    let (width, height) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(parse_err(1, "empty file".into()));
        };
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let dims: Vec<usize> = line
            .split_ascii_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(i + 1, format!("expected `width height`, got `{line}`")))?;
        match dims[..] {
            [w, h] => break (w, h),
            _ => return Err(parse_err(i + 1, format!("expected `width height`, got `{line}`"))),
        }
    };
    let mut data = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (i, line) in lines {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        if rows == height {
            return Err(parse_err(i + 1, format!("more than {height} rows")));
        }
        let before = data.len();
        for tok in line.split_ascii_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad value `{tok}`")))?;
            data.push(v.is_finite().then_some(v));
        }
        if data.len() - before != width {
            return Err(parse_err(i + 1, format!("expected {width} values, found {}", data.len() - before)));
        }
        rows += 1;
    }
    if rows != height {
        return Err(parse_err(0, format!("expected {height} rows, found {rows}")));
    }
    Ok(Grid::from_vec(width, height, data)?)
}

pub fn read_depth_text(path: &Path) -> Result<DepthMap> {
    Ok(DepthMap::from_grid(read_grid_text(path)?))
}
