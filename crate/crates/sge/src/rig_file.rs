//! Rig description files.
//!
//! The rig is a `key = value` text file:
//!
//! ```text
//! # desk rig
//! focal_length_px = 1000
//! baseline_mm = 150
//! cam_width = 1280
//! cam_height = 720
//! proj_width = 1280
//! proj_height = 720
//! cam_remap = cam.sgrm     # optional, relative to this file
//! ```
//!
//! Remap tables are binary: the magic `SGRM`, little-endian `u32` width and
//! height, then row-major `f32` `(x, y)` source coordinates. NaN marks an
//! invalid entry.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sge_core::{RectifiedRig, RemapTable};

use crate::error::{Error, Result};

pub const REMAP_MAGIC: &[u8; 4] = b"SGRM";

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(path: &Path, text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, kv: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = kv
        .get(key)
        .ok_or_else(|| Error::Usage(format!("{}: missing `{key}`", path.display())))?;
    raw.parse()
        .map_err(|_| Error::Usage(format!("{}: bad value `{raw}` for `{key}`", path.display())))
}

pub fn read_rig(path: &Path) -> Result<RectifiedRig> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let kv = parse_key_values(path, &text)?;
    let mut rig = RectifiedRig::new(
        field(path, &kv, "focal_length_px")?,
        field(path, &kv, "baseline_mm")?,
        (field(path, &kv, "cam_width")?, field(path, &kv, "cam_height")?),
        (field(path, &kv, "proj_width")?, field(path, &kv, "proj_height")?),
    )?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(rel) = kv.get("cam_remap") {
        rig = rig.with_cam_remap(read_remap(&base.join(rel))?)?;
    }
    if let Some(rel) = kv.get("proj_remap") {
        rig = rig.with_proj_remap(read_remap(&base.join(rel))?)?;
    }
    Ok(rig)
}

/// Writes the scalar rig parameters. Remap tables are written next to the
/// rig file when present.
pub fn write_rig(path: &Path, rig: &RectifiedRig) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("focal_length_px = {}\n", rig.focal_length_px()));
    text.push_str(&format!("baseline_mm = {}\n", rig.baseline_mm()));
    let (cw, ch) = rig.cam_dims();
    let (pw, ph) = rig.proj_dims();
    text.push_str(&format!("cam_width = {cw}\ncam_height = {ch}\nproj_width = {pw}\nproj_height = {ph}\n"));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("rig");
    for (label, remap) in [("cam", rig.cam_remap()), ("proj", rig.proj_remap())] {
        if let Some(table) = remap {
            let name = format!("{stem}_{label}.sgrm");
            write_remap(&path.with_file_name(&name), table)?;
            text.push_str(&format!("{label}_remap = {name}\n"));
        }
    }
    fs::write(path, text).map_err(Error::io(path))
}

pub fn read_remap(path: &Path) -> Result<RemapTable> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let bad = |message: &str| Error::Parse {
        path: PathBuf::from(path),
        line: 0,
        message: message.into(),
    };
    if bytes.len() < 12 || &bytes[..4] != REMAP_MAGIC {
        return Err(bad("not a remap table (bad magic)"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != width * height * 8 {
        return Err(bad(&format!(
            "expected {} coordinate bytes for {width}x{height}, found {}",
            width * height * 8,
            body.len()
        )));
    }
    let coords = body
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes(c[..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..].try_into().unwrap()),
            ]
        })
        .collect();
    Ok(RemapTable::new(width, height, coords)?)
}

pub fn write_remap(path: &Path, table: &RemapTable) -> Result<()> {
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        w.write_all(REMAP_MAGIC)?;
        w.write_all(&(table.width() as u32).to_le_bytes())?;
        w.write_all(&(table.height() as u32).to_le_bytes())?;
        for [x, y] in table.coords() {
            w.write_all(&x.to_le_bytes())?;
            w.write_all(&y.to_le_bytes())?;
        }
        w.flush()
    };
    write().map_err(Error::io(path))
}
