//! Frame files and CSV tables.
//!
//! A frame is stored as a binary 16-bit PGM (`P5`, maxval 65535, big-endian
//! samples) next to a `.meta` sidecar of `key = value` lines holding the
//! geometry, provenance, the configuration hash and a SHA-256 of the pixel
//! bytes. Reading back what was written is bit-exact.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::simulator::{Frame, FrameGeometry, FrameMeta, SimModel};

pub const MAXVAL: u32 = 65535;
const FORMAT_TAG: &str = "pdc-speckle-frame-1";

/// A frame read from disk together with the hash of the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredFrame {
    pub frame: Frame,
    pub config_hash: String,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Encode counts as a binary PGM. Counts above 65535 are a scaling error.
pub fn encode_pgm(counts: &Array2<u32>) -> Result<Vec<u8>> {
    let (rows, cols) = counts.dim();
    let header = format!("P5\n{cols} {rows}\n{MAXVAL}\n");
    let mut out = Vec::with_capacity(header.len() + 2 * rows * cols);
    out.extend_from_slice(header.as_bytes());
    for &v in counts.iter() {
        if v > MAXVAL {
            return Err(Error::Scaling { value: v });
        }
        out.extend_from_slice(&(v as u16).to_be_bytes());
    }
    Ok(out)
}

/// Decode a 16-bit binary PGM.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Array2<u32>> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P5" {
        return Err(format_err(path, format!("magic `{}` is not P5", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format_err(path, format!("bad header field `{s}`")))
    };
    let (cols, rows, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != MAXVAL as usize {
        return Err(format_err(path, format!("maxval {maxval}, expected {MAXVAL}")));
    }
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != 2 * rows * cols {
        return Err(format_err(
            path,
            format!("raster has {} bytes, expected {}", body.len(), 2 * rows * cols),
        ));
    }
    let data = body
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
        .collect();
    Array2::from_shape_vec((rows, cols), data).map_err(|e| format_err(path, e.to_string()))
}

fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("meta")
}

fn sidecar_text(frame: &Frame, config_hash: &str, data_hash: &str) -> String {
    let g = &frame.geometry;
    let m = &frame.meta;
    let entries: Vec<(&str, String)> = vec![
        ("format", FORMAT_TAG.into()),
        ("rows", frame.rows().to_string()),
        ("cols", frame.cols().to_string()),
        ("grid_nx", g.grid.n_x.to_string()),
        ("grid_ny", g.grid.n_y.to_string()),
        ("dq", g.grid.dq.to_string()),
        ("focal", g.grid.focal_f.to_string()),
        ("pixel_pitch", g.grid.pixel_pitch.to_string()),
        ("wavelength", g.grid.wavelength.to_string()),
        ("bin", g.bin.to_string()),
        ("block_rows", g.block_rows.to_string()),
        ("symmetry_center_row", g.symmetry_center.0.to_string()),
        ("symmetry_center_col", g.symmetry_center.1.to_string()),
        ("signal_q0_row", g.signal_q0.0.to_string()),
        ("signal_q0_col", g.signal_q0.1.to_string()),
        ("g", m.g.to_string()),
        ("wp", m.waist_wp.to_string()),
        ("peak_power", m.peak_power.to_string()),
        ("seed", m.seed.to_string()),
        ("frame_index", m.frame_index.to_string()),
        ("model", m.model.name().into()),
        ("temporal_modes", m.temporal_modes.to_string()),
        ("config_hash", config_hash.into()),
        ("data_sha256", data_hash.into()),
    ];
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Write `frame` as `<dir>/<stem>.pgm` plus its sidecar; returns the PGM path.
pub fn write_frame(frame: &Frame, dir: &Path, stem: &str, config_hash: &str) -> Result<PathBuf> {
    let bytes = encode_pgm(&frame.counts)?;
    let data_hash = hex(&Sha256::digest(&bytes));
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.pgm"));
    fs::write(&path, &bytes)?;
    fs::write(sidecar_path(&path), sidecar_text(frame, config_hash, &data_hash))?;
    Ok(path)
}

/// Read a frame and its sidecar. A pixel hash mismatch is an integrity error.
pub fn read_frame(path: &Path) -> Result<StoredFrame> {
    let bytes = fs::read(path)?;
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::Integrity {
        path: meta_path.clone(),
        reason: format!("missing sidecar: {e}"),
    })?;
    let mut kv = HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err(&meta_path, format!("bad line `{line}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| {
        kv.get(k)
            .map(String::as_str)
            .ok_or_else(|| format_err(&meta_path, format!("missing `{k}`")))
    };
    fn num<T: std::str::FromStr>(s: &str, key: &str, path: &Path) -> Result<T> {
        s.parse().map_err(|_| format_err(path, format!("bad value for `{key}`")))
    }
    let f = |k: &str| -> Result<f64> { num(get(k)?, k, &meta_path) };
    let u = |k: &str| -> Result<usize> { num(get(k)?, k, &meta_path) };

    if get("format")? != FORMAT_TAG {
        return Err(format_err(&meta_path, "unknown sidecar format"));
    }
    let expected = get("data_sha256")?;
    let actual = hex(&Sha256::digest(&bytes));
    if expected != actual {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            reason: "pixel data does not match the sidecar hash".into(),
        });
    }
    let counts = decode_pgm(&bytes, path)?;
    if counts.dim() != (u("rows")?, u("cols")?) {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            reason: "raster shape disagrees with sidecar".into(),
        });
    }
    let grid = ModeGrid {
        n_x: u("grid_nx")?,
        n_y: u("grid_ny")?,
        dq: f("dq")?,
        focal_f: f("focal")?,
        pixel_pitch: f("pixel_pitch")?,
        wavelength: f("wavelength")?,
    };
    let geometry = FrameGeometry {
        grid,
        bin: u("bin")?,
        block_rows: u("block_rows")?,
        cols: u("cols")?,
        symmetry_center: (f("symmetry_center_row")?, f("symmetry_center_col")?),
        signal_q0: (f("signal_q0_row")?, f("signal_q0_col")?),
    };
    let model = match get("model")? {
        "diagonal" => SimModel::DiagonalBogoliubov,
        "split_step" => SimModel::SplitStep,
        other => return Err(format_err(&meta_path, format!("unknown model `{other}`"))),
    };
    let meta = FrameMeta {
        g: f("g")?,
        waist_wp: f("wp")?,
        peak_power: f("peak_power")?,
        seed: num(get("seed")?, "seed", &meta_path)?,
        frame_index: num(get("frame_index")?, "frame_index", &meta_path)?,
        model,
        temporal_modes: u("temporal_modes")?,
    };
    Ok(StoredFrame {
        frame: Frame { counts, geometry, meta },
        config_hash: get("config_hash")?.to_string(),
    })
}

/// Read a frame and require it to come from the configuration with `hash`.
pub fn read_frame_checked(path: &Path, hash: &str) -> Result<StoredFrame> {
    let stored = read_frame(path)?;
    if stored.config_hash != hash {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            reason: format!("config hash {} does not match {hash}", stored.config_hash),
        });
    }
    Ok(stored)
}

/// PGM files in `dir`, sorted by name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    out.sort();
    Ok(out)
}

/// Read every frame in `dir`; all must share one configuration hash.
pub fn read_frames(dir: &Path) -> Result<Vec<StoredFrame>> {
    let paths = list_frames(dir)?;
    if paths.is_empty() {
        return Err(format_err(dir, "no .pgm frames found"));
    }
    let first = read_frame(&paths[0])?;
    let hash = first.config_hash.clone();
    let mut out = vec![first];
    for p in &paths[1..] {
        out.push(read_frame_checked(p, &hash)?);
    }
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
