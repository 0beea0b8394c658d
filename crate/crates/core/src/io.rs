//! Raster export (CSV, 16-bit PGM) and CSV re-import.
//!
//! CSV layout: `#`-prefixed header lines (tool version, channel, grid
//! geometry, provenance), then one `x,y,value` row per pixel in row-major
//! order (x fastest, starting at the lowest y). Numbers use 17 significant
//! digits, missing pixels have an empty value field, lines end with LF.
//!
//! PGM layout: binary `P5`, maxval 65535, big-endian samples, top image row
//! = highest y. Values map linearly from the channel's display range to
//! `[0, 65535]`; missing pixels are written as 0 and flagged in a sidecar
//! mask (`<stem>.mask.pgm`, 65535 = valid, 0 = missing).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scan::{Channel, GridSpec, MapGrid, MapMetadata};

pub const TOOL_VERSION: &str = concat!("g2scatter ", env!("CARGO_PKG_VERSION"));

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header lines shared by every CSV export.
pub fn csv_header(grid: &MapGrid) -> Vec<String> {
    let s = &grid.spec;
    let m = &grid.metadata;
    let mut lines = vec![
        format!("# tool: {TOOL_VERSION}"),
        format!("# channel: {}", grid.channel.name()),
        format!(
            "# grid: origin_x={:?} origin_y={:?} width={:?} height={:?} nx={} ny={}",
            s.origin[0], s.origin[1], s.width, s.height, s.nx, s.ny
        ),
        format!("# seed: {}", m.seed.map_or("none".to_string(), |v| v.to_string())),
        format!("# medium_digest: {}", m.medium_digest),
        format!("# fixed_emitter: {}", m.fixed_emitter),
        format!("# k_ell: {}", m.k_ell.map_or("none".to_string(), |v| format!("{v:?}"))),
    ];
    if let Some(p) = &m.parameters {
        lines.push(format!("# parameters: {p}"));
    }
    lines.push("# columns: x,y,value".to_string());
    lines
}

pub fn write_csv<W: Write>(grid: &MapGrid, mut w: W) -> std::io::Result<()> {
    for line in csv_header(grid) {
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    let s = &grid.spec;
    for iy in 0..s.ny {
        let y = num(s.y(iy));
        for ix in 0..s.nx {
            let v = grid.values[iy * s.nx + ix];
            let v = if v.is_nan() { String::new() } else { num(v) };
            writeln!(w, "{},{},{}", num(s.x(ix)), y, v)?;
        }
    }
    Ok(())
}

pub fn export_csv(grid: &MapGrid, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    write_csv(grid, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn parse_channel(s: &str) -> Option<Channel> {
    [Channel::G2, Channel::Ldos, Channel::Cdos, Channel::Classification].into_iter().find(|c| c.name() == s)
}

/// Reads a raster written by [`export_csv`].
pub fn import_csv(path: &Path) -> Result<MapGrid> {
    let f = File::open(path).map_err(io_err(path))?;
    read_csv(BufReader::new(f), path)
}

/// Parses CSV raster text; `path` only labels errors.
pub fn read_csv<R: BufRead>(reader: R, path: &Path) -> Result<MapGrid> {
    let bad = |msg: &str| Error::Config(format!("{}: {msg}", path.display()));
    let mut channel = None;
    let mut spec: Option<GridSpec> = None;
    let mut meta = MapMetadata::default();
    let mut values = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err(path))?;
        if let Some(h) = line.strip_prefix("# ") {
            let (key, val) = h.split_once(": ").unwrap_or((h, ""));
            match key {
                "channel" => channel = parse_channel(val),
                "grid" => {
                    let mut g = GridSpec { origin: [0.0; 2], width: 0.0, height: 0.0, nx: 0, ny: 0 };
                    for kv in val.split_whitespace() {
                        let (k, v) = kv.split_once('=').ok_or_else(|| bad("malformed grid header"))?;
                        let f = || v.parse::<f64>().map_err(|_| bad("malformed grid header"));
                        let u = || v.parse::<usize>().map_err(|_| bad("malformed grid header"));
                        match k {
                            "origin_x" => g.origin[0] = f()?,
                            "origin_y" => g.origin[1] = f()?,
                            "width" => g.width = f()?,
                            "height" => g.height = f()?,
                            "nx" => g.nx = u()?,
                            "ny" => g.ny = u()?,
                            _ => return Err(bad("unknown grid key")),
                        }
                    }
                    spec = Some(g);
                }
                "seed" => meta.seed = val.parse().ok(),
                "medium_digest" => meta.medium_digest = val.to_string(),
                "fixed_emitter" => meta.fixed_emitter = val.to_string(),
                "k_ell" => meta.k_ell = val.parse().ok(),
                "parameters" => meta.parameters = Some(val.to_string()),
                _ => {}
            }
            continue;
        }
        let field = line.rsplit(',').next().ok_or_else(|| bad("malformed row"))?;
        values.push(if field.is_empty() { f64::NAN } else { field.parse().map_err(|_| bad("malformed value"))? });
    }
    let spec = spec.ok_or_else(|| bad("missing grid header"))?;
    if values.len() != spec.len() {
        return Err(bad("row count does not match grid"));
    }
    Ok(MapGrid { spec, channel: channel.ok_or_else(|| bad("missing channel header"))?, values, metadata: meta })
}

/// Range mapped onto `[0, 65535]`.
pub fn display_range(grid: &MapGrid) -> (f64, f64) {
    match grid.channel {
        Channel::G2 => (0.0, 1.0),
        Channel::Classification => (-1.0, 1.0),
        Channel::Ldos | Channel::Cdos => {
            let (lo, hi) = grid
                .values
                .iter()
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            if lo < hi {
                (lo, hi)
            } else if lo.is_finite() {
                (lo - 0.5, lo + 0.5)
            } else {
                (0.0, 1.0)
            }
        }
    }
}

pub fn to_u16(v: f64, lo: f64, hi: f64) -> u16 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * 65535.0).round() as u16
}

fn write_pgm(path: &Path, nx: usize, ny: usize, comment: &str, samples: impl Iterator<Item = u16>) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    let mut body = Vec::with_capacity(2 * nx * ny);
    for s in samples {
        body.extend_from_slice(&s.to_be_bytes());
    }
    write!(w, "P5\n# {comment}\n{nx} {ny}\n65535\n")
        .and_then(|_| w.write_all(&body))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

/// Sidecar mask path: `dir/name.pgm` -> `dir/name.mask.pgm`.
pub fn mask_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.mask.pgm"))
}

pub fn export_pgm(grid: &MapGrid, path: &Path) -> Result<()> {
    let s = &grid.spec;
    let (lo, hi) = display_range(grid);
    // image rows run top (max y) to bottom
    let order = || (0..s.ny).rev().flat_map(move |iy| (0..s.nx).map(move |ix| grid.values[iy * s.nx + ix]));
    let comment = format!("{} channel {} range [{lo:?}, {hi:?}]", TOOL_VERSION, grid.channel.name());
    write_pgm(path, s.nx, s.ny, &comment, order().map(|v| if v.is_nan() { 0 } else { to_u16(v, lo, hi) }))?;
    write_pgm(
        &mask_path(path),
        s.nx,
        s.ny,
        "mask: 65535 valid, 0 missing",
        order().map(|v| if v.is_nan() { 0 } else { 65535 }),
    )
}
