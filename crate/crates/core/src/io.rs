//! Track annotation JSON, binary PNM rasters and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};
use crate::image::FrameImage;
use crate::metrics::TrackAnnotation;

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place so that readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackFile {
    version: u64,
    width: usize,
    height: usize,
    frames: Vec<FrameEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameEntry {
    points: Vec<[f64; 2]>,
    /// Missing means every point is visible.
    visible: Option<Vec<bool>>,
}

/// Renders the version-1 track document. Coordinates carry 17 significant
/// digits, enough to reproduce every `f64` exactly.
pub fn track_to_json(track: &TrackAnnotation) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{{\n  \"version\": 1,\n  \"width\": {},\n  \"height\": {},\n  \"frames\": [",
        track.width, track.height
    );
    for (t, f) in track.frames.iter().enumerate() {
        s.push_str(if t == 0 { "\n" } else { ",\n" });
        s.push_str("    {\"points\": [");
        for (i, p) in f.points().iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "[{:.16e}, {:.16e}]", p.x, p.y);
        }
        s.push_str("], \"visible\": [");
        for (i, v) in f.visible().iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(if *v { "true" } else { "false" });
        }
        s.push_str("]}");
    }
    s.push_str("\n  ]\n}\n");
    s
}

/// Parses a version-1 track document.
pub fn track_from_json(text: &str) -> Result<TrackAnnotation> {
    let file: TrackFile =
        serde_json::from_str(text).map_err(|e| Error::parse("track file", e.to_string()))?;
    if file.version != 1 {
        return Err(Error::Schema(format!(
            "version: expected 1, found {}",
            file.version
        )));
    }
    let mut frames = Vec::with_capacity(file.frames.len());
    for (t, f) in file.frames.into_iter().enumerate() {
        let n = f.points.len();
        let visible = f.visible.unwrap_or_else(|| vec![true; n]);
        if visible.len() != n {
            return Err(Error::Schema(format!(
                "frames[{t}].visible: {} flags for {n} points",
                visible.len()
            )));
        }
        if f.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("frames[{t}].points: non-finite coordinate")));
        }
        let points = f.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
        frames.push(PointSet::new(points, visible)?);
    }
    TrackAnnotation::new(file.width, file.height, frames)
}

pub fn save_track(path: &Path, track: &TrackAnnotation) -> Result<()> {
    track.validate()?;
    write_atomic(path, track_to_json(track).as_bytes())
}

pub fn load_track(path: &Path) -> Result<TrackAnnotation> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    track_from_json(&text).map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{} ({context})", path.display()),
            message,
        },
        other => other,
    })
}

/// Encodes a 1-channel image as P5 or a 3-channel image as P6. Samples are
/// scaled by 255, rounded and clamped to a byte.
pub fn pnm_to_bytes(img: &FrameImage) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::UnsupportedFormat(format!(
                "{c}-channel image cannot be stored as PNM"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    Ok(out)
}

/// Decodes binary P5/P6 data with maxval 255; samples become `byte / 255`.
pub fn pnm_from_bytes(bytes: &[u8]) -> Result<FrameImage> {
    let ctx = "pnm";
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(m) => {
            return Err(Error::UnsupportedFormat(format!(
                "magic {:?}",
                String::from_utf8_lossy(m)
            )))
        }
        None => return Err(Error::parse(ctx, "missing magic number")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // whitespace and comments before each header number
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let name = ["width", "height", "maxval"][k];
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(ctx, format!("bad {name} in header")))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::parse(ctx, "header not terminated by whitespace"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval}")));
    }
    let need = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::parse(ctx, "dimensions overflow"))?;
    let payload = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::parse(ctx, format!("payload has {} of {need} bytes", bytes.len() - pos)))?;
    let data = payload.iter().map(|&b| b as f64 / 255.0).collect();
    FrameImage::from_data(width, height, channels, data)
}

pub fn save_pnm(path: &Path, img: &FrameImage) -> Result<()> {
    write_atomic(path, &pnm_to_bytes(img)?)
}

pub fn load_pnm(path: &Path) -> Result<FrameImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    pnm_from_bytes(&bytes).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

/// `.pgm`/`.ppm` files of a directory in lexicographic file-name order.
pub fn list_pnm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("ppm"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Loads every PNM frame of a directory in file-name order.
pub fn load_frames_dir(dir: &Path) -> Result<Vec<FrameImage>> {
    list_pnm_files(dir)?.iter().map(|p| load_pnm(p)).collect()
}
