//! Newline-delimited JSON sample frames.
//!
//! Each line is `{"step":n,"positions":[[x,y,z],...]}` with `d` coordinates
//! per particle.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{BoxSpec, Configuration, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: u64,
    pub positions: Vec<Vec<f64>>,
}

impl Frame {
    pub fn from_points(step: u64, points: &[Point], d: usize) -> Self {
        Frame { step, positions: points.iter().map(|p| p[..d].to_vec()).collect() }
    }

    pub fn points(&self) -> Result<Vec<Point>> {
        self.positions
            .iter()
            .map(|p| {
                if p.is_empty() || p.len() > 3 {
                    return Err(Error::InvalidConfiguration(format!(
                        "frame {}: point with {} coordinates",
                        self.step,
                        p.len()
                    )));
                }
                let mut x = [0.0; 3];
                x[..p.len()].copy_from_slice(p);
                Ok(x)
            })
            .collect()
    }

    /// Dimension of the stored points, `None` for an empty frame.
    pub fn dim(&self) -> Option<usize> {
        self.positions.first().map(Vec::len)
    }

    pub fn to_configuration(&self, bx: BoxSpec) -> Result<Configuration> {
        if let Some(d) = self.dim() {
            if d != bx.d() {
                return Err(Error::InvalidConfiguration(format!(
                    "frame {} has dimension {d}, box has {}",
                    self.step,
                    bx.d()
                )));
            }
        }
        Configuration::new(bx, self.points()?)
    }
}

pub fn write_frames<W: Write>(mut w: W, frames: &[Frame]) -> Result<()> {
    for f in frames {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_frames<R: BufRead>(r: R) -> Result<Vec<Frame>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn read_frames_file(path: &Path) -> Result<Vec<Frame>> {
    Ok(read_frames_with_header(BufReader::new(File::open(path)?))?.1)
}

/// Optional first line of a frames file, carrying the producing run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramesHeader {
    pub format_version: String,
    pub config: serde_json::Value,
}

pub fn write_frames_with_header<W: Write>(mut w: W, header: &FramesHeader, frames: &[Frame]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    write_frames(w, frames)
}

/// Reads frames, splitting off a leading header line if there is one.
pub fn read_frames_with_header<R: BufRead>(r: R) -> Result<(Option<FramesHeader>, Vec<Frame>)> {
    let mut header = None;
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if out.is_empty() && header.is_none() && line.contains("\"format_version\"") {
            header = Some(serde_json::from_str(&line)?);
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok((header, out))
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so a failure never leaves a partial artifact behind.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(&mut tmp);
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
