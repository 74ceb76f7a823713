//! Tactile fixture files.
//!
//! A header line `# tactile <sensors> <joints>` is followed by one frame per
//! line: the timestamp, the raw sensor values, then the joint context, all
//! separated by whitespace. Blank lines and further `#` lines are ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::TactileFrame;
use crate::error::{Error, Result};

pub fn parse_tactile(text: &str, path: &Path) -> Result<Vec<TactileFrame>> {
    let err = |line: usize, message: String| Error::Recording {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut dims: Option<(usize, usize)> = None;
    let mut frames: Vec<TactileFrame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if dims.is_none() && parts.next() == Some("tactile") {
                let mut num = || -> Result<usize> {
                    parts
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(|| err(line, "header needs sensor and joint counts".into()))
                };
                dims = Some((num()?, num()?));
            }
            continue;
        }
        let (s, j) = dims.ok_or_else(|| err(line, "frame before `# tactile` header".into()))?;
        let values: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| err(line, format!("`{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != 1 + s + j {
            return Err(err(line, format!("expected {} fields, found {}", 1 + s + j, values.len())));
        }
        let timestamp = values[0];
        if let Some(prev) = frames.last() {
            if timestamp <= prev.timestamp {
                return Err(err(line, format!("timestamp {timestamp} does not follow {}", prev.timestamp)));
            }
        }
        frames.push(TactileFrame {
            timestamp,
            values: values[1..1 + s].to_vec(),
            joint_context: values[1 + s..].to_vec(),
        });
    }
    Ok(frames)
}

pub fn read_tactile(path: impl AsRef<Path>) -> Result<Vec<TactileFrame>> {
    let path = path.as_ref();
    parse_tactile(&fs::read_to_string(path)?, path)
}

pub fn write_tactile<W: Write>(mut out: W, frames: &[TactileFrame]) -> Result<()> {
    let (s, j) = frames
        .first()
        .map_or((0, 0), |f| (f.values.len(), f.joint_context.len()));
    writeln!(out, "# tactile {s} {j}")?;
    for f in frames {
        write!(out, "{}", f.timestamp)?;
        for v in f.values.iter().chain(&f.joint_context) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let frames = vec![
            TactileFrame {
                timestamp: 0.0,
                values: vec![1.5, 2.0],
                joint_context: vec![0.1],
            },
            TactileFrame {
                timestamp: 0.01,
                values: vec![0.1 + 0.2, -3.0],
                joint_context: vec![1e-17],
            },
        ];
        let mut buf = Vec::new();
        write_tactile(&mut buf, &frames).unwrap();
        let back = parse_tactile(std::str::from_utf8(&buf).unwrap(), Path::new("x")).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn bad_lines_are_reported() {
        let e = parse_tactile("# tactile 1 0\n0 1\n0 2\n", Path::new("f")).unwrap_err();
        assert!(e.to_string().contains("f:3"), "{e}");
        let e = parse_tactile("# tactile 2 0\n0 1\n", Path::new("f")).unwrap_err();
        assert!(e.to_string().contains("f:2"), "{e}");
        assert!(parse_tactile("", Path::new("f")).unwrap().is_empty());
    }
}
