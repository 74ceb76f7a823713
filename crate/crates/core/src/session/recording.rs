//! Line-oriented recording files.
//!
//! ```text
//! # keypoints 5 thumb_tip index_tip middle_tip ring_tip pinky_tip
//! <t> L <px> <py> <pz> <qw> <qx> <qy> <qz> <k1x> <k1y> <k1z> … R <px> …
//! ```
//!
//! The header fixes the keypoint count and labels. Each following line is
//! one bimanual frame: a timestamp, then one block per present hand, each
//! block a side tag (`L` or `R`), the wrist position, the wrist quaternion
//! `(w, x, y, z)` and the keypoints in wrist coordinates. Timestamps must
//! strictly increase. Blank lines and other `#` lines are ignored.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::Vector3;

use super::{BimanualFrame, HandFrame, HandSide};
use crate::error::{Error, Result};
use crate::kinematics::Pose;

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub keypoint_labels: Arc<[String]>,
    pub frames: Vec<BimanualFrame>,
}

impl Recording {
    pub fn new(keypoint_labels: Vec<String>) -> Self {
        Self {
            keypoint_labels: keypoint_labels.into(),
            frames: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub fn parse_recording(text: &str, path: &Path) -> Result<Recording> {
    let err = |line: usize, message: String| Error::Recording {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut labels: Option<Arc<[String]>> = None;
    let mut frames: Vec<BimanualFrame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if labels.is_none() && parts.next() == Some("keypoints") {
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| err(line, "header needs a keypoint count".into()))?;
                let names: Vec<String> = parts.map(str::to_string).collect();
                if names.len() != count {
                    return Err(err(line, format!("header declares {count} keypoints but names {}", names.len())));
                }
                labels = Some(names.into());
            }
            continue;
        }
        let labels = labels
            .clone()
            .ok_or_else(|| err(line, "frame before `# keypoints` header".into()))?;
        let frame = parse_frame(l, &labels).map_err(|m| err(line, m))?;
        if let Some(prev) = frames.last() {
            if frame.timestamp <= prev.timestamp {
                return Err(err(
                    line,
                    format!("timestamp {} does not follow {}", frame.timestamp, prev.timestamp),
                ));
            }
        }
        frames.push(frame);
    }
    Ok(Recording {
        keypoint_labels: labels.unwrap_or_else(|| Vec::new().into()),
        frames,
    })
}

fn parse_frame(line: &str, labels: &Arc<[String]>) -> std::result::Result<BimanualFrame, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let timestamp: f64 = tokens[0]
        .parse()
        .map_err(|e| format!("timestamp `{}`: {e}", tokens[0]))?;
    if !timestamp.is_finite() {
        return Err(format!("timestamp {timestamp} is not finite"));
    }
    let rest = &tokens[1..];
    let block = 1 + 7 + 3 * labels.len();
    if rest.is_empty() || rest.len() % block != 0 || rest.len() > 2 * block {
        return Err(format!(
            "expected one or two hand blocks of {block} fields, found {} fields",
            rest.len()
        ));
    }
    let mut frame = BimanualFrame {
        timestamp,
        left: None,
        right: None,
    };
    for chunk in rest.chunks(block) {
        let side = HandSide::from_tag(chunk[0]).ok_or_else(|| format!("unknown side tag `{}`", chunk[0]))?;
        let v: Vec<f64> = chunk[1..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let wrist = Pose::from_wxyz([v[0], v[1], v[2]], [v[3], v[4], v[5], v[6]]).map_err(|e| e.to_string())?;
        let keypoints = v[7..].chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        let hand = HandFrame {
            timestamp,
            side,
            wrist,
            keypoints,
            keypoint_labels: labels.clone(),
        };
        let slot = match side {
            HandSide::Left => &mut frame.left,
            HandSide::Right => &mut frame.right,
        };
        if slot.is_some() {
            return Err(format!("{side} hand appears twice"));
        }
        *slot = Some(hand);
    }
    Ok(frame)
}

/// Loads a recording, rejecting the whole file on the first bad line.
pub fn replay_load(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    parse_recording(&fs::read_to_string(path)?, path)
}

pub fn write_recording<W: Write>(mut out: W, recording: &Recording) -> Result<()> {
    write!(out, "# keypoints {}", recording.keypoint_labels.len())?;
    for l in recording.keypoint_labels.iter() {
        write!(out, " {l}")?;
    }
    writeln!(out)?;
    for f in &recording.frames {
        write!(out, "{}", f.timestamp)?;
        for hand in [&f.left, &f.right].into_iter().flatten() {
            let p = hand.wrist.position;
            let q = hand.wrist.wxyz();
            write!(out, " {} {} {} {}", hand.side.tag(), p.x, p.y, p.z)?;
            write!(out, " {} {} {} {}", q[0], q[1], q[2], q[3])?;
            for k in &hand.keypoints {
                write!(out, " {} {} {}", k.x, k.y, k.z)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_recording(path: impl AsRef<Path>, recording: &Recording) -> Result<()> {
    let mut buf = Vec::new();
    write_recording(&mut buf, recording)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Paces frames to their recorded timestamps scaled by `1 / rate`
/// (`rate = 2` plays twice as fast). A non-positive or infinite rate
/// disables pacing.
#[derive(Debug)]
pub struct ReplayStream<'a> {
    frames: std::slice::Iter<'a, BimanualFrame>,
    rate: f64,
    origin: Option<(Instant, f64)>,
}

impl<'a> ReplayStream<'a> {
    pub fn new(recording: &'a Recording, rate: f64) -> Self {
        Self {
            frames: recording.frames.iter(),
            rate,
            origin: None,
        }
    }
}

impl<'a> Iterator for ReplayStream<'a> {
    type Item = &'a BimanualFrame;

    fn next(&mut self) -> Option<Self::Item> {
        let frame = self.frames.next()?;
        if self.rate > 0.0 && self.rate.is_finite() {
            let (start, t0) = *self.origin.get_or_insert((Instant::now(), frame.timestamp));
            let due = start + Duration::from_secs_f64((frame.timestamp - t0) / self.rate);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        Some(frame)
    }
}
