//! Pose CSV ingest: parsing, occlusion interpolation and frame-rate reduction.
//!
//! Pose file layout (one file per video):
//!
//! ```text
//! frame_index,keypoint_id,x,y,z,visible
//! 0,0,512.25,130.5,-0.31,1
//! ```
//!
//! Keypoints absent from a frame are treated as not visible. Coordinates of a
//! not-visible keypoint may be left empty.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::debug;

use crate::error::{Error, Result};
use crate::pose::{
    Direction, GaitClass, Keypoint, PoseFrame, PoseSequence, VideoMeta, View, KEYPOINT_NAMES,
    NUM_KEYPOINTS,
};

pub const POSE_HEADER: [&str; 6] = ["frame_index", "keypoint_id", "x", "y", "z", "visible"];
pub const MANIFEST_HEADER: [&str; 7] = [
    "video_id",
    "subject_id",
    "gait_class",
    "view",
    "direction",
    "source_fps",
    "path",
];

pub const TARGET_FPS: f64 = 30.0;

/// Parses a pose CSV file. See [`read_pose_csv`].
pub fn parse_pose_csv(path: &Path, meta: VideoMeta) -> Result<PoseSequence> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pose_csv(file, path, meta)
}

/// Reads pose rows, drops frames without any detected keypoint and
/// re-indexes the remaining frames densely from 0 in frame order.
pub fn read_pose_csv<R: Read>(reader: R, path: &Path, meta: VideoMeta) -> Result<PoseSequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let headers = rdr.headers()?.clone();
    if headers.iter().ne(POSE_HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header '{}'", POSE_HEADER.join(",")),
        ));
    }

    let mut frames: BTreeMap<u32, (PoseFrame, u64)> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(parse_err(line, e.to_string())),
        }
        let line = record.position().map_or(line, |p| p.line());
        if record.len() != 6 {
            return Err(parse_err(line, format!("expected 6 fields, found {}", record.len())));
        }
        let frame_index: u32 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad frame_index '{}'", &record[0])))?;
        let kp: usize = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad keypoint_id '{}'", &record[1])))?;
        if kp >= NUM_KEYPOINTS {
            return Err(Error::Schema(format!(
                "{}: line {line}: keypoint_id {kp} outside 0..{}",
                path.display(),
                NUM_KEYPOINTS - 1
            )));
        }
        let visible = match &record[5] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(line, format!("visible must be 0 or 1, got '{other}'"))),
        };
        let mut coords = [0.0; 3];
        for (axis, slot) in coords.iter_mut().enumerate() {
            let field = &record[2 + axis];
            if field.is_empty() && !visible {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("bad coordinate '{field}'")))?;
            if !v.is_finite() {
                if visible {
                    return Err(parse_err(line, "visible keypoint with non-finite coordinate".into()));
                }
                continue;
            }
            *slot = v;
        }

        let (frame, seen) = frames
            .entry(frame_index)
            .or_insert_with(|| (PoseFrame::empty(frame_index), 0));
        if *seen & (1 << kp) != 0 {
            return Err(Error::Schema(format!(
                "{}: line {line}: duplicate keypoint {kp} in frame {frame_index}",
                path.display()
            )));
        }
        *seen |= 1 << kp;
        frame.keypoints[kp] = Keypoint {
            x: coords[0],
            y: coords[1],
            z: coords[2],
            visible,
        };
    }

    let total = frames.len();
    let frames: Vec<PoseFrame> = frames
        .into_values()
        .map(|(f, _)| f)
        .filter(PoseFrame::any_visible)
        .enumerate()
        .map(|(i, mut f)| {
            f.frame_index = i as u32;
            f
        })
        .collect();
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    if frames.len() < total {
        debug!(
            "{}: dropped {} frames without a detected pose",
            meta.video_id,
            total - frames.len()
        );
    }
    Ok(PoseSequence {
        fps: meta.source_fps,
        meta,
        frames,
    })
}

pub fn write_pose_csv(seq: &PoseSequence, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_pose_rows(seq, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_pose_rows<W: Write>(seq: &PoseSequence, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{}", POSE_HEADER.join(","))?;
    for frame in &seq.frames {
        for (id, k) in frame.keypoints.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                frame.frame_index,
                id,
                k.x,
                k.y,
                k.z,
                u8::from(k.visible)
            )?;
        }
    }
    Ok(())
}

/// Fills not-visible keypoints by linear interpolation in time between the
/// nearest visible observations; gaps at either end hold the nearest visible
/// value. Every keypoint is visible afterwards.
pub fn interpolate_missing(seq: &PoseSequence) -> Result<PoseSequence> {
    let mut out = seq.clone();
    let n = seq.frames.len();
    let mut missing = 0usize;
    let mut longest_gap = 0usize;
    for kp in 0..NUM_KEYPOINTS {
        let visible: Vec<usize> = (0..n)
            .filter(|&t| seq.frames[t].keypoints[kp].visible)
            .collect();
        if visible.is_empty() {
            return Err(Error::UnrecoverableChannel {
                keypoint: KEYPOINT_NAMES[kp],
            });
        }
        if visible.len() == n {
            continue;
        }
        missing += n - visible.len();
        let mut next = 0usize; // index into `visible` of the first visible frame >= t
        for t in 0..n {
            while next < visible.len() && visible[next] < t {
                next += 1;
            }
            if next < visible.len() && visible[next] == t {
                continue;
            }
            let before = next.checked_sub(1).map(|i| visible[i]);
            let after = visible.get(next).copied();
            let time = |i: usize| f64::from(seq.frames[i].frame_index);
            let filled = match (before, after) {
                (Some(p), Some(q)) => {
                    longest_gap = longest_gap.max(q - p - 1);
                    let w = (time(t) - time(p)) / (time(q) - time(p));
                    let (a, b) = (seq.frames[p].keypoints[kp], seq.frames[q].keypoints[kp]);
                    Keypoint {
                        x: a.x + w * (b.x - a.x),
                        y: a.y + w * (b.y - a.y),
                        z: a.z + w * (b.z - a.z),
                        visible: true,
                    }
                }
                (Some(p), None) => {
                    longest_gap = longest_gap.max(n - 1 - p);
                    seq.frames[p].keypoints[kp]
                }
                (None, Some(q)) => {
                    longest_gap = longest_gap.max(q);
                    seq.frames[q].keypoints[kp]
                }
                (None, None) => unreachable!("visible list is non-empty"),
            };
            out.frames[t].keypoints[kp] = filled;
        }
    }
    if missing > 0 {
        debug!(
            "{}: interpolated {missing} keypoint observations, longest gap {longest_gap} frames",
            seq.meta.video_id
        );
    }
    Ok(out)
}

/// Reduces the frame rate to 30 fps by nearest-index selection: output frame
/// `t` copies input frame `round(t * fps / 30)`.
pub fn resample_to_30fps(seq: &PoseSequence) -> Result<PoseSequence> {
    let fps = seq.fps;
    if !(fps >= TARGET_FPS) {
        return Err(Error::UnsupportedRate(fps));
    }
    if fps == TARGET_FPS {
        return Ok(seq.clone());
    }
    let n = seq.frames.len();
    let count = ((n as f64) * TARGET_FPS / fps).floor() as usize;
    let frames = (0..count)
        .map(|t| {
            let src = ((t as f64) * fps / TARGET_FPS).round() as usize;
            let mut f = seq.frames[src.min(n - 1)].clone();
            f.frame_index = t as u32;
            f
        })
        .collect();
    Ok(PoseSequence {
        meta: seq.meta.clone(),
        fps: TARGET_FPS,
        frames,
    })
}

/// One row of the dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub meta: VideoMeta,
    pub path: PathBuf,
}

/// Reads a manifest; relative pose paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header '{}'", MANIFEST_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if rec.len() != MANIFEST_HEADER.len() {
            return Err(bad(format!("expected 7 fields, found {}", rec.len())));
        }
        let meta = VideoMeta {
            video_id: rec[0].to_string(),
            subject_id: rec[1].to_string(),
            gait_class: rec[2].parse::<GaitClass>().map_err(|e| bad(e.to_string()))?,
            view: rec[3].parse::<View>().map_err(|e| bad(e.to_string()))?,
            direction: rec[4].parse::<Direction>().map_err(|e| bad(e.to_string()))?,
            source_fps: rec[5]
                .parse()
                .map_err(|_| bad(format!("bad source_fps '{}'", &rec[5])))?,
        };
        let p = PathBuf::from(&rec[6]);
        let p = if p.is_absolute() { p } else { base.join(p) };
        out.push(ManifestEntry { meta, path: p });
    }
    Ok(out)
}

/// Writes a manifest. Paths are written as given.
pub fn write_manifest(entries: &[(VideoMeta, String)], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", MANIFEST_HEADER.join(",")).map_err(io)?;
    for (m, p) in entries {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            m.video_id, m.subject_id, m.gait_class, m.view, m.direction, m.source_fps, p
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Full ingest chain for one manifest entry: parse, interpolate, resample.
pub fn load_clean(entry: &ManifestEntry) -> Result<PoseSequence> {
    let seq = parse_pose_csv(&entry.path, entry.meta.clone())?;
    let seq = interpolate_missing(&seq)?;
    resample_to_30fps(&seq)
}
