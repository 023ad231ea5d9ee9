//! Hip-centering, frontal height normalization and windowing.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{landmark, PoseSequence, VideoMeta, View, NUM_CHANNELS};

/// Frames in the rolling-median window used for centering and scaling (2 s at 30 fps).
pub const SMOOTHING_FRAMES: usize = 60;
pub const WINDOW_FRAMES: usize = 30;
pub const WINDOW_STEP: usize = 15;

/// Torso medians at or below this are treated as a collapsed pose.
const MIN_TORSO: f64 = 1e-9;

fn median_of(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        (buf[n / 2 - 1] + buf[n / 2]) / 2.0
    }
}

/// Median over the `SMOOTHING_FRAMES` window centered at each frame
/// (`t - 30 ..= t + 29`), truncated at the sequence ends.
pub fn rolling_median(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let half = SMOOTHING_FRAMES / 2;
    let mut buf = Vec::with_capacity(SMOOTHING_FRAMES);
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(n);
            buf.clear();
            buf.extend_from_slice(&values[lo..hi]);
            median_of(&mut buf)
        })
        .collect()
}

/// Subtracts, per frame and axis, the rolling median of the mid-hip trajectory.
pub fn hip_center(seq: &PoseSequence) -> Result<PoseSequence> {
    if seq.frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let centers: Vec<[f64; 3]> = seq
        .frames
        .iter()
        .map(|f| f.midpoint(landmark::LEFT_HIP, landmark::RIGHT_HIP))
        .collect();
    let medians: Vec<Vec<f64>> = (0..3)
        .map(|a| rolling_median(&centers.iter().map(|c| c[a]).collect::<Vec<_>>()))
        .collect();
    let mut out = seq.clone();
    for (t, frame) in out.frames.iter_mut().enumerate() {
        for k in frame.keypoints.iter_mut() {
            k.x -= medians[0][t];
            k.y -= medians[1][t];
            k.z -= medians[2][t];
        }
    }
    Ok(out)
}

/// Image-plane distance from mid-shoulder to mid-hip, per frame.
pub fn torso_lengths(seq: &PoseSequence) -> Vec<f64> {
    seq.frames
        .iter()
        .map(|f| {
            let s = f.midpoint(landmark::LEFT_SHOULDER, landmark::RIGHT_SHOULDER);
            let h = f.midpoint(landmark::LEFT_HIP, landmark::RIGHT_HIP);
            (s[0] - h[0]).hypot(s[1] - h[1])
        })
        .collect()
}

/// Frontal view: divides all coordinates by the rolling median torso length.
/// Sagittal sequences are returned unchanged.
pub fn rescale_height(seq: &PoseSequence) -> Result<PoseSequence> {
    if seq.meta.view == View::Sagittal {
        return Ok(seq.clone());
    }
    if seq.frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let scale = rolling_median(&torso_lengths(seq));
    if let Some((t, s)) = scale.iter().enumerate().find(|(_, s)| !(**s > MIN_TORSO)) {
        return Err(Error::DegeneratePose(format!(
            "{}: torso length median {s} at frame {t}",
            seq.meta.video_id
        )));
    }
    let mut out = seq.clone();
    for (frame, s) in out.frames.iter_mut().zip(&scale) {
        for k in frame.keypoints.iter_mut() {
            k.x /= s;
            k.y /= s;
            k.z /= s;
        }
    }
    Ok(out)
}

/// A 30-frame slice of all 99 channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Row-major `WINDOW_FRAMES x NUM_CHANNELS`; channel `3 * keypoint + axis`.
    pub values: Vec<f64>,
    pub meta: VideoMeta,
    pub start_frame: usize,
}

impl Window {
    pub fn value(&self, frame: usize, channel: usize) -> f64 {
        self.values[frame * NUM_CHANNELS + channel]
    }

    pub fn channel(&self, channel: usize) -> [f64; WINDOW_FRAMES] {
        std::array::from_fn(|t| self.value(t, channel))
    }
}

pub fn window_count(frames: usize) -> usize {
    if frames < WINDOW_FRAMES {
        0
    } else {
        (frames - WINDOW_FRAMES) / WINDOW_STEP + 1
    }
}

/// Cuts 30-frame windows with 15-frame stride; trailing frames that do not
/// fill a window are discarded.
pub fn segment_windows(seq: &PoseSequence) -> Vec<Window> {
    let count = window_count(seq.frames.len());
    if count == 0 {
        warn!(
            "{}: {} frames is shorter than one window",
            seq.meta.video_id,
            seq.frames.len()
        );
    }
    (0..count)
        .map(|w| {
            let start = w * WINDOW_STEP;
            let mut values = Vec::with_capacity(WINDOW_FRAMES * NUM_CHANNELS);
            for f in &seq.frames[start..start + WINDOW_FRAMES] {
                for k in &f.keypoints {
                    values.extend_from_slice(&[k.x, k.y, k.z]);
                }
            }
            Window {
                values,
                meta: seq.meta.clone(),
                start_frame: start,
            }
        })
        .collect()
}

/// Centering, view-dependent rescaling and windowing of a clean sequence.
pub fn preprocess(seq: &PoseSequence) -> Result<Vec<Window>> {
    if seq.fps != crate::ingest::TARGET_FPS {
        return Err(Error::Usage(format!(
            "{}: windowing expects 30 fps, got {}",
            seq.meta.video_id, seq.fps
        )));
    }
    let centered = hip_center(seq)?;
    let scaled = rescale_height(&centered)?;
    Ok(segment_windows(&scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{Direction, GaitClass, Keypoint, PoseFrame};

    fn sequence(view: View, n: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> PoseSequence {
        let frames = (0..n)
            .map(|t| {
                let mut fr = PoseFrame::empty(t as u32);
                for (k, kp) in fr.keypoints.iter_mut().enumerate() {
                    let [x, y, z] = f(t, k);
                    *kp = Keypoint::new(x, y, z);
                }
                fr
            })
            .collect();
        PoseSequence {
            meta: VideoMeta {
                video_id: "v".into(),
                subject_id: "s".into(),
                gait_class: GaitClass::Nor,
                view,
                direction: Direction::Left,
                source_fps: 30.0,
            },
            fps: 30.0,
            frames,
        }
    }

    #[test]
    fn constant_hip_is_centered_to_origin() {
        let seq = sequence(View::Frontal, 40, |t, k| [5.0 + (k as f64) * 0.0, 5.0, 0.0 * t as f64]);
        let out = hip_center(&seq).unwrap();
        for f in &out.frames {
            assert_eq!(f.midpoint(23, 24), [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn oscillating_hip_keeps_its_sway() {
        // hip alternates 9 / 11; rolling medians computed by brute force
        let seq = sequence(View::Sagittal, 100, |t, _| {
            let h = if t % 2 == 0 { 9.0 } else { 11.0 };
            [h, h, 0.0]
        });
        let out = hip_center(&seq).unwrap();
        for t in 0..100usize {
            let lo = t.saturating_sub(30);
            let hi = (t + 30).min(100);
            let mut w: Vec<f64> = (lo..hi).map(|i| if i % 2 == 0 { 9.0 } else { 11.0 }).collect();
            w.sort_by(f64::total_cmp);
            let med = if w.len() % 2 == 1 {
                w[w.len() / 2]
            } else {
                (w[w.len() / 2 - 1] + w[w.len() / 2]) / 2.0
            };
            let expect = if t % 2 == 0 { 9.0 } else { 11.0 } - med;
            assert_eq!(out.frames[t].keypoints[23].x, expect);
            assert!((expect.abs() - 1.0).abs() <= 1.0);
        }
    }

    #[test]
    fn constant_torso_two_halves_coordinates() {
        // shoulders at y = -2 above hips at y = 0
        let seq = sequence(View::Frontal, 10, |t, k| {
            let y = if k == 11 || k == 12 { -2.0 } else { 0.0 };
            let x = if matches!(k, 11 | 12 | 23 | 24) { 3.0 } else { k as f64 };
            [x + t as f64 * 0.0, y, 1.0]
        });
        let out = rescale_height(&seq).unwrap();
        for (a, b) in seq.frames.iter().zip(&out.frames) {
            for (ka, kb) in a.keypoints.iter().zip(&b.keypoints) {
                assert_eq!(kb.x, ka.x / 2.0);
                assert_eq!(kb.y, ka.y / 2.0);
                assert_eq!(kb.z, ka.z / 2.0);
            }
        }
    }

    #[test]
    fn sagittal_rescale_is_identity() {
        let seq = sequence(View::Sagittal, 10, |t, k| [t as f64, k as f64, 3.0]);
        assert_eq!(rescale_height(&seq).unwrap(), seq);
    }

    #[test]
    fn collapsed_torso_is_degenerate() {
        let seq = sequence(View::Frontal, 5, |_, _| [1.0, 1.0, 1.0]);
        assert!(matches!(rescale_height(&seq), Err(Error::DegeneratePose(_))));
    }

    #[test]
    fn ramping_torso_normalizes_to_unit_median() {
        let n = 150;
        let len = |t: usize| 1.0 + t as f64 / (n - 1) as f64;
        let seq = sequence(View::Frontal, n, |t, k| {
            let y = if k == 11 || k == 12 { -len(t) } else { 0.0 };
            [0.0, y, 0.0]
        });
        let out = rescale_height(&hip_center(&seq).unwrap()).unwrap();
        let scaled = torso_lengths(&out);
        for (t, m) in rolling_median(&scaled).into_iter().enumerate() {
            // an even-length window centers half a frame early, so interior
            // frames sit at len(t) / len(t - 0.5); truncated ends see a one-sided ramp
            let tol = if (60..n - 60).contains(&t) { 3e-3 } else { 0.06 };
            assert!((m - 1.0).abs() < tol, "frame {t}: median {m}");
        }
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_count(30), 1);
        assert_eq!(window_count(60), 3);
        assert_eq!(window_count(29), 0);
        let seq = sequence(View::Sagittal, 60, |t, k| [t as f64, k as f64, 0.0]);
        let ws = segment_windows(&seq);
        assert_eq!(ws.iter().map(|w| w.start_frame).collect::<Vec<_>>(), vec![0, 15, 30]);
        assert_eq!(ws[2].channel(3 * 4)[0], 30.0);
        assert_eq!(ws[1].value(29, 3 * 7 + 1), 7.0);
    }

    #[test]
    fn empty_sequence_errors() {
        let seq = sequence(View::Frontal, 0, |_, _| [0.0; 3]);
        assert!(matches!(hip_center(&seq), Err(Error::EmptySequence)));
        assert!(segment_windows(&seq).is_empty());
    }
}
