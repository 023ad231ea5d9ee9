//! Deterministic synthetic gait generator covering all classes, views and
//! walking directions.

use std::f64::consts::{PI, TAU};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_manifest, POSE_HEADER};
use crate::pose::{Direction, GaitClass, VideoMeta, View, NUM_KEYPOINTS};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub fps: f64,
    pub duration_s: f64,
    /// Keypoint noise standard deviation in pixels.
    pub noise_std: f64,
    /// Fraction of keypoints written as not visible.
    pub dropout: f64,
    /// Fraction of frames with no detection at all.
    pub frame_dropout: f64,
    pub cadence_spread: f64,
    pub amplitude_spread: f64,
    /// Circumduction arc amplitude in body units.
    pub arc_amplitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 6,
            fps: 60.0,
            duration_s: 4.0,
            noise_std: 2.0,
            dropout: 0.02,
            frame_dropout: 0.005,
            cadence_spread: 0.1,
            amplitude_spread: 0.15,
            arc_amplitude: 0.15,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 6 {
            return Err(Error::Config(format!("n_subjects {} < 6", self.n_subjects)));
        }
        if self.duration_s < 3.0 {
            return Err(Error::Config(format!("duration {} s < 3 s", self.duration_s)));
        }
        if !(self.fps >= 30.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("fps {} must be at least 30", self.fps)));
        }
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {v} outside [0, 1)")))
            }
        };
        unit("dropout", self.dropout)?;
        unit("frame_dropout", self.frame_dropout)?;
        unit("cadence_spread", self.cadence_spread)?;
        unit("amplitude_spread", self.amplitude_spread)?;
        if !(self.noise_std >= 0.0) || !(self.arc_amplitude >= 0.0) {
            return Err(Error::Config("noise and arc amplitude must be non-negative".into()));
        }
        Ok(())
    }
}

/// Stable per-subject traits.
#[derive(Debug, Clone, Copy)]
struct Subject {
    cadence: f64,
    amplitude: f64,
    size: f64,
    arm: f64,
    knee: f64,
    lean: f64,
    width: f64,
}

impl Subject {
    fn draw(cfg: &SynthConfig, index: usize) -> Subject {
        let mut rng = seed::rng(seed::derive(cfg.seed, &format!("subject/{index}")));
        let mut spread = |s: f64| 1.0 + s * (2.0 * rng.gen::<f64>() - 1.0);
        Subject {
            cadence: spread(cfg.cadence_spread),
            amplitude: spread(cfg.amplitude_spread),
            size: spread(0.15),
            arm: spread(0.3),
            knee: spread(0.2),
            lean: 0.03 * (spread(1.0) - 1.0),
            width: spread(0.2),
        }
    }
}

/// Body-frame point: lateral (subject's left positive), vertical, forward.
type P3 = [f64; 3];

fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Limb segment of `len` at sagittal angle `theta` from straight down.
fn limb(from: P3, len: f64, theta: f64) -> P3 {
    add(from, [0.0, -len * theta.cos(), len * theta.sin()])
}

/// 33 body-frame keypoints at gait phase `phase` (radians).
fn pose(class: GaitClass, s: &Subject, phase: f64, cfg: &SynthConfig) -> [P3; NUM_KEYPOINTS] {
    use GaitClass::*;
    let ph = if class == Ant {
        // shortened right stance: phase runs unevenly through the cycle
        phase + 0.45 * phase.sin()
    } else {
        phase
    };
    let mut amp = 0.45 * s.amplitude;
    let mut arm_amp = 0.35 * s.arm;
    let mut knee_base = 0.05;
    let mut hip_height = 0.92;
    let mut head_fwd = 0.0;
    let mut shoulder_fwd = s.lean;
    if class == Par {
        amp *= 0.45;
        arm_amp *= 0.25;
        head_fwd = 0.12;
        shoulder_fwd += 0.07;
    }
    if class == Cro {
        hip_height -= 0.14;
        knee_base += 0.55;
        shoulder_fwd += 0.08;
    }
    let (amp_l, mut amp_r) = (amp, amp);
    let mut arm_r = arm_amp;
    if class == Ant {
        amp_r *= 0.55;
        arm_r *= 0.55;
    }
    let bob = 0.015 * (2.0 * ph).cos();
    let (mut drop_l, mut drop_r, mut sway) = (0.0, 0.0, 0.0);
    if class == Tre {
        // contralateral pelvic drop with compensating trunk sway
        drop_l = 0.07 * ph.sin();
        drop_r = -drop_l;
        sway = 0.06 * ph.sin();
    }
    let half_width = 0.1 * s.width;
    let hip_l = [half_width, hip_height + bob + drop_l, 0.0];
    let hip_r = [-half_width, hip_height + bob + drop_r, 0.0];

    let theta_l = amp_l * ph.sin();
    let theta_r = amp_r * (ph + PI).sin();
    // knee flexes during swing (the half-cycle where the thigh moves forward)
    let flex = |p: f64| knee_base + 0.6 * s.knee * p.cos().max(0.0);
    let (knee_l, knee_r) = (limb(hip_l, 0.45, theta_l), limb(hip_r, 0.45, theta_r));
    let mut ankle_l = limb(knee_l, 0.45, theta_l - flex(ph));
    let mut ankle_r = limb(knee_r, 0.45, theta_r - flex(ph + PI));
    let mut knee_r = knee_r;

    let mut rise_l = 0.0;
    if class == Vau {
        // vaulting: rising onto the left forefoot while the right limb swings
        rise_l = 0.12 * (ph + PI).cos().max(0.0);
        ankle_l[1] += rise_l;
    }
    if class == Cir {
        // right foot swings out in a lateral arc
        let arc = cfg.arc_amplitude * (ph + PI).cos().max(0.0);
        knee_r[0] -= 0.4 * arc;
        ankle_r[0] -= arc;
    }
    let heel_l = add(ankle_l, [0.0, -0.05 + 0.5 * rise_l, -0.06]);
    let heel_r = add(ankle_r, [0.0, -0.05, -0.06]);
    let toe_l = add(ankle_l, [0.0, -0.07 - 0.3 * rise_l, 0.16]);
    let toe_r = add(ankle_r, [0.0, -0.07, 0.16]);

    let torso_top = hip_height + bob + 0.52;
    let sh_l = [0.19 + sway, torso_top + 0.5 * drop_l, shoulder_fwd];
    let sh_r = [-0.19 + sway, torso_top + 0.5 * drop_r, shoulder_fwd];
    let alpha_l = -arm_amp * ph.sin();
    let alpha_r = -arm_r * (ph + PI).sin();
    let elbow_l = limb(sh_l, 0.3, alpha_l);
    let elbow_r = limb(sh_r, 0.3, alpha_r);
    let wrist_l = limb(elbow_l, 0.26, alpha_l + 0.25);
    let wrist_r = limb(elbow_r, 0.26, alpha_r + 0.25);
    let hand = |w: P3, side: f64| {
        [
            add(w, [side * 0.02, -0.07, 0.01]),
            add(w, [side * -0.01, -0.08, 0.03]),
            add(w, [side * -0.02, -0.04, 0.04]),
        ]
    };
    let [pinky_l, index_l, thumb_l] = hand(wrist_l, 1.0);
    let [pinky_r, index_r, thumb_r] = hand(wrist_r, -1.0);

    let head = [sway * 1.2, torso_top + 0.2, shoulder_fwd + head_fwd + 0.02];
    let face = |l: f64, v: f64, f: f64| add(head, [l, v, f]);
    [
        face(0.0, -0.01, 0.1),
        face(0.02, 0.02, 0.09),
        face(0.035, 0.02, 0.085),
        face(0.05, 0.02, 0.08),
        face(-0.02, 0.02, 0.09),
        face(-0.035, 0.02, 0.085),
        face(-0.05, 0.02, 0.08),
        face(0.08, 0.0, 0.0),
        face(-0.08, 0.0, 0.0),
        face(0.025, -0.05, 0.085),
        face(-0.025, -0.05, 0.085),
        sh_l,
        sh_r,
        elbow_l,
        elbow_r,
        wrist_l,
        wrist_r,
        pinky_l,
        pinky_r,
        index_l,
        index_r,
        thumb_l,
        thumb_r,
        hip_l,
        hip_r,
        knee_l,
        knee_r,
        ankle_l,
        ankle_r,
        heel_l,
        heel_r,
        toe_l,
        toe_r,
    ]
}

/// One generated trial before serialization.
pub struct Trial {
    pub meta: VideoMeta,
    /// Per frame, per keypoint: `Some([x, y, z])` when visible.
    pub frames: Vec<Vec<Option<[f64; 3]>>>,
}

fn trial_meta(subject: usize, class: GaitClass, view: View, direction: Direction, fps: f64) -> VideoMeta {
    let subject_id = format!("S{:02}", subject + 1);
    VideoMeta {
        video_id: format!("{subject_id}_{class}_{view}_{direction}"),
        subject_id,
        gait_class: class,
        view,
        direction,
        source_fps: fps,
    }
}

/// Initial phase and walking-speed factor; shared by both views of a walk.
fn trial_draws(cfg: &SynthConfig, subject: usize, class: GaitClass, direction: Direction) -> (f64, f64) {
    let mut rng = seed::rng(seed::derive(
        cfg.seed,
        &format!("trial/{subject}/{class}/{direction}"),
    ));
    (rng.gen::<f64>() * TAU, 0.9 + 0.2 * rng.gen::<f64>())
}

/// Generates one trial's keypoints in image coordinates.
pub fn generate_trial(
    cfg: &SynthConfig,
    subject: usize,
    class: GaitClass,
    view: View,
    direction: Direction,
) -> Trial {
    let traits = Subject::draw(cfg, subject);
    let (phase0, speed_jitter) = trial_draws(cfg, subject, class, direction);
    let meta = trial_meta(subject, class, view, direction, cfg.fps);
    let mut rng: ChaCha8Rng = seed::rng(seed::derive(cfg.seed, &format!("noise/{}", meta.video_id)));

    let cadence = traits.cadence * if class == GaitClass::Par { 1.3 } else { 1.0 };
    let n = (cfg.duration_s * cfg.fps).round() as usize;
    let sign = match direction {
        Direction::Left => -1.0,
        Direction::Right => 1.0,
    };
    let px = 260.0 * traits.size;
    let speed = 0.7 * speed_jitter * cadence * traits.amplitude;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.fps;
        let body = pose(class, &traits, phase0 + TAU * cadence * t, cfg);
        let dropped = rng.gen::<f64>() < cfg.frame_dropout;
        let mut frame = Vec::with_capacity(NUM_KEYPOINTS);
        for p in body {
            let [l, v, f] = p;
            let (x, y, z) = match view {
                View::Sagittal => {
                    let progress = f + speed * t;
                    (640.0 + sign * px * progress, 680.0 - px * v, sign * px * l)
                }
                View::Frontal => {
                    // walking toward the camera from 7 units away
                    let distance = 7.0 - speed * t - f;
                    let scale = px * 4.0 / distance;
                    (640.0 + sign * scale * l, 360.0 + scale * (1.0 - v), -px * f)
                }
            };
            let mut noise = || cfg.noise_std * rng.sample::<f64, _>(StandardNormal);
            let noisy = [x + noise(), y + noise(), z + noise()];
            let hidden = dropped || rng.gen::<f64>() < cfg.dropout;
            frame.push((!hidden).then_some(noisy));
        }
        frames.push(frame);
    }
    Trial { meta, frames }
}

fn write_trial(trial: &Trial, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", POSE_HEADER.join(",")).map_err(io)?;
    for (i, frame) in trial.frames.iter().enumerate() {
        for (k, p) in frame.iter().enumerate() {
            match p {
                Some([x, y, z]) => writeln!(w, "{i},{k},{x:.3},{y:.3},{z:.3},1"),
                None => writeln!(w, "{i},{k},,,,0"),
            }
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Writes one pose CSV per subject × class × view × direction plus
/// `manifest.csv`; returns the manifest path.
pub fn generate(cfg: &SynthConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut jobs = Vec::new();
    for subject in 0..cfg.n_subjects {
        for &class in GaitClass::ALL {
            for &view in View::ALL {
                for &direction in Direction::ALL {
                    jobs.push((subject, class, view, direction));
                }
            }
        }
    }
    let entries: Vec<(VideoMeta, String)> = jobs
        .par_iter()
        .map(|&(subject, class, view, direction)| {
            let trial = generate_trial(cfg, subject, class, view, direction);
            let name = format!("{}.csv", trial.meta.video_id);
            write_trial(&trial, &out.join(&name))?;
            Ok((trial.meta, name))
        })
        .collect::<Result<_>>()?;
    let manifest = out.join("manifest.csv");
    write_manifest(&entries, &manifest)?;
    Ok(manifest)
}
