//! Pose-sequence domain types.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const NUM_KEYPOINTS: usize = 33;
pub const NUM_CHANNELS: usize = NUM_KEYPOINTS * 3;

/// Landmark names in pose-model index order.
pub const KEYPOINT_NAMES: [&str; NUM_KEYPOINTS] = [
    "nose",
    "left_eye_inner",
    "left_eye",
    "left_eye_outer",
    "right_eye_inner",
    "right_eye",
    "right_eye_outer",
    "left_ear",
    "right_ear",
    "mouth_left",
    "mouth_right",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_pinky",
    "right_pinky",
    "left_index",
    "right_index",
    "left_thumb",
    "right_thumb",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_heel",
    "right_heel",
    "left_foot_index",
    "right_foot_index",
];

pub mod landmark {
    pub const NOSE: usize = 0;
    pub const LEFT_SHOULDER: usize = 11;
    pub const RIGHT_SHOULDER: usize = 12;
    pub const LEFT_HIP: usize = 23;
    pub const RIGHT_HIP: usize = 24;
    pub const RIGHT_FOOT_INDEX: usize = 32;
}

pub fn keypoint_id(name: &str) -> Option<usize> {
    KEYPOINT_NAMES.iter().position(|&n| n == name)
}

macro_rules! closed_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::Schema(format!(
                        concat!("unknown ", stringify!($name), " '{}'"),
                        s
                    ))),
                }
            }
        }
    };
}

closed_enum! {
    /// Gait classes. Declaration order is the fixed enumeration used for
    /// class indices and every tie-break (alphabetical).
    GaitClass {
        Ant => "ANT",
        Cir => "CIR",
        Cro => "CRO",
        Nor => "NOR",
        Par => "PAR",
        Tre => "TRE",
        Vau => "VAU",
    }
}

closed_enum! {
    View {
        Frontal => "frontal",
        Sagittal => "sagittal",
    }
}

closed_enum! {
    Direction {
        Left => "left",
        Right => "right",
    }
}

impl GaitClass {
    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<GaitClass> {
        GaitClass::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub visible: bool,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Keypoint {
            x,
            y,
            z,
            visible: true,
        }
    }

    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn axis_mut(&mut self, axis: usize) -> &mut f64 {
        match axis {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }
}

/// One frame: exactly 33 keypoint slots, indexed by landmark id. Slots with
/// no observation hold zeros and `visible == false`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub frame_index: u32,
    pub keypoints: [Keypoint; NUM_KEYPOINTS],
}

impl PoseFrame {
    pub fn empty(frame_index: u32) -> Self {
        PoseFrame {
            frame_index,
            keypoints: [Keypoint::default(); NUM_KEYPOINTS],
        }
    }

    pub fn any_visible(&self) -> bool {
        self.keypoints.iter().any(|k| k.visible)
    }

    pub fn midpoint(&self, a: usize, b: usize) -> [f64; 3] {
        let (p, q) = (&self.keypoints[a], &self.keypoints[b]);
        [(p.x + q.x) / 2.0, (p.y + q.y) / 2.0, (p.z + q.z) / 2.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub subject_id: String,
    pub gait_class: GaitClass,
    pub view: View,
    pub direction: Direction,
    pub source_fps: f64,
}

impl VideoMeta {
    /// Key shared by the frontal and sagittal recordings of one walking trial.
    pub fn trial_key(&self) -> String {
        format!(
            "{}_{}_{}",
            self.subject_id, self.gait_class, self.direction
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    pub meta: VideoMeta,
    pub fps: f64,
    pub frames: Vec<PoseFrame>,
}

impl PoseSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// True when every coordinate of every keypoint is finite.
    pub fn all_finite(&self) -> bool {
        self.frames.iter().all(|f| {
            f.keypoints
                .iter()
                .all(|k| k.x.is_finite() && k.y.is_finite() && k.z.is_finite())
        })
    }
}
