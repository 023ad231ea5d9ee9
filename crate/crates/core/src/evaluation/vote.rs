//! Window-to-video majority voting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{GaitClass, View};

/// How vote ties are resolved. Only one rule exists: the lowest class in the
/// fixed enumeration wins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    ClassOrder,
}

/// Modal label; ties go to the lowest class index.
pub fn majority_vote(labels: &[GaitClass]) -> Result<GaitClass> {
    if labels.is_empty() {
        return Err(Error::Usage("majority vote over an empty label list".into()));
    }
    let mut counts = [0usize; GaitClass::COUNT];
    for c in labels {
        counts[c.index()] += 1;
    }
    let mut best = 0;
    for (i, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = i;
        }
    }
    Ok(GaitClass::ALL[best])
}

/// Prediction for one window of a held-out subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub video_id: String,
    pub trial_key: String,
    pub subject: String,
    pub view: View,
    pub truth: GaitClass,
    pub predicted: GaitClass,
}

/// Voted label for one video, or for one trial when views are pooled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoPrediction {
    pub video_id: String,
    pub subject: String,
    /// `frontal`, `sagittal` or `combined`.
    pub view: String,
    pub truth: GaitClass,
    pub predicted: GaitClass,
}

fn vote_groups<'a>(
    groups: BTreeMap<String, Vec<&'a WindowPrediction>>,
    view: impl Fn(&[&'a WindowPrediction]) -> String,
) -> Result<Vec<VideoPrediction>> {
    groups
        .into_iter()
        .map(|(id, windows)| {
            let first = windows[0];
            if let Some(w) = windows.iter().find(|w| w.truth != first.truth || w.subject != first.subject) {
                return Err(Error::InternalInvariant(format!(
                    "group {id} mixes labels or subjects ({} vs {})",
                    first.video_id, w.video_id
                )));
            }
            let labels: Vec<GaitClass> = windows.iter().map(|w| w.predicted).collect();
            Ok(VideoPrediction {
                view: view(&windows),
                video_id: id,
                subject: first.subject.clone(),
                truth: first.truth,
                predicted: majority_vote(&labels)?,
            })
        })
        .collect()
}

/// One label per video, ordered by video id.
pub fn vote_video(windows: &[WindowPrediction]) -> Result<Vec<VideoPrediction>> {
    let mut groups: BTreeMap<String, Vec<&WindowPrediction>> = BTreeMap::new();
    for w in windows {
        groups.entry(w.video_id.clone()).or_default().push(w);
    }
    vote_groups(groups, |ws| ws[0].view.as_str().to_string())
}

/// One label per trial over the pooled windows of both views, ordered by
/// trial key. A trial seen in only one view falls back to that view's vote.
pub fn vote_combined(frontal: &[WindowPrediction], sagittal: &[WindowPrediction]) -> Result<Vec<VideoPrediction>> {
    let mut groups: BTreeMap<String, Vec<&WindowPrediction>> = BTreeMap::new();
    for w in frontal.iter().chain(sagittal) {
        groups.entry(w.trial_key.clone()).or_default().push(w);
    }
    for (key, ws) in &groups {
        if ws.iter().all(|w| w.view == ws[0].view) {
            log::warn!("trial {key} has only {} windows; voting on that view alone", ws[0].view);
        }
    }
    vote_groups(groups, |_| "combined".to_string())
}
