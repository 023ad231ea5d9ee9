//! Leave-one-subject-out outer folds with subject-grouped inner folds.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const INNER_FOLDS: usize = 5;
/// Smallest cohort for which every inner fold keeps a validation subject.
pub const MIN_SUBJECTS: usize = INNER_FOLDS + 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OuterFold {
    pub test_subject: String,
    pub train_subjects: Vec<String>,
    pub inner: Vec<SubjectSplit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub outer: Vec<OuterFold>,
    pub seed: u64,
}

/// Outer folds follow sorted subject order; inner groups come from a seeded
/// shuffle dealt round-robin.
pub fn plan_folds(subjects: &[String], seed: u64) -> Result<FoldPlan> {
    let subjects: Vec<String> = subjects.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if subjects.len() < MIN_SUBJECTS {
        return Err(Error::Config(format!(
            "nested cross-validation needs at least {MIN_SUBJECTS} subjects, got {}",
            subjects.len()
        )));
    }
    let inner_seed = seed::derive(seed, "inner-folds");
    let outer = subjects
        .iter()
        .enumerate()
        .map(|(i, test)| {
            let train: Vec<String> = subjects.iter().filter(|s| *s != test).cloned().collect();
            let mut shuffled = train.clone();
            shuffled.shuffle(&mut seed::rng(seed::derive_index(inner_seed, i as u64)));
            let inner = (0..INNER_FOLDS)
                .map(|g| {
                    let validation: BTreeSet<&String> = shuffled.iter().skip(g).step_by(INNER_FOLDS).collect();
                    SubjectSplit {
                        train: train.iter().filter(|s| !validation.contains(s)).cloned().collect(),
                        validation: validation.into_iter().cloned().collect(),
                    }
                })
                .collect();
            OuterFold {
                test_subject: test.clone(),
                train_subjects: train,
                inner,
            }
        })
        .collect();
    Ok(FoldPlan { outer, seed })
}
