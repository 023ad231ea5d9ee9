//! Manifest-to-matrix plumbing shared by the command-line tools and tests.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;
use crate::features::{extract_matrix_with, FeatureGrid, FeatureMatrix};
use crate::ingest::{load_clean, read_manifest, ManifestEntry};
use crate::pose::View;
use crate::preprocess::{preprocess, Window};

/// Cleans and windows every entry, keeping manifest order.
pub fn load_windows(entries: &[ManifestEntry]) -> Result<Vec<Window>> {
    let per_video: Vec<Vec<Window>> = entries
        .par_iter()
        .map(|e| {
            let windows = preprocess(&load_clean(e)?)?;
            if windows.is_empty() {
                log::warn!("{}: too short for one window, excluded", e.meta.video_id);
            }
            Ok(windows)
        })
        .collect::<Result<_>>()?;
    Ok(per_video.into_iter().flatten().collect())
}

/// Feature matrices for the requested views, keyed by view.
pub fn extract_views(
    entries: &[ManifestEntry],
    views: &[View],
    grid: &FeatureGrid,
) -> Result<BTreeMap<View, FeatureMatrix>> {
    let mut out = BTreeMap::new();
    for &view in views {
        let subset: Vec<ManifestEntry> = entries.iter().filter(|e| e.meta.view == view).cloned().collect();
        let windows = load_windows(&subset)?;
        log::info!("{view}: {} videos, {} windows", subset.len(), windows.len());
        out.insert(view, extract_matrix_with(&windows, view, grid)?);
    }
    Ok(out)
}

pub fn extract_manifest(manifest: &Path, views: &[View], grid: &FeatureGrid) -> Result<BTreeMap<View, FeatureMatrix>> {
    extract_views(&read_manifest(manifest)?, views, grid)
}
