//! Window × feature matrix construction and CSV export.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descriptor::{Channel, FeatureDescriptor, FeatureGrid, FeatureKind, Family};
use super::families::SeriesContext;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pose::{Direction, GaitClass, View, NUM_CHANNELS};
use crate::preprocess::Window;

/// Provenance of one matrix row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub video_id: String,
    pub subject_id: String,
    pub gait_class: GaitClass,
    pub view: View,
    pub direction: Direction,
    pub start_frame: usize,
}

impl RowMeta {
    /// Recording-session key shared by the views of one walk.
    pub fn trial_key(&self) -> String {
        format!("{}_{}_{}", self.subject_id, self.gait_class, self.direction)
    }
}

pub const ROW_META_HEADER: [&str; 6] = [
    "video_id",
    "subject_id",
    "gait_class",
    "view",
    "direction",
    "start_frame",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub view: View,
    pub columns: Vec<FeatureDescriptor>,
    pub values: Matrix,
    pub row_meta: Vec<RowMeta>,
    /// Cells that fell back to 0, per family.
    pub degenerate: BTreeMap<Family, u64>,
}

impl FeatureMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> Vec<GaitClass> {
        self.row_meta.iter().map(|m| m.gait_class).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            view: self.view,
            columns: self.columns.clone(),
            values: self.values.select_rows(idx),
            row_meta: idx.iter().map(|&i| self.row_meta[i].clone()).collect(),
            degenerate: BTreeMap::new(),
        }
    }

    /// Full column set for `view` under `grid`, channel-major.
    pub fn columns_for(view: View, grid: &FeatureGrid) -> Vec<FeatureDescriptor> {
        let kinds = grid.catalog(view);
        Channel::all()
            .flat_map(|channel| kinds.iter().map(move |&kind| FeatureDescriptor { channel, kind }))
            .collect()
    }
}

/// Feature value with the finite fallback applied.
pub fn compute_feature(d: &FeatureDescriptor, series: &[f64]) -> f64 {
    SeriesContext::new(series).eval(&d.kind).unwrap_or(0.0)
}

pub fn extract_matrix(windows: &[Window], view: View) -> Result<FeatureMatrix> {
    extract_matrix_with(windows, view, &FeatureGrid::default())
}

pub fn extract_matrix_with(windows: &[Window], view: View, grid: &FeatureGrid) -> Result<FeatureMatrix> {
    if let Some(w) = windows.iter().find(|w| w.meta.view != view) {
        return Err(Error::Usage(format!(
            "window of video {} is {} but extraction view is {view}",
            w.meta.video_id, w.meta.view
        )));
    }
    let kinds = grid.catalog(view);
    let columns = FeatureMatrix::columns_for(view, grid);
    let ncols = columns.len();
    let mut data = vec![0.0; windows.len() * ncols];
    let families: Vec<Family> = kinds.iter().map(FeatureKind::family).collect();

    let per_row: Vec<Vec<u64>> = data
        .par_chunks_mut(ncols.max(1))
        .zip(windows.par_iter())
        .map(|(row, window)| {
            let mut fallbacks = vec![0u64; Family::ALL.len()];
            for ch in 0..NUM_CHANNELS {
                let series = window.channel(ch);
                let ctx = SeriesContext::new(&series);
                let out = &mut row[ch * kinds.len()..(ch + 1) * kinds.len()];
                for ((cell, kind), family) in out.iter_mut().zip(&kinds).zip(&families) {
                    *cell = match ctx.eval(kind) {
                        Some(v) => v,
                        None => {
                            fallbacks[*family as usize] += 1;
                            0.0
                        }
                    };
                }
            }
            fallbacks
        })
        .collect();

    let mut degenerate = BTreeMap::new();
    for counts in &per_row {
        for (&family, &c) in Family::ALL.iter().zip(counts) {
            if c > 0 {
                *degenerate.entry(family).or_insert(0) += c;
            }
        }
    }
    for (family, count) in &degenerate {
        log::debug!("{family}: {count} degenerate cells set to 0");
    }

    let row_meta = windows
        .iter()
        .map(|w| RowMeta {
            video_id: w.meta.video_id.clone(),
            subject_id: w.meta.subject_id.clone(),
            gait_class: w.meta.gait_class,
            view,
            direction: w.meta.direction,
            start_frame: w.start_frame,
        })
        .collect();
    Ok(FeatureMatrix {
        view,
        columns,
        values: Matrix::from_vec(windows.len(), ncols, data)?,
        row_meta,
        degenerate,
    })
}

/// Writes the value table and its row-meta sidecar.
pub fn write_matrix_csv(m: &FeatureMatrix, values_path: &Path, meta_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(values_path)?;
    w.write_record(m.columns.iter().map(ToString::to_string))?;
    for row in m.values.rows_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(values_path, e))?;

    let file = File::create(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(ROW_META_HEADER)?;
    for r in &m.row_meta {
        w.write_record([
            r.video_id.as_str(),
            r.subject_id.as_str(),
            r.gait_class.as_str(),
            r.view.as_str(),
            r.direction.as_str(),
            &r.start_frame.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::io(meta_path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(meta_path, e))?;
    Ok(())
}

pub fn read_matrix_csv(values_path: &Path, meta_path: &Path) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_path(values_path)?;
    let columns: Vec<FeatureDescriptor> = r
        .headers()?
        .iter()
        .map(str::parse)
        .collect::<Result<_>>()?;
    let mut data = Vec::new();
    let mut nrows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != columns.len() {
            return Err(Error::Parse {
                path: values_path.to_path_buf(),
                line: i as u64 + 2,
                msg: format!("expected {} values, got {}", columns.len(), rec.len()),
            });
        }
        for v in rec.iter() {
            data.push(v.parse::<f64>().map_err(|_| Error::Parse {
                path: values_path.to_path_buf(),
                line: i as u64 + 2,
                msg: format!("bad value '{v}'"),
            })?);
        }
        nrows += 1;
    }

    let mut r = csv::Reader::from_path(meta_path)?;
    if r.headers()?.iter().ne(ROW_META_HEADER) {
        return Err(Error::Schema(format!("{}: unexpected header", meta_path.display())));
    }
    let mut row_meta = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |msg: String| Error::Parse {
            path: meta_path.to_path_buf(),
            line: i as u64 + 2,
            msg,
        };
        if rec.len() != ROW_META_HEADER.len() {
            return Err(bad("wrong field count".into()));
        }
        row_meta.push(RowMeta {
            video_id: rec[0].to_string(),
            subject_id: rec[1].to_string(),
            gait_class: rec[2].parse()?,
            view: rec[3].parse()?,
            direction: rec[4].parse()?,
            start_frame: rec[5].parse().map_err(|_| bad(format!("bad start_frame '{}'", &rec[5])))?,
        });
    }
    if row_meta.len() != nrows {
        return Err(Error::Shape {
            expected: nrows,
            got: row_meta.len(),
        });
    }
    let view = row_meta.first().map(|m| m.view).unwrap_or(View::Frontal);
    if row_meta.iter().any(|m| m.view != view) {
        return Err(Error::Usage("feature table mixes views".into()));
    }
    Ok(FeatureMatrix {
        view,
        values: Matrix::from_vec(nrows, columns.len(), data)?,
        columns,
        row_meta,
        degenerate: BTreeMap::new(),
    })
}
