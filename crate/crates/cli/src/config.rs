//! Run configuration: a flat `key = value` file merged under command flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gaitscope::evaluation::EvalConfig;
use gaitscope::explain::{DEFAULT_REPEATS, DEFAULT_TOP_K};
use gaitscope::features::FeatureGrid;
use gaitscope::learners::ModelKind;
use gaitscope::{Error, Result, View};

use crate::CommonArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewSelection {
    Frontal,
    Sagittal,
    Combined,
}

impl ViewSelection {
    pub fn views(self) -> Vec<View> {
        match self {
            ViewSelection::Frontal => vec![View::Frontal],
            ViewSelection::Sagittal => vec![View::Sagittal],
            ViewSelection::Combined => vec![View::Frontal, View::Sagittal],
        }
    }
}

impl FromStr for ViewSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frontal" => Ok(ViewSelection::Frontal),
            "sagittal" => Ok(ViewSelection::Sagittal),
            "combined" => Ok(ViewSelection::Combined),
            _ => Err(Error::Usage(format!("unknown view '{s}' (expected frontal, sagittal or combined)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub view: ViewSelection,
    pub model: ModelKind,
    pub repeats: usize,
    pub budget: usize,
    pub fdr: f64,
    pub smote_k: usize,
    pub seed: u64,
    pub top_k: usize,
    pub importance_repeats: usize,
    pub grid: FeatureGrid,
    pub search: Vec<(String, String)>,
}

const KEYS: [&str; 12] = [
    "manifest",
    "features",
    "out",
    "view",
    "model",
    "repeats",
    "budget",
    "fdr",
    "smote_k",
    "seed",
    "top_k",
    "importance_repeats",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        let known = KEYS.contains(&k) || k.starts_with("grid.") || k.starts_with("search.");
        if !known {
            return Err(Error::Config(format!("config line {}: unknown key '{k}'", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("config line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

fn split_pair(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Usage(format!("expected KEY=VALUE, got '{s}'")))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                (parse_config(&text)?, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        let path = |flag: &Option<PathBuf>, key: &str| flag.clone().or_else(|| file.get(key).map(|v| base.join(v)));
        fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(v),
                (None, Some(v)) => parse(key, v),
                (None, None) => Ok(default),
            }
        }
        let view = match args.view.as_deref().or(file.get("view").map(String::as_str)) {
            Some(v) => v.parse()?,
            None => ViewSelection::Combined,
        };
        let model = match args.model.as_deref().or(file.get("model").map(String::as_str)) {
            Some(m) => m.parse()?,
            None => ModelKind::Gbt,
        };

        let mut grid = FeatureGrid::default();
        let mut search = Vec::new();
        for (k, v) in &file {
            if let Some(key) = k.strip_prefix("grid.") {
                grid.set(key, v)?;
            } else if let Some(key) = k.strip_prefix("search.") {
                search.push((key.to_string(), v.clone()));
            }
        }
        for g in &args.grid {
            let (k, v) = split_pair(g)?;
            grid.set(&k, &v)?;
        }
        for s in &args.search {
            search.push(split_pair(s)?);
        }

        Ok(RunConfig {
            manifest: path(&args.manifest, "manifest"),
            features: path(&args.features, "features"),
            out: path(&args.out, "out"),
            view,
            model,
            repeats: pick(args.repeats, &file, "repeats", 10)?,
            budget: pick(args.budget, &file, "budget", 30)?,
            fdr: pick(args.fdr, &file, "fdr", gaitscope::select::DEFAULT_FDR)?,
            smote_k: pick(None, &file, "smote_k", 5)?,
            seed: pick(args.seed, &file, "seed", 0)?,
            top_k: pick(args.top_k, &file, "top_k", DEFAULT_TOP_K)?,
            importance_repeats: pick(None, &file, "importance_repeats", DEFAULT_REPEATS)?,
            grid,
            search,
        })
    }

    pub fn require_out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| Error::Usage("--out is required".into()))
    }

    pub fn require_manifest(&self) -> Result<&Path> {
        let m = self
            .manifest
            .as_deref()
            .ok_or_else(|| Error::Usage("--manifest is required".into()))?;
        if !m.is_file() {
            return Err(Error::Usage(format!("manifest {} does not exist", m.display())));
        }
        Ok(m)
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        let mut cfg = EvalConfig::new(self.model);
        cfg.budget = self.budget;
        cfg.n_repeats = self.repeats;
        cfg.fdr_level = self.fdr;
        cfg.smote_k = self.smote_k;
        cfg.seed = self.seed;
        for (k, v) in &self.search {
            cfg.space.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
