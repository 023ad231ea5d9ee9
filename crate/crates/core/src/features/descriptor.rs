//! Feature identities: families, parameterized kinds, per-channel descriptors
//! and the per-view catalog.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{keypoint_id, View, KEYPOINT_NAMES, NUM_KEYPOINTS};

macro_rules! name_enum {
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

            fn from_str(s: &str) -> Result<Self> {
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

name_enum! {
    /// The 37 feature families.
    Family {
        AbsEnergy => "abs_energy",
        AbsoluteMaximum => "absolute_maximum",
        AbsoluteSumOfChanges => "absolute_sum_of_changes",
        AggAutocorrelation => "agg_autocorrelation",
        AggLinearTrend => "agg_linear_trend",
        ApproximateEntropy => "approximate_entropy",
        Autocorrelation => "autocorrelation",
        BenfordCorrelation => "benford_correlation",
        BinnedEntropy => "binned_entropy",
        C3 => "c3",
        ChangeQuantiles => "change_quantiles",
        CidCe => "cid_ce",
        CountAbove => "count_above",
        CountBelow => "count_below",
        CwtCoefficients => "cwt_coefficients",
        FftAggregated => "fft_aggregated",
        FftCoefficient => "fft_coefficient",
        FourierEntropy => "fourier_entropy",
        LinearTrend => "linear_trend",
        MaxLangevinFixedPoint => "max_langevin_fixed_point",
        Maximum => "maximum",
        Mean => "mean",
        MeanAbsChange => "mean_abs_change",
        MeanNAbsoluteMax => "mean_n_absolute_max",
        Median => "median",
        Minimum => "minimum",
        NumberCrossingM => "number_crossing_m",
        NumberPeaks => "number_peaks",
        PermutationEntropy => "permutation_entropy",
        Quantile => "quantile",
        RangeCount => "range_count",
        RootMeanSquare => "root_mean_square",
        SampleEntropy => "sample_entropy",
        StandardDeviation => "standard_deviation",
        SumValues => "sum_values",
        Variance => "variance",
        VariationCoefficient => "variation_coefficient",
    }
}

impl Family {
    /// Families that carry no signal in the sagittal view and are extracted
    /// for frontal recordings only.
    pub fn frontal_only(self) -> bool {
        matches!(
            self,
            Family::BinnedEntropy
                | Family::CountAbove
                | Family::CountBelow
                | Family::FourierEntropy
                | Family::NumberPeaks
                | Family::RangeCount
        )
    }

    pub fn in_view(self, view: View) -> bool {
        view == View::Frontal || !self.frontal_only()
    }
}

name_enum! {
    StatAgg {
        Mean => "mean",
        Var => "var",
    }
}

name_enum! {
    TrendAttr {
        Slope => "slope",
        Intercept => "intercept",
        Rvalue => "rvalue",
        Stderr => "stderr",
    }
}

name_enum! {
    FftAttr {
        Real => "real",
        Imag => "imag",
        Abs => "abs",
        Angle => "angle",
    }
}

name_enum! {
    SpectralAgg {
        Centroid => "centroid",
        Variance => "variance",
        Skew => "skew",
        Kurtosis => "kurtosis",
    }
}

name_enum! {
    Axis {
        X => "x",
        Y => "y",
        Z => "z",
    }
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// A feature family together with its parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    AbsEnergy,
    AbsoluteMaximum,
    AbsoluteSumOfChanges,
    AggAutocorrelation { f_agg: StatAgg, maxlag: usize },
    /// Chunks are aggregated with the mean before the regression.
    AggLinearTrend { chunk_len: usize, attr: TrendAttr },
    ApproximateEntropy { m: usize, r: f64 },
    Autocorrelation { lag: usize },
    BenfordCorrelation,
    BinnedEntropy { max_bins: usize },
    C3 { lag: usize },
    ChangeQuantiles { ql: f64, qh: f64, isabs: bool, f_agg: StatAgg },
    CidCe { normalize: bool },
    CountAbove { t: f64 },
    CountBelow { t: f64 },
    CwtCoefficients { w: usize, coeff: usize },
    FftAggregated { aggtype: SpectralAgg },
    FftCoefficient { coeff: usize, attr: FftAttr },
    FourierEntropy { bins: usize },
    LinearTrend { attr: TrendAttr },
    MaxLangevinFixedPoint { m: usize, r: usize },
    Maximum,
    Mean,
    MeanAbsChange,
    MeanNAbsoluteMax { n: usize },
    Median,
    Minimum,
    NumberCrossingM { m: f64 },
    NumberPeaks { n: usize },
    PermutationEntropy { dimension: usize, tau: usize },
    Quantile { q: f64 },
    RangeCount { min: f64, max: f64 },
    RootMeanSquare,
    SampleEntropy { m: usize, r: f64 },
    StandardDeviation,
    SumValues,
    Variance,
    VariationCoefficient,
}

impl FeatureKind {
    pub fn family(&self) -> Family {
        use FeatureKind as K;
        match self {
            K::AbsEnergy => Family::AbsEnergy,
            K::AbsoluteMaximum => Family::AbsoluteMaximum,
            K::AbsoluteSumOfChanges => Family::AbsoluteSumOfChanges,
            K::AggAutocorrelation { .. } => Family::AggAutocorrelation,
            K::AggLinearTrend { .. } => Family::AggLinearTrend,
            K::ApproximateEntropy { .. } => Family::ApproximateEntropy,
            K::Autocorrelation { .. } => Family::Autocorrelation,
            K::BenfordCorrelation => Family::BenfordCorrelation,
            K::BinnedEntropy { .. } => Family::BinnedEntropy,
            K::C3 { .. } => Family::C3,
            K::ChangeQuantiles { .. } => Family::ChangeQuantiles,
            K::CidCe { .. } => Family::CidCe,
            K::CountAbove { .. } => Family::CountAbove,
            K::CountBelow { .. } => Family::CountBelow,
            K::CwtCoefficients { .. } => Family::CwtCoefficients,
            K::FftAggregated { .. } => Family::FftAggregated,
            K::FftCoefficient { .. } => Family::FftCoefficient,
            K::FourierEntropy { .. } => Family::FourierEntropy,
            K::LinearTrend { .. } => Family::LinearTrend,
            K::MaxLangevinFixedPoint { .. } => Family::MaxLangevinFixedPoint,
            K::Maximum => Family::Maximum,
            K::Mean => Family::Mean,
            K::MeanAbsChange => Family::MeanAbsChange,
            K::MeanNAbsoluteMax { .. } => Family::MeanNAbsoluteMax,
            K::Median => Family::Median,
            K::Minimum => Family::Minimum,
            K::NumberCrossingM { .. } => Family::NumberCrossingM,
            K::NumberPeaks { .. } => Family::NumberPeaks,
            K::PermutationEntropy { .. } => Family::PermutationEntropy,
            K::Quantile { .. } => Family::Quantile,
            K::RangeCount { .. } => Family::RangeCount,
            K::RootMeanSquare => Family::RootMeanSquare,
            K::SampleEntropy { .. } => Family::SampleEntropy,
            K::StandardDeviation => Family::StandardDeviation,
            K::SumValues => Family::SumValues,
            K::Variance => Family::Variance,
            K::VariationCoefficient => Family::VariationCoefficient,
        }
    }

    /// Parameters as `(name, rendered value)` pairs sorted by name.
    pub fn params(&self) -> Vec<(&'static str, String)> {
        use FeatureKind as K;
        let mut p: Vec<(&'static str, String)> = match *self {
            K::AggAutocorrelation { f_agg, maxlag } => {
                vec![("f_agg", f_agg.to_string()), ("maxlag", maxlag.to_string())]
            }
            K::AggLinearTrend { chunk_len, attr } => vec![
                ("attr", attr.to_string()),
                ("chunk_len", chunk_len.to_string()),
                ("f_agg", "mean".to_string()),
            ],
            K::ApproximateEntropy { m, r } | K::SampleEntropy { m, r } => {
                vec![("m", m.to_string()), ("r", r.to_string())]
            }
            K::Autocorrelation { lag } | K::C3 { lag } => vec![("lag", lag.to_string())],
            K::BinnedEntropy { max_bins } => vec![("max_bins", max_bins.to_string())],
            K::ChangeQuantiles { ql, qh, isabs, f_agg } => vec![
                ("f_agg", f_agg.to_string()),
                ("isabs", isabs.to_string()),
                ("qh", qh.to_string()),
                ("ql", ql.to_string()),
            ],
            K::CidCe { normalize } => vec![("normalize", normalize.to_string())],
            K::CountAbove { t } | K::CountBelow { t } => vec![("t", t.to_string())],
            K::CwtCoefficients { w, coeff } => {
                vec![("coeff", coeff.to_string()), ("w", w.to_string())]
            }
            K::FftAggregated { aggtype } => vec![("aggtype", aggtype.to_string())],
            K::FftCoefficient { coeff, attr } => {
                vec![("attr", attr.to_string()), ("coeff", coeff.to_string())]
            }
            K::FourierEntropy { bins } => vec![("bins", bins.to_string())],
            K::LinearTrend { attr } => vec![("attr", attr.to_string())],
            K::MaxLangevinFixedPoint { m, r } => vec![("m", m.to_string()), ("r", r.to_string())],
            K::MeanNAbsoluteMax { n } | K::NumberPeaks { n } => vec![("n", n.to_string())],
            K::NumberCrossingM { m } => vec![("m", m.to_string())],
            K::PermutationEntropy { dimension, tau } => {
                vec![("dimension", dimension.to_string()), ("tau", tau.to_string())]
            }
            K::Quantile { q } => vec![("q", q.to_string())],
            K::RangeCount { min, max } => vec![("max", max.to_string()), ("min", min.to_string())],
            K::AbsEnergy
            | K::AbsoluteMaximum
            | K::AbsoluteSumOfChanges
            | K::BenfordCorrelation
            | K::Maximum
            | K::Mean
            | K::MeanAbsChange
            | K::Median
            | K::Minimum
            | K::RootMeanSquare
            | K::StandardDeviation
            | K::SumValues
            | K::Variance
            | K::VariationCoefficient => Vec::new(),
        };
        p.sort_by_key(|(k, _)| *k);
        p
    }

    /// Rebuilds a kind from its family and rendered parameters.
    pub fn from_parts(family: Family, params: &[(&str, &str)]) -> Result<FeatureKind> {
        let get = |name: &str| -> Result<&str> {
            params
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Schema(format!("{family}: missing parameter '{name}'")))
        };
        fn num<T: FromStr>(family: Family, name: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Schema(format!("{family}: bad value '{v}' for '{name}'")))
        }
        let int = |name: &str| -> Result<usize> { num(family, name, get(name)?) };
        let float = |name: &str| -> Result<f64> { num(family, name, get(name)?) };
        let flag = |name: &str| -> Result<bool> { num(family, name, get(name)?) };

        use FeatureKind as K;
        let kind = match family {
            Family::AbsEnergy => K::AbsEnergy,
            Family::AbsoluteMaximum => K::AbsoluteMaximum,
            Family::AbsoluteSumOfChanges => K::AbsoluteSumOfChanges,
            Family::AggAutocorrelation => K::AggAutocorrelation {
                f_agg: get("f_agg")?.parse()?,
                maxlag: int("maxlag")?,
            },
            Family::AggLinearTrend => {
                if get("f_agg")? != "mean" {
                    return Err(Error::Schema("agg_linear_trend: only f_agg=mean".into()));
                }
                K::AggLinearTrend {
                    chunk_len: int("chunk_len")?,
                    attr: get("attr")?.parse()?,
                }
            }
            Family::ApproximateEntropy => K::ApproximateEntropy {
                m: int("m")?,
                r: float("r")?,
            },
            Family::Autocorrelation => K::Autocorrelation { lag: int("lag")? },
            Family::BenfordCorrelation => K::BenfordCorrelation,
            Family::BinnedEntropy => K::BinnedEntropy {
                max_bins: int("max_bins")?,
            },
            Family::C3 => K::C3 { lag: int("lag")? },
            Family::ChangeQuantiles => K::ChangeQuantiles {
                ql: float("ql")?,
                qh: float("qh")?,
                isabs: flag("isabs")?,
                f_agg: get("f_agg")?.parse()?,
            },
            Family::CidCe => K::CidCe {
                normalize: flag("normalize")?,
            },
            Family::CountAbove => K::CountAbove { t: float("t")? },
            Family::CountBelow => K::CountBelow { t: float("t")? },
            Family::CwtCoefficients => K::CwtCoefficients {
                w: int("w")?,
                coeff: int("coeff")?,
            },
            Family::FftAggregated => K::FftAggregated {
                aggtype: get("aggtype")?.parse()?,
            },
            Family::FftCoefficient => K::FftCoefficient {
                coeff: int("coeff")?,
                attr: get("attr")?.parse()?,
            },
            Family::FourierEntropy => K::FourierEntropy { bins: int("bins")? },
            Family::LinearTrend => K::LinearTrend {
                attr: get("attr")?.parse()?,
            },
            Family::MaxLangevinFixedPoint => K::MaxLangevinFixedPoint {
                m: int("m")?,
                r: int("r")?,
            },
            Family::Maximum => K::Maximum,
            Family::Mean => K::Mean,
            Family::MeanAbsChange => K::MeanAbsChange,
            Family::MeanNAbsoluteMax => K::MeanNAbsoluteMax { n: int("n")? },
            Family::Median => K::Median,
            Family::Minimum => K::Minimum,
            Family::NumberCrossingM => K::NumberCrossingM { m: float("m")? },
            Family::NumberPeaks => K::NumberPeaks { n: int("n")? },
            Family::PermutationEntropy => K::PermutationEntropy {
                dimension: int("dimension")?,
                tau: int("tau")?,
            },
            Family::Quantile => K::Quantile { q: float("q")? },
            Family::RangeCount => K::RangeCount {
                min: float("min")?,
                max: float("max")?,
            },
            Family::RootMeanSquare => K::RootMeanSquare,
            Family::SampleEntropy => K::SampleEntropy {
                m: int("m")?,
                r: float("r")?,
            },
            Family::StandardDeviation => K::StandardDeviation,
            Family::SumValues => K::SumValues,
            Family::Variance => K::Variance,
            Family::VariationCoefficient => K::VariationCoefficient,
        };
        let expected = kind.params();
        if expected.len() != params.len() {
            return Err(Error::Schema(format!(
                "{family}: expected {} parameters, got {}",
                expected.len(),
                params.len()
            )));
        }
        Ok(kind)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family().as_str())?;
        let params = self.params();
        if !params.is_empty() {
            f.write_str("__")?;
            for (i, (k, v)) in params.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{k}={v}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = match s.split_once("__") {
            Some((f, r)) => (f, Some(r)),
            None => (s, None),
        };
        let family: Family = family.parse()?;
        let params: Vec<(&str, &str)> = match rest {
            None => Vec::new(),
            Some(r) => r
                .split(',')
                .map(|kv| {
                    kv.split_once('=')
                        .ok_or_else(|| Error::Schema(format!("bad parameter '{kv}' in '{s}'")))
                })
                .collect::<Result<_>>()?,
        };
        let kind = FeatureKind::from_parts(family, &params)?;
        // reject non-canonical spellings so the rendering stays bijective
        if kind.to_string() != s {
            return Err(Error::Schema(format!("non-canonical feature name '{s}'")));
        }
        Ok(kind)
    }
}

/// One keypoint coordinate series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub keypoint: u8,
    pub axis: Axis,
}

impl Channel {
    pub fn new(keypoint: usize, axis: Axis) -> Self {
        assert!(keypoint < NUM_KEYPOINTS, "keypoint id {keypoint} out of range");
        Channel {
            keypoint: keypoint as u8,
            axis,
        }
    }

    /// Column index within a window (`3 * keypoint + axis`).
    pub fn index(self) -> usize {
        3 * usize::from(self.keypoint) + self.axis.index()
    }

    pub fn from_index(i: usize) -> Self {
        Channel::new(i / 3, Axis::ALL[i % 3])
    }

    pub fn all() -> impl Iterator<Item = Channel> {
        (0..NUM_KEYPOINTS * 3).map(Channel::from_index)
    }

    pub fn keypoint_name(self) -> &'static str {
        KEYPOINT_NAMES[usize::from(self.keypoint)]
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.keypoint_name(), self.axis)
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, axis) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::Schema(format!("bad channel '{s}'")))?;
        let kp = keypoint_id(name).ok_or_else(|| Error::Schema(format!("unknown keypoint '{name}'")))?;
        Ok(Channel::new(kp, axis.parse()?))
    }
}

/// Column identity: `<keypoint>_<axis>__<family>[__<param=value,...>]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub channel: Channel,
    pub kind: FeatureKind,
}

impl FeatureDescriptor {
    pub fn family(&self) -> Family {
        self.kind.family()
    }
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}__{}", self.channel, self.kind)
    }
}

impl FromStr for FeatureDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (channel, kind) = s
            .split_once("__")
            .ok_or_else(|| Error::Schema(format!("bad descriptor '{s}'")))?;
        Ok(FeatureDescriptor {
            channel: channel.parse()?,
            kind: kind.parse()?,
        })
    }
}

/// Parameter grid for the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    pub autocorrelation_lags: Vec<usize>,
    pub c3_lags: Vec<usize>,
    pub quantiles: Vec<f64>,
    pub fft_coeffs: Vec<usize>,
    pub fft_attrs: Vec<FftAttr>,
    pub cwt_widths: Vec<usize>,
    pub cwt_coeffs: Vec<usize>,
    pub change_quantile_corridors: Vec<(f64, f64)>,
    pub change_quantile_aggs: Vec<StatAgg>,
    pub change_quantile_isabs: bool,
    pub mean_n_absolute_max: Vec<usize>,
    pub number_crossing_m: Vec<f64>,
    pub count_thresholds: Vec<f64>,
    pub range_count: (f64, f64),
    pub number_peaks: Vec<usize>,
    pub agg_autocorrelation_aggs: Vec<StatAgg>,
    pub agg_autocorrelation_maxlag: usize,
    pub agg_linear_trend_chunks: Vec<usize>,
    pub agg_linear_trend_attrs: Vec<TrendAttr>,
    pub linear_trend_attrs: Vec<TrendAttr>,
    pub cid_ce_normalize: Vec<bool>,
    pub entropy_m: usize,
    pub entropy_r: f64,
    pub binned_entropy_bins: usize,
    pub fourier_entropy_bins: usize,
    pub permutation_entropy: (usize, usize),
    pub langevin: (usize, usize),
}

impl Default for FeatureGrid {
    fn default() -> Self {
        FeatureGrid {
            autocorrelation_lags: vec![1, 2, 3],
            c3_lags: vec![1, 2, 3],
            quantiles: vec![0.1, 0.25, 0.75, 0.9],
            fft_coeffs: (0..8).collect(),
            fft_attrs: FftAttr::ALL.to_vec(),
            cwt_widths: vec![2, 5, 10, 20],
            cwt_coeffs: (0..5).collect(),
            change_quantile_corridors: vec![(0.0, 0.4), (0.4, 0.8), (0.2, 1.0)],
            change_quantile_aggs: vec![StatAgg::Mean, StatAgg::Var],
            change_quantile_isabs: true,
            mean_n_absolute_max: vec![3, 5],
            number_crossing_m: vec![-1.0, 0.0, 1.0],
            count_thresholds: vec![0.0],
            range_count: (-1.0, 1.0),
            number_peaks: vec![1, 3],
            agg_autocorrelation_aggs: vec![StatAgg::Mean, StatAgg::Var],
            agg_autocorrelation_maxlag: 10,
            agg_linear_trend_chunks: vec![5, 10],
            agg_linear_trend_attrs: vec![TrendAttr::Slope, TrendAttr::Intercept],
            linear_trend_attrs: TrendAttr::ALL.to_vec(),
            cid_ce_normalize: vec![false, true],
            entropy_m: 2,
            entropy_r: 0.2,
            binned_entropy_bins: 10,
            fourier_entropy_bins: 10,
            permutation_entropy: (3, 1),
            langevin: (3, 10),
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad list element '{v}'")))
        })
        .collect()
}

impl FeatureGrid {
    /// Applies one `grid.<field>=<comma list>` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "autocorrelation_lags" => self.autocorrelation_lags = parse_list(key, value)?,
            "c3_lags" => self.c3_lags = parse_list(key, value)?,
            "quantiles" => self.quantiles = parse_list(key, value)?,
            "fft_coeffs" => self.fft_coeffs = parse_list(key, value)?,
            "fft_attrs" => self.fft_attrs = parse_list(key, value)?,
            "cwt_widths" => self.cwt_widths = parse_list(key, value)?,
            "cwt_coeffs" => self.cwt_coeffs = parse_list(key, value)?,
            "mean_n_absolute_max" => self.mean_n_absolute_max = parse_list(key, value)?,
            "number_crossing_m" => self.number_crossing_m = parse_list(key, value)?,
            "count_thresholds" => self.count_thresholds = parse_list(key, value)?,
            "number_peaks" => self.number_peaks = parse_list(key, value)?,
            "agg_linear_trend_chunks" => self.agg_linear_trend_chunks = parse_list(key, value)?,
            "linear_trend_attrs" => self.linear_trend_attrs = parse_list(key, value)?,
            "cid_ce_normalize" => self.cid_ce_normalize = parse_list(key, value)?,
            _ => return Err(Error::Config(format!("unknown grid key '{key}'"))),
        }
        Ok(())
    }

    /// Per-channel feature kinds for `view`, in catalog order.
    pub fn catalog(&self, view: View) -> Vec<FeatureKind> {
        use FeatureKind as K;
        let mut out = Vec::new();
        for &family in Family::ALL {
            if !family.in_view(view) {
                continue;
            }
            match family {
                Family::AbsEnergy => out.push(K::AbsEnergy),
                Family::AbsoluteMaximum => out.push(K::AbsoluteMaximum),
                Family::AbsoluteSumOfChanges => out.push(K::AbsoluteSumOfChanges),
                Family::AggAutocorrelation => {
                    out.extend(self.agg_autocorrelation_aggs.iter().map(|&f_agg| {
                        K::AggAutocorrelation {
                            f_agg,
                            maxlag: self.agg_autocorrelation_maxlag,
                        }
                    }))
                }
                Family::AggLinearTrend => {
                    for &chunk_len in &self.agg_linear_trend_chunks {
                        for &attr in &self.agg_linear_trend_attrs {
                            out.push(K::AggLinearTrend { chunk_len, attr });
                        }
                    }
                }
                Family::ApproximateEntropy => out.push(K::ApproximateEntropy {
                    m: self.entropy_m,
                    r: self.entropy_r,
                }),
                Family::Autocorrelation => out.extend(
                    self.autocorrelation_lags
                        .iter()
                        .map(|&lag| K::Autocorrelation { lag }),
                ),
                Family::BenfordCorrelation => out.push(K::BenfordCorrelation),
                Family::BinnedEntropy => out.push(K::BinnedEntropy {
                    max_bins: self.binned_entropy_bins,
                }),
                Family::C3 => out.extend(self.c3_lags.iter().map(|&lag| K::C3 { lag })),
                Family::ChangeQuantiles => {
                    for &(ql, qh) in &self.change_quantile_corridors {
                        for &f_agg in &self.change_quantile_aggs {
                            out.push(K::ChangeQuantiles {
                                ql,
                                qh,
                                isabs: self.change_quantile_isabs,
                                f_agg,
                            });
                        }
                    }
                }
                Family::CidCe => out.extend(
                    self.cid_ce_normalize
                        .iter()
                        .map(|&normalize| K::CidCe { normalize }),
                ),
                Family::CountAbove => {
                    out.extend(self.count_thresholds.iter().map(|&t| K::CountAbove { t }))
                }
                Family::CountBelow => {
                    out.extend(self.count_thresholds.iter().map(|&t| K::CountBelow { t }))
                }
                Family::CwtCoefficients => {
                    for &w in &self.cwt_widths {
                        for &coeff in &self.cwt_coeffs {
                            out.push(K::CwtCoefficients { w, coeff });
                        }
                    }
                }
                Family::FftAggregated => out.extend(
                    SpectralAgg::ALL
                        .iter()
                        .map(|&aggtype| K::FftAggregated { aggtype }),
                ),
                Family::FftCoefficient => {
                    for &coeff in &self.fft_coeffs {
                        for &attr in &self.fft_attrs {
                            out.push(K::FftCoefficient { coeff, attr });
                        }
                    }
                }
                Family::FourierEntropy => out.push(K::FourierEntropy {
                    bins: self.fourier_entropy_bins,
                }),
                Family::LinearTrend => out.extend(
                    self.linear_trend_attrs
                        .iter()
                        .map(|&attr| K::LinearTrend { attr }),
                ),
                Family::MaxLangevinFixedPoint => out.push(K::MaxLangevinFixedPoint {
                    m: self.langevin.0,
                    r: self.langevin.1,
                }),
                Family::Maximum => out.push(K::Maximum),
                Family::Mean => out.push(K::Mean),
                Family::MeanAbsChange => out.push(K::MeanAbsChange),
                Family::MeanNAbsoluteMax => out.extend(
                    self.mean_n_absolute_max
                        .iter()
                        .map(|&n| K::MeanNAbsoluteMax { n }),
                ),
                Family::Median => out.push(K::Median),
                Family::Minimum => out.push(K::Minimum),
                Family::NumberCrossingM => out.extend(
                    self.number_crossing_m
                        .iter()
                        .map(|&m| K::NumberCrossingM { m }),
                ),
                Family::NumberPeaks => {
                    out.extend(self.number_peaks.iter().map(|&n| K::NumberPeaks { n }))
                }
                Family::PermutationEntropy => out.push(K::PermutationEntropy {
                    dimension: self.permutation_entropy.0,
                    tau: self.permutation_entropy.1,
                }),
                Family::Quantile => out.extend(self.quantiles.iter().map(|&q| K::Quantile { q })),
                Family::RangeCount => out.push(K::RangeCount {
                    min: self.range_count.0,
                    max: self.range_count.1,
                }),
                Family::RootMeanSquare => out.push(K::RootMeanSquare),
                Family::SampleEntropy => out.push(K::SampleEntropy {
                    m: self.entropy_m,
                    r: self.entropy_r,
                }),
                Family::StandardDeviation => out.push(K::StandardDeviation),
                Family::SumValues => out.push(K::SumValues),
                Family::Variance => out.push(K::Variance),
                Family::VariationCoefficient => out.push(K::VariationCoefficient),
            }
        }
        out
    }
}

/// Per-channel catalog for `view` with the default grid.
pub fn catalog(view: View) -> Vec<FeatureKind> {
    FeatureGrid::default().catalog(view)
}
