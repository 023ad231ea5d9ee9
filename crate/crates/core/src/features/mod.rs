//! Per-channel time-series features.

pub mod descriptor;
pub mod extract;
pub mod families;

pub use descriptor::{
    catalog, Axis, Channel, Family, FeatureDescriptor, FeatureGrid, FeatureKind, FftAttr,
    SpectralAgg, StatAgg, TrendAttr,
};
pub use extract::{
    compute_feature, extract_matrix, extract_matrix_with, read_matrix_csv, write_matrix_csv,
    FeatureMatrix, RowMeta,
};
pub use families::{evaluate, SeriesContext};
