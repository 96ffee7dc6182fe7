//! Dataset ingestion (IDX image/label binaries, numeric CSV), label
//! remapping, and run-manifest persistence.

mod csv;
mod idx;
mod manifest;

pub use csv::{binarize, load_csv_features};
pub use idx::{load_idx_pair, IdxFile, IdxHeader, IMAGES_MAGIC, LABELS_MAGIC};
pub use manifest::{read_manifest, write_manifest, RunManifest};
