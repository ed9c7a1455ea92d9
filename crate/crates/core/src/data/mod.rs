//! Datasets: the synthetic circle benchmark, OFF meshes, surface sampling, normalization and
//! on-disk formats.

pub mod circles;
pub mod io;
pub mod off;
pub mod preprocess;
pub mod surface;

pub use circles::{gen_circles, CircleDataset, CircleDatasetConfig, CircleTruth};
pub use io::{
    load_dataset, read_cloud, read_manifest, write_cloud_binary, write_cloud_text, write_manifest, Dataset,
    ManifestEntry,
};
pub use off::{load_mesh, parse_off, write_off};
pub use preprocess::{augmentation_angles, dataset_normalization, normalize, rotate_xy, PreprocessConfig};
pub use surface::sample_surface;
