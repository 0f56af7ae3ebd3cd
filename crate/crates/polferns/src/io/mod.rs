//! On-disk formats. Everything is little-endian; every reader validates
//! sizes against the header before allocating.

mod labels;
mod model;
mod posterior;
mod raster;

pub use labels::{decode_label_map, encode_label_map, read_label_map, write_label_map};
pub use model::{load_model, parse_model, save_model, serialize_model, MODEL_HEADER};
pub use posterior::{read_posteriors, write_posteriors, PosteriorRaster, POSTERIOR_MAGIC};
pub use raster::{
    body_len, read_covariance_raster, write_covariance_raster, CovarianceRaster, Precision,
    RASTER_HEADER_LEN, RASTER_MAGIC,
};
