pub mod camnorm;
pub mod cli;
pub mod error;
pub mod features;
pub mod gnomonic;
pub mod icosphere;
pub mod imageio;
pub mod raster;
pub mod resample;
pub mod tangent_store;
