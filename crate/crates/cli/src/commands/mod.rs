pub mod compromise;
pub mod experiment;
pub mod fit;
pub mod predict;
