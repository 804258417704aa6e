pub mod blended;
pub mod copula;
pub mod dependence;
pub mod error;
pub mod inference;
pub mod margins;
pub mod model;
pub mod optim;
pub mod probability;
pub mod quadrature;
pub mod resampling;
pub mod sampler;
pub mod special;
pub mod spline;
pub mod stats;
pub mod weighting;
