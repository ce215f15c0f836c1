//! Ensemble classifiers, preprocessing, metrics and exploratory statistics
//! for daily weather classification on NASA POWER point data.

pub mod analysis;
pub mod cart;
pub mod config;
pub mod ensembles;
pub mod ingest;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod seed;
pub mod stacking;
pub mod stats;
