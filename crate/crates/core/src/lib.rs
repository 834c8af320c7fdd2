pub mod axioms;
pub mod cli;
pub mod error;
pub mod noise;
pub mod profile;
pub mod ranking;
pub mod rules;
pub mod smoothed;
