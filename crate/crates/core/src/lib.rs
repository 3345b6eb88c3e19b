//! Inferring party vote shares from the sentiment of political tweets.
//!
//! Tweets are selected per party by keyword, scored against a
//! SentiWordNet-derived lexicon, aggregated per poll window, and calibrated
//! against poll shares with a single weight per party.

pub mod aggregation;
pub mod artifacts;
pub mod calibration;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod keywords;
pub mod lexicon;
pub mod party;
pub mod pipeline;
pub mod porter;
pub mod scorer;
pub mod synthetic;
pub mod tagger;

pub use error::{Error, Result};
pub use party::{Party, PerParty};
