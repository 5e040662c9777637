//! Tooling for building emotion lexicons for low-resource languages: term
//! mining, LLM-assisted and human annotation, reliability statistics, and
//! lexicon-based emotion extraction with cross-lingual consistency checks.

pub mod annotation;
pub mod cli;
pub mod corpus;
pub mod emotion;
pub mod error;
pub mod evaluate;
pub mod extract;
pub mod io;
pub mod lexicon;
pub mod llm;
pub mod reliability;
pub mod service;

pub use emotion::{EmotionDimension, EmotionSet};
pub use error::{Error, Result};
pub use extract::{extract, EmotionProfile, Extractor, MatchMode};
pub use lexicon::{Lexicon, LexiconEntry, Provenance};
