//! Vocabulary weaving: pick words in a native-language text that a learner
//! should see in the target language, and translate them in place.

pub mod annotate;
pub mod cli;
pub mod compat;
pub mod config;
pub mod error;
pub mod guess;
pub mod select;
pub mod service;
pub mod store;
pub mod text;
pub mod translate;
pub mod tutor;
