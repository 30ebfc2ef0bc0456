pub mod error;
pub mod eval;
pub mod fixtures;
pub mod imaging;
pub mod matching;
pub mod synth;
pub mod tracker;
