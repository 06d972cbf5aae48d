pub mod analysis;
pub mod cli;
pub mod matching;
pub mod midi_io;
pub mod patterns;
pub mod render;
pub mod score;
pub mod simulator;
pub mod stats;
