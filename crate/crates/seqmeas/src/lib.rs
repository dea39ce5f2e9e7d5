//! Strategic measures and sequential equilibria for finite multistage games
//! with noisy signals.

pub mod error;
pub mod examples;
pub mod format;
pub mod game;
pub mod measure;
pub mod play;
pub mod random_game;
pub mod relevance;
pub mod solver;

pub use error::{Error, Result};
