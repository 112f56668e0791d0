//! Exact and approximate Nash equilibria of multiplayer normal-form games.

pub mod bench;
pub mod error;
pub mod formulation;
pub mod game;
pub mod linalg;
pub mod local_search;
pub mod lp;
pub mod oracle;
pub mod relax;
pub mod sbnb;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Game = game::NormalFormGame<f64>;
pub type Game32 = game::NormalFormGame<f32>;
pub type Profile = game::MixedProfile<f64>;
