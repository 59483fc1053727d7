//! Modal logic on Kripke models viewed through depth-bounded unravellings,
//! path presheaves and their homotopy theory.

pub mod error;
pub mod factorization;
pub mod fixtures;
pub mod formula;
pub mod hennessy_milner;
pub mod io;
pub mod kripke;
pub mod preservation;
pub mod presheaf;
pub mod random;
pub mod unravel;
pub mod verify;

pub use error::{Error, Result};
pub use formula::Formula;
pub use kripke::{KripkeModel, Label, SyncTree, TreeMorphism, Vocabulary};
