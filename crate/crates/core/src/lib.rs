pub mod distribution;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod holonomy;
pub mod jet;
pub mod rigidity;
pub mod run;
pub mod sampling;
pub mod zoo;
