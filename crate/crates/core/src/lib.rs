//! Generation, validation and evaluation of FOON cooking task trees produced
//! by a text-generation model.

pub mod foon;
pub mod client;
pub mod pipeline;
pub mod prompt;
pub mod eval;
