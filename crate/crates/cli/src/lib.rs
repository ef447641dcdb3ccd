//! Session language for the residue-current engine: parser, canonical printer and runner.

pub mod ast;
pub mod parse;
pub mod run;
