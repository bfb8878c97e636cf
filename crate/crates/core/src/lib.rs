pub mod analyzer;
pub mod blocks;
pub mod corpus;
pub mod crypto;
pub mod format;
pub mod interpreter;
pub mod program;
pub mod tasks;
pub mod validate;
pub mod value;
