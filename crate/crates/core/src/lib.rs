pub mod cost;
pub mod matcher;
pub mod model;
pub mod plan;
pub mod query;
pub mod rewrite;
pub mod rules;
pub mod scalar;
pub mod search;
pub mod sexpr;
pub mod symbol;
