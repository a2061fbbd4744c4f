//! Formulas of first-order logic with counting atoms `#y φ > N`.

pub mod ast;
pub mod parser;
pub mod transform;

pub use ast::{name, Cmp, ConjClause, Formula, Name, Term};
pub use parser::{parse_query, rename_apart};
pub use transform::{
    is_cpnf, reduce_depth, relational_to_functional, similar_extremes, similarity_interval, to_cpnf, to_dnf,
};
