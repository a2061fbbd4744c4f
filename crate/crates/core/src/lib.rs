//! Evaluation of first-order counting queries on sparse graphs.
//!
//! Sentences of FO with counting atoms `#y φ > N` are checked approximately
//! by quantifier elimination over functional representations of the graph,
//! answering `1`, `0`, or unknown. Unknown is only returned when perturbing
//! thresholds by a factor `1+ε` can flip the answer. Counting terms without
//! nested counting can be optimized exactly over tuples of vertices.

pub mod bits;
pub mod clause;
pub mod count;
pub mod error;
pub mod gen;
pub mod graph;
pub mod logic;
pub mod optimize;
pub mod oracle;
pub mod qe;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{load_graph, LabeledGraph};
pub use logic::{parse_query, Cmp, Formula, Term};
pub use structure::{FunctionalStructure, Signature};
