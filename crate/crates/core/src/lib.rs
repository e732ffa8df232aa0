//! Dictionary-encoded RDF triples with a brute-force, data-parallel search
//! kernel, a small SPARQL subset, and two-stage RDFS entailment rules.

pub mod cli;
pub mod dictionary;
pub mod entailment;
pub mod generator;
pub mod kernel;
pub mod nt_parser;
pub mod query;
pub mod sparql;
pub mod store;

pub use dictionary::{Dictionary, Role, TermId};
pub use kernel::{AnswerBits, MarkSet, PatternKey};
pub use nt_parser::{RawStatement, TermKind, TermToken};
pub use store::{Triple, TripleChunk};
