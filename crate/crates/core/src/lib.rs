//! Complementary hypothesis generation.
//!
//! Candidates for a target property are scored by two signals: how far they
//! sit from the property in the author/concept hypergraph of prior literature
//! (alienness), and how close their word embedding is to the property's
//! (plausibility). The two are rank-normalized, standardized and mixed by a
//! coefficient `beta` in `[-1, 1]`. Negative `beta` mimics the scientific
//! crowd, positive `beta` avoids it.
//!
//! The [`evaluation`] module scores prediction sets against later
//! discoveries and theoretical merit scores, and [`synth`] generates
//! planted corpora for end-to-end checks.

pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod format;
pub mod hypergraph;
pub mod ranker;
pub mod stats;
pub mod synth;

pub use corpus::{CandidateSet, Corpus, CorpusError, CorpusSchema, CorpusSlice, PaperRecord};
pub use embedding::{EmbeddingError, EmbeddingTable};
pub use hypergraph::{Distance, DistanceVector, GraphError, Hypergraph, NodeId};
pub use ranker::{
    generate_predictions, PredictionSet, RankError, RankerConfig, SignalRegistry, SignalTable,
};
