//! Per-candidate scoring signals, looked up by name at run time.
//!
//! The ranker needs two raw columns: an alienness signal (larger means
//! further from the crowd around the property) and a plausibility signal
//! (larger means more promising). Both are resolved from a
//! [`SignalRegistry`], so a run can swap either one by configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::RankError;
use crate::embedding::{EmbeddingError, EmbeddingTable};
use crate::hypergraph::{Distance, Hypergraph};

/// Everything a signal may read.
#[derive(Clone, Copy)]
pub struct SignalInputs<'a> {
    pub graph: &'a Hypergraph,
    pub embeddings: &'a EmbeddingTable,
    pub property: &'a str,
}

pub trait Signal: Send + Sync {
    fn name(&self) -> &str;

    /// One raw score per candidate, in input order. `None` drops the
    /// candidate from the pool; an `Err` aborts the run.
    fn score(
        &self,
        inputs: &SignalInputs<'_>,
        candidates: &[&str],
    ) -> Result<Vec<Option<f64>>, RankError>;
}

/// Hop distance from the property in the author/concept hypergraph.
/// Unreachable candidates, and candidates absent from the graph, score `+inf`.
#[derive(Debug, Default, Clone, Copy)]
pub struct HypergraphDistance;

impl Signal for HypergraphDistance {
    fn name(&self) -> &str {
        "spd"
    }

    fn score(
        &self,
        inputs: &SignalInputs<'_>,
        candidates: &[&str],
    ) -> Result<Vec<Option<f64>>, RankError> {
        let graph = inputs.graph;
        let source = graph
            .node_id(inputs.property)
            .ok_or_else(|| RankError::PropertyMissing {
                origin: "hypergraph",
                property: inputs.property.to_owned(),
            })?;
        let dv = graph.spd_from(source)?;
        Ok(candidates
            .iter()
            .map(|c| {
                let d = graph.node_id(c).map_or(Distance::Unreachable, |id| dv.get(id));
                Some(d.as_f64())
            })
            .collect())
    }
}

/// Embedding cosine similarity between property and candidate. Candidates
/// without a usable vector are dropped.
#[derive(Debug, Default, Clone, Copy)]
pub struct EmbeddingCosine;

impl Signal for EmbeddingCosine {
    fn name(&self) -> &str {
        "cosine"
    }

    fn score(
        &self,
        inputs: &SignalInputs<'_>,
        candidates: &[&str],
    ) -> Result<Vec<Option<f64>>, RankError> {
        let table = inputs.embeddings;
        let property = inputs.property;
        if let Err(e) = table.cosine(property, property) {
            return Err(match e {
                EmbeddingError::MissingToken(_) => RankError::PropertyMissing {
                    origin: "embeddings",
                    property: property.to_owned(),
                },
                other => other.into(),
            });
        }
        Ok(candidates
            .par_iter()
            .map(|c| table.cosine(property, c).ok())
            .collect())
    }
}

#[derive(Clone, Default)]
pub struct SignalRegistry {
    signals: BTreeMap<String, Arc<dyn Signal>>,
}

impl SignalRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `spd` and `cosine`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(HypergraphDistance));
        r.register(Arc::new(EmbeddingCosine));
        r
    }

    /// Registers under the signal's own name, returning any signal it replaces.
    pub fn register(&mut self, signal: Arc<dyn Signal>) -> Option<Arc<dyn Signal>> {
        self.signals.insert(signal.name().to_owned(), signal)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Signal>, RankError> {
        self.signals
            .get(name)
            .cloned()
            .ok_or_else(|| RankError::UnknownSignal(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.signals.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for SignalRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_date, PaperRecord};

    struct Constant;

    impl Signal for Constant {
        fn name(&self) -> &str {
            "constant"
        }
        fn score(&self, _: &SignalInputs<'_>, c: &[&str]) -> Result<Vec<Option<f64>>, RankError> {
            Ok(vec![Some(1.0); c.len()])
        }
    }

    fn fixture() -> (Hypergraph, EmbeddingTable) {
        let d = parse_date("1999").unwrap();
        let g = Hypergraph::from_records(&[
            PaperRecord::new("1", d, ["a"], ["prop", "m1"]),
            PaperRecord::new("2", d, ["a"], ["m2"]),
            PaperRecord::new("3", d, ["b"], ["m3"]),
        ]);
        let e = EmbeddingTable::from_vectors(
            2,
            [
                ("prop", vec![1.0, 0.0]),
                ("m1", vec![0.0, 1.0]),
                ("m2", vec![1.0, 1.0]),
                ("m3", vec![0.0, 0.0]),
            ],
        );
        (g, e)
    }

    #[test]
    fn registry_lookup() {
        let mut r = SignalRegistry::with_defaults();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["cosine", "spd"]);
        assert!(matches!(r.get("markov"), Err(RankError::UnknownSignal(_))));
        assert!(r.register(Arc::new(Constant)).is_none());
        assert_eq!(r.get("constant").unwrap().name(), "constant");
        assert!(r.register(Arc::new(Constant)).is_some());
    }

    #[test]
    fn builtin_signals() {
        let (g, e) = fixture();
        let inputs = SignalInputs {
            graph: &g,
            embeddings: &e,
            property: "prop",
        };
        let cands = ["m1", "m2", "m3", "ghost"];
        let spd = HypergraphDistance.score(&inputs, &cands).unwrap();
        assert_eq!(
            spd,
            vec![Some(1.0), Some(2.0), Some(f64::INFINITY), Some(f64::INFINITY)]
        );
        let cos = EmbeddingCosine.score(&inputs, &cands).unwrap();
        assert_eq!(cos[0], Some(0.0));
        assert!((cos[1].unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cos[2], None);
        assert_eq!(cos[3], None);
    }

    #[test]
    fn property_must_exist_in_both_sources() {
        let (g, e) = fixture();
        let inputs = SignalInputs {
            graph: &g,
            embeddings: &e,
            property: "m9",
        };
        assert!(matches!(
            HypergraphDistance.score(&inputs, &["m1"]),
            Err(RankError::PropertyMissing { origin: "hypergraph", .. })
        ));
        assert!(matches!(
            EmbeddingCosine.score(&inputs, &["m1"]),
            Err(RankError::PropertyMissing { origin: "embeddings", .. })
        ));
    }
}
