//! Topic-quality metrics: intrinsic UMass coherence per topic, computed
//! on the same bag-of-words corpus the model was trained on.
//!
//! For a topic's top words v_1..v_M ordered by descending probability,
//!
//!   coherence = Σ_{m=2..M} Σ_{l<m} log[ (D(v_m, v_l) + 1) / D(v_l) ]
//!
//! where D(v) counts documents containing v and D(v, v') documents
//! containing both. The +1 smoothing sits in the numerator only.

use serde::{Deserialize, Serialize};

use crate::atm::{top_term_ids, AtmModel};
use crate::error::{Error, Result};
use crate::textprep::BagCorpus;

/// Per-topic coherence values with their mean and sum. Values are
/// typically negative; closer to zero reads as more interpretable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    pub sum: f64,
    pub top_m: usize,
}

fn doc_contains(doc: &[(u32, u32)], term: u32) -> bool {
    doc.binary_search_by_key(&term, |&(t, _)| t).is_ok()
}

/// UMass coherence of an ordered top-word list over a bag corpus.
/// Errors when some top word appears in no document (a vocabulary
/// mismatch; every in-vocabulary term occurs at least once).
pub fn umass_coherence(bag: &BagCorpus, top_words: &[u32]) -> Result<f64> {
    let doc_count = |term: u32| bag.docs.iter().filter(|d| doc_contains(d, term)).count();
    let co_doc_count = |a: u32, b: u32| {
        bag.docs
            .iter()
            .filter(|d| doc_contains(d, a) && doc_contains(d, b))
            .count()
    };

    let mut total = 0.0;
    for m in 1..top_words.len() {
        for l in 0..m {
            let d_l = doc_count(top_words[l]);
            if d_l == 0 {
                return Err(Error::TopWordAbsent {
                    term_id: top_words[l],
                });
            }
            let d_ml = co_doc_count(top_words[m], top_words[l]);
            total += ((d_ml as f64 + 1.0) / d_l as f64).ln();
        }
    }
    Ok(total)
}

/// Applies [`umass_coherence`] to every topic's top `top_m` terms
/// (ordered by descending β with term-id tie-break, the same rule as
/// `top_terms`).
pub fn coherence_report(model: &AtmModel, bag: &BagCorpus, top_m: usize) -> Result<CoherenceReport> {
    let k = model.n_topics();
    let mut per_topic = Vec::with_capacity(k);
    for topic in 0..k {
        let top = top_term_ids(model, topic, top_m)?;
        per_topic.push(umass_coherence(bag, &top)?);
    }
    let sum: f64 = per_topic.iter().sum();
    let mean = sum / k as f64;
    Ok(CoherenceReport {
        per_topic,
        mean,
        sum,
        top_m,
    })
}
