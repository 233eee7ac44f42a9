//! 2-D author embeddings: exact t-SNE over pairwise Hellinger distances
//! between author-topic rows, CSV export, and a static SVG scatter whose
//! marker areas scale with each author's document count.

mod tsne;

pub use tsne::{
    input_affinities, input_affinities_seq, kl_divergence, kl_gradient, q_matrix, run_tsne,
    tsne, TsneRun,
};

use std::fs;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atm::AtmModel;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::similarity::pairwise_hellinger_of;
use crate::textprep::BagCorpus;

/// t-SNE settings. Perplexity is clamped to (n − 1)/3 at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub seed: u64,
}

impl TsneConfig {
    /// Defaults: perplexity 30, 1000 iterations, learning rate 200,
    /// exaggeration 12 for the first 250 iterations, momentum 0.5 → 0.8.
    pub fn new(seed: u64) -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_early: 0.5,
            momentum_late: 0.8,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidTsneConfig {
                reason: reason.into(),
            })
        };
        if !(self.perplexity > 1.0) {
            return fail("perplexity must be > 1");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be > 0");
        }
        if self.early_exaggeration < 1.0 {
            return fail("early_exaggeration must be >= 1");
        }
        if self.iterations < self.exaggeration_iters {
            return fail("iterations must be >= exaggeration_iters");
        }
        for m in [self.momentum_early, self.momentum_late] {
            if !(0.0..1.0).contains(&m) {
                return fail("momenta must lie in [0, 1)");
            }
        }
        Ok(())
    }
}

/// Per-author 2-D coordinates with document counts and display labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Matrix,
    pub point_sizes: Vec<u32>,
    pub labels: Vec<String>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::TooFewPoints { n: 0 });
        }
        if self.coords.rows() != self.len() || self.point_sizes.len() != self.len() {
            return Err(Error::BadDistanceMatrix {
                reason: "embedding fields disagree on length".into(),
            });
        }
        if self.coords.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::BadDistanceMatrix {
                reason: "non-finite coordinates".into(),
            });
        }
        if self.point_sizes.iter().any(|&s| s == 0) {
            return Err(Error::BadDistanceMatrix {
                reason: "zero point size".into(),
            });
        }
        Ok(())
    }
}

/// Embeds authors: Hellinger distances between θ rows feed t-SNE; sizes
/// are per-author document counts. Authors with fewer than `min_docs`
/// documents are dropped first; fewer than 3 survivors is an error.
pub fn embed_authors(
    model: &AtmModel,
    bag: &BagCorpus,
    config: &TsneConfig,
    min_docs: u32,
) -> Result<Embedding> {
    model.check_alignment(bag)?;
    config.validate()?;
    let doc_counts = bag.author_doc_counts();
    let kept: Vec<usize> = (0..model.n_authors())
        .filter(|&a| doc_counts[a] >= min_docs.max(1))
        .collect();
    if kept.len() < 3 {
        return Err(Error::TooFewPoints { n: kept.len() });
    }

    let rows: Vec<Vec<f64>> = kept.iter().map(|&a| model.theta.row(a).to_vec()).collect();
    let theta = Matrix::from_rows(&rows);
    let distances = pairwise_hellinger_of(&theta);
    let coords = tsne(&distances, config)?;

    let embedding = Embedding {
        coords,
        point_sizes: kept.iter().map(|&a| doc_counts[a]).collect(),
        labels: kept.iter().map(|&a| model.authors[a].clone()).collect(),
    };
    embedding.validate()?;
    Ok(embedding)
}

fn csv_field(name: &str) -> String {
    if name.contains(',') || name.contains('"') || name.contains('\n') {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

/// CSV body: `author_name,x,y,doc_count` with a header row.
pub fn coords_csv(embedding: &Embedding) -> String {
    let mut out = String::from("author_name,x,y,doc_count\n");
    for i in 0..embedding.len() {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{}",
            csv_field(&embedding.labels[i]),
            embedding.coords.get(i, 0),
            embedding.coords.get(i, 1),
            embedding.point_sizes[i]
        );
    }
    out
}

pub fn write_coords_csv(embedding: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, coords_csv(embedding)).map_err(|e| Error::io(path.display().to_string(), e))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const SVG_SIZE: f64 = 840.0;
const SVG_MARGIN: f64 = 60.0;
const SVG_RADIUS_UNIT: f64 = 4.0;

/// Standalone SVG scatter: one circle per author, radius proportional to
/// sqrt(document count), coordinates affinely scaled into a fixed
/// viewbox. Bytes are deterministic for identical input.
pub fn svg_scatter(embedding: &Embedding) -> Result<String> {
    embedding.validate()?;
    let n = embedding.len();
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        xmin = xmin.min(embedding.coords.get(i, 0));
        xmax = xmax.max(embedding.coords.get(i, 0));
        ymin = ymin.min(embedding.coords.get(i, 1));
        ymax = ymax.max(embedding.coords.get(i, 1));
    }
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let scale = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            SVG_MARGIN + (v - lo) / (hi - lo) * span
        } else {
            SVG_SIZE / 2.0
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_SIZE:.0} {SVG_SIZE:.0}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect width=\"{SVG_SIZE:.0}\" height=\"{SVG_SIZE:.0}\" fill=\"white\"/>"
    );
    for i in 0..n {
        let cx = scale(embedding.coords.get(i, 0), xmin, xmax);
        // Flip y so larger coordinates draw toward the top.
        let cy = SVG_SIZE - scale(embedding.coords.get(i, 1), ymin, ymax);
        let r = SVG_RADIUS_UNIT * (embedding.point_sizes[i] as f64).sqrt();
        let _ = writeln!(
            svg,
            "  <circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{r:.2}\" fill=\"#4682b4\" \
             fill-opacity=\"0.6\"><title>{}</title></circle>",
            xml_escape(&embedding.labels[i])
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_svg(embedding: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    let svg = svg_scatter(embedding)?;
    let path = path.as_ref();
    fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atm::AtmHyperParams;

    fn model_and_bag(theta_rows: Vec<Vec<f64>>, docs_per_author: &[u32]) -> (AtmModel, BagCorpus) {
        let a = theta_rows.len();
        let k = theta_rows[0].len();
        let model = AtmModel {
            theta: Matrix::from_rows(&theta_rows),
            beta: Matrix::from_rows(&vec![vec![0.25; 4]; k]),
            hyper: AtmHyperParams::new(k, 1),
            terms: (0..4).map(|i| format!("t{i}")).collect(),
            authors: (0..a).map(|i| format!("Author {i}")).collect(),
        };
        let mut docs = Vec::new();
        let mut doc_authors = Vec::new();
        for (author, &count) in docs_per_author.iter().enumerate() {
            for _ in 0..count {
                docs.push(vec![(0u32, 1u32)]);
                doc_authors.push(vec![author as u32]);
            }
        }
        let n_tokens = docs.len() as u64;
        let bag = BagCorpus {
            doc_ids: (0..docs.len()).map(|i| format!("d{i}")).collect(),
            docs,
            doc_authors,
            authors: model.authors.clone(),
            n_terms: 4,
            n_tokens,
        };
        (model, bag)
    }

    fn spread_rows(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let p = (i + 1) as f64 / (n + 2) as f64;
                vec![p, 1.0 - p]
            })
            .collect()
    }

    fn quick_config(seed: u64) -> TsneConfig {
        TsneConfig {
            perplexity: 1.5,
            iterations: 200,
            exaggeration_iters: 60,
            ..TsneConfig::new(seed)
        }
    }

    #[test]
    fn two_authors_is_an_error() {
        let (model, bag) = model_and_bag(spread_rows(2), &[1, 1]);
        assert!(matches!(
            embed_authors(&model, &bag, &quick_config(1), 1),
            Err(Error::TooFewPoints { n: 2 })
        ));
    }

    #[test]
    fn min_docs_filter_applies_before_embedding() {
        let (model, bag) = model_and_bag(spread_rows(5), &[3, 1, 3, 3, 3]);
        let emb = embed_authors(&model, &bag, &quick_config(2), 2).unwrap();
        assert_eq!(emb.len(), 4);
        assert!(!emb.labels.contains(&"Author 1".to_string()));
    }

    #[test]
    fn duplicate_theta_rows_embed_closest() {
        let mut rows = spread_rows(6);
        rows[1] = rows[0].clone();
        let (model, bag) = model_and_bag(rows, &[2, 2, 2, 2, 2, 2]);
        let emb = embed_authors(&model, &bag, &quick_config(5), 1).unwrap();
        let dist = |a: usize, b: usize| {
            let dx = emb.coords.get(a, 0) - emb.coords.get(b, 0);
            let dy = emb.coords.get(a, 1) - emb.coords.get(b, 1);
            (dx * dx + dy * dy).sqrt()
        };
        let twin = dist(0, 1);
        for other in 2..6 {
            assert!(twin <= dist(0, other), "author {other} closer than the twin");
        }
    }

    #[test]
    fn embedding_has_finite_coords_for_all_authors() {
        let (model, bag) = model_and_bag(spread_rows(20), &vec![2; 20]);
        let emb = embed_authors(&model, &bag, &quick_config(7), 1).unwrap();
        assert_eq!(emb.len(), 20);
        assert!(emb.coords.data().iter().all(|v| v.is_finite()));
        let csv = coords_csv(&emb);
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.starts_with("author_name,x,y,doc_count\n"));
    }

    #[test]
    fn svg_radii_scale_with_sqrt_counts() {
        let emb = Embedding {
            coords: Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![-1.0, 2.0]]),
            point_sizes: vec![1, 4, 9],
            labels: vec!["A".into(), "B".into(), "C".into()],
        };
        let svg = svg_scatter(&emb).unwrap();
        assert!(svg.contains("r=\"4.00\""));
        assert!(svg.contains("r=\"8.00\""));
        assert!(svg.contains("r=\"12.00\""));
    }

    #[test]
    fn svg_is_deterministic_and_escapes_names() {
        let emb = Embedding {
            coords: Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![-1.0, 2.0]]),
            point_sizes: vec![1, 2, 3],
            labels: vec!["A & B".into(), "<C>".into(), "D \"E\"".into()],
        };
        let a = svg_scatter(&emb).unwrap();
        let b = svg_scatter(&emb).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("A &amp; B"));
        assert!(a.contains("&lt;C&gt;"));
        assert!(!a.contains("<C>"));
    }

    #[test]
    fn empty_embedding_is_rejected() {
        let emb = Embedding {
            coords: Matrix::zeros(0, 2),
            point_sizes: vec![],
            labels: vec![],
        };
        assert!(matches!(
            svg_scatter(&emb),
            Err(Error::TooFewPoints { n: 0 })
        ));
    }

    #[test]
    fn csv_quotes_awkward_names() {
        let emb = Embedding {
            coords: Matrix::from_rows(&[vec![0.0, 0.0]]),
            point_sizes: vec![2],
            labels: vec!["Doe, Jane \"JD\"".into()],
        };
        let csv = coords_csv(&emb);
        assert!(csv.contains("\"Doe, Jane \"\"JD\"\"\""));
    }
}
