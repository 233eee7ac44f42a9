//! Corpus ingestion: author-attributed paper records, author-name
//! normalization, and year-window slicing.
//!
//! Input is UTF-8 line-delimited JSON, one object per line with keys
//! `id`, `title`, `abstract`, `authors`, `year`, and optional `venue`.
//! Records whose year falls outside the configured range, or in none of
//! the configured windows, are load errors rather than silent drops.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One year interval of the corpus, e.g. `("1997~2001", 1997, 2001)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub label: String,
    pub year_lo: i32,
    pub year_hi: i32,
}

impl Window {
    pub fn new(label: impl Into<String>, year_lo: i32, year_hi: i32) -> Self {
        Window {
            label: label.into(),
            year_lo,
            year_hi,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.year_lo <= year && year <= self.year_hi
    }
}

/// The four intervals used throughout the toolkit's defaults.
pub fn default_windows() -> Vec<Window> {
    vec![
        Window::new("1997~2001", 1997, 2001),
        Window::new("2002~2006", 2002, 2006),
        Window::new("2007~2011", 2007, 2011),
        Window::new("2012~2016", 2012, 2016),
    ]
}

/// Load-time schema: windows plus an accepted year range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub windows: Vec<Window>,
    pub min_year: i32,
    pub max_year: i32,
}

impl SchemaConfig {
    /// Builds a config whose year range is the span of `windows`.
    /// Windows are sorted by `year_lo` and validated to be disjoint.
    pub fn from_windows(windows: Vec<Window>) -> Result<Self> {
        let windows = validate_windows(windows)?;
        let min_year = windows.first().map(|w| w.year_lo).unwrap_or(0);
        let max_year = windows.last().map(|w| w.year_hi).unwrap_or(0);
        Ok(SchemaConfig {
            windows,
            min_year,
            max_year,
        })
    }

    pub fn with_year_range(mut self, min_year: i32, max_year: i32) -> Self {
        self.min_year = min_year;
        self.max_year = max_year;
        self
    }
}

fn validate_windows(mut windows: Vec<Window>) -> Result<Vec<Window>> {
    if windows.is_empty() {
        return Err(Error::InvalidWindows {
            reason: "no windows configured".into(),
        });
    }
    let mut labels = HashSet::new();
    for w in &windows {
        if w.label.is_empty() {
            return Err(Error::InvalidWindows {
                reason: "empty window label".into(),
            });
        }
        if w.year_lo > w.year_hi {
            return Err(Error::InvalidWindows {
                reason: format!("window {:?} has year_lo > year_hi", w.label),
            });
        }
        if !labels.insert(w.label.clone()) {
            return Err(Error::InvalidWindows {
                reason: format!("duplicate window label {:?}", w.label),
            });
        }
    }
    windows.sort_by_key(|w| w.year_lo);
    for pair in windows.windows(2) {
        if pair[0].year_hi >= pair[1].year_lo {
            return Err(Error::InvalidWindows {
                reason: format!(
                    "windows {:?} and {:?} overlap",
                    pair[0].label, pair[1].label
                ),
            });
        }
    }
    Ok(windows)
}

/// A single paper: id, title, abstract, canonical author names, year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
}

/// An ordered record collection plus the window layout that covers it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub windows: Vec<Window>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Canonical author list and per-document author indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorMap {
    /// Canonical names, sorted lexicographically.
    pub authors: Vec<String>,
    /// For each document, the sorted, duplicate-free author indices.
    pub doc_authors: Vec<Vec<u32>>,
}

impl AuthorMap {
    pub fn n_authors(&self) -> usize {
        self.authors.len()
    }
}

/// Canonicalizes an author name: trims, collapses internal whitespace
/// runs to single spaces, preserves case. Blank results are an error
/// (`id` names the offending record in the message).
pub fn normalize_author(name: &str, id: &str) -> Result<String> {
    let canonical = name.split_whitespace().collect::<Vec<_>>().join(" ");
    if canonical.is_empty() {
        return Err(Error::BlankAuthor { id: id.to_string() });
    }
    Ok(canonical)
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    authors: Vec<String>,
    year: i32,
    #[serde(default)]
    venue: Option<String>,
}

/// Loads a line-delimited corpus file, enforcing every corpus invariant:
/// unique ids, non-empty normalized author lists, year range, and window
/// coverage. Record order follows file order. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    load_corpus_reader(BufReader::new(file), schema)
}

/// Same as [`load_corpus`] but over any reader; handy for tests.
pub fn load_corpus_reader(reader: impl Read, schema: &SchemaConfig) -> Result<Corpus> {
    let windows = validate_windows(schema.windows.clone())?;
    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;

        let mut authors = Vec::new();
        for name in &raw.authors {
            let canonical = normalize_author(name, &raw.id)?;
            if !authors.contains(&canonical) {
                authors.push(canonical);
            }
        }
        if authors.is_empty() {
            return Err(Error::EmptyAuthors { id: raw.id });
        }
        if raw.year < schema.min_year || raw.year > schema.max_year {
            return Err(Error::YearOutOfRange {
                id: raw.id,
                year: raw.year,
                min_year: schema.min_year,
                max_year: schema.max_year,
            });
        }
        if !windows.iter().any(|w| w.contains(raw.year)) {
            return Err(Error::YearNotInWindows {
                id: raw.id,
                year: raw.year,
            });
        }
        if !seen_ids.insert(raw.id.clone()) {
            return Err(Error::DuplicateRecordId { id: raw.id });
        }
        records.push(CorpusRecord {
            id: raw.id,
            title: raw.title,
            abstract_text: raw.abstract_text,
            authors,
            year: raw.year,
            venue: raw.venue,
        });
    }

    Ok(Corpus { records, windows })
}

/// Returns the sub-corpus of records whose year falls in the labeled
/// window, order preserved. An empty slice is not an error.
pub fn window_slice(corpus: &Corpus, label: &str) -> Result<Corpus> {
    let window = corpus
        .windows
        .iter()
        .find(|w| w.label == label)
        .ok_or_else(|| Error::UnknownWindow {
            label: label.to_string(),
        })?
        .clone();
    let records = corpus
        .records
        .iter()
        .filter(|r| window.contains(r.year))
        .cloned()
        .collect();
    Ok(Corpus {
        records,
        windows: vec![window],
    })
}

/// Builds the canonical author list (sorted lexicographically) and the
/// per-document author-index lists (sorted, duplicate-free).
pub fn build_author_map(corpus: &Corpus) -> AuthorMap {
    let mut authors: Vec<String> = corpus
        .records
        .iter()
        .flat_map(|r| r.authors.iter().cloned())
        .collect();
    authors.sort();
    authors.dedup();

    let doc_authors = corpus
        .records
        .iter()
        .map(|r| {
            let mut idx: Vec<u32> = r
                .authors
                .iter()
                .map(|a| authors.binary_search(a).expect("author present") as u32)
                .collect();
            idx.sort_unstable();
            idx.dedup();
            idx
        })
        .collect();

    AuthorMap {
        authors,
        doc_authors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema_one_window() -> SchemaConfig {
        SchemaConfig::from_windows(vec![Window::new("w1", 1997, 2001)]).unwrap()
    }

    fn record_line(id: &str, authors: &[&str], year: i32) -> String {
        serde_json::json!({
            "id": id,
            "title": "t",
            "abstract": "a",
            "authors": authors,
            "year": year,
        })
        .to_string()
    }

    #[test]
    fn loads_valid_records_in_order() {
        let data = [
            record_line("r1", &["A"], 1997),
            record_line("r2", &["B"], 1999),
            record_line("r3", &["C"], 2001),
        ]
        .join("\n");
        let corpus = load_corpus_reader(data.as_bytes(), &schema_one_window()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.windows.len(), 1);
        assert_eq!(corpus.records[0].id, "r1");
        assert_eq!(corpus.records[2].id, "r3");
    }

    #[test]
    fn empty_author_list_is_an_error_naming_the_record() {
        let data = record_line("bad", &[], 1998);
        let err = load_corpus_reader(data.as_bytes(), &schema_one_window()).unwrap_err();
        match err {
            Error::EmptyAuthors { id } => assert_eq!(id, "bad"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn year_outside_range_is_rejected() {
        let data = record_line("early", &["A"], 1996);
        let err = load_corpus_reader(data.as_bytes(), &schema_one_window()).unwrap_err();
        match err {
            Error::YearOutOfRange { id, year, .. } => {
                assert_eq!(id, "early");
                assert_eq!(year, 1996);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn year_in_range_but_outside_windows_is_rejected() {
        let schema = SchemaConfig::from_windows(vec![
            Window::new("w1", 1997, 1998),
            Window::new("w2", 2000, 2001),
        ])
        .unwrap();
        let data = record_line("gap", &["A"], 1999);
        let err = load_corpus_reader(data.as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, Error::YearNotInWindows { .. }));
    }

    #[test]
    fn malformed_line_names_line_number() {
        let data = format!("{}\nnot json\n", record_line("r1", &["A"], 1997));
        let err = load_corpus_reader(data.as_bytes(), &schema_one_window()).unwrap_err();
        match err {
            Error::MalformedRecord { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let data = [
            record_line("dup", &["A"], 1997),
            record_line("dup", &["B"], 1998),
        ]
        .join("\n");
        let err = load_corpus_reader(data.as_bytes(), &schema_one_window()).unwrap_err();
        assert!(matches!(err, Error::DuplicateRecordId { .. }));
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_author("  Jun   Wang ", "r").unwrap(), "Jun Wang");
        assert_eq!(
            normalize_author("Anil K. Jain", "r").unwrap(),
            "Anil K. Jain"
        );
        assert!(matches!(
            normalize_author("   ", "r"),
            Err(Error::BlankAuthor { .. })
        ));
    }

    #[test]
    fn window_slice_selects_by_year() {
        let schema = SchemaConfig::from_windows(vec![
            Window::new("1997~2001", 1997, 2001),
            Window::new("2002~2006", 2002, 2006),
        ])
        .unwrap();
        let data = [
            record_line("a", &["X"], 1998),
            record_line("b", &["Y"], 2003),
            record_line("c", &["Z"], 2000),
        ]
        .join("\n");
        let corpus = load_corpus_reader(data.as_bytes(), &schema).unwrap();
        let s1 = window_slice(&corpus, "1997~2001").unwrap();
        assert_eq!(s1.len(), 2);
        assert_eq!(s1.records[0].id, "a");
        assert_eq!(s1.records[1].id, "c");

        let s2 = window_slice(&corpus, "2002~2006").unwrap();
        assert_eq!(s2.len(), 1);

        assert!(matches!(
            window_slice(&corpus, "x"),
            Err(Error::UnknownWindow { .. })
        ));
    }

    #[test]
    fn window_slice_may_be_empty() {
        let schema = SchemaConfig::from_windows(vec![
            Window::new("w1", 1997, 2001),
            Window::new("w2", 2002, 2006),
        ])
        .unwrap();
        let data = record_line("a", &["X"], 1998);
        let corpus = load_corpus_reader(data.as_bytes(), &schema).unwrap();
        let s = window_slice(&corpus, "w2").unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn author_map_sorts_and_dedups() {
        let schema = schema_one_window();
        let data = [
            record_line("d1", &["B", "A"], 1997),
            record_line("d2", &["A"], 1998),
        ]
        .join("\n");
        let corpus = load_corpus_reader(data.as_bytes(), &schema).unwrap();
        let map = build_author_map(&corpus);
        assert_eq!(map.authors, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(map.doc_authors, vec![vec![0, 1], vec![0]]);
    }

    #[test]
    fn duplicate_authors_within_record_are_merged() {
        let data = record_line("d", &["X", "X "], 1997);
        let corpus = load_corpus_reader(data.as_bytes(), &schema_one_window()).unwrap();
        assert_eq!(corpus.records[0].authors, vec!["X".to_string()]);
        let map = build_author_map(&corpus);
        assert_eq!(map.doc_authors, vec![vec![0]]);
    }

    #[test]
    fn empty_corpus_gives_empty_author_map() {
        let corpus = load_corpus_reader(&b""[..], &schema_one_window()).unwrap();
        let map = build_author_map(&corpus);
        assert!(map.authors.is_empty());
        assert!(map.doc_authors.is_empty());
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let err =
            SchemaConfig::from_windows(vec![Window::new("a", 1997, 2001), Window::new("b", 2000, 2003)])
                .unwrap_err();
        assert!(matches!(err, Error::InvalidWindows { .. }));
    }

    proptest! {
        /// Window slices partition the corpus: their multiset union is the
        /// full record set and slices are pairwise disjoint.
        #[test]
        fn window_slices_partition_records(years in proptest::collection::vec(1997i32..=2006, 0..40)) {
            let schema = SchemaConfig::from_windows(vec![
                Window::new("w1", 1997, 2001),
                Window::new("w2", 2002, 2006),
            ]).unwrap();
            let data: String = years
                .iter()
                .enumerate()
                .map(|(i, y)| record_line(&format!("r{i}"), &["A"], *y))
                .collect::<Vec<_>>()
                .join("\n");
            let corpus = load_corpus_reader(data.as_bytes(), &schema).unwrap();

            let mut seen = Vec::new();
            for w in &corpus.windows {
                let slice = window_slice(&corpus, &w.label).unwrap();
                for r in &slice.records {
                    seen.push(r.id.clone());
                }
            }
            let mut expected: Vec<String> =
                corpus.records.iter().map(|r| r.id.clone()).collect();
            seen.sort();
            expected.sort();
            prop_assert_eq!(seen.clone(), expected);
            let unique: HashSet<_> = seen.iter().collect();
            prop_assert_eq!(unique.len(), seen.len());
        }

        /// Permuting record order never changes the canonical author list.
        #[test]
        fn author_list_is_order_invariant(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;

            let schema = schema_one_window();
            let lines = vec![
                record_line("d1", &["Carol", "Alice"], 1997),
                record_line("d2", &["Bob"], 1998),
                record_line("d3", &["Alice", "Dave"], 1999),
                record_line("d4", &["Eve", "Bob", "Carol"], 2000),
            ];
            let corpus = load_corpus_reader(lines.join("\n").as_bytes(), &schema).unwrap();
            let base = build_author_map(&corpus);

            let mut shuffled = lines.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            let corpus2 = load_corpus_reader(shuffled.join("\n").as_bytes(), &schema).unwrap();
            let permuted = build_author_map(&corpus2);

            prop_assert_eq!(&base.authors, &permuted.authors);
            // No orphan authors either way.
            let mut used: HashSet<u32> = HashSet::new();
            for d in &permuted.doc_authors {
                used.extend(d.iter().copied());
            }
            prop_assert_eq!(used.len(), permuted.authors.len());
        }
    }
}
