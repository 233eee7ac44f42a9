//! File helpers: atomic writes, config-path resolution, digests, and
//! the small text formats owned by the CLI.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use atm_core::corpus::Window;
use atm_core::textprep::BagCorpus;

/// Writes via a temp file in the same directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)
            .with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)
            .with_context(|| format!("writing {}", tmp.display()))?;
        f.sync_all().ok();
    }
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

/// Resolves a config file path: as given first, then relative to
/// `ATM_CONFIG_DIR` when set.
pub fn resolve_config_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var("ATM_CONFIG_DIR") {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// One term per line, `#` starts a comment, blank lines ignored.
pub fn read_term_file(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading term file {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect())
}

/// Phrase file: one multi-word phrase per line, `#` comments.
pub fn read_phrase_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading phrase file {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect())
}

/// Window config file: `label,year_lo,year_hi` per line, `#` comments.
pub fn read_windows_file(path: &Path) -> Result<Vec<Window>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading windows file {}", path.display()))?;
    let mut windows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            bail!(
                "{}:{}: expected label,year_lo,year_hi",
                path.display(),
                idx + 1
            );
        }
        let lo: i32 = parts[1]
            .parse()
            .with_context(|| format!("{}:{}: bad year_lo", path.display(), idx + 1))?;
        let hi: i32 = parts[2]
            .parse()
            .with_context(|| format!("{}:{}: bad year_hi", path.display(), idx + 1))?;
        windows.push(Window::new(parts[0], lo, hi));
    }
    Ok(windows)
}

/// Inline `label:year_lo:year_hi` spec.
pub fn parse_window_spec(spec: &str) -> Result<Window> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("window spec {spec:?} is not label:year_lo:year_hi");
    }
    Ok(Window::new(
        parts[0],
        parts[1].parse::<i32>().context("bad year_lo")?,
        parts[2].parse::<i32>().context("bad year_hi")?,
    ))
}

/// Author-map artifact: `author_id<TAB>name<TAB>doc_count` per line for
/// the bag's compacted author table.
pub fn author_map_tsv(bag: &BagCorpus) -> String {
    let counts = bag.author_doc_counts();
    let mut out = String::new();
    for (id, name) in bag.authors.iter().enumerate() {
        out.push_str(&format!("{id}\t{name}\t{}\n", counts[id]));
    }
    out
}

/// Levenshtein distance for the unknown-author suggestions.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
