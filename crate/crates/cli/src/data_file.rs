//! Observation files: one subset per line, comma-separated 1-based elements,
//! `#` starts a comment.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use kdpp_core::SubsetIndex;

pub fn parse_elements(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .with_context(|| format!("`{s}` is not an element index"))
        })
        .collect()
}

pub fn parse_subset(n: usize, text: &str) -> Result<SubsetIndex> {
    Ok(SubsetIndex::from_one_based(n, &parse_elements(text)?)?)
}

pub fn parse_data(n: usize, text: &str) -> Result<Vec<SubsetIndex>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        out.push(parse_subset(n, body).with_context(|| format!("line {}", i + 1))?);
    }
    Ok(out)
}

pub fn load_data(path: &Path, n: usize) -> Result<Vec<SubsetIndex>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_data(n, &text).with_context(|| format!("in data file {}", path.display()))
}

pub fn format_subset(a: &SubsetIndex) -> String {
    a.one_based()
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
