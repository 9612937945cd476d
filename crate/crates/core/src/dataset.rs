//! Numeric CSV datasets and the stratified train/test split.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub patterns: Vec<Pattern>,
    /// Per-feature `(min, max)`, taken over the full file and shared by
    /// every split derived from it.
    pub feature_ranges: Vec<(f64, f64)>,
    /// Label tokens in first-appearance order; index = class id.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_ranges.len()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count()];
        for p in &self.patterns {
            sizes[p.label] += 1;
        }
        sizes
    }

    /// Patterns at `indices`, keeping ranges and class names.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            patterns: indices.iter().map(|&i| self.patterns[i].clone()).collect(),
            feature_ranges: self.feature_ranges.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Writes patterns back as headerless CSV with label tokens.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            for x in &p.features {
                out.push_str(&format!("{x},"));
            }
            out.push_str(&self.class_names[p.label]);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
}

pub fn load_csv(path: &Path, opts: CsvOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, path, opts)
}

/// Rows are numeric features followed by a label token. Labels become class
/// ids in order of first appearance.
pub fn parse_csv(text: &str, origin: &Path, opts: CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    let mut patterns = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut width = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_err(line, "need at least one feature and a label".into()));
        }
        let n = record.len() - 1;
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(parse_err(line, format!("expected {w} features, found {n}")));
            }
            _ => {}
        }
        let features = record
            .iter()
            .take(n)
            .enumerate()
            .map(|(j, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("feature {j}: `{field}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let token = &record[n];
        if token.is_empty() {
            return Err(parse_err(line, "empty class label".into()));
        }
        let label = *class_index.entry(token.to_string()).or_insert_with(|| {
            class_names.push(token.to_string());
            class_names.len() - 1
        });
        patterns.push(Pattern { features, label });
    }

    let Some(width) = width else {
        return Err(Error::Dataset(format!("{}: no data rows", origin.display())));
    };
    let mut feature_ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
    for p in &patterns {
        for (r, &x) in feature_ranges.iter_mut().zip(&p.features) {
            r.0 = r.0.min(x);
            r.1 = r.1.max(x);
        }
    }
    if let Some(j) = feature_ranges.iter().position(|&(lo, hi)| lo >= hi) {
        return Err(Error::Dataset(format!(
            "{}: feature {j} is constant, cannot be scaled",
            origin.display()
        )));
    }
    Ok(Dataset {
        patterns,
        feature_ranges,
        class_names,
    })
}

/// Random train/test split. Stratified splits move `round(fraction * n_c)`
/// patterns of every class to the training side while keeping at least one
/// pattern of each class on both sides. Both halves keep dataset order.
pub fn split(
    d: &Dataset,
    train_fraction: f64,
    stratified: bool,
    rng: &mut impl Rng,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let mut train_idx = Vec::new();
    if stratified {
        for class in 0..d.class_count() {
            let mut members: Vec<usize> = (0..d.len()).filter(|&i| d.patterns[i].label == class).collect();
            if members.len() < 2 {
                return Err(Error::Dataset(format!(
                    "class `{}` has {} pattern(s); need 2 to split",
                    d.class_names[class],
                    members.len()
                )));
            }
            let take = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
            members.shuffle(rng);
            train_idx.extend_from_slice(&members[..take]);
        }
    } else {
        if d.len() < 2 {
            return Err(Error::Dataset("need at least 2 patterns to split".into()));
        }
        let mut all: Vec<usize> = (0..d.len()).collect();
        all.shuffle(rng);
        let take = ((train_fraction * d.len() as f64).round() as usize).clamp(1, d.len() - 1);
        train_idx.extend_from_slice(&all[..take]);
    }
    train_idx.sort_unstable();
    let mut in_train = vec![false; d.len()];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let test_idx: Vec<usize> = (0..d.len()).filter(|&i| !in_train[i]).collect();
    Ok((d.subset(&train_idx), d.subset(&test_idx)))
}
