//! Kruskal-Wallis, Cohen's kappa and Shannon entropy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Entropy logarithm base, recorded in run metadata.
pub const ENTROPY_BASE: &str = "e (nats)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KruskalResult {
    pub h_statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub group_sizes: Vec<usize>,
    /// All observations were tied; H is reported as 0 and p as 1.
    pub degenerate: bool,
}

/// Midranks (1-based) of `values`, with ties sharing their average rank.
/// Also returns Σ(t³ − t) over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        let t = (end - start) as f64;
        tie_sum += t * t * t - t;
        start = end;
    }
    (ranks, tie_sum)
}

/// Kruskal-Wallis H test with tie correction; p from the χ² upper tail.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalResult> {
    if groups.len() < 2 {
        return Err(Error::Invalid("Kruskal-Wallis needs at least 2 groups".into()));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Invalid("Kruskal-Wallis groups must be non-empty".into()));
    }
    if groups.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Invalid("Kruskal-Wallis input contains NaN".into()));
    }
    let group_sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let n: usize = group_sizes.iter().sum();
    if n < 3 {
        return Err(Error::Invalid("Kruskal-Wallis needs at least 3 observations".into()));
    }
    let dof = groups.len() - 1;

    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let (ranks, tie_sum) = midranks(&pooled);
    let nf = n as f64;
    let correction = 1.0 - tie_sum / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(KruskalResult {
            h_statistic: 0.0,
            dof,
            p_value: 1.0,
            group_sizes,
            degenerate: true,
        });
    }

    let mut offset = 0;
    let mut sum = 0.0;
    for &size in &group_sizes {
        let r: f64 = ranks[offset..offset + size].iter().sum();
        sum += r * r / size as f64;
        offset += size;
    }
    let h = (12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0)) / correction;
    let h = h.max(0.0);
    let chi2 = ChiSquared::new(dof as f64).expect("dof >= 1");
    Ok(KruskalResult {
        h_statistic: h,
        dof,
        p_value: chi2.sf(h).clamp(0.0, 1.0),
        group_sizes,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementResult {
    /// `None` when expected agreement is 1 (a single shared category).
    pub kappa: Option<f64>,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// Sorted label alphabet indexing the confusion matrix.
    pub categories: Vec<String>,
    /// Rows: first rater, columns: second rater.
    pub confusion_matrix: Vec<Vec<u64>>,
}

impl AgreementResult {
    pub fn from_confusion(categories: Vec<String>, confusion_matrix: Vec<Vec<u64>>) -> Result<Self> {
        let k = confusion_matrix.len();
        if k == 0 || confusion_matrix.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid("confusion matrix must be square and non-empty".into()));
        }
        let total: u64 = confusion_matrix.iter().flatten().sum();
        if total == 0 {
            return Err(Error::Empty("confusion matrix"));
        }
        let t = total as f64;
        let diag: u64 = (0..k).map(|i| confusion_matrix[i][i]).sum();
        let p_o = diag as f64 / t;
        let p_e: f64 = (0..k)
            .map(|i| {
                let row: u64 = confusion_matrix[i].iter().sum();
                let col: u64 = confusion_matrix.iter().map(|r| r[i]).sum();
                (row as f64 / t) * (col as f64 / t)
            })
            .sum();
        let kappa = (p_e < 1.0).then(|| (p_o - p_e) / (1.0 - p_e));
        Ok(AgreementResult {
            kappa,
            observed_agreement: p_o,
            expected_agreement: p_e,
            categories,
            confusion_matrix,
        })
    }
}

/// Cohen's kappa between two raters over the union of their labels.
pub fn cohen_kappa<T: Ord + Clone + ToString>(labels_a: &[T], labels_b: &[T]) -> Result<AgreementResult> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::Invalid(format!(
            "rater sequences differ in length ({} vs {})",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::Empty("rater sequences"));
    }
    let alphabet: BTreeSet<&T> = labels_a.iter().chain(labels_b).collect();
    let index: BTreeMap<&T, usize> = alphabet.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let k = alphabet.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (a, b) in labels_a.iter().zip(labels_b) {
        confusion[index[a]][index[b]] += 1;
    }
    AgreementResult::from_confusion(alphabet.iter().map(|t| t.to_string()).collect(), confusion)
}

/// Shannon entropy (natural log) of a count vector; zero counts contribute 0.
pub fn shannon_entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("counts for entropy"));
    }
    let t = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.ln()
        })
        .sum();
    Ok(h.max(0.0))
}

/// Collapses external rating vocabularies (e.g. MBFC's bias and factual
/// categories) onto the corpus label alphabet.
#[derive(Debug, Clone)]
pub struct LabelMapping {
    // (field, lowercase raw value) -> collapsed label
    table: HashMap<(String, String), String>,
}

/// Default MBFC mapping, `field,raw,collapsed`.
pub const MBFC_MAPPING: &str = include_str!("../data/mbfc_mapping.csv");

impl LabelMapping {
    pub fn mbfc() -> Self {
        Self::parse(MBFC_MAPPING).expect("bundled mapping parses")
    }

    pub fn parse(csv_text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let mut table = HashMap::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Invalid(format!("label mapping: {e}")))?;
            if rec.len() != 3 {
                return Err(Error::Invalid("label mapping rows need field,raw,collapsed".into()));
            }
            table.insert(
                (rec[0].trim().to_lowercase(), rec[1].trim().to_lowercase()),
                rec[2].trim().to_string(),
            );
        }
        Ok(LabelMapping { table })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Map a raw value; values without an entry pass through unchanged.
    pub fn collapse<'a>(&'a self, field: &str, raw: &'a str) -> &'a str {
        self.table
            .get(&(field.to_lowercase(), raw.trim().to_lowercase()))
            .map(String::as_str)
            .unwrap_or(raw.trim())
    }
}
