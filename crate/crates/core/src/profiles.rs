//! Per-user aggregation: complexity scores, negativity/offensiveness
//! proportions with quartile classes, and the log-log vocabulary fit.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::complexity::{self, ComplexityScores};
use crate::ingest::{LabeledCorpus, Sentiment, UserLabels};
use crate::textpipe::{frequency_spectrum, Preprocessor, TokenSequence};
use crate::{Error, Result};

/// Quantile definition used for class boundaries.
pub const QUANTILE_RULE: &str = "type-7 (linear interpolation between order statistics); boundary ties go to the lower class";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum QuartileClass {
    Low,
    Medium,
    High,
    VeryHigh,
}

impl QuartileClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuartileClass::Low => "Low",
            QuartileClass::Medium => "Medium",
            QuartileClass::High => "High",
            QuartileClass::VeryHigh => "VeryHigh",
        }
    }
}

impl fmt::Display for QuartileClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UserProfile {
    pub user_id: String,
    pub n_tweets: usize,
    pub n_tokens: usize,
    pub n_types: usize,
    pub scores: ComplexityScores,
    /// Tweets carrying classifier labels.
    pub n_classified: usize,
    /// Share of classified tweets labeled Negative; `None` without labels.
    pub negativity_score: Option<f64>,
    pub offensiveness_score: Option<f64>,
    pub negativity_class: Option<QuartileClass>,
    pub offensiveness_class: Option<QuartileClass>,
    pub labels: UserLabels,
}

/// Profiles plus the token streams they were computed from, index-aligned.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub profiles: Vec<UserProfile>,
    pub tokens: Vec<TokenSequence>,
    /// Users dropped because no token survived preprocessing.
    pub excluded_users: Vec<String>,
}

/// Build one profile per user with at least one surviving token.
pub fn build_profiles(
    corpus: &LabeledCorpus,
    preprocessor: &Preprocessor,
    compression_level: u32,
) -> Result<ProfileSet> {
    let computed: Vec<Result<Option<(UserProfile, TokenSequence)>>> = corpus
        .users
        .par_iter()
        .map(|user| {
            let text = user.cleaned_text();
            let Some(tokens) = preprocessor.process(&text) else {
                return Ok(None);
            };
            let spectrum = frequency_spectrum(&tokens)?;
            let scores = complexity::score_user(&text, &spectrum, compression_level)?;

            let mut n_classified = 0usize;
            let mut negative = 0usize;
            let mut offensive = 0usize;
            for t in user.tweets.iter().filter_map(|t| t.labels.as_ref()) {
                n_classified += 1;
                negative += usize::from(t.sentiment == Sentiment::Negative);
                offensive += usize::from(t.offensive);
            }
            let share = |k: usize| (n_classified > 0).then(|| k as f64 / n_classified as f64);

            let profile = UserProfile {
                user_id: user.user_id.clone(),
                n_tweets: user.tweets.len(),
                n_tokens: tokens.n_tokens(),
                n_types: tokens.n_types(),
                scores,
                n_classified,
                negativity_score: share(negative),
                offensiveness_score: share(offensive),
                negativity_class: None,
                offensiveness_class: None,
                labels: user.labels.clone(),
            };
            Ok(Some((profile, tokens)))
        })
        .collect();

    let mut profiles = Vec::new();
    let mut tokens = Vec::new();
    let mut excluded_users = Vec::new();
    for (user, result) in corpus.users.iter().zip(computed) {
        match result? {
            Some((p, t)) => {
                profiles.push(p);
                tokens.push(t);
            }
            None => excluded_users.push(user.user_id.clone()),
        }
    }

    assign_classes(&mut profiles, |p| p.negativity_score, |p, c| p.negativity_class = c);
    assign_classes(&mut profiles, |p| p.offensiveness_score, |p, c| p.offensiveness_class = c);

    Ok(ProfileSet {
        profiles,
        tokens,
        excluded_users,
    })
}

fn assign_classes(
    profiles: &mut [UserProfile],
    score: impl Fn(&UserProfile) -> Option<f64>,
    mut set: impl FnMut(&mut UserProfile, Option<QuartileClass>),
) {
    let idx: Vec<usize> = (0..profiles.len()).filter(|&i| score(&profiles[i]).is_some()).collect();
    let values: Vec<f64> = idx.iter().filter_map(|&i| score(&profiles[i])).collect();
    let classes = assign_quartile_classes(&values);
    for (i, c) in idx.into_iter().zip(classes) {
        set(&mut profiles[i], Some(c));
    }
}

/// Type-7 sample quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartile classes: ≤Q1 Low, (Q1,Q2] Medium, (Q2,Q3] High, >Q3 VeryHigh.
pub fn assign_quartile_classes(scores: &[f64]) -> Vec<QuartileClass> {
    if scores.is_empty() {
        return Vec::new();
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q2 = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    scores
        .iter()
        .map(|&s| {
            if s <= q1 {
                QuartileClass::Low
            } else if s <= q2 {
                QuartileClass::Medium
            } else if s <= q3 {
                QuartileClass::High
            } else {
                QuartileClass::VeryHigh
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// 1 when the fit is exact, including constant `y`.
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least-squares fit of log10(y) on log10(x).
pub fn loglog_ols(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!("x has {} points, y has {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("log-log OLS needs at least 2 points".into()));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("log-log OLS needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(Error::Invalid("log-log OLS: zero variance in x".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(OlsFit {
        slope,
        intercept,
        r_squared,
        n_points: lx.len(),
    })
}
