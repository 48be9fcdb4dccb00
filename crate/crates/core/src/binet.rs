//! Influencer × type bipartite network, RCA binarization, the bipartite
//! configuration model (BiCM) null, and the FDR-validated projection onto
//! influencers.
//!
//! The BiCM assigns each influencer a multiplier `x_i = exp(-θ_i)` and each
//! type a multiplier `y_α = exp(-t_α)`. Links are independent with
//! probability `p_iα = x_i y_α / (1 + x_i y_α)`, and the multipliers are
//! chosen so that expected degrees equal observed degrees on both layers.
//! The equations depend on a node only through its degree, so the solver
//! works on degree classes rather than on individual nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::textpipe::TokenSequence;
use crate::{Error, Result};

/// Relative margin below which an RCA value counts as equal to 1.
pub const RCA_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBipartite {
    influencers: Vec<String>,
    types: Vec<String>,
    /// Per influencer: (type index, weight), sorted by type index, weights > 0.
    rows: Vec<Vec<(u32, f64)>>,
}

impl WeightedBipartite {
    /// Build from dense rows. Zero cells are skipped; all-zero rows and
    /// columns are dropped.
    pub fn from_dense(influencers: Vec<String>, types: Vec<String>, weights: &[Vec<f64>]) -> Result<Self> {
        if weights.len() != influencers.len() || weights.iter().any(|r| r.len() != types.len()) {
            return Err(Error::Invalid("weight matrix shape does not match labels".into()));
        }
        if weights.iter().flatten().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Invalid("weights must be finite and non-negative".into()));
        }
        let rows = weights
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(j, w)| (j as u32, *w))
                    .collect()
            })
            .collect();
        Ok(Self::compact(influencers, types, rows))
    }

    /// Anonymous labels `r0..`, `c0..`.
    pub fn from_matrix(weights: &[Vec<f64>]) -> Result<Self> {
        let cols = weights.first().map_or(0, Vec::len);
        Self::from_dense(
            (0..weights.len()).map(|i| format!("r{i}")).collect(),
            (0..cols).map(|j| format!("c{j}")).collect(),
            weights,
        )
    }

    fn compact(influencers: Vec<String>, types: Vec<String>, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut used = vec![false; types.len()];
        for (j, _) in rows.iter().flatten() {
            used[*j as usize] = true;
        }
        let mut remap = vec![u32::MAX; types.len()];
        let mut kept_types = Vec::new();
        for (j, t) in types.into_iter().enumerate() {
            if used[j] {
                remap[j] = kept_types.len() as u32;
                kept_types.push(t);
            }
        }
        let mut kept_infl = Vec::new();
        let mut kept_rows = Vec::new();
        for (name, row) in influencers.into_iter().zip(rows) {
            if row.is_empty() {
                continue;
            }
            kept_infl.push(name);
            kept_rows.push(row.into_iter().map(|(j, w)| (remap[j as usize], w)).collect());
        }
        WeightedBipartite {
            influencers: kept_infl,
            types: kept_types,
            rows: kept_rows,
        }
    }

    pub fn influencers(&self) -> &[String] {
        &self.influencers
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn n_influencers(&self) -> usize {
        self.influencers.len()
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn n_links(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; self.types.len()];
                for &(j, w) in r {
                    dense[j as usize] = w;
                }
                dense
            })
            .collect()
    }

    /// Every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        WeightedBipartite {
            influencers: self.influencers.clone(),
            types: self.types.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, w)| (j, w * c)).collect())
                .collect(),
        }
    }

    pub fn summary(&self) -> NetworkSummary {
        NetworkSummary::bipartite(self.n_influencers(), self.n_types(), self.n_links())
    }
}

/// w_iα = occurrences of type α in influencer i's token stream. Types are
/// indexed in lexicographic order.
pub fn build_bipartite(user_ids: &[String], tokens: &[TokenSequence]) -> Result<WeightedBipartite> {
    if user_ids.len() != tokens.len() {
        return Err(Error::Invalid("one token stream per user required".into()));
    }
    if user_ids.is_empty() {
        return Err(Error::Empty("corpus for bipartite network"));
    }
    let counts: Vec<BTreeMap<&str, u64>> = tokens.iter().map(TokenSequence::type_counts).collect();
    let vocab: BTreeSet<&str> = counts.iter().flat_map(|c| c.keys().copied()).collect();
    let index: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
    let rows = counts
        .iter()
        .map(|c| c.iter().map(|(t, &n)| (index[t], n as f64)).collect())
        .collect();
    Ok(WeightedBipartite::compact(
        user_ids.to_vec(),
        vocab.into_iter().map(str::to_string).collect(),
        rows,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub influencer_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_nodes: Option<usize>,
    pub edges: usize,
    /// 2E / (N(N − 1)) over all nodes.
    pub density: f64,
    /// 2E / N.
    pub average_degree: f64,
}

impl NetworkSummary {
    pub fn graph(nodes: usize, edges: usize) -> Self {
        let n = nodes as f64;
        NetworkSummary {
            nodes,
            influencer_nodes: None,
            type_nodes: None,
            edges,
            density: if nodes > 1 { 2.0 * edges as f64 / (n * (n - 1.0)) } else { 0.0 },
            average_degree: if nodes > 0 { 2.0 * edges as f64 / n } else { 0.0 },
        }
    }

    pub fn bipartite(influencers: usize, types: usize, edges: usize) -> Self {
        NetworkSummary {
            influencer_nodes: Some(influencers),
            type_nodes: Some(types),
            ..Self::graph(influencers + types, edges)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryBipartite {
    influencers: Vec<String>,
    types: Vec<String>,
    /// Per influencer: sorted type indices with m_iα = 1.
    rows: Vec<Vec<u32>>,
    row_degrees: Vec<usize>,
    col_degrees: Vec<usize>,
    dropped_influencers: Vec<String>,
    dropped_types: Vec<String>,
}

impl BinaryBipartite {
    /// Build from sorted-or-not adjacency rows over `n_types` columns.
    /// Nothing is dropped: zero-degree nodes are kept as is.
    pub fn from_rows(influencers: Vec<String>, types: Vec<String>, mut rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.len() != influencers.len() {
            return Err(Error::Invalid("one adjacency row per influencer required".into()));
        }
        let mut col_degrees = vec![0usize; types.len()];
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            for &j in row.iter() {
                let slot = col_degrees
                    .get_mut(j as usize)
                    .ok_or_else(|| Error::Invalid(format!("type index {j} out of range")))?;
                *slot += 1;
            }
        }
        Ok(BinaryBipartite {
            influencers,
            types,
            row_degrees: rows.iter().map(Vec::len).collect(),
            col_degrees,
            rows,
            dropped_influencers: Vec::new(),
            dropped_types: Vec::new(),
        })
    }

    /// From a dense 0/1 matrix with anonymous labels.
    pub fn from_dense(matrix: &[Vec<bool>]) -> Result<Self> {
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("ragged binary matrix".into()));
        }
        let rows = matrix
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j as u32).collect())
            .collect();
        Self::from_rows(
            (0..matrix.len()).map(|i| format!("r{i}")).collect(),
            (0..cols).map(|j| format!("c{j}")).collect(),
            rows,
        )
    }

    pub fn influencers(&self) -> &[String] {
        &self.influencers
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn n_influencers(&self) -> usize {
        self.influencers.len()
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn row_degrees(&self) -> &[usize] {
        &self.row_degrees
    }

    pub fn col_degrees(&self) -> &[usize] {
        &self.col_degrees
    }

    pub fn n_links(&self) -> usize {
        self.row_degrees.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_links() == 0
    }

    pub fn dropped_influencers(&self) -> &[String] {
        &self.dropped_influencers
    }

    pub fn dropped_types(&self) -> &[String] {
        &self.dropped_types
    }

    pub fn contains(&self, i: usize, a: usize) -> bool {
        self.rows[i].binary_search(&(a as u32)).is_ok()
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.n_influencers())
            .map(|i| (0..self.n_types()).map(|a| self.contains(i, a)).collect())
            .collect()
    }

    /// Number of types shared by influencers `i` and `j`.
    pub fn shared(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.rows[i], &self.rows[j]);
        let (mut x, mut y, mut n) = (0, 0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
        n
    }

    pub fn summary(&self) -> NetworkSummary {
        NetworkSummary::bipartite(self.n_influencers(), self.n_types(), self.n_links())
    }
}

/// RCA_iα = (w_iα / Σ_β w_iβ) / (Σ_j w_jα / Σ_jβ w_jβ); keep links with RCA > 1.
///
/// Rows and columns left without links are dropped and listed on the result.
pub fn rca_binarize(w: &WeightedBipartite) -> BinaryBipartite {
    let row_tot: Vec<f64> = w.rows.iter().map(|r| r.iter().map(|(_, v)| v).sum()).collect();
    let mut col_tot = vec![0.0; w.types.len()];
    for &(j, v) in w.rows.iter().flatten() {
        col_tot[j as usize] += v;
    }
    let total: f64 = row_tot.iter().sum();

    let rows: Vec<Vec<u32>> = w
        .rows
        .iter()
        .zip(&row_tot)
        .map(|(row, &rt)| {
            row.iter()
                .filter(|&&(j, v)| {
                    // RCA > 1  ⇔  w·T > r·c, with a tie margin for rescaled weights
                    v * total > rt * col_tot[j as usize] * (1.0 + RCA_TIE_TOLERANCE)
                })
                .map(|&(j, _)| j)
                .collect()
        })
        .collect();

    let mut col_used = vec![false; w.types.len()];
    for &j in rows.iter().flatten() {
        col_used[j as usize] = true;
    }
    let mut remap = vec![u32::MAX; w.types.len()];
    let mut types = Vec::new();
    let mut dropped_types = Vec::new();
    for (j, t) in w.types.iter().enumerate() {
        if col_used[j] {
            remap[j] = types.len() as u32;
            types.push(t.clone());
        } else {
            dropped_types.push(t.clone());
        }
    }
    let mut influencers = Vec::new();
    let mut kept_rows = Vec::new();
    let mut dropped_influencers = Vec::new();
    for (name, row) in w.influencers.iter().zip(rows) {
        if row.is_empty() {
            dropped_influencers.push(name.clone());
        } else {
            influencers.push(name.clone());
            kept_rows.push(row.into_iter().map(|j| remap[j as usize]).collect());
        }
    }
    let mut m = BinaryBipartite::from_rows(influencers, types, kept_rows).expect("indices remapped in range");
    m.dropped_influencers = dropped_influencers;
    m.dropped_types = dropped_types;
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Max absolute difference between expected and observed degree.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// How a node enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NodeState {
    /// Solved; index into the degree-class multipliers.
    Free { class: usize },
    /// Removed before solving because its residual degree was zero or
    /// equal to the number of remaining partners; `order` is the removal
    /// sequence number, and the earlier removal decides a link.
    Fixed { order: usize, full: bool },
}

#[derive(Debug, Clone, Serialize)]
pub struct BicmDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub max_row_residual: f64,
    pub max_col_residual: f64,
    pub damping_used: bool,
    pub row_classes: usize,
    pub col_classes: usize,
    pub fixed_full_influencers: Vec<String>,
    pub fixed_empty_influencers: Vec<String>,
    pub fixed_full_types: usize,
    pub fixed_empty_types: usize,
}

impl BicmDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.max_row_residual.max(self.max_col_residual)
    }
}

#[derive(Debug, Clone)]
pub struct BicmModel {
    row_state: Vec<NodeState>,
    col_state: Vec<NodeState>,
    /// x per free row class.
    row_x: Vec<f64>,
    /// y per free column class.
    col_y: Vec<f64>,
    /// Distinct column states with their multiplicities.
    col_groups: Vec<(NodeState, usize)>,
    col_group_of: Vec<usize>,
    pub diagnostics: BicmDiagnostics,
}

fn link_probability(row: NodeState, col: NodeState, row_x: &[f64], col_y: &[f64]) -> f64 {
    match (row, col) {
        (NodeState::Free { class: r }, NodeState::Free { class: c }) => {
            let xy = row_x[r] * col_y[c];
            xy / (1.0 + xy)
        }
        (NodeState::Fixed { full, .. }, NodeState::Free { .. })
        | (NodeState::Free { .. }, NodeState::Fixed { full, .. }) => f64::from(u8::from(full)),
        (NodeState::Fixed { order: a, full: fa }, NodeState::Fixed { order: b, full: fb }) => {
            f64::from(u8::from(if a < b { fa } else { fb }))
        }
    }
}

impl BicmModel {
    pub fn n_influencers(&self) -> usize {
        self.row_state.len()
    }

    pub fn n_types(&self) -> usize {
        self.col_state.len()
    }

    /// p_iα.
    pub fn probability(&self, i: usize, a: usize) -> f64 {
        link_probability(self.row_state[i], self.col_state[a], &self.row_x, &self.col_y)
    }

    /// x_i = exp(−θ_i); 0 or ∞ for fixed nodes.
    pub fn influencer_multiplier(&self, i: usize) -> f64 {
        match self.row_state[i] {
            NodeState::Free { class } => self.row_x[class],
            NodeState::Fixed { full, .. } => if full { f64::INFINITY } else { 0.0 },
        }
    }

    /// y_α = exp(−t_α); 0 or ∞ for fixed nodes.
    pub fn type_multiplier(&self, a: usize) -> f64 {
        match self.col_state[a] {
            NodeState::Free { class } => self.col_y[class],
            NodeState::Fixed { full, .. } => if full { f64::INFINITY } else { 0.0 },
        }
    }

    pub fn influencer_state(&self, i: usize) -> NodeState {
        self.row_state[i]
    }

    pub fn type_state(&self, a: usize) -> NodeState {
        self.col_state[a]
    }

    /// Link probabilities of influencer `i` per column group, with the
    /// group sizes. Columns in one group share p for every influencer.
    pub fn grouped_row(&self, i: usize) -> Vec<(f64, usize)> {
        self.col_groups
            .iter()
            .map(|&(state, n)| (link_probability(self.row_state[i], state, &self.row_x, &self.col_y), n))
            .collect()
    }

    pub fn column_group(&self, a: usize) -> usize {
        self.col_group_of[a]
    }

    pub fn dense_probabilities(&self) -> Vec<Vec<f64>> {
        (0..self.n_influencers())
            .map(|i| (0..self.n_types()).map(|a| self.probability(i, a)).collect())
            .collect()
    }
}

struct Peeled {
    row_state: Vec<Option<NodeState>>,
    col_state: Vec<Option<NodeState>>,
    row_residual: Vec<usize>,
    col_residual: Vec<usize>,
}

/// Repeatedly remove nodes whose residual degree is 0 or equals the number
/// of active partners; their links are forced to 0 or 1.
fn peel(m: &BinaryBipartite) -> Peeled {
    let (n_rows, n_cols) = (m.n_influencers(), m.n_types());
    let mut row_state: Vec<Option<NodeState>> = vec![None; n_rows];
    let mut col_state: Vec<Option<NodeState>> = vec![None; n_cols];
    let mut row_residual = m.row_degrees.clone();
    let mut col_residual = m.col_degrees.clone();
    let (mut active_rows, mut active_cols) = (n_rows, n_cols);
    let mut order = 0;

    loop {
        let mut changed = false;
        for i in 0..n_rows {
            if row_state[i].is_some() {
                continue;
            }
            let full = row_residual[i] == active_cols;
            if row_residual[i] == 0 || full {
                row_state[i] = Some(NodeState::Fixed { order, full });
                order += 1;
                active_rows -= 1;
                changed = true;
                if full {
                    for a in 0..n_cols {
                        if col_state[a].is_none() {
                            col_residual[a] -= 1;
                        }
                    }
                }
            }
        }
        for a in 0..n_cols {
            if col_state[a].is_some() {
                continue;
            }
            let full = col_residual[a] == active_rows;
            if col_residual[a] == 0 || full {
                col_state[a] = Some(NodeState::Fixed { order, full });
                order += 1;
                active_cols -= 1;
                changed = true;
                if full {
                    for i in 0..n_rows {
                        if row_state[i].is_none() {
                            row_residual[i] -= 1;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Peeled {
        row_state,
        col_state,
        row_residual,
        col_residual,
    }
}

/// Group free nodes by residual degree: returns (state per node, class degrees, class sizes).
fn degree_classes(state: &[Option<NodeState>], residual: &[usize]) -> (Vec<NodeState>, Vec<f64>, Vec<f64>) {
    let mut classes: BTreeMap<usize, usize> = BTreeMap::new();
    for (s, &d) in state.iter().zip(residual) {
        if s.is_none() {
            let next = classes.len();
            classes.entry(d).or_insert(next);
        }
    }
    // renumber by degree order for determinism
    let order: HashMap<usize, usize> = classes.keys().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut sizes = vec![0.0; classes.len()];
    let degrees: Vec<f64> = classes.keys().map(|&d| d as f64).collect();
    let states = state
        .iter()
        .zip(residual)
        .map(|(s, d)| match s {
            Some(fixed) => *fixed,
            None => {
                let class = order[d];
                sizes[class] += 1.0;
                NodeState::Free { class }
            }
        })
        .collect();
    (states, degrees, sizes)
}

fn class_residuals(x: &[f64], y: &[f64], rd: &[f64], rn: &[f64], cd: &[f64], cn: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, &xr) in x.iter().enumerate() {
        let s: f64 = y.iter().zip(cn).map(|(&yc, &n)| n * xr * yc / (1.0 + xr * yc)).sum();
        worst = worst.max((s - rd[r]).abs());
    }
    for (c, &yc) in y.iter().enumerate() {
        let s: f64 = x.iter().zip(rn).map(|(&xr, &n)| n * xr * yc / (1.0 + xr * yc)).sum();
        worst = worst.max((s - cd[c]).abs());
    }
    worst
}

/// Fit the BiCM to `m` by damped fixed-point iteration
/// `x_i ← k_i / Σ_α y_α/(1 + x_i y_α)`, `y_α ← κ_α / Σ_i x_i/(1 + x_i y_α)`.
pub fn solve_bicm(m: &BinaryBipartite, config: SolverConfig) -> Result<BicmModel> {
    let peeled = peel(m);
    let (row_state, rd, rn) = degree_classes(&peeled.row_state, &peeled.row_residual);
    let (col_state, cd, cn) = degree_classes(&peeled.col_state, &peeled.col_residual);

    let mut x: Vec<f64>;
    let mut y: Vec<f64>;
    let mut iterations = 0;
    let mut damping_used = false;

    if rd.is_empty() || cd.is_empty() {
        if !rd.is_empty() || !cd.is_empty() {
            return Err(Error::Infeasible("free nodes remain on only one layer".into()));
        }
        x = Vec::new();
        y = Vec::new();
    } else {
        let links: f64 = rd.iter().zip(&rn).map(|(d, n)| d * n).sum();
        let scale = (2.0 * links).sqrt();
        x = rd.iter().map(|d| d / scale).collect();
        y = cd.iter().map(|d| d / scale).collect();
        let mut residual = class_residuals(&x, &y, &rd, &rn, &cd, &cn);
        let mut damped = false;
        while residual > config.tol {
            if iterations >= config.max_iter {
                return Err(Error::NonConvergence { iterations, residual });
            }
            iterations += 1;
            let x_next: Vec<f64> = x
                .iter()
                .zip(&rd)
                .map(|(&xr, &d)| {
                    let s: f64 = y.iter().zip(&cn).map(|(&yc, &n)| n * yc / (1.0 + xr * yc)).sum();
                    d / s
                })
                .collect();
            if damped {
                for (xr, xn) in x.iter_mut().zip(&x_next) {
                    *xr = 0.5 * *xr + 0.5 * xn;
                }
            } else {
                x = x_next;
            }
            let y_next: Vec<f64> = y
                .iter()
                .zip(&cd)
                .map(|(&yc, &d)| {
                    let s: f64 = x.iter().zip(&rn).map(|(&xr, &n)| n * xr / (1.0 + xr * yc)).sum();
                    d / s
                })
                .collect();
            if damped {
                for (yc, yn) in y.iter_mut().zip(&y_next) {
                    *yc = 0.5 * *yc + 0.5 * yn;
                }
            } else {
                y = y_next;
            }
            if x.iter().chain(&y).any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::Infeasible(format!(
                    "multipliers left (0, ∞) after {iterations} iterations"
                )));
            }
            let next = class_residuals(&x, &y, &rd, &rn, &cd, &cn);
            if next > residual && !damped {
                damped = true;
                damping_used = true;
            }
            residual = next;
        }
    }

    let mut groups: BTreeMap<NodeState, usize> = BTreeMap::new();
    for s in &col_state {
        *groups.entry(*s).or_insert(0) += 1;
    }
    let col_groups: Vec<(NodeState, usize)> = groups.into_iter().collect();
    let group_index: HashMap<NodeState, usize> = col_groups.iter().enumerate().map(|(g, (s, _))| (*s, g)).collect();
    let col_group_of = col_state.iter().map(|s| group_index[s]).collect();

    let fixed = |states: &[NodeState], want_full: bool| -> Vec<usize> {
        states
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, NodeState::Fixed { full, .. } if *full == want_full))
            .map(|(i, _)| i)
            .collect()
    };
    let names = |idx: Vec<usize>| idx.into_iter().map(|i| m.influencers[i].clone()).collect();
    let diagnostics = BicmDiagnostics {
        iterations,
        converged: true,
        max_row_residual: 0.0,
        max_col_residual: 0.0,
        damping_used,
        row_classes: rd.len(),
        col_classes: cd.len(),
        fixed_full_influencers: names(fixed(&row_state, true)),
        fixed_empty_influencers: names(fixed(&row_state, false)),
        fixed_full_types: fixed(&col_state, true).len(),
        fixed_empty_types: fixed(&col_state, false).len(),
    };

    let mut model = BicmModel {
        row_state,
        col_state,
        row_x: x,
        col_y: y,
        col_groups,
        col_group_of,
        diagnostics,
    };
    let (row_res, col_res) = degree_residuals(m, &model);
    model.diagnostics.max_row_residual = row_res;
    model.diagnostics.max_col_residual = col_res;
    Ok(model)
}

/// Max |expected − observed| degree over influencers and over types.
pub fn degree_residuals(m: &BinaryBipartite, model: &BicmModel) -> (f64, f64) {
    let mut row_worst: f64 = 0.0;
    let mut col_expected = vec![0.0; model.col_groups.len()];
    let mut row_groups: BTreeMap<NodeState, usize> = BTreeMap::new();
    for s in &model.row_state {
        *row_groups.entry(*s).or_insert(0) += 1;
    }
    for (i, &k) in m.row_degrees.iter().enumerate() {
        let s: f64 = model.grouped_row(i).iter().map(|&(p, n)| p * n as f64).sum();
        row_worst = row_worst.max((s - k as f64).abs());
    }
    for (g, &(cs, _)) in model.col_groups.iter().enumerate() {
        col_expected[g] = row_groups
            .iter()
            .map(|(&rs, &n)| link_probability(rs, cs, &model.row_x, &model.col_y) * n as f64)
            .sum();
    }
    let col_worst = m
        .col_degrees
        .iter()
        .enumerate()
        .map(|(a, &k)| (col_expected[model.col_group_of[a]] - k as f64).abs())
        .fold(0.0, f64::max);
    (row_worst, col_worst)
}

/// Drop probabilities below this when counting effective types for a pair.
pub const PRUNE_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailMethod {
    /// Observed count of 0 or no type can be shared: p = 1.
    Trivial,
    Exact,
    Poisson,
}

impl fmt::Display for TailMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailMethod::Trivial => "trivial",
            TailMethod::Exact => "exact",
            TailMethod::Poisson => "poisson",
        })
    }
}

/// P(X ≥ k) for X a sum of independent Bernoulli(pᵢ), by dynamic
/// programming over counts 0..k with the top cell absorbing everything ≥ k.
pub fn poisson_binomial_tail(probs: &[f64], k: usize) -> f64 {
    poisson_binomial_tail_grouped(probs.iter().map(|&p| (p, 1)), k)
}

/// As [`poisson_binomial_tail`] with `(p, multiplicity)` pairs.
pub fn poisson_binomial_tail_grouped(probs: impl IntoIterator<Item = (f64, usize)>, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut dist = vec![0.0f64; k + 1];
    dist[0] = 1.0;
    for (p, n) in probs {
        if p <= 0.0 {
            continue;
        }
        for _ in 0..n {
            dist[k] += dist[k - 1] * p;
            for c in (1..k).rev() {
                dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
            }
            dist[0] *= 1.0 - p;
        }
    }
    dist[k].clamp(0.0, 1.0)
}

/// P(Y ≥ k) for Y ~ Poisson(λ).
pub fn poisson_tail(lambda: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(k as f64, lambda).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValueConfig {
    /// Pairs with more effective types than this use the Poisson approximation.
    pub exact_cutoff: usize,
}

impl Default for PValueConfig {
    fn default() -> Self {
        PValueConfig { exact_cutoff: 5_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairPValue {
    pub i: usize,
    pub j: usize,
    pub observed: usize,
    pub p_value: f64,
    pub method: TailMethod,
}

/// p-value of one pair's shared-type count under the BiCM null.
pub fn pair_pvalue(m: &BinaryBipartite, model: &BicmModel, i: usize, j: usize, config: PValueConfig) -> PairPValue {
    let observed = m.shared(i, j);
    let gi = model.grouped_row(i);
    let gj = model.grouped_row(j);
    pair_pvalue_grouped(i, j, observed, &gi, &gj, config)
}

fn pair_pvalue_grouped(
    i: usize,
    j: usize,
    observed: usize,
    gi: &[(f64, usize)],
    gj: &[(f64, usize)],
    config: PValueConfig,
) -> PairPValue {
    let q: Vec<(f64, usize)> = gi
        .iter()
        .zip(gj)
        .map(|(&(a, n), &(b, _))| (a * b, n))
        .filter(|&(p, _)| p >= PRUNE_PROBABILITY)
        .collect();
    let effective: usize = q.iter().map(|&(_, n)| n).sum();
    let (p_value, method) = if observed == 0 || effective == 0 {
        (if observed == 0 { 1.0 } else { 0.0 }, TailMethod::Trivial)
    } else if effective <= config.exact_cutoff {
        (poisson_binomial_tail_grouped(q, observed), TailMethod::Exact)
    } else {
        let lambda: f64 = q.iter().map(|&(p, n)| p * n as f64).sum();
        (poisson_tail(lambda, observed), TailMethod::Poisson)
    };
    // with nothing shareable the event is impossible under the null unless nothing was observed
    let (p_value, method) = if effective == 0 && observed > 0 {
        (p_value, TailMethod::Trivial)
    } else {
        (p_value, method)
    };
    PairPValue {
        i,
        j,
        observed,
        p_value,
        method,
    }
}

/// p-values for every influencer pair i < j, in (i, j) lexicographic order.
pub fn cooccurrence_pvalues(m: &BinaryBipartite, model: &BicmModel, config: PValueConfig) -> Vec<PairPValue> {
    let n = m.n_influencers();
    let grouped: Vec<Vec<(f64, usize)>> = (0..n).map(|i| model.grouped_row(i)).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| pair_pvalue_grouped(i, j, m.shared(i, j), &grouped[i], &grouped[j], config))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Benjamini-Hochberg: reject the r smallest p-values, r the largest rank
/// with p_(r) ≤ r·α/m. Returns one decision per input, in input order.
pub fn fdr_filter(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if pvalues.is_empty() {
        return Err(Error::Empty("p-values for FDR"));
    }
    if pvalues.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Invalid("p-values must lie in [0, 1]".into()));
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(rank, &idx)| pvalues[idx] <= (rank + 1) as f64 * alpha / m as f64)
        .map_or(0, |(rank, _)| rank + 1);
    let mut decisions = vec![false; m];
    for &idx in &order[..cutoff] {
        decisions[idx] = true;
    }
    Ok(decisions)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedEdge {
    /// Indices into [`ValidatedProjection::nodes`].
    pub source: usize,
    pub target: usize,
    pub observed: usize,
    pub p_value: f64,
    pub method: TailMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedProjection {
    /// Influencers with at least one validated edge, in bipartite row order.
    pub nodes: Vec<String>,
    pub edges: Vec<ValidatedEdge>,
    pub alpha: f64,
}

impl ValidatedProjection {
    pub fn summary(&self) -> NetworkSummary {
        NetworkSummary::graph(self.nodes.len(), self.edges.len())
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.source, e.target)).collect()
    }
}

/// Keep the rejected pairs as edges; drop influencers left isolated.
pub fn project(m: &BinaryBipartite, pairs: &[PairPValue], decisions: &[bool], alpha: f64) -> ValidatedProjection {
    let mut used = vec![false; m.n_influencers()];
    for (pair, _) in pairs.iter().zip(decisions).filter(|(_, &d)| d) {
        used[pair.i] = true;
        used[pair.j] = true;
    }
    let mut node_index = vec![usize::MAX; m.n_influencers()];
    let mut nodes = Vec::new();
    for (i, name) in m.influencers.iter().enumerate() {
        if used[i] {
            node_index[i] = nodes.len();
            nodes.push(name.clone());
        }
    }
    let edges = pairs
        .iter()
        .zip(decisions)
        .filter(|(_, &d)| d)
        .map(|(p, _)| ValidatedEdge {
            source: node_index[p.i],
            target: node_index[p.j],
            observed: p.observed,
            p_value: p.p_value,
            method: p.method,
        })
        .collect();
    ValidatedProjection { nodes, edges, alpha }
}
