//! Louvain community detection on the validated projection, run-averaged
//! modularity, and per-community label profiles.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::{PoliticalLeaning, Reliability, UserLabels};
use crate::stats::shannon_entropy;
use crate::{Error, Result};

pub const DEFAULT_RESOLUTION: f64 = 1.0;
pub const DEFAULT_RUNS: usize = 100;

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Self-loops are rejected; repeated edges are merged.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut canon: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Invalid(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::Invalid(format!("self-loop on node {a}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &canon {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Ok(Graph {
            n,
            edges: canon,
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Community of each node; ids are contiguous from 0.
    pub membership: Vec<usize>,
    pub n_communities: usize,
    pub modularity: f64,
    pub seed: u64,
    pub resolution: f64,
}

impl Partition {
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (v, &c) in self.membership.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Q = Σ_c [ L_c/m − γ (d_c / 2m)² ], with L_c the edges inside c and d_c
/// its total degree.
pub fn modularity(graph: &Graph, membership: &[usize], resolution: f64) -> Result<f64> {
    if graph.n_edges() == 0 {
        return Err(Error::Empty("graph edges"));
    }
    if membership.len() != graph.n_nodes() {
        return Err(Error::Invalid("membership length differs from node count".into()));
    }
    let k = membership.iter().max().map_or(0, |&c| c + 1);
    let mut inside = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for &(a, b) in graph.edges() {
        if membership[a] == membership[b] {
            inside[membership[a]] += 1.0;
        }
    }
    for (v, &c) in membership.iter().enumerate() {
        degree[c] += graph.degree(v) as f64;
    }
    let m = graph.n_edges() as f64;
    Ok(inside
        .iter()
        .zip(&degree)
        .map(|(l, d)| l / m - resolution * (d / (2.0 * m)).powi(2))
        .sum())
}

/// Relabel so that ids appear contiguously in node order.
fn relabel(membership: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = membership
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Weighted graph with self-loops, used between aggregation levels.
struct Level {
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Weight of the self-loop, counted once.
    self_loop: Vec<f64>,
    strength: Vec<f64>,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        let adjacency: Vec<Vec<(usize, f64)>> = (0..g.n_nodes())
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        Level {
            strength: adjacency.iter().map(|a| a.len() as f64).collect(),
            self_loop: vec![0.0; g.n_nodes()],
            adjacency,
        }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    /// Local moving phase. Returns the community of every node and whether
    /// any node moved.
    fn move_nodes(&self, two_m: f64, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut community: Vec<usize> = (0..n).collect();
        let mut total: Vec<f64> = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut links_to: Vec<f64> = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &v in &order {
                let own = community[v];
                let k = self.strength[v];
                for &(u, w) in &self.adjacency[v] {
                    let c = community[u];
                    if links_to[c] == 0.0 {
                        touched.push(c);
                    }
                    links_to[c] += w;
                }
                total[own] -= k;
                let gain = |c: usize, links: f64| links - resolution * total[c] * k / two_m;
                let mut best = own;
                let mut best_gain = gain(own, links_to[own]);
                for &c in &touched {
                    let g = gain(c, links_to[c]);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += k;
                if best != own {
                    community[v] = best;
                    moved = true;
                    moved_any = true;
                }
                for c in touched.drain(..) {
                    links_to[c] = 0.0;
                }
                links_to[own] = 0.0;
            }
            if !moved {
                break;
            }
        }
        (community, moved_any)
    }

    fn aggregate(&self, community: &[usize], n_comm: usize) -> Level {
        let mut self_loop = vec![0.0; n_comm];
        let mut strength = vec![0.0; n_comm];
        let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_comm];
        for v in 0..self.len() {
            let cv = community[v];
            strength[cv] += self.strength[v];
            self_loop[cv] += self.self_loop[v];
            for &(u, w) in &self.adjacency[v] {
                let cu = community[u];
                if cu == cv {
                    // each internal edge is seen from both ends
                    self_loop[cv] += w / 2.0;
                } else {
                    *weights[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        Level {
            adjacency: weights.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loop,
            strength,
        }
    }
}

/// Multi-level Louvain. Node visiting order is shuffled from `seed` at every
/// level, so a seed fixes the result.
pub fn louvain(graph: &Graph, seed: u64, resolution: f64) -> Result<Partition> {
    if graph.n_edges() == 0 {
        return Err(Error::Empty("graph edges"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_m = 2.0 * graph.n_edges() as f64;
    let mut membership: Vec<usize> = (0..graph.n_nodes()).collect();
    let mut level = Level::from_graph(graph);
    loop {
        let (community, moved) = level.move_nodes(two_m, resolution, &mut rng);
        if !moved {
            break;
        }
        let (community, n_comm) = relabel(&community);
        for c in membership.iter_mut() {
            *c = community[*c];
        }
        if n_comm == level.len() {
            break;
        }
        level = level.aggregate(&community, n_comm);
    }
    let (mut membership, mut n_communities) = relabel(&membership);
    let mut q = modularity(graph, &membership, resolution)?;
    let whole = vec![0; graph.n_nodes()];
    let q_whole = modularity(graph, &whole, resolution)?;
    if q_whole > q {
        membership = whole;
        n_communities = 1;
        q = q_whole;
    }
    Ok(Partition {
        membership,
        n_communities,
        modularity: q,
        seed,
        resolution,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModularityRuns {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub n_runs: usize,
    pub first_seed: u64,
    /// Q of every run, by seed.
    pub runs: Vec<f64>,
    /// Highest-Q run; ties go to the smallest seed.
    pub best: Partition,
}

/// Run Louvain with seeds `first_seed..first_seed + n_runs` in parallel.
pub fn average_modularity(graph: &Graph, n_runs: usize, first_seed: u64, resolution: f64) -> Result<ModularityRuns> {
    if n_runs < 2 {
        return Err(Error::Invalid("at least two Louvain runs are required".into()));
    }
    let partitions: Vec<Partition> = (0..n_runs as u64)
        .into_par_iter()
        .map(|s| louvain(graph, first_seed + s, resolution))
        .collect::<Result<_>>()?;
    let runs: Vec<f64> = partitions.iter().map(|p| p.modularity).collect();
    let mut sorted = runs.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let best = partitions
        .into_iter()
        .reduce(|a, b| if b.modularity > a.modularity { b } else { a })
        .expect("n_runs >= 2");
    Ok(ModularityRuns {
        mean,
        std: var.sqrt(),
        n_runs,
        first_seed,
        runs,
        best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityProfile {
    pub community: usize,
    pub size: usize,
    /// Counts by label, Unknown excluded.
    pub political_leaning: BTreeMap<String, u64>,
    pub reliability: BTreeMap<String, u64>,
    /// `None` when no member has a known label.
    pub political_entropy: Option<f64>,
    pub reliability_entropy: Option<f64>,
}

/// Label counts and entropies per community. `labels[v]` belongs to node `v`.
pub fn community_label_profile(partition: &Partition, labels: &[UserLabels]) -> Result<Vec<CommunityProfile>> {
    if labels.len() != partition.membership.len() {
        return Err(Error::Invalid("one label row per partition node required".into()));
    }
    let mut profiles: Vec<CommunityProfile> = (0..partition.n_communities)
        .map(|community| CommunityProfile {
            community,
            size: 0,
            political_leaning: BTreeMap::new(),
            reliability: BTreeMap::new(),
            political_entropy: None,
            reliability_entropy: None,
        })
        .collect();
    for (&c, l) in partition.membership.iter().zip(labels) {
        let p = &mut profiles[c];
        p.size += 1;
        if l.political_leaning != PoliticalLeaning::Unknown {
            *p.political_leaning.entry(l.political_leaning.to_string()).or_insert(0) += 1;
        }
        if l.reliability != Reliability::Unknown {
            *p.reliability.entry(l.reliability.to_string()).or_insert(0) += 1;
        }
    }
    for p in &mut profiles {
        p.political_entropy = entropy_of(&p.political_leaning);
        p.reliability_entropy = entropy_of(&p.reliability);
    }
    Ok(profiles)
}

fn entropy_of(counts: &BTreeMap<String, u64>) -> Option<f64> {
    let v: Vec<u64> = counts.values().copied().collect();
    shannon_entropy(&v).ok()
}
