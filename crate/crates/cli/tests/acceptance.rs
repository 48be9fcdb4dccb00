//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use lexnet::binet::{
    fdr_filter, poisson_binomial_tail, rca_binarize, solve_bicm, BinaryBipartite, SolverConfig, WeightedBipartite,
};
use lexnet::community::{louvain, Graph};
use lexnet::complexity::{compression_ratio, flesch_index, yule_k, ReadabilityCounts};
use lexnet::profiles::loglog_ols;
use lexnet::stats::kruskal_wallis;
use lexnet::synth::{generate_corpus, SynthConfig};
use lexnet::textpipe::FrequencySpectrum;
use lexnet_cli::{cmd_all, RunConfig};
use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

// 1 ---------------------------------------------------------------------

/// K from a raw token list: 10⁴ (Σ_types f² − N) / N².
fn yule_oracle(tokens: &[u32]) -> f64 {
    let mut freq: HashMap<u32, u128> = HashMap::new();
    for t in tokens {
        *freq.entry(*t).or_insert(0) += 1;
    }
    let n = tokens.len() as u128;
    let s: u128 = freq.values().map(|f| f * f).sum();
    1e4 * (s - n) as f64 / (n * n) as f64
}

fn tokens_from_spectrum(spectrum: &BTreeMap<u64, u64>) -> Vec<u32> {
    let mut tokens = Vec::new();
    let mut next = 0u32;
    for (&i, &v) in spectrum {
        for _ in 0..v {
            tokens.extend(std::iter::repeat_n(next, i as usize));
            next += 1;
        }
    }
    tokens
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for n in 1..=1000u64 {
        let k = yule_k(&FrequencySpectrum::from_classes([(1, n)]).unwrap());
        ensure!(k == 0.0, "K({{1:{n}}}) = {k}");
    }
    let spec = BTreeMap::from([(1, 1), (2, 1)]);
    let k = yule_k(&FrequencySpectrum::from_classes(spec.clone()).unwrap());
    let oracle = yule_oracle(&tokens_from_spectrum(&spec));
    ensure!((k - oracle).abs() <= 1e-9 && (k - 20000.0 / 9.0).abs() <= 1e-9, "K = {k}, oracle {oracle}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let classes = rng.random_range(1..12);
        let spec: BTreeMap<u64, u64> = (0..classes)
            .map(|_| (rng.random_range(1..60), rng.random_range(1..40)))
            .collect();
        let k = yule_k(&FrequencySpectrum::from_classes(spec.clone()).unwrap());
        worst = worst.max((k - yule_oracle(&tokens_from_spectrum(&spec))).abs());
    }
    ensure!(worst <= 1e-9, "max deviation from oracle {worst:e}");
    within_time(start, Duration::from_secs(1))?;
    Ok(format!("200 random spectra, max |ΔK| = {worst:e}"))
}

// 2 ---------------------------------------------------------------------

const FLESCH_FIXTURE: &str = include_str!("../../core/tests/fixtures/flesch_sentences.tsv");
const NEWS_FIXTURE: &str = include_str!("../../core/tests/fixtures/news_paragraph.txt");

fn criterion_2() -> Outcome {
    let mut n = 0;
    for line in FLESCH_FIXTURE.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let text = cols[0].replace("\\n", "\n");
        let (w, s, y): (f64, f64, f64) = (cols[1].parse().unwrap(), cols[2].parse().unwrap(), cols[3].parse().unwrap());
        let counts = ReadabilityCounts::of(&text);
        ensure!(
            (counts.words, counts.sentences, counts.syllables) == (w as usize, s as usize, y as usize),
            "{text:?}: counts {counts:?}"
        );
        let expected = 206.835 - 1.015 * (w / s) - 84.6 * (y / w);
        let got = flesch_index(&text).map_err(|e| e.to_string())?;
        ensure!((got - expected).abs() <= 1e-6, "{text:?}: {got} vs {expected}");
        n += 1;
    }
    ensure!(n >= 20, "only {n} fixture sentences");
    let news = flesch_index(NEWS_FIXTURE).map_err(|e| e.to_string())?;
    ensure!((60.0..=70.0).contains(&news), "news paragraph scored {news}");
    Ok(format!("{n} hand-traced sentences; news paragraph {news:.2}"))
}

// 3 ---------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["alpha", "beta", "gamma", "delta", "virus", "news", "vote", "the", "and", "health"];
    let mut checked = 0;
    for _ in 0..100 {
        let len = rng.random_range(65..3000);
        let mut x = String::new();
        while x.len() < len {
            if rng.random_bool(0.5) {
                x.push_str(words[rng.random_range(0..words.len())]);
            } else {
                let n = rng.random_range(1..8);
                x.extend((0..n).map(|_| rng.random_range(b'a'..=b'z') as char));
            }
            x.push(' ');
        }
        let a = compression_ratio(&x, 6).unwrap();
        let b = compression_ratio(&x, 6).unwrap();
        ensure!(a.s_compressed == b.s_compressed, "non-deterministic compressed size");
        let doubled = compression_ratio(&format!("{x}{x}"), 6).unwrap();
        ensure!(doubled.ratio < a.ratio, "ratio(x+x) = {} >= ratio(x) = {} at {} bytes", doubled.ratio, a.ratio, x.len());
        checked += 1;
    }
    within_time(start, Duration::from_secs(5))?;
    Ok(format!("{checked} random texts"))
}

// 4 ---------------------------------------------------------------------

/// RCA_iα > 1 evaluated in exact rational arithmetic.
fn rca_oracle(w: &[Vec<u64>]) -> Vec<Vec<bool>> {
    let row: Vec<u64> = w.iter().map(|r| r.iter().sum()).collect();
    let cols = w[0].len();
    let col: Vec<u64> = (0..cols).map(|a| w.iter().map(|r| r[a]).sum()).collect();
    let total: u64 = row.iter().sum();
    w.iter()
        .enumerate()
        .map(|(i, r)| {
            (0..cols)
                .map(|a| {
                    if row[i] == 0 || col[a] == 0 {
                        return false;
                    }
                    let rca = Ratio::new(r[a] as i128, row[i] as i128) / Ratio::new(col[a] as i128, total as i128);
                    rca > Ratio::from_integer(1)
                })
                .collect()
        })
        .collect()
}

/// Expand a filtered matrix back onto the full label set.
fn expand(m: &BinaryBipartite, rows: usize, cols: usize) -> Vec<Vec<bool>> {
    let mut out = vec![vec![false; cols]; rows];
    for (i, name) in m.influencers().iter().enumerate() {
        let r: usize = name[1..].parse().unwrap();
        for &a in m.row(i) {
            let c: usize = m.types()[a as usize][1..].parse().unwrap();
            out[r][c] = true;
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cells = 0;
    for case in 0..100 {
        let w: Vec<Vec<u64>> = (0..20)
            .map(|_| {
                (0..30)
                    .map(|_| if rng.random_bool(0.4) { 0 } else { rng.random_range(1..50) })
                    .collect()
            })
            .collect();
        let wf: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let weighted = WeightedBipartite::from_dense(
            (0..20).map(|i| format!("r{i}")).collect(),
            (0..30).map(|j| format!("c{j}")).collect(),
            &wf,
        )
        .unwrap();
        let m = rca_binarize(&weighted);
        ensure!(expand(&m, 20, 30) == rca_oracle(&w), "case {case}: mismatch with rational oracle");
        for c in [0.1, 7.0, 1000.0] {
            ensure!(rca_binarize(&weighted.scaled(c)) == m, "case {case}: scaling by {c} changed M");
        }
        cells += 600;
    }
    Ok(format!("100 matrices ({cells} cells) cell-exact; invariant under c ∈ {{0.1, 7, 1000}}"))
}

// 5 ---------------------------------------------------------------------

fn dense_residual(m: &BinaryBipartite, p: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in p.iter().enumerate() {
        worst = worst.max((row.iter().sum::<f64>() - m.row_degrees()[i] as f64).abs());
    }
    for a in 0..m.n_types() {
        let s: f64 = p.iter().map(|r| r[a]).sum();
        worst = worst.max((s - m.col_degrees()[a] as f64).abs());
    }
    worst
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let identity = BinaryBipartite::from_dense(&[vec![true, false], vec![false, true]]).unwrap();
    let model = solve_bicm(&identity, SolverConfig::default()).map_err(|e| e.to_string())?;
    for row in model.dense_probabilities() {
        for p in row {
            ensure!((p - 0.5).abs() <= 1e-8, "identity cell p = {p}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut max_iter = 0;
    for case in 0..50 {
        let rows = rng.random_range(10..=100);
        let cols = rng.random_range(20..=200);
        let density = rng.random_range(0.05..=0.5);
        let dense: Vec<Vec<bool>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_bool(density)).collect()).collect();
        let m = BinaryBipartite::from_dense(&dense).unwrap();
        let model = solve_bicm(&m, SolverConfig::default()).map_err(|e| format!("case {case}: {e}"))?;
        let r = dense_residual(&m, &model.dense_probabilities());
        ensure!(r <= 1e-6, "case {case} ({rows}×{cols}, density {density:.2}): residual {r:e}");
        ensure!(model.diagnostics.iterations <= 10_000, "case {case}: {} iterations", model.diagnostics.iterations);
        worst = worst.max(r);
        max_iter = max_iter.max(model.diagnostics.iterations);
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!("50 matrices, max residual {worst:.1e}, max {max_iter} iterations; identity p = 0.5"))
}

// 6 ---------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (rows, cols, samples) = (30, 50, 10_000);
    let dense: Vec<Vec<bool>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_bool(0.3)).collect()).collect();
    let m = BinaryBipartite::from_dense(&dense).unwrap();
    let model = solve_bicm(&m, SolverConfig::default()).map_err(|e| e.to_string())?;
    let p = model.dense_probabilities();

    let pair_idx = sample(&mut rng, rows * (rows - 1) / 2, 20).into_vec();
    let all_pairs: Vec<(usize, usize)> = (0..rows).flat_map(|i| (i + 1..rows).map(move |j| (i, j))).collect();
    let pairs: Vec<(usize, usize)> = pair_idx.iter().map(|&k| all_pairs[k]).collect();
    let observed: Vec<usize> = pairs.iter().map(|&(i, j)| m.shared(i, j)).collect();

    let mut row_sum = vec![0u64; rows];
    let mut col_sum = vec![0u64; cols];
    let mut tail_hits = vec![0u64; pairs.len()];
    let mut g = vec![vec![false; cols]; rows];
    for _ in 0..samples {
        for i in 0..rows {
            for a in 0..cols {
                let link = rng.random::<f64>() < p[i][a];
                g[i][a] = link;
                if link {
                    row_sum[i] += 1;
                    col_sum[a] += 1;
                }
            }
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let shared = (0..cols).filter(|&a| g[i][a] && g[j][a]).count();
            if shared >= observed[k] {
                tail_hits[k] += 1;
            }
        }
    }
    let n = samples as f64;
    let mut worst_z: f64 = 0.0;
    for i in 0..rows {
        let var: f64 = p[i].iter().map(|q| q * (1.0 - q)).sum();
        let se = (var / n).sqrt();
        let dev = (row_sum[i] as f64 / n - m.row_degrees()[i] as f64).abs();
        ensure!(dev <= 4.0 * se, "row {i}: mean degree off by {dev} (SE {se})");
        if se > 0.0 {
            worst_z = worst_z.max(dev / se);
        }
    }
    for a in 0..cols {
        let var: f64 = p.iter().map(|r| r[a] * (1.0 - r[a])).sum();
        let se = (var / n).sqrt();
        let dev = (col_sum[a] as f64 / n - m.col_degrees()[a] as f64).abs();
        ensure!(dev <= 4.0 * se, "column {a}: mean degree off by {dev} (SE {se})");
        if se > 0.0 {
            worst_z = worst_z.max(dev / se);
        }
    }
    let mut worst_pair_z: f64 = 0.0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let q: Vec<f64> = (0..cols).map(|a| p[i][a] * p[j][a]).collect();
        let analytic = poisson_binomial_tail(&q, observed[k]);
        let empirical = tail_hits[k] as f64 / n;
        let se = (analytic * (1.0 - analytic) / n).sqrt();
        let dev = (empirical - analytic).abs();
        ensure!(dev <= 3.0 * se, "pair ({i}, {j}): P̂ = {empirical}, analytic {analytic}, SE {se}");
        if se > 0.0 {
            worst_pair_z = worst_pair_z.max(dev / se);
        }
    }
    within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "{samples} samples; max degree z = {worst_z:.2}, max pair-tail z = {worst_pair_z:.2}"
    ))
}

// 7 ---------------------------------------------------------------------

/// Σ over all 2ⁿ outcomes with at least `k` successes, by exhaustive
/// recursion (pairwise summation over the outcome tree).
fn enumerate_tail(p: &[f64], k: usize, successes: usize, weight: f64) -> f64 {
    match p.split_first() {
        None => {
            if successes >= k {
                weight
            } else {
                0.0
            }
        }
        Some((&q, rest)) => {
            enumerate_tail(rest, k, successes + 1, weight * q) + enumerate_tail(rest, k, successes, weight * (1.0 - q))
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let len = rng.random_range(0..=20);
        let p: Vec<f64> = (0..len)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                2 => rng.random_range(0.0..1e-6),
                _ => rng.random(),
            })
            .collect();
        let k = rng.random_range(0..=len + 1);
        let dp = poisson_binomial_tail(&p, k);
        let oracle = enumerate_tail(&p, k, 0, 1.0);
        ensure!((dp - oracle).abs() <= 1e-12, "case {case}: {dp} vs {oracle}");
        worst = worst.max((dp - oracle).abs());
    }
    Ok(format!("100 vectors of length ≤ 20, max |Δ| = {worst:e}"))
}

// 8 ---------------------------------------------------------------------

/// Reject every p ≤ t*, t* the largest p-value with t ≤ α·#{p ≤ t}/m.
fn bh_oracle(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len() as f64;
    let threshold = p
        .iter()
        .filter(|&&t| t <= alpha * p.iter().filter(|&&q| q <= t).count() as f64 / m)
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    p.iter().map(|&q| q <= threshold).collect()
}

fn random_pvalues(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=500);
    (0..len)
        .map(|_| match rng.random_range(0..4) {
            0 => rng.random_range(0.0..0.001),
            1 => (rng.random::<f64>() * 100.0).round() / 100.0,
            _ => rng.random(),
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rejections = 0;
    for case in 0..1000 {
        let p = random_pvalues(&mut rng);
        let got = fdr_filter(&p, 0.05).map_err(|e| e.to_string())?;
        ensure!(got == bh_oracle(&p, 0.05), "case {case}: decisions differ from brute force");
        rejections += got.iter().filter(|&&d| d).count();
    }
    for case in 0..100 {
        let p = random_pvalues(&mut rng);
        let a = rng.random_range(0.001..0.3);
        let b = a + rng.random_range(0.0..0.3);
        let lo = fdr_filter(&p, a).unwrap();
        let hi = fdr_filter(&p, b).unwrap();
        ensure!(lo.iter().zip(&hi).all(|(&l, &h)| !l || h), "monotonicity case {case}");
    }
    Ok(format!("1000 vectors decision-exact ({rejections} rejections); 100 monotonicity cases"))
}

// 9 ---------------------------------------------------------------------

/// H = (N − 1) Σ nᵢ (r̄ᵢ − r̄)² / Σ (r − r̄)², with midranks by counting.
fn kruskal_oracle(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let rank = |x: f64| {
        let less = all.iter().filter(|&&y| y < x).count() as f64;
        let equal = all.iter().filter(|&&y| y == x).count() as f64;
        less + (equal + 1.0) / 2.0
    };
    let n = all.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut between = 0.0;
    let mut total = 0.0;
    for g in groups {
        let ranks: Vec<f64> = g.iter().map(|&x| rank(x)).collect();
        let gm = ranks.iter().sum::<f64>() / ranks.len() as f64;
        between += ranks.len() as f64 * (gm - mean).powi(2);
        total += ranks.iter().map(|r| (r - mean).powi(2)).sum::<f64>();
    }
    (n - 1.0) * between / total
}

fn criterion_9() -> Outcome {
    let hand = 12.0 / (6.0 * 7.0) * (6.0f64.powi(2) / 3.0 + 15.0f64.powi(2) / 3.0) - 3.0 * 7.0;
    let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).map_err(|e| e.to_string())?;
    ensure!((r.h_statistic - hand).abs() <= 1e-6, "H = {} vs {hand}", r.h_statistic);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let k = rng.random_range(2..6);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let n = rng.random_range(2..30);
                (0..n).map(|_| rng.random_range(0..15) as f64 + rng.random_range(0..2) as f64 * 0.5).collect()
            })
            .collect();
        let got = kruskal_wallis(&groups).map_err(|e| e.to_string())?;
        if got.degenerate {
            continue;
        }
        let d = (got.h_statistic - kruskal_oracle(&groups)).abs();
        ensure!(d <= 1e-8, "case {case}: |ΔH| = {d:e}");
        worst = worst.max(d);
    }

    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut max_p: f64 = 0.0;
    for _ in 0..20 {
        let groups: Vec<Vec<f64>> = (0..2)
            .map(|g| (0..100).map(|_| rng.sample(normal) + 2.0 * g as f64).collect())
            .collect();
        let r = kruskal_wallis(&groups).map_err(|e| e.to_string())?;
        max_p = max_p.max(r.p_value);
    }
    ensure!(max_p < 1e-4, "planted 2σ shift gave p = {max_p}");
    Ok(format!("H(1,2,3|4,5,6) = {:.6}; 100 random sets max |ΔH| = {worst:e}; 2σ shifts max p = {max_p:.1e}", r.h_statistic))
}

// 10 --------------------------------------------------------------------

/// Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j) over the dense adjacency.
fn modularity_oracle(n: usize, edges: &[(usize, usize)], membership: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in edges {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if membership[i] == membership[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn criterion_10() -> Outcome {
    let clique = |off: usize| (0..4).flat_map(move |a| (a + 1..4).map(move |b| (a + off, b + off)));
    let edges: Vec<(usize, usize)> = clique(0).chain(clique(4)).collect();
    let g = Graph::new(8, &edges).unwrap();
    let p = louvain(&g, 0, 1.0).map_err(|e| e.to_string())?;
    let q = modularity_oracle(8, &edges, &p.membership);
    ensure!(q == 0.5 && p.modularity == 0.5, "two 4-cliques: reported {}, oracle {q}", p.modularity);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut graphs = 0;
    while graphs < 200 {
        let n = rng.random_range(3..60);
        let density = rng.random_range(0.02..0.6);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|_| rng.random_bool(density))
            .collect();
        if edges.is_empty() {
            continue;
        }
        let g = Graph::new(n, &edges).unwrap();
        let p = louvain(&g, rng.random(), 1.0).map_err(|e| e.to_string())?;
        let d = (p.modularity - modularity_oracle(n, &edges, &p.membership)).abs();
        ensure!(d <= 1e-12, "graph {graphs}: |ΔQ| = {d:e}");
        worst = worst.max(d);
        graphs += 1;
    }
    Ok(format!("two 4-cliques Q = 0.5; 200 random graphs max |ΔQ| = {worst:e}"))
}

// 11 --------------------------------------------------------------------

/// Normalized mutual information, arithmetic-mean normalization.
fn nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0 / n;
        *pa.entry(x).or_insert(0.0) += 1.0 / n;
        *pb.entry(y).or_insert(0.0) += 1.0 / n;
    }
    let h = |m: &HashMap<usize, f64>| -m.values().map(|p| p * p.ln()).sum::<f64>();
    let mi: f64 = joint.iter().map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).ln()).sum();
    let (ha, hb) = (h(&pa), h(&pb));
    if ha + hb == 0.0 {
        1.0
    } else {
        2.0 * mi / (ha + hb)
    }
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

struct E2e {
    nmi: f64,
    entropies: Vec<f64>,
}

fn run_planted(seed: u64, shuffle_labels: bool, work: &Path) -> Result<E2e, String> {
    let synth = SynthConfig {
        n_blocks: 2,
        users_per_block: 20,
        block_mixing: 0.9,
        tweets_per_user: (20, 60),
        tokens_per_tweet: (10, 16),
        shuffle_labels,
        seed,
        ..SynthConfig::default()
    };
    let corpus = generate_corpus(&synth).map_err(|e| e.to_string())?;
    let data = work.join(format!("data-{seed}-{shuffle_labels}"));
    corpus.write(&data).map_err(|e| e.to_string())?;
    let out = work.join(format!("out-{seed}-{shuffle_labels}"));
    let cfg = RunConfig {
        tweets: Some(data.join("tweets.jsonl")),
        user_labels: Some(data.join("user_labels.csv")),
        tweet_labels: Some(data.join("tweet_labels.csv")),
        output_dir: out.clone(),
        ..RunConfig::default()
    };
    cmd_all(&cfg).map_err(|e| format!("{e:#}"))?;

    let metrics = read_csv(&out.join("metrics.csv"));
    let min_tokens = metrics.iter().map(|r| r[2].parse::<usize>().unwrap()).min().unwrap();
    if min_tokens < 200 {
        return Err(format!("seed {seed}: a user has only {min_tokens} tokens"));
    }
    let found: HashMap<String, usize> = read_csv(&out.join("communities.csv"))
        .into_iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect();
    // users missing from the projection count as singleton communities
    let mut next = found.values().max().map_or(0, |m| m + 1);
    let (truth, predicted): (Vec<usize>, Vec<usize>) = corpus
        .ground_truth
        .iter()
        .map(|g| {
            let c = found.get(&g.user_id).copied().unwrap_or_else(|| {
                next += 1;
                next
            });
            (g.block, c)
        })
        .unzip();

    let profiles: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("community_profiles.json")).unwrap()).unwrap();
    let entropies = profiles["communities"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|c| c["political_entropy"].as_f64())
        .collect();
    Ok(E2e {
        nmi: nmi(&truth, &predicted),
        entropies,
    })
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut recovered = 0;
    let mut nmis = Vec::new();
    let mut pure_max: f64 = 0.0;
    let mut shuffled = Vec::new();
    for seed in 0..10 {
        let pure = run_planted(seed, false, work.path())?;
        nmis.push(pure.nmi);
        if pure.nmi >= 0.9 {
            recovered += 1;
        }
        pure_max = pure.entropies.iter().copied().fold(pure_max, f64::max);
        let control = run_planted(seed, true, work.path())?;
        shuffled.extend(control.entropies);
    }
    let ln2 = std::f64::consts::LN_2;
    let control_mean = shuffled.iter().sum::<f64>() / shuffled.len() as f64;
    ensure!(recovered >= 9, "NMI ≥ 0.9 in only {recovered}/10 seeds: {nmis:?}");
    ensure!(pure_max < 0.1, "block-pure labels gave community entropy {pure_max}");
    ensure!(
        (control_mean - ln2).abs() <= 0.1 * ln2,
        "shuffled-label control mean entropy {control_mean} not within 10% of ln 2"
    );
    within_time(start, Duration::from_secs(120))?;
    let min_nmi = nmis.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "NMI ≥ 0.9 in {recovered}/10 seeds (min {min_nmi:.3}); pure entropy max {pure_max:.3}; shuffled mean {control_mean:.3} (ln 2 = {ln2:.3})"
    ))
}

// 12 --------------------------------------------------------------------

fn criterion_12() -> Outcome {
    let x: Vec<f64> = (1..=50).map(|i| i as f64 * 1.7).collect();
    let (a, b) = (0.73, 1.25);
    let y: Vec<f64> = x.iter().map(|v| 10f64.powf(b) * v.powf(a)).collect();
    let fit = loglog_ols(&x, &y).map_err(|e| e.to_string())?;
    ensure!(
        (fit.slope - a).abs() <= 1e-10 && (fit.intercept - b).abs() <= 1e-10,
        "exact power law: slope {} intercept {}",
        fit.slope,
        fit.intercept
    );

    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut worst_r2: f64 = 1.0;
    let mut min_slope = f64::INFINITY;
    for seed in 0..3 {
        let synth = SynthConfig {
            tweets_per_user: (5, 200),
            users_per_block: 40,
            seed,
            ..SynthConfig::default()
        };
        let corpus = generate_corpus(&synth).map_err(|e| e.to_string())?;
        let data = work.path().join(format!("d{seed}"));
        corpus.write(&data).map_err(|e| e.to_string())?;
        let cfg = RunConfig {
            tweets: Some(data.join("tweets.jsonl")),
            output_dir: work.path().join(format!("o{seed}")),
            ..RunConfig::default()
        };
        lexnet_cli::cmd_report(&cfg).map_err(|e| format!("{e:#}"))?;
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(cfg.output_dir.join("stats_report.json")).unwrap()).unwrap();
        let all = report["vocabulary_fits"]
            .as_array()
            .unwrap()
            .iter()
            .find(|f| f["group"] == "all")
            .unwrap();
        let slope = all["fit"]["slope"].as_f64().unwrap();
        let r2 = all["fit"]["r_squared"].as_f64().unwrap();
        ensure!(slope > 0.0 && r2 > 0.8, "seed {seed}: slope {slope}, r² {r2}");
        worst_r2 = worst_r2.min(r2);
        min_slope = min_slope.min(slope);
    }
    Ok(format!("exact law recovered; synth corpora min slope {min_slope:.3}, min r² {worst_r2:.3}"))
}

// 13 --------------------------------------------------------------------

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_13() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = generate_corpus(&SynthConfig { seed: 13, ..SynthConfig::default() }).map_err(|e| e.to_string())?;
    let data = work.path().join("data");
    corpus.write(&data).map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let cfg = RunConfig {
            tweets: Some(data.join("tweets.jsonl")),
            user_labels: Some(data.join("user_labels.csv")),
            tweet_labels: Some(data.join("tweet_labels.csv")),
            output_dir: work.path().join(run),
            ..RunConfig::default()
        };
        cmd_all(&cfg).map_err(|e| format!("{e:#}"))?;
        trees.push(tree(&cfg.output_dir));
    }
    ensure!(trees[0].keys().eq(trees[1].keys()), "file sets differ");
    for (name, bytes) in &trees[0] {
        ensure!(&trees[1][name] == bytes, "{name} differs between runs");
    }
    Ok(format!("{} files byte-identical across two runs", trees[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("Yule's K exactness", criterion_1),
        ("Flesch fixture suite", criterion_2),
        ("Compression determinism and ordering", criterion_3),
        ("RCA correctness", criterion_4),
        ("BiCM degree reproduction", criterion_5),
        ("Null-model sampling consistency", criterion_6),
        ("Poisson-binomial exactness", criterion_7),
        ("FDR equivalence", criterion_8),
        ("Kruskal-Wallis oracle", criterion_9),
        ("Louvain sanity", criterion_10),
        ("End-to-end planted recovery", criterion_11),
        ("Log-log OLS", criterion_12),
        ("Determinism", criterion_13),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{took:.2?}]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{took:.2?}]: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
