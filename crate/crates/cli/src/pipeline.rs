//! Pipeline stages and the subcommands built from them.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::{anyhow, Context};
use lexnet::binet::{
    build_bipartite, cooccurrence_pvalues, fdr_filter, project, rca_binarize, solve_bicm, BicmDiagnostics,
    BinaryBipartite, NetworkSummary, PairPValue, TailMethod, ValidatedProjection, PRUNE_PROBABILITY,
    RCA_TIE_TOLERANCE,
};
use lexnet::community::{average_modularity, community_label_profile, CommunityProfile, Graph, ModularityRuns};
use lexnet::ingest::{
    load_labeled_corpus, CorpusPaths, JoinStats, LabeledCorpus, PoliticalLeaning, Provenance, Reject, Reliability,
    EMOJI_DEFINITION,
};
use lexnet::profiles::{build_profiles, loglog_ols, OlsFit, ProfileSet, UserProfile, QUANTILE_RULE};
use lexnet::stats::{cohen_kappa, kruskal_wallis, AgreementResult, LabelMapping, ENTROPY_BASE};
use lexnet::synth::generate_corpus;
use lexnet::textpipe::{Preprocessor, StopWords, STEMMER_NAME};
use log::{info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{graphml, opt, write_csv, write_json, GraphEdge};

#[derive(Debug, Clone, Serialize)]
pub struct MethodInfo {
    pub stemmer: &'static str,
    pub stopwords: String,
    pub stopword_count: usize,
    pub emoji_definition: &'static str,
    pub quantile_rule: &'static str,
    pub entropy_base: &'static str,
    pub rca_tie_tolerance: f64,
    pub pvalue_prune_below: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub provenance: Provenance,
    pub join: JoinStats,
    pub rejects: Vec<Reject>,
    pub users_without_tokens: Vec<String>,
    pub profiled_users: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModularitySummary {
    pub n_runs: usize,
    pub first_seed: u64,
    pub mean: f64,
    pub std: f64,
    pub best_seed: u64,
    pub best_modularity: f64,
    pub n_communities: usize,
}

/// Machine-readable record of one run. Holds no timestamps and no output
/// location, so identical runs produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub method: MethodInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputSummary>,
    /// Node/edge counts, density and average degree per network stage.
    pub stages: BTreeMap<String, NetworkSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modularity: Option<ModularitySummary>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl Manifest {
    fn new(command: &str, cfg: &RunConfig, stopwords: &StopWords) -> Self {
        Manifest {
            tool: "lexnet",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: cfg.clone(),
            method: MethodInfo {
                stemmer: STEMMER_NAME,
                stopwords: match &cfg.stopwords {
                    Some(p) => p.display().to_string(),
                    None => "snowball-english (bundled)".into(),
                },
                stopword_count: stopwords.len(),
                emoji_definition: EMOJI_DEFINITION,
                quantile_rule: QUANTILE_RULE,
                entropy_base: ENTROPY_BASE,
                rca_tie_tolerance: RCA_TIE_TOLERANCE,
                pvalue_prune_below: PRUNE_PROBABILITY,
            },
            inputs: None,
            stages: BTreeMap::new(),
            modularity: None,
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn warn(&mut self, message: String) {
        warn!("{message}");
        self.warnings.push(message);
    }

    fn write(&mut self, dir: &Path) -> anyhow::Result<()> {
        self.outputs.push("manifest.json".into());
        self.outputs.sort();
        self.outputs.dedup();
        write_json(&dir.join("manifest.json"), self)
    }
}

/// Everything computed from the inputs up to per-user profiles.
pub struct MetricsResult {
    pub corpus: LabeledCorpus,
    pub profiles: ProfileSet,
}

fn load_stopwords(cfg: &RunConfig) -> anyhow::Result<StopWords> {
    Ok(match &cfg.stopwords {
        Some(p) => StopWords::from_file(p)?,
        None => StopWords::snowball_english(),
    })
}

pub fn run_metrics(cfg: &RunConfig, manifest: &mut Manifest) -> anyhow::Result<MetricsResult> {
    let tweets = cfg
        .tweets
        .clone()
        .ok_or_else(|| anyhow!("no tweets file given (use --tweets or `tweets` in the config)"))?;
    let (corpus, rejects) = load_labeled_corpus(&CorpusPaths {
        tweets,
        user_labels: cfg.user_labels.clone(),
        tweet_labels: cfg.tweet_labels.clone(),
    })?;
    for r in &rejects {
        warn!("rejected row at line {}: {}", r.line, r.reason);
    }
    let preprocessor = Preprocessor::new(load_stopwords(cfg)?);
    let profiles = build_profiles(&corpus, &preprocessor, cfg.compression_level)?;
    if profiles.profiles.is_empty() {
        return Err(lexnet::Error::Empty("users with at least one token").into());
    }
    info!(
        "profiled {} users ({} without tokens)",
        profiles.profiles.len(),
        profiles.excluded_users.len()
    );
    manifest.inputs = Some(InputSummary {
        provenance: corpus.provenance.clone(),
        join: corpus.join.clone(),
        rejects,
        users_without_tokens: profiles.excluded_users.clone(),
        profiled_users: profiles.profiles.len(),
    });
    Ok(MetricsResult { corpus, profiles })
}

pub const METRICS_COLUMNS: [&str; 9] = [
    "user_id",
    "n_tweets",
    "n_tokens",
    "n_types",
    "yule_k",
    "gzip_ratio",
    "flesch",
    "s_raw",
    "s_compressed",
];

pub const PROFILE_COLUMNS: [&str; 15] = [
    "user_id",
    "n_tweets",
    "n_tokens",
    "n_types",
    "yule_k",
    "gzip_ratio",
    "flesch",
    "n_classified",
    "negativity_score",
    "negativity_class",
    "offensiveness_score",
    "offensiveness_class",
    "account_type",
    "political_leaning",
    "reliability",
];

pub fn write_metrics(dir: &Path, m: &MetricsResult, manifest: &mut Manifest) -> anyhow::Result<()> {
    write_csv(
        &dir.join("metrics.csv"),
        &METRICS_COLUMNS,
        m.profiles.profiles.iter().map(|p| {
            vec![
                p.user_id.clone(),
                p.n_tweets.to_string(),
                p.n_tokens.to_string(),
                p.n_types.to_string(),
                p.scores.yule_k.to_string(),
                p.scores.gzip_ratio.to_string(),
                p.scores.flesch.to_string(),
                p.scores.s_raw.to_string(),
                p.scores.s_compressed.to_string(),
            ]
        }),
    )?;
    let class = |c: Option<lexnet::profiles::QuartileClass>| c.map(|c| c.to_string()).unwrap_or_default();
    write_csv(
        &dir.join("profiles.csv"),
        &PROFILE_COLUMNS,
        m.profiles.profiles.iter().map(|p| {
            vec![
                p.user_id.clone(),
                p.n_tweets.to_string(),
                p.n_tokens.to_string(),
                p.n_types.to_string(),
                p.scores.yule_k.to_string(),
                p.scores.gzip_ratio.to_string(),
                p.scores.flesch.to_string(),
                p.n_classified.to_string(),
                opt(p.negativity_score),
                class(p.negativity_class),
                opt(p.offensiveness_score),
                class(p.offensiveness_class),
                p.labels.account_type.to_string(),
                p.labels.political_leaning.to_string(),
                p.labels.reliability.to_string(),
            ]
        }),
    )?;
    manifest.outputs.extend(["metrics.csv".into(), "profiles.csv".into()]);
    Ok(())
}

pub struct NetworkResult {
    pub binary: BinaryBipartite,
    pub diagnostics: Option<BicmDiagnostics>,
    pub pairs: Vec<PairPValue>,
    pub decisions: Vec<bool>,
    pub projection: ValidatedProjection,
}

pub fn run_network(cfg: &RunConfig, m: &MetricsResult, manifest: &mut Manifest) -> anyhow::Result<NetworkResult> {
    let ids: Vec<String> = m.profiles.profiles.iter().map(|p| p.user_id.clone()).collect();
    let weighted = build_bipartite(&ids, &m.profiles.tokens)?;
    manifest.stages.insert("1_bipartite_weighted".into(), weighted.summary());
    let binary = rca_binarize(&weighted);
    manifest.stages.insert("2_bipartite_rca".into(), binary.summary());
    if !binary.dropped_influencers().is_empty() {
        manifest.warn(format!(
            "{} influencers have no link after RCA filtering",
            binary.dropped_influencers().len()
        ));
    }

    let (diagnostics, pairs, decisions) = if binary.n_influencers() < 2 {
        manifest.warn("fewer than two influencers after RCA filtering; projection is empty".into());
        (None, Vec::new(), Vec::new())
    } else {
        let model = solve_bicm(&binary, cfg.solver())?;
        info!(
            "BiCM converged in {} iterations (max residual {:e})",
            model.diagnostics.iterations,
            model.diagnostics.max_residual()
        );
        let pairs = cooccurrence_pvalues(&binary, &model, cfg.pvalues());
        let p: Vec<f64> = pairs.iter().map(|p| p.p_value).collect();
        let decisions = fdr_filter(&p, cfg.fdr_alpha)?;
        (Some(model.diagnostics), pairs, decisions)
    };
    let projection = project(&binary, &pairs, &decisions, cfg.fdr_alpha);
    manifest.stages.insert("3_projection".into(), projection.summary());
    if projection.edges.is_empty() {
        manifest.warn("no influencer pair survived FDR validation".into());
    }
    Ok(NetworkResult {
        binary,
        diagnostics,
        pairs,
        decisions,
        projection,
    })
}

#[derive(Serialize)]
struct BicmReport<'a> {
    tolerance: f64,
    max_iter: usize,
    exact_dp_cutoff: usize,
    influencers: usize,
    types: usize,
    links: usize,
    dropped_influencers: &'a [String],
    dropped_types: usize,
    solver: &'a Option<BicmDiagnostics>,
    pairs_tested: usize,
    pairs_by_method: BTreeMap<String, usize>,
    pairs_rejected: usize,
    fdr_alpha: f64,
}

pub fn write_network(dir: &Path, cfg: &RunConfig, n: &NetworkResult, manifest: &mut Manifest) -> anyhow::Result<()> {
    let names = n.binary.influencers();
    write_csv(
        &dir.join("validated_edges.csv"),
        &["i_user_id", "j_user_id", "observed_shared", "p_value", "method", "rejected"],
        n.pairs
            .iter()
            .zip(&n.decisions)
            .filter(|(p, _)| p.observed > 0)
            .map(|(p, &d)| {
                vec![
                    names[p.i].clone(),
                    names[p.j].clone(),
                    p.observed.to_string(),
                    p.p_value.to_string(),
                    p.method.to_string(),
                    u8::from(d).to_string(),
                ]
            }),
    )?;
    let proj = &n.projection;
    write_csv(
        &dir.join("projection_edges.csv"),
        &["source", "target"],
        proj.edges
            .iter()
            .map(|e| vec![proj.nodes[e.source].clone(), proj.nodes[e.target].clone()]),
    )?;
    let edges: Vec<GraphEdge> = proj
        .edges
        .iter()
        .map(|e| GraphEdge {
            source: &proj.nodes[e.source],
            target: &proj.nodes[e.target],
            observed: e.observed,
            p_value: e.p_value,
        })
        .collect();
    std::fs::write(dir.join("projection.graphml"), graphml(&proj.nodes, &edges)).context("writing projection.graphml")?;

    let mut by_method: BTreeMap<String, usize> = BTreeMap::new();
    for m in [TailMethod::Trivial, TailMethod::Exact, TailMethod::Poisson] {
        by_method.insert(m.to_string(), n.pairs.iter().filter(|p| p.method == m).count());
    }
    write_json(
        &dir.join("bicm_diagnostics.json"),
        &BicmReport {
            tolerance: cfg.bicm_tol,
            max_iter: cfg.bicm_max_iter,
            exact_dp_cutoff: cfg.exact_dp_cutoff,
            influencers: n.binary.n_influencers(),
            types: n.binary.n_types(),
            links: n.binary.n_links(),
            dropped_influencers: n.binary.dropped_influencers(),
            dropped_types: n.binary.dropped_types().len(),
            solver: &n.diagnostics,
            pairs_tested: n.pairs.len(),
            pairs_by_method: by_method,
            pairs_rejected: n.decisions.iter().filter(|&&d| d).count(),
            fdr_alpha: cfg.fdr_alpha,
        },
    )?;
    manifest.outputs.extend(
        [
            "validated_edges.csv",
            "projection_edges.csv",
            "projection.graphml",
            "bicm_diagnostics.json",
        ]
        .map(String::from),
    );
    Ok(())
}

pub struct CommunityResult {
    /// (user id, community id), in projection node order.
    pub assignment: Vec<(String, usize)>,
    pub runs: Option<ModularityRuns>,
    pub profiles: Vec<CommunityProfile>,
}

pub fn run_communities(
    cfg: &RunConfig,
    m: &MetricsResult,
    n: &NetworkResult,
    manifest: &mut Manifest,
) -> anyhow::Result<CommunityResult> {
    let proj = &n.projection;
    if proj.edges.is_empty() {
        manifest.warn("projection has no edges; community outputs are empty".into());
        return Ok(CommunityResult {
            assignment: Vec::new(),
            runs: None,
            profiles: Vec::new(),
        });
    }
    let graph = Graph::new(proj.nodes.len(), &proj.edge_list())?;
    let runs = average_modularity(&graph, cfg.louvain_runs, cfg.louvain_first_seed, cfg.louvain_resolution)?;
    let best = &runs.best;
    let labels: Vec<_> = proj
        .nodes
        .iter()
        .map(|id| {
            m.corpus
                .user(id)
                .map(|u| u.labels.clone())
                .ok_or_else(|| anyhow!("projection node {id} missing from corpus"))
        })
        .collect::<anyhow::Result<_>>()?;
    let profiles = community_label_profile(best, &labels)?;
    for p in profiles.iter().filter(|p| p.political_entropy.is_none() || p.reliability_entropy.is_none()) {
        manifest.warn(format!(
            "community {} has members without known labels; its entropy is undefined",
            p.community
        ));
    }
    manifest.modularity = Some(ModularitySummary {
        n_runs: runs.n_runs,
        first_seed: runs.first_seed,
        mean: runs.mean,
        std: runs.std,
        best_seed: best.seed,
        best_modularity: best.modularity,
        n_communities: best.n_communities,
    });
    manifest.stages.insert("3_projection".into(), proj.summary());
    Ok(CommunityResult {
        assignment: proj.nodes.iter().cloned().zip(best.membership.iter().copied()).collect(),
        runs: Some(runs),
        profiles,
    })
}

#[derive(Serialize)]
struct CommunityReport<'a> {
    resolution: f64,
    n_runs: usize,
    first_seed: u64,
    mean_modularity: Option<f64>,
    std_modularity: Option<f64>,
    best_seed: Option<u64>,
    best_modularity: Option<f64>,
    run_modularity: Option<&'a [f64]>,
    communities: &'a [CommunityProfile],
}

pub fn write_communities(
    dir: &Path,
    cfg: &RunConfig,
    c: &CommunityResult,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    write_csv(
        &dir.join("communities.csv"),
        &["user_id", "community_id"],
        c.assignment.iter().map(|(u, k)| vec![u.clone(), k.to_string()]),
    )?;
    let runs = c.runs.as_ref();
    write_json(
        &dir.join("community_profiles.json"),
        &CommunityReport {
            resolution: cfg.louvain_resolution,
            n_runs: cfg.louvain_runs,
            first_seed: cfg.louvain_first_seed,
            mean_modularity: runs.map(|r| r.mean),
            std_modularity: runs.map(|r| r.std),
            best_seed: runs.map(|r| r.best.seed),
            best_modularity: runs.map(|r| r.best.modularity),
            run_modularity: runs.map(|r| r.runs.as_slice()),
            communities: &c.profiles,
        },
    )?;
    manifest
        .outputs
        .extend(["communities.csv", "community_profiles.json"].map(String::from));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KruskalCell {
    pub metric: &'static str,
    pub feature: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VocabularyFit {
    /// `all` or an account type.
    pub group: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<OlsFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Agreement {
    pub field: &'static str,
    pub matched_users: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<AgreementResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub kruskal_wallis: Vec<KruskalCell>,
    /// log10(types) on log10(tweets) per user.
    pub vocabulary_fits: Vec<VocabularyFit>,
    pub agreement: Vec<Agreement>,
}

pub const METRICS: [&str; 3] = ["yule_k", "gzip_ratio", "flesch"];
pub const FEATURES: [&str; 5] = [
    "account_type",
    "political_leaning",
    "reliability",
    "offensiveness_class",
    "negativity_class",
];

fn metric_value(p: &UserProfile, metric: &str) -> f64 {
    match metric {
        "yule_k" => p.scores.yule_k,
        "gzip_ratio" => p.scores.gzip_ratio,
        _ => p.scores.flesch,
    }
}

/// The group label of a user for a feature; `None` for Unknown or missing.
fn feature_value(p: &UserProfile, feature: &str) -> Option<String> {
    let l = &p.labels;
    match feature {
        "account_type" => (l.account_type != Default::default()).then(|| l.account_type.to_string()),
        "political_leaning" => (l.political_leaning != PoliticalLeaning::Unknown).then(|| l.political_leaning.to_string()),
        "reliability" => (l.reliability != Reliability::Unknown).then(|| l.reliability.to_string()),
        "offensiveness_class" => p.offensiveness_class.map(|c| c.to_string()),
        _ => p.negativity_class.map(|c| c.to_string()),
    }
}

pub fn kruskal_grid(profiles: &[UserProfile]) -> Vec<KruskalCell> {
    let mut cells = Vec::new();
    for feature in FEATURES {
        for metric in METRICS {
            let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for p in profiles {
                if let Some(g) = feature_value(p, feature) {
                    groups.entry(g).or_default().push(metric_value(p, metric));
                }
            }
            let summary = groups
                .iter()
                .map(|(label, v)| GroupSummary {
                    label: label.clone(),
                    n: v.len(),
                })
                .collect();
            let values: Vec<Vec<f64>> = groups.into_values().collect();
            let mut cell = KruskalCell {
                metric,
                feature,
                status: "skipped",
                reason: None,
                groups: summary,
                h_statistic: None,
                dof: None,
                p_value: None,
            };
            if values.len() < 2 {
                cell.reason = Some(if values.is_empty() {
                    "feature absent".into()
                } else {
                    "only one group present".into()
                });
            } else {
                match kruskal_wallis(&values) {
                    Ok(r) => {
                        cell.status = if r.degenerate { "degenerate" } else { "ok" };
                        cell.h_statistic = Some(r.h_statistic);
                        cell.dof = Some(r.dof);
                        cell.p_value = Some(r.p_value);
                    }
                    Err(e) => cell.reason = Some(e.to_string()),
                }
            }
            cells.push(cell);
        }
    }
    cells
}

fn vocabulary_fits(profiles: &[UserProfile]) -> Vec<VocabularyFit> {
    let mut groups: BTreeMap<String, Vec<&UserProfile>> = BTreeMap::new();
    groups.insert("all".into(), profiles.iter().collect());
    for p in profiles {
        if let Some(g) = feature_value(p, "account_type") {
            groups.entry(g).or_default().push(p);
        }
    }
    groups
        .into_iter()
        .map(|(group, ps)| {
            let x: Vec<f64> = ps.iter().map(|p| p.n_tweets as f64).collect();
            let y: Vec<f64> = ps.iter().map(|p| p.n_types as f64).collect();
            match loglog_ols(&x, &y) {
                Ok(fit) => VocabularyFit {
                    group,
                    fit: Some(fit),
                    skipped: None,
                },
                Err(e) => VocabularyFit {
                    group,
                    fit: None,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn agreement(cfg: &RunConfig, corpus: &LabeledCorpus) -> anyhow::Result<Vec<Agreement>> {
    let Some(path) = &cfg.kappa_labels else {
        return Ok(Vec::new());
    };
    let mapping = match &cfg.label_mapping {
        Some(p) => LabelMapping::from_file(p)?,
        None => LabelMapping::mbfc(),
    };
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let uid = col("user_id").ok_or_else(|| anyhow!("{}: missing user_id column", path.display()))?;
    let mut external: HashMap<String, csv::StringRecord> = HashMap::new();
    for rec in reader.records() {
        let rec = rec?;
        external.insert(rec[uid].trim().to_string(), rec);
    }

    let mut out = Vec::new();
    for field in ["political_leaning", "reliability"] {
        let Some(idx) = col(field) else {
            out.push(Agreement {
                field,
                matched_users: 0,
                result: None,
                skipped: Some(format!("column {field} absent")),
            });
            continue;
        };
        let mut ours = Vec::new();
        let mut theirs = Vec::new();
        for user in &corpus.users {
            let Some(rec) = external.get(&user.user_id) else { continue };
            let raw = rec.get(idx).unwrap_or("");
            let collapsed = mapping.collapse(field, raw);
            let (a, b) = match field {
                "political_leaning" => (
                    user.labels.political_leaning.to_string(),
                    collapsed.parse::<PoliticalLeaning>().ok().map(|v| v.to_string()),
                ),
                _ => (
                    user.labels.reliability.to_string(),
                    collapsed.parse::<Reliability>().ok().map(|v| v.to_string()),
                ),
            };
            match b {
                Some(b) if a != "Unknown" && b != "Unknown" => {
                    ours.push(a);
                    theirs.push(b);
                }
                _ => {}
            }
        }
        let matched = ours.len();
        match cohen_kappa(&ours, &theirs) {
            Ok(r) => out.push(Agreement {
                field,
                matched_users: matched,
                result: Some(r),
                skipped: None,
            }),
            Err(e) => out.push(Agreement {
                field,
                matched_users: matched,
                result: None,
                skipped: Some(e.to_string()),
            }),
        }
    }
    Ok(out)
}

pub fn run_report(cfg: &RunConfig, m: &MetricsResult) -> anyhow::Result<StatsReport> {
    Ok(StatsReport {
        kruskal_wallis: kruskal_grid(&m.profiles.profiles),
        vocabulary_fits: vocabulary_fits(&m.profiles.profiles),
        agreement: agreement(cfg, &m.corpus)?,
    })
}

pub fn write_report(dir: &Path, r: &StatsReport, manifest: &mut Manifest) -> anyhow::Result<()> {
    write_json(&dir.join("stats_report.json"), r)?;
    manifest.outputs.push("stats_report.json".into());
    Ok(())
}

fn prepare(command: &str, cfg: &RunConfig) -> anyhow::Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    Ok(Manifest::new(command, cfg, &load_stopwords(cfg)?))
}

pub fn cmd_metrics(cfg: &RunConfig) -> anyhow::Result<Manifest> {
    let mut manifest = prepare("metrics", cfg)?;
    let m = run_metrics(cfg, &mut manifest)?;
    write_metrics(&cfg.output_dir, &m, &mut manifest)?;
    manifest.write(&cfg.output_dir)?;
    Ok(manifest)
}

pub fn cmd_network(cfg: &RunConfig) -> anyhow::Result<Manifest> {
    let mut manifest = prepare("network", cfg)?;
    let m = run_metrics(cfg, &mut manifest)?;
    let n = run_network(cfg, &m, &mut manifest)?;
    write_network(&cfg.output_dir, cfg, &n, &mut manifest)?;
    manifest.write(&cfg.output_dir)?;
    Ok(manifest)
}

pub fn cmd_communities(cfg: &RunConfig) -> anyhow::Result<Manifest> {
    let mut manifest = prepare("communities", cfg)?;
    let m = run_metrics(cfg, &mut manifest)?;
    let n = run_network(cfg, &m, &mut manifest)?;
    let c = run_communities(cfg, &m, &n, &mut manifest)?;
    write_communities(&cfg.output_dir, cfg, &c, &mut manifest)?;
    manifest.write(&cfg.output_dir)?;
    Ok(manifest)
}

pub fn cmd_report(cfg: &RunConfig) -> anyhow::Result<Manifest> {
    let mut manifest = prepare("report", cfg)?;
    let m = run_metrics(cfg, &mut manifest)?;
    let r = run_report(cfg, &m)?;
    write_report(&cfg.output_dir, &r, &mut manifest)?;
    manifest.write(&cfg.output_dir)?;
    Ok(manifest)
}

pub fn cmd_all(cfg: &RunConfig) -> anyhow::Result<Manifest> {
    let mut manifest = prepare("all", cfg)?;
    let dir = &cfg.output_dir;
    let m = run_metrics(cfg, &mut manifest)?;
    write_metrics(dir, &m, &mut manifest)?;
    let r = run_report(cfg, &m)?;
    write_report(dir, &r, &mut manifest)?;
    let n = run_network(cfg, &m, &mut manifest)?;
    write_network(dir, cfg, &n, &mut manifest)?;
    let c = run_communities(cfg, &m, &n, &mut manifest)?;
    write_communities(dir, cfg, &c, &mut manifest)?;
    manifest.write(dir)?;
    Ok(manifest)
}

/// Write a synthetic corpus into the output directory.
pub fn cmd_gen(cfg: &RunConfig) -> anyhow::Result<()> {
    let corpus = generate_corpus(&cfg.synth)?;
    corpus.write(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("synth_config.json"), &cfg.synth)?;
    info!(
        "wrote {} tweets from {} users to {}",
        corpus.tweets.len(),
        corpus.user_labels.len(),
        cfg.output_dir.display()
    );
    Ok(())
}
