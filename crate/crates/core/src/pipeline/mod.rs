//! Stage orchestration over an output directory of snapshots.
//!
//! Each stage reads its inputs from the snapshots of earlier stages and
//! writes its own, so any suffix of the chain can be rerun on its own:
//!
//! | stage | reads | writes |
//! |-------|-------|--------|
//! | ingest | the input log | `records.jsonl`, `items.jsonl` |
//! | graph | `records.jsonl` | `graph.txt`, `partition.json` |
//! | score | graph, partition, items | `polarity_users.csv`, `polarity_items.csv` |
//! | fit-acceptance | records, graph, scores | `acceptance.json` |
//! | rank | all of the above | `lists.csv` |
//! | recommend | `lists.csv`, graph | `recommendations.csv`, `diagnostics.json` |
//!
//! Every stage also records a summary under its name in `report.json`.
//! Snapshots are written to a temporary name and renamed into place.

mod config;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance::{count_events, AcceptanceModel};
use crate::aggregate::{aggregate_ce, AggregationProblem};
use crate::graph::{bisect, build_graph, read_graph_snapshot, write_graph_snapshot, EndorsementGraph, Partition};
use crate::ingest::{
    build_edge_counts, build_item_pool, parse_records, read_item_pool_jsonl, shares_by_user,
    write_item_pool_jsonl, write_records_jsonl, InputFormat, ItemPool, ShareRecord,
};
use crate::polarity::{
    item_polarity, read_item_scores, read_user_scores, user_polarity, write_item_scores,
    write_user_scores, HittingMethod, PolarityTable, WalkGraph,
};
use crate::ranking::{factor_lists, read_lists, write_lists, Factor, L1Mode, RankedList, RankingContext, TopicIndex};
use crate::{Error, Result};

pub use config::{scenario_weights, ExtractorConfig, ExtractorKind, RunConfig, Scenario};
pub use synth::{generate_synthetic, GroundTruth, PlantedItem, SyntheticSpec};

pub const RECORDS: &str = "records.jsonl";
pub const ITEMS: &str = "items.jsonl";
pub const GRAPH: &str = "graph.txt";
pub const PARTITION: &str = "partition.json";
pub const USER_SCORES: &str = "polarity_users.csv";
pub const ITEM_SCORES: &str = "polarity_items.csv";
pub const ACCEPTANCE: &str = "acceptance.json";
pub const LISTS: &str = "lists.csv";
pub const RECOMMENDATIONS: &str = "recommendations.csv";
pub const DIAGNOSTICS: &str = "diagnostics.json";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Graph,
    Score,
    FitAcceptance,
    Rank,
    Recommend,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Graph,
        Stage::Score,
        Stage::FitAcceptance,
        Stage::Rank,
        Stage::Recommend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Score => "score",
            Stage::FitAcceptance => "fit-acceptance",
            Stage::Rank => "rank",
            Stage::Recommend => "recommend",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

/// Snapshot directory access.
#[derive(Debug, Clone)]
pub struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn open(&self, name: &str) -> Result<BufReader<File>> {
        let path = self.path(name);
        File::open(&path).map(BufReader::new).map_err(|e| Error::io(path, e))
    }

    fn read_string(&self, name: &str) -> Result<String> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(name);
        let tmp = self.path(&format!("{name}.tmp"));
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut out = BufWriter::new(file);
        body(&mut out)?;
        out.flush().map_err(|e| Error::io(&tmp, e))?;
        drop(out);
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    fn record_report(&self, stage: Stage, summary: Value) -> Result<()> {
        let mut report: serde_json::Map<String, Value> = self
            .read_string(REPORT)
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or_default();
        report.insert(stage.name().to_string(), summary);
        self.write(REPORT, |w| {
            serde_json::to_writer_pretty(&mut *w, &report).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn records(&self) -> Result<Vec<ShareRecord>> {
        Ok(parse_records(self.open(RECORDS)?, InputFormat::Jsonl)?.records)
    }

    pub fn items(&self) -> Result<ItemPool> {
        read_item_pool_jsonl(self.open(ITEMS)?)
    }

    pub fn graph(&self) -> Result<EndorsementGraph> {
        Ok(read_graph_snapshot(self.open(GRAPH)?)?.1)
    }

    pub fn partition(&self, graph: &EndorsementGraph) -> Result<Partition> {
        Partition::from_json(graph, &self.read_string(PARTITION)?)
    }

    pub fn polarity(&self) -> Result<PolarityTable> {
        Ok(PolarityTable {
            users: read_user_scores(self.open(USER_SCORES)?)?,
            items: read_item_scores(self.open(ITEM_SCORES)?)?,
        })
    }

    pub fn acceptance(&self) -> Result<AcceptanceModel> {
        AcceptanceModel::from_json(&self.read_string(ACCEPTANCE)?)
    }

    pub fn lists(&self) -> Result<Vec<RankedList>> {
        read_lists(self.open(LISTS)?)
    }
}

/// Target users: the `targets` file when configured, else every graph user.
/// Sorted and deduplicated.
pub fn resolve_targets(config: &RunConfig, graph: &EndorsementGraph) -> Result<Vec<String>> {
    let Some(path) = &config.targets else {
        return Ok(graph.users().to_vec());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut targets = BTreeSet::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if graph.vertex(line).is_none() {
            return Err(Error::UnknownUser(line.to_string()));
        }
        targets.insert(line.to_string());
    }
    Ok(targets.into_iter().collect())
}

pub fn ingest(config: &RunConfig, ws: &Workspace) -> Result<()> {
    let input = config
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("no input log given".into()))?;
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let report = parse_records(BufReader::new(file), config.format)?;
    let pool = build_item_pool(&report.records, config.min_shares)?;
    info!(
        "ingested {} records ({} malformed, {} duplicates), {} items",
        report.records.len(),
        report.malformed,
        report.duplicates,
        pool.len()
    );
    ws.write(RECORDS, |w| write_records_jsonl(&report.records, w))?;
    ws.write(ITEMS, |w| write_item_pool_jsonl(&pool, w))?;
    ws.record_report(
        Stage::Ingest,
        json!({
            "records": report.records.len(),
            "malformed": report.malformed,
            "duplicates": report.duplicates,
            "items": pool.len(),
            "min_shares": config.min_shares,
        }),
    )
}

pub fn graph(config: &RunConfig, ws: &Workspace) -> Result<()> {
    let records = ws.records()?;
    let graph = build_graph(&build_edge_counts(&records), config.min_pair_count)?;
    let mut partition = bisect(&graph, config.seed, config.min_balance)?;
    if !partition.feasible {
        warn!(
            "no bisection meets min_balance {}; using balance {:.3}",
            config.min_balance, partition.balance
        );
    }
    partition.assign_top_sets(&graph, config.k)?;
    info!(
        "graph: {} users, {} edges, cut {}",
        graph.num_vertices(),
        graph.num_edges(),
        partition.cut_size
    );
    ws.write(GRAPH, |w| write_graph_snapshot(&graph, Some(config.seed), w))?;
    ws.write(PARTITION, |w| {
        w.write_all(partition.to_json(&graph).as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    ws.record_report(
        Stage::Graph,
        json!({
            "vertices": graph.num_vertices(),
            "edges": graph.num_edges(),
            "min_pair_count": config.min_pair_count,
            "cut_size": partition.cut_size,
            "cut_weight": partition.cut_weight,
            "balance": partition.balance,
            "feasible": partition.feasible,
        }),
    )
}

pub fn score(config: &RunConfig, ws: &Workspace) -> Result<()> {
    let graph = ws.graph()?;
    let partition = ws.partition(&graph)?;
    let pool = ws.items()?;
    let polarity = config.polarity();
    let users = user_polarity(&graph, &partition, &polarity)?;
    let items = item_polarity(&users, &pool);
    ws.write(USER_SCORES, |w| write_user_scores(&users, w))?;
    ws.write(ITEM_SCORES, |w| write_item_scores(&items.items, w))?;
    ws.record_report(
        Stage::Score,
        json!({
            "method": polarity.resolve(graph.num_vertices()),
            "users": users.len(),
            "items": items.items.len(),
            "excluded_items": items.excluded.len(),
            "skipped_sharers": items.skipped_sharers,
        }),
    )
}

pub fn fit_acceptance(config: &RunConfig, ws: &Workspace) -> Result<()> {
    let records = ws.records()?;
    let graph = ws.graph()?;
    let table = ws.polarity()?;
    let model = count_events(&records, &graph, &table, config.buckets, config.alpha)?;
    ws.write(ACCEPTANCE, |w| {
        w.write_all(model.to_json().as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    ws.record_report(
        Stage::FitAcceptance,
        json!({
            "B": model.buckets,
            "alpha": model.alpha,
            "exposures": model.exposures.iter().flatten().sum::<u64>(),
            "endorsements": model.total_endorsements(),
        }),
    )
}

/// L1 mode actually used: exact recomputation needs exact hitting times, so
/// Monte Carlo scoring falls back to the proxy.
pub fn effective_l1_mode(config: &RunConfig, vertices: usize) -> L1Mode {
    if config.l1_mode == L1Mode::Exact && config.polarity().resolve(vertices) == HittingMethod::MonteCarlo {
        warn!("hitting times are estimated; L1 uses the proxy score");
        L1Mode::Proxy
    } else {
        config.l1_mode
    }
}

pub fn rank(config: &RunConfig, ws: &Workspace) -> Result<()> {
    let records = ws.records()?;
    let pool = ws.items()?;
    let graph = ws.graph()?;
    let partition = ws.partition(&graph)?;
    let table = ws.polarity()?;
    let model = ws.acceptance()?;
    let targets = resolve_targets(config, &graph)?;
    let extractor = config.extractor.build()?;
    let topics = TopicIndex::build(&records, &pool, extractor.as_ref());
    let shares = shares_by_user(&records, Some(&pool));
    let walk = WalkGraph::from_graph(&graph);
    let l1_mode = effective_l1_mode(config, graph.num_vertices());
    let ctx = RankingContext {
        graph: &graph,
        walk: &walk,
        partition: &partition,
        table: &table,
        pool: &pool,
        model: &model,
        topics: &topics,
        shares: &shares,
        k: config.k,
        cap: config.polarity().max_len(graph.num_vertices()) as f64,
        l1_mode,
        orientation: config.l2_orientation,
    };
    let per_target: Vec<[RankedList; 5]> = targets
        .par_iter()
        .map(|t| Ok(factor_lists(t, &ctx)?.map(|l| l.truncated(config.m))))
        .collect::<Result<_>>()?;
    let lists: Vec<RankedList> = per_target.into_iter().flatten().collect();
    let empty = lists.iter().filter(|l| l.is_empty()).count();
    ws.write(LISTS, |w| write_lists(&lists, w))?;
    ws.record_report(
        Stage::Rank,
        json!({
            "targets": targets.len(),
            "m": config.m,
            "l1_mode": l1_mode,
            "l2_orientation": config.l2_orientation,
            "extractor": config.extractor.kind,
            "empty_lists": empty,
        }),
    )
}

/// One target's aggregated ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub target: String,
    pub items: Vec<String>,
    pub phi: f64,
    /// `w_i * d(delta, L_i)` keyed by factor name.
    pub contributions: BTreeMap<String, f64>,
    pub universe: usize,
}

/// Aggregates one target's five lists. `None` when every list is empty.
pub fn recommend_target(
    target: &str,
    lists: &[RankedList; 5],
    weights: &[f64; 5],
    config: &RunConfig,
    seed: u64,
) -> Result<Option<Recommendation>> {
    let items: Vec<Vec<&str>> = lists.iter().map(|l| l.items().collect()).collect();
    let size = items
        .iter()
        .flat_map(|l| l.iter().take(config.m))
        .collect::<BTreeSet<_>>()
        .len();
    if size == 0 {
        return Ok(None);
    }
    let problem = AggregationProblem::new(&items, weights, config.m, config.n.min(size))?;
    let best = aggregate_ce(&problem, seed, &config.ce)?;
    let contributions = Factor::ALL
        .iter()
        .map(|f| f.to_string())
        .zip(problem.contributions(&best.delta)?)
        .collect();
    Ok(Some(Recommendation {
        target: target.to_string(),
        items: best.delta,
        phi: best.phi,
        contributions,
        universe: size,
    }))
}

/// The five lists of `target` from a flat collection; absent ones are empty.
pub fn lists_for(target: &str, all: &[RankedList]) -> [RankedList; 5] {
    Factor::ALL.map(|factor| {
        all.iter()
            .find(|l| l.target == target && l.factor == factor)
            .cloned()
            .unwrap_or(RankedList {
                factor,
                target: target.to_string(),
                entries: Vec::new(),
            })
    })
}

#[derive(Serialize)]
struct RecommendationRow<'a> {
    target: &'a str,
    rank: usize,
    item_id: &'a str,
    phi: f64,
    scenario: String,
}

pub fn recommend(config: &RunConfig, ws: &Workspace) -> Result<Vec<Recommendation>> {
    let graph = ws.graph()?;
    let lists = ws.lists()?;
    let targets = resolve_targets(config, &graph)?;
    let weights = config.weights()?;
    let mut by_target: BTreeMap<&str, Vec<RankedList>> = BTreeMap::new();
    for l in &lists {
        by_target.entry(l.target.as_str()).or_default().push(l.clone());
    }
    let none = Vec::new();
    let results: Vec<Option<Recommendation>> = targets
        .par_iter()
        .map(|t| {
            let own = lists_for(t, by_target.get(t.as_str()).unwrap_or(&none));
            let vertex = graph.vertex(t).ok_or_else(|| Error::UnknownUser(t.clone()))?;
            recommend_target(t, &own, &weights, config, config.seed.wrapping_add(vertex as u64))
        })
        .collect::<Result<_>>()?;
    let recs: Vec<Recommendation> = results.into_iter().flatten().collect();
    let skipped: Vec<&String> = targets
        .iter()
        .filter(|t| !recs.iter().any(|r| &r.target == *t))
        .collect();
    if !skipped.is_empty() {
        warn!("{} targets have no candidate items", skipped.len());
    }

    ws.write(RECOMMENDATIONS, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in &recs {
            for (rank, item) in r.items.iter().enumerate() {
                out.serialize(RecommendationRow {
                    target: &r.target,
                    rank: rank + 1,
                    item_id: item,
                    phi: r.phi,
                    scenario: config.scenario.to_string(),
                })
                .map_err(|e| Error::malformed("recommendations", e))?;
            }
        }
        out.flush()?;
        Ok(())
    })?;
    let diagnostics = json!({
        "scenario": config.scenario,
        "weights": weights,
        "n": config.n,
        "m": config.m,
        "targets": recs.iter().map(|r| (r.target.clone(), json!({
            "phi": r.phi,
            "universe": r.universe,
            "contributions": r.contributions,
        }))).collect::<serde_json::Map<_, _>>(),
        "skipped": skipped,
    });
    ws.write(DIAGNOSTICS, |w| {
        serde_json::to_writer_pretty(&mut *w, &diagnostics).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    ws.record_report(
        Stage::Recommend,
        json!({
            "scenario": config.scenario,
            "recommended": recs.len(),
            "skipped": skipped.len(),
        }),
    )?;
    Ok(recs)
}

fn run_one(stage: Stage, config: &RunConfig, ws: &Workspace) -> Result<()> {
    info!("stage {stage}");
    match stage {
        Stage::Ingest => ingest(config, ws),
        Stage::Graph => graph(config, ws),
        Stage::Score => score(config, ws),
        Stage::FitAcceptance => fit_acceptance(config, ws),
        Stage::Rank => rank(config, ws),
        Stage::Recommend => recommend(config, ws).map(|_| ()),
    }
}

/// Runs `stages` in order on a pool of `config.workers` threads, stopping
/// at the first failure. Snapshots of completed stages stay on disk.
pub fn run_stages(stages: &[Stage], config: &RunConfig) -> Result<(), StageError> {
    let first = stages.first().copied().unwrap_or(Stage::Ingest);
    config.validate().map_err(|source| StageError { stage: first, source })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| StageError {
            stage: first,
            source: Error::Config(e.to_string()),
        })?;
    let ws = Workspace::new(&config.out_dir);
    pool.install(|| {
        for &stage in stages {
            run_one(stage, config, &ws).map_err(|source| StageError { stage, source })?;
        }
        Ok(())
    })
}

/// Every stage from ingest to recommend.
pub fn run_all(config: &RunConfig) -> Result<(), StageError> {
    run_stages(&Stage::ALL, config)
}

/// Writes the synthetic log and its ground truth into `dir`.
pub fn write_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (records, truth) = generate_synthetic(spec)?;
    let ws = Workspace::new(dir);
    ws.write("log.jsonl", |w| write_records_jsonl(&records, w))?;
    ws.write("truth.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &truth).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    Ok((ws.path("log.jsonl"), ws.path("truth.json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let e = |source| StageError { stage: Stage::Graph, source };
        assert_eq!(e(Error::EmptyGraph { threshold: 5 }).exit_code(), 4);
        assert_eq!(e(Error::Config("x".into())).exit_code(), 2);
        assert_eq!(e(Error::malformed("graph snapshot", "x")).exit_code(), 3);
    }

    #[test]
    fn missing_lists_are_empty() {
        let l = RankedList { factor: Factor::L3, target: "u".into(), entries: vec![("a".into(), 1.0)] };
        let got = lists_for("u", &[l.clone()]);
        assert_eq!(got[2], l);
        assert!(got[0].is_empty() && got[4].is_empty());
        let config = RunConfig::default();
        let w = config.weights().unwrap();
        let rec = recommend_target("u", &got, &w, &config, 0).unwrap().unwrap();
        assert_eq!(rec.items, vec!["a"]);
        assert!(recommend_target("v", &lists_for("v", &[]), &w, &config, 0).unwrap().is_none());
    }
}
