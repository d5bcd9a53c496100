//! Command-line front door for the memory engine: profile-scoped store /
//! retrieve / maintain / check / stats / analyze / bench with ablation
//! toggles and structured (JSON lines) output for scripting.
//!
//! Exit codes: 0 success, 1 domain rejection, 2 usage error, 3 I/O error.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use geomem_core::adapters::{Embedder, RemoteClient, Reranker};
use geomem_core::analysis;
use geomem_core::config::{AblationToggles, EngineConfig};
use geomem_core::error::Error as CoreError;
use geomem_core::fusion::{retrieve, FusionParams};
use geomem_core::store::{EraseSelector, StoreHandle, StoreMetadata, StoreOutcome};
use geomem_core::synth::{run_bench, BenchSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Human,
    Structured,
}

#[derive(Parser)]
#[command(name = "geomem", version, about = "Local-first agent memory engine")]
struct Cli {
    /// Store file path (created on first write).
    #[arg(long, global = true)]
    db: Option<PathBuf>,

    /// Profile identifier scoping every operation.
    #[arg(long, global = true, default_value = "default")]
    profile: String,

    /// Output format: human-readable lines or one JSON record per line.
    #[arg(long, global = true, value_enum, default_value = "human")]
    format: OutputFormat,

    /// Embedder: `hash`, `precomputed:<json-path>`, or `remote:<url>`.
    #[arg(long, global = true, default_value = "hash")]
    embedder: String,

    /// Embedding dimension for the hash and remote embedders.
    #[arg(long, global = true, default_value_t = 256)]
    dim: usize,

    /// Reranker: `lexical`, `remote:<url>`, or `off`.
    #[arg(long, global = true, default_value = "lexical")]
    reranker: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest one memory (or one per line of --file).
    Store {
        /// Literal content to store.
        content: Option<String>,
        /// File with one memory per line.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        session: Option<String>,
        #[arg(long)]
        speaker: Option<String>,
        #[arg(long)]
        source_doc: Option<String>,
        /// Observation time (unix seconds); defaults to the wall clock.
        #[arg(long)]
        timestamp: Option<i64>,
    },
    /// Rank stored memories against a query.
    Retrieve {
        query: String,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        /// Comma-separated components to disable (fisher, sheaf, langevin,
        /// bm25, entity, temporal, cross_encoder, all_math).
        #[arg(long, value_delimiter = ',')]
        disable: Vec<String>,
        /// Include per-stage and per-channel traces.
        #[arg(long)]
        trace: bool,
    },
    /// Run the lifecycle dynamics over every memory of the profile.
    Maintain {
        #[arg(long, default_value_t = 100)]
        steps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full-store consistency sweep.
    Check,
    /// Row counts and lifecycle distribution.
    Stats,
    /// Hard-delete memories by id, profile, or entity.
    Erase {
        #[arg(long)]
        memory: Option<i64>,
        #[arg(long)]
        erase_profile: Option<String>,
        #[arg(long)]
        entity: Option<String>,
    },
    /// Numerical analysis helpers (CSV output).
    Analyze {
        #[command(subcommand)]
        op: AnalyzeOp,
    },
    /// Seeded synthetic retrieval benchmark across ablation configs.
    Bench {
        #[arg(long, default_value_t = 1000)]
        memories: usize,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 32)]
        bench_dim: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        /// Comma-separated configuration names: `full` or toggle names.
        #[arg(long, value_delimiter = ',', default_value = "full,all_math_off")]
        configs: Vec<String>,
    },
    /// Dump the store as line-delimited JSON records.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load records produced by `export` into this store.
    Import {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum AnalyzeOp {
    /// Spherical-cap fraction within cosine tolerance ε.
    CapFraction {
        #[arg(long, value_delimiter = ',')]
        dim: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// Expected crowd size N · cap_fraction(d, ε).
    NeighborCount {
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Top-K signal-to-noise ratio under cosine crowding.
    Snr {
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        k_rel: u64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Expected pairwise contradictions N(N−1)/2 · p.
    Contradictions {
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long)]
        p: f64,
    },
    /// Progressive-disclosure depth log N / (2 log r).
    Depth {
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
    /// Associative energy and one update step from a JSON spec
    /// {"patterns": [[..]..], "state": [..], "beta": 2.0}.
    Hopfield {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Busy | CoreError::Storage(_) | CoreError::Io(_) | CoreError::Remote(_) => 3,
        CoreError::UnknownMemory(_) => 1,
        _ => 2,
    }
}

fn parse_embedder(spec: &str, dim: usize) -> Result<Embedder, CoreError> {
    if spec == "hash" {
        return Ok(Embedder::hash_feature(dim));
    }
    if let Some(path) = spec.strip_prefix("precomputed:") {
        let text = std::fs::read_to_string(path)?;
        let table: HashMap<String, Vec<f64>> = serde_json::from_str(&text)
            .map_err(|e| CoreError::InvalidArgument(format!("bad embedding table: {e}")))?;
        let dim = table
            .values()
            .next()
            .map(Vec::len)
            .ok_or_else(|| CoreError::InvalidArgument("empty embedding table".into()))?;
        return Ok(Embedder::precomputed(dim, table));
    }
    if let Some(url) = spec.strip_prefix("remote:") {
        let client = RemoteClient::new(url, dim)
            .with_bearer_token(std::env::var("GEOMEM_API_TOKEN").ok());
        return Ok(Embedder::Remote(client));
    }
    Err(CoreError::InvalidArgument(format!(
        "unknown embedder spec {spec:?}"
    )))
}

fn parse_reranker(spec: &str, dim: usize) -> Result<Reranker, CoreError> {
    match spec {
        "lexical" => Ok(Reranker::LexicalOverlap),
        "off" => Ok(Reranker::Disabled),
        other => {
            if let Some(url) = other.strip_prefix("remote:") {
                let client = RemoteClient::new(url, dim)
                    .with_bearer_token(std::env::var("GEOMEM_API_TOKEN").ok());
                Ok(Reranker::Remote(client))
            } else {
                Err(CoreError::InvalidArgument(format!(
                    "unknown reranker spec {other:?}"
                )))
            }
        }
    }
}

fn parse_toggles(names: &[String]) -> Result<AblationToggles, CoreError> {
    let mut toggles = AblationToggles::default();
    for name in names {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        if !toggles.set(name) {
            return Err(CoreError::InvalidArgument(format!(
                "unknown component {name:?}"
            )));
        }
    }
    Ok(toggles.normalize())
}

fn open_store(cli: &Cli) -> Result<StoreHandle, CoreError> {
    let db = cli
        .db
        .clone()
        .ok_or_else(|| CoreError::InvalidArgument("--db is required".into()))?;
    let embedder = parse_embedder(&cli.embedder, cli.dim)?;
    let config = EngineConfig::for_dim(embedder.dim());
    StoreHandle::open(db, config, embedder)
}

/// Read-only commands refuse to conjure an empty store out of a typo'd path.
fn open_existing_store(cli: &Cli) -> Result<StoreHandle, CoreError> {
    if let Some(db) = &cli.db {
        if !db.exists() {
            return Err(CoreError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no store at {}", db.display()),
            )));
        }
    }
    open_store(cli)
}

fn emit(format: OutputFormat, value: &serde_json::Value, human: &str) {
    match format {
        OutputFormat::Human => println!("{human}"),
        OutputFormat::Structured => println!("{value}"),
    }
}

fn run(cli: Cli) -> Result<ExitCode, CoreError> {
    match &cli.command {
        Command::Store {
            content,
            file,
            session,
            speaker,
            source_doc,
            timestamp,
        } => {
            let mut store = open_store(&cli)?;
            let metadata = StoreMetadata {
                session_id: session.clone(),
                speaker: speaker.clone(),
                source_document: source_doc.clone(),
                timestamp: *timestamp,
                ..StoreMetadata::default()
            };
            let mut contents: Vec<String> = Vec::new();
            if let Some(c) = content {
                contents.push(c.clone());
            }
            if let Some(path) = file {
                for line in std::fs::read_to_string(path)?.lines() {
                    if !line.trim().is_empty() {
                        contents.push(line.to_string());
                    }
                }
            }
            if contents.is_empty() {
                return Err(CoreError::InvalidArgument(
                    "nothing to store: pass content or --file".into(),
                ));
            }
            let mut any_rejected = false;
            for c in &contents {
                match store.store(&cli.profile, c, &metadata)? {
                    StoreOutcome::Stored(record) => emit(
                        cli.format,
                        &serde_json::json!({
                            "outcome": "stored",
                            "id": record.id,
                            "entities": record.entities,
                            "facts": record.facts.len(),
                            "scene_id": record.scene_id,
                        }),
                        &format!("stored id={} entities={:?}", record.id, record.entities),
                    ),
                    StoreOutcome::Rejected { gate, detail } => {
                        any_rejected = true;
                        emit(
                            cli.format,
                            &serde_json::json!({
                                "outcome": "rejected",
                                "gate": gate,
                                "detail": detail,
                            }),
                            &format!("rejected gate={gate} ({detail})"),
                        );
                    }
                }
            }
            Ok(if any_rejected {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }

        Command::Retrieve {
            query,
            top_k,
            disable,
            trace,
        } => {
            let store = open_existing_store(&cli)?;
            let reranker = parse_reranker(&cli.reranker, cli.dim)?;
            let toggles = parse_toggles(disable)?;
            let result = retrieve(
                &store,
                &reranker,
                &FusionParams::default(),
                &cli.profile,
                query,
                *top_k,
                toggles,
            )?;
            for r in &result.results {
                let snippet: String = r.content.chars().take(80).collect();
                emit(
                    cli.format,
                    &serde_json::json!({
                        "rank": r.rank,
                        "score": r.score,
                        "id": r.memory_id,
                        "origin": format!("{:?}", r.origin),
                        "snippet": snippet,
                    }),
                    &format!(
                        "{:>3}  {:>10.6}  id={:<5}  {}",
                        r.rank, r.score, r.memory_id, snippet
                    ),
                );
            }
            if *trace {
                match cli.format {
                    OutputFormat::Human => {
                        println!("-- trace: query_type={} alpha={} entities={:?} anchor={:?} coverage={:.2}",
                            result.trace.query_type.as_str(),
                            result.trace.blend_alpha,
                            result.trace.query_entities,
                            result.trace.temporal_anchor,
                            result.trace.entity_coverage);
                        for s in &result.trace.stages {
                            println!(
                                "-- stage {:<16} candidates={:<5} {:.2}ms",
                                s.stage, s.candidates, s.elapsed_ms
                            );
                        }
                        for c in &result.trace.channels {
                            println!("-- channel {:<9} results={}", c.channel, c.results.len());
                        }
                    }
                    OutputFormat::Structured => {
                        println!(
                            "{}",
                            serde_json::json!({ "trace": serde_json::to_value(&result.trace)
                                .map_err(|e| CoreError::Storage(e.to_string()))? })
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Maintain { steps, seed } => {
            let mut store = open_existing_store(&cli)?;
            let before = store.lifecycle_counts(&cli.profile)?;
            let report = store.maintain(&cli.profile, *steps, *seed)?;
            let after = store.lifecycle_counts(&cli.profile)?;
            emit(
                cli.format,
                &serde_json::json!({
                    "steps": report.steps,
                    "before": before,
                    "after": after,
                    "transitions": report.transitions.len(),
                }),
                &format!(
                    "maintained: steps={} transitions={} before={:?} after={:?}",
                    report.steps,
                    report.transitions.len(),
                    before,
                    after
                ),
            );
            if cli.format == OutputFormat::Structured {
                for t in &report.transitions {
                    println!(
                        "{}",
                        serde_json::json!({
                            "memory_id": t.memory_id,
                            "from": t.from.as_str(),
                            "to": t.to.as_str(),
                        })
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Check => {
            let mut store = open_existing_store(&cli)?;
            let (report, created) = store.consistency_sweep(&cli.profile)?;
            let edges = store.supersedes_edges(&cli.profile)?;
            emit(
                cli.format,
                &serde_json::json!({
                    "kappa": report.kappa,
                    "h1_dim": report.h1_dim,
                    "offending_edges": report
                        .offending_edges
                        .iter()
                        .take(20)
                        .map(|((a, b), n)| serde_json::json!({"a": a, "b": b, "norm": n}))
                        .collect::<Vec<_>>(),
                    "supersedes_created": created,
                    "supersedes_total": edges.len(),
                }),
                &format!(
                    "check: kappa={:.6} h1={} offending={} supersedes_created={} supersedes_total={}",
                    report.kappa,
                    report.h1_dim,
                    report.offending_edges.len(),
                    created,
                    edges.len()
                ),
            );
            if cli.format == OutputFormat::Human {
                for ((a, b), norm) in report.offending_edges.iter().take(10) {
                    println!("  offending {a} ~ {b}: {norm:.6}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Stats => {
            let store = open_existing_store(&cli)?;
            let stats = store.stats(&cli.profile)?;
            emit(
                cli.format,
                &serde_json::to_value(&stats).map_err(|e| CoreError::Storage(e.to_string()))?,
                &format!(
                    "memories={} facts={} entities={} edges={} scenes={} supersedes={} lifecycle={:?}",
                    stats.memories,
                    stats.facts,
                    stats.entities,
                    stats.entity_edges,
                    stats.scenes,
                    stats.supersedes_edges,
                    stats.lifecycle
                ),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Erase {
            memory,
            erase_profile,
            entity,
        } => {
            let mut store = open_existing_store(&cli)?;
            let selector = match (memory, erase_profile, entity) {
                (Some(id), None, None) => EraseSelector::Memory(*id),
                (None, Some(p), None) => EraseSelector::Profile(p.clone()),
                (None, None, Some(e)) => EraseSelector::Entity(e.clone()),
                _ => {
                    return Err(CoreError::InvalidArgument(
                        "pass exactly one of --memory, --erase-profile, --entity".into(),
                    ))
                }
            };
            let n = store.erase(&cli.profile, &selector)?;
            emit(
                cli.format,
                &serde_json::json!({ "erased": n }),
                &format!("erased {n} memories"),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Analyze { op } => {
            run_analyze(op)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Bench {
            memories,
            queries,
            bench_dim,
            seed,
            top_k,
            configs,
        } => {
            let spec = BenchSpec {
                memories: *memories,
                queries: *queries,
                dim: *bench_dim,
                seed: *seed,
                top_k: *top_k,
            };
            let mut toggle_sets = Vec::new();
            for name in configs {
                let toggles = if name == "full" {
                    AblationToggles::default()
                } else {
                    let mut t = AblationToggles::default();
                    if !t.set(name) {
                        return Err(CoreError::InvalidArgument(format!(
                            "unknown bench config {name:?}"
                        )));
                    }
                    t.normalize()
                };
                toggle_sets.push((name.clone(), toggles));
            }
            let db = std::env::temp_dir().join(format!(
                "geomem-bench-{}-{}.db",
                std::process::id(),
                seed
            ));
            let report = run_bench(&db, &spec, &toggle_sets)?;
            for suffix in ["", "-wal", "-shm"] {
                let _ = std::fs::remove_file(format!("{}{}", db.display(), suffix));
            }
            match cli.format {
                OutputFormat::Human => {
                    println!("config,ndcg_at_10,hit_at_{},queries", spec.top_k);
                    for m in &report.per_config {
                        println!(
                            "{},{:.6},{:.4},{}",
                            m.config, m.ndcg_at_10, m.hit_at_k, m.queries
                        );
                    }
                }
                OutputFormat::Structured => {
                    for m in &report.per_config {
                        println!(
                            "{}",
                            serde_json::to_value(m)
                                .map_err(|e| CoreError::Storage(e.to_string()))?
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Export { out } => {
            let store = open_existing_store(&cli)?;
            match out {
                Some(path) => {
                    let mut f = std::fs::File::create(path)?;
                    store.export_jsonl(&mut f)?;
                    f.flush()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    store.export_jsonl(&mut lock)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Import { input } => {
            let mut store = open_store(&cli)?;
            let f = std::fs::File::open(input)?;
            let mut reader = std::io::BufReader::new(f);
            let rows = store.import_jsonl(&mut reader)?;
            emit(
                cli.format,
                &serde_json::json!({ "imported_rows": rows }),
                &format!("imported {rows} rows"),
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_analyze(op: &AnalyzeOp) -> Result<(), CoreError> {
    match op {
        AnalyzeOp::CapFraction { dim, eps } => {
            println!("d,eps,cap_fraction");
            for &d in dim {
                for &e in eps {
                    println!("{d},{e},{:.12e}", analysis::cap_fraction(d, e)?);
                }
            }
        }
        AnalyzeOp::NeighborCount { n, dim, eps } => {
            println!("n,d,eps,expected_neighbors");
            for &n in n {
                println!(
                    "{n},{dim},{eps},{:.12e}",
                    analysis::expected_neighbor_count(n, *dim, *eps)?
                );
            }
        }
        AnalyzeOp::Snr { n, k_rel, dim, eps } => {
            println!("n,k_rel,d,eps,snr");
            for &n in n {
                println!(
                    "{n},{k_rel},{dim},{eps},{:.12e}",
                    analysis::cosine_snr(n, *k_rel, *dim, *eps)?
                );
            }
        }
        AnalyzeOp::Contradictions { n, p } => {
            println!("n,p_c,expected_contradictions");
            for &n in n {
                println!("{n},{p},{:.6}", analysis::expected_contradictions(n, *p)?);
            }
        }
        AnalyzeOp::Depth { n, r } => {
            println!("n,r,depth");
            for &n in n {
                println!("{n},{r},{:.6}", analysis::optimal_depth(n, *r)?);
            }
        }
        AnalyzeOp::Hopfield { input } => {
            let text = std::fs::read_to_string(input)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CoreError::InvalidArgument(format!("bad hopfield spec: {e}")))?;
            let bad = |what: &str| CoreError::InvalidArgument(format!("hopfield spec: {what}"));
            let vector = |v: &serde_json::Value, what: &str| -> Result<Vec<f64>, CoreError> {
                v.as_array()
                    .ok_or_else(|| bad(what))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| bad(what)))
                    .collect()
            };
            let patterns: Vec<Vec<f64>> = value
                .get("patterns")
                .and_then(|p| p.as_array())
                .ok_or_else(|| bad("missing patterns array"))?
                .iter()
                .map(|row| vector(row, "pattern row"))
                .collect::<Result<_, _>>()?;
            let state = vector(
                value.get("state").ok_or_else(|| bad("missing state"))?,
                "state",
            )?;
            let beta = value
                .get("beta")
                .and_then(|b| b.as_f64())
                .ok_or_else(|| bad("missing beta"))?;
            let energy = analysis::hopfield_energy(&patterns, &state, beta)?;
            let update = analysis::hopfield_update(&patterns, &state, beta)?;
            println!("quantity,values");
            println!("energy,{energy:.12}");
            println!(
                "update,{}",
                update
                    .iter()
                    .map(|x| format!("{x:.12}"))
                    .collect::<Vec<_>>()
                    .join(",")
            );
        }
    }
    Ok(())
}
