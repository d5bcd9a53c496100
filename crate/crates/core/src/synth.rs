//! Seeded synthetic retrieval benchmark: a corpus with planted relevant
//! memories per query (heteroscedastic vector groups for semantic queries,
//! entity chains for multi-hop, dated facts for temporal), plus hit@k and
//! NDCG@k scoring under arbitrary ablation configurations.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapters::{hash_embed, Embedder, Reranker};
use crate::config::{AblationToggles, EngineConfig};
use crate::error::Result;
use crate::extract::{extract_entities, extract_facts};
use crate::fusion::{retrieve, FusionParams};
use crate::store::{StoreHandle, StoreMetadata, StoreOutcome};
use crate::text::timestamp_utc;

/// Benchmark shape. Defaults: 1000 memories, 100 queries, 32 dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSpec {
    pub memories: usize,
    pub queries: usize,
    pub dim: usize,
    pub seed: u64,
    pub top_k: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            memories: 1000,
            queries: 100,
            dim: 32,
            seed: 7,
            top_k: 20,
        }
    }
}

/// One generated query with its planted relevant contents.
#[derive(Debug, Clone)]
struct PlantedQuery {
    text: String,
    relevant: Vec<String>, // content keys; mapped to ids after ingestion
}

/// Generated corpus: memory contents (with metadata and vectors), queries,
/// and the precomputed embedding table.
pub struct SyntheticCorpus {
    contents: Vec<(String, StoreMetadata)>,
    queries: Vec<PlantedQuery>,
    pub table: HashMap<String, Vec<f64>>,
    pub dim: usize,
}

/// Per-configuration metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigMetrics {
    pub config: String,
    pub ndcg_at_10: f64,
    pub hit_at_k: f64,
    pub queries: usize,
}

/// Full benchmark output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec_seed: u64,
    pub memories: usize,
    pub per_config: Vec<ConfigMetrics>,
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
    v
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
            return unit(v);
        }
    }
}

/// Orthonormalizes `v` against `q` and rescales so that
/// cos(result, q) = cos exactly (up to rounding).
fn mix_at_cosine(q: &[f64], v: &[f64], cos: f64) -> Vec<f64> {
    let qv: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
    let perp: Vec<f64> = v.iter().zip(q).map(|(b, a)| b - qv * a).collect();
    let perp = unit(perp);
    let s = (1.0 - cos * cos).sqrt();
    unit(q
        .iter()
        .zip(&perp)
        .map(|(a, b)| cos * a + s * b)
        .collect())
}

impl SyntheticCorpus {
    /// Builds the deterministic corpus for a spec.
    pub fn generate(spec: &BenchSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let dim = spec.dim;
        let base_day = timestamp_utc(2024, 1, 1).unwrap();

        let n_semantic = spec.queries * 60 / 100;
        let n_temporal = spec.queries * 20 / 100;
        let n_multihop = spec.queries - n_semantic - n_temporal;

        let mut contents: Vec<(String, StoreMetadata)> = Vec::new();
        let mut queries: Vec<PlantedQuery> = Vec::new();
        let mut table: HashMap<String, Vec<f64>> = HashMap::new();

        let meta_at = |day_offset: i64| StoreMetadata {
            timestamp: Some(base_day + day_offset * 86_400),
            ..StoreMetadata::default()
        };

        // Semantic groups: one target plus distractors that cosine prefers;
        // the target aligns its strong dimensions with the query, the
        // distractors concentrate theirs away from it.
        let group_distractors = 5usize;
        for i in 0..n_semantic {
            let q = {
                // strong support on 6 random dimensions
                let mut v = vec![0.0; dim];
                let mut dims: Vec<usize> = (0..dim).collect();
                dims.shuffle(&mut rng);
                for &k in dims.iter().take(6) {
                    v[k] = rng.gen_range(0.5..1.0);
                }
                unit(v)
            };
            let query_text = format!("probe sweep q{i}a q{i}b maps");
            table.insert(query_text.clone(), q.clone());

            // target: thin spread of the off-query mass
            let target_cos = 0.80;
            let spread = {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..1.0)).collect();
                for (k, x) in v.iter_mut().enumerate() {
                    if q[k] != 0.0 {
                        *x = 0.0;
                    }
                }
                unit(v)
            };
            let target_vec = mix_at_cosine(&q, &spread, target_cos);
            let target_text = format!("entry s{i}t alpha{i} beta{i} gamma{i} delta{i}");
            table.insert(target_text.clone(), target_vec);
            contents.push((target_text.clone(), meta_at(i as i64 % 200)));

            for j in 0..group_distractors {
                // concentrated off-query mass on two dimensions
                let mut v = vec![0.0; dim];
                let zero_dims: Vec<usize> =
                    (0..dim).filter(|&k| q[k] == 0.0).collect();
                let picks: Vec<usize> = zero_dims
                    .choose_multiple(&mut rng, 2)
                    .copied()
                    .collect();
                for &k in &picks {
                    v[k] = 1.0;
                }
                let distractor_vec = mix_at_cosine(&q, &unit(v), target_cos + 0.02);
                let text = format!("entry s{i}d{j} epsilon{i}x{j} zeta{i}x{j} eta{i}x{j} theta{i}x{j}");
                table.insert(text.clone(), distractor_vec);
                contents.push((text.clone(), meta_at(i as i64 % 200)));
            }

            queries.push(PlantedQuery {
                text: query_text,
                relevant: vec![target_text],
            });
        }

        // Temporal groups: the planted memory refers to the queried date,
        // distractors sit months away on the same topic.
        for i in 0..n_temporal {
            let month = 1 + (i % 12) as u32;
            let day = 1 + (i % 27) as u32;
            let date = format!("2024-{month:02}-{day:02}");
            let topic = format!("harbor{i}");
            let target_text =
                format!("on {date} the {topic} shipment arrived at dock{i} gate");
            table.insert(target_text.clone(), random_unit(&mut rng, dim));
            contents.push((target_text.clone(), meta_at(300 + i as i64)));
            for j in 0..3 {
                let other_month = 1 + ((i + j + 3) % 12) as u32;
                let text = format!(
                    "on 2023-{other_month:02}-{day:02} the {topic} convoy paused near pier{j} lot"
                );
                table.insert(text.clone(), random_unit(&mut rng, dim));
                contents.push((text.clone(), meta_at(300 + i as i64)));
            }
            let query_text = format!("what happened on {date} around the {topic} area?");
            table.insert(query_text.clone(), random_unit(&mut rng, dim));
            queries.push(PlantedQuery {
                text: query_text,
                relevant: vec![target_text],
            });
        }

        // Multi-hop chains: A—B and B—C memories; both are relevant to
        // "what connects A and C".
        for i in 0..n_multihop {
            let a = format!("Hub{i}a");
            let b = format!("Relay{i}b");
            let c = format!("Port{i}c");
            let m1 = format!("{a} partnered with {b} over freight lanes");
            let m2 = format!("{b} collaborated with {c} over customs clearing");
            table.insert(m1.clone(), random_unit(&mut rng, dim));
            table.insert(m2.clone(), random_unit(&mut rng, dim));
            contents.push((m1.clone(), meta_at(500 + i as i64)));
            contents.push((m2.clone(), meta_at(500 + i as i64)));
            let query_text = format!("what connects {a} and {c} together?");
            table.insert(query_text.clone(), random_unit(&mut rng, dim));
            queries.push(PlantedQuery {
                text: query_text,
                relevant: vec![m1, m2],
            });
        }

        // filler up to the requested corpus size, newest last so recency
        // scoring has something to chew on
        let mut filler_ix = 0usize;
        while contents.len() < spec.memories {
            let text = format!(
                "misc f{filler_ix}a f{filler_ix}b f{filler_ix}c f{filler_ix}d ledger"
            );
            table.insert(text.clone(), random_unit(&mut rng, dim));
            contents.push((text.clone(), meta_at(700 + filler_ix as i64 % 60)));
            filler_ix += 1;
        }
        contents.truncate(spec.memories);

        // fact surfaces get embeddings too (the consistency layer embeds
        // extracted facts through the same adapter)
        let empty = BTreeSet::new();
        let mut fact_surfaces = Vec::new();
        for (content, _) in &contents {
            let ents = extract_entities(content, &empty);
            for f in extract_facts(content, &ents) {
                fact_surfaces.push(f.surface());
            }
        }
        for surface in fact_surfaces {
            table
                .entry(surface.clone())
                .or_insert_with(|| hash_embed(&surface, dim).expect("nonempty fact surface"));
        }

        Self {
            contents,
            queries,
            table,
            dim,
        }
    }
}

/// Binary-relevance NDCG@k of a ranking against the planted set.
pub fn ndcg_at_k(ranking: &[i64], relevant: &BTreeSet<i64>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| relevant.contains(id))
        .map(|(i, _)| 1.0 / ((i as f64 + 2.0).log2()))
        .sum();
    let ideal: f64 = (0..relevant.len().min(k))
        .map(|i| 1.0 / ((i as f64 + 2.0).log2()))
        .sum();
    dcg / ideal
}

/// True when any planted memory appears in the top k.
pub fn hit_at_k(ranking: &[i64], relevant: &BTreeSet<i64>, k: usize) -> bool {
    ranking.iter().take(k).any(|id| relevant.contains(id))
}

/// Ingests the corpus into a fresh store at `db_path`, matures every memory
/// past the scoring ramp, then measures each toggle configuration.
pub fn run_bench(
    db_path: &Path,
    spec: &BenchSpec,
    configs: &[(String, AblationToggles)],
) -> Result<BenchReport> {
    let corpus = SyntheticCorpus::generate(spec);
    let engine = EngineConfig::for_dim(corpus.dim);
    let embedder = Embedder::precomputed(corpus.dim, corpus.table.clone());
    let mut store = StoreHandle::open(db_path, engine, embedder)?;
    let profile = "bench";

    let mut id_of: HashMap<String, i64> = HashMap::new();
    for (content, meta) in &corpus.contents {
        match store.store(profile, content, meta)? {
            StoreOutcome::Stored(record) => {
                id_of.insert(content.clone(), record.id);
            }
            StoreOutcome::Rejected { gate, detail } => {
                return Err(crate::error::Error::InvalidArgument(format!(
                    "benchmark memory rejected by {gate}: {detail} ({content:?})"
                )));
            }
        }
    }

    // mature every memory past the ramp so variance-weighted scoring is live
    let ramp = store.config.similarity.ramp_threshold;
    for id in id_of.values() {
        for _ in 0..ramp {
            store.record_access(profile, *id)?;
        }
    }

    let reranker = Reranker::LexicalOverlap;
    let fusion = FusionParams::default();
    let mut per_config = Vec::new();
    for (name, toggles) in configs {
        let mut ndcg_sum = 0.0;
        let mut hits = 0usize;
        for q in &corpus.queries {
            let result = retrieve(
                &store,
                &reranker,
                &fusion,
                profile,
                &q.text,
                spec.top_k,
                *toggles,
            )?;
            let ranking: Vec<i64> = result.results.iter().map(|r| r.memory_id).collect();
            let relevant: BTreeSet<i64> = q
                .relevant
                .iter()
                .filter_map(|c| id_of.get(c).copied())
                .collect();
            ndcg_sum += ndcg_at_k(&ranking, &relevant, 10);
            if hit_at_k(&ranking, &relevant, spec.top_k) {
                hits += 1;
            }
        }
        per_config.push(ConfigMetrics {
            config: name.clone(),
            ndcg_at_10: ndcg_sum / corpus.queries.len() as f64,
            hit_at_k: hits as f64 / corpus.queries.len() as f64,
            queries: corpus.queries.len(),
        });
    }

    Ok(BenchReport {
        spec_seed: spec.seed,
        memories: corpus.contents.len(),
        per_config,
    })
}
