//! Query classification, weighted reciprocal rank fusion, scene expansion,
//! bridge discovery, reranker blending, and the end-to-end retrieve
//! orchestration.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adapters::{logistic, Reranker};
use crate::channels::{temporal_channel, RankedCandidate};
use crate::config::AblationToggles;
use crate::error::Result;
use crate::extract::extract_entities;
use crate::infogeo::{cosine_score, effective_score, estimate_variance};
use crate::langevin::LifecycleState;
use crate::store::{Snapshot, StoreHandle};
use crate::text::{extract_date, has_temporal_expression, tokenize};

/// Query taxonomy driving channel multipliers and the blend coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryType {
    SingleHop,
    MultiHop,
    Temporal,
    OpenDomain,
}

impl QueryType {
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryType::SingleHop => "single_hop",
            QueryType::MultiHop => "multi_hop",
            QueryType::Temporal => "temporal",
            QueryType::OpenDomain => "open_domain",
        }
    }
}

/// The four core channels, in fusion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Semantic,
    Bm25,
    Entity,
    Temporal,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::Semantic,
        Channel::Bm25,
        Channel::Entity,
        Channel::Temporal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Semantic => "semantic",
            Channel::Bm25 => "bm25",
            Channel::Entity => "entity",
            Channel::Temporal => "temporal",
        }
    }
}

/// Per-channel positive reals, used for both base weights and query-type
/// multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub semantic: f64,
    pub bm25: f64,
    pub entity: f64,
    pub temporal: f64,
}

impl ChannelWeights {
    pub const UNIT: ChannelWeights = ChannelWeights {
        semantic: 1.0,
        bm25: 1.0,
        entity: 1.0,
        temporal: 1.0,
    };

    pub fn get(&self, c: Channel) -> f64 {
        match c {
            Channel::Semantic => self.semantic,
            Channel::Bm25 => self.bm25,
            Channel::Entity => self.entity,
            Channel::Temporal => self.temporal,
        }
    }
}

impl Default for ChannelWeights {
    fn default() -> Self {
        // grid-searched base weights: semantic 1.2, bm25 1.0, entity 1.3,
        // temporal 1.0
        ChannelWeights {
            semantic: 1.2,
            bm25: 1.0,
            entity: 1.3,
            temporal: 1.0,
        }
    }
}

/// Retrieval-time weight applied per retention band.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LifecycleWeights {
    pub active: f64,
    pub warm: f64,
    pub cold: f64,
    pub archived: f64,
}

impl LifecycleWeights {
    pub fn get(&self, state: LifecycleState) -> f64 {
        match state {
            LifecycleState::Active => self.active,
            LifecycleState::Warm => self.warm,
            LifecycleState::Cold => self.cold,
            LifecycleState::Archived => self.archived,
        }
    }
}

impl Default for LifecycleWeights {
    fn default() -> Self {
        Self {
            active: 1.0,
            warm: 0.9,
            cold: 0.7,
            archived: 0.4,
        }
    }
}

/// Fusion-stage knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionParams {
    pub weights: ChannelWeights,
    pub rrf_k: u32,
    pub scene_factor: f64,
    pub supersedes_demotion: f64,
    pub lifecycle_weights: LifecycleWeights,
    pub channel_cap: usize,
    pub bridge_decay: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            weights: ChannelWeights::default(),
            rrf_k: 60,
            scene_factor: 0.5,
            supersedes_demotion: 0.25,
            lifecycle_weights: LifecycleWeights::default(),
            channel_cap: 50,
            bridge_decay: 0.7,
        }
    }
}

/// Classification output: type, multipliers, anchor, entities, blend α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryPlan {
    pub query_type: QueryType,
    pub multipliers: ChannelWeights,
    pub temporal_anchor: Option<i64>,
    pub query_entities: BTreeSet<String>,
    pub blend_alpha: f64,
}

const COMPARATIVE_CONNECTIVES: [&str; 7] = [
    "compare",
    "versus",
    "vs",
    "difference between",
    "connects",
    "connection between",
    "relationship between",
];

const INTERROGATIVES: [&str; 10] = [
    "what", "who", "where", "why", "how", "which", "when", "is", "are", "does",
];

/// Rule cascade: explicit date/time expression → Temporal; two known
/// entities or a comparative connective → MultiHop; an interrogative with no
/// known entities → OpenDomain; otherwise SingleHop.
pub fn classify_query(query: &str, known_entities: &BTreeSet<String>) -> QueryPlan {
    let entities: BTreeSet<String> = extract_entities(query, known_entities)
        .into_iter()
        .filter(|e| known_entities.contains(e))
        .collect();
    let lower = query.to_lowercase();
    let first_word = tokenize(query).into_iter().next().unwrap_or_default();

    let query_type = if has_temporal_expression(query) {
        QueryType::Temporal
    } else if entities.len() >= 2 || COMPARATIVE_CONNECTIVES.iter().any(|c| lower.contains(c)) {
        QueryType::MultiHop
    } else if entities.is_empty() && INTERROGATIVES.contains(&first_word.as_str()) {
        QueryType::OpenDomain
    } else {
        QueryType::SingleHop
    };

    let multipliers = match query_type {
        QueryType::Temporal => ChannelWeights {
            temporal: 1.5,
            entity: 0.8,
            ..ChannelWeights::UNIT
        },
        QueryType::MultiHop => ChannelWeights {
            entity: 1.5,
            ..ChannelWeights::UNIT
        },
        _ => ChannelWeights::UNIT,
    };

    let blend_alpha = match query_type {
        QueryType::MultiHop | QueryType::Temporal => 0.5,
        QueryType::SingleHop | QueryType::OpenDomain => 0.75,
    };

    QueryPlan {
        query_type,
        multipliers,
        temporal_anchor: extract_date(query),
        query_entities: entities,
        blend_alpha,
    }
}

/// Where a fused candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateOrigin {
    Channel,
    SceneExpansion,
    Bridge,
    ProfileLookup,
}

/// One candidate after fusion and post-processing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusedCandidate {
    pub memory_id: i64,
    pub wrrf: f64,
    pub ranks: [Option<u32>; 4],
    pub ce_score: Option<f64>,
    pub final_score: f64,
    pub origin: CandidateOrigin,
}

/// WRRF(m) = Σ_i (w_i · mult_i) / (k + r_i(m)); absent channels contribute
/// zero. Output sorted by score descending, ties by ascending memory id.
pub fn wrrf_fuse(
    channel_results: &[(Channel, Vec<RankedCandidate>)],
    weights: &ChannelWeights,
    multipliers: &ChannelWeights,
    k: u32,
) -> Vec<FusedCandidate> {
    let mut acc: HashMap<i64, (f64, [Option<u32>; 4])> = HashMap::new();
    for (channel, results) in channel_results {
        let channel_ix = Channel::ALL.iter().position(|c| c == channel).unwrap();
        let w = weights.get(*channel) * multipliers.get(*channel);
        for r in results {
            let entry = acc.entry(r.memory_id).or_insert((0.0, [None; 4]));
            entry.0 += w / (k as f64 + r.rank as f64);
            entry.1[channel_ix] = Some(r.rank);
        }
    }
    let mut fused: Vec<FusedCandidate> = acc
        .into_iter()
        .map(|(memory_id, (wrrf, ranks))| FusedCandidate {
            memory_id,
            wrrf,
            ranks,
            ce_score: None,
            final_score: wrrf,
            origin: CandidateOrigin::Channel,
        })
        .collect();
    fused.sort_by(|a, b| {
        b.wrrf
            .partial_cmp(&a.wrrf)
            .unwrap()
            .then(a.memory_id.cmp(&b.memory_id))
    });
    fused
}

/// Appends every memory sharing a scene with a fused candidate, at
/// `scene_factor` times its best scene-mate's score; existing entries keep
/// their best score.
pub fn scene_expand(
    fused: &mut Vec<FusedCandidate>,
    scene_of: &HashMap<i64, i64>,
    scene_members: &HashMap<i64, Vec<i64>>,
    scene_factor: f64,
) {
    let mut present: HashMap<i64, usize> = fused
        .iter()
        .enumerate()
        .map(|(i, c)| (c.memory_id, i))
        .collect();
    let sponsors: Vec<(i64, f64)> = fused
        .iter()
        .filter_map(|c| scene_of.get(&c.memory_id).map(|s| (*s, c.wrrf)))
        .collect();
    let mut best_sponsor: HashMap<i64, f64> = HashMap::new();
    for (scene, wrrf) in sponsors {
        let e = best_sponsor.entry(scene).or_insert(0.0);
        if wrrf > *e {
            *e = wrrf;
        }
    }
    let mut scenes: Vec<(&i64, &f64)> = best_sponsor.iter().collect();
    scenes.sort_by(|a, b| a.0.cmp(b.0));
    for (scene, sponsor_wrrf) in scenes {
        let Some(members) = scene_members.get(scene) else {
            continue;
        };
        for member in members {
            let candidate_score = scene_factor * sponsor_wrrf;
            match present.get(member) {
                Some(&ix) => {
                    if candidate_score > fused[ix].wrrf {
                        fused[ix].wrrf = candidate_score;
                        fused[ix].final_score = candidate_score;
                    }
                }
                None => {
                    present.insert(*member, fused.len());
                    fused.push(FusedCandidate {
                        memory_id: *member,
                        wrrf: candidate_score,
                        ranks: [None; 4],
                        ce_score: None,
                        final_score: candidate_score,
                        origin: CandidateOrigin::SceneExpansion,
                    });
                }
            }
        }
    }
}

/// Approximate Steiner tree over the entity graph connecting the query
/// entities (metric-closure MST expanded to graph paths); returns interior
/// entities with their hop distance to the nearest terminal.
pub fn steiner_interior(
    graph: &crate::channels::EntityGraph,
    terminals: &BTreeSet<String>,
) -> Vec<(String, u32)> {
    let present: Vec<String> = terminals
        .iter()
        .filter(|t| graph.contains(t))
        .cloned()
        .collect();
    if present.len() < 2 {
        return Vec::new();
    }
    let bound = graph.node_count() as u32 + 1;
    let dist_maps: HashMap<String, BTreeMap<String, u32>> = present
        .iter()
        .map(|t| (t.clone(), graph.hop_distances(t, bound)))
        .collect();

    // metric closure edges among reachable terminal pairs
    let mut closure: Vec<(u32, String, String)> = Vec::new();
    for i in 0..present.len() {
        for j in (i + 1)..present.len() {
            if let Some(d) = dist_maps[&present[i]].get(&present[j]) {
                closure.push((*d, present[i].clone(), present[j].clone()));
            }
        }
    }
    closure.sort();

    // Kruskal over the closure
    let mut component: HashMap<String, usize> = present
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    let mut tree_nodes: BTreeSet<String> = present.iter().cloned().collect();
    for (_, a, b) in closure {
        let (ca, cb) = (component[&a], component[&b]);
        if ca == cb {
            continue;
        }
        for c in component.values_mut() {
            if *c == cb {
                *c = ca;
            }
        }
        if let Some(path) = graph.shortest_path(&a, &b) {
            tree_nodes.extend(path);
        }
    }

    let terminal_set: BTreeSet<&String> = present.iter().collect();
    tree_nodes
        .into_iter()
        .filter(|n| !terminal_set.contains(n))
        .map(|n| {
            let d = dist_maps
                .values()
                .filter_map(|m| m.get(&n))
                .min()
                .copied()
                .unwrap_or(0);
            (n, d)
        })
        .collect()
}

/// Memories mentioning Steiner-interior entities, scored by the activation
/// decay raised to the hop distance from the nearest terminal.
pub fn bridge_discover(
    graph: &crate::channels::EntityGraph,
    query_entities: &BTreeSet<String>,
    decay: f64,
) -> Vec<(i64, f64)> {
    let interior = steiner_interior(graph, query_entities);
    let mut scores: BTreeMap<i64, f64> = BTreeMap::new();
    for (entity, dist) in interior {
        let s = decay.powi(dist as i32);
        for id in graph.mentions_of(&entity) {
            let e = scores.entry(id).or_insert(0.0);
            if s > *e {
                *e = s;
            }
        }
    }
    scores.into_iter().collect()
}

/// s(m) = α·logistic(CE) + (1−α)·WRRF; candidates sorted descending with
/// id tie-break. `ce` is keyed by memory id; candidates with no score keep
/// their WRRF (reranker disabled path).
pub fn blend_rerank(fused: &mut [FusedCandidate], ce: &HashMap<i64, f64>, alpha: f64) {
    for c in fused.iter_mut() {
        match ce.get(&c.memory_id) {
            Some(raw) => {
                c.ce_score = Some(*raw);
                c.final_score = alpha * logistic(*raw) + (1.0 - alpha) * c.wrrf;
            }
            None => {
                c.ce_score = None;
                c.final_score = c.wrrf;
            }
        }
    }
    sort_by_final(fused);
}

fn sort_by_final(fused: &mut [FusedCandidate]) {
    fused.sort_by(|a, b| {
        b.final_score
            .partial_cmp(&a.final_score)
            .unwrap()
            .then(a.memory_id.cmp(&b.memory_id))
    });
}

/// One retrieval hit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievedMemory {
    pub rank: u32,
    pub memory_id: i64,
    pub score: f64,
    pub wrrf: f64,
    pub ce_score: Option<f64>,
    pub origin: CandidateOrigin,
    pub content: String,
}

/// Stage-by-stage record of one retrieve call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalTrace {
    pub query_type: QueryType,
    pub blend_alpha: f64,
    pub temporal_anchor: Option<i64>,
    pub query_entities: Vec<String>,
    pub stages: Vec<StageTrace>,
    pub channels: Vec<ChannelTrace>,
    /// Mode-A sufficiency heuristic: fraction of query entities covered by
    /// the returned set. Reported only; no retry decision is made.
    pub entity_coverage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: String,
    pub candidates: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub channel: String,
    pub results: Vec<RankedCandidate>,
}

/// Result set plus trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub results: Vec<RetrievedMemory>,
    pub trace: RetrievalTrace,
}

/// Retrieval entry point: classify → profile lookup → four channels → WRRF
/// → scene expansion → bridge discovery (multi-hop) → rerank blend →
/// lifecycle weighting and supersedes demotion → top-k.
pub fn retrieve(
    store: &StoreHandle,
    reranker: &Reranker,
    params: &FusionParams,
    profile_id: &str,
    query: &str,
    top_k: usize,
    toggles: AblationToggles,
) -> Result<RetrievalResult> {
    let toggles = toggles.normalize();
    let snapshot = store.snapshot(profile_id)?;
    let mut stages: Vec<StageTrace> = Vec::new();
    let mark = |stages: &mut Vec<StageTrace>, name: &str, t0: Instant, n: usize| {
        stages.push(StageTrace {
            stage: name.to_string(),
            candidates: n,
            elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    };

    let t0 = Instant::now();
    let plan = classify_query(query, &snapshot.known_entities);
    mark(&mut stages, "classify", t0, plan.query_entities.len());

    let t0 = Instant::now();
    let profile_hits = profile_lookup(query, &snapshot);
    mark(&mut stages, "profile_lookup", t0, profile_hits.len());

    let cap = params.channel_cap.max(top_k);
    let mut channel_results: Vec<(Channel, Vec<RankedCandidate>)> = Vec::new();

    let t0 = Instant::now();
    if let Some(semantic) = semantic_channel(store, &snapshot, query, cap, &toggles)? {
        channel_results.push((Channel::Semantic, semantic));
    }
    mark(
        &mut stages,
        "semantic",
        t0,
        channel_results.last().map_or(0, |(_, r)| r.len()),
    );

    if !toggles.bm25_off {
        let t0 = Instant::now();
        let hits = snapshot.bm25.search(query, cap);
        mark(&mut stages, "bm25", t0, hits.len());
        channel_results.push((Channel::Bm25, hits));
    }
    if !toggles.entity_off {
        let t0 = Instant::now();
        let hits =
            snapshot
                .graph
                .entity_channel(&plan.query_entities, &store.config.activation, cap);
        mark(&mut stages, "entity", t0, hits.len());
        channel_results.push((Channel::Entity, hits));
    }
    if !toggles.temporal_off {
        let t0 = Instant::now();
        let hits = temporal_channel(
            &snapshot.temporal,
            plan.temporal_anchor,
            &store.config.temporal,
            cap,
        );
        mark(&mut stages, "temporal", t0, hits.len());
        channel_results.push((Channel::Temporal, hits));
    }

    let t0 = Instant::now();
    let mut fused = wrrf_fuse(&channel_results, &params.weights, &plan.multipliers, params.rrf_k);
    mark(&mut stages, "wrrf_fuse", t0, fused.len());

    let t0 = Instant::now();
    let scene_of: HashMap<i64, i64> = snapshot
        .memories
        .values()
        .filter_map(|m| m.scene_id.map(|s| (m.id, s)))
        .collect();
    scene_expand(&mut fused, &scene_of, &snapshot.scenes, params.scene_factor);
    mark(&mut stages, "scene_expand", t0, fused.len());

    if plan.query_type == QueryType::MultiHop {
        let t0 = Instant::now();
        let bridges = bridge_discover(&snapshot.graph, &plan.query_entities, params.bridge_decay);
        let present: BTreeSet<i64> = fused.iter().map(|c| c.memory_id).collect();
        let rank1_entity = params.weights.entity * plan.multipliers.entity
            / (params.rrf_k as f64 + 1.0);
        for (memory_id, decay_score) in bridges {
            if present.contains(&memory_id) {
                continue;
            }
            let wrrf = decay_score * rank1_entity;
            fused.push(FusedCandidate {
                memory_id,
                wrrf,
                ranks: [None; 4],
                ce_score: None,
                final_score: wrrf,
                origin: CandidateOrigin::Bridge,
            });
        }
        mark(&mut stages, "bridge_discover", t0, fused.len());
    }

    // drop anything no longer in the store (defensive; snapshot ids are live)
    fused.retain(|c| snapshot.memories.contains_key(&c.memory_id));

    let t0 = Instant::now();
    let use_reranker = !toggles.cross_encoder_off && !reranker.is_disabled();
    if use_reranker {
        let mut ce: HashMap<i64, f64> = HashMap::new();
        for c in fused.iter() {
            let content = &snapshot.memories[&c.memory_id].content;
            ce.insert(c.memory_id, reranker.score(query, content)?);
        }
        blend_rerank(&mut fused, &ce, plan.blend_alpha);
    }
    mark(&mut stages, "rerank_blend", t0, fused.len());

    // lifecycle weighting and supersedes demotion ahead of the final sort
    let t0 = Instant::now();
    for c in fused.iter_mut() {
        let m = &snapshot.memories[&c.memory_id];
        if !toggles.langevin_off {
            c.final_score *= params.lifecycle_weights.get(m.lifecycle);
        }
        if !toggles.sheaf_off && snapshot.superseded.contains(&c.memory_id) {
            c.final_score *= params.supersedes_demotion;
        }
    }
    // profile hits float above every pipeline score (which stay below 1)
    for (ix, hit) in profile_hits.iter().enumerate() {
        if let Some(c) = fused.iter_mut().find(|c| c.memory_id == *hit) {
            c.final_score += 2.0 - ix as f64 * 1e-6;
            c.origin = CandidateOrigin::ProfileLookup;
        } else if snapshot.memories.contains_key(hit) {
            fused.push(FusedCandidate {
                memory_id: *hit,
                wrrf: 0.0,
                ranks: [None; 4],
                ce_score: None,
                final_score: 2.0 - ix as f64 * 1e-6,
                origin: CandidateOrigin::ProfileLookup,
            });
        }
    }
    sort_by_final(&mut fused);
    fused.truncate(top_k);
    mark(&mut stages, "post_process", t0, fused.len());

    let results: Vec<RetrievedMemory> = fused
        .iter()
        .enumerate()
        .map(|(i, c)| RetrievedMemory {
            rank: (i + 1) as u32,
            memory_id: c.memory_id,
            score: c.final_score,
            wrrf: c.wrrf,
            ce_score: c.ce_score,
            origin: c.origin,
            content: snapshot.memories[&c.memory_id].content.clone(),
        })
        .collect();

    let covered = plan
        .query_entities
        .iter()
        .filter(|e| {
            results
                .iter()
                .any(|r| snapshot.memories[&r.memory_id].entities.contains(*e))
        })
        .count();
    let entity_coverage = if plan.query_entities.is_empty() {
        1.0
    } else {
        covered as f64 / plan.query_entities.len() as f64
    };

    let channels = channel_results
        .into_iter()
        .map(|(c, results)| ChannelTrace {
            channel: c.as_str().to_string(),
            results,
        })
        .collect();

    Ok(RetrievalResult {
        results,
        trace: RetrievalTrace {
            query_type: plan.query_type,
            blend_alpha: plan.blend_alpha,
            temporal_anchor: plan.temporal_anchor,
            query_entities: plan.query_entities.into_iter().collect(),
            stages,
            channels,
            entity_coverage,
        },
    })
}

/// Semantic channel: effective (ramped) score of the query Gaussian against
/// every non-archived memory; `fisher_off` forces plain cosine.
fn semantic_channel(
    store: &StoreHandle,
    snapshot: &Snapshot,
    query: &str,
    cap: usize,
    toggles: &AblationToggles,
) -> Result<Option<Vec<RankedCandidate>>> {
    let embedded = match store.embedder().embed(query) {
        Ok(v) => v,
        Err(_) => return Ok(None), // queries with no usable tokens skip the channel
    };
    let q = estimate_variance(&embedded, &store.config.similarity)?;
    let mut scored: Vec<(i64, f64)> = Vec::new();
    for m in snapshot.memories.values() {
        if !toggles.langevin_off && m.lifecycle == LifecycleState::Archived {
            continue;
        }
        let s = if toggles.fisher_off {
            cosine_score(q.mu(), m.gaussian.mu())?
        } else {
            effective_score(&q, &m.gaussian, m.n_access, &store.config.similarity)?
        };
        if s.is_finite() {
            scored.push((m.id, s));
        }
    }
    Ok(Some(crate::channels::rank_candidates(scored, cap)))
}

/// Possessive profile shortcut: "what/who is <entity>'s <attribute>".
/// Returns source memory ids, most specific match first.
fn profile_lookup(query: &str, snapshot: &Snapshot) -> Vec<i64> {
    let lower = query.to_lowercase();
    let Some(rest) = lower
        .strip_prefix("what is ")
        .or_else(|| lower.strip_prefix("who is "))
        .or_else(|| lower.strip_prefix("whats "))
    else {
        return Vec::new();
    };
    let Some(pos) = rest.find("'s ") else {
        return Vec::new();
    };
    let entity = rest[..pos].trim().replace(' ', "_");
    let attribute: String = rest[pos + 3..]
        .trim()
        .trim_end_matches(['?', '.', '!'])
        .replace(' ', "_");
    let Some(attrs) = snapshot.profiles.get(&entity) else {
        return Vec::new();
    };
    let mut hits = Vec::new();
    // exact attribute key, then substring matches
    if let Some((_, memory_id)) = attrs.get(&attribute) {
        hits.push(*memory_id);
    }
    for (key, (_, memory_id)) in attrs {
        if *key != attribute
            && (key.contains(&attribute) || attribute.contains(key.as_str()))
            && !hits.contains(memory_id)
        {
            hits.push(*memory_id);
        }
    }
    hits
}
