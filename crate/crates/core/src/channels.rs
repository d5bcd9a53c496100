//! The three non-semantic retrieval channels: Okapi BM25 keyword search,
//! spreading activation over the entity graph, and temporal proximity
//! scoring over the three-date model.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::{days_between, tokenize};

/// One entry of a channel's ranked output. Ranks run 1..n without gaps and
/// scores are non-increasing with rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub memory_id: i64,
    pub score: f64,
    pub rank: u32,
}

/// Sorts (score desc, id asc), truncates, and assigns dense ranks.
pub fn rank_candidates(mut scored: Vec<(i64, f64)>, top_n: usize) -> Vec<RankedCandidate> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(top_n);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (memory_id, score))| RankedCandidate {
            memory_id,
            score,
            rank: (i + 1) as u32,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// BM25
// ---------------------------------------------------------------------------

/// Okapi parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Inverted index over memory contents.
#[derive(Debug, Clone, Default)]
pub struct Bm25Index {
    postings: BTreeMap<String, Vec<(i64, u32)>>,
    doc_lengths: BTreeMap<i64, u32>,
    params: Bm25Params,
}

impl Bm25Index {
    pub fn new(params: Bm25Params) -> Self {
        Self {
            postings: BTreeMap::new(),
            doc_lengths: BTreeMap::new(),
            params,
        }
    }

    /// Adds a document from raw text.
    pub fn add_document(&mut self, memory_id: i64, content: &str) {
        let tokens = tokenize(content);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_insert(0) += 1;
        }
        let len: u32 = tf.values().sum();
        self.doc_lengths.insert(memory_id, len);
        for (term, f) in tf {
            self.postings.entry(term).or_default().push((memory_id, f));
        }
    }

    /// Adds a document from persisted postings (term, frequency) pairs.
    pub fn add_postings(&mut self, memory_id: i64, rows: &[(String, u32)]) {
        let len: u32 = rows.iter().map(|(_, f)| f).sum();
        self.doc_lengths.insert(memory_id, len);
        for (term, f) in rows {
            self.postings
                .entry(term.clone())
                .or_default()
                .push((memory_id, *f));
        }
    }

    pub fn remove_document(&mut self, memory_id: i64) {
        self.doc_lengths.remove(&memory_id);
        self.postings.retain(|_, list| {
            list.retain(|(id, _)| *id != memory_id);
            !list.is_empty()
        });
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.doc_lengths.is_empty() {
            return 0.0;
        }
        self.doc_lengths.values().map(|&l| l as f64).sum::<f64>() / self.doc_lengths.len() as f64
    }

    fn idf(&self, term: &str) -> f64 {
        let n_t = self.postings.get(term).map_or(0, Vec::len) as f64;
        let n = self.doc_count() as f64;
        // non-negative variant: ln(((N − n + 0.5) / (n + 0.5)) + 1)
        (((n - n_t + 0.5) / (n_t + 0.5)) + 1.0).ln()
    }

    fn term_frequency(&self, term: &str, memory_id: i64) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| list.iter().find(|(id, _)| *id == memory_id))
            .map_or(0, |(_, f)| *f)
    }

    /// Okapi score of one document against pre-tokenized query terms.
    pub fn score(&self, query_terms: &[String], memory_id: i64) -> f64 {
        let Some(&len) = self.doc_lengths.get(&memory_id) else {
            return 0.0;
        };
        let avgdl = self.avg_doc_length();
        let Bm25Params { k1, b } = self.params;
        let mut total = 0.0;
        for term in query_terms {
            let f = self.term_frequency(term, memory_id) as f64;
            if f == 0.0 {
                continue;
            }
            let denom = f + k1 * (1.0 - b + b * len as f64 / avgdl);
            total += self.idf(term) * f * (k1 + 1.0) / denom;
        }
        total
    }

    /// Tokenizes the query and returns the top documents touching any term.
    pub fn search(&self, query: &str, top_n: usize) -> Vec<RankedCandidate> {
        let terms = tokenize(query);
        if terms.is_empty() {
            return Vec::new();
        }
        let mut candidates: BTreeSet<i64> = BTreeSet::new();
        for term in &terms {
            if let Some(list) = self.postings.get(term) {
                candidates.extend(list.iter().map(|(id, _)| id));
            }
        }
        let scored: Vec<(i64, f64)> = candidates
            .into_iter()
            .map(|id| (id, self.score(&terms, id)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        rank_candidates(scored, top_n)
    }
}

// ---------------------------------------------------------------------------
// Entity graph / spreading activation
// ---------------------------------------------------------------------------

/// Spreading-activation knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ActivationParams {
    pub max_hops: u32,
    pub decay: f64,
}

impl Default for ActivationParams {
    fn default() -> Self {
        Self {
            max_hops: 3,
            decay: 0.7,
        }
    }
}

/// Undirected weighted graph of canonical entities plus their memory
/// mentions.
#[derive(Debug, Clone, Default)]
pub struct EntityGraph {
    edges: BTreeMap<String, BTreeMap<String, f64>>,
    mentions: BTreeMap<String, BTreeSet<i64>>,
}

impl EntityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, entity: &str) {
        self.edges.entry(entity.to_string()).or_default();
    }

    /// Inserts or strengthens an undirected edge; weights clamp to (0, 1].
    pub fn add_edge(&mut self, a: &str, b: &str, weight: f64) {
        if a == b {
            return;
        }
        let w = weight.clamp(f64::MIN_POSITIVE, 1.0);
        self.add_node(a);
        self.add_node(b);
        let prev = self
            .edges
            .get(a)
            .and_then(|n| n.get(b))
            .copied()
            .unwrap_or(0.0);
        let w = prev.max(w);
        self.edges.get_mut(a).unwrap().insert(b.to_string(), w);
        self.edges.get_mut(b).unwrap().insert(a.to_string(), w);
    }

    pub fn add_mention(&mut self, entity: &str, memory_id: i64) {
        self.add_node(entity);
        self.mentions
            .entry(entity.to_string())
            .or_default()
            .insert(memory_id);
    }

    pub fn remove_memory(&mut self, memory_id: i64) {
        for ids in self.mentions.values_mut() {
            ids.remove(&memory_id);
        }
        self.mentions.retain(|_, ids| !ids.is_empty());
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.edges.contains_key(entity)
    }

    pub fn node_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, entity: &str) -> impl Iterator<Item = (&String, f64)> {
        self.edges
            .get(entity)
            .into_iter()
            .flat_map(|n| n.iter().map(|(k, &w)| (k, w)))
    }

    pub fn mentions_of(&self, entity: &str) -> impl Iterator<Item = i64> + '_ {
        self.mentions
            .get(entity)
            .into_iter()
            .flat_map(|ids| ids.iter().copied())
    }

    /// Breadth-first activation: seeds start at 1.0 and each hop multiplies
    /// by decay·edge_weight; a node keeps the maximum over incoming paths.
    /// Nodes farther than `max_hops` stay unactivated.
    pub fn spread_activation(
        &self,
        seeds: &BTreeSet<String>,
        params: &ActivationParams,
    ) -> BTreeMap<String, f64> {
        let mut activation: BTreeMap<String, f64> = BTreeMap::new();
        let mut frontier: Vec<String> = Vec::new();
        for s in seeds {
            if self.contains(s) {
                activation.insert(s.clone(), 1.0);
                frontier.push(s.clone());
            }
        }
        for _hop in 0..params.max_hops {
            let mut next: BTreeMap<String, f64> = BTreeMap::new();
            for node in &frontier {
                let act = activation[node];
                for (nbr, w) in self.neighbors(node) {
                    let candidate = act * params.decay * w;
                    let entry = next.entry(nbr.clone()).or_insert(0.0);
                    if candidate > *entry {
                        *entry = candidate;
                    }
                }
            }
            let mut new_frontier = Vec::new();
            for (node, act) in next {
                let best = activation.entry(node.clone()).or_insert(0.0);
                if act > *best {
                    *best = act;
                    new_frontier.push(node);
                }
            }
            if new_frontier.is_empty() {
                break;
            }
            frontier = new_frontier;
        }
        activation
    }

    /// Memory-level scores: each memory sums the activation of the entities
    /// it mentions.
    pub fn entity_channel(
        &self,
        query_entities: &BTreeSet<String>,
        params: &ActivationParams,
        top_n: usize,
    ) -> Vec<RankedCandidate> {
        if query_entities.is_empty() {
            return Vec::new();
        }
        let activation = self.spread_activation(query_entities, params);
        let mut scores: HashMap<i64, f64> = HashMap::new();
        for (entity, act) in &activation {
            if *act <= 0.0 {
                continue;
            }
            for id in self.mentions_of(entity) {
                *scores.entry(id).or_insert(0.0) += act;
            }
        }
        rank_candidates(scores.into_iter().collect(), top_n)
    }

    /// Hop distances from a source, bounded for Steiner-path work.
    pub fn hop_distances(&self, source: &str, max_hops: u32) -> BTreeMap<String, u32> {
        let mut dist: BTreeMap<String, u32> = BTreeMap::new();
        if !self.contains(source) {
            return dist;
        }
        dist.insert(source.to_string(), 0);
        let mut frontier = vec![source.to_string()];
        for hop in 1..=max_hops {
            let mut next = Vec::new();
            for node in &frontier {
                for (nbr, _) in self.neighbors(node) {
                    if !dist.contains_key(nbr) {
                        dist.insert(nbr.clone(), hop);
                        next.push(nbr.clone());
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        dist
    }

    /// One shortest path by hops (deterministic: lexicographic parents).
    pub fn shortest_path(&self, from: &str, to: &str) -> Option<Vec<String>> {
        if !self.contains(from) || !self.contains(to) {
            return None;
        }
        let mut parent: BTreeMap<String, String> = BTreeMap::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        seen.insert(from.to_string());
        let mut frontier = vec![from.to_string()];
        while !frontier.is_empty() && !seen.contains(to) {
            let mut next = Vec::new();
            for node in &frontier {
                let mut nbrs: Vec<&String> = self.neighbors(node).map(|(n, _)| n).collect();
                nbrs.sort();
                for nbr in nbrs {
                    if seen.insert(nbr.clone()) {
                        parent.insert(nbr.clone(), node.clone());
                        next.push(nbr.clone());
                    }
                }
            }
            frontier = next;
        }
        if !seen.contains(to) {
            return None;
        }
        let mut path = vec![to.to_string()];
        while let Some(p) = parent.get(path.last().unwrap()) {
            path.push(p.clone());
            if p == from {
                break;
            }
        }
        path.reverse();
        Some(path)
    }
}

// ---------------------------------------------------------------------------
// Temporal channel
// ---------------------------------------------------------------------------

/// Three-date model of one memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRecord {
    pub memory_id: i64,
    pub observed_at: i64,
    pub refers_to: Option<i64>,
    pub valid_from: Option<i64>,
    pub valid_until: Option<i64>,
}

/// Temporal scoring knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TemporalParams {
    pub tau_days: f64,
    pub expired_penalty: f64,
}

impl Default for TemporalParams {
    fn default() -> Self {
        Self {
            tau_days: 30.0,
            expired_penalty: 0.5,
        }
    }
}

/// Kernel score of one record against an anchor: exp(−|Δdays|/τ) against
/// refers_to (falling back to observed_at), halved when the anchor misses a
/// present validity window.
pub fn temporal_score(record: &TemporalRecord, anchor: i64, params: &TemporalParams) -> f64 {
    let target = record.refers_to.unwrap_or(record.observed_at);
    let delta = days_between(anchor, target);
    let mut score = (-delta / params.tau_days).exp();
    if let (Some(from), Some(until)) = (record.valid_from, record.valid_until) {
        if anchor < from || anchor > until {
            score *= params.expired_penalty;
        }
    }
    score
}

/// Ranks records by anchor proximity; with no anchor, scores recency of
/// observed_at against the latest observation (avoiding wall-clock reads).
pub fn temporal_channel(
    records: &[TemporalRecord],
    anchor: Option<i64>,
    params: &TemporalParams,
    top_n: usize,
) -> Vec<RankedCandidate> {
    if records.is_empty() {
        return Vec::new();
    }
    let scored: Vec<(i64, f64)> = match anchor {
        Some(a) => records
            .iter()
            .map(|r| (r.memory_id, temporal_score(r, a, params)))
            .collect(),
        None => {
            let latest = records.iter().map(|r| r.observed_at).max().unwrap();
            records
                .iter()
                .map(|r| {
                    let delta = days_between(latest, r.observed_at);
                    (r.memory_id, (-delta / params.tau_days).exp())
                })
                .collect()
        }
    };
    rank_candidates(scored, top_n)
}
