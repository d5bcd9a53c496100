//! Durable single-file store: the ingestion pipeline, access tracking,
//! erasure, maintenance, export/import, and the per-profile retrieval
//! snapshot.
//!
//! All state lives in one SQLite file (WAL mode). Writes run in a single
//! transaction per operation; a fault-injection hook can abort ingestion at
//! any step boundary to exercise atomicity.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use rusqlite::{params, Connection, OpenFlags};
use serde::{Deserialize, Serialize};

use crate::adapters::Embedder;
use crate::channels::{Bm25Index, EntityGraph, TemporalRecord};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::extract::{extract_entities, extract_facts, ExtractedFact};
use crate::hyperbolic::BallPoint;
use crate::infogeo::{estimate_variance, GaussianEmbedding};
use crate::langevin::{
    access_boost, lifecycle_of_with, maintenance_pass, LangevinState, LifecycleState,
    MaintenanceItem, MaintenanceReport,
};
use crate::sheaf::{check_new_fact, ConsistencyReport, FactObservation, SupersedesDirective};
use crate::text::{extract_date, term_frequencies, token_entropy_bits};

/// Caller-supplied ingestion metadata; everything is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StoreMetadata {
    pub session_id: Option<String>,
    pub speaker: Option<String>,
    pub source_document: Option<String>,
    /// Observation time (unix seconds); defaults to the wall clock.
    pub timestamp: Option<i64>,
    pub refers_to: Option<i64>,
    pub valid_from: Option<i64>,
    pub valid_until: Option<i64>,
}

/// Origin record persisted with every memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub session_id: String,
    pub speaker: Option<String>,
    pub timestamp: i64,
    pub source_document: Option<String>,
}

/// One fact row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactRecord {
    pub id: i64,
    pub memory_id: i64,
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub embedding: Vec<f64>,
    pub superseded_by: Option<i64>,
}

/// The stored memory tuple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub id: i64,
    pub profile_id: String,
    pub content: String,
    pub embedding: GaussianEmbedding,
    pub entities: BTreeSet<String>,
    pub facts: Vec<FactRecord>,
    pub scene_id: Option<i64>,
    pub t_created: i64,
    pub t_accessed: i64,
    pub n_access: u32,
    pub lifecycle: LifecycleState,
    pub langevin: LangevinState,
    pub provenance: ProvenanceRecord,
}

/// Ingestion result: stored, or rejected by a named gate.
#[derive(Debug, Clone)]
pub enum StoreOutcome {
    Stored(MemoryRecord),
    Rejected { gate: String, detail: String },
}

impl StoreOutcome {
    pub fn stored(&self) -> Option<&MemoryRecord> {
        match self {
            StoreOutcome::Stored(r) => Some(r),
            StoreOutcome::Rejected { .. } => None,
        }
    }
}

/// Erasure selector.
#[derive(Debug, Clone)]
pub enum EraseSelector {
    Memory(i64),
    Profile(String),
    Entity(String),
}

/// Fault-injection point for durability tests: abort before a pipeline step
/// (1-based), or after `tables` table writes inside the final persist
/// transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    BeforeStep(u8),
    MidPersist(u8),
}

/// In-memory view of one profile used by retrieval; rebuilt lazily after
/// writes.
pub struct Snapshot {
    pub profile_id: String,
    pub memories: BTreeMap<i64, SnapshotMemory>,
    pub bm25: Bm25Index,
    pub graph: EntityGraph,
    pub temporal: Vec<TemporalRecord>,
    pub scenes: HashMap<i64, Vec<i64>>,
    pub superseded: BTreeSet<i64>,
    pub known_entities: BTreeSet<String>,
    /// entity → attribute → (value, source memory)
    pub profiles: HashMap<String, BTreeMap<String, (String, i64)>>,
}

/// Scoring-relevant fields of one memory.
pub struct SnapshotMemory {
    pub id: i64,
    pub content: String,
    pub gaussian: GaussianEmbedding,
    pub n_access: u32,
    pub lifecycle: LifecycleState,
    pub scene_id: Option<i64>,
    pub entities: BTreeSet<String>,
}

/// Open handle to one store file.
pub struct StoreHandle {
    conn: Connection,
    path: PathBuf,
    pub config: EngineConfig,
    embedder: Embedder,
    snapshots: RefCell<HashMap<String, Rc<Snapshot>>>,
}

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS memories (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    profile_id TEXT NOT NULL,
    content TEXT NOT NULL,
    mu TEXT NOT NULL,
    var TEXT NOT NULL,
    scene_id INTEGER,
    t_created INTEGER NOT NULL,
    t_accessed INTEGER NOT NULL,
    n_access INTEGER NOT NULL DEFAULT 0,
    lifecycle TEXT NOT NULL,
    token_count INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS ix_memories_profile ON memories(profile_id);
CREATE TABLE IF NOT EXISTS langevin_states (
    memory_id INTEGER PRIMARY KEY,
    profile_id TEXT NOT NULL,
    xi TEXT NOT NULL,
    last_step_time INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS facts (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    profile_id TEXT NOT NULL,
    memory_id INTEGER NOT NULL,
    subject TEXT NOT NULL,
    predicate TEXT NOT NULL,
    object TEXT NOT NULL,
    embedding TEXT NOT NULL,
    superseded_by INTEGER
);
CREATE INDEX IF NOT EXISTS ix_facts_subject ON facts(profile_id, subject);
CREATE TABLE IF NOT EXISTS entities (
    profile_id TEXT NOT NULL,
    name TEXT NOT NULL,
    UNIQUE(profile_id, name)
);
CREATE TABLE IF NOT EXISTS entity_edges (
    profile_id TEXT NOT NULL,
    a TEXT NOT NULL,
    b TEXT NOT NULL,
    weight REAL NOT NULL,
    UNIQUE(profile_id, a, b)
);
CREATE TABLE IF NOT EXISTS entity_mentions (
    profile_id TEXT NOT NULL,
    entity TEXT NOT NULL,
    memory_id INTEGER NOT NULL,
    UNIQUE(profile_id, entity, memory_id)
);
CREATE TABLE IF NOT EXISTS bm25_postings (
    profile_id TEXT NOT NULL,
    term TEXT NOT NULL,
    memory_id INTEGER NOT NULL,
    tf INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS ix_postings_memory ON bm25_postings(profile_id, memory_id);
CREATE TABLE IF NOT EXISTS scenes (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    profile_id TEXT NOT NULL,
    source_document TEXT NOT NULL,
    started_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS temporal_events (
    profile_id TEXT NOT NULL,
    memory_id INTEGER NOT NULL UNIQUE,
    observed_at INTEGER NOT NULL,
    refers_to INTEGER,
    valid_from INTEGER,
    valid_until INTEGER
);
CREATE TABLE IF NOT EXISTS supersedes_edges (
    profile_id TEXT NOT NULL,
    new_memory_id INTEGER NOT NULL,
    old_memory_id INTEGER NOT NULL,
    kappa REAL NOT NULL,
    created_at INTEGER NOT NULL,
    UNIQUE(profile_id, new_memory_id, old_memory_id)
);
CREATE TABLE IF NOT EXISTS profiles (
    profile_id TEXT NOT NULL,
    entity TEXT NOT NULL,
    attributes TEXT NOT NULL,
    UNIQUE(profile_id, entity)
);
CREATE TABLE IF NOT EXISTS provenance (
    memory_id INTEGER PRIMARY KEY,
    profile_id TEXT NOT NULL,
    session_id TEXT NOT NULL,
    speaker TEXT,
    timestamp INTEGER NOT NULL,
    source_document TEXT
);
CREATE TABLE IF NOT EXISTS observations (
    memory_id INTEGER PRIMARY KEY,
    profile_id TEXT NOT NULL,
    token_count INTEGER NOT NULL,
    entity_count INTEGER NOT NULL,
    entropy_bits REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS config (
    profile_id TEXT NOT NULL,
    key TEXT NOT NULL,
    value TEXT NOT NULL,
    UNIQUE(profile_id, key)
);
"#;

fn now_unix() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn vec_from_json(s: &str) -> Result<Vec<f64>> {
    serde_json::from_str(s).map_err(|e| Error::Storage(format!("corrupt vector column: {e}")))
}

impl StoreHandle {
    /// Opens (creating if needed) the store file. Safe to call repeatedly on
    /// one path; SQLite mediates cross-handle locking.
    pub fn open(path: impl AsRef<Path>, config: EngineConfig, embedder: Embedder) -> Result<Self> {
        config.similarity.validate()?;
        config.potential.validate()?;
        let conn = Connection::open_with_flags(
            path.as_ref(),
            OpenFlags::SQLITE_OPEN_READ_WRITE | OpenFlags::SQLITE_OPEN_CREATE,
        )?;
        conn.busy_timeout(std::time::Duration::from_millis(0))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self {
            conn,
            path: path.as_ref().to_path_buf(),
            config,
            embedder,
            snapshots: RefCell::new(HashMap::new()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    /// Flushes and drops the handle.
    pub fn close(self) {}

    /// Rewrites the file, preserving logical content.
    pub fn compact(&mut self) -> Result<()> {
        self.conn.execute_batch("PRAGMA wal_checkpoint(TRUNCATE); VACUUM;")?;
        Ok(())
    }

    fn invalidate(&self, profile_id: &str) {
        self.snapshots.borrow_mut().remove(profile_id);
    }

    // -- ingestion ----------------------------------------------------------

    /// Runs the full ingestion pipeline for one memory.
    pub fn store(
        &mut self,
        profile_id: &str,
        content: &str,
        metadata: &StoreMetadata,
    ) -> Result<StoreOutcome> {
        self.store_with_fault(profile_id, content, metadata, None)
    }

    /// Ingestion with an optional abort point; used by durability tests.
    /// An injected fault rolls back every write of the attempt.
    pub fn store_with_fault(
        &mut self,
        profile_id: &str,
        content: &str,
        metadata: &StoreMetadata,
        fault: Option<FaultPoint>,
    ) -> Result<StoreOutcome> {
        if content.trim().is_empty() {
            return Err(Error::InvalidArgument("empty content".into()));
        }
        let trip = |step: u8| -> Result<()> {
            if fault == Some(FaultPoint::BeforeStep(step)) {
                return Err(Error::Storage(format!("fault injected before step {step}")));
            }
            Ok(())
        };

        // step 1: embed + estimate variance
        trip(1)?;
        let mu = self.embedder.embed(content)?;
        let gaussian = estimate_variance(&mu, &self.config.similarity)?;

        // step 2: metadata
        trip(2)?;
        if let (Some(from), Some(until)) = (metadata.valid_from, metadata.valid_until) {
            if from > until {
                return Err(Error::InvalidArgument(
                    "valid_from must not exceed valid_until".into(),
                ));
            }
        }
        let observed_at = metadata.timestamp.unwrap_or_else(now_unix);
        let refers_to = metadata.refers_to.or_else(|| extract_date(content));
        let session_id = metadata
            .session_id
            .clone()
            .unwrap_or_default();

        // step 3: entities (known dictionary from this profile)
        trip(3)?;
        let known = self.known_entities(profile_id)?;
        let entities = extract_entities(content, &known);

        // step 4: facts, each embedded independently
        trip(4)?;
        let extracted = extract_facts(content, &entities);
        let mut fact_embeddings = Vec::with_capacity(extracted.len());
        for f in &extracted {
            fact_embeddings.push(self.embedder.embed(&f.surface())?);
        }

        // step 5: emotion/belief detection — intentionally a no-op
        trip(5)?;

        // step 6: co-occurrence edges for the entity graph
        trip(6)?;
        let entity_vec: Vec<&String> = entities.iter().collect();
        let mut new_edges: Vec<(String, String)> = Vec::new();
        for i in 0..entity_vec.len() {
            for j in (i + 1)..entity_vec.len() {
                new_edges.push((entity_vec[i].clone(), entity_vec[j].clone()));
            }
        }

        // step 7: sheaf consistency per fact
        trip(7)?;
        let new_context = if session_id.is_empty() {
            None // resolved to mem:<id> once the id exists
        } else {
            Some(session_id.clone())
        };
        // Without a session the new memory is its own context; any unique
        // placeholder distinguishes it from every persisted context here.
        let mut directives: Vec<(usize, SupersedesDirective)> = Vec::new();
        for (ix, fact) in extracted.iter().enumerate() {
            let existing = self.fact_observations(profile_id, &fact.subject)?;
            let ctx = new_context.clone().unwrap_or_else(|| "mem:pending".into());
            let (_, directive) =
                check_new_fact(&existing, &ctx, &fact_embeddings[ix], self.config.sheaf_tau)?;
            if let Some(d) = directive {
                directives.push((ix, d));
            }
        }

        // step 8: foresight predictions — intentionally a no-op
        trip(8)?;

        // step 9: observation summary
        trip(9)?;
        let (entropy_bits, token_count) = token_entropy_bits(content);

        // step 10: entropy gate
        trip(10)?;
        let gate = &self.config.entropy_gate;
        if token_count < gate.min_tokens || entropy_bits < gate.threshold_bits {
            return Ok(StoreOutcome::Rejected {
                gate: "entropy_gate".into(),
                detail: format!(
                    "entropy {entropy_bits:.3} bits over {token_count} tokens (need ≥ {} bits, ≥ {} tokens)",
                    gate.threshold_bits, gate.min_tokens
                ),
            });
        }

        // step 11: persist everything atomically
        trip(11)?;
        let record = self.persist(
            profile_id,
            content,
            &gaussian,
            &entities,
            &extracted,
            &fact_embeddings,
            &new_edges,
            &directives,
            metadata,
            observed_at,
            refers_to,
            &session_id,
            token_count,
            entropy_bits,
            fault,
        )?;
        self.invalidate(profile_id);
        Ok(StoreOutcome::Stored(record))
    }

    #[allow(clippy::too_many_arguments)]
    fn persist(
        &mut self,
        profile_id: &str,
        content: &str,
        gaussian: &GaussianEmbedding,
        entities: &BTreeSet<String>,
        extracted: &[ExtractedFact],
        fact_embeddings: &[Vec<f64>],
        new_edges: &[(String, String)],
        directives: &[(usize, SupersedesDirective)],
        metadata: &StoreMetadata,
        observed_at: i64,
        refers_to: Option<i64>,
        session_id: &str,
        token_count: usize,
        entropy_bits: f64,
        fault: Option<FaultPoint>,
    ) -> Result<MemoryRecord> {
        let state_dim = self.config.state_dim;
        let thresholds = self.config.lifecycle.clone();
        let scene_window = self.config.scene_window_secs;
        let tx = self.conn.transaction()?;
        let mut writes: u8 = 0;
        let bump = |n: &mut u8| -> Result<()> {
            *n += 1;
            if fault == Some(FaultPoint::MidPersist(*n)) {
                return Err(Error::Storage(format!(
                    "fault injected after {n} persist writes"
                )));
            }
            Ok(())
        };

        // scene assignment: same source document within the window
        let scene_id = if let Some(doc) = &metadata.source_document {
            let found: Option<(i64, i64)> = tx
                .query_row(
                    "SELECT id, started_at FROM scenes
                     WHERE profile_id = ?1 AND source_document = ?2
                     ORDER BY started_at DESC LIMIT 1",
                    params![profile_id, doc],
                    |row| Ok((row.get(0)?, row.get(1)?)),
                )
                .map(Some)
                .or_else(|e| match e {
                    rusqlite::Error::QueryReturnedNoRows => Ok(None),
                    other => Err(other),
                })?;
            let id = match found {
                Some((id, started)) if (observed_at - started).abs() <= scene_window => id,
                _ => {
                    tx.execute(
                        "INSERT INTO scenes(profile_id, source_document, started_at)
                         VALUES (?1, ?2, ?3)",
                        params![profile_id, doc, observed_at],
                    )?;
                    tx.last_insert_rowid()
                }
            };
            bump(&mut writes)?;
            Some(id)
        } else {
            None
        };

        let langevin = LangevinState::at_origin(state_dim, observed_at);
        let lifecycle = lifecycle_of_with(&langevin.xi, &thresholds);

        tx.execute(
            "INSERT INTO memories(profile_id, content, mu, var, scene_id, t_created,
                                  t_accessed, n_access, lifecycle, token_count)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, 0, ?8, ?9)",
            params![
                profile_id,
                content,
                to_json(&gaussian.mu().to_vec()),
                to_json(&gaussian.var().to_vec()),
                scene_id,
                observed_at,
                observed_at,
                lifecycle.as_str(),
                token_count as i64,
            ],
        )?;
        let memory_id = tx.last_insert_rowid();
        bump(&mut writes)?;

        tx.execute(
            "INSERT INTO langevin_states(memory_id, profile_id, xi, last_step_time)
             VALUES (?1, ?2, ?3, ?4)",
            params![
                memory_id,
                profile_id,
                to_json(&langevin.xi.coords().to_vec()),
                observed_at
            ],
        )?;
        bump(&mut writes)?;

        let mut fact_rows = Vec::new();
        for (fact, emb) in extracted.iter().zip(fact_embeddings) {
            tx.execute(
                "INSERT INTO facts(profile_id, memory_id, subject, predicate, object, embedding)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
                params![
                    profile_id,
                    memory_id,
                    fact.subject,
                    fact.predicate,
                    fact.object,
                    to_json(emb)
                ],
            )?;
            fact_rows.push(FactRecord {
                id: tx.last_insert_rowid(),
                memory_id,
                subject: fact.subject.clone(),
                predicate: fact.predicate.clone(),
                object: fact.object.clone(),
                embedding: emb.clone(),
                superseded_by: None,
            });
        }
        bump(&mut writes)?;

        for e in entities {
            tx.execute(
                "INSERT OR IGNORE INTO entities(profile_id, name) VALUES (?1, ?2)",
                params![profile_id, e],
            )?;
            tx.execute(
                "INSERT OR IGNORE INTO entity_mentions(profile_id, entity, memory_id)
                 VALUES (?1, ?2, ?3)",
                params![profile_id, e, memory_id],
            )?;
        }
        for (a, b) in new_edges {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            tx.execute(
                "INSERT INTO entity_edges(profile_id, a, b, weight) VALUES (?1, ?2, ?3, 1.0)
                 ON CONFLICT(profile_id, a, b) DO UPDATE SET weight = MAX(weight, 1.0)",
                params![profile_id, a, b],
            )?;
        }
        bump(&mut writes)?;

        for (term, tf) in term_frequencies(content) {
            tx.execute(
                "INSERT INTO bm25_postings(profile_id, term, memory_id, tf)
                 VALUES (?1, ?2, ?3, ?4)",
                params![profile_id, term, memory_id, tf],
            )?;
        }
        bump(&mut writes)?;

        tx.execute(
            "INSERT INTO temporal_events(profile_id, memory_id, observed_at, refers_to,
                                         valid_from, valid_until)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![
                profile_id,
                memory_id,
                observed_at,
                refers_to,
                metadata.valid_from,
                metadata.valid_until
            ],
        )?;
        bump(&mut writes)?;

        // supersedes directives from the consistency check; the contradicted
        // fact rows point at the incoming fact that displaced them
        let effective_session = if session_id.is_empty() {
            format!("mem:{memory_id}")
        } else {
            session_id.to_string()
        };
        for (ix, d) in directives {
            tx.execute(
                "INSERT OR IGNORE INTO supersedes_edges(profile_id, new_memory_id,
                     old_memory_id, kappa, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5)",
                params![profile_id, memory_id, d.old_memory_id, d.kappa, observed_at],
            )?;
            if let Some(new_fact) = fact_rows.get(*ix) {
                tx.execute(
                    "UPDATE facts SET superseded_by = ?1
                     WHERE memory_id = ?2 AND subject = ?3 AND superseded_by IS NULL",
                    params![new_fact.id, d.old_memory_id, new_fact.subject],
                )?;
            }
        }
        bump(&mut writes)?;

        // profile attribute upsert from facts (newest wins)
        for fact in extracted {
            let existing: Option<String> = tx
                .query_row(
                    "SELECT attributes FROM profiles WHERE profile_id = ?1 AND entity = ?2",
                    params![profile_id, fact.subject],
                    |row| row.get(0),
                )
                .map(Some)
                .or_else(|e| match e {
                    rusqlite::Error::QueryReturnedNoRows => Ok(None),
                    other => Err(other),
                })?;
            let mut attrs: BTreeMap<String, (String, i64)> = existing
                .map(|s| serde_json::from_str(&s).unwrap_or_default())
                .unwrap_or_default();
            attrs.insert(fact.predicate.clone(), (fact.object.clone(), memory_id));
            tx.execute(
                "INSERT INTO profiles(profile_id, entity, attributes) VALUES (?1, ?2, ?3)
                 ON CONFLICT(profile_id, entity) DO UPDATE SET attributes = excluded.attributes",
                params![profile_id, fact.subject, to_json(&attrs)],
            )?;
        }
        bump(&mut writes)?;

        tx.execute(
            "INSERT INTO provenance(memory_id, profile_id, session_id, speaker, timestamp,
                                    source_document)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![
                memory_id,
                profile_id,
                effective_session,
                metadata.speaker,
                observed_at,
                metadata.source_document
            ],
        )?;
        bump(&mut writes)?;

        tx.execute(
            "INSERT INTO observations(memory_id, profile_id, token_count, entity_count,
                                      entropy_bits)
             VALUES (?1, ?2, ?3, ?4, ?5)",
            params![
                memory_id,
                profile_id,
                token_count as i64,
                entities.len() as i64,
                entropy_bits
            ],
        )?;
        bump(&mut writes)?;

        tx.commit()?;

        Ok(MemoryRecord {
            id: memory_id,
            profile_id: profile_id.to_string(),
            content: content.to_string(),
            embedding: gaussian.clone(),
            entities: entities.clone(),
            facts: fact_rows,
            scene_id,
            t_created: observed_at,
            t_accessed: observed_at,
            n_access: 0,
            lifecycle,
            langevin,
            provenance: ProvenanceRecord {
                session_id: effective_session,
                speaker: metadata.speaker.clone(),
                timestamp: observed_at,
                source_document: metadata.source_document.clone(),
            },
        })
    }

    fn known_entities(&self, profile_id: &str) -> Result<BTreeSet<String>> {
        let mut stmt = self
            .conn
            .prepare("SELECT name FROM entities WHERE profile_id = ?1")?;
        let rows = stmt.query_map(params![profile_id], |row| row.get::<_, String>(0))?;
        let mut out = BTreeSet::new();
        for r in rows {
            out.insert(r?);
        }
        Ok(out)
    }

    /// Existing assertions about one subject entity, with their contexts.
    fn fact_observations(
        &self,
        profile_id: &str,
        subject: &str,
    ) -> Result<Vec<FactObservation>> {
        let mut stmt = self.conn.prepare(
            "SELECT f.memory_id, f.embedding, m.t_created,
                    COALESCE(NULLIF(p.session_id, ''), 'mem:' || f.memory_id)
             FROM facts f
             JOIN memories m ON m.id = f.memory_id
             LEFT JOIN provenance p ON p.memory_id = f.memory_id
             WHERE f.profile_id = ?1 AND f.subject = ?2
             ORDER BY f.id",
        )?;
        let rows = stmt.query_map(params![profile_id, subject], |row| {
            Ok((
                row.get::<_, i64>(0)?,
                row.get::<_, String>(1)?,
                row.get::<_, i64>(2)?,
                row.get::<_, String>(3)?,
            ))
        })?;
        let mut out = Vec::new();
        for r in rows {
            let (memory_id, emb, created_at, context) = r?;
            out.push(FactObservation {
                context,
                memory_id,
                created_at,
                embedding: vec_from_json(&emb)?,
            });
        }
        Ok(out)
    }

    // -- access / erase -----------------------------------------------------

    /// Records one access: increments the counter, refreshes t_accessed, and
    /// pulls the lifecycle state toward the origin.
    pub fn record_access(&mut self, profile_id: &str, memory_id: i64) -> Result<MemoryRecord> {
        let strength = self.config.access_boost_strength;
        let thresholds = self.config.lifecycle.clone();
        let tx = self.conn.transaction()?;
        let existing: Option<(String, i64)> = tx
            .query_row(
                "SELECT l.xi, m.t_created FROM memories m
                 JOIN langevin_states l ON l.memory_id = m.id
                 WHERE m.id = ?1 AND m.profile_id = ?2",
                params![memory_id, profile_id],
                |row| Ok((row.get(0)?, row.get(1)?)),
            )
            .map(Some)
            .or_else(|e| match e {
                rusqlite::Error::QueryReturnedNoRows => Ok(None),
                other => Err(other),
            })?;
        let Some((xi_json, t_created)) = existing else {
            return Err(Error::UnknownMemory(memory_id));
        };
        let xi = BallPoint::clamped(vec_from_json(&xi_json)?);
        let state = LangevinState {
            xi,
            last_step_time: 0,
        };
        let boosted = access_boost(&state, strength);
        let lifecycle = lifecycle_of_with(&boosted.xi, &thresholds);
        let t_accessed = now_unix().max(t_created);
        tx.execute(
            "UPDATE memories SET n_access = n_access + 1, t_accessed = ?1, lifecycle = ?2
             WHERE id = ?3",
            params![t_accessed, lifecycle.as_str(), memory_id],
        )?;
        tx.execute(
            "UPDATE langevin_states SET xi = ?1 WHERE memory_id = ?2",
            params![to_json(&boosted.xi.coords().to_vec()), memory_id],
        )?;
        tx.commit()?;
        self.invalidate(profile_id);
        self.load_memory(profile_id, memory_id)
    }

    /// Hard-deletes everything matching the selector; returns the number of
    /// memories removed.
    pub fn erase(&mut self, profile_id: &str, selector: &EraseSelector) -> Result<usize> {
        let ids: Vec<i64> = match selector {
            EraseSelector::Memory(id) => {
                let exists: bool = self.conn.query_row(
                    "SELECT COUNT(*) FROM memories WHERE id = ?1 AND profile_id = ?2",
                    params![id, profile_id],
                    |row| row.get::<_, i64>(0),
                )? > 0;
                if exists {
                    vec![*id]
                } else {
                    Vec::new()
                }
            }
            EraseSelector::Profile(p) => {
                let mut stmt = self
                    .conn
                    .prepare("SELECT id FROM memories WHERE profile_id = ?1")?;
                let rows = stmt.query_map(params![p], |row| row.get(0))?;
                rows.collect::<std::result::Result<Vec<i64>, _>>()?
            }
            EraseSelector::Entity(name) => {
                let mut stmt = self.conn.prepare(
                    "SELECT memory_id FROM entity_mentions
                     WHERE profile_id = ?1 AND entity = ?2",
                )?;
                let rows = stmt.query_map(params![profile_id, name], |row| row.get(0))?;
                rows.collect::<std::result::Result<Vec<i64>, _>>()?
            }
        };
        if ids.is_empty() {
            return Ok(0);
        }
        let scope = match selector {
            EraseSelector::Profile(p) => p.clone(),
            _ => profile_id.to_string(),
        };
        let tx = self.conn.transaction()?;
        for chunk in ids.chunks(256) {
            let placeholders = vec!["?"; chunk.len()].join(",");
            let args: Vec<&dyn rusqlite::ToSql> =
                chunk.iter().map(|id| id as &dyn rusqlite::ToSql).collect();
            for table in [
                "facts",
                "bm25_postings",
                "entity_mentions",
                "temporal_events",
                "langevin_states",
                "provenance",
                "observations",
            ] {
                tx.execute(
                    &format!("DELETE FROM {table} WHERE memory_id IN ({placeholders})"),
                    args.as_slice(),
                )?;
            }
            tx.execute(
                &format!(
                    "DELETE FROM supersedes_edges
                     WHERE new_memory_id IN ({placeholders}) OR old_memory_id IN ({placeholders})"
                ),
                [args.as_slice(), args.as_slice()].concat().as_slice(),
            )?;
            tx.execute(
                &format!("DELETE FROM memories WHERE id IN ({placeholders})"),
                args.as_slice(),
            )?;
        }
        if let EraseSelector::Profile(p) = selector {
            for table in ["entities", "entity_edges", "profiles", "scenes", "config"] {
                tx.execute(
                    &format!("DELETE FROM {table} WHERE profile_id = ?1"),
                    params![p],
                )?;
            }
        }
        tx.commit()?;
        self.invalidate(&scope);
        Ok(ids.len())
    }

    // -- maintenance --------------------------------------------------------

    /// Runs the lifecycle dynamics over every memory of the profile.
    pub fn maintain(
        &mut self,
        profile_id: &str,
        steps: u32,
        rng_seed: u64,
    ) -> Result<MaintenanceReport> {
        self.config.potential.validate()?;
        let now = now_unix();
        let mut items = Vec::new();
        {
            let mut stmt = self.conn.prepare(
                "SELECT m.id, l.xi, l.last_step_time, m.n_access
                 FROM memories m JOIN langevin_states l ON l.memory_id = m.id
                 WHERE m.profile_id = ?1 ORDER BY m.id",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok((
                    row.get::<_, i64>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, i64>(2)?,
                    row.get::<_, i64>(3)?,
                ))
            })?;
            for r in rows {
                let (id, xi_json, last, n_access) = r?;
                items.push(MaintenanceItem {
                    memory_id: id,
                    state: LangevinState {
                        xi: BallPoint::clamped(vec_from_json(&xi_json)?),
                        last_step_time: last,
                    },
                    n_access: n_access as u32,
                    relevance: 0.0,
                });
            }
        }
        let report = maintenance_pass(
            &items,
            &self.config.potential,
            &self.config.lifecycle,
            steps,
            rng_seed,
            now,
        );
        let tx = self.conn.transaction()?;
        for (id, state, lifecycle) in &report.updated {
            tx.execute(
                "UPDATE langevin_states SET xi = ?1, last_step_time = ?2 WHERE memory_id = ?3",
                params![to_json(&state.xi.coords().to_vec()), state.last_step_time, id],
            )?;
            tx.execute(
                "UPDATE memories SET lifecycle = ?1 WHERE id = ?2",
                params![lifecycle.as_str(), id],
            )?;
        }
        tx.commit()?;
        self.invalidate(profile_id);
        Ok(report)
    }

    /// Full-store consistency sweep: per-entity sheaf checks, creating any
    /// missing supersedes edges. Returns (aggregate report, edges created).
    pub fn consistency_sweep(&mut self, profile_id: &str) -> Result<(ConsistencyReport, usize)> {
        let subjects: Vec<String> = {
            let mut stmt = self.conn.prepare(
                "SELECT DISTINCT subject FROM facts WHERE profile_id = ?1 ORDER BY subject",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| row.get(0))?;
            rows.collect::<std::result::Result<Vec<String>, _>>()?
        };
        let mut worst_kappa = 0.0f64;
        let mut h1_total = 0usize;
        let mut offending: Vec<((String, String), f64)> = Vec::new();
        let mut created = 0usize;
        let now = now_unix();
        for subject in subjects {
            let observations = self.fact_observations(profile_id, &subject)?;
            if observations.len() < 2 {
                continue;
            }
            // newest observation plays the incoming-fact role
            let newest = observations
                .iter()
                .enumerate()
                .max_by_key(|(ix, f)| (f.created_at, f.memory_id, *ix))
                .map(|(ix, _)| ix)
                .unwrap();
            let mut rest = observations.clone();
            let new_obs = rest.remove(newest);
            let (report, directive) = check_new_fact(
                &rest,
                &new_obs.context,
                &new_obs.embedding,
                self.config.sheaf_tau,
            )?;
            worst_kappa = worst_kappa.max(report.kappa);
            h1_total += report.h1_dim;
            for ((a, b), norm) in report.offending_edges {
                if norm > 1e-12 {
                    offending.push(((format!("{subject}@{a}"), format!("{subject}@{b}")), norm));
                }
            }
            if let Some(d) = directive {
                let n = self.conn.execute(
                    "INSERT OR IGNORE INTO supersedes_edges(profile_id, new_memory_id,
                         old_memory_id, kappa, created_at)
                     VALUES (?1, ?2, ?3, ?4, ?5)",
                    params![profile_id, new_obs.memory_id, d.old_memory_id, d.kappa, now],
                )?;
                created += n;
            }
        }
        offending.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        if created > 0 {
            self.invalidate(profile_id);
        }
        Ok((
            ConsistencyReport {
                kappa: worst_kappa,
                h1_dim: h1_total,
                offending_edges: offending,
            },
            created,
        ))
    }

    // -- reads --------------------------------------------------------------

    pub fn memory_count(&self, profile_id: &str) -> Result<usize> {
        let n: i64 = self.conn.query_row(
            "SELECT COUNT(*) FROM memories WHERE profile_id = ?1",
            params![profile_id],
            |row| row.get(0),
        )?;
        Ok(n as usize)
    }

    pub fn lifecycle_counts(&self, profile_id: &str) -> Result<BTreeMap<String, usize>> {
        let mut stmt = self.conn.prepare(
            "SELECT lifecycle, COUNT(*) FROM memories WHERE profile_id = ?1 GROUP BY lifecycle",
        )?;
        let rows = stmt.query_map(params![profile_id], |row| {
            Ok((row.get::<_, String>(0)?, row.get::<_, i64>(1)?))
        })?;
        let mut out = BTreeMap::new();
        for r in rows {
            let (k, v) = r?;
            out.insert(k, v as usize);
        }
        Ok(out)
    }

    /// Loads one full memory record.
    pub fn load_memory(&self, profile_id: &str, memory_id: i64) -> Result<MemoryRecord> {
        let row = self
            .conn
            .query_row(
                "SELECT m.content, m.mu, m.var, m.scene_id, m.t_created, m.t_accessed,
                        m.n_access, m.lifecycle, l.xi, l.last_step_time,
                        p.session_id, p.speaker, p.timestamp, p.source_document
                 FROM memories m
                 JOIN langevin_states l ON l.memory_id = m.id
                 JOIN provenance p ON p.memory_id = m.id
                 WHERE m.id = ?1 AND m.profile_id = ?2",
                params![memory_id, profile_id],
                |row| {
                    Ok((
                        row.get::<_, String>(0)?,
                        row.get::<_, String>(1)?,
                        row.get::<_, String>(2)?,
                        row.get::<_, Option<i64>>(3)?,
                        row.get::<_, i64>(4)?,
                        row.get::<_, i64>(5)?,
                        row.get::<_, i64>(6)?,
                        row.get::<_, String>(7)?,
                        row.get::<_, String>(8)?,
                        row.get::<_, i64>(9)?,
                        row.get::<_, String>(10)?,
                        row.get::<_, Option<String>>(11)?,
                        row.get::<_, i64>(12)?,
                        row.get::<_, Option<String>>(13)?,
                    ))
                },
            )
            .or_else(|e| match e {
                rusqlite::Error::QueryReturnedNoRows => Err(Error::UnknownMemory(memory_id)),
                other => Err(other.into()),
            })?;
        let (
            content,
            mu,
            var,
            scene_id,
            t_created,
            t_accessed,
            n_access,
            lifecycle,
            xi,
            last_step,
            session_id,
            speaker,
            timestamp,
            source_document,
        ) = row;

        let mut entities = BTreeSet::new();
        {
            let mut stmt = self.conn.prepare(
                "SELECT entity FROM entity_mentions WHERE profile_id = ?1 AND memory_id = ?2",
            )?;
            let rows = stmt.query_map(params![profile_id, memory_id], |row| {
                row.get::<_, String>(0)
            })?;
            for r in rows {
                entities.insert(r?);
            }
        }
        let mut facts = Vec::new();
        {
            let mut stmt = self.conn.prepare(
                "SELECT id, subject, predicate, object, embedding, superseded_by
                 FROM facts WHERE memory_id = ?1 ORDER BY id",
            )?;
            let rows = stmt.query_map(params![memory_id], |row| {
                Ok((
                    row.get::<_, i64>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, String>(2)?,
                    row.get::<_, String>(3)?,
                    row.get::<_, String>(4)?,
                    row.get::<_, Option<i64>>(5)?,
                ))
            })?;
            for r in rows {
                let (id, subject, predicate, object, embedding, superseded_by) = r?;
                facts.push(FactRecord {
                    id,
                    memory_id,
                    subject,
                    predicate,
                    object,
                    embedding: vec_from_json(&embedding)?,
                    superseded_by,
                });
            }
        }

        Ok(MemoryRecord {
            id: memory_id,
            profile_id: profile_id.to_string(),
            content,
            embedding: GaussianEmbedding::new(vec_from_json(&mu)?, vec_from_json(&var)?)?,
            entities,
            facts,
            scene_id,
            t_created,
            t_accessed,
            n_access: n_access as u32,
            lifecycle: LifecycleState::parse(&lifecycle)?,
            langevin: LangevinState {
                xi: BallPoint::clamped(vec_from_json(&xi)?),
                last_step_time: last_step,
            },
            provenance: ProvenanceRecord {
                session_id,
                speaker,
                timestamp,
                source_document,
            },
        })
    }

    /// Cached per-profile retrieval snapshot.
    pub fn snapshot(&self, profile_id: &str) -> Result<Rc<Snapshot>> {
        if let Some(s) = self.snapshots.borrow().get(profile_id) {
            return Ok(Rc::clone(s));
        }
        let snap = Rc::new(self.build_snapshot(profile_id)?);
        self.snapshots
            .borrow_mut()
            .insert(profile_id.to_string(), Rc::clone(&snap));
        Ok(snap)
    }

    fn build_snapshot(&self, profile_id: &str) -> Result<Snapshot> {
        let mut memories = BTreeMap::new();
        {
            let mut stmt = self.conn.prepare(
                "SELECT id, content, mu, var, n_access, lifecycle, scene_id
                 FROM memories WHERE profile_id = ?1 ORDER BY id",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok((
                    row.get::<_, i64>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, String>(2)?,
                    row.get::<_, String>(3)?,
                    row.get::<_, i64>(4)?,
                    row.get::<_, String>(5)?,
                    row.get::<_, Option<i64>>(6)?,
                ))
            })?;
            for r in rows {
                let (id, content, mu, var, n_access, lifecycle, scene_id) = r?;
                memories.insert(
                    id,
                    SnapshotMemory {
                        id,
                        content,
                        gaussian: GaussianEmbedding::new(
                            vec_from_json(&mu)?,
                            vec_from_json(&var)?,
                        )?,
                        n_access: n_access as u32,
                        lifecycle: LifecycleState::parse(&lifecycle)?,
                        scene_id,
                        entities: BTreeSet::new(),
                    },
                );
            }
        }

        let mut bm25 = Bm25Index::new(self.config.bm25);
        {
            let mut stmt = self.conn.prepare(
                "SELECT memory_id, term, tf FROM bm25_postings WHERE profile_id = ?1
                 ORDER BY memory_id, term",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok((
                    row.get::<_, i64>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, i64>(2)?,
                ))
            })?;
            let mut current: Option<(i64, Vec<(String, u32)>)> = None;
            for r in rows {
                let (id, term, tf) = r?;
                match &mut current {
                    Some((cur, acc)) if *cur == id => acc.push((term, tf as u32)),
                    _ => {
                        if let Some((done, acc)) = current.take() {
                            bm25.add_postings(done, &acc);
                        }
                        current = Some((id, vec![(term, tf as u32)]));
                    }
                }
            }
            if let Some((done, acc)) = current.take() {
                bm25.add_postings(done, &acc);
            }
        }

        let mut graph = EntityGraph::new();
        let mut known_entities = BTreeSet::new();
        {
            let mut stmt = self
                .conn
                .prepare("SELECT name FROM entities WHERE profile_id = ?1")?;
            let rows = stmt.query_map(params![profile_id], |row| row.get::<_, String>(0))?;
            for r in rows {
                let name = r?;
                graph.add_node(&name);
                known_entities.insert(name);
            }
            let mut stmt = self
                .conn
                .prepare("SELECT a, b, weight FROM entity_edges WHERE profile_id = ?1")?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok((
                    row.get::<_, String>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, f64>(2)?,
                ))
            })?;
            for r in rows {
                let (a, b, w) = r?;
                graph.add_edge(&a, &b, w);
            }
            let mut stmt = self.conn.prepare(
                "SELECT entity, memory_id FROM entity_mentions WHERE profile_id = ?1",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok((row.get::<_, String>(0)?, row.get::<_, i64>(1)?))
            })?;
            for r in rows {
                let (entity, memory_id) = r?;
                graph.add_mention(&entity, memory_id);
                if let Some(m) = memories.get_mut(&memory_id) {
                    m.entities.insert(entity);
                }
            }
        }

        let mut temporal = Vec::new();
        {
            let mut stmt = self.conn.prepare(
                "SELECT memory_id, observed_at, refers_to, valid_from, valid_until
                 FROM temporal_events WHERE profile_id = ?1 ORDER BY memory_id",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok(TemporalRecord {
                    memory_id: row.get(0)?,
                    observed_at: row.get(1)?,
                    refers_to: row.get(2)?,
                    valid_from: row.get(3)?,
                    valid_until: row.get(4)?,
                })
            })?;
            for r in rows {
                temporal.push(r?);
            }
        }

        let mut scenes: HashMap<i64, Vec<i64>> = HashMap::new();
        for m in memories.values() {
            if let Some(s) = m.scene_id {
                scenes.entry(s).or_default().push(m.id);
            }
        }

        let mut superseded = BTreeSet::new();
        {
            let mut stmt = self.conn.prepare(
                "SELECT DISTINCT old_memory_id FROM supersedes_edges WHERE profile_id = ?1",
            )?;
            let rows = stmt.query_map(params![profile_id], |row| row.get::<_, i64>(0))?;
            for r in rows {
                superseded.insert(r?);
            }
        }

        let mut profiles = HashMap::new();
        {
            let mut stmt = self
                .conn
                .prepare("SELECT entity, attributes FROM profiles WHERE profile_id = ?1")?;
            let rows = stmt.query_map(params![profile_id], |row| {
                Ok((row.get::<_, String>(0)?, row.get::<_, String>(1)?))
            })?;
            for r in rows {
                let (entity, attrs) = r?;
                let parsed: BTreeMap<String, (String, i64)> =
                    serde_json::from_str(&attrs).unwrap_or_default();
                profiles.insert(entity, parsed);
            }
        }

        Ok(Snapshot {
            profile_id: profile_id.to_string(),
            memories,
            bm25,
            graph,
            temporal,
            scenes,
            superseded,
            known_entities,
            profiles,
        })
    }

    // -- export / import ----------------------------------------------------

    /// Writes the whole store as line-delimited JSON records, one row per
    /// line, `{"table": ..., ...fields}`.
    pub fn export_jsonl(&self, out: &mut dyn std::io::Write) -> Result<()> {
        let mut dump = |table: &str, sql: &str| -> Result<()> {
            let mut stmt = self.conn.prepare(sql)?;
            let ncols = stmt.column_count();
            let names: Vec<String> = (0..ncols)
                .map(|i| stmt.column_name(i).unwrap_or("?").to_string())
                .collect();
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                let mut obj = serde_json::Map::new();
                obj.insert("table".into(), serde_json::Value::String(table.into()));
                for (i, name) in names.iter().enumerate() {
                    let v = match row.get_ref(i)? {
                        rusqlite::types::ValueRef::Null => serde_json::Value::Null,
                        rusqlite::types::ValueRef::Integer(x) => serde_json::Value::from(x),
                        rusqlite::types::ValueRef::Real(x) => serde_json::Value::from(x),
                        rusqlite::types::ValueRef::Text(t) => {
                            serde_json::Value::String(String::from_utf8_lossy(t).into_owned())
                        }
                        rusqlite::types::ValueRef::Blob(b) => {
                            serde_json::Value::String(format!("blob:{}", b.len()))
                        }
                    };
                    obj.insert(name.clone(), v);
                }
                writeln!(out, "{}", serde_json::Value::Object(obj))?;
            }
            Ok(())
        };
        for (table, sql) in Self::EXPORT_TABLES {
            dump(table, sql)?;
        }
        Ok(())
    }

    const EXPORT_TABLES: &'static [(&'static str, &'static str)] = &[
        ("memories", "SELECT * FROM memories ORDER BY id"),
        ("langevin_states", "SELECT * FROM langevin_states ORDER BY memory_id"),
        ("facts", "SELECT * FROM facts ORDER BY id"),
        ("entities", "SELECT * FROM entities ORDER BY profile_id, name"),
        ("entity_edges", "SELECT * FROM entity_edges ORDER BY profile_id, a, b"),
        (
            "entity_mentions",
            "SELECT * FROM entity_mentions ORDER BY profile_id, entity, memory_id",
        ),
        (
            "bm25_postings",
            "SELECT * FROM bm25_postings ORDER BY profile_id, memory_id, term",
        ),
        ("scenes", "SELECT * FROM scenes ORDER BY id"),
        ("temporal_events", "SELECT * FROM temporal_events ORDER BY memory_id"),
        (
            "supersedes_edges",
            "SELECT * FROM supersedes_edges ORDER BY profile_id, new_memory_id, old_memory_id",
        ),
        ("profiles", "SELECT * FROM profiles ORDER BY profile_id, entity"),
        ("provenance", "SELECT * FROM provenance ORDER BY memory_id"),
        ("observations", "SELECT * FROM observations ORDER BY memory_id"),
        ("config", "SELECT * FROM config ORDER BY profile_id, key"),
    ];

    /// Loads records produced by `export_jsonl` into this (empty) store.
    pub fn import_jsonl(&mut self, input: &mut dyn std::io::BufRead) -> Result<usize> {
        let tx = self.conn.transaction()?;
        let mut n = 0usize;
        let mut line = String::new();
        loop {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                break;
            }
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(&line)
                .map_err(|e| Error::Storage(format!("bad import line: {e}")))?;
            let obj = value
                .as_object()
                .ok_or_else(|| Error::Storage("import line is not an object".into()))?;
            let table = obj
                .get("table")
                .and_then(|t| t.as_str())
                .ok_or_else(|| Error::Storage("import line missing table".into()))?;
            if !Self::EXPORT_TABLES.iter().any(|(t, _)| *t == table) {
                return Err(Error::Storage(format!("unknown table {table:?}")));
            }
            let mut cols = Vec::new();
            let mut values: Vec<Box<dyn rusqlite::ToSql>> = Vec::new();
            for (k, v) in obj {
                if k == "table" {
                    continue;
                }
                cols.push(k.clone());
                let boxed: Box<dyn rusqlite::ToSql> = match v {
                    serde_json::Value::Null => Box::new(None::<i64>),
                    serde_json::Value::Bool(b) => Box::new(*b as i64),
                    serde_json::Value::Number(num) => {
                        if let Some(i) = num.as_i64() {
                            Box::new(i)
                        } else {
                            Box::new(num.as_f64().unwrap_or(0.0))
                        }
                    }
                    serde_json::Value::String(s) => Box::new(s.clone()),
                    other => Box::new(other.to_string()),
                };
                values.push(boxed);
            }
            let placeholders: Vec<String> =
                (1..=cols.len()).map(|i| format!("?{i}")).collect();
            let sql = format!(
                "INSERT INTO {table}({}) VALUES ({})",
                cols.join(","),
                placeholders.join(",")
            );
            let refs: Vec<&dyn rusqlite::ToSql> = values.iter().map(|b| b.as_ref()).collect();
            tx.execute(&sql, refs.as_slice())?;
            n += 1;
        }
        tx.commit()?;
        self.snapshots.borrow_mut().clear();
        Ok(n)
    }

    /// Row counts for one profile, for the stats surface.
    pub fn stats(&self, profile_id: &str) -> Result<StoreStats> {
        let count = |sql: &str| -> Result<usize> {
            let n: i64 = self.conn.query_row(sql, params![profile_id], |row| row.get(0))?;
            Ok(n as usize)
        };
        Ok(StoreStats {
            memories: count("SELECT COUNT(*) FROM memories WHERE profile_id = ?1")?,
            facts: count("SELECT COUNT(*) FROM facts WHERE profile_id = ?1")?,
            entities: count("SELECT COUNT(*) FROM entities WHERE profile_id = ?1")?,
            entity_edges: count("SELECT COUNT(*) FROM entity_edges WHERE profile_id = ?1")?,
            scenes: count("SELECT COUNT(*) FROM scenes WHERE profile_id = ?1")?,
            supersedes_edges: count(
                "SELECT COUNT(*) FROM supersedes_edges WHERE profile_id = ?1",
            )?,
            lifecycle: self.lifecycle_counts(profile_id)?,
        })
    }

    /// All supersedes edges of a profile as (new, old, kappa).
    pub fn supersedes_edges(&self, profile_id: &str) -> Result<Vec<(i64, i64, f64)>> {
        let mut stmt = self.conn.prepare(
            "SELECT new_memory_id, old_memory_id, kappa FROM supersedes_edges
             WHERE profile_id = ?1 ORDER BY new_memory_id, old_memory_id",
        )?;
        let rows = stmt.query_map(params![profile_id], |row| {
            Ok((row.get(0)?, row.get(1)?, row.get(2)?))
        })?;
        let mut out = Vec::new();
        for r in rows {
            out.push(r?);
        }
        Ok(out)
    }

    /// Referential-integrity audit used by the durability tests: every
    /// dependent row must point at an existing memory.
    pub fn integrity_violations(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let checks = [
            ("facts", "memory_id"),
            ("bm25_postings", "memory_id"),
            ("entity_mentions", "memory_id"),
            ("temporal_events", "memory_id"),
            ("langevin_states", "memory_id"),
            ("provenance", "memory_id"),
            ("observations", "memory_id"),
            ("supersedes_edges", "new_memory_id"),
            ("supersedes_edges", "old_memory_id"),
        ];
        for (table, col) in checks {
            let n: i64 = self.conn.query_row(
                &format!(
                    "SELECT COUNT(*) FROM {table} t
                     WHERE NOT EXISTS (SELECT 1 FROM memories m WHERE m.id = t.{col})"
                ),
                [],
                |row| row.get(0),
            )?;
            if n > 0 {
                out.push(format!("{table}.{col}: {n} dangling rows"));
            }
        }
        Ok(out)
    }
}

/// Entropy gate decision, exposed for tests and the CLI.
pub fn entropy_gate(content: &str, threshold_bits: f64, min_tokens: usize) -> (bool, f64) {
    let (bits, count) = token_entropy_bits(content);
    (count >= min_tokens && bits >= threshold_bits, bits)
}

/// Per-profile row counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreStats {
    pub memories: usize,
    pub facts: usize,
    pub entities: usize,
    pub entity_edges: usize,
    pub scenes: usize,
    pub supersedes_edges: usize,
    pub lifecycle: BTreeMap<String, usize>,
}
