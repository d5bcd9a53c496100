//! End-to-end store and retrieval flows against a real database file.

use std::collections::HashMap;

use geomem_core::adapters::{Embedder, Reranker};
use geomem_core::config::{AblationToggles, EngineConfig};
use geomem_core::error::Error;
use geomem_core::fusion::{retrieve, FusionParams};
use geomem_core::langevin::LifecycleState;
use geomem_core::store::{
    entropy_gate, EraseSelector, FaultPoint, StoreHandle, StoreMetadata, StoreOutcome,
};
use tempfile::TempDir;

const DIM: usize = 64;

fn open_store(dir: &TempDir) -> StoreHandle {
    StoreHandle::open(
        dir.path().join("mem.db"),
        EngineConfig::for_dim(DIM),
        Embedder::hash_feature(DIM),
    )
    .unwrap()
}

fn meta() -> StoreMetadata {
    StoreMetadata::default()
}

fn default_retrieve(
    store: &StoreHandle,
    profile: &str,
    query: &str,
    top_k: usize,
) -> geomem_core::fusion::RetrievalResult {
    retrieve(
        store,
        &Reranker::LexicalOverlap,
        &FusionParams::default(),
        profile,
        query,
        top_k,
        AblationToggles::default(),
    )
    .unwrap()
}

#[test]
fn low_entropy_content_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let outcome = store.store("p", "aaaa aaaa aaaa", &meta()).unwrap();
    match outcome {
        StoreOutcome::Rejected { gate, .. } => assert_eq!(gate, "entropy_gate"),
        StoreOutcome::Stored(_) => panic!("single-symbol content must be gated"),
    }
    assert_eq!(store.memory_count("p").unwrap(), 0);

    // two tokens at 50/50 carry one bit, still under the default threshold
    let outcome = store.store("p", "ping pong", &meta()).unwrap();
    assert!(outcome.stored().is_none());

    let (pass, bits) = entropy_gate("alpha beta gamma delta", 1.5, 3);
    assert!(pass && (bits - 2.0).abs() < 1e-12);
}

#[test]
fn first_store_initialization_contract() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let record = store
        .store("p", "Alice met Bob at the harbor office", &meta())
        .unwrap();
    let record = record.stored().unwrap().clone();
    assert_eq!(record.n_access, 0);
    assert_eq!(record.lifecycle, LifecycleState::Active);
    assert_eq!(record.langevin.xi.norm(), 0.0);
    assert!(record.entities.contains("alice"));
    assert!(record.entities.contains("bob"));
    assert_eq!(record.t_created, record.t_accessed);
}

#[test]
fn contradictory_fact_creates_supersedes_edge() {
    let dir = TempDir::new().unwrap();
    let table: HashMap<String, Vec<f64>> = [
        ("Alice lives in Paris".to_string(), vec![1.0, 0.0]),
        ("alice lives in paris".to_string(), vec![1.0, 0.0]),
        ("Alice lives in Berlin".to_string(), vec![0.0, 1.0]),
        ("alice lives in berlin".to_string(), vec![0.0, 1.0]),
    ]
    .into();
    let mut store = StoreHandle::open(
        dir.path().join("mem.db"),
        EngineConfig::for_dim(2),
        Embedder::precomputed(2, table),
    )
    .unwrap();
    // relax the gate: these sentences are short
    store.config.entropy_gate.threshold_bits = 0.5;

    let first = store
        .store("p", "Alice lives in Paris", &meta())
        .unwrap()
        .stored()
        .unwrap()
        .clone();
    let second = store
        .store("p", "Alice lives in Berlin", &meta())
        .unwrap()
        .stored()
        .unwrap()
        .clone();

    let snapshot = store.snapshot("p").unwrap();
    assert!(snapshot.superseded.contains(&first.id));
    assert!(!snapshot.superseded.contains(&second.id));
}

#[test]
fn record_access_counts_and_boosts() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let id = store
        .store("p", "the quick brown fox jumps over fences", &meta())
        .unwrap()
        .stored()
        .unwrap()
        .id;
    let once = store.record_access("p", id).unwrap();
    assert_eq!(once.n_access, 1);
    for _ in 0..9 {
        store.record_access("p", id).unwrap();
    }
    let ten = store.load_memory("p", id).unwrap();
    assert_eq!(ten.n_access, 10);
    assert!(ten.t_accessed >= ten.t_created);
    assert_eq!(ten.lifecycle, LifecycleState::Active);
    assert!(matches!(
        store.record_access("p", 424242),
        Err(Error::UnknownMemory(_))
    ));
}

#[test]
fn erase_cascades_and_isolates() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    for i in 0..5 {
        store
            .store(
                "keep",
                &format!("keeper record number {i} stays around forever"),
                &meta(),
            )
            .unwrap();
        store
            .store(
                "gone",
                &format!("victim record number {i} disappears completely"),
                &meta(),
            )
            .unwrap();
    }
    assert_eq!(store.erase("gone", &EraseSelector::Memory(999_999)).unwrap(), 0);
    let erased = store
        .erase("gone", &EraseSelector::Profile("gone".into()))
        .unwrap();
    assert_eq!(erased, 5);
    assert_eq!(store.memory_count("gone").unwrap(), 0);
    assert_eq!(store.memory_count("keep").unwrap(), 5);
    assert!(store.integrity_violations().unwrap().is_empty());

    let gone = default_retrieve(&store, "gone", "victim record number", 10);
    assert!(gone.results.is_empty());
    let keep = default_retrieve(&store, "keep", "keeper record number", 10);
    assert!(!keep.results.is_empty());

    // postings for erased docs are gone: rebuild sees an empty index
    let snapshot = store.snapshot("gone").unwrap();
    assert_eq!(snapshot.bm25.doc_count(), 0);
}

#[test]
fn durability_across_reopen() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("mem.db");
    let id = {
        let mut store = StoreHandle::open(
            &path,
            EngineConfig::for_dim(DIM),
            Embedder::hash_feature(DIM),
        )
        .unwrap();
        let id = store
            .store("p", "durable little record about sailing ships", &meta())
            .unwrap()
            .stored()
            .unwrap()
            .id;
        store.close();
        id
    };
    let store = StoreHandle::open(
        &path,
        EngineConfig::for_dim(DIM),
        Embedder::hash_feature(DIM),
    )
    .unwrap();
    let record = store.load_memory("p", id).unwrap();
    assert!(record.content.contains("sailing"));
}

#[test]
fn compact_preserves_results_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    for i in 0..20 {
        store
            .store(
                "p",
                &format!("compaction subject {i} holds varied tokens alpha{i}"),
                &meta(),
            )
            .unwrap();
    }
    let before = default_retrieve(&store, "p", "compaction subject tokens", 10);
    store.compact().unwrap();
    let after = default_retrieve(&store, "p", "compaction subject tokens", 10);
    assert_eq!(before.results.len(), after.results.len());
    for (a, b) in before.results.iter().zip(&after.results) {
        assert_eq!(a.memory_id, b.memory_id);
        assert_eq!(a.score, b.score);
    }
}

#[test]
fn second_writer_gets_busy_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("mem.db");
    let mut writer = StoreHandle::open(
        &path,
        EngineConfig::for_dim(DIM),
        Embedder::hash_feature(DIM),
    )
    .unwrap();
    writer
        .store("p", "initial content sets up the schema nicely", &meta())
        .unwrap();

    // a raw connection holding the write lock
    let blocker = rusqlite::Connection::open(&path).unwrap();
    blocker.execute_batch("BEGIN IMMEDIATE").unwrap();

    let result = writer.store("p", "second writer should be refused now", &meta());
    assert!(matches!(result, Err(Error::Busy)), "got {result:?}");
    blocker.execute_batch("COMMIT").unwrap();

    // and succeeds once the lock is released
    writer
        .store("p", "second writer succeeds after release", &meta())
        .unwrap();
}

#[test]
fn fault_injection_leaves_no_partial_record() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    store
        .store("p", "baseline record keeps the store non empty", &meta())
        .unwrap();
    let count_before = store.memory_count("p").unwrap();

    for step in 1..=11u8 {
        let result = store.store_with_fault(
            "p",
            &format!("doomed record at step {step} with extra words"),
            &meta(),
            Some(FaultPoint::BeforeStep(step)),
        );
        assert!(result.is_err(), "fault before step {step} must surface");
        assert_eq!(store.memory_count("p").unwrap(), count_before);
        assert!(store.integrity_violations().unwrap().is_empty());
    }
    for writes in 1..=9u8 {
        let result = store.store_with_fault(
            "p",
            &format!("doomed record mid persist {writes} with extra words"),
            &StoreMetadata {
                source_document: Some("doc.txt".into()),
                ..StoreMetadata::default()
            },
            Some(FaultPoint::MidPersist(writes)),
        );
        assert!(result.is_err());
        assert_eq!(store.memory_count("p").unwrap(), count_before);
        assert!(store.integrity_violations().unwrap().is_empty());
    }

    // the same content stores cleanly afterwards
    let ok = store
        .store("p", "doomed record at step 3 with extra words", &meta())
        .unwrap();
    assert!(ok.stored().is_some());
}

#[test]
fn export_import_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    for i in 0..10 {
        store
            .store(
                "p",
                &format!("Exported Fact{i} travels between stores cleanly {i}"),
                &StoreMetadata {
                    session_id: Some(format!("sess-{}", i % 3)),
                    source_document: Some("ledger.txt".into()),
                    ..StoreMetadata::default()
                },
            )
            .unwrap();
    }
    let before = default_retrieve(&store, "p", "exported travels between stores", 10);

    let mut buf = Vec::new();
    store.export_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("table").is_some(), "line missing table: {line}");
    }

    let dir2 = TempDir::new().unwrap();
    let mut fresh = StoreHandle::open(
        dir2.path().join("mem.db"),
        EngineConfig::for_dim(DIM),
        Embedder::hash_feature(DIM),
    )
    .unwrap();
    let rows = fresh.import_jsonl(&mut std::io::BufReader::new(&buf[..])).unwrap();
    assert!(rows > 0);
    let after = default_retrieve(&fresh, "p", "exported travels between stores", 10);
    assert_eq!(before.results.len(), after.results.len());
    for (a, b) in before.results.iter().zip(&after.results) {
        assert_eq!(a.memory_id, b.memory_id);
        assert_eq!(a.score, b.score);
    }
}

#[test]
fn empty_store_retrieves_nothing() {
    let dir = TempDir::new().unwrap();
    let store = open_store(&dir);
    let result = default_retrieve(&store, "p", "anything at all", 10);
    assert!(result.results.is_empty());
}

#[test]
fn self_query_ranks_first_on_small_corpus() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let fillers = [
        "gardening tips for rainy northern summers",
        "annual finance report shows revenue growth",
        "the museum opened a new sculpture wing",
        "recipe collection for slow cooker meals",
        "notes from the robotics club meeting",
        "travel itinerary across coastal villages",
        "guitar practice routine for beginners",
        "database migration checklist and rollback plan",
        "birdwatching log from the estuary walk",
    ];
    for f in fillers {
        store.store("p", f, &meta()).unwrap();
    }
    let needle = "quantum chemistry seminar covers orbital theory";
    let id = store.store("p", needle, &meta()).unwrap().stored().unwrap().id;

    let result = default_retrieve(&store, "p", needle, 20);
    assert_eq!(result.results[0].memory_id, id, "trace: {:?}", result.trace);
}

#[test]
fn channel_toggles_reflected_in_trace() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    for i in 0..5 {
        store
            .store("p", &format!("tracing content number {i} for toggles"), &meta())
            .unwrap();
    }
    let mut toggles = AblationToggles::default();
    toggles.set("entity_off");
    let result = retrieve(
        &store,
        &Reranker::LexicalOverlap,
        &FusionParams::default(),
        "p",
        "tracing content number",
        10,
        toggles,
    )
    .unwrap();
    assert_eq!(result.trace.channels.len(), 3);
    assert!(result
        .trace
        .channels
        .iter()
        .all(|c| c.channel != "entity"));

    let full = default_retrieve(&store, "p", "tracing content number", 10);
    assert_eq!(full.trace.channels.len(), 4);
}

#[test]
fn retrieval_deterministic_on_fixed_state() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    for i in 0..30 {
        store
            .store(
                "p",
                &format!("deterministic retrieval corpus entry {i} alpha beta"),
                &meta(),
            )
            .unwrap();
    }
    let a = default_retrieve(&store, "p", "retrieval corpus entry alpha", 10);
    let b = default_retrieve(&store, "p", "retrieval corpus entry alpha", 10);
    assert_eq!(a.results.len(), b.results.len());
    for (x, y) in a.results.iter().zip(&b.results) {
        assert_eq!(x.memory_id, y.memory_id);
        assert_eq!(x.score, y.score);
    }
}

#[test]
fn profile_lookup_shortcut_surfaces_attribute_memory() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let id = store
        .store("p", "Alice works in the observatory lab building", &meta())
        .unwrap()
        .stored()
        .unwrap()
        .id;
    for i in 0..10 {
        store
            .store("p", &format!("unrelated chatter about weather {i} today"), &meta())
            .unwrap();
    }
    let result = default_retrieve(&store, "p", "What is Alice's works?", 5);
    assert_eq!(result.results[0].memory_id, id);
    assert_eq!(
        result.results[0].origin,
        geomem_core::fusion::CandidateOrigin::ProfileLookup
    );
}

#[test]
fn scene_mates_pulled_in() {
    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let doc = StoreMetadata {
        source_document: Some("dinner.txt".into()),
        timestamp: Some(1_700_000_000),
        ..StoreMetadata::default()
    };
    let a = store
        .store("p", "dinner party started with roasted chestnut soup", &doc)
        .unwrap()
        .stored()
        .unwrap()
        .id;
    let b = store
        .store("p", "later the guests argued about telescope optics", &doc)
        .unwrap()
        .stored()
        .unwrap()
        .id;
    let c = store
        .store("p", "dessert was a lopsided but beloved plum cake", &doc)
        .unwrap()
        .stored()
        .unwrap()
        .id;
    for i in 0..8 {
        store
            .store("p", &format!("noise entry {i} about commuting trains"), &meta())
            .unwrap();
    }
    let result = default_retrieve(&store, "p", "roasted chestnut soup", 20);
    let ids: Vec<i64> = result.results.iter().map(|r| r.memory_id).collect();
    assert_eq!(ids[0], a);
    assert!(ids.contains(&b), "scene mate missing: {ids:?}");
    assert!(ids.contains(&c), "scene mate missing: {ids:?}");
}

#[test]
fn two_profile_interleaved_fuzz_no_leakage() {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let dir = TempDir::new().unwrap();
    let mut store = open_store(&dir);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let profiles = ["pa", "pb"];
    let mut stored: HashMap<&str, Vec<i64>> = HashMap::new();

    for op in 0..1000 {
        let profile = profiles[rng.gen_range(0..2)];
        match rng.gen_range(0..10) {
            0..=5 => {
                let content = format!(
                    "{profile} owned entry {op} with words w{}a w{}b w{}c",
                    op,
                    op * 3 + 1,
                    op * 7 + 2
                );
                if let StoreOutcome::Stored(r) = store.store(profile, &content, &meta()).unwrap() {
                    stored.entry(profile).or_default().push(r.id);
                }
            }
            6..=7 => {
                if let Some(ids) = stored.get(profile) {
                    if !ids.is_empty() {
                        let id = ids[rng.gen_range(0..ids.len())];
                        store.record_access(profile, id).unwrap();
                    }
                }
            }
            8 => {
                if let Some(ids) = stored.get_mut(profile) {
                    if !ids.is_empty() {
                        let ix = rng.gen_range(0..ids.len());
                        let id = ids.remove(ix);
                        store.erase(profile, &EraseSelector::Memory(id)).unwrap();
                    }
                }
            }
            _ => {
                let result = default_retrieve(&store, profile, "owned entry with words", 20);
                let own = stored.get(profile).cloned().unwrap_or_default();
                for r in &result.results {
                    assert!(
                        own.contains(&r.memory_id),
                        "profile {profile} saw foreign memory {} at op {op}",
                        r.memory_id
                    );
                    assert!(r.content.starts_with(profile));
                }
            }
        }
    }
    assert!(store.integrity_violations().unwrap().is_empty());
}
