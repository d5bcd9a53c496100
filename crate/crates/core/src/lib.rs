//! geomem: an embeddable, local-first agent memory engine.
//!
//! Retrieval runs four parallel channels (variance-weighted semantic, BM25
//! keyword, entity-graph spreading activation, temporal proximity) fused by
//! weighted reciprocal rank fusion, with scene expansion, bridge discovery
//! and reranker blending on top. Memory lifecycle follows Riemannian
//! Langevin dynamics on the Poincaré ball, and cross-context contradictions
//! are caught at store time by a cellular-sheaf consistency check.
//!
//! Everything runs on CPU against a single database file; the built-in
//! adapters need no network and no model weights.

pub mod adapters;
pub mod analysis;
pub mod channels;
pub mod config;
pub mod error;
pub mod extract;
pub mod fusion;
pub mod hyperbolic;
pub mod infogeo;
pub mod langevin;
pub mod sheaf;
pub mod store;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
