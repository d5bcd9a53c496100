//! Cellular sheaf over the context graph: coboundary operator, scalar
//! contradiction score, H¹ dimension, and the store-time supersedes check.
//!
//! The context graph is treated as a 1-complex (no 2-cells), so H¹ is the
//! cokernel of the vertex-to-edge coboundary.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerator/denominator regularizer of the contradiction score.
pub const KAPPA_EPS: f64 = 1e-9;

/// Default contradiction threshold for supersedes creation.
pub const DEFAULT_TAU: f64 = 0.45;

/// Linear restriction map attached to an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RestrictionMap {
    Identity,
    /// Componentwise scaling; length must equal the stalk dimension.
    Diagonal(Vec<f64>),
}

impl RestrictionMap {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            RestrictionMap::Identity => v.to_vec(),
            RestrictionMap::Diagonal(d) => v.iter().zip(d).map(|(x, s)| x * s).collect(),
        }
    }

    fn is_identity(&self) -> bool {
        matches!(self, RestrictionMap::Identity)
    }
}

/// Graph of memory contexts with per-edge restriction maps and a section
/// assigning one stalk vector per vertex.
#[derive(Debug, Clone)]
pub struct ContextSheaf {
    stalk_dim: usize,
    vertex_ids: Vec<String>,
    vertex_index: HashMap<String, usize>,
    edges: Vec<(usize, usize, RestrictionMap)>,
    section: HashMap<usize, Vec<f64>>,
}

/// Diagnosis emitted by the consistency layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub kappa: f64,
    pub h1_dim: usize,
    /// (edge endpoints, discrepancy norm), sorted by descending norm.
    pub offending_edges: Vec<((String, String), f64)>,
}

/// Instruction to record a supersedes link from a newly ingested memory to
/// an older contradicted one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersedesDirective {
    pub old_memory_id: i64,
    pub kappa: f64,
}

impl ContextSheaf {
    pub fn new(stalk_dim: usize) -> Self {
        Self {
            stalk_dim,
            vertex_ids: Vec::new(),
            vertex_index: HashMap::new(),
            edges: Vec::new(),
            section: HashMap::new(),
        }
    }

    pub fn stalk_dim(&self) -> usize {
        self.stalk_dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn add_vertex(&mut self, id: &str) -> usize {
        if let Some(&ix) = self.vertex_index.get(id) {
            return ix;
        }
        let ix = self.vertex_ids.len();
        self.vertex_ids.push(id.to_string());
        self.vertex_index.insert(id.to_string(), ix);
        ix
    }

    pub fn add_edge(&mut self, u: &str, v: &str, map: RestrictionMap) -> Result<()> {
        let ui = *self
            .vertex_index
            .get(u)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown vertex {u:?}")))?;
        let vi = *self
            .vertex_index
            .get(v)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown vertex {v:?}")))?;
        if let RestrictionMap::Diagonal(d) = &map {
            if d.len() != self.stalk_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.stalk_dim,
                    got: d.len(),
                });
            }
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite restriction map".into()));
            }
        }
        self.edges.push((ui, vi, map));
        Ok(())
    }

    pub fn set_section(&mut self, v: &str, value: Vec<f64>) -> Result<()> {
        if value.len() != self.stalk_dim {
            return Err(Error::DimensionMismatch {
                expected: self.stalk_dim,
                got: value.len(),
            });
        }
        let vi = *self
            .vertex_index
            .get(v)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown vertex {v:?}")))?;
        self.section.insert(vi, value);
        Ok(())
    }

    /// (δf)(u,v) = ρ_{u→v}(f(u)) − f(v) for every edge, in insertion order.
    pub fn coboundary(&self) -> Result<Vec<((String, String), Vec<f64>)>> {
        let mut out = Vec::with_capacity(self.edges.len());
        for (u, v, map) in &self.edges {
            let fu = self.section.get(u).ok_or_else(|| {
                Error::InvalidArgument(format!("no section at {:?}", self.vertex_ids[*u]))
            })?;
            let fv = self.section.get(v).ok_or_else(|| {
                Error::InvalidArgument(format!("no section at {:?}", self.vertex_ids[*v]))
            })?;
            let mapped = map.apply(fu);
            let diff: Vec<f64> = mapped.iter().zip(fv).map(|(a, b)| a - b).collect();
            out.push((
                (self.vertex_ids[*u].clone(), self.vertex_ids[*v].clone()),
                diff,
            ));
        }
        Ok(out)
    }

    /// κ = ‖δf‖² / (‖f‖² + ε). Empty graphs score 0 by convention.
    pub fn contradiction_score(&self) -> Result<f64> {
        if self.vertex_ids.is_empty() {
            return Ok(0.0);
        }
        let delta = self.coboundary()?;
        let num: f64 = delta
            .iter()
            .flat_map(|(_, d)| d.iter())
            .map(|x| x * x)
            .sum();
        let den: f64 = self
            .section
            .values()
            .flat_map(|f| f.iter())
            .map(|x| x * x)
            .sum();
        Ok(num / (den + KAPPA_EPS))
    }

    /// dim H¹ = |E|·d − rank(δ₀), with rank measured by singular values
    /// above 1e−10 · σ_max.
    pub fn h1_dimension(&self) -> usize {
        if self.edges.is_empty() {
            return 0;
        }
        let d = self.stalk_dim;
        let rows = self.edges.len() * d;
        let cols = self.vertex_ids.len() * d;
        let mut m = DMatrix::<f64>::zeros(rows, cols);
        for (e, (u, v, map)) in self.edges.iter().enumerate() {
            for k in 0..d {
                let row = e * d + k;
                match map {
                    RestrictionMap::Identity => m[(row, u * d + k)] += 1.0,
                    RestrictionMap::Diagonal(diag) => m[(row, u * d + k)] += diag[k],
                }
                m[(row, v * d + k)] -= 1.0;
            }
        }
        let svd = m.svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        if smax == 0.0 {
            return rows;
        }
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * smax)
            .count();
        rows - rank
    }

    /// Full diagnosis of the current section.
    pub fn report(&self) -> Result<ConsistencyReport> {
        let kappa = self.contradiction_score()?;
        let h1_dim = self.h1_dimension();
        let mut offending: Vec<((String, String), f64)> = if self.section.len()
            == self.vertex_ids.len()
        {
            self.coboundary()?
                .into_iter()
                .map(|(edge, diff)| {
                    let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (edge, norm)
                })
                .collect()
        } else {
            Vec::new()
        };
        offending.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(ConsistencyReport {
            kappa,
            h1_dim,
            offending_edges: offending,
        })
    }

    /// True when every restriction map is the identity.
    pub fn all_identity(&self) -> bool {
        self.edges.iter().all(|(_, _, m)| m.is_identity())
    }
}

/// One existing fact assertion visible to the consistency check.
#[derive(Debug, Clone)]
pub struct FactObservation {
    pub context: String,
    pub memory_id: i64,
    pub created_at: i64,
    pub embedding: Vec<f64>,
}

/// Builds the local sheaf over contexts that assert facts about one entity
/// (complete graph, identity maps, stalk value = mean fact embedding per
/// context) and scores the section including the incoming fact.
///
/// When κ exceeds `tau`, the directive targets the oldest memory behind the
/// maximal-discrepancy edge incident to the new fact's context.
pub fn check_new_fact(
    existing: &[FactObservation],
    new_context: &str,
    new_embedding: &[f64],
    tau: f64,
) -> Result<(ConsistencyReport, Option<SupersedesDirective>)> {
    let d = new_embedding.len();
    if d == 0 {
        return Err(Error::InvalidArgument("empty fact embedding".into()));
    }
    for f in existing {
        if f.embedding.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.embedding.len(),
            });
        }
    }

    // Stalk values: mean embedding per context, the new fact folded into its
    // own context.
    let mut sums: HashMap<String, (Vec<f64>, usize)> = HashMap::new();
    for f in existing {
        let entry = sums
            .entry(f.context.clone())
            .or_insert_with(|| (vec![0.0; d], 0));
        for (acc, x) in entry.0.iter_mut().zip(&f.embedding) {
            *acc += x;
        }
        entry.1 += 1;
    }
    {
        let entry = sums
            .entry(new_context.to_string())
            .or_insert_with(|| (vec![0.0; d], 0));
        for (acc, x) in entry.0.iter_mut().zip(new_embedding) {
            *acc += x;
        }
        entry.1 += 1;
    }

    let mut contexts: Vec<String> = sums.keys().cloned().collect();
    contexts.sort();

    let mut sheaf = ContextSheaf::new(d);
    for c in &contexts {
        sheaf.add_vertex(c);
        let (sum, n) = &sums[c];
        sheaf.set_section(c, sum.iter().map(|x| x / *n as f64).collect())?;
    }
    for i in 0..contexts.len() {
        for j in (i + 1)..contexts.len() {
            sheaf.add_edge(&contexts[i], &contexts[j], RestrictionMap::Identity)?;
        }
    }

    let report = sheaf.report()?;
    if report.kappa <= tau {
        return Ok((report, None));
    }

    // Discrepancy of each existing memory = norm on the edge between its
    // context and the new context; ties resolved to the oldest memory.
    let edge_norm = |ctx: &str| -> f64 {
        report
            .offending_edges
            .iter()
            .find(|((a, b), _)| {
                (a == new_context && b == ctx) || (b == new_context && a == ctx)
            })
            .map(|(_, n)| *n)
            .unwrap_or(0.0)
    };
    let target = existing
        .iter()
        .filter(|f| f.context != new_context)
        .map(|f| (edge_norm(&f.context), f))
        .max_by(|(na, fa), (nb, fb)| {
            na.partial_cmp(nb)
                .unwrap()
                .then(fb.created_at.cmp(&fa.created_at))
                .then(fb.memory_id.cmp(&fa.memory_id))
        })
        .map(|(_, f)| f);

    let directive = target.map(|f| SupersedesDirective {
        old_memory_id: f.memory_id,
        kappa: report.kappa,
    });
    Ok((report, directive))
}
