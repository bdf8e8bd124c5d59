//! JSON schemas for spaces, chains, homotopies, towers, and structured
//! results. All reals serialize as decimal through `f64`; the concrete
//! aliases at the crate root are the wire types.

use crate::chains::{BasicMove, Chain, Homotopy};
use crate::cover::{CoverStatus, CoveringGraph, LiftResult};
use crate::metric::{FiniteMetricSpace, MetricError};
use crate::nullity::{NullVerdict, OracleVerdict};
use crate::tower::{Tower, TowerError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

/// `{"labels": [...]?, "dist": [[...]]}` or
/// `{"graph": {"n": n, "edges": [[i,j,w],...]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceJson {
    Graph {
        graph: GraphJson,
        #[serde(skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Dist {
        dist: Vec<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn space_to_json(space: &FiniteMetricSpace<f64>) -> SpaceJson {
    if let Some(edges) = space.source_edges() {
        return SpaceJson::Graph {
            graph: GraphJson { n: space.len(), edges: edges.to_vec() },
            labels: space.labels().map(|l| l.to_vec()),
        };
    }
    let n = space.len();
    let dist = (0..n)
        .map(|i| (0..n).map(|j| space.dist(i, j)).collect())
        .collect();
    SpaceJson::Dist { dist, labels: space.labels().map(|l| l.to_vec()) }
}

pub fn space_from_json(json: &SpaceJson) -> Result<FiniteMetricSpace<f64>, IoError> {
    match json {
        SpaceJson::Graph { graph, labels } => {
            Ok(FiniteMetricSpace::from_graph(graph.n, &graph.edges, labels.clone())?)
        }
        SpaceJson::Dist { dist, labels } => {
            Ok(FiniteMetricSpace::build(dist, labels.clone())?)
        }
    }
}

/// `{"scale": r, "points": [i,...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainJson {
    pub scale: f64,
    pub points: Vec<usize>,
}

impl From<&Chain<f64>> for ChainJson {
    fn from(c: &Chain<f64>) -> Self {
        ChainJson { scale: c.scale, points: c.points.clone() }
    }
}

impl From<&ChainJson> for Chain<f64> {
    fn from(j: &ChainJson) -> Self {
        Chain { scale: j.scale, points: j.points.clone() }
    }
}

/// `{"start": chain, "moves": [{"op":"ins","pos":p,"pt":q} |
/// {"op":"rem","pos":p}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomotopyJson {
    pub start: ChainJson,
    pub moves: Vec<BasicMove>,
}

impl From<&Homotopy<f64>> for HomotopyJson {
    fn from(h: &Homotopy<f64>) -> Self {
        HomotopyJson { start: (&h.start).into(), moves: h.moves.clone() }
    }
}

impl From<&HomotopyJson> for Homotopy<f64> {
    fn from(j: &HomotopyJson) -> Self {
        Homotopy { start: (&j.start).into(), moves: j.moves.clone() }
    }
}

/// `{"indices": [...], "stages": [space,...], "bonds": [[...],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerJson {
    pub indices: Vec<f64>,
    pub stages: Vec<SpaceJson>,
    pub bonds: Vec<Vec<usize>>,
}

pub fn tower_to_json(tower: &Tower<f64>) -> TowerJson {
    let stages = (0..tower.stage_count()).map(|i| space_to_json(tower.stage(i))).collect();
    let bonds = (0..tower.stage_count().saturating_sub(1))
        .map(|i| tower.bond_map(i, i + 1).expect("consecutive bond"))
        .collect();
    TowerJson { indices: tower.indices().to_vec(), stages, bonds }
}

pub fn tower_from_json(json: &TowerJson) -> Result<Tower<f64>, IoError> {
    let stages = json
        .stages
        .iter()
        .map(space_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Tower::new(json.indices.clone(), stages, json.bonds.clone())?)
}

/// Verdict payload of a nullity decision.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum NullVerdictJson {
    Null { witness: HomotopyJson },
    NonNull { h1_class: Vec<i64>, moduli: Vec<(usize, i64)> },
    Unknown { budget_spent: usize },
}

pub fn null_verdict_to_json(v: &NullVerdict<f64>) -> NullVerdictJson {
    match v {
        NullVerdict::Null { witness } => NullVerdictJson::Null { witness: witness.into() },
        NullVerdict::NonNull { certificate } => NullVerdictJson::NonNull {
            h1_class: certificate.residue.clone(),
            moduli: certificate.moduli.clone(),
        },
        NullVerdict::Unknown { budget_spent } => {
            NullVerdictJson::Unknown { budget_spent: *budget_spent }
        }
    }
}

/// Verdict payload of the brute-force oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdictJson {
    Null { witness: HomotopyJson },
    NonNullWithinBound { states: usize },
    Exhausted { states: usize },
}

pub fn oracle_verdict_to_json(v: &OracleVerdict<f64>) -> OracleVerdictJson {
    match v {
        OracleVerdict::Null { witness } => OracleVerdictJson::Null { witness: witness.into() },
        OracleVerdict::NonNullWithinBound { states } => {
            OracleVerdictJson::NonNullWithinBound { states: *states }
        }
        OracleVerdict::Exhausted { states } => OracleVerdictJson::Exhausted { states: *states },
    }
}

/// `{status, vertices, fibers, edges}` of a covering graph. Edges are
/// `[from_vertex, label_point, to_vertex]`, sorted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverJson {
    pub status: CoverStatusJson,
    pub scale: f64,
    pub basepoint: usize,
    pub basepoint_vertex: usize,
    pub vertices: Vec<CoverVertexJson>,
    pub fibers: Vec<(usize, Vec<usize>)>,
    pub edges: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverStatusJson {
    Complete,
    Truncated { radius: usize, dedup_exact: bool },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverVertexJson {
    pub id: usize,
    pub endpoint: usize,
}

pub fn cover_to_json(space: &FiniteMetricSpace<f64>, cover: &CoveringGraph<f64>) -> CoverJson {
    let status = match cover.status() {
        CoverStatus::Complete => CoverStatusJson::Complete,
        CoverStatus::Truncated { radius, dedup_exact } => {
            CoverStatusJson::Truncated { radius, dedup_exact }
        }
    };
    let vertices = (0..cover.vertex_count())
        .map(|id| CoverVertexJson { id, endpoint: cover.endpoint(id) })
        .collect();
    let mut fibers = Vec::new();
    for &p in &cover.presentation().component {
        fibers.push((p, cover.fiber(p)));
    }
    let mut edges = Vec::new();
    for v in 0..cover.vertex_count() {
        for &q in &cover.presentation().component {
            if let Ok(Some(t)) = cover.edge(space, v, q) {
                edges.push((v, q, t));
            }
        }
    }
    edges.sort_unstable();
    CoverJson {
        status,
        scale: cover.scale(),
        basepoint: cover.basepoint(),
        basepoint_vertex: cover.basepoint_vertex(),
        vertices,
        fibers,
        edges,
    }
}

/// Result of a chain lift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftJson {
    pub vertices: Vec<usize>,
    pub end: usize,
}

impl From<&LiftResult> for LiftJson {
    fn from(l: &LiftResult) -> Self {
        LiftJson { vertices: l.vertices.clone(), end: l.end }
    }
}
