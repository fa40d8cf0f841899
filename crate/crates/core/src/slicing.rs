//! Circle- and domain-restricted views of the base graph.
//!
//! A [`SlicedView`] is directed: only egos have out-neighbors, and an ego's
//! out-neighbors are the alters in the chosen circle (optionally restricted to
//! ego and domain-specific nodes). Degrees used for penalization are always
//! read from the base graph.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egonet::{CircleLevel, EgoNetwork};
use crate::graph::{GraphError, InteractionGraph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum SliceError {
    #[error("node {0} has no ego network")]
    MissingEgoNetwork(NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SliceSpec {
    pub level: CircleLevel,
    /// Keep only ego and domain-specific neighbors.
    pub domain_only: bool,
}

impl SliceSpec {
    pub const BASELINE: SliceSpec = SliceSpec { level: CircleLevel::All, domain_only: false };

    pub fn new(level: CircleLevel, domain_only: bool) -> Self {
        Self { level, domain_only }
    }

    pub fn scenario(&self) -> &'static str {
        if self.domain_only {
            "DomainEdges"
        } else {
            "AllEdges"
        }
    }
}

impl fmt::Display for SliceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.level, self.scenario())
    }
}

impl FromStr for SliceSpec {
    type Err = String;

    /// Parses `C1`, `C1/AllEdges` or `Active/DomainEdges`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (level, scenario) = s.split_once('/').unwrap_or((s, "AllEdges"));
        let level: CircleLevel = level.parse()?;
        let domain_only = match scenario.trim().to_ascii_lowercase().as_str() {
            "alledges" | "all" => false,
            "domainedges" | "domainspecificedges" | "domain" => true,
            other => return Err(format!("unknown edge scenario {other:?}")),
        };
        Ok(Self { level, domain_only })
    }
}

pub struct SlicedView<'g> {
    graph: &'g InteractionGraph,
    egos: &'g BTreeMap<NodeId, EgoNetwork>,
    spec: SliceSpec,
    ego_ids: Vec<NodeId>,
    cache: Vec<OnceLock<Box<[NodeId]>>>,
}

impl fmt::Debug for SlicedView<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlicedView")
            .field("spec", &self.spec)
            .field("egos", &self.ego_ids.len())
            .finish()
    }
}

/// Creates the view for `spec`. Out-neighborhoods are filled lazily.
pub fn slice<'g>(
    graph: &'g InteractionGraph,
    egos: &'g BTreeMap<NodeId, EgoNetwork>,
    spec: SliceSpec,
) -> Result<SlicedView<'g>, SliceError> {
    for &e in egos.keys() {
        if !graph.contains(e) {
            return Err(GraphError::UnknownNode(e).into());
        }
    }
    let cache = (0..graph.node_count()).map(|_| OnceLock::new()).collect();
    Ok(SlicedView { graph, egos, spec, ego_ids: egos.keys().copied().collect(), cache })
}

impl<'g> SlicedView<'g> {
    pub fn graph(&self) -> &'g InteractionGraph {
        self.graph
    }

    pub fn spec(&self) -> SliceSpec {
        self.spec
    }

    /// Egos of the view in ascending id order.
    pub fn egos(&self) -> &[NodeId] {
        &self.ego_ids
    }

    pub fn ego_network(&self, i: NodeId) -> Option<&'g EgoNetwork> {
        self.egos.get(&i)
    }

    pub fn is_ego(&self, i: NodeId) -> bool {
        self.egos.contains_key(&i)
    }

    /// Γ_ω(i), sorted by id.
    pub fn sliced_neighborhood(&self, i: NodeId) -> Result<&[NodeId], SliceError> {
        let en = self.egos.get(&i).ok_or(SliceError::MissingEgoNetwork(i))?;
        let slot = &self.cache[i.index()];
        if let Some(row) = slot.get() {
            return Ok(row);
        }
        let row = self.compute(i, en)?;
        // A racing thread may have filled the slot first; both values are equal.
        Ok(slot.get_or_init(|| row))
    }

    fn compute(&self, i: NodeId, en: &EgoNetwork) -> Result<Box<[NodeId]>, SliceError> {
        let base = self.graph.neighborhood(i)?;
        let members = en.circle_members(self.spec.level);
        let row: Vec<NodeId> = members
            .into_iter()
            .filter(|v| base.binary_search(v).is_ok())
            .filter(|&v| !self.spec.domain_only || self.graph.class(v).is_ok_and(|c| c.is_domain()))
            .collect();
        Ok(row.into_boxed_slice())
    }

    /// Fills every ego's cached out-neighborhood in parallel.
    pub fn warm(&self) -> Result<(), SliceError> {
        self.ego_ids.par_iter().try_for_each(|&e| self.sliced_neighborhood(e).map(|_| ()))
    }

    /// |Γ(z)| in the base graph.
    pub fn base_degree(&self, z: NodeId) -> Result<usize, SliceError> {
        Ok(self.graph.degree(z)?)
    }

    /// Number of ego or domain-specific neighbors of `z` in the base graph.
    pub fn domain_degree(&self, z: NodeId) -> Result<usize, SliceError> {
        let row = self.graph.neighborhood(z)?;
        Ok(row.iter().filter(|&&v| self.graph.class(v).is_ok_and(|c| c.is_domain())).count())
    }
}

/// Convenience free function mirroring [`SlicedView::sliced_neighborhood`].
pub fn sliced_neighborhood<'a>(view: &'a SlicedView<'_>, i: NodeId) -> Result<&'a [NodeId], SliceError> {
    view.sliced_neighborhood(i)
}
