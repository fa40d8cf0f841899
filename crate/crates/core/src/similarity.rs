//! Neighborhood-overlap heuristics evaluated on a sliced view.
//!
//! All four indices intersect the sliced neighborhoods of the two egos.
//! Adamic-Adar and resource allocation penalize each common neighbor by its
//! degree in the base graph (or, optionally, its ego/domain-only degree).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, NodePair};
use crate::slicing::{SliceError, SlicedView};

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("similarity of {0} with itself")]
    SameNode(NodeId),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SimilarityKind {
    #[serde(rename = "CN")]
    CommonNeighbors,
    #[serde(rename = "JC")]
    Jaccard,
    #[serde(rename = "AA")]
    AdamicAdar,
    #[serde(rename = "RA")]
    ResourceAllocation,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 4] = [
        SimilarityKind::CommonNeighbors,
        SimilarityKind::Jaccard,
        SimilarityKind::AdamicAdar,
        SimilarityKind::ResourceAllocation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityKind::CommonNeighbors => "CN",
            SimilarityKind::Jaccard => "JC",
            SimilarityKind::AdamicAdar => "AA",
            SimilarityKind::ResourceAllocation => "RA",
        }
    }

    fn feature_index(self) -> usize {
        match self {
            SimilarityKind::CommonNeighbors => 0,
            SimilarityKind::Jaccard => 1,
            SimilarityKind::AdamicAdar => 2,
            SimilarityKind::ResourceAllocation => 3,
        }
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimilarityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SimilarityKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown similarity {s:?} (expected CN, JC, AA or RA)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityScore {
    pub pair: NodePair,
    pub kind: SimilarityKind,
    pub value: f64,
}

/// Which degree penalizes a common neighbor in AA and RA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeBasis {
    /// Unsliced base-graph degree.
    #[default]
    Full,
    /// Number of ego or domain-specific neighbors in the base graph.
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    /// Logarithm base of the Adamic-Adar penalty.
    pub log_base: f64,
    pub degree_basis: DegreeBasis,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self { log_base: std::f64::consts::E, degree_basis: DegreeBasis::Full }
    }
}

/// Feature order: CN, JC, AA, RA.
pub type Features = [f64; 4];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Similarity {
    pub config: SimilarityConfig,
}

impl Similarity {
    pub fn new(config: SimilarityConfig) -> Self {
        Self { config }
    }

    /// All four indices from a single merge of the two neighborhoods.
    pub fn features(&self, view: &SlicedView<'_>, i: NodeId, j: NodeId) -> Result<Features, SimilarityError> {
        if i == j {
            return Err(SimilarityError::SameNode(i));
        }
        let a = view.sliced_neighborhood(i)?;
        let b = view.sliced_neighborhood(j)?;
        let ln_base = self.config.log_base.ln();
        let (mut p, mut q) = (0, 0);
        let mut common = 0usize;
        let (mut aa, mut ra) = (0.0, 0.0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    let z = a[p];
                    let d = match self.config.degree_basis {
                        DegreeBasis::Full => view.base_degree(z)?,
                        DegreeBasis::Domain => view.domain_degree(z)?,
                    };
                    // z neighbors both i and j in the symmetric base graph.
                    assert!(d >= 2, "common neighbor {z} has degree {d}");
                    let d = d as f64;
                    aa += ln_base / d.ln();
                    ra += 1.0 / d;
                    common += 1;
                    p += 1;
                    q += 1;
                }
            }
        }
        let union = a.len() + b.len() - common;
        let jc = if union == 0 { 0.0 } else { common as f64 / union as f64 };
        Ok([common as f64, jc, aa, ra])
    }

    pub fn score(
        &self,
        view: &SlicedView<'_>,
        kind: SimilarityKind,
        i: NodeId,
        j: NodeId,
    ) -> Result<f64, SimilarityError> {
        Ok(self.features(view, i, j)?[kind.feature_index()])
    }
}

pub fn common_neighbors(view: &SlicedView<'_>, i: NodeId, j: NodeId) -> Result<usize, SimilarityError> {
    Ok(Similarity::default().features(view, i, j)?[0] as usize)
}

/// |∩| / |∪|, and 0 when both neighborhoods are empty.
pub fn jaccard(view: &SlicedView<'_>, i: NodeId, j: NodeId) -> Result<f64, SimilarityError> {
    Ok(Similarity::default().features(view, i, j)?[1])
}

pub fn adamic_adar(view: &SlicedView<'_>, i: NodeId, j: NodeId) -> Result<f64, SimilarityError> {
    Ok(Similarity::default().features(view, i, j)?[2])
}

pub fn resource_allocation(view: &SlicedView<'_>, i: NodeId, j: NodeId) -> Result<f64, SimilarityError> {
    Ok(Similarity::default().features(view, i, j)?[3])
}

pub fn feature_vector(view: &SlicedView<'_>, i: NodeId, j: NodeId) -> Result<Features, SimilarityError> {
    Similarity::default().features(view, i, j)
}
