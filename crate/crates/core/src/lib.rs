//! Query-adaptive fusion of several per-feature similarity matrices.
//!
//! For each query and feature the pipeline ranks items, admits neighbors
//! while consecutive scores stay close ([`nnselect`]), extracts a
//! constrained dominant set that must contain the query ([`cds`]), turns the
//! cluster's membership entropy and size into a per-feature weight
//! ([`piw`]), collects votes across features ([`voting`]) and scores every
//! candidate ([`fusion`]). [`synth`], [`evalmetrics`] and [`oracle`] support
//! experiments and verification.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below name the `f64` instantiations used by the file formats and
//! the command-line tool.

pub mod affinity;
pub mod cds;
pub mod cli;
pub mod error;
pub mod evalmetrics;
pub mod fusion;
pub mod matrixio;
pub mod nnselect;
pub mod oracle;
pub mod piw;
pub mod scalar;
pub mod synth;
pub mod voting;

pub use affinity::SubgraphAffinity;
pub use cds::{ConstrainedCluster, MembershipVector, PayoffMatrix};
pub use error::{Error, Result};
pub use fusion::FusionResult;
pub use matrixio::{FeatureMatrix, FusionConfig, GroundTruth, MatrixKind};
pub use nnselect::{NeighborSet, RankedList};
pub use piw::PiwVector;
pub use scalar::Scalar;
pub use synth::SynthConfig;

pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type SubgraphAffinity64 = SubgraphAffinity<f64>;
pub type PayoffMatrix64 = PayoffMatrix<f64>;
pub type MembershipVector64 = MembershipVector<f64>;
pub type ConstrainedCluster64 = ConstrainedCluster<f64>;
pub type RankedList64 = RankedList<f64>;
pub type PiwVector64 = PiwVector<f64>;
pub type FusionResult64 = FusionResult<f64>;
pub type FusionResult32 = FusionResult<f32>;
