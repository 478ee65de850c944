//! Layered commentary corpus with word-level evidence analytics and
//! distance-based reconstruction of a text's transmission history.
//!
//! The crate is organised bottom-up:
//!
//! - [`collation`] tokenizes text into words, aligns token sequences and
//!   computes (normalized) token edit distances. It also derives
//!   commentary pseudo-witnesses from evidence annotations.
//! - [`corpus`] holds the hierarchical data model: works split into
//!   dotted-decimal functional units, recursive commentary layers on those
//!   units, witnesses and their readings.
//! - [`evidence`] carries the evidence taxonomy, token-anchored annotations
//!   and the support / transmission reports computed from them.
//! - [`phylogeny`] builds distance matrices over witnesses and
//!   pseudo-witnesses and turns them into UPGMA or neighbor-joining trees.
//! - [`store`] is the event-sourced persistence layer with an append-only
//!   log, replay and canonical import/export.
//! - [`service`] exposes everything over an authenticated JSON HTTP API and
//!   [`cli`] drives the `tht` binary.
//! - [`fixtures`] contains the reference corpora used by the examples and
//!   the acceptance suite.
//!
//! ```
//! use textual_history::{fixtures, evidence};
//!
//! let corpus = fixtures::build(&fixtures::kv_1_1_1()).unwrap();
//! let units = ["1.1.1.1".parse().unwrap(), "1.1.1.2".parse().unwrap()];
//! let ny = evidence::support_report(&corpus, "KV", &units, "Ny").unwrap();
//! assert_eq!((ny.supported_count, ny.total_tokens), (24, 25));
//! ```

pub mod cli;
pub mod collation;
pub mod corpus;
pub mod evidence;
pub mod fixtures;
pub mod phylogeny;
pub mod service;
pub mod store;

pub use collation::{tokenize, TokenSequence};
pub use corpus::{Corpus, CorpusError, FunctionalUnit, Layer, NodePath, UnitId, UnitKind, Work};
pub use evidence::{EvidenceAnnotation, EvidenceKind, EvidenceTaxonomy, SupportStats, TransmissionReport};
pub use phylogeny::{DistanceMatrix, PhyloTree, TreeRequest};
pub use store::{Command, Event, Store, StoreConfig, StoreError};
