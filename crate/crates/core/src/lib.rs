//! Exact-repair regenerating codes for clustered distributed storage.
//!
//! Nodes are grouped into `L` clusters of `n_I` nodes. Repairing a node
//! costs `β_I` symbols per surviving node in its cluster and `β_c` per node
//! elsewhere; any `k` nodes suffice to rebuild the file. The crate provides
//! the capacity formulas, MBR and MSR constructions that meet them, and a
//! harness that checks repair, reconstruction and bandwidth exhaustively.
//!
//! ```
//! use clustered_regen::{code, config::CodeSpec, galois::FieldElement, topology::NodeId};
//!
//! let spec = CodeSpec::mbr_zero(12, 6, 3)?;
//! let mbr = spec.instantiate()?;
//! let source: Vec<FieldElement> = (1..=11).map(FieldElement).collect();
//! let placement = code::build(mbr.as_ref(), &source)?;
//!
//! let (transcript, rebuilt) = code::repair(mbr.as_ref(), &placement, NodeId::new(2, 3))?;
//! assert_eq!(transcript.gamma, 3);
//! assert_eq!(&rebuilt, placement.node(NodeId::new(2, 3))?);
//! # Ok::<(), clustered_regen::error::Error>(())
//! ```

pub mod capacity;
pub mod code;
pub mod config;
pub mod error;
pub mod galois;
pub mod harness;
pub mod mbr;
pub mod mds;
pub mod msr;
pub mod topology;

pub use capacity::{Rational, SystemParams};
pub use code::{CodeKind, NodeContent, Placement, RegeneratingCode, RepairTranscript, Symbol};
pub use config::CodeSpec;
pub use error::{Error, Result};
pub use galois::{Field, FieldElement, FieldSpec};
pub use topology::{ClusterTopology, ContactVector, NodeId};
