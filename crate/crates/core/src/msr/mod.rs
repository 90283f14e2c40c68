//! MSR constructions: two for `ε = 0`, the stacked code at `ε = 1/(n-k)`,
//! and a wrapper covering `1/(n-k) ≤ ε ≤ 1` over any [`BaseMsr`].

mod divisible;
mod nondivisible;
mod product_matrix;
mod stacked;
mod wrapped;

pub use divisible::MsrDivisible;
pub use nondivisible::MsrNondivisible;
pub use product_matrix::ProductMatrixMsr;
pub use stacked::MsrStacked;
pub use wrapped::MsrWrapped;

pub(crate) use nondivisible::binomial;

use crate::error::Result;
use crate::galois::FieldElement;

/// A non-clustered MSR code with `d = n - 1` helpers, one symbol each.
///
/// Nodes are addressed by 1-based index `u`; each stores `α = n - k`
/// symbols and any `k` of them hold the `k(n - k)` source symbols.
pub trait BaseMsr: Send + Sync {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn alpha(&self) -> usize;
    fn file_size(&self) -> usize;

    /// Per-node stored symbols, node `u` at position `u - 1`.
    fn encode(&self, source: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>>;

    /// The one symbol a helper storing `stored` sends toward node `failed`.
    fn helper_symbol(&self, stored: &[FieldElement], failed: usize) -> Result<FieldElement>;

    /// Rebuilds `failed` from `(helper, symbol)` pairs.
    fn repair(&self, failed: usize, received: &[(usize, FieldElement)]) -> Result<Vec<FieldElement>>;

    /// Recovers the source from `(node, stored)` pairs of at least `k` nodes.
    fn reconstruct(&self, nodes: &[(usize, Vec<FieldElement>)]) -> Result<Vec<FieldElement>>;
}
