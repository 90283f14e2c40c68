use std::sync::Arc;

use crate::capacity::{integer_chi, ratio, Rational, SystemParams};
use crate::code::{CodeKind, NodeContent, RegeneratingCode, RepairTranscript, Symbol};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::msr::BaseMsr;
use crate::topology::{ClusterTopology, NodeId};

/// Lifts a non-clustered MSR code with `d = n - 1` to a clustered system at
/// `1/(n-k) ≤ ε ≤ 1`: intra-cluster helpers repeat their base symbol `χ` times.
///
/// Stored symbols of node `u` have indices `(u-1)α + 1 ..= uα`; a helper's
/// transmitted symbol carries the helper's flat index.
#[derive(Clone)]
pub struct MsrWrapped {
    params: SystemParams,
    field: Field,
    base: Arc<dyn BaseMsr>,
    chi: usize,
}

impl std::fmt::Debug for MsrWrapped {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MsrWrapped").field("params", &self.params).field("chi", &self.chi).finish()
    }
}

impl MsrWrapped {
    pub fn new(
        base: Arc<dyn BaseMsr>,
        topology: ClusterTopology,
        epsilon: Rational,
        field: &Field,
    ) -> Result<MsrWrapped> {
        let (n, k) = (topology.n(), topology.k());
        if base.n() != n || base.k() != k {
            return Err(Error::Parameter(format!(
                "base code is ({}, {}), topology is ({n}, {k})",
                base.n(),
                base.k()
            )));
        }
        let floor = ratio(1, (n - k) as i64);
        if epsilon < floor || epsilon > ratio(1, 1) {
            return Err(Error::Regime(format!(
                "the wrapper covers 1/(n-k) = {}/{} ≤ ε ≤ 1",
                floor.numer(),
                floor.denom()
            )));
        }
        let chi = integer_chi(epsilon)?;
        let params = SystemParams::new(topology, epsilon, chi, 1, base.alpha(), base.file_size(), None);
        Ok(MsrWrapped { params, field: field.clone(), base, chi })
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn base(&self) -> &dyn BaseMsr {
        self.base.as_ref()
    }
}

impl RegeneratingCode for MsrWrapped {
    fn kind(&self) -> CodeKind {
        CodeKind::MsrWrapped
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn field(&self) -> &Field {
        &self.field
    }

    fn index_span(&self) -> usize {
        self.params.topology.n() * self.base.alpha()
    }

    fn encode(&self, source: &[FieldElement]) -> Result<Vec<NodeContent>> {
        let a = self.base.alpha();
        let stored = self.base.encode(source)?;
        Ok(self
            .params
            .topology
            .nodes()
            .zip(stored)
            .enumerate()
            .map(|(u, (node, values))| {
                let symbols = values.into_iter().enumerate().map(|(s, v)| Symbol::new(u * a + s + 1, v)).collect();
                NodeContent::new(node, symbols)
            })
            .collect())
    }

    fn transmit(&self, helper: &NodeContent, failed: NodeId) -> Result<Vec<Symbol>> {
        let t = &self.params.topology;
        let values: Vec<FieldElement> = helper.symbols.iter().map(|s| s.value).collect();
        let symbol = Symbol::new(t.flat(helper.node), self.base.helper_symbol(&values, t.flat(failed))?);
        let copies = if helper.node.l == failed.l { self.chi } else { 1 };
        Ok(vec![symbol; copies])
    }

    fn regenerate(&self, transcript: &RepairTranscript) -> Result<NodeContent> {
        let t = &self.params.topology;
        let mut received = Vec::with_capacity(transcript.contributions.len());
        for c in &transcript.contributions {
            let Some(first) = c.symbols.first() else { continue };
            if c.symbols.iter().any(|s| s != first) {
                return Err(Error::Repair(format!("{} sent differing copies", c.helper)));
            }
            received.push((first.idx, first.value));
        }
        let failed = t.flat(transcript.failed);
        let a = self.base.alpha();
        let values = self.base.repair(failed, &received)?;
        let symbols = values.into_iter().enumerate().map(|(s, v)| Symbol::new((failed - 1) * a + s + 1, v)).collect();
        Ok(NodeContent::new(transcript.failed, symbols))
    }

    fn decode(&self, contacted: &[NodeContent]) -> Result<Vec<FieldElement>> {
        let t = &self.params.topology;
        let nodes: Vec<(usize, Vec<FieldElement>)> = contacted
            .iter()
            .map(|c| (t.flat(c.node), c.symbols.iter().map(|s| s.value).collect()))
            .collect();
        self.base.reconstruct(&nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build, repair};
    use crate::msr::ProductMatrixMsr;

    fn wrapped(eps: Rational) -> Result<MsrWrapped> {
        let f = Field::gf256();
        let base = Arc::new(ProductMatrixMsr::new(9, 5, &f)?);
        MsrWrapped::new(base, ClusterTopology::new(9, 5, 3)?, eps, &f)
    }

    #[test]
    fn gamma_tracks_chi() {
        for (den, gamma) in [(4, 14), (2, 10), (1, 8)] {
            let code = wrapped(ratio(1, den)).unwrap();
            let p = code.params();
            assert_eq!((p.alpha, p.file_size, p.gamma), (4, 20, gamma));
        }
    }

    #[test]
    fn unit_epsilon_matches_base_repair() {
        let code = wrapped(ratio(1, 1)).unwrap();
        let src: Vec<FieldElement> = (0..20).map(|v| FieldElement(v * 7 + 1)).collect();
        let p = build(&code, &src).unwrap();
        let (t, content) = repair(&code, &p, NodeId::new(2, 2)).unwrap();
        assert_eq!(t.gamma, 8);
        assert!(t.contributions.iter().all(|c| c.symbols.len() == 1));
        assert_eq!(&content, p.node(NodeId::new(2, 2)).unwrap());
    }

    #[test]
    fn regime_limits() {
        assert!(matches!(wrapped(ratio(1, 5)), Err(Error::Regime(_))));
        assert!(matches!(wrapped(ratio(2, 3)), Err(Error::Parameter(_))));
        assert!(matches!(wrapped(ratio(3, 2)), Err(Error::Regime(_))));
    }
}
