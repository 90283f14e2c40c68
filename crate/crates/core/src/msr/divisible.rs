use std::collections::BTreeMap;

use crate::capacity::{int, SystemParams};
use itertools::Itertools;
use serde_json::json;

use crate::code::{CodeKind, NodeContent, Placement, RegeneratingCode, RepairTranscript, Symbol};
use crate::harness::{check_owner_count, CheckResult};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::mds::{Matrix, RsCode};
use crate::topology::{ClusterTopology, NodeId};

/// `ε = 0`, `n_I | k`: `n_I - 1` stacked `(n, k)` codes plus one parity per
/// coordinate, each parity group living inside a single cluster.
///
/// Symbol `(t - 1) n + i` is coordinate `i` of code `t`; slot `t = n_I` is
/// the parity `s_i = Σ_t y_i^(t)`.
#[derive(Debug, Clone)]
pub struct MsrDivisible {
    params: SystemParams,
    rs: RsCode,
}

impl MsrDivisible {
    pub fn new(topology: ClusterTopology, field: &Field) -> Result<MsrDivisible> {
        let (n, k, ni) = (topology.n(), topology.k(), topology.cluster_size());
        if ni < 2 {
            return Err(Error::Regime("ε = 0 needs at least two nodes per cluster".into()));
        }
        if k % ni != 0 {
            return Err(Error::Regime(format!(
                "n_I = {ni} does not divide k = {k}; use the msr0-nondiv construction"
            )));
        }
        let m = k * (ni - 1);
        let params = SystemParams::new(topology, int(0), ni, 0, ni, m, None);
        Ok(MsrDivisible { params, rs: RsCode::new(field, n, k)? })
    }

    /// Parity group held in slot `t` of `N(l, j)`.
    pub fn group(&self, node: NodeId, t: usize) -> usize {
        let ni = self.params.topology.cluster_size();
        (node.l - 1) * ni + (node.j + t - 2) % ni + 1
    }

    fn index(&self, t: usize, group: usize) -> usize {
        (t - 1) * self.params.topology.n() + group
    }

    /// Slot and group of a global index.
    fn locate(&self, idx: usize) -> (usize, usize) {
        let n = self.params.topology.n();
        ((idx - 1) / n + 1, (idx - 1) % n + 1)
    }

    pub fn layout(&self, node: NodeId) -> Vec<usize> {
        let ni = self.params.topology.cluster_size();
        let mut v: Vec<usize> = (1..=ni).map(|t| self.index(t, self.group(node, t))).collect();
        v.sort_unstable();
        v
    }
}

impl RegeneratingCode for MsrDivisible {
    fn kind(&self) -> CodeKind {
        CodeKind::Msr0Div
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn field(&self) -> &Field {
        self.rs.field()
    }

    fn index_span(&self) -> usize {
        self.params.topology.n() * self.params.topology.cluster_size()
    }

    fn encode(&self, source: &[FieldElement]) -> Result<Vec<NodeContent>> {
        if source.len() != self.params.file_size {
            return Err(Error::Length { expected: self.params.file_size, got: source.len() });
        }
        let topology = &self.params.topology;
        let (n, k, ni) = (topology.n(), topology.k(), topology.cluster_size());
        let mut rows = Vec::with_capacity(ni);
        for chunk in source.chunks(k) {
            rows.push(self.rs.encode(chunk)?);
        }
        let parity = (0..n).map(|i| rows.iter().fold(FieldElement::ZERO, |a, y| a + y[i])).collect();
        rows.push(parity);
        Ok(topology
            .nodes()
            .map(|node| {
                let symbols = (1..=ni)
                    .map(|t| {
                        let g = self.group(node, t);
                        Symbol::new(self.index(t, g), rows[t - 1][g - 1])
                    })
                    .collect();
                NodeContent::new(node, symbols)
            })
            .collect())
    }

    fn transmit(&self, helper: &NodeContent, failed: NodeId) -> Result<Vec<Symbol>> {
        Ok(if helper.node.l == failed.l { helper.symbols.clone() } else { Vec::new() })
    }

    fn regenerate(&self, transcript: &RepairTranscript) -> Result<NodeContent> {
        let ni = self.params.topology.cluster_size();
        let received: BTreeMap<usize, FieldElement> = transcript
            .contributions
            .iter()
            .flat_map(|c| c.symbols.iter().map(|s| (s.idx, s.value)))
            .collect();
        let failed = transcript.failed;
        let symbols = (1..=ni)
            .map(|t| {
                let g = self.group(failed, t);
                // The group's members sum to zero; the missing one is the sum of the rest.
                let mut value = FieldElement::ZERO;
                for other in (1..=ni).filter(|&o| o != t) {
                    let idx = self.index(other, g);
                    value += *received
                        .get(&idx)
                        .ok_or_else(|| Error::Repair(format!("group {g} is missing symbol {idx}")))?;
                }
                Ok(Symbol::new(self.index(t, g), value))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeContent::new(failed, symbols))
    }

    fn decode(&self, contacted: &[NodeContent]) -> Result<Vec<FieldElement>> {
        let ni = self.params.topology.cluster_size();
        let mut shares: Vec<Vec<(usize, FieldElement)>> = vec![Vec::new(); ni - 1];
        for s in contacted.iter().flat_map(|c| &c.symbols) {
            let (t, g) = self.locate(s.idx);
            if t < ni {
                shares[t - 1].push((g - 1, s.value));
            }
        }
        let mut out = Vec::with_capacity(self.params.file_size);
        for s in &shares {
            out.extend(self.rs.decode(s)?);
        }
        Ok(out)
    }

    fn generator(&self) -> Option<&Matrix> {
        Some(self.rs.generator())
    }

    fn invariants(&self, placement: &Placement) -> Vec<CheckResult> {
        let topology = &self.params.topology;
        let (ni, span) = (topology.cluster_size(), self.index_span());
        let mut slots = None;
        let mut parity = None;
        for c in &placement.nodes {
            let groups: Vec<usize> = (1..=ni).map(|t| self.group(c.node, t)).sorted().collect();
            let cluster: Vec<usize> = (1..=ni).map(|j| (c.node.l - 1) * ni + j).collect();
            let local: Vec<usize> = c.symbols.iter().map(|s| (s.idx - 1) % span + 1).sorted().dedup().collect();
            if groups != cluster || local != self.layout(c.node) {
                slots.get_or_insert(json!({ "node": c.node.to_string(), "held": local }));
            }
        }
        let values: BTreeMap<usize, FieldElement> =
            placement.nodes.iter().flat_map(|c| c.symbols.iter().map(|s| (s.idx, s.value))).collect();
        'outer: for stripe in 0..placement.stripes {
            for g in 1..=topology.n() {
                let sum = (1..=ni).fold(FieldElement::ZERO, |a, t| {
                    a + values.get(&(stripe * span + self.index(t, g))).copied().unwrap_or(FieldElement::ZERO)
                });
                if !sum.is_zero() {
                    parity = Some(json!({ "stripe": stripe, "group": g }));
                    break 'outer;
                }
            }
        }
        vec![
            check_owner_count(placement, span, 1),
            CheckResult::from_failure("each node holds one slot of every group in its cluster", slots),
            CheckResult::from_failure("every parity group sums to zero", parity),
        ]
    }
}
