use crate::capacity::{ratio, SystemParams};
use itertools::Itertools;
use serde_json::json;

use crate::code::{CodeKind, NodeContent, Placement, RegeneratingCode, RepairTranscript, Symbol};
use crate::harness::{check_owner_count, CheckResult};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::mds::{Matrix, RsCode};
use crate::topology::{ClusterTopology, NodeId};

/// `n - k` independent `(n, k)` codes, one coordinate of each per node.
///
/// Requires `n = kL` and operates at `ε = 1/(n-k)`. Symbol
/// `c_{n(i-1)+u}` is coordinate `u` of component code `C_i`.
#[derive(Debug, Clone)]
pub struct MsrStacked {
    params: SystemParams,
    rs: RsCode,
}

impl MsrStacked {
    pub fn new(topology: ClusterTopology, field: &Field) -> Result<MsrStacked> {
        let (n, k) = (topology.n(), topology.k());
        if topology.cluster_size() != k {
            return Err(Error::Regime(format!(
                "the stacked construction needs n = kL, got n = {n}, k = {k}, L = {}",
                topology.clusters()
            )));
        }
        let a = n - k;
        let params = SystemParams::new(topology, ratio(1, a as i64), a, 1, a, k * a, None);
        Ok(MsrStacked { params, rs: RsCode::new(field, n, k)? })
    }

    pub fn components(&self) -> usize {
        self.params.alpha
    }

    /// `(component, coordinate)` of a global index.
    pub fn locate(&self, idx: usize) -> (usize, usize) {
        let n = self.params.topology.n();
        ((idx - 1) / n + 1, (idx - 1) % n + 1)
    }

    pub fn index(&self, component: usize, coordinate: usize) -> usize {
        (component - 1) * self.params.topology.n() + coordinate
    }

    /// Cross-cluster helpers in ascending flat order are assigned components 1, 2, ….
    pub fn assigned_component(&self, helper: NodeId, failed: NodeId) -> Option<usize> {
        if helper.l == failed.l {
            return None;
        }
        let t = &self.params.topology;
        let ni = t.cluster_size();
        let u = t.flat(helper);
        // Helpers before `u`, skipping the failed cluster's block.
        let rank = if helper.l < failed.l { u } else { u - ni };
        Some(rank)
    }
}

impl RegeneratingCode for MsrStacked {
    fn kind(&self) -> CodeKind {
        CodeKind::MsrStacked
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn field(&self) -> &Field {
        self.rs.field()
    }

    fn index_span(&self) -> usize {
        self.params.topology.n() * self.components()
    }

    fn encode(&self, source: &[FieldElement]) -> Result<Vec<NodeContent>> {
        if source.len() != self.params.file_size {
            return Err(Error::Length { expected: self.params.file_size, got: source.len() });
        }
        let k = self.params.topology.k();
        let words = source.chunks(k).map(|m| self.rs.encode(m)).collect::<Result<Vec<_>>>()?;
        let topology = &self.params.topology;
        Ok(topology
            .nodes()
            .map(|node| {
                let u = topology.flat(node);
                let symbols =
                    words.iter().enumerate().map(|(i, w)| Symbol::new(self.index(i + 1, u), w[u - 1])).collect();
                NodeContent::new(node, symbols)
            })
            .collect())
    }

    fn transmit(&self, helper: &NodeContent, failed: NodeId) -> Result<Vec<Symbol>> {
        match self.assigned_component(helper.node, failed) {
            None => Ok(helper.symbols.clone()),
            Some(t) => {
                let idx = self.index(t, self.params.topology.flat(helper.node));
                let v = helper
                    .get(idx)
                    .ok_or_else(|| Error::Repair(format!("{} lost symbol c_{idx}", helper.node)))?;
                Ok(vec![Symbol::new(idx, v)])
            }
        }
    }

    fn regenerate(&self, transcript: &RepairTranscript) -> Result<NodeContent> {
        let u = self.params.topology.flat(transcript.failed);
        let mut shares = vec![Vec::new(); self.components()];
        for s in transcript.contributions.iter().flat_map(|c| &c.symbols) {
            let (i, coord) = self.locate(s.idx);
            shares[i - 1].push((coord - 1, s.value));
        }
        let symbols = shares
            .iter()
            .enumerate()
            .map(|(i, sh)| {
                let word = self.rs.encode(&self.rs.decode(sh)?)?;
                Ok(Symbol::new(self.index(i + 1, u), word[u - 1]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeContent::new(transcript.failed, symbols))
    }

    fn decode(&self, contacted: &[NodeContent]) -> Result<Vec<FieldElement>> {
        let mut shares = vec![Vec::new(); self.components()];
        for s in contacted.iter().flat_map(|c| &c.symbols) {
            let (i, coord) = self.locate(s.idx);
            shares[i - 1].push((coord - 1, s.value));
        }
        let mut out = Vec::with_capacity(self.params.file_size);
        for sh in &shares {
            out.extend(self.rs.decode(sh)?);
        }
        Ok(out)
    }

    fn generator(&self) -> Option<&Matrix> {
        Some(self.rs.generator())
    }

    fn invariants(&self, placement: &Placement) -> Vec<CheckResult> {
        let topology = &self.params.topology;
        let span = self.index_span();
        let failure = placement.nodes.iter().find_map(|c| {
            let u = topology.flat(c.node);
            let got: Vec<(usize, usize)> = c.symbols.iter().map(|s| self.locate((s.idx - 1) % span + 1)).collect();
            let want: Vec<(usize, usize)> = (0..placement.stripes)
                .flat_map(|_| (1..=self.components()).map(move |i| (i, u)))
                .sorted()
                .collect();
            (got.iter().copied().sorted().collect::<Vec<_>>() != want)
                .then(|| json!({ "node": c.node.to_string(), "held": c.indices() }))
        });
        vec![
            check_owner_count(placement, span, 1),
            CheckResult::from_failure("each node holds its own coordinate of every component", failure),
        ]
    }
}
