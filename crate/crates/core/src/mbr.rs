//! Repair-by-transfer MBR codes.
//!
//! A single Reed–Solomon codeword of length θ is spread so that every
//! symbol sits on exactly two nodes. Repair is pure transfer: each helper
//! sends the symbols it shares with the failed node.

use std::collections::BTreeMap;

use crate::capacity::{int, mbr_filesize_pos, mbr_filesize_zero, ratio, SystemParams};
use crate::code::{CodeKind, NodeContent, Placement, RegeneratingCode, RepairTranscript, Symbol};
use crate::harness::{check_owner_count, check_pair_sharing, CheckResult};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::mds::{Matrix, RsCode};
use crate::topology::{pairs, ClusterTopology, IncidenceMatrix, NodeId};

#[derive(Debug, Clone)]
pub struct MbrCode {
    kind: CodeKind,
    params: SystemParams,
    chi: usize,
    rs: RsCode,
    /// Symbol indices held by each node, flat order.
    layout: Vec<Vec<usize>>,
}

impl MbrCode {
    /// The `ε = 0` code: intra-cluster repair only, one symbol per helper.
    pub fn zero(topology: ClusterTopology, field: &Field) -> Result<MbrCode> {
        let ni = topology.cluster_size();
        if ni < 2 {
            return Err(Error::Regime(
                "with ε = 0 and one node per cluster nothing can be repaired (M = 0)".into(),
            ));
        }
        let theta = pairs(ni) * topology.clusters();
        let m = mbr_filesize_zero(&topology);
        let params = SystemParams::new(topology, int(0), 1, 0, ni - 1, m, Some(theta));
        let layout = topology.nodes().map(|node| zero_layout(&topology, node)).collect();
        MbrCode::assemble(CodeKind::Mbr0, params, 0, field, layout)
    }

    /// The `ε = 1/χ` code: `β_I = χ`, `β_c = 1`.
    pub fn with_chi(topology: ClusterTopology, chi: usize, field: &Field) -> Result<MbrCode> {
        if chi == 0 {
            return Err(Error::param("χ must be a positive integer"));
        }
        let (n, ni) = (topology.n(), topology.cluster_size());
        let theta = (chi - 1) * pairs(ni) * topology.clusters() + pairs(n);
        let alpha = (ni - 1) * chi + (n - ni);
        let m = mbr_filesize_pos(&topology, chi);
        let params = SystemParams::new(topology, ratio(1, chi as i64), chi, 1, alpha, m, Some(theta));
        let layout = topology.nodes().map(|node| pos_layout(&topology, chi, node)).collect();
        MbrCode::assemble(CodeKind::Mbr, params, chi, field, layout)
    }

    fn assemble(
        kind: CodeKind,
        params: SystemParams,
        chi: usize,
        field: &Field,
        layout: Vec<Vec<usize>>,
    ) -> Result<MbrCode> {
        let theta = params.theta.expect("MBR codes have a single outer code");
        let rs = RsCode::new(field, theta, params.file_size)?;
        Ok(MbrCode { kind, params, chi, rs, layout })
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn theta(&self) -> usize {
        self.rs.n_out()
    }

    pub fn rs(&self) -> &RsCode {
        &self.rs
    }

    /// Indices stored on `node`, ascending.
    pub fn layout(&self, node: NodeId) -> &[usize] {
        &self.layout[self.params.topology.flat(node) - 1]
    }

    /// Indices both nodes store.
    pub fn shared(&self, a: NodeId, b: NodeId) -> Vec<usize> {
        let other = self.layout(b);
        self.layout(a).iter().copied().filter(|i| other.contains(i)).collect()
    }
}

/// `N(l, j)` stores `c_{(l-1)C(n_I,2) + i}` for each edge `i` at vertex `j` of `K_{n_I}`.
pub fn zero_layout(topology: &ClusterTopology, node: NodeId) -> Vec<usize> {
    let ni = topology.cluster_size();
    let v = IncidenceMatrix::new(ni).expect("n_I >= 2");
    let base = (node.l - 1) * pairs(ni);
    v.edges_of(node.j).into_iter().map(|i| base + i).collect()
}

/// Global symbols from `K_n`, then `χ-1` layers of local symbols from `K_{n_I}`.
pub fn pos_layout(topology: &ClusterTopology, chi: usize, node: NodeId) -> Vec<usize> {
    let (n, ni) = (topology.n(), topology.cluster_size());
    let mut out = IncidenceMatrix::new(n).expect("n >= 2").edges_of(topology.flat(node));
    if ni >= 2 {
        let local = IncidenceMatrix::new(ni).expect("n_I >= 2").edges_of(node.j);
        for t in 1..chi {
            out.extend(local.iter().map(|&i2| local_index(topology, chi, node.l, t, i2)));
        }
    }
    out.sort_unstable();
    out
}

/// Global index of local symbol `(l, t, i2)`.
pub fn local_index(topology: &ClusterTopology, chi: usize, l: usize, t: usize, i2: usize) -> usize {
    let delta = pairs(topology.cluster_size());
    pairs(topology.n()) + (chi * l + t - chi - l) * delta + i2
}

/// Inverse of [`local_index`]: `s ↦ (l, t, i2)`.
pub fn index_bijection(topology: &ClusterTopology, chi: usize, s: usize) -> Result<(usize, usize, usize)> {
    let global = pairs(topology.n());
    let delta = pairs(topology.cluster_size());
    let theta = (chi.saturating_sub(1)) * delta * topology.clusters() + global;
    if s <= global || s > theta {
        return Err(Error::Parameter(format!("index {s} is not a local symbol (range {}..={theta})", global + 1)));
    }
    let sp = s - global;
    let big = (chi - 1) * delta;
    let l = sp.div_ceil(big);
    let rest = sp - (l - 1) * big;
    let t = rest.div_ceil(delta);
    Ok((l, t, rest - (t - 1) * delta))
}

impl RegeneratingCode for MbrCode {
    fn kind(&self) -> CodeKind {
        self.kind
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn field(&self) -> &Field {
        self.rs.field()
    }

    fn index_span(&self) -> usize {
        self.theta()
    }

    fn encode(&self, source: &[FieldElement]) -> Result<Vec<NodeContent>> {
        let c = self.rs.encode(source)?;
        Ok(self
            .params
            .topology
            .nodes()
            .zip(&self.layout)
            .map(|(node, idx)| {
                NodeContent::new(node, idx.iter().map(|&i| Symbol::new(i, c[i - 1])).collect())
            })
            .collect())
    }

    fn transmit(&self, helper: &NodeContent, failed: NodeId) -> Result<Vec<Symbol>> {
        self.shared(helper.node, failed)
            .into_iter()
            .map(|i| {
                helper
                    .get(i)
                    .map(|v| Symbol::new(i, v))
                    .ok_or_else(|| Error::Repair(format!("{} lost symbol c_{i}", helper.node)))
            })
            .collect()
    }

    fn regenerate(&self, transcript: &RepairTranscript) -> Result<NodeContent> {
        let received: BTreeMap<usize, FieldElement> = transcript
            .contributions
            .iter()
            .flat_map(|c| c.symbols.iter().map(|s| (s.idx, s.value)))
            .collect();
        let symbols = self
            .layout(transcript.failed)
            .iter()
            .map(|&i| {
                received
                    .get(&i)
                    .map(|&v| Symbol::new(i, v))
                    .ok_or_else(|| Error::Repair(format!("no helper sent c_{i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeContent::new(transcript.failed, symbols))
    }

    fn decode(&self, contacted: &[NodeContent]) -> Result<Vec<FieldElement>> {
        let mut distinct: BTreeMap<usize, FieldElement> = BTreeMap::new();
        for s in contacted.iter().flat_map(|c| &c.symbols) {
            if *distinct.entry(s.idx).or_insert(s.value) != s.value {
                return Err(Error::Inconsistent);
            }
        }
        let shares: Vec<(usize, FieldElement)> = distinct.into_iter().map(|(i, v)| (i - 1, v)).collect();
        self.rs.decode(&shares)
    }

    fn generator(&self) -> Option<&Matrix> {
        Some(self.rs.generator())
    }

    fn invariants(&self, placement: &Placement) -> Vec<CheckResult> {
        let (intra, cross) = match self.kind {
            CodeKind::Mbr0 => (1, 0),
            _ => (self.chi, 1),
        };
        vec![
            check_owner_count(placement, self.theta(), 2),
            check_pair_sharing(placement, format!("cross-cluster node pairs share {cross}"), |a, b| {
                if a.l != b.l { cross } else { intra }
            }),
            check_pair_sharing(placement, format!("same-cluster node pairs share {intra}"), |a, b| {
                if a.l == b.l { intra } else { cross }
            }),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build, reconstruct, repair};

    fn topo(n: usize, k: usize, l: usize) -> ClusterTopology {
        ClusterTopology::new(n, k, l).unwrap()
    }

    fn source(m: usize) -> Vec<FieldElement> {
        (0..m).map(|i| FieldElement((i * 37 + 11) as u16 & 0xff)).collect()
    }

    #[test]
    fn zero_example_parameters_and_layout() {
        let code = MbrCode::zero(topo(12, 6, 3), &Field::gf256()).unwrap();
        let p = code.params();
        assert_eq!((p.theta, p.file_size, p.alpha, p.gamma), (Some(18), 11, 3, 3));
        assert_eq!(code.layout(NodeId::new(2, 3)), &[8, 10, 12]);
    }

    #[test]
    fn zero_example_repair_listing() {
        let code = MbrCode::zero(topo(12, 6, 3), &Field::gf256()).unwrap();
        let placement = build(&code, &source(11)).unwrap();
        let failed = NodeId::new(2, 3);
        let (t, content) = repair(&code, &placement, failed).unwrap();
        let sent = |j| t.from_helper(NodeId::new(2, j)).unwrap().symbols.iter().map(|s| s.idx).collect::<Vec<_>>();
        assert_eq!((sent(1), sent(2), sent(4)), (vec![8], vec![10], vec![12]));
        assert_eq!((t.beta_i, t.beta_c, t.gamma), (1, 0, 3));
        assert_eq!(&content, placement.node(failed).unwrap());
    }

    #[test]
    fn zero_example_contact_retrieves_eleven() {
        let code = MbrCode::zero(topo(12, 6, 3), &Field::gf256()).unwrap();
        let s = source(11);
        let placement = build(&code, &s).unwrap();
        let nodes: Vec<NodeId> =
            [(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (2, 2)].iter().map(|&(l, j)| NodeId::new(l, j)).collect();
        let mut seen: Vec<usize> = nodes.iter().flat_map(|&n| code.layout(n).to_vec()).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, (1..=11).collect::<Vec<_>>());
        assert_eq!(reconstruct(&code, &placement, &nodes).unwrap(), s);
    }

    #[test]
    fn mirrored_pairs_when_cluster_size_two() {
        let code = MbrCode::zero(topo(8, 3, 4), &Field::gf256()).unwrap();
        assert_eq!(code.theta(), 4);
        for l in 1..=4 {
            assert_eq!(code.layout(NodeId::new(l, 1)), &[l]);
            assert_eq!(code.layout(NodeId::new(l, 2)), &[l]);
        }
    }

    #[test]
    fn zero_rejects_singleton_clusters() {
        assert!(matches!(MbrCode::zero(topo(6, 3, 6), &Field::gf256()), Err(Error::Regime(_))));
    }

    #[test]
    fn pos_example_layout() {
        let t = topo(6, 3, 2);
        let code = MbrCode::with_chi(t, 3, &Field::gf256()).unwrap();
        let p = code.params();
        assert_eq!((p.theta, p.file_size, p.alpha, p.gamma), (Some(27), 18, 9, 9));
        assert_eq!(code.layout(NodeId::new(1, 2)), &[1, 6, 7, 8, 9, 16, 18, 19, 21]);
        let global: usize = (1..=27).filter(|&i| i <= pairs(6)).count();
        assert_eq!((global, 27 - global), (15, 12));
    }

    #[test]
    fn pos_example_repair_listing() {
        let code = MbrCode::with_chi(topo(6, 3, 2), 3, &Field::gf256()).unwrap();
        let placement = build(&code, &source(18)).unwrap();
        let (t, content) = repair(&code, &placement, NodeId::new(1, 2)).unwrap();
        let sent = |l, j| t.from_helper(NodeId::new(l, j)).unwrap().symbols.iter().map(|s| s.idx).collect::<Vec<_>>();
        assert_eq!(sent(1, 1), vec![1, 16, 19]);
        assert_eq!(sent(1, 3), vec![6, 18, 21]);
        assert_eq!((sent(2, 1), sent(2, 2), sent(2, 3)), (vec![7], vec![8], vec![9]));
        assert_eq!((t.beta_i, t.beta_c, t.gamma), (3, 1, 9));
        assert_eq!(&content, placement.node(NodeId::new(1, 2)).unwrap());
    }

    #[test]
    fn pos_example_cluster_contact() {
        let code = MbrCode::with_chi(topo(6, 3, 2), 3, &Field::gf256()).unwrap();
        let nodes: Vec<NodeId> = (1..=3).map(|j| NodeId::new(1, j)).collect();
        let mut seen: Vec<usize> = nodes.iter().flat_map(|&n| code.layout(n).to_vec()).collect();
        seen.sort_unstable();
        seen.dedup();
        let expected: Vec<usize> = (1..=12).chain(16..=21).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn index_bijection_examples_and_round_trip() {
        let t = topo(6, 3, 2);
        assert_eq!(index_bijection(&t, 3, 16).unwrap(), (1, 1, 1));
        assert_eq!(index_bijection(&t, 3, 27).unwrap(), (2, 2, 3));
        assert!(index_bijection(&t, 3, 15).is_err());
        assert!(index_bijection(&t, 3, 28).is_err());
        for (n, l) in [(6, 2), (12, 3), (12, 4), (9, 3)] {
            let t = topo(n, 2, l);
            for chi in 2..=4 {
                let theta = (chi - 1) * pairs(n / l) * l + pairs(n);
                for s in pairs(n) + 1..=theta {
                    let (l, tt, i2) = index_bijection(&t, chi, s).unwrap();
                    assert_eq!(local_index(&t, chi, l, tt, i2), s);
                }
            }
        }
    }

    #[test]
    fn chi_one_is_classical_repair_by_transfer() {
        let code = MbrCode::with_chi(topo(6, 3, 2), 1, &Field::gf256()).unwrap();
        assert_eq!(code.theta(), 15);
        let nodes: Vec<NodeId> = code.params().topology.nodes().collect();
        for (a, &x) in nodes.iter().enumerate() {
            for &y in &nodes[a + 1..] {
                assert_eq!(code.shared(x, y).len(), 1);
            }
        }
    }

    #[test]
    fn field_too_small_is_reported() {
        // θ = C(24,2) + 3·C(12,2)·2 = 276 + 396 > 255
        let err = MbrCode::with_chi(topo(24, 5, 2), 4, &Field::gf256()).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }
}
