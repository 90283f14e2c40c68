use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde_json::json;

use crate::capacity::{int, SystemParams};

use crate::code::{CodeKind, NodeContent, Placement, RegeneratingCode, RepairTranscript, Symbol};
use crate::harness::{check_owner_count, CheckResult, EXHAUSTIVE_LIMIT, SAMPLE_COUNT};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::mds::{Matrix, RsCode, Solution};
use crate::topology::{ClusterTopology, NodeId};

/// Above this many `k`-subsets the build-time rank check samples instead.
const EXHAUSTIVE_RANK_LIMIT: usize = 20_000;
const RANK_SAMPLES: usize = 2_000;

/// Evaluation-point shifts tried before column multipliers.
const SHIFT_ATTEMPTS: usize = 255;
/// Random column-multiplier sets tried once no plain shift works.
const MULTIPLIER_ATTEMPTS: u64 = 256;

/// `ε = 0`, `n_I ∤ k`: a systematic `(L(n_I-1), k-q)` generalized
/// Reed–Solomon outer code whose symbols are grouped per cluster, each
/// group closed by one parity.
///
/// `N(l, j)` stores symbol `y_u`, `u = (l-1)n_I + j`; the last node of each
/// cluster holds the parity.
#[derive(Debug, Clone)]
pub struct MsrNondivisible {
    params: SystemParams,
    field: Field,
    outer_generator: Matrix,
    generator: Matrix,
    shift: usize,
    multipliers: Vec<FieldElement>,
}

impl MsrNondivisible {
    pub fn new(topology: ClusterTopology, field: &Field) -> Result<MsrNondivisible> {
        let (n, k, ni) = (topology.n(), topology.k(), topology.cluster_size());
        if ni < 2 {
            return Err(Error::Regime("ε = 0 needs at least two nodes per cluster".into()));
        }
        if k % ni == 0 {
            return Err(Error::Regime(format!(
                "n_I = {ni} divides k = {k}; use the msr0-div construction"
            )));
        }
        let big_t = topology.clusters() * (ni - 1);
        let m = k - topology.q();
        let params = SystemParams::new(topology, int(0), 1, 0, 1, m, None);

        // Plain shifts first; with `k - q = 1` every shift is a repetition code
        // and cluster parities can cancel, so fall back to column multipliers.
        let max_shift = (field.order() - 1).saturating_sub(big_t).min(SHIFT_ATTEMPTS);
        let ones = vec![FieldElement::ONE; big_t];
        let candidates = (0..=max_shift).map(|shift| (shift, ones.clone())).chain((1..=MULTIPLIER_ATTEMPTS).map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let order = field.order();
            (0, (0..big_t).map(|_| FieldElement(rng.gen_range(1..order) as u16)).collect())
        }));
        for (shift, multipliers) in candidates {
            let rs = RsCode::with_offset(field, big_t, m, shift)?;
            let outer_generator = systematic(&scale_columns(rs.generator(), &multipliers, field), field)?;
            let generator = overall_generator(&topology, &outer_generator);
            if any_k_full_rank(&generator, field, n, k, m) {
                return Ok(MsrNondivisible { params, field: field.clone(), outer_generator, generator, shift, multipliers });
            }
        }
        Err(Error::Parameter(format!(
            "no outer code over GF(2^{}) gives every {k} nodes rank {m}; promote the field",
            field.degree()
        )))
    }

    /// The `(k-q) × n` map from source to per-node symbols.
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// Systematic `(k-q) × L(n_I-1)` generator of the outer code.
    pub fn outer_generator(&self) -> &Matrix {
        &self.outer_generator
    }

    /// Evaluation-point offset the build search settled on.
    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Column multipliers of the outer code; all ones for plain Reed–Solomon.
    pub fn multipliers(&self) -> &[FieldElement] {
        &self.multipliers
    }
}

fn scale_columns(g: &Matrix, multipliers: &[FieldElement], field: &Field) -> Matrix {
    let mut out = g.clone();
    for (c, &v) in multipliers.iter().enumerate() {
        for r in 0..g.rows() {
            out[(r, c)] = field.mul(g[(r, c)], v);
        }
    }
    out
}

/// `G_S^{-1} G` with `S` the leading columns.
fn systematic(g: &Matrix, field: &Field) -> Result<Matrix> {
    let head: Vec<usize> = (0..g.rows()).collect();
    g.select_columns(&head).inverse(field)?.mul(field, g)
}

fn overall_generator(topology: &ClusterTopology, g: &Matrix) -> Matrix {
    let ni = topology.cluster_size();
    let mut out = Matrix::zeros(g.rows(), topology.n());
    for node in topology.nodes() {
        let u = topology.flat(node) - 1;
        let z = |j: usize| (node.l - 1) * (ni - 1) + j - 1;
        for r in 0..g.rows() {
            out[(r, u)] = if node.j < ni {
                g[(r, z(node.j))]
            } else {
                (1..ni).fold(FieldElement::ZERO, |a, j| a + g[(r, z(j))])
            };
        }
    }
    out
}

/// Every `k` columns reach rank `m`: exhaustive when small, sampled otherwise.
fn any_k_full_rank(generator: &Matrix, field: &Field, n: usize, k: usize, m: usize) -> bool {
    let total = binomial(n, k);
    let ok = |cols: &[usize]| generator.select_columns(cols).rank(field) == m;
    if total <= EXHAUSTIVE_RANK_LIMIT {
        (0..n).combinations(k).all(|c| ok(&c))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (0..RANK_SAMPLES).all(|_| {
            let mut c = sample(&mut rng, n, k).into_vec();
            c.sort_unstable();
            ok(&c)
        })
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

impl RegeneratingCode for MsrNondivisible {
    fn kind(&self) -> CodeKind {
        CodeKind::Msr0Nondiv
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn field(&self) -> &Field {
        &self.field
    }

    fn index_span(&self) -> usize {
        self.params.topology.n()
    }

    fn encode(&self, source: &[FieldElement]) -> Result<Vec<NodeContent>> {
        if source.len() != self.params.file_size {
            return Err(Error::Length { expected: self.params.file_size, got: source.len() });
        }
        let y = self.generator.left_mul_vec(self.field(), source)?;
        let topology = &self.params.topology;
        Ok(topology
            .nodes()
            .map(|node| {
                let u = topology.flat(node);
                NodeContent::new(node, vec![Symbol::new(u, y[u - 1])])
            })
            .collect())
    }

    fn transmit(&self, helper: &NodeContent, failed: NodeId) -> Result<Vec<Symbol>> {
        Ok(if helper.node.l == failed.l { helper.symbols.clone() } else { Vec::new() })
    }

    fn regenerate(&self, transcript: &RepairTranscript) -> Result<NodeContent> {
        let topology = &self.params.topology;
        let failed = transcript.failed;
        let mut value = FieldElement::ZERO;
        for j in (1..=topology.cluster_size()).filter(|&j| j != failed.j) {
            let u = topology.flat(NodeId::new(failed.l, j));
            let s = transcript
                .contributions
                .iter()
                .flat_map(|c| &c.symbols)
                .find(|s| s.idx == u)
                .ok_or_else(|| Error::Repair(format!("no helper sent y_{u}")))?;
            value += s.value;
        }
        Ok(NodeContent::new(failed, vec![Symbol::new(topology.flat(failed), value)]))
    }

    fn decode(&self, contacted: &[NodeContent]) -> Result<Vec<FieldElement>> {
        let symbols: Vec<&Symbol> = contacted.iter().flat_map(|c| &c.symbols).collect();
        let cols: Vec<usize> = symbols.iter().map(|s| s.idx - 1).collect();
        let rhs: Vec<FieldElement> = symbols.iter().map(|s| s.value).collect();
        let system = self.generator.select_columns(&cols).transpose();
        match system.solve(self.field(), &rhs)? {
            Solution::Solved { x, underdetermined: false, .. } => Ok(x),
            Solution::Solved { rank, .. } => {
                Err(Error::Insufficient { needed: self.params.file_size, got: rank })
            }
            Solution::Inconsistent { .. } => Err(Error::Inconsistent),
        }
    }

    fn generator(&self) -> Option<&Matrix> {
        Some(&self.generator)
    }

    fn invariants(&self, placement: &Placement) -> Vec<CheckResult> {
        let topology = &self.params.topology;
        let (n, k, ni) = (topology.n(), topology.k(), topology.cluster_size());
        let m = self.params.file_size;
        let field = self.field();
        let rank = |cols: &[usize]| self.generator.select_columns(cols).rank(field);
        let subsets: Vec<Vec<usize>> = if binomial(n, k) <= EXHAUSTIVE_LIMIT {
            (0..n).combinations(k).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            (0..SAMPLE_COUNT).map(|_| sample(&mut rng, n, k).into_vec().into_iter().sorted().collect()).collect()
        };
        let rank_failure = subsets.into_iter().find_map(|c| {
            let r = rank(&c);
            let nodes: Vec<String> =
                c.iter().filter_map(|&u| topology.pair(u + 1).ok()).map(|id| id.to_string()).collect();
            (r != m).then(|| json!({ "nodes": nodes, "rank": r, "expected": m }))
        });
        let mut parity = None;
        'outer: for stripe in 0..placement.stripes {
            for l in 1..=topology.clusters() {
                let sum = (1..=ni).fold(FieldElement::ZERO, |a, j| {
                    let idx = stripe * n + topology.flat(NodeId::new(l, j));
                    a + placement.node(NodeId::new(l, j)).ok().and_then(|c| c.get(idx)).unwrap_or(FieldElement::ZERO)
                });
                if !sum.is_zero() {
                    parity = Some(json!({ "stripe": stripe, "cluster": l }));
                    break 'outer;
                }
            }
        }
        vec![
            check_owner_count(placement, n, 1),
            CheckResult::from_failure(format!("every {k} nodes have rank {m}"), rank_failure),
            CheckResult::from_failure("each cluster sums to zero", parity),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build, reconstruct, repair};

    #[test]
    fn example_parameters_and_rank() {
        let f = Field::gf256();
        let t = ClusterTopology::new(6, 4, 2).unwrap();
        let code = MsrNondivisible::new(t, &f).unwrap();
        let p = code.params();
        assert_eq!((p.alpha, p.file_size, p.gamma), (1, 3, 2));
        assert_eq!(code.outer_generator().cols(), 4);
        assert_eq!((code.generator().rows(), code.generator().cols()), (3, 6));
        let mut count = 0;
        for cols in (0..6).combinations(4) {
            assert_eq!(code.generator().select_columns(&cols).rank(&f), 3);
            count += 1;
        }
        assert_eq!(count, 15);
    }

    #[test]
    fn systematic_positions_read_off() {
        let t = ClusterTopology::new(6, 4, 2).unwrap();
        let code = MsrNondivisible::new(t, &Field::gf256()).unwrap();
        let src = vec![FieldElement(5), FieldElement(6), FieldElement(7)];
        let p = build(&code, &src).unwrap();
        // z_1, z_2 live on N(1,1), N(1,2); z_3 on N(2,1).
        let got: Vec<FieldElement> =
            [(1, 1), (1, 2), (2, 1)].iter().map(|&(l, j)| p.node(NodeId::new(l, j)).unwrap().symbols[0].value).collect();
        assert_eq!(got, src);
    }

    #[test]
    fn cluster_parity_relation() {
        let t = ClusterTopology::new(9, 4, 3).unwrap();
        let code = MsrNondivisible::new(t, &Field::gf256()).unwrap();
        let src: Vec<FieldElement> = (1..=3).map(|v| FieldElement(v * 17)).collect();
        let p = build(&code, &src).unwrap();
        for l in 1..=3 {
            let sum = (1..=3).fold(FieldElement::ZERO, |a, j| a + p.node(NodeId::new(l, j)).unwrap().symbols[0].value);
            assert!(sum.is_zero());
        }
    }

    #[test]
    fn single_cluster_degenerates_to_one_parity() {
        let t = ClusterTopology::new(5, 3, 1).unwrap();
        let code = MsrNondivisible::new(t, &Field::gf256()).unwrap();
        assert_eq!(code.params().file_size, 3);
        let src = vec![FieldElement(1), FieldElement(2), FieldElement(3)];
        let p = build(&code, &src).unwrap();
        for node in t.nodes() {
            let (tr, content) = repair(&code, &p, node).unwrap();
            assert_eq!(tr.gamma, 4);
            assert_eq!(&content, p.node(node).unwrap());
        }
        for nodes in t.nodes().combinations(3) {
            assert_eq!(reconstruct(&code, &p, &nodes).unwrap(), src);
        }
    }

    #[test]
    fn rejects_divisible() {
        let t = ClusterTopology::new(6, 3, 2).unwrap();
        assert!(matches!(MsrNondivisible::new(t, &Field::gf256()), Err(Error::Regime(_))));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(6, 0), 1);
        assert_eq!(binomial(24, 12), 2_704_156);
    }

    #[test]
    fn single_symbol_file_with_even_cluster_data() {
        // k - q = 1 and two data nodes per cluster: unscaled parities cancel.
        let t = ClusterTopology::new(3, 1, 1).unwrap();
        let code = MsrNondivisible::new(t, &Field::gf256()).unwrap();
        assert!(code.multipliers().iter().any(|&v| v != FieldElement::ONE));
        let p = build(&code, &[FieldElement(77)]).unwrap();
        for node in t.nodes() {
            assert_eq!(reconstruct(&code, &p, &[node]).unwrap(), vec![FieldElement(77)]);
            assert_eq!(&repair(&code, &p, node).unwrap().1, p.node(node).unwrap());
        }
    }
}
