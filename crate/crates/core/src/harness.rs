//! Executable verification: exact repair, any-`k` reconstruction,
//! bandwidth accounting, distinct-symbol counting and structural scans.

use std::collections::BTreeSet;
use std::time::Instant;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::capacity::{
    capacity_eval, derive, int, mbr_filesize_pos, mbr_filesize_zero, mbr_point, msr_point, ratio,
    rational_json, SystemParams,
};
use crate::code::{self, Placement, RegeneratingCode, RepairTranscript};
use crate::config::CodeSpec;
use crate::error::Result;
use crate::galois::{Field, FieldElement, FieldSpec};
use crate::mbr::MbrCode;
use crate::msr::binomial;
use crate::topology::{pairs, ClusterTopology, ContactVector, NodeId};

/// Subsets tested exhaustively up to this many.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;
/// Random subsets drawn above [`EXHAUSTIVE_LIMIT`].
pub const SAMPLE_COUNT: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub counterexample: Option<Value>,
}

impl CheckResult {
    pub fn pass(name: impl Into<String>) -> CheckResult {
        CheckResult { name: name.into(), pass: true, counterexample: None }
    }

    pub fn fail(name: impl Into<String>, counterexample: Value) -> CheckResult {
        CheckResult { name: name.into(), pass: false, counterexample: Some(counterexample) }
    }

    /// Passes when `first_failure` is `None`.
    pub fn from_failure(name: impl Into<String>, first_failure: Option<Value>) -> CheckResult {
        match first_failure {
            None => CheckResult::pass(name),
            Some(c) => CheckResult::fail(name, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub system: Value,
    pub checks: Vec<CheckResult>,
    pub elapsed_ms: u128,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }
}

fn node_names(nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(NodeId::to_string).collect()
}

/// Repairs `node` and checks content and bandwidth against the declared parameters.
pub fn verify_exact_repair(code: &dyn RegeneratingCode, placement: &Placement, node: NodeId) -> CheckResult {
    verify_exact_repair_with(code, placement, node, |_| {})
}

/// As [`verify_exact_repair`], letting `tamper` edit the transcript before regeneration.
pub fn verify_exact_repair_with(
    code: &dyn RegeneratingCode,
    placement: &Placement,
    node: NodeId,
    tamper: impl Fn(&mut RepairTranscript),
) -> CheckResult {
    let name = format!("exact repair of {node}");
    match repair_failure(code, placement, node, tamper) {
        Ok(None) => CheckResult::pass(name),
        Ok(Some(reason)) => CheckResult::fail(name, json!({ "node": node.to_string(), "reason": reason })),
        Err(e) => CheckResult::fail(name, json!({ "node": node.to_string(), "reason": e.to_string() })),
    }
}

fn repair_failure(
    code: &dyn RegeneratingCode,
    placement: &Placement,
    node: NodeId,
    tamper: impl Fn(&mut RepairTranscript),
) -> Result<Option<String>> {
    let mut transcript = code::collect_transcript(code, placement, node)?;
    tamper(&mut transcript);
    let rebuilt = code::regenerate(code, placement.stripes, &transcript)?;
    let p = code.params();
    let t = &p.topology;
    let s = placement.stripes;
    let ni = t.cluster_size();
    if &rebuilt != placement.node(node)? {
        return Ok(Some("regenerated content differs from the original".into()));
    }
    let intra = transcript.contributions.iter().filter(|c| c.intra).count();
    let cross = transcript.contributions.len() - intra;
    if (intra, cross) != (ni - 1, t.n() - ni) {
        return Ok(Some(format!("{intra} intra and {cross} cross helpers")));
    }
    if !transcript.uniform_per_class() {
        return Ok(Some("helpers of one class sent different amounts".into()));
    }
    let measured = (transcript.beta_i, transcript.beta_c, transcript.gamma);
    let declared = (p.beta_i * s, p.beta_c * s, p.gamma * s);
    // A helper class with no members has no observable per-helper count.
    let comparable = (
        if ni == 1 { declared.0 } else { measured.0 },
        if t.n() == ni { declared.1 } else { measured.1 },
        measured.2,
    );
    if comparable != declared {
        return Ok(Some(format!("measured (β_I, β_c, γ) = {measured:?}, declared {declared:?}")));
    }
    Ok(None)
}

/// Every node in turn; reports the first failure.
pub fn verify_all_repairs(code: &dyn RegeneratingCode, placement: &Placement) -> CheckResult {
    let name = format!("exact repair of all {} nodes", code.topology().n());
    let failure = code
        .topology()
        .nodes()
        .map(|node| verify_exact_repair(code, placement, node))
        .find(|c| !c.pass)
        .and_then(|c| c.counterexample);
    CheckResult::from_failure(name, failure)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Exhaustive,
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] subsets, otherwise seeded samples
    /// plus cluster-heavy subsets.
    Auto { seed: u64 },
}

/// The `k`-subsets a reconstruction check visits.
pub fn contact_sets(topology: &ClusterTopology, sampling: Sampling) -> Vec<Vec<NodeId>> {
    let (n, k) = (topology.n(), topology.k());
    let nodes: Vec<NodeId> = topology.nodes().collect();
    let seed = match sampling {
        Sampling::Auto { seed } if binomial(n, k) > EXHAUSTIVE_LIMIT => seed,
        _ => return nodes.iter().copied().combinations(k).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    // Fill whole clusters first, starting from each cluster in turn.
    let ni = topology.cluster_size();
    for start in 0..topology.clusters() {
        let set: Vec<NodeId> = (0..n).map(|i| nodes[(start * ni + i) % n]).take(k).sorted().collect();
        sets.insert(set);
    }
    while sets.len() < SAMPLE_COUNT + topology.clusters() {
        let mut idx = sample(&mut rng, n, k).into_vec();
        idx.sort_unstable();
        sets.insert(idx.into_iter().map(|i| nodes[i]).collect());
    }
    sets.into_iter().collect()
}

pub fn verify_reconstruction(
    code: &dyn RegeneratingCode,
    placement: &Placement,
    source: &[FieldElement],
    sampling: Sampling,
) -> CheckResult {
    let sets = contact_sets(code.topology(), sampling);
    let total = binomial(code.topology().n(), code.topology().k());
    let name = if sets.len() == total {
        format!("reconstruction from all {total} contact sets")
    } else {
        format!("reconstruction from {} of {total} contact sets", sets.len())
    };
    let failure = sets.iter().find_map(|set| {
        let reason = match code::reconstruct(code, placement, set) {
            Ok(s) if s == source => return None,
            Ok(_) => "decoded source differs".to_string(),
            Err(e) => e.to_string(),
        };
        Some(json!({ "contact": node_names(set), "reason": reason }))
    });
    CheckResult::from_failure(name, failure)
}

/// Distinct symbol indices held by `nodes`, per stripe.
pub fn count_distinct(placement: &Placement, nodes: &[NodeId]) -> Result<usize> {
    let mut seen = BTreeSet::new();
    for &id in nodes {
        seen.extend(placement.node(id)?.indices());
    }
    Ok(seen.len() / placement.stripes)
}

/// `kα - ΣC(ω_l,2)` at `ε = 0`; `kα - C(k,2) - (χ-1)ΣC(ω_l,2)` otherwise.
pub fn closed_form_count(params: &SystemParams, omega: &ContactVector) -> usize {
    let k = params.topology.k();
    let base = k * params.alpha;
    if params.epsilon == int(0) {
        base - omega.same_cluster_pairs()
    } else {
        let chi = params.beta_i;
        base - pairs(k) - (chi - 1) * omega.same_cluster_pairs()
    }
}

/// One row of the distinct-symbol table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub omega: ContactVector,
    pub measured: usize,
    pub closed_form: usize,
}

pub fn counting_table(code: &dyn RegeneratingCode, placement: &Placement) -> Result<Vec<CountRow>> {
    let t = code.topology();
    t.contact_vectors()
        .into_iter()
        .map(|omega| {
            let measured = count_distinct(placement, &t.nodes_for(&omega))?;
            Ok(CountRow { closed_form: closed_form_count(code.params(), &omega), measured, omega })
        })
        .collect()
}

/// Counting bounds over every contact vector of an MBR placement.
pub fn verify_counting(code: &dyn RegeneratingCode, placement: &Placement, seed: u64) -> Vec<CheckResult> {
    let m = code.params().file_size;
    let t = *code.topology();
    let rows = match counting_table(code, placement) {
        Ok(rows) => rows,
        Err(e) => return vec![CheckResult::fail("distinct-symbol counting", json!({ "reason": e.to_string() }))],
    };
    let row_json = |r: &CountRow| {
        json!({ "omega": r.omega.to_string(), "measured": r.measured, "closed_form": r.closed_form, "M": m })
    };
    let star = t.omega_star();
    let star_count = rows.iter().find(|r| r.omega == star).map(|r| r.measured);
    let min = rows.iter().map(|r| r.measured).min();

    let mut out = vec![
        CheckResult::from_failure(
            format!("n(ω) equals the closed form for all {} contact vectors", rows.len()),
            rows.iter().find(|r| r.measured != r.closed_form).map(row_json),
        ),
        CheckResult::from_failure("n(ω) ≥ M for every ω", rows.iter().find(|r| r.measured < m).map(row_json)),
        CheckResult::from_failure(
            format!("n(ω*) = M at ω* = {star}"),
            (star_count != Some(m)).then(|| json!({ "omega": star.to_string(), "measured": star_count, "M": m })),
        ),
        CheckResult::from_failure(
            "minimum of n(ω) is attained at ω*",
            (min != star_count).then(|| json!({ "min": min, "at_omega_star": star_count })),
        ),
    ];

    // Any nodes realizing ω should give the same count as the lowest-index choice.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ni = t.cluster_size();
    let mut failure = None;
    'outer: for r in &rows {
        for _ in 0..4 {
            let nodes: Vec<NodeId> = r
                .omega
                .0
                .iter()
                .enumerate()
                .flat_map(|(l, &w)| {
                    sample(&mut rng, ni, w).into_iter().map(move |j| NodeId::new(l + 1, j + 1)).collect::<Vec<_>>()
                })
                .collect();
            match count_distinct(placement, &nodes) {
                Ok(c) if c == r.measured => {}
                other => {
                    failure = Some(json!({
                        "omega": r.omega.to_string(),
                        "contact": node_names(&nodes),
                        "measured": other.ok(),
                        "lowest_index_count": r.measured,
                    }));
                    break 'outer;
                }
            }
        }
    }
    out.push(CheckResult::from_failure("n(ω) independent of which nodes realize ω", failure));
    out
}

/// Pairs of nodes whose shared-index count differs from `expected(a, b)`.
pub(crate) fn check_pair_sharing(
    placement: &Placement,
    name: impl Into<String>,
    expected: impl Fn(NodeId, NodeId) -> usize,
) -> CheckResult {
    let sets: Vec<BTreeSet<usize>> =
        placement.nodes.iter().map(|c| c.indices().into_iter().collect()).collect();
    let mut failure = None;
    'outer: for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            let (x, y) = (placement.nodes[a].node, placement.nodes[b].node);
            let shared = sets[a].intersection(&sets[b]).count();
            let want = expected(x, y) * placement.stripes;
            if shared != want {
                failure = Some(json!({ "nodes": [x.to_string(), y.to_string()], "shared": shared, "expected": want }));
                break 'outer;
            }
        }
    }
    CheckResult::from_failure(name, failure)
}

/// Every index in `1..=span·stripes` held by exactly `copies` nodes.
pub(crate) fn check_owner_count(placement: &Placement, span: usize, copies: usize) -> CheckResult {
    let mut owners = vec![0usize; span * placement.stripes];
    let mut failure = None;
    for s in placement.nodes.iter().flat_map(|c| &c.symbols) {
        match owners.get_mut(s.idx.wrapping_sub(1)) {
            Some(o) => *o += 1,
            None => failure = Some(json!({ "idx": s.idx, "reason": "index out of range" })),
        }
    }
    if failure.is_none() {
        failure = owners
            .iter()
            .position(|&o| o != copies)
            .map(|i| json!({ "idx": i + 1, "owners": owners[i], "expected": copies }));
    }
    let name = if copies == 1 { "each symbol stored once".to_string() } else { format!("each symbol stored on exactly {copies} nodes") };
    CheckResult::from_failure(name, failure)
}

/// Node capacity, the closed-form operating point, and construction-specific clauses.
pub fn verify_structure(code: &dyn RegeneratingCode, placement: &Placement) -> Vec<CheckResult> {
    let p = code.params();
    let alpha = p.alpha * placement.stripes;
    let wrong = placement.nodes.iter().find(|c| c.symbols.len() != alpha);
    let mut out = vec![CheckResult::from_failure(
        format!("every node stores α = {} symbols per stripe", p.alpha),
        wrong.map(|c| json!({ "node": c.node.to_string(), "stored": c.symbols.len() })),
    )];
    out.push(operating_point_check(p, code.kind().is_mbr()));
    out.extend(code.invariants(placement));
    out
}

fn operating_point_check(p: &SystemParams, mbr: bool) -> CheckResult {
    let t = &p.topology;
    let m = int(p.file_size);
    let cap = capacity_eval(t, int(p.alpha), int(p.beta_i), int(p.beta_c));
    let point = if mbr { mbr_point(t, p.epsilon, m) } else { msr_point(t, p.epsilon, m) };
    let ok = match &point {
        Ok(pt) => cap == m && pt.alpha == int(p.alpha) && pt.gamma == int(p.gamma),
        Err(_) => false,
    };
    let name = if mbr { "parameters sit on the MBR point" } else { "parameters sit on the MSR point" };
    CheckResult::from_failure(
        name,
        (!ok).then(|| {
            json!({
                "capacity": rational_json(&cap),
                "M": p.file_size,
                "alpha": p.alpha,
                "gamma": p.gamma,
                "closed_form": point.as_ref().ok().map(|pt| json!({
                    "alpha": rational_json(&pt.alpha),
                    "gamma": rational_json(&pt.gamma),
                })),
            })
        }),
    )
}

/// Options for [`run_system`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Declared `M`; a mismatch is a failed check.
    pub file_size: Option<usize>,
    pub exhaustive: bool,
}

pub fn random_source(field: &Field, len: usize, seed: u64) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| FieldElement(rng.gen_range(0..field.order()) as u16)).collect()
}

/// Builds the system with a seeded random source and runs every applicable check.
pub fn run_system(spec: &CodeSpec, options: RunOptions) -> Result<VerificationReport> {
    let started = Instant::now();
    let code = spec.instantiate()?;
    let p = *code.params();
    let source = random_source(code.field(), p.file_size, options.seed);
    let placement = code::build(code.as_ref(), &source)?;

    let mut checks = Vec::new();
    if let Some(declared) = options.file_size {
        checks.push(CheckResult::from_failure(
            format!("file size M = {declared}"),
            (declared != p.file_size).then(|| json!({ "declared": declared, "constructed": p.file_size })),
        ));
    }
    checks.extend(verify_structure(code.as_ref(), &placement));
    checks.push(verify_all_repairs(code.as_ref(), &placement));
    let sampling = if options.exhaustive { Sampling::Exhaustive } else { Sampling::Auto { seed: options.seed } };
    checks.push(verify_reconstruction(code.as_ref(), &placement, &source, sampling));
    if code.kind().is_mbr() {
        checks.extend(verify_counting(code.as_ref(), &placement, options.seed));
    }

    let mut system = spec.describe();
    let field = code.field().spec();
    system["field"] = json!({ "m": field.m, "poly": field.poly });
    system["params"] = p.to_json();
    system["seed"] = json!(options.seed);
    Ok(VerificationReport { system, checks, elapsed_ms: started.elapsed().as_millis() })
}

pub fn run_suite(entries: &[(CodeSpec, RunOptions)]) -> Result<Vec<VerificationReport>> {
    entries.iter().map(|(spec, opts)| run_system(spec, *opts)).collect()
}

/// Wrapper repairs receive the same distinct symbols whatever `ε` is.
pub fn verify_dedup_invariance(specs: &[CodeSpec], seed: u64) -> Result<CheckResult> {
    let name = "distinct repair symbols independent of ε";
    let mut reference: Option<(String, Vec<_>)> = None;
    for spec in specs {
        let code = spec.instantiate()?;
        let source = random_source(code.field(), code.params().file_size, seed);
        let placement = code::build(code.as_ref(), &source)?;
        let per_node = code
            .topology()
            .nodes()
            .map(|node| code::collect_transcript(code.as_ref(), &placement, node).map(|t| t.distinct_symbols()))
            .collect::<Result<Vec<_>>>()?;
        let label = crate::capacity::format_rational(&spec.epsilon);
        match &reference {
            None => reference = Some((label, per_node)),
            Some((ref_label, ref_sets)) => {
                if let Some(i) = (0..per_node.len()).find(|&i| per_node[i] != ref_sets[i]) {
                    return Ok(CheckResult::fail(
                        name,
                        json!({
                            "node": code.topology().pair(i + 1)?.to_string(),
                            "epsilons": [ref_label, label],
                        }),
                    ));
                }
            }
        }
    }
    Ok(CheckResult::pass(name))
}

/// One row of the identity sweep CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub clusters: usize,
    pub check: &'static str,
    pub pass: bool,
}

pub const SWEEP_HEADER: &str = "n,k,L,check,pass";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.n, self.k, self.clusters, self.check, self.pass)
    }
}

/// Every topology with `n ≤ n_max`, `L | n`, `1 ≤ k < n`.
pub fn sweep_topologies(n_max: usize) -> Vec<ClusterTopology> {
    (2..=n_max)
        .flat_map(|n| {
            (1..=n).filter(move |l| n % l == 0).flat_map(move |l| (1..n).map(move |k| (n, k, l)))
        })
        .map(|(n, k, l)| ClusterTopology::new(n, k, l).expect("valid by construction"))
        .collect()
}

/// Closed-form identities for one topology.
pub fn identity_checks(t: &ClusterTopology) -> Vec<(&'static str, bool)> {
    let d = derive(t);
    let (n, k, ni) = (t.n(), t.k(), t.cluster_size());
    let (q, r) = (d.q, d.r);

    let sum_g: usize = d.g.iter().sum();
    let weighted: usize = d.g.iter().enumerate().map(|(i, &g)| (i + 1) * g).sum();
    let mut before = 0;
    let mut double = 0;
    for &g in &d.g {
        double += (1..=g).map(|j| before + j).sum::<usize>();
        before += g;
    }
    let tau_tail: usize = d.z[d.tau..].iter().sum();
    let h_ok = d.h.windows(2).all(|w| w[0] <= w[1]) && d.h.iter().all(|&h| (1..=ni).contains(&h));

    let zero_ok = int(mbr_filesize_zero(t)) == capacity_eval(t, int(ni - 1), int(1), int(0));
    let pos_ok = (1..=4).all(|chi| {
        let alpha = (ni - 1) * chi + (n - ni);
        int(mbr_filesize_pos(t, chi)) == capacity_eval(t, int(alpha), int(chi), int(1))
    });
    let point_ok = (1..=4).all(|chi| {
        let alpha = int((ni - 1) * chi + (n - ni));
        let m = int(mbr_filesize_pos(t, chi));
        // β_c = 1 normalization: ε = 1/χ.
        mbr_point(t, ratio(1, chi as i64), m).is_ok_and(|p| p.alpha == alpha && p.gamma == alpha)
    }) && (ni < 2
        || mbr_point(t, int(0), int(mbr_filesize_zero(t))).is_ok_and(|p| p.alpha == int(ni - 1)));
    let msr_ok = {
        let m = int(k * (n - k));
        let large = (1..=(n - k) as i64).all(|den| msr_point(t, ratio(1, den), m).is_ok_and(|p| p.alpha == m / int(k)));
        let zero = ni == 1 || msr_point(t, int(0), m).is_ok_and(|p| q == 0 || p.alpha > m / int(k));
        let gap = n - k < 2 || msr_point(t, ratio(1, (n - k + 1) as i64), m).is_err();
        large && zero && gap
    };

    vec![
        ("sum_g_equals_k", sum_g == k),
        ("weighted_sum_g", 2 * weighted == q * ni * ni + r * r + k),
        ("double_sum_g", 2 * double == k + k * k),
        ("tau_identity", d.tau + tau_tail == k - q),
        ("h_nondecreasing", h_ok),
        ("mbr_zero_file_size", zero_ok),
        ("mbr_pos_file_size_chi_le_4", pos_ok),
        ("mbr_point", point_ok),
        ("msr_regimes", msr_ok),
    ]
}

pub fn identity_sweep(n_max: usize) -> Vec<SweepRow> {
    sweep_topologies(n_max)
        .iter()
        .flat_map(|t| {
            identity_checks(t).into_iter().map(move |(check, pass)| SweepRow {
                n: t.n(),
                k: t.k(),
                clusters: t.clusters(),
                check,
                pass,
            })
        })
        .collect()
}

/// Outcome of building the `ε = 0` MBR code for one sweep topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSizeRow {
    pub topology: ClusterTopology,
    pub theta: usize,
    pub built: bool,
}

/// Builds the `ε = 0` MBR code over GF(2^8) for every sweep topology with
/// `n_I ≥ 2` and `θ ≤ 255`, reconstructing once from the nodes at `ω*`.
pub fn field_size_claim(n_max: usize) -> Vec<FieldSizeRow> {
    let field = Field::from_spec(FieldSpec::gf256()).expect("default field");
    sweep_topologies(n_max)
        .into_iter()
        .filter(|t| t.cluster_size() >= 2)
        .filter_map(|t| {
            let theta = t.n() * (t.cluster_size() - 1) / 2;
            (theta <= 255).then_some((t, theta))
        })
        .map(|(t, theta)| {
            let built = MbrCode::zero(t, &field).is_ok_and(|code| {
                let source = random_source(&field, code.params().file_size, theta as u64);
                code.theta() == theta
                    && code::build(&code, &source).is_ok_and(|p| {
                        code::reconstruct(&code, &p, &t.nodes_for(&t.omega_star())).is_ok_and(|s| s == source)
                    })
            });
            FieldSizeRow { topology: t, theta, built }
        })
        .collect()
}
