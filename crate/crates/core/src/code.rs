//! Types shared by every construction: stored symbols, placements, repair
//! transcripts, and the [`RegeneratingCode`] trait that the generic
//! build / repair / reconstruct drivers run against.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{ParamsRepr, SystemParams};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement, FieldSpec};
use crate::harness::CheckResult;
use crate::mds::Matrix;
use crate::topology::{ClusterTopology, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodeKind {
    #[serde(rename = "mbr0")]
    Mbr0,
    #[serde(rename = "mbr")]
    Mbr,
    #[serde(rename = "msr0-div")]
    Msr0Div,
    #[serde(rename = "msr0-nondiv")]
    Msr0Nondiv,
    #[serde(rename = "msr-stacked")]
    MsrStacked,
    #[serde(rename = "msr-wrapped")]
    MsrWrapped,
}

impl CodeKind {
    pub const ALL: [CodeKind; 6] = [
        CodeKind::Mbr0,
        CodeKind::Mbr,
        CodeKind::Msr0Div,
        CodeKind::Msr0Nondiv,
        CodeKind::MsrStacked,
        CodeKind::MsrWrapped,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::Mbr0 => "mbr0",
            CodeKind::Mbr => "mbr",
            CodeKind::Msr0Div => "msr0-div",
            CodeKind::Msr0Nondiv => "msr0-nondiv",
            CodeKind::MsrStacked => "msr-stacked",
            CodeKind::MsrWrapped => "msr-wrapped",
        }
    }

    pub fn is_mbr(self) -> bool {
        matches!(self, CodeKind::Mbr0 | CodeKind::Mbr)
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<CodeKind> {
        CodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown code kind `{s}`")))
    }
}

/// A coded symbol with its 1-based global index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub idx: usize,
    pub value: FieldElement,
}

impl Symbol {
    pub fn new(idx: usize, value: FieldElement) -> Symbol {
        Symbol { idx, value }
    }
}

/// What one node stores, sorted by symbol index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeContent {
    pub node: NodeId,
    pub symbols: Vec<Symbol>,
}

impl NodeContent {
    pub fn new(node: NodeId, mut symbols: Vec<Symbol>) -> NodeContent {
        symbols.sort();
        NodeContent { node, symbols }
    }

    pub fn indices(&self) -> Vec<usize> {
        self.symbols.iter().map(|s| s.idx).collect()
    }

    pub fn get(&self, idx: usize) -> Option<FieldElement> {
        self.symbols.iter().find(|s| s.idx == idx).map(|s| s.value)
    }
}

/// Symbols one helper sent toward a repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contribution {
    pub helper: NodeId,
    pub intra: bool,
    pub symbols: Vec<Symbol>,
}

/// Everything a replacement node receives, plus measured bandwidth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairTranscript {
    pub failed: NodeId,
    pub contributions: Vec<Contribution>,
    /// Symbols per intra-cluster helper (largest observed).
    pub beta_i: usize,
    /// Symbols per cross-cluster helper (largest observed).
    pub beta_c: usize,
    pub gamma: usize,
}

impl RepairTranscript {
    pub fn new(failed: NodeId, contributions: Vec<Contribution>) -> RepairTranscript {
        let max_of = |intra: bool| {
            contributions
                .iter()
                .filter(|c| c.intra == intra)
                .map(|c| c.symbols.len())
                .max()
                .unwrap_or(0)
        };
        let (beta_i, beta_c) = (max_of(true), max_of(false));
        let gamma = contributions.iter().map(|c| c.symbols.len()).sum();
        RepairTranscript { failed, contributions, beta_i, beta_c, gamma }
    }

    /// Recomputes the measured fields after contributions were edited.
    pub fn remeasure(&mut self) {
        *self = RepairTranscript::new(self.failed, std::mem::take(&mut self.contributions));
    }

    pub fn from_helper(&self, helper: NodeId) -> Option<&Contribution> {
        self.contributions.iter().find(|c| c.helper == helper)
    }

    /// Every helper of a class sent the same number of symbols.
    pub fn uniform_per_class(&self) -> bool {
        self.contributions
            .iter()
            .all(|c| c.symbols.len() == if c.intra { self.beta_i } else { self.beta_c })
    }

    /// Distinct `(helper, symbol)` pairs, ignoring repetition.
    pub fn distinct_symbols(&self) -> BTreeSet<(NodeId, Symbol)> {
        self.contributions
            .iter()
            .flat_map(|c| c.symbols.iter().map(move |&s| (c.helper, s)))
            .collect()
    }

    pub fn to_json(&self, field: &Field) -> Value {
        json!({
            "failed": node_json(self.failed),
            "beta_i": self.beta_i,
            "beta_c": self.beta_c,
            "gamma": self.gamma,
            "contributions": self.contributions.iter().map(|c| json!({
                "helper": node_json(c.helper),
                "intra": c.intra,
                "symbols": symbols_json(&c.symbols, field),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<RepairTranscript> {
        let contributions = array(v, "contributions")?
            .iter()
            .map(|c| {
                Ok(Contribution {
                    helper: parse_node(get(c, "helper")?)?,
                    intra: get(c, "intra")?.as_bool().ok_or_else(|| bad("intra"))?,
                    symbols: parse_symbols(get(c, "symbols")?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let t = RepairTranscript::new(parse_node(get(v, "failed")?)?, contributions);
        for (key, measured) in [("beta_i", t.beta_i), ("beta_c", t.beta_c), ("gamma", t.gamma)] {
            if get(v, key)?.as_u64() != Some(measured as u64) {
                return Err(Error::Format(format!("transcript `{key}` disagrees with its contributions")));
            }
        }
        Ok(t)
    }
}

/// An exact-repair, any-`k` reconstruction code for a clustered system.
///
/// Implementations work on a single stripe of `M` source symbols. Symbol
/// indices, both stored and transmitted, lie in `1..=index_span()`.
pub trait RegeneratingCode: Send + Sync {
    fn kind(&self) -> CodeKind;
    fn params(&self) -> &SystemParams;
    fn field(&self) -> &Field;

    fn topology(&self) -> &ClusterTopology {
        &self.params().topology
    }

    fn index_span(&self) -> usize;

    /// Contents of every node, in flat order.
    fn encode(&self, source: &[FieldElement]) -> Result<Vec<NodeContent>>;

    /// What `helper` sends toward rebuilding `failed`, computed from the
    /// helper's own content only.
    fn transmit(&self, helper: &NodeContent, failed: NodeId) -> Result<Vec<Symbol>>;

    /// Rebuilds `failed` from the transcript alone.
    fn regenerate(&self, transcript: &RepairTranscript) -> Result<NodeContent>;

    /// Recovers the source from at least `k` distinct nodes.
    fn decode(&self, contacted: &[NodeContent]) -> Result<Vec<FieldElement>>;

    /// Construction-specific structural checks over a placement.
    fn invariants(&self, _placement: &Placement) -> Vec<CheckResult> {
        Vec::new()
    }

    /// Generator of the outer MDS code, where there is a single one.
    fn generator(&self) -> Option<&Matrix> {
        None
    }
}

/// Stored contents of all nodes for `stripes` independent code instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub kind: CodeKind,
    pub params: SystemParams,
    pub field: FieldSpec,
    pub stripes: usize,
    /// In flat order; stripe `p` occupies indices `p·span + 1 ..= (p+1)·span`.
    pub nodes: Vec<NodeContent>,
}

impl Placement {
    pub fn node(&self, id: NodeId) -> Result<&NodeContent> {
        self.nodes
            .iter()
            .find(|c| c.node == id)
            .ok_or_else(|| Error::Parameter(format!("{id} is not part of this placement")))
    }

    pub fn to_json(&self, field: &Field) -> Value {
        let mut params = serde_json::to_value(ParamsRepr::from(&self.params)).expect("plain data");
        params["field"] = json!({ "m": self.field.m, "poly": self.field.poly });
        params["stripes"] = json!(self.stripes);
        json!({
            "kind": self.kind.as_str(),
            "params": params,
            "nodes": self.nodes.iter().map(|c| json!({
                "l": c.node.l,
                "j": c.node.j,
                "symbols": symbols_json(&c.symbols, field),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Placement> {
        let kind: CodeKind = get(v, "kind")?.as_str().ok_or_else(|| bad("kind"))?.parse()?;
        let p = get(v, "params")?;
        let repr: ParamsRepr =
            serde_json::from_value(p.clone()).map_err(|e| Error::Format(format!("params: {e}")))?;
        let params = SystemParams::try_from(&repr)?;
        let field: FieldSpec = serde_json::from_value(get(p, "field")?.clone())
            .map_err(|e| Error::Format(format!("field: {e}")))?;
        let stripes = get(p, "stripes")?.as_u64().ok_or_else(|| bad("stripes"))? as usize;
        let nodes = array(v, "nodes")?
            .iter()
            .map(|n| {
                let node = parse_node(n)?;
                Ok(NodeContent::new(node, parse_symbols(get(n, "symbols")?)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Placement { kind, params, field, stripes, nodes })
    }
}

fn stripe_of(idx: usize, span: usize) -> usize {
    (idx - 1) / span
}

fn shift(symbols: &[Symbol], by: isize) -> Vec<Symbol> {
    symbols
        .iter()
        .map(|s| Symbol::new((s.idx as isize + by) as usize, s.value))
        .collect()
}

/// Splits content into per-stripe pieces with stripe-local indices.
fn split(content: &NodeContent, span: usize, stripes: usize) -> Result<Vec<NodeContent>> {
    let mut out: Vec<NodeContent> =
        (0..stripes).map(|_| NodeContent { node: content.node, symbols: Vec::new() }).collect();
    for s in &content.symbols {
        if s.idx == 0 || stripe_of(s.idx, span) >= stripes {
            return Err(Error::Format(format!("symbol index {} outside the placement", s.idx)));
        }
        let p = stripe_of(s.idx, span);
        out[p].symbols.push(Symbol::new(s.idx - p * span, s.value));
    }
    Ok(out)
}

/// Encodes `source` (length `M · stripes`) into a placement.
pub fn build(code: &dyn RegeneratingCode, source: &[FieldElement]) -> Result<Placement> {
    let m = code.params().file_size;
    if source.is_empty() || !source.len().is_multiple_of(m) {
        return Err(Error::Parameter(format!(
            "source length {} is not a positive multiple of M = {m}",
            source.len()
        )));
    }
    let stripes = source.len() / m;
    let span = code.index_span();
    let mut nodes: Vec<NodeContent> = code
        .topology()
        .nodes()
        .map(|node| NodeContent { node, symbols: Vec::new() })
        .collect();
    for (p, chunk) in source.chunks(m).enumerate() {
        for (slot, piece) in nodes.iter_mut().zip(code.encode(chunk)?) {
            slot.symbols.extend(shift(&piece.symbols, (p * span) as isize));
        }
    }
    Ok(Placement {
        kind: code.kind(),
        params: *code.params(),
        field: code.field().spec(),
        stripes,
        nodes,
    })
}

/// Gathers helper transmissions for `failed` from every other node.
pub fn collect_transcript(
    code: &dyn RegeneratingCode,
    placement: &Placement,
    failed: NodeId,
) -> Result<RepairTranscript> {
    check_compatible(code, placement)?;
    let topology = code.topology();
    if !topology.contains(failed) {
        return Err(Error::Parameter(format!("{failed} is outside the topology")));
    }
    let span = code.index_span();
    let mut contributions = Vec::new();
    for helper in placement.nodes.iter().filter(|c| c.node != failed) {
        let mut symbols = Vec::new();
        for (p, piece) in split(helper, span, placement.stripes)?.iter().enumerate() {
            symbols.extend(shift(&code.transmit(piece, failed)?, (p * span) as isize));
        }
        contributions.push(Contribution { helper: helper.node, intra: helper.node.l == failed.l, symbols });
    }
    Ok(RepairTranscript::new(failed, contributions))
}

/// Rebuilds the failed node named by `transcript` from the transcript alone.
pub fn regenerate(
    code: &dyn RegeneratingCode,
    stripes: usize,
    transcript: &RepairTranscript,
) -> Result<NodeContent> {
    let span = code.index_span();
    let mut symbols = Vec::new();
    for p in 0..stripes {
        let local = RepairTranscript {
            contributions: transcript
                .contributions
                .iter()
                .map(|c| Contribution {
                    helper: c.helper,
                    intra: c.intra,
                    symbols: c
                        .symbols
                        .iter()
                        .filter(|s| s.idx >= 1 && stripe_of(s.idx, span) == p)
                        .map(|s| Symbol::new(s.idx - p * span, s.value))
                        .collect(),
                })
                .collect(),
            ..transcript.clone()
        };
        symbols.extend(shift(&code.regenerate(&local)?.symbols, (p * span) as isize));
    }
    Ok(NodeContent::new(transcript.failed, symbols))
}

/// Repairs `failed`: collects the transcript, then regenerates from it.
pub fn repair(
    code: &dyn RegeneratingCode,
    placement: &Placement,
    failed: NodeId,
) -> Result<(RepairTranscript, NodeContent)> {
    let transcript = collect_transcript(code, placement, failed)?;
    let content = regenerate(code, placement.stripes, &transcript)?;
    Ok((transcript, content))
}

/// Recovers the full source from the contents of `contacted`.
pub fn reconstruct(
    code: &dyn RegeneratingCode,
    placement: &Placement,
    contacted: &[NodeId],
) -> Result<Vec<FieldElement>> {
    check_compatible(code, placement)?;
    let distinct: BTreeSet<NodeId> = contacted.iter().copied().collect();
    let k = code.topology().k();
    if distinct.len() < k {
        return Err(Error::Insufficient { needed: k, got: distinct.len() });
    }
    let contents = distinct
        .iter()
        .map(|&id| placement.node(id))
        .collect::<Result<Vec<_>>>()?;
    let span = code.index_span();
    let pieces = contents
        .iter()
        .map(|c| split(c, span, placement.stripes))
        .collect::<Result<Vec<_>>>()?;
    let mut source = Vec::with_capacity(code.params().file_size * placement.stripes);
    for p in 0..placement.stripes {
        let stripe: Vec<NodeContent> = pieces.iter().map(|v| v[p].clone()).collect();
        source.extend(code.decode(&stripe)?);
    }
    Ok(source)
}

fn check_compatible(code: &dyn RegeneratingCode, placement: &Placement) -> Result<()> {
    if placement.kind != code.kind()
        || placement.params != *code.params()
        || placement.field != code.field().spec()
    {
        return Err(Error::Format("placement was not built by this code".into()));
    }
    if placement.nodes.len() != code.topology().n() {
        return Err(Error::Format(format!(
            "placement lists {} nodes, topology has {}",
            placement.nodes.len(),
            code.topology().n()
        )));
    }
    Ok(())
}

pub fn node_json(node: NodeId) -> Value {
    json!({ "l": node.l, "j": node.j })
}

pub fn node_content_json(content: &NodeContent, field: &Field) -> Value {
    json!({ "l": content.node.l, "j": content.node.j, "symbols": symbols_json(&content.symbols, field) })
}

fn symbols_json(symbols: &[Symbol], field: &Field) -> Vec<Value> {
    let width = field.degree().div_ceil(4) as usize;
    symbols
        .iter()
        .map(|s| json!({ "idx": s.idx, "val_hex": format!("{:0width$x}", s.value.0, width = width) }))
        .collect()
}

fn bad(key: &str) -> Error {
    Error::Format(format!("missing or malformed `{key}`"))
}

fn get<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(key))
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>> {
    get(v, key)?.as_array().ok_or_else(|| bad(key))
}

fn parse_node(v: &Value) -> Result<NodeId> {
    let field = |key| get(v, key)?.as_u64().map(|x| x as usize).ok_or_else(|| bad(key));
    Ok(NodeId::new(field("l")?, field("j")?))
}

fn parse_symbols(v: &Value) -> Result<Vec<Symbol>> {
    v.as_array()
        .ok_or_else(|| bad("symbols"))?
        .iter()
        .map(|s| {
            let idx = get(s, "idx")?.as_u64().ok_or_else(|| bad("idx"))? as usize;
            let hex = get(s, "val_hex")?.as_str().ok_or_else(|| bad("val_hex"))?;
            let value = u16::from_str_radix(hex, 16).map_err(|_| bad("val_hex"))?;
            Ok(Symbol::new(idx, FieldElement(value)))
        })
        .collect()
}

/// Converts bytes to symbols: one byte each over GF(2^8), big-endian pairs
/// over GF(2^16).
pub fn bytes_to_symbols(bytes: &[u8], field: &Field) -> Result<Vec<FieldElement>> {
    match field.degree() {
        8 => Ok(bytes.iter().map(|&b| FieldElement(b as u16)).collect()),
        16 => {
            if !bytes.len().is_multiple_of(2) {
                return Err(Error::Parameter("GF(2^16) payloads need an even byte count".into()));
            }
            Ok(bytes.chunks(2).map(|c| FieldElement(u16::from_be_bytes([c[0], c[1]]))).collect())
        }
        m => Err(Error::InvalidField(format!("byte payloads need m = 8 or 16, not {m}"))),
    }
}

pub fn symbols_to_bytes(symbols: &[FieldElement], field: &Field) -> Vec<u8> {
    if field.degree() == 16 {
        symbols.iter().flat_map(|s| s.0.to_be_bytes()).collect()
    } else {
        symbols.iter().map(|s| s.0 as u8).collect()
    }
}
