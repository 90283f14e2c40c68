//! Minimum-bandwidth code with no cross-cluster repair traffic.
//!
//! Builds the 12-node, 3-cluster system, shows where each node's symbols
//! come from, repairs a node and decodes from a cluster-heavy contact set.

use clustered_regen::code::{build, reconstruct, repair};
use clustered_regen::harness::random_source;
use clustered_regen::{CodeSpec, NodeId};

fn main() -> clustered_regen::Result<()> {
    let code = CodeSpec::mbr_zero(12, 6, 3)?.instantiate()?;
    let p = code.params();
    println!("α = {}, γ = {}, M = {}, θ = {:?}", p.alpha, p.gamma, p.file_size, p.theta);

    let source = random_source(code.field(), p.file_size, 42);
    let placement = build(code.as_ref(), &source)?;
    for c in &placement.nodes {
        println!("{:>7} holds {:?}", c.node.to_string(), c.indices());
    }

    let failed = NodeId::new(2, 3);
    let (transcript, rebuilt) = repair(code.as_ref(), &placement, failed)?;
    for c in transcript.contributions.iter().filter(|c| !c.symbols.is_empty()) {
        let idx: Vec<usize> = c.symbols.iter().map(|s| s.idx).collect();
        println!("{} sends {idx:?}", c.helper);
    }
    assert_eq!(&rebuilt, placement.node(failed)?);
    println!("{failed} rebuilt from γ = {} symbols", transcript.gamma);

    let contact: Vec<NodeId> = (1..=4).map(|j| NodeId::new(1, j)).chain([NodeId::new(2, 1), NodeId::new(2, 2)]).collect();
    assert_eq!(reconstruct(code.as_ref(), &placement, &contact)?, source);
    println!("decoded from cluster 1 plus N(2,1), N(2,2)");
    Ok(())
}
