//! Minimum-bandwidth code that also uses cross-cluster links (`ε = 1/χ`).

use clustered_regen::code::{build, repair};
use clustered_regen::harness::{counting_table, random_source};
use clustered_regen::mbr::index_bijection;
use clustered_regen::{CodeSpec, NodeId};

fn main() -> clustered_regen::Result<()> {
    let chi = 3;
    let spec = CodeSpec::mbr(6, 3, 2, chi)?;
    let code = spec.instantiate()?;
    let p = *code.params();
    println!("χ = {chi}: α = γ = {}, M = {}, θ = {:?}", p.alpha, p.file_size, p.theta);

    let placement = build(code.as_ref(), &random_source(code.field(), p.file_size, 7))?;
    let node = NodeId::new(1, 2);
    println!("{node} holds {:?}", placement.node(node)?.indices());
    for s in [16, 27] {
        if let Ok((l, layer, pair)) = index_bijection(&spec.topology, chi, s) {
            println!("local symbol {s}: cluster {l}, layer {layer}, node pair {pair}");
        }
    }

    let (transcript, _) = repair(code.as_ref(), &placement, node)?;
    for c in &transcript.contributions {
        let idx: Vec<usize> = c.symbols.iter().map(|s| s.idx).collect();
        println!("{} ({}) sends {idx:?}", c.helper, if c.intra { "intra" } else { "cross" });
    }

    println!("distinct symbols seen per contact vector:");
    for row in counting_table(code.as_ref(), &placement)? {
        println!("  ω = {:?}: {} (closed form {})", row.omega.0, row.measured, row.closed_form);
    }
    Ok(())
}
