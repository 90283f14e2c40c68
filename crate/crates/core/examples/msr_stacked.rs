//! Minimum-storage code at the smallest `ε = 1/(n-k)`, for `n = kL`.

use clustered_regen::code::{build, reconstruct, repair};
use clustered_regen::harness::random_source;
use clustered_regen::{CodeSpec, NodeId};

fn main() -> clustered_regen::Result<()> {
    let code = CodeSpec::msr_stacked(6, 2, 3)?.instantiate()?;
    let p = *code.params();
    println!("α = {} = M/k, β_I = {}, β_c = {}, γ = {}", p.alpha, p.beta_i, p.beta_c, p.gamma);

    let source = random_source(code.field(), p.file_size, 1);
    let placement = build(code.as_ref(), &source)?;
    let (transcript, rebuilt) = repair(code.as_ref(), &placement, NodeId::new(1, 1))?;
    for c in &transcript.contributions {
        let idx: Vec<usize> = c.symbols.iter().map(|s| s.idx).collect();
        println!("{} sends {idx:?}", c.helper);
    }
    assert_eq!(&rebuilt, placement.node(NodeId::new(1, 1))?);

    let contact = [NodeId::new(2, 2), NodeId::new(3, 1)];
    assert_eq!(reconstruct(code.as_ref(), &placement, &contact)?, source);
    println!("decoded from {} and {}", contact[0], contact[1]);
    Ok(())
}
