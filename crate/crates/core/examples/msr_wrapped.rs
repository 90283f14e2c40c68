//! An ordinary MSR code reused across clusters: intra-cluster helpers send
//! `χ = 1/ε` copies of what they would send anyway.

use clustered_regen::capacity::ratio;
use clustered_regen::code::{build, repair};
use clustered_regen::harness::{random_source, verify_dedup_invariance};
use clustered_regen::{CodeSpec, NodeId};

fn main() -> clustered_regen::Result<()> {
    let mut specs = Vec::new();
    for den in [4, 2, 1] {
        let spec = CodeSpec::msr_wrapped(9, 5, 3, ratio(1, den))?;
        let code = spec.instantiate()?;
        let p = *code.params();
        let placement = build(code.as_ref(), &random_source(code.field(), p.file_size, 5))?;
        let (t, rebuilt) = repair(code.as_ref(), &placement, NodeId::new(3, 2))?;
        assert_eq!(&rebuilt, placement.node(NodeId::new(3, 2))?);
        println!(
            "ε = 1/{den}: α = {}, M = {}, β_I = {}, β_c = {}, γ = {}, distinct symbols received = {}",
            p.alpha,
            p.file_size,
            t.beta_i,
            t.beta_c,
            t.gamma,
            t.distinct_symbols().len()
        );
        specs.push(spec);
    }
    let check = verify_dedup_invariance(&specs, 5)?;
    println!("{}: {}", check.name, if check.pass { "yes" } else { "no" });
    Ok(())
}
