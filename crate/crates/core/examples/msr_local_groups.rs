//! Minimum-storage codes with intra-cluster repair only (`ε = 0`).
//!
//! When `n_I` divides `k` the code is a stack of MDS codes with one parity
//! per cluster group; otherwise a single outer code is split into
//! cluster-local parity groups.

use clustered_regen::code::{build, reconstruct, repair};
use clustered_regen::harness::random_source;
use clustered_regen::CodeSpec;

fn main() -> clustered_regen::Result<()> {
    for (n, k, l) in [(6, 3, 2), (6, 4, 2), (9, 4, 3)] {
        let code = CodeSpec::msr_zero(n, k, l)?.instantiate()?;
        let p = *code.params();
        println!("({n},{k},{l}) -> {}: α = {}, M = {}, γ = {}", code.kind(), p.alpha, p.file_size, p.gamma);

        let source = random_source(code.field(), p.file_size, n as u64);
        let placement = build(code.as_ref(), &source)?;
        let t = code.topology();
        for node in t.nodes() {
            let (transcript, rebuilt) = repair(code.as_ref(), &placement, node)?;
            assert_eq!(&rebuilt, placement.node(node)?);
            assert_eq!(transcript.beta_c, 0);
        }
        let contact: Vec<_> = t.nodes().skip(n - k).collect();
        assert_eq!(reconstruct(code.as_ref(), &placement, &contact)?, source);
        if let Some(g) = code.generator() {
            println!("{}", g.to_hex_csv(2));
        }
    }
    Ok(())
}
