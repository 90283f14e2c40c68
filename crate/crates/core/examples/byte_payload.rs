//! Stores a byte string across several stripes, survives a node loss, and
//! reads it back from a different node set.

use clustered_regen::code::{build, bytes_to_symbols, reconstruct, repair, symbols_to_bytes};
use clustered_regen::{CodeSpec, NodeId, Placement};

fn main() -> clustered_regen::Result<()> {
    let code = CodeSpec::mbr(6, 3, 2, 2)?.instantiate()?;
    let m = code.params().file_size;
    let mut payload = b"clustered storage keeps repair traffic local".to_vec();
    payload.resize(payload.len().div_ceil(m) * m, 0);

    let placement = build(code.as_ref(), &bytes_to_symbols(&payload, code.field())?)?;
    println!("{} bytes in {} stripes of M = {m}", payload.len(), placement.stripes);

    let json = placement.to_json(code.field());
    let mut restored = Placement::from_json(&serde_json::from_str(&json.to_string()).expect("valid JSON"))?;

    let lost = NodeId::new(2, 1);
    let (t, rebuilt) = repair(code.as_ref(), &restored, lost)?;
    println!("repaired {lost} with {} symbols", t.gamma);
    let slot = restored.nodes.iter_mut().find(|c| c.node == lost).expect("node exists");
    *slot = rebuilt;

    let contact = [NodeId::new(2, 1), NodeId::new(2, 2), NodeId::new(1, 3)];
    let bytes = symbols_to_bytes(&reconstruct(code.as_ref(), &restored, &contact)?, code.field());
    assert_eq!(bytes, payload);
    println!("{}", String::from_utf8_lossy(&bytes).trim_end_matches('\0'));
    Ok(())
}
