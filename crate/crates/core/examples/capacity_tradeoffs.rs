//! Capacity and operating points across `ε` for one topology.

use clustered_regen::capacity::{capacity_eval, derive, format_rational, int, operating_point, ratio, Mode};
use clustered_regen::ClusterTopology;

fn main() -> clustered_regen::Result<()> {
    let t = ClusterTopology::new(12, 6, 3)?;
    let d = derive(&t);
    println!("q = {}, r = {}, g = {:?}, h = {:?}, τ = {}", d.q, d.r, d.g, d.h, d.tau);

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "ε", "MBR α", "MBR γ", "MSR α", "MSR γ");
    for eps in [int(0), ratio(1, 6), ratio(1, 4), ratio(1, 3), ratio(1, 2), int(1)] {
        let cell = |mode| match operating_point(&t, mode, eps) {
            Ok(p) => (format_rational(&(p.alpha / p.file_size)), format_rational(&(p.gamma / p.file_size))),
            Err(_) => ("-".into(), "-".into()),
        };
        let (mbr, msr) = (cell(Mode::Mbr), cell(Mode::Msr));
        println!("{:>6} {:>10} {:>10} {:>10} {:>10}", format_rational(&eps), mbr.0, mbr.1, msr.0, msr.1);
    }
    println!("(storage and bandwidth per file symbol)");

    for alpha in 1..=6 {
        let c = capacity_eval(&t, int(alpha), int(1), int(0));
        println!("C(α = {alpha}, β_I = 1, β_c = 0) = {}", format_rational(&c));
    }
    Ok(())
}
