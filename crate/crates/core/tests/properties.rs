use proptest::prelude::*;
use proptest::sample::subsequence;

use clustered_regen::capacity::{
    capacity_eval, derive, format_rational, int, mbr_filesize_pos, mbr_filesize_zero, mbr_point, msr_point,
    parse_rational, ratio,
};
use clustered_regen::code::{self, RepairTranscript};
use clustered_regen::harness::{closed_form_count, count_distinct, identity_checks, random_source};
use clustered_regen::{ClusterTopology, CodeSpec, Field, NodeId, Placement};

/// `(n, k, L)` with `L | n` and `1 ≤ k < n`.
fn topology(n_max: usize) -> impl Strategy<Value = ClusterTopology> {
    (2..=n_max)
        .prop_flat_map(|n| {
            let divisors: Vec<usize> = (1..=n).filter(|l| n % l == 0).collect();
            (Just(n), 1..n, proptest::sample::select(divisors))
        })
        .prop_map(|(n, k, l)| ClusterTopology::new(n, k, l).unwrap())
}

fn with_clusters_of_two_or_more(n_max: usize) -> impl Strategy<Value = ClusterTopology> {
    topology(n_max).prop_filter("n_I ≥ 2", |t| t.cluster_size() >= 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn identities_hold(t in topology(40)) {
        for (name, ok) in identity_checks(&t) {
            prop_assert!(ok, "{name} fails for {t:?}");
        }
    }

    #[test]
    fn tau_plus_tail_equals_k_minus_q(t in topology(40)) {
        let d = derive(&t);
        let tail: usize = d.z[d.tau..].iter().sum();
        prop_assert_eq!(d.tau + tail, t.k() - d.q);
    }

    #[test]
    fn h_counts_clusters_needed(t in topology(40)) {
        let d = derive(&t);
        for (i, &h) in d.h.iter().enumerate() {
            let covered: usize = d.g[..h].iter().sum();
            prop_assert!(covered > i);
            let before: usize = d.g[..h - 1].iter().sum();
            prop_assert!(before <= i);
        }
    }

    #[test]
    fn omega_star_majorizes_every_contact(t in topology(16)) {
        let star = t.omega_star();
        for omega in t.contact_vectors() {
            prop_assert!(star.majorizes(&omega));
        }
    }

    #[test]
    fn mbr_point_reaches_capacity(t in topology(24), chi in 1usize..=4) {
        let m = mbr_filesize_pos(&t, chi);
        let eps = ratio(1, chi as i64);
        let p = mbr_point(&t, eps, int(m)).unwrap();
        prop_assert_eq!(capacity_eval(&t, p.alpha, int(chi), int(1)), int(m));
        prop_assert_eq!(p.alpha, int((t.cluster_size() - 1) * chi + t.n() - t.cluster_size()));
    }

    #[test]
    fn mbr_zero_point_reaches_capacity(t in with_clusters_of_two_or_more(24)) {
        let m = mbr_filesize_zero(&t);
        let p = mbr_point(&t, int(0), int(m)).unwrap();
        prop_assert_eq!(p.alpha, int(t.cluster_size() - 1));
        prop_assert_eq!(capacity_eval(&t, p.alpha, int(1), int(0)), int(m));
    }

    #[test]
    fn msr_large_epsilon_stores_m_over_k(t in topology(24), den in 1i64..=30) {
        let (n, k) = (t.n() as i64, t.k() as i64);
        prop_assume!(den <= n - k);
        let eps = ratio(1, den);
        let m = int((k * (n - k)) as usize);
        let p = msr_point(&t, eps, m).unwrap();
        prop_assert_eq!(p.alpha, m / k);
        prop_assert_eq!(capacity_eval(&t, p.alpha, eps.recip(), int(1)), m);
    }

    #[test]
    fn msr_zero_overhead_exceeds_m_over_k(t in with_clusters_of_two_or_more(24)) {
        prop_assume!(t.q() >= 1);
        let m = int(t.k());
        prop_assert!(msr_point(&t, int(0), m).unwrap().alpha > m / int(t.k()));
    }

    #[test]
    fn rationals_round_trip(p in -1000i64..1000, q in 1i64..1000) {
        let r = ratio(p, q);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }
}

/// Small systems of every construction.
fn spec() -> impl Strategy<Value = CodeSpec> {
    prop_oneof![
        with_clusters_of_two_or_more(10).prop_map(|t| CodeSpec::mbr_zero(t.n(), t.k(), t.clusters()).unwrap()),
        (topology(8), 1usize..=3).prop_map(|(t, chi)| CodeSpec::mbr(t.n(), t.k(), t.clusters(), chi).unwrap()),
        with_clusters_of_two_or_more(10).prop_map(|t| CodeSpec::msr_zero(t.n(), t.k(), t.clusters()).unwrap()),
        (1usize..=4, 2usize..=3).prop_map(|(k, l)| CodeSpec::msr_stacked(k * l, k, l).unwrap()),
        (3usize..=5, 1i64..=4).prop_map(|(k, den)| {
            let n = 2 * k - 1;
            let l = if n % 3 == 0 { 3 } else { 1 };
            CodeSpec::msr_wrapped(n, k, l, ratio(1, den.min((n - k) as i64))).unwrap()
        }),
    ]
}

fn system() -> impl Strategy<Value = (CodeSpec, u64, usize)> {
    (spec(), any::<u64>(), 1usize..=2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repairs_are_exact_and_bandwidth_matches((spec, seed, stripes) in system(), pick in any::<prop::sample::Index>()) {
        let code = spec.instantiate().unwrap();
        let source = random_source(code.field(), code.params().file_size * stripes, seed);
        let placement = code::build(code.as_ref(), &source).unwrap();
        let nodes: Vec<NodeId> = code.topology().nodes().collect();
        let failed = *pick.get(&nodes);
        let (t, content) = code::repair(code.as_ref(), &placement, failed).unwrap();
        prop_assert_eq!(&content, placement.node(failed).unwrap());
        prop_assert_eq!(t.gamma, code.params().gamma * stripes);
        for c in &t.contributions {
            let per = if c.intra { code.params().beta_i } else { code.params().beta_c };
            prop_assert_eq!(c.symbols.len(), per * stripes);
        }
        prop_assert_eq!(content.symbols.len(), code.params().alpha * stripes);
    }

    #[test]
    fn any_k_nodes_reconstruct((spec, seed, stripes) in system(), chosen in subsequence((0..10usize).collect::<Vec<_>>(), 0..=10)) {
        let code = spec.instantiate().unwrap();
        let t = code.topology();
        let source = random_source(code.field(), code.params().file_size * stripes, seed);
        let placement = code::build(code.as_ref(), &source).unwrap();
        let mut contact: Vec<NodeId> = chosen.iter().filter(|&&u| u < t.n()).map(|&u| t.pair(u + 1).unwrap()).collect();
        for node in t.nodes() {
            if contact.len() >= t.k() { break; }
            if !contact.contains(&node) { contact.push(node); }
        }
        contact.truncate(t.k());
        prop_assert_eq!(code::reconstruct(code.as_ref(), &placement, &contact).unwrap(), source);
    }

    #[test]
    fn fewer_than_k_nodes_are_refused((spec, seed, _) in system()) {
        let code = spec.instantiate().unwrap();
        let t = code.topology();
        let source = random_source(code.field(), code.params().file_size, seed);
        let placement = code::build(code.as_ref(), &source).unwrap();
        let contact: Vec<NodeId> = t.nodes().take(t.k() - 1).collect();
        prop_assert!(code::reconstruct(code.as_ref(), &placement, &contact).is_err());
    }

    #[test]
    fn placements_and_transcripts_round_trip((spec, seed, stripes) in system()) {
        let code = spec.instantiate().unwrap();
        let source = random_source(code.field(), code.params().file_size * stripes, seed);
        let placement = code::build(code.as_ref(), &source).unwrap();
        let text = serde_json::to_string(&placement.to_json(code.field())).unwrap();
        let back = Placement::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(&back, &placement);
        prop_assert_eq!(serde_json::to_string(&back.to_json(code.field())).unwrap(), text);

        let failed = code.topology().pair(1).unwrap();
        let (t, _) = code::repair(code.as_ref(), &placement, failed).unwrap();
        let back = RepairTranscript::from_json(&t.to_json(code.field())).unwrap();
        prop_assert_eq!(&back, &t);
        let rebuilt = code::regenerate(code.as_ref(), placement.stripes, &back).unwrap();
        prop_assert_eq!(&rebuilt, placement.node(failed).unwrap());
    }

    #[test]
    fn builds_are_deterministic((spec, seed, _) in system()) {
        let a = spec.instantiate().unwrap();
        let b = spec.instantiate().unwrap();
        let source = random_source(a.field(), a.params().file_size, seed);
        prop_assert_eq!(code::build(a.as_ref(), &source).unwrap(), code::build(b.as_ref(), &source).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mbr_counts_match_closed_form(t in with_clusters_of_two_or_more(9), chi in 0usize..=3) {
        let spec = if chi == 0 {
            CodeSpec::mbr_zero(t.n(), t.k(), t.clusters())
        } else {
            CodeSpec::mbr(t.n(), t.k(), t.clusters(), chi)
        }
        .unwrap();
        let code = spec.instantiate().unwrap();
        let field = Field::from_spec(spec.field_spec()).unwrap();
        let source = random_source(&field, code.params().file_size, 0);
        let placement = code::build(code.as_ref(), &source).unwrap();
        let m = code.params().file_size;
        for omega in t.contact_vectors() {
            let measured = count_distinct(&placement, &t.nodes_for(&omega)).unwrap();
            prop_assert_eq!(measured, closed_form_count(code.params(), &omega));
            prop_assert!(measured >= m);
        }
        prop_assert_eq!(count_distinct(&placement, &t.nodes_for(&t.omega_star())).unwrap(), m);
    }
}
