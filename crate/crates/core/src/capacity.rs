//! Closed-form capacity and resource-pair computations.
//!
//! Everything here is exact: bandwidth ratios are [`Rational`]s, never
//! floats, so regime boundaries such as `ε = 1/(n-k)` compare exactly.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{pairs, ClusterTopology};

pub type Rational = Ratio<i64>;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

pub fn int(v: usize) -> Rational {
    Rational::from_integer(v as i64)
}

/// Parses `p/q` or `p`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parameter(format!("expected an exact rational like `1/4`, got `{s}`"));
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let den: i64 = den.parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// `p/q`, or just `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// JSON rendering used in reports: integers as numbers, others as `"p/q"`.
pub fn rational_json(r: &Rational) -> serde_json::Value {
    if r.is_integer() {
        serde_json::Value::from(*r.numer())
    } else {
        serde_json::Value::from(format_rational(r))
    }
}

/// `χ = 1/ε` when it is a positive integer.
pub fn integer_chi(epsilon: Rational) -> Result<usize> {
    if epsilon <= int(0) || epsilon > int(1) {
        return Err(Error::Regime(format!(
            "ε = {} must lie in (0, 1] for an integer χ",
            format_rational(&epsilon)
        )));
    }
    let chi = epsilon.recip();
    if !chi.is_integer() {
        return Err(Error::Parameter(format!(
            "χ = 1/ε = {} is not a positive integer",
            format_rational(&chi)
        )));
    }
    Ok(*chi.numer() as usize)
}

/// Sequences derived from `(n, k, L)` that the capacity formula is built on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedParams {
    pub q: usize,
    pub r: usize,
    /// `g_1..g_{n_I}`
    pub g: Vec<usize>,
    /// `h_1..h_k`
    pub h: Vec<usize>,
    /// `ρ_i = n_I - i`
    pub rho: Vec<usize>,
    /// `z_1..z_k`, `z_t = n_I - h_t`
    pub z: Vec<usize>,
    /// Largest `t ≤ k` with `z_t ≥ 1` (0 if none); always `k - q`.
    pub tau: usize,
}

pub fn derive(topology: &ClusterTopology) -> DerivedParams {
    let ni = topology.cluster_size();
    let k = topology.k();
    let (q, r) = (topology.q(), topology.r());
    let g: Vec<usize> = (1..=ni).map(|m| if m <= r { q + 1 } else { q }).collect();

    let mut prefix = Vec::with_capacity(ni);
    let mut acc = 0;
    for &gm in &g {
        acc += gm;
        prefix.push(acc);
    }
    let h: Vec<usize> = (1..=k)
        .map(|i| prefix.iter().position(|&p| p >= i).expect("Σ g_m = k") + 1)
        .collect();
    let rho = (1..=ni).map(|i| ni - i).collect();
    let z: Vec<usize> = h.iter().map(|&ht| ni - ht).collect();
    // The range runs to k: with q = 0 every z_t is positive and τ = k.
    let tau = (1..=k).rev().find(|&t| z[t - 1] >= 1).unwrap_or(0);

    DerivedParams { q, r, g, h, rho, z, tau }
}

/// `C(α, β_I, β_c) = Σ_i Σ_{j ≤ g_i} min{α, ρ_i β_I + (n - ρ_i - Σ_{m<i} g_m - j) β_c}`.
pub fn capacity_eval(
    topology: &ClusterTopology,
    alpha: Rational,
    beta_i: Rational,
    beta_c: Rational,
) -> Rational {
    let d = derive(topology);
    let n = topology.n() as i64;
    let mut total = int(0);
    let mut before = 0i64;
    for (i, &gi) in d.g.iter().enumerate() {
        let rho = d.rho[i] as i64;
        for j in 1..=gi as i64 {
            let flow = beta_i * rho + beta_c * (n - rho - before - j);
            total += alpha.min(flow);
        }
        before += gi as i64;
    }
    total
}

/// `s_0^(ε)`; MBR resources are `M / s_0`.
///
/// Single-node clusters at `ε = 0` give `0/0` and are rejected.
pub fn s0(topology: &ClusterTopology, epsilon: Rational) -> Result<Rational> {
    let d = derive(topology);
    let (n, ni) = (topology.n() as i64, topology.cluster_size() as i64);
    if ni == 1 && epsilon == int(0) {
        return Err(Error::Regime("ε = 0 with one node per cluster stores nothing".into()));
    }
    let numer: Rational = d
        .h
        .iter()
        .enumerate()
        .map(|(idx, &h)| {
            let (i, h) = (idx as i64 + 1, h as i64);
            int((ni - h) as usize) + epsilon * (n - ni - i + h)
        })
        .sum();
    Ok(numer / (epsilon * (n - ni) + (ni - 1)))
}

/// Storage per node and total repair traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourcePair {
    pub alpha: Rational,
    pub gamma: Rational,
}

fn check_epsilon(epsilon: Rational) -> Result<()> {
    if epsilon < int(0) || epsilon > int(1) {
        return Err(Error::Regime(format!(
            "ε = {} outside [0, 1] (requires β_c ≤ β_I)",
            format_rational(&epsilon)
        )));
    }
    Ok(())
}

/// MBR point: `α = γ = M / s_0^(ε)`.
pub fn mbr_point(topology: &ClusterTopology, epsilon: Rational, file_size: Rational) -> Result<ResourcePair> {
    check_epsilon(epsilon)?;
    let a = file_size / s0(topology, epsilon)?;
    Ok(ResourcePair { alpha: a, gamma: a })
}

/// MSR point for `ε = 0` or `1/(n-k) ≤ ε ≤ 1`.
pub fn msr_point(topology: &ClusterTopology, epsilon: Rational, file_size: Rational) -> Result<ResourcePair> {
    check_epsilon(epsilon)?;
    let (n, k, ni) = (topology.n() as i64, topology.k() as i64, topology.cluster_size() as i64);
    if epsilon == int(0) {
        if topology.cluster_size() == 1 {
            return Err(Error::Regime("ε = 0 with one node per cluster stores nothing".into()));
        }
        let alpha = file_size / (k - topology.q() as i64);
        return Ok(ResourcePair { alpha, gamma: alpha * (ni - 1) });
    }
    let floor = ratio(1, n - k);
    if epsilon < floor {
        return Err(Error::Regime(format!(
            "ε = {} lies in (0, 1/(n-k)) = (0, {}), where α_msr > M/k and no construction exists",
            format_rational(&epsilon),
            format_rational(&floor)
        )));
    }
    let alpha = file_size / k;
    let gamma = alpha * (epsilon.recip() * (ni - 1) + (n - ni)) / (n - k);
    Ok(ResourcePair { alpha, gamma })
}

/// File size of the `ε = 0` MBR code at `β_I = 1`: `Σ (n_I - h_i)`.
pub fn mbr_filesize_zero(topology: &ClusterTopology) -> usize {
    let ni = topology.cluster_size();
    derive(topology).h.iter().map(|&h| ni - h).sum()
}

/// File size of the `0 < ε ≤ 1` MBR code at `β_I = χ, β_c = 1`:
/// `kα - ½(χ-1)(q n_I² + r² - k) - C(k,2)`.
pub fn mbr_filesize_pos(topology: &ClusterTopology, chi: usize) -> usize {
    let (n, k, ni) = (topology.n(), topology.k(), topology.cluster_size());
    let (q, r) = (topology.q(), topology.r());
    let alpha = (ni - 1) * chi + (n - ni);
    // q n_I² + r² - k = Σ ω*_l (ω*_l - 1) ≥ 0, always even.
    let local = (q * ni * ni + r * r - k) / 2;
    k * alpha - (chi - 1) * local - pairs(k)
}

/// Which end of the storage/bandwidth tradeoff to query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Mbr,
    Msr,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "mbr" => Ok(Mode::Mbr),
            "msr" => Ok(Mode::Msr),
            other => Err(Error::Parameter(format!("mode must be mbr or msr, got `{other}`"))),
        }
    }
}

/// Resource pair at the normalization the constructions use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatingPoint {
    pub alpha: Rational,
    pub gamma: Rational,
    pub beta_i: Rational,
    pub beta_c: Rational,
    pub file_size: Rational,
    /// Outer MDS length for MBR; `None` for MSR.
    pub theta: Option<usize>,
}

impl OperatingPoint {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": rational_json(&self.alpha),
            "gamma": rational_json(&self.gamma),
            "beta_i": rational_json(&self.beta_i),
            "beta_c": rational_json(&self.beta_c),
            "M": rational_json(&self.file_size),
            "theta": self.theta,
        })
    }
}

/// MBR: `β_I = 1, β_c = 0` at `ε = 0`, else `β_I = χ, β_c = 1`.
/// MSR: `β_I = α, β_c = 0` at `ε = 0`, else `β_I = 1/ε, β_c = 1` with `M = k(n-k)`.
pub fn operating_point(topology: &ClusterTopology, mode: Mode, epsilon: Rational) -> Result<OperatingPoint> {
    check_epsilon(epsilon)?;
    let (n, k, ni, l) = (topology.n(), topology.k(), topology.cluster_size(), topology.clusters());
    let zero = epsilon == int(0);
    match mode {
        Mode::Mbr => {
            let (beta_i, beta_c, m, theta) = if zero {
                (1, 0, mbr_filesize_zero(topology), pairs(ni) * l)
            } else {
                let chi = integer_chi(epsilon)?;
                (chi, 1, mbr_filesize_pos(topology, chi), (chi - 1) * pairs(ni) * l + pairs(n))
            };
            let pair = mbr_point(topology, epsilon, int(m))?;
            Ok(OperatingPoint {
                alpha: pair.alpha,
                gamma: pair.gamma,
                beta_i: int(beta_i),
                beta_c: int(beta_c),
                file_size: int(m),
                theta: Some(theta),
            })
        }
        Mode::Msr => {
            let m = if !zero {
                k * (n - k)
            } else if ni >= 2 && k % ni == 0 {
                k * (ni - 1)
            } else {
                k - topology.q()
            };
            let pair = msr_point(topology, epsilon, int(m))?;
            let (beta_i, beta_c) = if zero { (pair.alpha, int(0)) } else { (epsilon.recip(), int(1)) };
            Ok(OperatingPoint { alpha: pair.alpha, gamma: pair.gamma, beta_i, beta_c, file_size: int(m), theta: None })
        }
    }
}

/// A normalized operating point: integer bandwidths and file size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemParams {
    pub topology: ClusterTopology,
    pub epsilon: Rational,
    pub beta_i: usize,
    pub beta_c: usize,
    pub alpha: usize,
    pub gamma: usize,
    pub file_size: usize,
    /// MDS codeword length, where the construction has a single outer code.
    pub theta: Option<usize>,
}

impl SystemParams {
    pub(crate) fn new(
        topology: ClusterTopology,
        epsilon: Rational,
        beta_i: usize,
        beta_c: usize,
        alpha: usize,
        file_size: usize,
        theta: Option<usize>,
    ) -> SystemParams {
        let ni = topology.cluster_size();
        let gamma = (ni - 1) * beta_i + (topology.n() - ni) * beta_c;
        SystemParams { topology, epsilon, beta_i, beta_c, alpha, gamma, file_size, theta }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ParamsRepr::from(self)).expect("plain data")
    }
}

/// Wire form of [`SystemParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsRepr {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "L")]
    pub clusters: usize,
    pub epsilon: String,
    pub beta_i: usize,
    pub beta_c: usize,
    pub alpha: usize,
    pub gamma: usize,
    #[serde(rename = "M")]
    pub file_size: usize,
    pub theta: Option<usize>,
}

impl From<&SystemParams> for ParamsRepr {
    fn from(p: &SystemParams) -> ParamsRepr {
        ParamsRepr {
            n: p.topology.n(),
            k: p.topology.k(),
            clusters: p.topology.clusters(),
            epsilon: format_rational(&p.epsilon),
            beta_i: p.beta_i,
            beta_c: p.beta_c,
            alpha: p.alpha,
            gamma: p.gamma,
            file_size: p.file_size,
            theta: p.theta,
        }
    }
}

impl TryFrom<&ParamsRepr> for SystemParams {
    type Error = Error;

    fn try_from(r: &ParamsRepr) -> Result<SystemParams> {
        let topology = ClusterTopology::new(r.n, r.k, r.clusters)?;
        let p = SystemParams::new(
            topology,
            parse_rational(&r.epsilon)?,
            r.beta_i,
            r.beta_c,
            r.alpha,
            r.file_size,
            r.theta,
        );
        if p.gamma != r.gamma {
            return Err(Error::Format(format!(
                "gamma {} disagrees with (n_I-1)β_I + (n-n_I)β_c = {}",
                r.gamma, p.gamma
            )));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(n: usize, k: usize, l: usize) -> ClusterTopology {
        ClusterTopology::new(n, k, l).unwrap()
    }

    fn sweep() -> impl Iterator<Item = ClusterTopology> {
        (2..=24).flat_map(|n| {
            (1..=n)
                .filter(move |l| n % l == 0)
                .flat_map(move |l| (1..n).map(move |k| topo(n, k, l)))
        })
    }

    #[test]
    fn derive_example() {
        let d = derive(&topo(12, 6, 3));
        assert_eq!((d.q, d.r), (1, 2));
        assert_eq!(d.g, vec![2, 2, 1, 1]);
        assert_eq!(d.h, vec![1, 1, 2, 2, 3, 4]);
        assert_eq!(d.rho, vec![3, 2, 1, 0]);
    }

    #[test]
    fn derive_when_k_equals_cluster_size() {
        let d = derive(&topo(15, 5, 3));
        assert_eq!((d.q, d.r), (1, 0));
        assert_eq!(d.g, vec![1; 5]);
        assert_eq!(d.h, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn tau_identity_over_sweep() {
        for t in sweep() {
            let d = derive(&t);
            let tail: usize = d.z[d.tau..].iter().sum();
            assert_eq!(d.tau, t.k() - t.q(), "{t:?}");
            assert_eq!(d.tau + tail, t.k() - t.q(), "{t:?}");
        }
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity_eval(&topo(12, 6, 3), int(3), int(1), int(0)), int(11));
        assert_eq!(capacity_eval(&topo(12, 6, 3), int(0), int(1), int(0)), int(0));
        assert_eq!(capacity_eval(&topo(6, 3, 2), int(9), int(3), int(1)), int(18));
    }

    #[test]
    fn mbr_points() {
        let t = topo(12, 6, 3);
        assert_eq!(s0(&t, int(0)).unwrap(), ratio(11, 3));
        assert!(s0(&topo(6, 3, 6), int(0)).is_err());
        assert_eq!(
            mbr_point(&t, int(0), int(11)).unwrap(),
            ResourcePair { alpha: int(3), gamma: int(3) }
        );
        assert_eq!(
            mbr_point(&topo(6, 3, 2), ratio(1, 3), int(18)).unwrap(),
            ResourcePair { alpha: int(9), gamma: int(9) }
        );
    }

    #[test]
    fn s0_at_unit_epsilon_is_classical() {
        for t in sweep() {
            let (n, k) = (t.n() as i64, t.k() as i64);
            let classical: Rational = (1..=k).map(|i| int((n - i) as usize)).sum::<Rational>() / (n - 1);
            assert_eq!(s0(&t, int(1)).unwrap(), classical);
        }
    }

    #[test]
    fn msr_points() {
        assert_eq!(
            msr_point(&topo(6, 3, 2), int(0), int(6)).unwrap(),
            ResourcePair { alpha: int(3), gamma: int(6) }
        );
        assert_eq!(
            msr_point(&topo(6, 2, 3), ratio(1, 4), int(8)).unwrap(),
            ResourcePair { alpha: int(4), gamma: int(8) }
        );
        let t = topo(9, 5, 3);
        let p = msr_point(&t, int(1), int(20)).unwrap();
        assert_eq!(p.gamma, int(4) * 8 / 4);
        assert!(matches!(msr_point(&topo(6, 2, 3), ratio(1, 5), int(8)), Err(Error::Regime(_))));
        assert!(matches!(msr_point(&t, ratio(3, 2), int(8)), Err(Error::Regime(_))));
    }

    #[test]
    fn msr_storage_regimes() {
        for t in sweep() {
            let (n, k) = (t.n() as i64, t.k() as i64);
            let m = int(t.k() * 12);
            for den in 1..=(n - k) {
                let p = msr_point(&t, ratio(1, den), m).unwrap();
                assert_eq!(p.alpha, m / k);
            }
            if t.cluster_size() == 1 {
                assert!(msr_point(&t, int(0), m).is_err());
                continue;
            }
            let zero = msr_point(&t, int(0), m).unwrap();
            if t.q() >= 1 {
                assert!(zero.alpha > m / k, "{t:?}");
            }
        }
    }

    #[test]
    fn mbr_file_sizes() {
        assert_eq!(mbr_filesize_zero(&topo(12, 6, 3)), 11);
        assert_eq!(mbr_filesize_zero(&topo(12, 1, 3)), 3);
        assert_eq!(mbr_filesize_pos(&topo(6, 3, 2), 3), 18);
        for t in sweep() {
            let ni = t.cluster_size();
            assert_eq!(
                int(mbr_filesize_zero(&t)),
                capacity_eval(&t, int(ni - 1), int(1), int(0)),
                "{t:?}"
            );
            let (n, k) = (t.n(), t.k());
            let alpha = n - 1;
            assert_eq!(mbr_filesize_pos(&t, 1), k * alpha - pairs(k));
            for chi in 1..=4 {
                let alpha = (ni - 1) * chi + (n - ni);
                assert_eq!(
                    int(mbr_filesize_pos(&t, chi)),
                    capacity_eval(&t, int(alpha), int(chi), int(1)),
                    "{t:?} chi={chi}"
                );
            }
        }
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/4").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("0").unwrap(), int(0));
        assert_eq!(parse_rational(" 2/6 ").unwrap(), ratio(1, 3));
        assert!(parse_rational("0.25").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(format_rational(&ratio(3, 1)), "3");
        assert_eq!(format_rational(&ratio(1, 4)), "1/4");
        assert_eq!(integer_chi(ratio(1, 3)).unwrap(), 3);
        assert!(integer_chi(ratio(2, 3)).is_err());
        assert!(integer_chi(int(0)).is_err());
    }

    #[test]
    fn operating_point_examples() {
        let p = operating_point(&ClusterTopology::new(12, 6, 3).unwrap(), Mode::Mbr, int(0)).unwrap();
        assert_eq!((p.alpha, p.gamma, p.file_size, p.theta), (int(3), int(3), int(11), Some(18)));
        let p = operating_point(&ClusterTopology::new(6, 3, 2).unwrap(), Mode::Mbr, ratio(1, 3)).unwrap();
        assert_eq!((p.alpha, p.gamma, p.file_size, p.theta), (int(9), int(9), int(18), Some(27)));
        let t = ClusterTopology::new(6, 2, 3).unwrap();
        let p = operating_point(&t, Mode::Msr, ratio(1, 4)).unwrap();
        assert_eq!((p.alpha, p.gamma, p.file_size, p.beta_i), (int(4), int(8), int(8), int(4)));
        assert!(matches!(operating_point(&t, Mode::Msr, ratio(1, 5)), Err(Error::Regime(_))));
        let p = operating_point(&ClusterTopology::new(6, 4, 2).unwrap(), Mode::Msr, int(0)).unwrap();
        assert_eq!((p.alpha, p.file_size, p.gamma), (int(1), int(3), int(2)));
        let p = operating_point(&ClusterTopology::new(6, 3, 2).unwrap(), Mode::Msr, int(0)).unwrap();
        assert_eq!((p.alpha, p.file_size, p.gamma), (int(3), int(6), int(6)));
    }
}
