//! Declarative description of a code instance, as read from config files.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{format_rational, int, integer_chi, parse_rational, ratio, Rational};
use crate::code::{CodeKind, Placement, RegeneratingCode};
use crate::error::{Error, Result};
use crate::galois::{Field, FieldSpec};
use crate::mbr::MbrCode;
use crate::msr::{MsrDivisible, MsrNondivisible, MsrStacked, MsrWrapped, ProductMatrixMsr};
use crate::topology::{pairs, ClusterTopology};

/// One code: kind, topology, `ε`, and an optional field override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    pub kind: CodeKind,
    pub topology: ClusterTopology,
    pub epsilon: Rational,
    /// `None` picks the smallest default field that fits.
    pub field: Option<FieldSpec>,
}

impl CodeSpec {
    pub fn new(kind: CodeKind, n: usize, k: usize, clusters: usize, epsilon: Rational) -> Result<CodeSpec> {
        let spec = CodeSpec { kind, topology: ClusterTopology::new(n, k, clusters)?, epsilon, field: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mbr_zero(n: usize, k: usize, clusters: usize) -> Result<CodeSpec> {
        CodeSpec::new(CodeKind::Mbr0, n, k, clusters, int(0))
    }

    pub fn mbr(n: usize, k: usize, clusters: usize, chi: usize) -> Result<CodeSpec> {
        CodeSpec::new(CodeKind::Mbr, n, k, clusters, ratio(1, chi as i64))
    }

    /// Routes to the divisible or non-divisible `ε = 0` MSR code.
    pub fn msr_zero(n: usize, k: usize, clusters: usize) -> Result<CodeSpec> {
        let t = ClusterTopology::new(n, k, clusters)?;
        let kind = if k.is_multiple_of(t.cluster_size()) { CodeKind::Msr0Div } else { CodeKind::Msr0Nondiv };
        CodeSpec::new(kind, n, k, clusters, int(0))
    }

    pub fn msr_stacked(n: usize, k: usize, clusters: usize) -> Result<CodeSpec> {
        CodeSpec::new(CodeKind::MsrStacked, n, k, clusters, ratio(1, (n - k) as i64))
    }

    pub fn msr_wrapped(n: usize, k: usize, clusters: usize, epsilon: Rational) -> Result<CodeSpec> {
        CodeSpec::new(CodeKind::MsrWrapped, n, k, clusters, epsilon)
    }

    /// The spec a placement was built from.
    pub fn of_placement(placement: &Placement) -> Result<CodeSpec> {
        let p = &placement.params;
        let spec = CodeSpec {
            kind: placement.kind,
            topology: p.topology,
            epsilon: p.epsilon,
            field: Some(placement.field),
        };
        spec.validate().map_err(|e| Error::Format(format!("placement parameters: {e}")))?;
        Ok(spec)
    }

    pub fn with_field(mut self, field: FieldSpec) -> CodeSpec {
        self.field = Some(field);
        self
    }

    /// Regime checks that need no field.
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        let (n, k, ni) = (t.n(), t.k(), t.cluster_size());
        let need_zero = |name: &str| {
            if self.epsilon != int(0) {
                return Err(Error::Regime(format!("{name} is an ε = 0 code")));
            }
            Ok(())
        };
        match self.kind {
            CodeKind::Mbr0 => need_zero("mbr0"),
            CodeKind::Mbr => integer_chi(self.epsilon).map(|_| ()),
            CodeKind::Msr0Div | CodeKind::Msr0Nondiv => {
                need_zero(self.kind.as_str())?;
                let divisible = k % ni == 0;
                match (self.kind, divisible) {
                    (CodeKind::Msr0Div, false) => Err(Error::Regime(format!(
                        "n_I = {ni} does not divide k = {k}; use msr0-nondiv"
                    ))),
                    (CodeKind::Msr0Nondiv, true) => {
                        Err(Error::Regime(format!("n_I = {ni} divides k = {k}; use msr0-div")))
                    }
                    _ => Ok(()),
                }
            }
            CodeKind::MsrStacked => {
                if ni != k {
                    return Err(Error::Regime(format!("msr-stacked needs n = kL (n_I = k), got n_I = {ni}, k = {k}")));
                }
                if self.epsilon != ratio(1, (n - k) as i64) {
                    return Err(Error::Regime(format!(
                        "msr-stacked operates at ε = 1/(n-k) = 1/{}, not {}",
                        n - k,
                        format_rational(&self.epsilon)
                    )));
                }
                Ok(())
            }
            CodeKind::MsrWrapped => {
                if n + 1 != 2 * k {
                    return Err(Error::Regime(format!(
                        "the shipped wrapped base needs n = 2k - 1, got n = {n}, k = {k}"
                    )));
                }
                if self.epsilon < ratio(1, (n - k) as i64) || self.epsilon > int(1) {
                    return Err(Error::Regime(format!(
                        "msr-wrapped covers 1/(n-k) = 1/{} ≤ ε ≤ 1, got {}",
                        n - k,
                        format_rational(&self.epsilon)
                    )));
                }
                integer_chi(self.epsilon).map(|_| ())
            }
        }
    }

    /// Largest Reed–Solomon length (or point count) the code needs.
    pub fn required_points(&self) -> usize {
        let t = &self.topology;
        let (n, ni, l) = (t.n(), t.cluster_size(), t.clusters());
        match self.kind {
            CodeKind::Mbr0 => pairs(ni) * l,
            CodeKind::Mbr => {
                let chi = integer_chi(self.epsilon).unwrap_or(1);
                (chi - 1) * pairs(ni) * l + pairs(n)
            }
            CodeKind::Msr0Nondiv => l * (ni - 1),
            _ => n,
        }
    }

    pub fn field_spec(&self) -> FieldSpec {
        self.field.unwrap_or_else(|| FieldSpec::smallest_for(self.required_points()))
    }

    /// Builds the code. Without an explicit field, a non-divisible `ε = 0`
    /// MSR code that finds no any-`k` outer code over GF(2^8) retries over GF(2^16).
    pub fn instantiate(&self) -> Result<Box<dyn RegeneratingCode>> {
        match self.instantiate_in(self.field_spec()) {
            Err(Error::Parameter(_)) if self.field.is_none() && self.kind == CodeKind::Msr0Nondiv => {
                self.instantiate_in(FieldSpec::gf65536())
            }
            other => other,
        }
    }

    fn instantiate_in(&self, field: FieldSpec) -> Result<Box<dyn RegeneratingCode>> {
        self.validate()?;
        let field = Field::from_spec(field)?;
        let t = self.topology;
        Ok(match self.kind {
            CodeKind::Mbr0 => Box::new(MbrCode::zero(t, &field)?),
            CodeKind::Mbr => Box::new(MbrCode::with_chi(t, integer_chi(self.epsilon)?, &field)?),
            CodeKind::Msr0Div => Box::new(MsrDivisible::new(t, &field)?),
            CodeKind::Msr0Nondiv => Box::new(MsrNondivisible::new(t, &field)?),
            CodeKind::MsrStacked => Box::new(MsrStacked::new(t, &field)?),
            CodeKind::MsrWrapped => {
                let base = Arc::new(ProductMatrixMsr::new(t.n(), t.k(), &field)?);
                Box::new(MsrWrapped::new(base, t, self.epsilon, &field)?)
            }
        })
    }

    pub fn describe(&self) -> Value {
        let f = self.field_spec();
        json!({
            "code": self.kind.as_str(),
            "n": self.topology.n(),
            "k": self.topology.k(),
            "L": self.topology.clusters(),
            "epsilon": format_rational(&self.epsilon),
            "field": { "m": f.m, "poly": f.poly },
        })
    }
}

/// On-disk form of a system to verify.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEntry {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "L")]
    pub clusters: usize,
    pub code: CodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Expected `M`; verification fails when the code disagrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_size: Option<usize>,
}

impl ConfigEntry {
    pub fn epsilon(&self) -> Result<Rational> {
        match (&self.chi, &self.epsilon) {
            (Some(_), Some(_)) => Err(Error::Parameter("give either chi or epsilon, not both".into())),
            (Some(chi), None) => {
                let chi = parse_rational(chi)?;
                if chi <= int(0) {
                    return Err(Error::Parameter("chi must be positive".into()));
                }
                Ok(chi.recip())
            }
            (None, Some(e)) => parse_rational(e),
            (None, None) => Ok(match self.code {
                CodeKind::MsrStacked if self.n > self.k => ratio(1, (self.n - self.k) as i64),
                _ => int(0),
            }),
        }
    }

    pub fn spec(&self) -> Result<CodeSpec> {
        let mut spec = CodeSpec::new(self.code, self.n, self.k, self.clusters, self.epsilon()?)?;
        spec.field = self.field;
        Ok(spec)
    }
}

/// Parses a config file holding one entry or an array of entries.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
    let entries = match v {
        Value::Array(items) => items,
        other => vec![other],
    };
    entries
        .into_iter()
        .map(|e| serde_json::from_value(e).map_err(|e| Error::Format(format!("config entry: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_and_array() {
        let one = parse_config(r#"{"n":6,"k":3,"L":2,"code":"mbr","chi":"3"}"#).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].epsilon().unwrap(), ratio(1, 3));
        let many = parse_config(
            r#"[{"n":12,"k":6,"L":3,"code":"mbr0","seed":7,"file_size":11},
                {"n":6,"k":2,"L":3,"code":"msr-stacked"},
                {"n":9,"k":5,"L":3,"code":"msr-wrapped","epsilon":"1/4","field":{"m":8,"poly":285}}]"#,
        )
        .unwrap();
        assert_eq!(many.len(), 3);
        assert_eq!(many[0].file_size, Some(11));
        assert_eq!(many[1].epsilon().unwrap(), ratio(1, 4));
        assert!(many.iter().all(|e| e.spec().is_ok()));
        assert!(parse_config("{").is_err());
        assert!(parse_config(r#"{"n":6,"k":3,"L":2,"code":"bogus"}"#).is_err());
    }

    #[test]
    fn regime_validation() {
        assert!(CodeSpec::mbr(6, 3, 2, 3).is_ok());
        assert!(CodeSpec::new(CodeKind::Mbr, 6, 3, 2, ratio(2, 3)).is_err());
        assert_eq!(CodeSpec::msr_zero(6, 3, 2).unwrap().kind, CodeKind::Msr0Div);
        assert_eq!(CodeSpec::msr_zero(6, 4, 2).unwrap().kind, CodeKind::Msr0Nondiv);
        assert!(CodeSpec::new(CodeKind::Msr0Div, 6, 4, 2, int(0)).is_err());
        assert!(CodeSpec::msr_stacked(6, 3, 3).is_err());
        assert!(CodeSpec::new(CodeKind::MsrStacked, 6, 2, 3, ratio(1, 2)).is_err());
        assert!(CodeSpec::msr_wrapped(9, 5, 3, ratio(1, 5)).is_err());
        assert!(CodeSpec::msr_wrapped(10, 5, 5, ratio(1, 2)).is_err());
    }

    #[test]
    fn field_promotion() {
        assert_eq!(CodeSpec::mbr_zero(12, 6, 3).unwrap().field_spec(), FieldSpec::gf256());
        // θ = C(24,2) + 3·C(12,2)·2 = 672
        assert_eq!(CodeSpec::mbr(24, 5, 2, 4).unwrap().field_spec(), FieldSpec::gf65536());
        let code = CodeSpec::mbr(24, 5, 2, 4).unwrap().instantiate().unwrap();
        assert_eq!(code.field().degree(), 16);
    }

    #[test]
    fn nondivisible_promotes_when_gf256_is_too_small() {
        let spec = CodeSpec::msr_zero(14, 5, 2).unwrap();
        let code = spec.instantiate().unwrap();
        assert_eq!(code.field().degree(), 16);
        let pinned = spec.with_field(FieldSpec::gf256());
        assert!(matches!(pinned.instantiate(), Err(Error::Parameter(_))));
    }
}
