//! Arithmetic in GF(2^m) for 2 ≤ m ≤ 16.
//!
//! A [`Field`] is a cheap, clonable handle to immutable exp/log tables built
//! once at creation. Elements are plain [`FieldElement`] values; addition is
//! XOR and needs no table, every other operation goes through the handle.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduction polynomial used for GF(2^8) unless a config says otherwise.
pub const DEFAULT_POLY_8: u32 = 0x11D;
/// Reduction polynomial used when a code outgrows GF(2^8).
pub const DEFAULT_POLY_16: u32 = 0x1100B;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

// Characteristic 2: addition is XOR.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Add for FieldElement {
    type Output = FieldElement;

    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_op_assign_impl)]
impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl fmt::LowerHex for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerHex::fmt(&self.0, f)
    }
}

/// Extension degree and reduction polynomial; the serializable identity of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub m: u32,
    pub poly: u32,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec { m: 8, poly: DEFAULT_POLY_8 }
    }
}

impl FieldSpec {
    pub fn gf256() -> Self {
        FieldSpec::default()
    }

    pub fn gf65536() -> Self {
        FieldSpec { m: 16, poly: DEFAULT_POLY_16 }
    }

    /// Smallest default field with at least `points` nonzero elements.
    pub fn smallest_for(points: usize) -> Self {
        if points <= 255 {
            FieldSpec::gf256()
        } else {
            FieldSpec::gf65536()
        }
    }
}

#[derive(Debug)]
struct Tables {
    spec: FieldSpec,
    generator: u16,
    // exp has 2 * (order - 1) entries so that exp[log a + log b] never wraps.
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// Handle to GF(2^m) with precomputed tables.
#[derive(Debug, Clone)]
pub struct Field(Arc<Tables>);

impl PartialEq for Field {
    fn eq(&self, other: &Field) -> bool {
        self.0.spec == other.0.spec
    }
}

impl Eq for Field {}

impl Field {
    /// Builds GF(2^m) modulo `poly`, rejecting reducible polynomials.
    pub fn new(m: u32, poly: u32) -> Result<Field> {
        if !(1..=16).contains(&m) {
            return Err(Error::InvalidField(format!("extension degree {m} outside 1..=16")));
        }
        if degree(poly) != Some(m) {
            return Err(Error::InvalidField(format!(
                "polynomial {poly:#x} does not have degree {m}"
            )));
        }
        if let Some(factor) = find_factor(poly) {
            return Err(Error::ReduciblePolynomial { poly, factor });
        }

        let spec = FieldSpec { m, poly };
        let size = 1usize << m;
        let cyclic = size - 1;
        let generator = (2..size as u32)
            .map(|g| g as u16)
            .chain(std::iter::once(1))
            .find(|&g| multiplicative_order(g, spec) == cyclic)
            .expect("the multiplicative group of a finite field is cyclic");

        let mut exp = vec![0u16; 2 * cyclic];
        let mut log = vec![0u16; size];
        let mut x: u16 = 1;
        for (i, slot) in exp.iter_mut().take(cyclic).enumerate() {
            *slot = x;
            log[x as usize] = i as u16;
            x = clmul_reduce(x, generator, spec);
        }
        for i in cyclic..2 * cyclic {
            exp[i] = exp[i - cyclic];
        }

        Ok(Field(Arc::new(Tables { spec, generator, exp, log })))
    }

    pub fn from_spec(spec: FieldSpec) -> Result<Field> {
        Field::new(spec.m, spec.poly)
    }

    /// GF(2^8) modulo x^8 + x^4 + x^3 + x^2 + 1.
    pub fn gf256() -> Field {
        Field::from_spec(FieldSpec::gf256()).expect("0x11d is irreducible")
    }

    pub fn spec(&self) -> FieldSpec {
        self.0.spec
    }

    pub fn degree(&self) -> u32 {
        self.0.spec.m
    }

    /// Number of elements, 2^m.
    pub fn order(&self) -> usize {
        1usize << self.0.spec.m
    }

    /// The primitive element the tables are built on.
    pub fn generator(&self) -> FieldElement {
        FieldElement(self.0.generator)
    }

    /// Checked conversion from an integer representation.
    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if (value as usize) < self.order() {
            Ok(FieldElement(value as u16))
        } else {
            Err(Error::InvalidField(format!(
                "value {value:#x} outside GF(2^{})",
                self.degree()
            )))
        }
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a + b
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let t = &self.0;
        FieldElement(t.exp[t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let t = &self.0;
        let cyclic = self.order() - 1;
        Ok(FieldElement(t.exp[(cyclic - t.log[a.0 as usize] as usize) % cyclic]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let t = &self.0;
        let cyclic = (self.order() - 1) as u64;
        let l = (t.log[a.0 as usize] as u64 * (e % cyclic)) % cyclic;
        FieldElement(t.exp[l as usize])
    }

    /// Σ a_i · b_i.
    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        a.iter()
            .zip(b)
            .fold(FieldElement::ZERO, |acc, (&x, &y)| acc + self.mul(x, y))
    }

    /// All elements in integer order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.order()).map(|v| FieldElement(v as u16))
    }
}

fn degree(p: u32) -> Option<u32> {
    (p != 0).then(|| 31 - p.leading_zeros())
}

/// Remainder of `a` divided by `b` as polynomials over GF(2).
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = degree(b).expect("division by the zero polynomial");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Lowest-degree nontrivial divisor of `poly`, found by trial division.
fn find_factor(poly: u32) -> Option<u32> {
    let m = degree(poly)?;
    (2u32..1 << (m / 2 + 1))
        .filter(|&d| degree(d).is_some_and(|dd| dd >= 1 && dd <= m / 2))
        .find(|&d| poly_rem(poly, d) == 0)
}

/// Carry-less multiply followed by reduction; the table-free reference.
pub(crate) fn clmul_reduce(a: u16, b: u16, spec: FieldSpec) -> u16 {
    let mut product: u32 = 0;
    for bit in 0..16 {
        if b >> bit & 1 == 1 {
            product ^= (a as u32) << bit;
        }
    }
    poly_rem(product, spec.poly) as u16
}

fn multiplicative_order(g: u16, spec: FieldSpec) -> usize {
    let mut x = g;
    let mut k = 1;
    while x != 1 {
        x = clmul_reduce(x, g, spec);
        k += 1;
        if k > 1 << spec.m {
            return 0;
        }
    }
    k
}
