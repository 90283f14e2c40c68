use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::mds::Matrix;
use crate::msr::BaseMsr;

/// Product-matrix MSR code at `d = 2k - 2`, shipped for `n = 2k - 1`.
///
/// The message is `[S1; S2]` with `S1`, `S2` symmetric `α × α`,
/// `α = k - 1`. Node `u` stores `ψ_u^T [S1; S2]` where
/// `ψ_u = [φ_u, λ_u φ_u]`, `φ_u = [1, x_u, …, x_u^(α-1)]`, `λ_u = x_u^α`.
#[derive(Debug, Clone)]
pub struct ProductMatrixMsr {
    field: Field,
    n: usize,
    k: usize,
    points: Vec<FieldElement>,
}

impl ProductMatrixMsr {
    pub fn new(n: usize, k: usize, field: &Field) -> Result<ProductMatrixMsr> {
        if k < 2 || n != 2 * k - 1 {
            return Err(Error::Regime(format!(
                "the shipped product-matrix base needs n = 2k - 1 with k >= 2, got n = {n}, k = {k}"
            )));
        }
        let alpha = k - 1;
        // Distinct x keep Ψ Vandermonde; distinct x^α are also required.
        let mut points = Vec::with_capacity(n);
        let mut lambdas = BTreeSet::new();
        for x in (1..field.order()).map(|v| FieldElement(v as u16)) {
            if points.len() == n {
                break;
            }
            if lambdas.insert(field.pow(x, alpha as u64)) {
                points.push(x);
            }
        }
        if points.len() < n {
            return Err(Error::Parameter(format!(
                "GF(2^{}) has too few points with distinct x^{alpha}; promote the field",
                field.degree()
            )));
        }
        Ok(ProductMatrixMsr { field: field.clone(), n, k, points })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }

    fn alpha(&self) -> usize {
        self.k - 1
    }

    fn phi(&self, u: usize) -> Vec<FieldElement> {
        (0..self.alpha()).map(|i| self.field.pow(self.points[u - 1], i as u64)).collect()
    }

    fn lambda(&self, u: usize) -> FieldElement {
        self.field.pow(self.points[u - 1], self.alpha() as u64)
    }

    fn psi(&self, u: usize) -> Vec<FieldElement> {
        (0..2 * self.alpha()).map(|i| self.field.pow(self.points[u - 1], i as u64)).collect()
    }

    /// `d × α` message matrix from `α(α+1)` source symbols.
    fn message(&self, source: &[FieldElement]) -> Matrix {
        let a = self.alpha();
        let mut m = Matrix::zeros(2 * a, a);
        let mut it = source.iter().copied();
        for block in 0..2 {
            for i in 0..a {
                for j in i..a {
                    let v = it.next().expect("length checked");
                    m[(block * a + i, j)] = v;
                    m[(block * a + j, i)] = v;
                }
            }
        }
        m
    }

    fn unpack(&self, s1: &Matrix, s2: &Matrix) -> Vec<FieldElement> {
        let a = self.alpha();
        let mut out = Vec::with_capacity(a * (a + 1));
        for s in [s1, s2] {
            for i in 0..a {
                for j in i..a {
                    out.push(s[(i, j)]);
                }
            }
        }
        out
    }

    /// Recovers `S` from `X = Φ S Φ^T` entries off the diagonal, one row per node.
    fn solve_symmetric(&self, nodes: &[usize], off: &Matrix) -> Result<Matrix> {
        let a = self.alpha();
        let f = &self.field;
        // Row i: v_i = φ_i^T S satisfies v_i · φ_j = off[i][j] for all j ≠ i.
        let mut v = Vec::with_capacity(a);
        for (i, _) in nodes.iter().enumerate().take(a) {
            let others: Vec<usize> = (0..nodes.len()).filter(|&j| j != i).collect();
            let basis = Matrix::from_rows(others.iter().map(|&j| self.phi(nodes[j])).collect())?;
            let rhs: Vec<FieldElement> = others.iter().map(|&j| off[(i, j)]).collect();
            v.push(basis.inverse(f)?.mul_vec(f, &rhs)?);
        }
        let phi_sub = Matrix::from_rows(nodes[..a].iter().map(|&u| self.phi(u)).collect())?;
        phi_sub.inverse(f)?.mul(f, &Matrix::from_rows(v)?)
    }
}

impl BaseMsr for ProductMatrixMsr {
    fn n(&self) -> usize {
        self.n
    }

    fn k(&self) -> usize {
        self.k
    }

    fn alpha(&self) -> usize {
        self.k - 1
    }

    fn file_size(&self) -> usize {
        self.k * (self.k - 1)
    }

    fn encode(&self, source: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
        if source.len() != self.file_size() {
            return Err(Error::Length { expected: self.file_size(), got: source.len() });
        }
        let m = self.message(source);
        (1..=self.n).map(|u| m.left_mul_vec(&self.field, &self.psi(u))).collect()
    }

    fn helper_symbol(&self, stored: &[FieldElement], failed: usize) -> Result<FieldElement> {
        if stored.len() != self.alpha() {
            return Err(Error::Length { expected: self.alpha(), got: stored.len() });
        }
        Ok(self.field.dot(stored, &self.phi(failed)))
    }

    fn repair(&self, failed: usize, received: &[(usize, FieldElement)]) -> Result<Vec<FieldElement>> {
        let d = 2 * self.alpha();
        let helpers: BTreeSet<usize> = received.iter().map(|&(u, _)| u).collect();
        if helpers.len() != received.len() || helpers.contains(&failed) {
            return Err(Error::Repair("helper symbols must come from distinct surviving nodes".into()));
        }
        if received.len() < d {
            return Err(Error::Insufficient { needed: d, got: received.len() });
        }
        let used = &received[..d];
        let psi = Matrix::from_rows(used.iter().map(|&(u, _)| self.psi(u)).collect())?;
        let rhs: Vec<FieldElement> = used.iter().map(|&(_, v)| v).collect();
        // [S1 φ_f; S2 φ_f]
        let m_phi = psi.inverse(&self.field)?.mul_vec(&self.field, &rhs)?;
        let a = self.alpha();
        let lambda = self.lambda(failed);
        Ok((0..a).map(|i| m_phi[i] + self.field.mul(lambda, m_phi[a + i])).collect())
    }

    fn reconstruct(&self, nodes: &[(usize, Vec<FieldElement>)]) -> Result<Vec<FieldElement>> {
        let k = self.k;
        let distinct: BTreeSet<usize> = nodes.iter().map(|(u, _)| *u).collect();
        if distinct.len() < k {
            return Err(Error::Insufficient { needed: k, got: distinct.len() });
        }
        let used = &nodes[..k];
        let f = &self.field;
        let ids: Vec<usize> = used.iter().map(|(u, _)| *u).collect();
        let stored = Matrix::from_rows(used.iter().map(|(_, s)| s.clone()).collect())?;
        let phi_t = Matrix::from_rows(ids.iter().map(|&u| self.phi(u)).collect())?.transpose();
        // X = P + ΛQ with P = Φ S1 Φ^T, Q = Φ S2 Φ^T
        let x = stored.mul(f, &phi_t)?;
        let mut p = Matrix::zeros(k, k);
        let mut q = Matrix::zeros(k, k);
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                let (li, lj) = (self.lambda(ids[i]), self.lambda(ids[j]));
                q[(i, j)] = f.div(x[(i, j)] + x[(j, i)], li + lj)?;
                p[(i, j)] = x[(i, j)] + f.mul(li, q[(i, j)]);
            }
        }
        let s1 = self.solve_symmetric(&ids, &p)?;
        let s2 = self.solve_symmetric(&ids, &q)?;
        Ok(self.unpack(&s1, &s2))
    }
}
