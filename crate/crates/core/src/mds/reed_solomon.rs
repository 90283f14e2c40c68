use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::mds::Matrix;

/// An `(n_out, k_in)` Reed–Solomon code with a Vandermonde generator.
///
/// Coordinates are 0-based. Column `j` of the generator is
/// `[1, x_j, x_j^2, …, x_j^(k_in-1)]` for the evaluation point `x_j`, so any
/// `k_in` columns form an invertible Vandermonde matrix.
#[derive(Debug, Clone)]
pub struct RsCode {
    field: Field,
    k_in: usize,
    points: Vec<FieldElement>,
    generator: Matrix,
}

impl RsCode {
    /// Evaluates at the first `n_out` nonzero field elements, 1, 2, …, n_out.
    pub fn new(field: &Field, n_out: usize, k_in: usize) -> Result<RsCode> {
        RsCode::with_offset(field, n_out, k_in, 0)
    }

    /// Evaluates at `1 + offset, …, n_out + offset`.
    pub fn with_offset(field: &Field, n_out: usize, k_in: usize, offset: usize) -> Result<RsCode> {
        let max = field.order() - 1;
        if n_out + offset > max {
            return Err(Error::Parameter(format!(
                "RS length {n_out} (point offset {offset}) exceeds the {max} nonzero elements of \
                 GF(2^{}); promote the field to GF(2^16)",
                field.degree()
            )));
        }
        let points = (1..=n_out).map(|v| FieldElement((v + offset) as u16)).collect();
        RsCode::with_points(field, k_in, points)
    }

    pub fn with_points(field: &Field, k_in: usize, points: Vec<FieldElement>) -> Result<RsCode> {
        let n_out = points.len();
        if k_in == 0 || k_in > n_out {
            return Err(Error::Parameter(format!(
                "RS dimension {k_in} must lie in 1..={n_out}"
            )));
        }
        let mut sorted = points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n_out || sorted[0].is_zero() {
            return Err(Error::param("evaluation points must be distinct and nonzero"));
        }
        let mut generator = Matrix::zeros(k_in, n_out);
        for (j, &x) in points.iter().enumerate() {
            for i in 0..k_in {
                generator[(i, j)] = field.pow(x, i as u64);
            }
        }
        Ok(RsCode { field: field.clone(), k_in, points, generator })
    }

    /// Same code, generator rewritten so the first `k_in` coordinates carry
    /// the message verbatim.
    pub fn into_systematic(mut self) -> RsCode {
        let head: Vec<usize> = (0..self.k_in).collect();
        let inv = self
            .generator
            .select_columns(&head)
            .inverse(&self.field)
            .expect("Vandermonde block on distinct points is invertible");
        self.generator = inv.mul(&self.field, &self.generator).expect("dimensions agree");
        self
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n_out(&self) -> usize {
        self.points.len()
    }

    pub fn k_in(&self) -> usize {
        self.k_in
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if message.len() != self.k_in {
            return Err(Error::Length { expected: self.k_in, got: message.len() });
        }
        self.generator.left_mul_vec(&self.field, message)
    }

    /// Erasure decoding from `(coordinate, value)` shares.
    ///
    /// Extra shares beyond `k_in` are checked against the decoded codeword.
    pub fn decode(&self, shares: &[(usize, FieldElement)]) -> Result<Vec<FieldElement>> {
        let mut distinct: Vec<(usize, FieldElement)> = Vec::with_capacity(shares.len());
        for &(c, v) in shares {
            if c >= self.n_out() {
                return Err(Error::Parameter(format!(
                    "coordinate {c} outside a length-{} code",
                    self.n_out()
                )));
            }
            match distinct.iter().find(|(dc, _)| *dc == c) {
                Some((_, dv)) if *dv != v => return Err(Error::Inconsistent),
                Some(_) => {}
                None => distinct.push((c, v)),
            }
        }
        if distinct.len() < self.k_in {
            return Err(Error::Insufficient { needed: self.k_in, got: distinct.len() });
        }

        let (basis, extra) = distinct.split_at(self.k_in);
        let cols: Vec<usize> = basis.iter().map(|&(c, _)| c).collect();
        let values: Vec<FieldElement> = basis.iter().map(|&(_, v)| v).collect();
        let inv = self.generator.select_columns(&cols).inverse(&self.field)?;
        let message = inv.left_mul_vec(&self.field, &values)?;

        if !extra.is_empty() {
            let codeword = self.encode(&message)?;
            if extra.iter().any(|&(c, v)| codeword[c] != v) {
                return Err(Error::Inconsistent);
            }
        }
        Ok(message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_message(rng: &mut ChaCha8Rng, k: usize) -> Vec<FieldElement> {
        (0..k).map(|_| FieldElement(rng.gen_range(0..256))).collect()
    }

    #[test]
    fn example_dimensions() {
        let f = Field::gf256();
        let code = RsCode::new(&f, 18, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_message(&mut rng, 11);
        let c = code.encode(&s).unwrap();
        assert_eq!(c.len(), 18);
        let shares: Vec<_> = (0..11).map(|i| (i, c[i])).collect();
        assert_eq!(code.decode(&shares).unwrap(), s);
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let code = RsCode::new(&Field::gf256(), 9, 4).unwrap();
        assert!(code.encode(&[FieldElement::ZERO; 4]).unwrap().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn square_code_round_trips() {
        let code = RsCode::new(&Field::gf256(), 5, 5).unwrap();
        let s: Vec<_> = [9u16, 8, 7, 6, 5].iter().map(|&v| FieldElement(v)).collect();
        let c = code.encode(&s).unwrap();
        let shares: Vec<_> = c.iter().copied().enumerate().collect();
        assert_eq!(code.decode(&shares).unwrap(), s);
    }

    #[test]
    fn dimension_one_any_coordinate_decodes() {
        let code = RsCode::new(&Field::gf256(), 7, 1).unwrap();
        let c = code.encode(&[FieldElement(0x42)]).unwrap();
        // With k_in = 1 every column of the generator is [1].
        assert!(c.iter().all(|&v| v == FieldElement(0x42)));
        for (i, &v) in c.iter().enumerate() {
            assert_eq!(code.decode(&[(i, v)]).unwrap(), vec![FieldElement(0x42)]);
        }
    }

    #[test]
    fn all_triples_of_six_are_invertible() {
        let f = Field::gf256();
        let code = RsCode::new(&f, 6, 3).unwrap();
        let mut count = 0;
        for cols in (0..6).combinations(3) {
            assert_eq!(code.generator().select_columns(&cols).rank(&f), 3, "{cols:?}");
            count += 1;
        }
        assert_eq!(count, 20);
    }

    #[test]
    fn every_subset_decodes_at_six_three() {
        let code = RsCode::new(&Field::gf256(), 6, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_message(&mut rng, 3);
        let c = code.encode(&s).unwrap();
        for cols in (0..6).combinations(3) {
            let shares: Vec<_> = cols.iter().map(|&i| (i, c[i])).collect();
            assert_eq!(code.decode(&shares).unwrap(), s);
        }
    }

    #[test]
    fn mds_property_exhaustive_for_small_codes() {
        let f = Field::gf256();
        for n in 1..=12 {
            for k in 1..=n {
                let code = RsCode::new(&f, n, k).unwrap();
                for cols in (0..n).combinations(k) {
                    assert_eq!(code.generator().select_columns(&cols).rank(&f), k);
                }
            }
        }
    }

    #[test]
    fn systematic_form_reads_message_directly() {
        let code = RsCode::new(&Field::gf256(), 10, 4).unwrap().into_systematic();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_message(&mut rng, 4);
        let c = code.encode(&s).unwrap();
        assert_eq!(&c[..4], &s[..]);
        let shares: Vec<_> = (6..10).map(|i| (i, c[i])).collect();
        assert_eq!(code.decode(&shares).unwrap(), s);
    }

    #[test]
    fn decode_errors() {
        let code = RsCode::new(&Field::gf256(), 6, 3).unwrap();
        let c = code.encode(&[FieldElement(1), FieldElement(2), FieldElement(3)]).unwrap();
        assert_eq!(
            code.decode(&[(0, c[0]), (1, c[1])]),
            Err(Error::Insufficient { needed: 3, got: 2 })
        );
        let corrupted = [(0, c[0]), (1, c[1]), (2, c[2]), (3, c[3] + FieldElement(1))];
        assert_eq!(code.decode(&corrupted), Err(Error::Inconsistent));
        assert!(matches!(code.encode(&[FieldElement(1)]), Err(Error::Length { .. })));
    }

    #[test]
    fn too_long_for_field() {
        let f = Field::gf256();
        assert!(RsCode::new(&f, 255, 10).is_ok());
        assert!(matches!(RsCode::new(&f, 256, 10), Err(Error::Parameter(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn decode_inverts_encode(
                seed in any::<u64>(),
                (n, k) in (2usize..16).prop_flat_map(|n| (Just(n), 1..=n)),
            ) {
                let code = RsCode::new(&Field::gf256(), n, k).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_message(&mut rng, k);
                let c = code.encode(&s).unwrap();
                let mut coords: Vec<usize> = (0..n).collect();
                rand::seq::SliceRandom::shuffle(&mut coords[..], &mut rng);
                let shares: Vec<_> = coords[..k].iter().map(|&i| (i, c[i])).collect();
                prop_assert_eq!(code.decode(&shares).unwrap(), s);
            }
        }
    }
}
