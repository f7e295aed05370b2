//! MOD-score tables over inheritance vectors and their Walsh coefficients.

use nalgebra::Matrix2;

use super::pedigree::{shared, Pedigree, Phenotype};
use crate::{par, Error, Result};

const ENUM_BLOCK: usize = 1 << 10;

/// Pair weight `omega_kl` for binary phenotypes with prevalence `k`.
pub fn pair_weight(a: Phenotype, b: Phenotype, k: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::invalid(format!("prevalence {k} outside (0, 1)")));
    }
    use Phenotype::*;
    Ok(match (a, b) {
        (Affected, Affected) => 1.0 / (k * k),
        (Unaffected, Unaffected) => 1.0 / ((1.0 - k) * (1.0 - k)),
        (Affected, Unaffected) | (Unaffected, Affected) => -1.0 / (k * (1.0 - k)),
        _ => 0.0,
    })
}

/// In-place unnormalised fast Walsh-Hadamard transform; `a.len()` must be a power of two.
pub fn fwht(a: &mut [f64]) {
    let n = a.len();
    assert!(n.is_power_of_two(), "length must be a power of two");
    let mut h = 1;
    while h < n {
        for chunk in a.chunks_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

/// Centred score pairs `S(v) = (S_1(v), S_2(v))` for all `2^m` inheritance
/// vectors, with their Walsh coefficients `R_S(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    m: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    r1: Vec<f64>,
    r2: Vec<f64>,
    prevalence: f64,
}

impl ScoreTable {
    /// Enumerate the pedigree's inheritance vectors at prevalence `k`.
    pub fn new(ped: &Pedigree, k: f64) -> Result<Self> {
        let members = ped.members();
        let mut pairs = Vec::new();
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let w = pair_weight(members[a].phenotype, members[b].phenotype, k)?;
                if w != 0.0 {
                    pairs.push((a, b, w));
                }
            }
        }
        let m = ped.n_meioses();
        let size = 1usize << m;
        let blocks = par::map_blocks(size, ENUM_BLOCK, |_, range| {
            let mut alleles = vec![(0, 0); members.len()];
            range
                .map(|v| {
                    ped.alleles(v as u64, &mut alleles);
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for &(a, b, w) in &pairs {
                        let ibd = shared(alleles[a], alleles[b]);
                        s1 += w * ibd as f64 / 2.0;
                        if ibd == 2 {
                            s2 += w;
                        }
                    }
                    (s1, s2)
                })
                .collect::<Vec<_>>()
        });
        let (s1, s2): (Vec<f64>, Vec<f64>) = blocks.into_iter().flatten().unzip();
        Self::from_raw(m, s1, s2, k)
    }

    /// Table from uncentred score values indexed by inheritance vector.
    pub fn from_raw(m: usize, mut s1: Vec<f64>, mut s2: Vec<f64>, prevalence: f64) -> Result<Self> {
        if s1.len() != 1 << m || s2.len() != 1 << m {
            return Err(Error::invalid(format!(
                "score arrays must have 2^{m} entries"
            )));
        }
        if s1.iter().chain(&s2).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite score value"));
        }
        for s in [&mut s1, &mut s2] {
            let c = s.iter().sum::<f64>() / s.len() as f64;
            s.iter_mut().for_each(|x| *x -= c);
        }
        let scale = 1.0 / (1u64 << m) as f64;
        let mut r1 = s1.clone();
        let mut r2 = s2.clone();
        fwht(&mut r1);
        fwht(&mut r2);
        r1.iter_mut().chain(r2.iter_mut()).for_each(|x| *x *= scale);
        // centring leaves only rounding noise in the constant coefficient
        r1[0] = 0.0;
        r2[0] = 0.0;
        Ok(Self {
            m,
            s1,
            s2,
            r1,
            r2,
            prevalence,
        })
    }

    pub fn n_meioses(&self) -> usize {
        self.m
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    /// `S(v)`.
    pub fn score(&self, v: usize) -> (f64, f64) {
        (self.s1[v], self.s2[v])
    }

    pub fn s1(&self) -> &[f64] {
        &self.s1
    }

    pub fn s2(&self) -> &[f64] {
        &self.s2
    }

    /// Walsh coefficient `R_S(w)`.
    pub fn coefficient(&self, w: usize) -> (f64, f64) {
        (self.r1[w], self.r2[w])
    }

    /// `I = 2^{-m} sum_v S(v) S(v)^T`.
    pub fn information(&self) -> Matrix2<f64> {
        let mut acc = Matrix2::zeros();
        for (a, b) in self.s1.iter().zip(&self.s2) {
            acc[(0, 0)] += a * a;
            acc[(0, 1)] += a * b;
            acc[(1, 1)] += b * b;
        }
        acc[(1, 0)] = acc[(0, 1)];
        acc / self.s1.len() as f64
    }

    /// `sum_{|w| = l} R_A(w) R_B(w)^T` for `l = 0..=m`.
    pub fn group_sums(&self, other: &ScoreTable) -> Result<Vec<Matrix2<f64>>> {
        if self.m != other.m {
            return Err(Error::invalid(
                "score tables come from pedigrees of different shape",
            ));
        }
        let mut out = vec![Matrix2::zeros(); self.m + 1];
        for w in 0..self.r1.len() {
            let l = w.count_ones() as usize;
            let a = [self.r1[w], self.r2[w]];
            let b = [other.r1[w], other.r2[w]];
            for i in 0..2 {
                for j in 0..2 {
                    out[l][(i, j)] += a[i] * b[j];
                }
            }
        }
        Ok(out)
    }
}

/// Cross information `sum_w R_A(w) R_B(w)^T exp(-2 |w| s)` between loci at
/// distance `s`.
pub fn cross_information(a: &ScoreTable, b: &ScoreTable, s: f64) -> Result<Matrix2<f64>> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!(
            "distance {s} must be finite and nonnegative"
        )));
    }
    let groups = a.group_sums(b)?;
    Ok(groups
        .iter()
        .enumerate()
        .fold(Matrix2::zeros(), |acc, (l, g)| {
            acc + g * (-2.0 * l as f64 * s).exp()
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pair_weight_examples() {
        use Phenotype::*;
        assert_eq!(pair_weight(Affected, Affected, 0.5).unwrap(), 4.0);
        assert_eq!(pair_weight(Affected, Unknown, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(
            pair_weight(Affected, Unaffected, 0.1).unwrap(),
            -1.0 / 0.09,
            epsilon = 1e-12
        );
        assert!(pair_weight(Affected, Affected, 1.0).is_err());
    }

    #[test]
    fn fwht_is_self_inverse_up_to_scale() {
        let mut a: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let orig = a.clone();
        fwht(&mut a);
        fwht(&mut a);
        for (x, y) in a.iter().zip(&orig) {
            assert_abs_diff_eq!(x / 16.0, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn sib_pair_information() {
        let t = ScoreTable::new(&Pedigree::sibship(2).unwrap(), 0.5).unwrap();
        let k4 = 0.5f64.powi(4);
        let i = t.information() * k4;
        assert_abs_diff_eq!(
            i,
            Matrix2::new(0.125, 0.125, 0.125, 0.1875),
            epsilon = 1e-15
        );
        let mean: f64 = t.s1().iter().sum();
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn single_known_phenotype_gives_zero_scores() {
        let ped = Pedigree::parse("1 0 0 ?\n2 0 0 ?\n3 1 2 1\n4 1 2 ?\n").unwrap();
        let t = ScoreTable::new(&ped, 0.2).unwrap();
        assert!(t.s1().iter().chain(t.s2()).all(|&x| x == 0.0));
        assert_eq!(t.information(), Matrix2::zeros());
    }

    #[test]
    fn parseval_and_decay() {
        let t = ScoreTable::new(&Pedigree::sibship(3).unwrap(), 0.3).unwrap();
        let i0 = cross_information(&t, &t, 0.0).unwrap();
        assert_abs_diff_eq!(i0, t.information(), epsilon = 1e-10);
        let far = cross_information(&t, &t, 20.0).unwrap();
        assert!(far.amax() <= i0.amax() * (-40.0f64).exp());
    }
}
