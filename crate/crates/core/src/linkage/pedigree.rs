//! Pedigree structure, meiosis indexing and IBD sharing.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Largest number of meioses accepted for exhaustive enumeration.
pub const MAX_MEIOSES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phenotype {
    Affected,
    Unaffected,
    Unknown,
}

impl FromStr for Phenotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "affected" | "a" => Ok(Phenotype::Affected),
            "0" | "unaffected" | "u" => Ok(Phenotype::Unaffected),
            "?" | "unknown" | "-" => Ok(Phenotype::Unknown),
            other => Err(Error::invalid(format!("unknown phenotype code {other:?}"))),
        }
    }
}

impl fmt::Display for Phenotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phenotype::Affected => "1",
            Phenotype::Unaffected => "0",
            Phenotype::Unknown => "?",
        })
    }
}

/// One pedigree member; founders have no parents.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub id: usize,
    pub father: Option<usize>,
    pub mother: Option<usize>,
    pub phenotype: Phenotype,
}

/// Inheritance vector: bit `s` of the word is meiosis slot `s`.
pub type InheritanceVector = u64;

/// Validated pedigree with members numbered `1..=N`.
///
/// Founder `k` (in increasing id order, counting from 1) carries allele
/// labels `2k - 1` (paternal) and `2k` (maternal). The `j`-th nonfounder in
/// increasing id order owns meiosis slots `2j` (from the father) and `2j + 1`
/// (from the mother); a zero bit transmits the parent's own paternal
/// (grandpaternal) allele.
#[derive(Clone, Debug, PartialEq)]
pub struct Pedigree {
    members: Vec<Member>,
    founder_rank: Vec<Option<usize>>,
    nonfounder_rank: Vec<Option<usize>>,
    order: Vec<usize>,
}

impl Pedigree {
    pub fn new(mut members: Vec<Member>) -> Result<Self> {
        members.sort_by_key(|m| m.id);
        let n = members.len();
        if n == 0 {
            return Err(Error::invalid("pedigree has no members"));
        }
        for (i, m) in members.iter().enumerate() {
            if m.id != i + 1 {
                return Err(Error::invalid("member ids must be exactly 1..=N"));
            }
            match (m.father, m.mother) {
                (None, None) => {}
                (Some(f), Some(mo)) => {
                    if f == mo || f == m.id || mo == m.id || f == 0 || mo == 0 || f > n || mo > n {
                        return Err(Error::invalid(format!(
                            "member {} has invalid parents",
                            m.id
                        )));
                    }
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "member {} has only one parent",
                        m.id
                    )))
                }
            }
        }
        let mut founder_rank = vec![None; n];
        let mut nonfounder_rank = vec![None; n];
        let (mut f, mut nf) = (0, 0);
        for (i, m) in members.iter().enumerate() {
            if m.father.is_none() {
                founder_rank[i] = Some(f);
                f += 1;
            } else {
                nonfounder_rank[i] = Some(nf);
                nf += 1;
            }
        }
        if 2 * nf > MAX_MEIOSES {
            return Err(Error::invalid(format!(
                "{} meioses exceed the limit {MAX_MEIOSES}",
                2 * nf
            )));
        }
        // parents before children
        let mut order = Vec::with_capacity(n);
        let mut state = vec![0u8; n];
        fn visit(
            i: usize,
            members: &[Member],
            state: &mut [u8],
            order: &mut Vec<usize>,
        ) -> Result<()> {
            match state[i] {
                2 => return Ok(()),
                1 => return Err(Error::invalid("pedigree contains a cycle")),
                _ => {}
            }
            state[i] = 1;
            if let (Some(f), Some(m)) = (members[i].father, members[i].mother) {
                visit(f - 1, members, state, order)?;
                visit(m - 1, members, state, order)?;
            }
            state[i] = 2;
            order.push(i);
            Ok(())
        }
        for i in 0..n {
            visit(i, &members, &mut state, &mut order)?;
        }
        Ok(Self {
            members,
            founder_rank,
            nonfounder_rank,
            order,
        })
    }

    /// Parse lines of `id father mother phenotype`; `0` or `-` marks a
    /// missing parent, phenotypes are `1`, `0` or `?`. Blank lines and `#`
    /// comments are skipped; fields may be separated by whitespace or commas.
    pub fn parse(text: &str) -> Result<Self> {
        let mut members = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 4 {
                return Err(Error::invalid(format!(
                    "line {}: expected 4 fields",
                    lineno + 1
                )));
            }
            let id = parse_id(fields[0], lineno)?.ok_or_else(|| {
                Error::invalid(format!("line {}: member id must be positive", lineno + 1))
            })?;
            members.push(Member {
                id,
                father: parse_id(fields[1], lineno)?,
                mother: parse_id(fields[2], lineno)?,
                phenotype: fields[3].parse()?,
            });
        }
        let mut seen = HashMap::new();
        for m in &members {
            if seen.insert(m.id, ()).is_some() {
                return Err(Error::invalid(format!("duplicate member id {}", m.id)));
            }
        }
        Self::new(members)
    }

    /// Two parents of unknown phenotype and `n` affected children.
    pub fn sibship(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("a sibship needs at least two children"));
        }
        let mut members = vec![
            founder(1, Phenotype::Unknown),
            founder(2, Phenotype::Unknown),
        ];
        for id in 3..3 + n {
            members.push(child(id, 1, 2, Phenotype::Affected));
        }
        Self::new(members)
    }

    /// Affected first cousins 7 and 8 through sibs 3 and 4 of founders 1, 2
    /// with married-in founders 5 and 6.
    pub fn first_cousins() -> Self {
        let u = Phenotype::Unknown;
        Self::new(vec![
            founder(1, u),
            founder(2, u),
            child(3, 1, 2, u),
            child(4, 1, 2, u),
            founder(5, u),
            founder(6, u),
            child(7, 3, 5, Phenotype::Affected),
            child(8, 4, 6, Phenotype::Affected),
        ])
        .expect("valid pedigree")
    }

    /// Affected uncle 3 and nephew 6 (child of 3's brother 4 and founder 5).
    pub fn uncle_nephew() -> Self {
        let u = Phenotype::Unknown;
        Self::new(vec![
            founder(1, u),
            founder(2, u),
            child(3, 1, 2, Phenotype::Affected),
            child(4, 1, 2, u),
            founder(5, u),
            child(6, 4, 5, Phenotype::Affected),
        ])
        .expect("valid pedigree")
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_founders(&self) -> usize {
        self.founder_rank.iter().filter(|r| r.is_some()).count()
    }

    /// Number of meioses `m = 2 (N - F)`.
    pub fn n_meioses(&self) -> usize {
        2 * (self.n_members() - self.n_founders())
    }

    pub fn phenotype(&self, id: usize) -> Result<Phenotype> {
        self.check_id(id)?;
        Ok(self.members[id - 1].phenotype)
    }

    /// Meiosis slots `(paternal, maternal)` of a nonfounder.
    pub fn meiosis_slots(&self, id: usize) -> Result<Option<(usize, usize)>> {
        self.check_id(id)?;
        Ok(self.nonfounder_rank[id - 1].map(|j| (2 * j, 2 * j + 1)))
    }

    fn check_id(&self, id: usize) -> Result<()> {
        if id == 0 || id > self.members.len() {
            return Err(Error::invalid(format!("no member with id {id}")));
        }
        Ok(())
    }

    /// Founder-allele labels `(paternal, maternal)` of every member under `v`,
    /// indexed by `id - 1`.
    pub fn alleles(&self, v: InheritanceVector, out: &mut [(u32, u32)]) {
        for &i in &self.order {
            let m = &self.members[i];
            out[i] = match (m.father, m.mother) {
                (Some(f), Some(mo)) => {
                    let j = self.nonfounder_rank[i].expect("nonfounder");
                    let fa = out[f - 1];
                    let ma = out[mo - 1];
                    let from_father = if v >> (2 * j) & 1 == 0 { fa.0 } else { fa.1 };
                    let from_mother = if v >> (2 * j + 1) & 1 == 0 {
                        ma.0
                    } else {
                        ma.1
                    };
                    (from_father, from_mother)
                }
                _ => {
                    let k = self.founder_rank[i].expect("founder") as u32 + 1;
                    (2 * k - 1, 2 * k)
                }
            };
        }
    }

    /// Number of alleles shared identical by descent by members `k` and `l`.
    pub fn ibd_count(&self, v: InheritanceVector, k: usize, l: usize) -> Result<u8> {
        self.check_id(k)?;
        self.check_id(l)?;
        if k == l {
            return Err(Error::invalid("IBD sharing needs two distinct members"));
        }
        if self.n_meioses() < 64 && v >> self.n_meioses() != 0 {
            return Err(Error::invalid(
                "inheritance vector has bits beyond the meioses",
            ));
        }
        let mut buf = vec![(0, 0); self.n_members()];
        self.alleles(v, &mut buf);
        Ok(shared(buf[k - 1], buf[l - 1]))
    }
}

/// IBD count of two genotypes given as founder-allele labels.
#[inline]
pub fn shared(a: (u32, u32), b: (u32, u32)) -> u8 {
    let straight = (a.0 == b.0) as u8 + (a.1 == b.1) as u8;
    let crossed = (a.0 == b.1) as u8 + (a.1 == b.0) as u8;
    straight.max(crossed)
}

fn parse_id(s: &str, lineno: usize) -> Result<Option<usize>> {
    if s == "0" || s == "-" {
        return Ok(None);
    }
    s.parse::<usize>()
        .map(Some)
        .map_err(|_| Error::invalid(format!("line {}: bad member reference {s:?}", lineno + 1)))
}

fn founder(id: usize, phenotype: Phenotype) -> Member {
    Member {
        id,
        father: None,
        mother: None,
        phenotype,
    }
}

fn child(id: usize, father: usize, mother: usize, phenotype: Phenotype) -> Member {
    Member {
        id,
        father: Some(father),
        mother: Some(mother),
        phenotype,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sib_pair_extremes() {
        let p = Pedigree::sibship(2).unwrap();
        assert_eq!(p.n_meioses(), 4);
        // identical bits from both parents
        assert_eq!(p.ibd_count(0b0000, 3, 4).unwrap(), 2);
        assert_eq!(p.ibd_count(0b1111, 3, 4).unwrap(), 2);
        // complementary bits
        assert_eq!(p.ibd_count(0b1100, 3, 4).unwrap(), 0);
        assert_eq!(p.ibd_count(0b0100, 3, 4).unwrap(), 1);
    }

    #[test]
    fn sib_pair_mean_ibd_is_one() {
        let p = Pedigree::sibship(2).unwrap();
        let total: u32 = (0..16).map(|v| p.ibd_count(v, 3, 4).unwrap() as u32).sum();
        assert_eq!(total, 16);
    }

    #[test]
    fn cousin_and_uncle_shapes() {
        let c = Pedigree::first_cousins();
        assert_eq!((c.n_members(), c.n_founders(), c.n_meioses()), (8, 4, 8));
        let u = Pedigree::uncle_nephew();
        assert_eq!(u.n_meioses(), 6);
        assert!((0..64).all(|v| u.ibd_count(v, 3, 6).unwrap() <= 1));
    }

    #[test]
    fn parse_round_trip() {
        let text = "# sib pair\n1 0 0 ?\n2 0 0 ?\n3 1 2 1\n4,1,2,1\n";
        let p = Pedigree::parse(text).unwrap();
        assert_eq!(p, Pedigree::sibship(2).unwrap());
        assert_eq!(p.meiosis_slots(4).unwrap(), Some((2, 3)));
        assert_eq!(p.meiosis_slots(1).unwrap(), None);
    }

    #[test]
    fn invalid_pedigrees() {
        assert!(Pedigree::parse("1 0 0 ?\n2 1 0 1\n").is_err());
        assert!(Pedigree::parse("1 2 3 1\n2 1 3 1\n3 0 0 ?\n").is_err());
        assert!(Pedigree::parse("1 0 0 x\n").is_err());
        assert!(Pedigree::parse("2 0 0 1\n").is_err());
        let p = Pedigree::sibship(2).unwrap();
        assert!(p.ibd_count(0, 3, 3).is_err());
        assert!(p.ibd_count(0, 3, 9).is_err());
    }
}
