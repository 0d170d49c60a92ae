//! Words, Cayley balls and finitely supported kernels.
//!
//! Two families are built in: the free group `F_k` and the free abelian group
//! `Z^d`, each with its standard symmetric generating set `a, A, b, B, …`
//! (capital letter = inverse). Words are stored in a canonical reduced form so
//! that equality of group elements is structural equality of [`Word`]s.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of elements of an enumerated ball.
pub const DEFAULT_MAX_BALL: usize = 1_000_000;

/// Environment variable overriding [`DEFAULT_MAX_BALL`].
pub const MAX_BALL_ENV: &str = "AMENCERT_MAX_BALL";

/// Current resource cap for ball enumeration and kernel products.
pub fn max_ball_elements() -> usize {
    std::env::var(MAX_BALL_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_BALL)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Free,
    FreeAbelian,
}

/// A built-in group together with its standard symmetric generating set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawGroupSpec", into = "RawGroupSpec")]
pub struct GroupSpec {
    family: Family,
    rank: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroupSpec {
    family: Family,
    rank: u32,
}

impl TryFrom<RawGroupSpec> for GroupSpec {
    type Error = Error;

    fn try_from(raw: RawGroupSpec) -> Result<Self> {
        GroupSpec::new(raw.family, raw.rank)
    }
}

impl From<GroupSpec> for RawGroupSpec {
    fn from(spec: GroupSpec) -> Self {
        RawGroupSpec {
            family: spec.family,
            rank: spec.rank as u32,
        }
    }
}

/// A generator of the symmetric set `S`, encoded as `2·i` for the `i`-th
/// generator and `2·i + 1` for its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen(u8);

impl Gen {
    pub fn new(index: usize, inverse: bool) -> Self {
        Gen((index as u8) << 1 | inverse as u8)
    }

    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Gen {
        Gen(self.0 ^ 1)
    }

    /// Position of this generator in the ordered list `a, A, b, B, …`.
    pub fn position(self) -> usize {
        self.0 as usize
    }

    pub fn symbol(self) -> char {
        let c = (b'a' + self.index() as u8) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_symbol(c: char) -> Option<Gen> {
        if c.is_ascii_lowercase() {
            Some(Gen::new((c as u8 - b'a') as usize, false))
        } else if c.is_ascii_uppercase() {
            Some(Gen::new((c as u8 - b'A') as usize, true))
        } else {
            None
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A group element in canonical reduced form.
///
/// Free groups: no adjacent `s s⁻¹`. Free abelian groups: letters sorted by
/// generator index, each generator appearing with a single sign. In both
/// cases the number of letters is the word length `|g|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    spec: GroupSpec,
    letters: Vec<Gen>,
}

impl Word {
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn letters(&self) -> &[Gen] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Word without its first letter. Canonical forms are closed under this.
    pub fn tail(&self) -> Word {
        Word {
            spec: self.spec,
            letters: self.letters.get(1..).unwrap_or(&[]).to_vec(),
        }
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

// shortlex
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.spec
            .cmp(&other.spec)
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for s in &self.letters {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl GroupSpec {
    pub fn new(family: Family, rank: u32) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(Error::input(format!(
                "group rank must be in 1..=26, got {rank}"
            )));
        }
        Ok(GroupSpec {
            family,
            rank: rank as u8,
        })
    }

    pub fn free(rank: u32) -> Self {
        Self::new(Family::Free, rank).expect("rank in 1..=26")
    }

    pub fn free_abelian(rank: u32) -> Self {
        Self::new(Family::FreeAbelian, rank).expect("rank in 1..=26")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    /// `#S`.
    pub fn num_generators(&self) -> usize {
        2 * self.rank()
    }

    /// The symmetric generating set in its listed order `a, A, b, B, …`.
    pub fn generators(&self) -> Vec<Gen> {
        (0..self.num_generators()).map(|p| Gen(p as u8)).collect()
    }

    pub fn identity(&self) -> Word {
        Word {
            spec: *self,
            letters: Vec::new(),
        }
    }

    pub fn generator(&self, s: Gen) -> Result<Word> {
        self.reduce(&[s])
    }

    fn check_letter(&self, s: Gen) -> Result<()> {
        if s.index() >= self.rank() {
            Err(Error::input(format!(
                "unknown generator symbol '{}' for a group of rank {}",
                s.symbol(),
                self.rank
            )))
        } else {
            Ok(())
        }
    }

    /// Canonical reduced form of a product of generators.
    pub fn reduce(&self, letters: &[Gen]) -> Result<Word> {
        for &s in letters {
            self.check_letter(s)?;
        }
        let letters = match self.family {
            Family::Free => {
                let mut out: Vec<Gen> = Vec::with_capacity(letters.len());
                for &s in letters {
                    if out.last() == Some(&s.inverse()) {
                        out.pop();
                    } else {
                        out.push(s);
                    }
                }
                out
            }
            Family::FreeAbelian => {
                let mut exps = vec![0i64; self.rank()];
                for &s in letters {
                    exps[s.index()] += if s.is_inverse() { -1 } else { 1 };
                }
                exponents_to_letters(&exps)
            }
        };
        Ok(Word { spec: *self, letters })
    }

    /// Parses a word over `a, A, b, B, …`; `""` and `"1"` denote the identity.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "1" {
            return Ok(self.identity());
        }
        let letters = text
            .chars()
            .map(|c| {
                Gen::from_symbol(c)
                    .ok_or_else(|| Error::input(format!("unknown generator symbol '{c}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.reduce(&letters)
    }

    fn check_same(&self, g: &Word) -> Result<()> {
        if g.spec != *self {
            return Err(Error::input(format!(
                "word {g} belongs to a different group ({:?} vs {:?})",
                g.spec, self
            )));
        }
        Ok(())
    }

    pub fn mul(&self, g: &Word, h: &Word) -> Result<Word> {
        self.check_same(g)?;
        self.check_same(h)?;
        let mut letters = Vec::with_capacity(g.len() + h.len());
        letters.extend_from_slice(&g.letters);
        letters.extend_from_slice(&h.letters);
        self.reduce(&letters)
    }

    pub fn inv(&self, g: &Word) -> Result<Word> {
        self.check_same(g)?;
        let letters: Vec<Gen> = g.letters.iter().rev().map(|s| s.inverse()).collect();
        self.reduce(&letters)
    }

    /// `s · g` for a generator `s`.
    pub fn left_mul_gen(&self, s: Gen, g: &Word) -> Word {
        match self.family {
            Family::Free => {
                let mut letters = Vec::with_capacity(g.len() + 1);
                if g.letters.first() == Some(&s.inverse()) {
                    letters.extend_from_slice(&g.letters[1..]);
                } else {
                    letters.push(s);
                    letters.extend_from_slice(&g.letters);
                }
                Word { spec: *self, letters }
            }
            Family::FreeAbelian => {
                let mut letters = Vec::with_capacity(g.len() + 1);
                letters.push(s);
                letters.extend_from_slice(&g.letters);
                self.reduce(&letters).expect("letters already validated")
            }
        }
    }

    /// Exponent vector of a word in a free abelian group.
    pub fn exponents(&self, g: &Word) -> Vec<i64> {
        let mut exps = vec![0i64; self.rank()];
        for s in &g.letters {
            exps[s.index()] += if s.is_inverse() { -1 } else { 1 };
        }
        exps
    }

    /// Element of `Z^d` with the given exponent vector.
    pub fn from_exponents(&self, exps: &[i64]) -> Result<Word> {
        if self.family != Family::FreeAbelian || exps.len() != self.rank() {
            return Err(Error::input(
                "exponent vectors describe elements of Z^d of matching rank",
            ));
        }
        Ok(Word {
            spec: *self,
            letters: exponents_to_letters(exps),
        })
    }

    /// Number of elements of length exactly `r`.
    pub fn sphere_size(&self, r: usize) -> u128 {
        let ball = |r: usize| -> u128 {
            if r == usize::MAX {
                0
            } else {
                self.ball_size(r)
            }
        };
        if r == 0 {
            1
        } else {
            ball(r) - ball(r - 1)
        }
    }

    /// Closed-form number of elements of length at most `r`, saturating.
    pub fn ball_size(&self, r: usize) -> u128 {
        let k = self.num_generators() as u128;
        match self.family {
            Family::Free => {
                // 1 + Σ_{j=1..r} 2k(2k−1)^{j−1}
                let mut total: u128 = 1;
                let mut sphere: u128 = k;
                for _ in 1..=r {
                    total = total.saturating_add(sphere);
                    sphere = sphere.saturating_mul(k - 1);
                }
                total
            }
            Family::FreeAbelian => {
                // Σ_j 2^j C(d, j) C(r, j) lattice points with |x|_1 ≤ r
                let d = self.rank();
                let mut total: u128 = 0;
                for j in 0..=d.min(r) {
                    let term = binomial(d as u128, j as u128)
                        .saturating_mul(binomial(r as u128, j as u128))
                        .saturating_mul(1u128 << j);
                    total = total.saturating_add(term);
                }
                total
            }
        }
    }

    /// Breadth-first enumeration of `{g : |g| ≤ radius}` with the default cap.
    pub fn ball(&self, radius: usize) -> Result<CayleyBall> {
        self.ball_capped(radius, max_ball_elements())
    }

    pub fn ball_capped(&self, radius: usize, cap: usize) -> Result<CayleyBall> {
        let size = self.ball_size(radius);
        if size > cap as u128 {
            return Err(Error::Resource(format!(
                "ball of radius {radius} has {size} elements, cap is {cap} (set {MAX_BALL_ENV} to raise it)"
            )));
        }
        let mut elements: Vec<Word> = Vec::with_capacity(size as usize);
        let mut index: HashMap<Word, usize> = HashMap::with_capacity(size as usize);
        let mut sphere_starts = vec![0usize];
        elements.push(self.identity());
        index.insert(self.identity(), 0);
        let gens = self.generators();
        for r in 0..radius {
            let (lo, hi) = (sphere_starts[r], elements.len());
            sphere_starts.push(hi);
            for i in lo..hi {
                for &s in &gens {
                    let w = &elements[i];
                    let next = match self.family {
                        Family::Free => {
                            if w.letters.last() == Some(&s.inverse()) {
                                continue;
                            }
                            let mut letters = w.letters.clone();
                            letters.push(s);
                            Word { spec: *self, letters }
                        }
                        Family::FreeAbelian => {
                            let mut letters = w.letters.clone();
                            letters.push(s);
                            let u = self.reduce(&letters)?;
                            if u.len() != r + 1 || index.contains_key(&u) {
                                continue;
                            }
                            u
                        }
                    };
                    index.insert(next.clone(), elements.len());
                    elements.push(next);
                }
            }
        }
        debug_assert_eq!(elements.len() as u128, size);
        Ok(CayleyBall {
            spec: *self,
            radius,
            elements,
            index,
            sphere_starts,
        })
    }
}

fn exponents_to_letters(exps: &[i64]) -> Vec<Gen> {
    let mut out = Vec::new();
    for (i, &e) in exps.iter().enumerate() {
        let s = Gen::new(i, e < 0);
        out.extend(std::iter::repeat(s).take(e.unsigned_abs() as usize));
    }
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All elements of word length at most `radius`, in breadth-first order with
/// generators tried in their listed order. The identity sits at index 0.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    spec: GroupSpec,
    radius: usize,
    elements: Vec<Word>,
    index: HashMap<Word, usize>,
    sphere_starts: Vec<usize>,
}

impl CayleyBall {
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, g: &Word) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &Word) -> bool {
        self.index.contains_key(g)
    }

    /// Elements of length exactly `r`.
    pub fn sphere(&self, r: usize) -> &[Word] {
        if r > self.radius {
            return &[];
        }
        let lo = self.sphere_starts[r];
        let hi = self
            .sphere_starts
            .get(r + 1)
            .copied()
            .unwrap_or(self.elements.len());
        &self.elements[lo..hi]
    }

    /// Row-major `len × #S` table: entry `(i, s)` is the position of
    /// `s · g_i` when it lies in the ball.
    pub fn left_neighbors(&self) -> Vec<Option<usize>> {
        let gens = self.spec.generators();
        let mut table = Vec::with_capacity(self.len() * gens.len());
        for g in &self.elements {
            for &s in &gens {
                table.push(self.position(&self.spec.left_mul_gen(s, g)));
            }
        }
        table
    }
}

/// A finitely supported real function on the group.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    spec: GroupSpec,
    values: BTreeMap<Word, f64>,
}

impl Kernel {
    pub fn zero(spec: GroupSpec) -> Self {
        Kernel {
            spec,
            values: BTreeMap::new(),
        }
    }

    pub fn delta(g: &Word) -> Self {
        let mut k = Kernel::zero(g.spec());
        k.values.insert(g.clone(), 1.0);
        k
    }

    pub fn from_pairs(spec: GroupSpec, pairs: impl IntoIterator<Item = (Word, f64)>) -> Result<Self> {
        let mut k = Kernel::zero(spec);
        for (g, v) in pairs {
            spec.check_same(&g)?;
            if !v.is_finite() {
                return Err(Error::input(format!("kernel value at {g} is not finite")));
            }
            *k.values.entry(g).or_insert(0.0) += v;
        }
        Ok(k)
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn get(&self, g: &Word) -> f64 {
        self.values.get(g).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = &Word> {
        self.values.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.values.iter().map(|(g, &v)| (g, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.values().map(|v| v * v).sum()
    }

    /// `ℓ₂` inner product.
    pub fn inner(&self, other: &Kernel) -> f64 {
        self.values
            .iter()
            .map(|(g, v)| v * other.get(g))
            .sum()
    }

    /// Left translate `(s·f)_h = f_{s⁻¹h}`.
    pub fn translate_gen(&self, s: Gen) -> Kernel {
        let values = self
            .values
            .iter()
            .map(|(g, &v)| (self.spec.left_mul_gen(s, g), v))
            .collect();
        Kernel {
            spec: self.spec,
            values,
        }
    }

    /// Largest word length in the support.
    pub fn support_radius(&self) -> usize {
        self.values.keys().map(Word::len).max().unwrap_or(0)
    }

    /// `(p∗q)(g) = Σ_h p(h) q(h⁻¹g)`; exact zeros are dropped.
    pub fn convolve(&self, other: &Kernel) -> Result<Kernel> {
        if self.spec != other.spec {
            return Err(Error::input("convolution of kernels on different groups"));
        }
        let cap = max_ball_elements();
        if self.len().saturating_mul(other.len()) > cap {
            return Err(Error::Resource(format!(
                "convolution needs {}×{} products, cap is {cap}",
                self.len(),
                other.len()
            )));
        }
        let mut values: BTreeMap<Word, f64> = BTreeMap::new();
        for (h, p) in &self.values {
            for (k, q) in &other.values {
                let g = self.spec.mul(h, k)?;
                *values.entry(g).or_insert(0.0) += p * q;
            }
        }
        values.retain(|_, v| *v != 0.0);
        Ok(Kernel {
            spec: self.spec,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(spec: &GroupSpec, s: &str) -> Word {
        spec.parse_word(s).unwrap()
    }

    #[test]
    fn reduce_examples() {
        let f2 = GroupSpec::free(2);
        assert!(w(&f2, "aA").is_identity());
        let g = w(&f2, "abBa");
        assert_eq!(g.to_string(), "aa");
        assert_eq!(g.len(), 2);

        let z2 = GroupSpec::free_abelian(2);
        let g = w(&z2, "abA");
        assert_eq!(g.to_string(), "b");
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn reduce_rejects_unknown_symbol() {
        let f2 = GroupSpec::free(2);
        assert!(matches!(f2.parse_word("ac"), Err(Error::Input(_))));
        assert!(matches!(f2.parse_word("a1"), Err(Error::Input(_))));
    }

    #[test]
    fn mul_inv_examples() {
        let f2 = GroupSpec::free(2);
        assert_eq!(f2.mul(&w(&f2, "a"), &w(&f2, "b")).unwrap().to_string(), "ab");
        assert_eq!(f2.inv(&w(&f2, "ab")).unwrap().to_string(), "BA");
        assert_eq!(f2.mul(&w(&f2, "ab"), &w(&f2, "B")).unwrap().to_string(), "a");
    }

    #[test]
    fn mixed_specs_are_rejected() {
        let f2 = GroupSpec::free(2);
        let z2 = GroupSpec::free_abelian(2);
        assert!(matches!(
            f2.mul(&w(&f2, "a"), &w(&z2, "a")),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn ball_sizes() {
        let f2 = GroupSpec::free(2);
        assert_eq!(f2.ball(0).unwrap().len(), 1);
        assert_eq!(f2.ball(2).unwrap().len(), 17);
        assert_eq!(GroupSpec::free_abelian(2).ball(1).unwrap().len(), 5);
        for r in 1..6 {
            assert_eq!(f2.sphere_size(r), 4 * 3u128.pow(r as u32 - 1));
        }
    }

    #[test]
    fn ball_order_is_breadth_first() {
        let f2 = GroupSpec::free(2);
        let ball = f2.ball(1).unwrap();
        let names: Vec<String> = ball.elements().iter().map(|g| g.to_string()).collect();
        assert_eq!(names, ["1", "a", "A", "b", "B"]);
        assert!(ball.sphere(1).iter().all(|g| g.len() == 1));
    }

    #[test]
    fn ball_cap_is_an_error() {
        let f2 = GroupSpec::free(2);
        assert!(matches!(f2.ball_capped(10, 1000), Err(Error::Resource(_))));
    }

    #[test]
    fn lattice_ball_matches_direct_count() {
        for d in 1..=3u32 {
            let z = GroupSpec::free_abelian(d);
            for r in 0..6usize {
                let ball = z.ball(r).unwrap();
                // direct count of integer points with |x|_1 ≤ r
                let ri = r as i64;
                let mut count = 0u128;
                let mut stack = vec![(0usize, 0i64)];
                while let Some((depth, used)) = stack.pop() {
                    if depth == d as usize {
                        count += 1;
                        continue;
                    }
                    for x in -(ri - used)..=(ri - used) {
                        stack.push((depth + 1, used + x.abs()));
                    }
                }
                assert_eq!(ball.len() as u128, count, "d={d} r={r}");
                assert!(ball.elements().iter().all(|g| g.len() <= r));
            }
        }
    }

    #[test]
    fn ball_is_prefix_closed() {
        for spec in [GroupSpec::free(2), GroupSpec::free_abelian(3)] {
            let ball = spec.ball(3).unwrap();
            for g in ball.elements() {
                for cut in 0..g.len() {
                    let prefix = spec.reduce(&g.letters()[..cut]).unwrap();
                    assert!(ball.contains(&prefix));
                }
            }
        }
    }

    #[test]
    fn convolution_examples() {
        let f2 = GroupSpec::free(2);
        let q = Kernel::from_pairs(f2, [(w(&f2, "ab"), 2.0), (w(&f2, "B"), -1.0)]).unwrap();
        assert_eq!(Kernel::delta(&f2.identity()).convolve(&q).unwrap(), q);

        let ab = Kernel::delta(&w(&f2, "a"))
            .convolve(&Kernel::delta(&w(&f2, "b")))
            .unwrap();
        assert_eq!(ab, Kernel::delta(&w(&f2, "ab")));

        let p = Kernel::from_pairs(f2, [(w(&f2, "a"), 1.0), (w(&f2, "A"), 1.0)]).unwrap();
        let pp = p.convolve(&p).unwrap();
        let expected = Kernel::from_pairs(
            f2,
            [
                (f2.identity(), 2.0),
                (w(&f2, "aa"), 1.0),
                (w(&f2, "AA"), 1.0),
            ],
        )
        .unwrap();
        assert_eq!(pp, expected);
    }

    #[test]
    fn left_neighbor_table() {
        let f2 = GroupSpec::free(2);
        let ball = f2.ball(1).unwrap();
        let table = ball.left_neighbors();
        // neighbours of the identity are the four generators
        assert_eq!(&table[0..4], &[Some(1), Some(2), Some(3), Some(4)]);
        // A · a = 1
        assert_eq!(table[4 + 1], Some(0));
        // b · a leaves the ball of radius 1
        assert_eq!(table[4 + 2], None);
    }
}
