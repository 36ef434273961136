//! Cayley tree of the free group `F_r` with its word metric.
//!
//! Letters are signed generator indices: `k` stands for the generator `a_k`
//! and `-k` for its inverse. Textual form uses lowercase letters for
//! generators and uppercase for inverses, so `"aB"` is `a₁a₂⁻¹`.

use std::fmt;

use rand::Rng;

use super::{Bord, BordOf, Space, SpaceKind};
use crate::error::{HoroError, Result};

pub type Letter = i8;

/// A freely reduced word.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Freely reduces `letters` (zero letters are rejected by the parser and
    /// skipped here).
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Word::identity();
        for l in letters {
            if l != 0 {
                w.push(l);
            }
        }
        w
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    /// Right multiplication by a single letter.
    pub fn push(&mut self, l: Letter) {
        if self.0.last() == Some(&-l) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    pub fn mul_assign(&mut self, other: &Word) {
        for &l in &other.0 {
            self.push(l);
        }
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn pow(&self, n: usize) -> Word {
        let mut out = Word::identity();
        for _ in 0..n {
            out.mul_assign(self);
        }
        out
    }

    /// Parses `"e"`, `""` or a string of generator letters.
    pub fn parse(s: &str, rank: u8) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::identity());
        }
        s.chars().map(|c| letter_from_char(c, rank)).collect::<Result<Vec<_>>>().map(Word::from_letters)
    }

    /// Writes `w = u·c·u⁻¹` with `c` cyclically reduced.
    pub fn cyclic_decomposition(&self) -> (Word, Word) {
        let l = &self.0;
        let mut k = 0;
        while 2 * k + 1 < l.len() && l[k] == -l[l.len() - 1 - k] {
            k += 1;
        }
        (Word(l[..k].to_vec()), Word(l[k..l.len() - k].to_vec()))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for &l in &self.0 {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

fn letter_from_char(c: char, rank: u8) -> Result<Letter> {
    let (base, sign) = if c.is_ascii_lowercase() {
        (b'a', 1)
    } else if c.is_ascii_uppercase() {
        (b'A', -1)
    } else {
        return Err(HoroError::InvalidPoint(format!("'{c}' is not a generator letter")));
    };
    let index = c as u8 - base + 1;
    if index > rank {
        return Err(HoroError::InvalidPoint(format!("generator '{c}' exceeds rank {rank}")));
    }
    Ok(sign * index as Letter)
}

fn letter_char(l: Letter) -> char {
    let index = l.unsigned_abs() - 1;
    if l > 0 {
        (b'a' + index) as char
    } else {
        (b'A' + index) as char
    }
}

/// Length of the longest common prefix of two letter streams.
fn common_prefix<A, B>(a: A, b: B) -> usize
where
    A: IntoIterator<Item = Letter>,
    B: IntoIterator<Item = Letter>,
{
    a.into_iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// An eventually periodic infinite reduced word `prefix · period^∞`.
///
/// Stored in canonical form: the period is primitive and cyclically reduced,
/// `prefix · period` is reduced, and the prefix does not end with the last
/// letter of the period. Equal boundary points therefore compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfiniteWord {
    prefix: Word,
    period: Word,
}

impl InfiniteWord {
    /// The boundary point `prefix · period^∞` for arbitrary words.
    pub fn new(prefix: &Word, period: &Word) -> Result<Self> {
        let (u, c) = period.cyclic_decomposition();
        if c.is_empty() {
            return Err(HoroError::InvalidPoint("period of an infinite word is trivial".into()));
        }
        Ok(Self::from_parts(prefix.mul(&u), c.0))
    }

    /// `period^∞` for a single generator letter.
    pub fn ray(letter: Letter) -> Self {
        InfiniteWord { prefix: Word::identity(), period: Word(vec![letter]) }
    }

    /// `w · cycle^∞` for a cyclically reduced nonempty `cycle`.
    fn from_parts(mut w: Word, mut cycle: Vec<Letter>) -> Self {
        while let Some(l) = w.last() {
            if l == -cycle[0] {
                w.0.pop();
                cycle.rotate_left(1);
            } else {
                break;
            }
        }
        let root = primitive_root_len(&cycle);
        cycle.truncate(root);
        while let (Some(l), Some(&c)) = (w.last(), cycle.last()) {
            if l != c {
                break;
            }
            w.0.pop();
            cycle.rotate_right(1);
        }
        InfiniteWord { prefix: w, period: Word(cycle) }
    }

    /// Parses `"pre(per)"`, e.g. `"(ab)"` for `(ab)^∞` or `"b(a)"` for `b·a^∞`.
    pub fn parse(s: &str, rank: u8) -> Result<Self> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| HoroError::InvalidPoint(format!("'{s}' lacks a '(period)'")))?;
        if !s.ends_with(')') {
            return Err(HoroError::InvalidPoint(format!("'{s}' must end with ')'")));
        }
        let prefix = Word::parse(&s[..open], rank)?;
        let period = Word::parse(&s[open + 1..s.len() - 1], rank)?;
        Self::new(&prefix, &period)
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    /// The infinite letter stream.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.prefix.0.iter().copied().chain(self.period.0.iter().copied().cycle())
    }

    /// Left translation `g · ξ`.
    pub fn translate(&self, g: &Word) -> Self {
        Self::from_parts(g.mul(&self.prefix), self.period.0.clone())
    }

    /// Longest common prefix with another boundary point; `None` when equal.
    pub fn common_prefix(&self, other: &InfiniteWord) -> Option<usize> {
        if self == other {
            return None;
        }
        // Distinct eventually periodic words disagree within this many letters.
        let bound = self.prefix.len().max(other.prefix.len()) + self.period.len() + other.period.len();
        let cp = common_prefix(self.letters().take(bound), other.letters());
        debug_assert!(cp < bound);
        Some(cp)
    }
}

impl fmt::Display for InfiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            write!(f, "{}", self.prefix)?;
        }
        write!(f, "({})", self.period)
    }
}

fn primitive_root_len(cycle: &[Letter]) -> usize {
    let n = cycle.len();
    (1..=n).find(|&d| n.is_multiple_of(d) && (d..n).all(|i| cycle[i] == cycle[i % d])).unwrap_or(n)
}

/// The Cayley tree of the free group of the given rank; 0-hyperbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeGroupTree {
    rank: u8,
    max_random_len: usize,
}

impl FreeGroupTree {
    pub fn new(rank: u8) -> Result<Self> {
        if !(2..=26).contains(&rank) {
            return Err(HoroError::Config(format!("free group rank must be in 2..=26, got {rank}")));
        }
        Ok(FreeGroupTree { rank, max_random_len: 10 })
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    /// The `2r` generators and their inverses, `a, A, b, B, …`.
    pub fn generators(&self) -> Vec<Word> {
        (1..=self.rank as Letter).flat_map(|k| [Word(vec![k]), Word(vec![-k])]).collect()
    }

    pub fn parse_word(&self, s: &str) -> Result<Word> {
        Word::parse(s, self.rank)
    }

    /// All reduced words of length exactly `n`, in lexicographic letter order.
    pub fn words_of_length(&self, n: usize) -> Vec<Word> {
        let letters: Vec<Letter> = self.generators().iter().map(|g| g.0[0]).collect();
        let mut words = vec![Word::identity()];
        for _ in 0..n {
            words = words
                .iter()
                .flat_map(|w| {
                    letters.iter().filter(move |&&l| w.last() != Some(-l)).map(move |&l| {
                        let mut next = w.clone();
                        next.push(l);
                        next
                    })
                })
                .collect();
        }
        words
    }

    /// Distinct ends `w·l^∞` for reduced words `w` with `1 ≤ |w| ≤ depth` and
    /// `l` the last letter of `w`.
    pub fn limit_ideals(&self, depth: usize) -> Vec<InfiniteWord> {
        let mut ends = std::collections::BTreeSet::new();
        for n in 1..=depth {
            for w in self.words_of_length(n) {
                let l = w.last().expect("nonempty word");
                ends.insert(InfiniteWord::from_parts(w, vec![l]));
            }
        }
        ends.into_iter().collect()
    }

    pub fn parse_ideal(&self, s: &str) -> Result<InfiniteWord> {
        InfiniteWord::parse(s, self.rank)
    }

    fn random_letter<R: Rng + ?Sized>(&self, rng: &mut R, avoid: Option<Letter>) -> Letter {
        loop {
            let k = rng.gen_range(1..=self.rank as Letter);
            let l = if rng.gen::<bool>() { k } else { -k };
            if Some(-l) != avoid {
                return l;
            }
        }
    }

    fn random_word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Word {
        let mut w = Word::identity();
        for _ in 0..len {
            let l = self.random_letter(rng, w.last());
            w.0.push(l);
        }
        w
    }

    /// `⟨x, ξ⟩_e` for a finite word against any bordification point.
    fn product_at_identity(x: &BordOf<Self>, y: &BordOf<Self>) -> f64 {
        match (x, y) {
            (Bord::Point(u), Bord::Point(v)) => common_prefix(u.0.iter().copied(), v.0.iter().copied()) as f64,
            (Bord::Point(u), Bord::Ideal(xi)) | (Bord::Ideal(xi), Bord::Point(u)) => {
                common_prefix(u.0.iter().copied(), xi.letters()) as f64
            }
            (Bord::Ideal(a), Bord::Ideal(b)) => a.common_prefix(b).map_or(f64::INFINITY, |c| c as f64),
        }
    }
}

impl Space for FreeGroupTree {
    type Point = Word;
    type Isometry = Word;
    type Ideal = InfiniteWord;
    type IsometryKey = Word;
    type IdealKey = InfiniteWord;

    fn kind(&self) -> SpaceKind {
        SpaceKind::FreeGroupTree
    }

    fn delta(&self) -> f64 {
        0.0
    }

    fn basepoint(&self) -> Word {
        Word::identity()
    }

    fn distance(&self, x: &Word, y: &Word) -> f64 {
        let cp = common_prefix(x.0.iter().copied(), y.0.iter().copied());
        (x.len() + y.len() - 2 * cp) as f64
    }

    fn identity(&self) -> Word {
        Word::identity()
    }

    fn apply(&self, g: &Word, x: &Word) -> Word {
        g.mul(x)
    }

    fn compose(&self, g: &Word, h: &Word) -> Word {
        g.mul(h)
    }

    fn right_multiply(&self, acc: &mut Word, h: &Word) {
        acc.mul_assign(h);
    }

    fn inverse(&self, g: &Word) -> Word {
        g.inverse()
    }

    fn isometry_key(&self, g: &Word) -> Word {
        g.clone()
    }

    fn orbit_point(&self, g: &Word) -> Word {
        g.clone()
    }

    fn displacement(&self, g: &Word) -> f64 {
        g.len() as f64
    }

    fn is_identity(&self, g: &Word) -> bool {
        g.is_empty()
    }

    fn apply_ideal(&self, g: &Word, xi: &InfiniteWord) -> InfiniteWord {
        xi.translate(g)
    }

    fn ideal_key(&self, xi: &InfiniteWord) -> InfiniteWord {
        xi.clone()
    }

    fn extended_product(&self, x: &BordOf<Self>, y: &BordOf<Self>, base: &Word) -> f64 {
        if base.is_empty() {
            return Self::product_at_identity(x, y);
        }
        let shift = base.inverse();
        let move_point = |p: &BordOf<Self>| match p {
            Bord::Point(w) => Bord::Point(shift.mul(w)),
            Bord::Ideal(xi) => Bord::Ideal(xi.translate(&shift)),
        };
        Self::product_at_identity(&move_point(x), &move_point(y))
    }

    fn busemann(&self, xi: &InfiniteWord, z: &Word) -> f64 {
        z.len() as f64 - 2.0 * common_prefix(z.0.iter().copied(), xi.letters()) as f64
    }

    fn fixed_ideals(&self, g: &Word) -> Vec<InfiniteWord> {
        if g.is_empty() {
            return Vec::new();
        }
        let (u, c) = g.cyclic_decomposition();
        vec![InfiniteWord::from_parts(u.clone(), c.0.clone()), InfiniteWord::from_parts(u, c.inverse().0)]
    }

    fn fixed_points(&self, _g: &Word) -> Vec<Word> {
        // Nontrivial elements of a free group act without fixed vertices.
        Vec::new()
    }

    fn forward_limit(&self, g: &Word, depth: usize) -> Result<InfiniteWord> {
        if g.len() < depth {
            return Err(HoroError::InsufficientEscape { displacement: g.len() as f64, depth });
        }
        let prefix = Word(g.0[..depth].to_vec());
        let tail = prefix.last().or_else(|| g.0.first().copied()).unwrap_or(1);
        Ok(InfiniteWord::from_parts(prefix, vec![tail]))
    }

    fn coarse_ideal(&self, xi: &InfiniteWord, level: u32) -> InfiniteWord {
        let head: Vec<Letter> = xi.letters().take(level.max(1) as usize).collect();
        let tail = *head.last().expect("level >= 1");
        InfiniteWord::from_parts(Word(head), vec![tail])
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let len = rng.gen_range(0..=self.max_random_len);
        self.random_word(rng, len)
    }

    fn random_isometry<R: Rng + ?Sized>(&self, rng: &mut R) -> Word {
        let len = rng.gen_range(0..=self.max_random_len / 2);
        self.random_word(rng, len)
    }

    fn random_ideal<R: Rng + ?Sized>(&self, rng: &mut R) -> InfiniteWord {
        let prefix_len = rng.gen_range(0..=5);
        let prefix = self.random_word(rng, prefix_len);
        loop {
            let period_len = rng.gen_range(1..=3);
            let period = self.random_word(rng, period_len);
            if let Ok(xi) = InfiniteWord::new(&prefix, &period) {
                return xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::spaces::{check_hyperbolicity, gromov_product, test_support};

    fn f2() -> FreeGroupTree {
        FreeGroupTree::new(2).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn ideal(s: &str) -> InfiniteWord {
        InfiniteWord::parse(s, 2).unwrap()
    }

    #[test]
    fn word_metric_examples() {
        let t = f2();
        assert_eq!(t.distance(&w("ab"), &w("abb")), 1.0);
        assert_eq!(gromov_product(&t, &w("ab"), &w("abb"), &w("e")), 2.0);
        assert_eq!(t.apply(&w("ab"), &w("A")), w("abA"));
        assert_eq!(t.compose(&w("ab"), &w("B")), w("a"));
        assert_eq!(t.inverse(&w("e")), w("e"));
        assert_eq!(w("aAb"), w("b"));
        assert_eq!(w("ab").pow(5).len(), 10);
    }

    #[test]
    fn parse_rejects_bad_letters() {
        assert!(Word::parse("ac", 2).is_err());
        assert!(Word::parse("a1", 2).is_err());
        assert!(InfiniteWord::parse("ab", 2).is_err());
        assert!(InfiniteWord::parse("(aA)", 2).is_err());
    }

    #[test]
    fn infinite_words_are_canonical() {
        assert_eq!(ideal("(abab)"), ideal("(ab)"));
        assert_eq!(ideal("a(ba)"), ideal("(ab)"));
        assert_eq!(ideal("b(a)").to_string(), "b(a)");
        assert_eq!(ideal("(Bab)"), ideal("B(a)"));
        assert_eq!(ideal("aaa(a)"), ideal("(a)"));
        assert_eq!(ideal("A(ab)").translate(&w("a")), ideal("(ab)"));
        assert_eq!(ideal("(a)").translate(&w("b")).to_string(), "b(a)");
        assert_eq!(ideal("(A)").translate(&w("aaa")), ideal("(A)"));
    }

    #[test]
    fn boundary_products_match_truncations() {
        let t = f2();
        let e = w("e");
        let pairs = [("(ab)", "(ab)"), ("(a)", "(b)"), ("(ab)", "(abb)"), ("b(a)", "bA(b)"), ("(aab)", "(aaB)")];
        for (x, y) in pairs {
            let (x, y) = (ideal(x), ideal(y));
            let exact = t.extended_product(&Bord::Ideal(x.clone()), &Bord::Ideal(y.clone()), &e);
            // Oracle: finite truncations far past the join point.
            let tx = Word(x.letters().take(60).collect());
            let ty = Word(y.letters().take(60).collect());
            let truncated = gromov_product(&t, &tx, &ty, &e);
            if exact.is_infinite() {
                assert_eq!(truncated, 60.0);
            } else {
                assert_eq!(exact, truncated);
            }
        }
        let expect = |x: &str, y: &str| t.extended_product(&Bord::Ideal(ideal(x)), &Bord::Ideal(ideal(y)), &e);
        assert_eq!(expect("(ab)", "(ab)"), f64::INFINITY);
        assert_eq!(expect("(a)", "(b)"), 0.0);
        assert_eq!(expect("(ab)", "(abb)"), 2.0);
    }

    #[test]
    fn products_at_other_bases_translate() {
        let t = f2();
        let mut rng = stream_rng(11, 0);
        for _ in 0..500 {
            let base = t.random_point(&mut rng);
            let x = Bord::Ideal(t.random_ideal(&mut rng));
            let y = Bord::Point(t.random_point(&mut rng));
            let direct = t.extended_product(&x, &y, &base);
            let Bord::Ideal(xi) = &x else { unreachable!() };
            let Bord::Point(p) = &y else { unreachable!() };
            let tx = Word(xi.letters().take(80).collect());
            assert_eq!(direct, gromov_product(&t, &tx, p, &base));
        }
    }

    #[test]
    fn busemann_examples() {
        let t = f2();
        assert_eq!(t.busemann(&ideal("(a)"), &w("aa")), -2.0);
        assert_eq!(t.busemann(&ideal("(a)"), &w("b")), 1.0);
        assert_eq!(t.busemann(&ideal("(ab)"), &w("e")), 0.0);
    }

    #[test]
    fn fixed_ends_of_conjugates() {
        let t = f2();
        let g = w("bab").mul(&w("ab")).mul(&w("B"));
        for xi in t.fixed_ideals(&g) {
            assert_eq!(t.apply_ideal(&g, &xi), xi);
        }
        assert_eq!(t.fixed_ideals(&w("a")), vec![ideal("(a)"), ideal("(A)")]);
    }

    #[test]
    fn forward_limit_prefix() {
        let t = f2();
        let g = w("ab").pow(4);
        let xi = t.forward_limit(&g, 5).unwrap();
        assert_eq!(xi, ideal("abab(a)"));
        assert!(t.forward_limit(&w("e"), 1).is_err());
    }

    #[test]
    fn tree_is_zero_hyperbolic() {
        let report = check_hyperbolicity(&f2(), 0.0, 20_000, 5);
        assert!(report.holds && report.max_violation <= 0.0);
    }

    #[test]
    fn metric_axioms() {
        test_support::check_metric_and_isometries(&f2(), 10_000, 0.0, 3);
    }
}
