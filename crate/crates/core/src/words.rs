//! Reduced words in a free group of finite rank, the canonical enumeration of
//! group elements and finitely supported step distributions.
//!
//! Generators are written `a`, `b`, `c`, ... and inverses carry a `^-1`
//! suffix, so `a b^-1 a` is the element a·b⁻¹·a. The identity is `e`.
//!
//! Enumeration is length-lexicographic with letter order
//! `a < a^-1 < b < b^-1 < ...`. Truncated statistics depend on this order,
//! so it is part of the external contract.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported rank (one lowercase letter per generator, `e` excluded).
pub const MAX_RANK: usize = 25;

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: u8,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(generator: u8, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub const fn inv(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// Position in the alphabet order `a, a^-1, b, b^-1, ...`.
    pub const fn code(self) -> usize {
        2 * self.generator as usize + self.inverse as usize
    }

    pub fn from_code(code: usize) -> Self {
        Letter {
            generator: (code / 2) as u8,
            inverse: code % 2 == 1,
        }
    }

    fn symbol(self) -> char {
        // skip 'e', which denotes the identity
        let g = self.generator;
        let c = if g < 4 { b'a' + g } else { b'a' + g + 1 };
        c as char
    }

    fn from_symbol(c: char) -> Option<u8> {
        if !c.is_ascii_lowercase() || c == 'e' {
            return None;
        }
        let v = c as u8 - b'a';
        Some(if v < 4 { v } else { v - 1 })
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code().cmp(&other.code())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.symbol())
        } else {
            write!(f, "{}", self.symbol())
        }
    }
}

/// A reduced word over `rank` free generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupWord {
    rank: usize,
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn identity(rank: usize) -> Self {
        GroupWord {
            rank,
            letters: Vec::new(),
        }
    }

    /// Freely reduces `letters`. Fails if a generator index is out of range.
    pub fn reduce(rank: usize, letters: impl IntoIterator<Item = Letter>) -> Result<Self> {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if l.generator as usize >= rank {
                return Err(Error::Malformed(format!(
                    "generator index {} out of range for rank {rank}",
                    l.generator
                )));
            }
            push_reduced(&mut out, l);
        }
        Ok(GroupWord { rank, letters: out })
    }

    /// Single generator (`inverse = false`) or its inverse.
    pub fn generator(rank: usize, generator: u8, inverse: bool) -> Result<Self> {
        Self::reduce(rank, [Letter::new(generator, inverse)])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
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

    pub fn multiply(&self, other: &GroupWord) -> Result<GroupWord> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        let mut out = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut out, l);
        }
        Ok(GroupWord {
            rank: self.rank,
            letters: out,
        })
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    /// Parses the textual form (`"e"`, `"a b^-1"`, `"ab^-1a"`).
    pub fn parse(rank: usize, s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed == "e" || trimmed.is_empty() {
            return Ok(GroupWord::identity(rank));
        }
        let mut letters = Vec::new();
        let mut chars = trimmed.chars().peekable();
        while let Some(c) = chars.next() {
            if c.is_whitespace() {
                continue;
            }
            let g = Letter::from_symbol(c)
                .ok_or_else(|| Error::Malformed(format!("bad letter `{c}` in word `{s}`")))?;
            let mut inverse = false;
            if chars.peek() == Some(&'^') {
                chars.next();
                let minus = chars.next();
                let one = chars.next();
                if minus != Some('-') || one != Some('1') {
                    return Err(Error::Malformed(format!("bad exponent in word `{s}`")));
                }
                inverse = true;
            }
            letters.push(Letter::new(g, inverse));
        }
        Self::reduce(rank, letters)
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&l.inv()) {
        out.pop();
    } else {
        out.push(l);
    }
}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Length-lexicographic order, identical to the enumeration order.
impl Ord for GroupWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Iterator over all reduced words in enumeration order.
pub struct WordEnumerator {
    rank: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for WordEnumerator {
    type Item = GroupWord;

    fn next(&mut self) -> Option<GroupWord> {
        let codes = self.current.take()?;
        let word = GroupWord {
            rank: self.rank,
            letters: codes.iter().map(|&c| Letter::from_code(c)).collect(),
        };
        self.current = Some(successor(self.rank, codes));
        Some(word)
    }
}

fn is_reduced_pair(prev: usize, next: usize) -> bool {
    prev / 2 != next / 2 || prev == next
}

fn smallest_reduced(rank: usize, len: usize) -> Vec<usize> {
    let _ = rank;
    // a a a ... is always reduced
    vec![0; len]
}

/// Next reduced word in length-lex order.
fn successor(rank: usize, mut codes: Vec<usize>) -> Vec<usize> {
    let alphabet = 2 * rank;
    let len = codes.len();
    let mut pos = len;
    while pos > 0 {
        pos -= 1;
        let mut c = codes[pos] + 1;
        while c < alphabet && pos > 0 && !is_reduced_pair(codes[pos - 1], c) {
            c += 1;
        }
        if c < alphabet {
            codes[pos] = c;
            for q in pos + 1..len {
                let mut d = 0;
                while !is_reduced_pair(codes[q - 1], d) {
                    d += 1;
                }
                codes[q] = d;
            }
            return codes;
        }
    }
    smallest_reduced(rank, len + 1)
}

/// All reduced words in enumeration order, starting with the identity.
pub fn word_iter(rank: usize) -> WordEnumerator {
    WordEnumerator {
        rank,
        current: Some(Vec::new()),
    }
}

/// The first `count` group elements g₁, g₂, ... of the canonical enumeration.
pub fn enumerate_words(rank: usize, count: usize) -> Vec<GroupWord> {
    word_iter(rank).take(count).collect()
}

/// All reduced words of exactly `len` letters, in enumeration order.
pub fn words_of_length(rank: usize, len: usize) -> Vec<GroupWord> {
    if rank == 0 {
        return if len == 0 {
            vec![GroupWord::identity(0)]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    let mut codes = smallest_reduced(rank, len);
    while codes.len() == len {
        out.push(GroupWord {
            rank,
            letters: codes.iter().map(|&c| Letter::from_code(c)).collect(),
        });
        if len == 0 {
            break;
        }
        codes = successor(rank, codes);
    }
    out
}

/// The step distribution m: a finitely supported probability measure on G.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    rank: usize,
    entries: Vec<(GroupWord, f64)>,
}

pub const PROB_SUM_TOL: f64 = 1e-12;

impl StepDistribution {
    pub fn new(rank: usize, entries: Vec<(GroupWord, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Malformed("empty step distribution".into()));
        }
        let mut sum = 0.0;
        for (w, p) in &entries {
            if w.rank() != rank {
                return Err(Error::RankMismatch {
                    left: rank,
                    right: w.rank(),
                });
            }
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::Malformed(format!(
                    "probability {p} of `{w}` not in (0,1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Malformed(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        let mut sorted = entries;
        sorted.sort_by(|x, y| x.0.cmp(&y.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Malformed(
                "repeated word in step distribution".into(),
            ));
        }
        Ok(StepDistribution {
            rank,
            entries: sorted,
        })
    }

    /// Uniform measure on the generators and their inverses.
    pub fn uniform_nearest_neighbor(rank: usize) -> Result<Self> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Malformed(format!("rank {rank} unsupported")));
        }
        let p = 1.0 / (2 * rank) as f64;
        let entries = (0..2 * rank)
            .map(|c| {
                (
                    GroupWord {
                        rank,
                        letters: vec![Letter::from_code(c)],
                    },
                    p,
                )
            })
            .collect();
        Self::new(rank, entries)
    }

    /// Nearest-neighbor measure with `probs[code]` on each letter
    /// (`a, a^-1, b, b^-1, ...`). Zero entries are left out of the support.
    pub fn nearest_neighbor(rank: usize, probs: &[f64]) -> Result<Self> {
        if probs.len() != 2 * rank {
            return Err(Error::Malformed(format!(
                "expected {} letter probabilities, got {}",
                2 * rank,
                probs.len()
            )));
        }
        let entries = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(c, &p)| {
                (
                    GroupWord {
                        rank,
                        letters: vec![Letter::from_code(c)],
                    },
                    p,
                )
            })
            .collect();
        Self::new(rank, entries)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Support words with their probabilities, in enumeration order.
    pub fn entries(&self) -> &[(GroupWord, f64)] {
        &self.entries
    }

    pub fn prob(&self, w: &GroupWord) -> f64 {
        self.entries
            .iter()
            .find(|(x, _)| x == w)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupWord> {
        self.entries.iter().map(|(w, _)| w)
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.entries.iter().all(|(w, _)| w.len() == 1)
    }

    /// Probability of each letter code, zero off the support.
    pub fn letter_probs(&self) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.rank];
        for (w, p) in &self.entries {
            if w.len() == 1 {
                out[w.letters()[0].code()] = *p;
            }
        }
        out
    }

    /// Numerically equal as measures (same support, probabilities within 1e-12).
    pub fn same_as(&self, other: &StepDistribution) -> bool {
        self.rank == other.rank
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((w1, p1), (w2, p2))| w1 == w2 && (p1 - p2).abs() <= PROB_SUM_TOL)
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let w = GroupWord::parse(MAX_RANK, s)?;
        match w.letters() {
            [l] => Ok(*l),
            _ => Err(Error::Malformed(format!("`{s}` is not a single letter"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> GroupWord {
        GroupWord::parse(2, s).unwrap()
    }

    fn a() -> Letter {
        Letter::new(0, false)
    }
    fn b() -> Letter {
        Letter::new(1, false)
    }

    #[test]
    fn reduce_examples() {
        let r = GroupWord::reduce(2, [a(), a().inv()]).unwrap();
        assert!(r.is_identity());
        let r = GroupWord::reduce(2, [a(), b(), b().inv(), a()]).unwrap();
        assert_eq!(r, w("a a"));
        let r = GroupWord::reduce(2, [b()]).unwrap();
        assert_eq!(r.to_string(), "b");
    }

    #[test]
    fn reduce_rejects_out_of_range() {
        let err = GroupWord::reduce(2, [Letter::new(2, false)]).unwrap_err();
        assert!(matches!(err, Error::Malformed(_)));
    }

    #[test]
    fn multiply_examples() {
        assert!(w("a").multiply(&w("a^-1")).unwrap().is_identity());
        assert_eq!(w("a b").multiply(&w("b^-1 a")).unwrap(), w("a a"));
        assert_eq!(w("e").multiply(&w("b")).unwrap(), w("b"));
        let other = GroupWord::parse(3, "c").unwrap();
        assert!(matches!(
            w("a").multiply(&other),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(w("a b").inverse(), w("b^-1 a^-1"));
        assert!(w("e").inverse().is_identity());
        assert_eq!(w("a").inverse(), w("a^-1"));
    }

    #[test]
    fn enumeration_examples() {
        let names = |v: Vec<GroupWord>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            names(enumerate_words(2, 5)),
            ["e", "a", "a^-1", "b", "b^-1"]
        );
        assert_eq!(names(enumerate_words(1, 3)), ["e", "a", "a^-1"]);
        assert_eq!(
            names(enumerate_words(2, 6)),
            ["e", "a", "a^-1", "b", "b^-1", "a a"]
        );
    }

    #[test]
    fn enumeration_counts_and_order() {
        // 1 + 4 + 12 + 36 words of length ≤ 3 in F₂
        let words = enumerate_words(2, 53);
        assert_eq!(words.iter().filter(|x| x.len() == 3).count(), 36);
        assert!(words.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(words_of_length(2, 2).len(), 12);
        assert_eq!(words_of_length(3, 2).len(), 30);
        assert_eq!(words_of_length(2, 0).len(), 1);
        // rank 1: e, a, a^-1, a a, a^-1 a^-1, ...
        let r1: Vec<String> = enumerate_words(1, 5)
            .iter()
            .map(|x| x.to_string())
            .collect();
        assert_eq!(r1, ["e", "a", "a^-1", "a a", "a^-1 a^-1"]);
    }

    #[test]
    fn display_and_parse() {
        let x = w("ab^-1a");
        assert_eq!(x.to_string(), "a b^-1 a");
        assert_eq!(GroupWord::parse(2, &x.to_string()).unwrap(), x);
        assert!(GroupWord::parse(2, "a^2").is_err());
        assert!(GroupWord::parse(2, "c").is_err());
        // letters skip `e`
        let g = GroupWord::parse(6, "f").unwrap();
        assert_eq!(g.letters()[0].generator, 4);
        assert_eq!(g.to_string(), "f");
    }

    #[test]
    fn step_distribution_checks() {
        let m = StepDistribution::uniform_nearest_neighbor(2).unwrap();
        assert_eq!(m.entries().len(), 4);
        assert!((m.prob(&w("b^-1")) - 0.25).abs() < 1e-15);
        assert!(StepDistribution::new(2, vec![(w("a"), 0.5)]).is_err());
        assert!(StepDistribution::new(2, vec![(w("a"), 0.5), (w("a"), 0.5)]).is_err());
        assert!(StepDistribution::new(2, vec![(w("a"), 1.5), (w("b"), -0.5)]).is_err());
    }

    fn arb_letters(rank: u8, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((0..rank, any::<bool>()), 0..=max_len)
            .prop_map(|v| v.into_iter().map(|(g, i)| Letter::new(g, i)).collect())
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(letters in arb_letters(3, 30)) {
            let once = GroupWord::reduce(3, letters).unwrap();
            let twice = GroupWord::reduce(3, once.letters().iter().copied()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn inverse_cancels(letters in arb_letters(3, 20)) {
            let u = GroupWord::reduce(3, letters).unwrap();
            prop_assert!(u.multiply(&u.inverse()).unwrap().is_identity());
            prop_assert!(u.inverse().multiply(&u).unwrap().is_identity());
        }

        #[test]
        fn multiply_is_associative(x in arb_letters(2, 10), y in arb_letters(2, 10), z in arb_letters(2, 10)) {
            let (x, y, z) = (
                GroupWord::reduce(2, x).unwrap(),
                GroupWord::reduce(2, y).unwrap(),
                GroupWord::reduce(2, z).unwrap(),
            );
            let left = x.multiply(&y).unwrap().multiply(&z).unwrap();
            let right = x.multiply(&y.multiply(&z).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn enumeration_is_prefix_stable(rank in 1usize..4, k in 1usize..80) {
            let short = enumerate_words(rank, k);
            let long = enumerate_words(rank, k + 1);
            prop_assert_eq!(&short[..], &long[..k]);
        }
    }
}
