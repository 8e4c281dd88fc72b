//! Words in a free group, finite presentations and Fox derivatives.
//!
//! Generators are indexed from 0 internally. On the wire (scenario JSON) a
//! word is an array of signed 1-based integers: `[1, -2]` is `g1 g2^-1`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A generator or its inverse.
///
/// Ordering is by generator, then `a < a^-1`, which gives the canonical
/// length-lexicographic order on words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverted: bool,
}

impl Letter {
    pub fn new(generator: usize) -> Self {
        Letter { generator, inverted: false }
    }

    pub fn inv(generator: usize) -> Self {
        Letter { generator, inverted: true }
    }

    pub fn inverse(self) -> Self {
        Letter { inverted: !self.inverted, ..self }
    }

    pub fn sign(self) -> i32 {
        if self.inverted {
            -1
        } else {
            1
        }
    }

    pub fn to_signed(self) -> i64 {
        self.sign() as i64 * (self.generator as i64 + 1)
    }

    pub fn from_signed(code: i64) -> Result<Self> {
        match code {
            0 => Err(Error::InvalidInput("letter code 0 is not a generator".into())),
            c if c > 0 => Ok(Letter::new((c - 1) as usize)),
            c => Ok(Letter::inv((-c - 1) as usize)),
        }
    }
}

/// A word in the generators. Not necessarily reduced; see [`Word::reduced`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn from_signed(codes: &[i64]) -> Result<Self> {
        codes.iter().map(|&c| Letter::from_signed(c)).collect::<Result<Vec<_>>>().map(Word)
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.0.iter().map(|l| l.to_signed()).collect()
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

    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|l| l.generator).max()
    }

    /// Free reduction: cancel adjacent `x x^-1` pairs until none remain.
    pub fn reduced(&self) -> Word {
        free_reduce(self)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inverse())
    }

    pub fn inverse(&self) -> Word {
        word_inverse(self)
    }

    /// Exponent sum of each generator (the image in the abelianization).
    pub fn exponent_sums(&self, num_generators: usize) -> Vec<i64> {
        let mut sums = vec![0i64; num_generators];
        for l in &self.0 {
            if l.generator < num_generators {
                sums[l.generator] += l.sign() as i64;
            }
        }
        sums
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "g{}", l.generator + 1)?;
            if l.inverted {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_signed().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let codes = Vec::<i64>::deserialize(d)?;
        Word::from_signed(&codes).map_err(serde::de::Error::custom)
    }
}

pub fn free_reduce(w: &Word) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in w.letters() {
        match out.last() {
            Some(&top) if top == l.inverse() => {
                out.pop();
            }
            _ => out.push(l),
        }
    }
    Word(out)
}

pub fn word_mul(u: &Word, v: &Word) -> Word {
    let mut letters = u.0.clone();
    letters.extend_from_slice(&v.0);
    free_reduce(&Word(letters))
}

pub fn word_inverse(u: &Word) -> Word {
    Word(u.0.iter().rev().map(|l| l.inverse()).collect())
}

/// All reduced words of length at most `n` over `k` generators, in canonical
/// (length, then lexicographic) order.
pub fn enumerate_ball(k: usize, n: usize) -> Vec<Word> {
    assert!(k >= 1, "enumerate_ball needs at least one generator");
    let alphabet: Vec<Letter> = (0..k).flat_map(|g| [Letter::new(g), Letter::inv(g)]).collect();
    let mut all = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(frontier.len() * (2 * k - 1).max(1));
        for w in &frontier {
            let last = w.0.last().copied();
            for &l in &alphabet {
                if last == Some(l.inverse()) {
                    continue;
                }
                let mut letters = w.0.clone();
                letters.push(l);
                next.push(Word(letters));
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Size of the radius-`n` ball in the free group of rank `k`.
pub fn ball_size(k: usize, n: usize) -> usize {
    let mut total = 1usize;
    let mut sphere = 2 * k;
    for _ in 0..n {
        total += sphere;
        sphere *= 2 * k - 1;
    }
    total
}

/// A finitely presented group `<S | R>` with `|S| = num_generators`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PresentationWire", into = "PresentationWire")]
pub struct Presentation {
    num_generators: usize,
    relators: Vec<Word>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresentationWire {
    generators: usize,
    #[serde(default)]
    relators: Vec<Word>,
}

impl TryFrom<PresentationWire> for Presentation {
    type Error = Error;
    fn try_from(w: PresentationWire) -> Result<Self> {
        Presentation::new(w.generators, w.relators)
    }
}

impl From<Presentation> for PresentationWire {
    fn from(p: Presentation) -> Self {
        PresentationWire { generators: p.num_generators, relators: p.relators }
    }
}

impl Presentation {
    /// Builds a presentation, freely reducing every relator.
    pub fn new(num_generators: usize, relators: Vec<Word>) -> Result<Self> {
        if num_generators == 0 {
            return Err(Error::InvalidInput("a presentation needs at least one generator".into()));
        }
        for w in &relators {
            if let Some(g) = w.max_generator() {
                if g >= num_generators {
                    return Err(Error::GeneratorOutOfRange { index: g, count: num_generators });
                }
            }
        }
        let relators = relators.iter().map(free_reduce).collect();
        Ok(Presentation { num_generators, relators })
    }

    pub fn from_signed(num_generators: usize, relators: &[&[i64]]) -> Result<Self> {
        let words = relators.iter().map(|r| Word::from_signed(r)).collect::<Result<Vec<_>>>()?;
        Presentation::new(num_generators, words)
    }

    pub fn free(num_generators: usize) -> Self {
        Presentation { num_generators, relators: Vec::new() }
    }

    /// `Z/n = <a | a^n>`.
    pub fn cyclic(n: usize) -> Self {
        Presentation::new(1, vec![Word(vec![Letter::new(0); n])]).expect("valid")
    }

    /// `Z^2 = <a, b | a b a^-1 b^-1>`.
    pub fn z2() -> Self {
        Presentation::from_signed(2, &[&[1, 2, -1, -2]]).expect("valid")
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn num_relators(&self) -> usize {
        self.relators.len()
    }
}

/// One term `sign · ρ(prefix)` of the Fox derivative of a relator with
/// respect to `generator`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoxTerm {
    pub sign: i32,
    pub prefix: Word,
    pub generator: usize,
}

/// Fox derivative terms of `w`, one per letter.
///
/// A positive letter `g` at position `p` contributes `+prefix(p)`; an inverse
/// letter `g^-1` contributes `-prefix(p)·g^-1`, from `∂(g^-1) = -g^-1 ∂g`.
pub fn fox_prefixes(w: &Word) -> Vec<FoxTerm> {
    let letters = w.letters();
    letters
        .iter()
        .enumerate()
        .map(|(p, &l)| {
            if l.inverted {
                FoxTerm { sign: -1, prefix: Word(letters[..=p].to_vec()), generator: l.generator }
            } else {
                FoxTerm { sign: 1, prefix: Word(letters[..p].to_vec()), generator: l.generator }
            }
        })
        .collect()
}
