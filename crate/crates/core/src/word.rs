//! Finite words, eventually periodic words and prefix streams over small ordered alphabets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphism::Morphism;
use crate::sadic::DirectiveSpec;

pub const MAX_ALPHABET: usize = 26;

/// Index of a symbol inside its alphabet. Ordering follows the alphabet order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub(crate) u8);

impl Letter {
    pub fn new(index: usize) -> Self {
        assert!(index < MAX_ALPHABET, "letter index out of range");
        Letter(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered set of distinct symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet {
    symbols: Arc<Vec<char>>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        if symbols.len() > MAX_ALPHABET {
            return Err(Error::InvalidAlphabet(format!(
                "at most {MAX_ALPHABET} letters supported, got {}",
                symbols.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &c in &symbols {
            if c.is_whitespace() || c.is_control() || matches!(c, '|' | '(' | ')' | '^') {
                return Err(Error::InvalidAlphabet(format!("symbol {c:?} is reserved")));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol '{c}'")));
            }
        }
        Ok(Alphabet {
            symbols: Arc::new(symbols),
        })
    }

    /// The first `n` lowercase latin letters.
    pub fn latin(n: usize) -> Result<Self> {
        Self::new((b'a'..).take(n).map(char::from))
    }

    /// Parses `"ab"`, `"a b"` or `"a,b"`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.chars().filter(|c| !c.is_whitespace() && *c != ','))
    }

    /// Guesses an alphabet from the symbols occurring in `text`.
    ///
    /// Lowercase ASCII input yields the contiguous range `a..=max`, so that a word
    /// such as `"bbb"` lives over `{a, b}`. Anything else yields the sorted set of
    /// distinct symbols.
    pub fn infer(text: &str) -> Result<Self> {
        let distinct: BTreeSet<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        if distinct.is_empty() {
            return Self::latin(2);
        }
        if distinct.iter().all(|c| c.is_ascii_lowercase()) {
            let max = *distinct.iter().next_back().unwrap();
            let max = max.max('b');
            return Self::new('a'..=max);
        }
        Self::new(distinct)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.len()).map(Letter::new)
    }

    pub fn symbol(&self, letter: Letter) -> char {
        self.symbols[letter.index()]
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn letter(&self, symbol: char) -> Option<Letter> {
        self.symbols.iter().position(|&c| c == symbol).map(Letter::new)
    }

    pub fn require(&self, symbol: char) -> Result<Letter> {
        self.letter(symbol).ok_or_else(|| Error::UnknownLetter {
            letter: symbol,
            alphabet: self.to_string(),
        })
    }

    pub fn contains(&self, letter: Letter) -> bool {
        letter.index() < self.len()
    }

    pub fn word(&self, text: &str) -> Result<Word> {
        Word::parse(self, text)
    }

    pub(crate) fn check_same(&self, other: &Alphabet) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch(self.to_string(), other.to_string()))
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.symbols.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet{self}")
    }
}

/// Result of [`Word::lex_compare`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LexOrder {
    Less,
    Equal,
    Greater,
    /// The left word is a proper prefix of the right one.
    StrictPrefixOf,
    /// The right word is a proper prefix of the left one.
    StrictExtensionOf,
}

/// A finite word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    alphabet: Alphabet,
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(alphabet: &Alphabet, letters: Vec<Letter>) -> Result<Self> {
        if let Some(bad) = letters.iter().find(|l| !alphabet.contains(**l)) {
            return Err(Error::Parse(format!(
                "letter index {} outside alphabet {alphabet}",
                bad.index()
            )));
        }
        Ok(Word {
            alphabet: alphabet.clone(),
            letters,
        })
    }

    pub(crate) fn from_letters(alphabet: &Alphabet, letters: Vec<Letter>) -> Self {
        debug_assert!(letters.iter().all(|l| alphabet.contains(*l)));
        Word {
            alphabet: alphabet.clone(),
            letters,
        }
    }

    pub fn empty(alphabet: &Alphabet) -> Self {
        Self::from_letters(alphabet, Vec::new())
    }

    /// Reads a word; whitespace is ignored.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self> {
        let letters = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| alphabet.require(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(alphabet, letters))
    }

    /// Reads a word, inferring the alphabet from its symbols.
    pub fn parse_inferred(text: &str) -> Result<Self> {
        let alphabet = Alphabet::infer(text)?;
        Self::parse(&alphabet, text)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    pub fn get(&self, i: usize) -> Option<Letter> {
        self.letters.get(i).copied()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Self::from_letters(&self.alphabet, self.letters[..n.min(self.len())].to_vec())
    }

    pub fn slice(&self, start: usize, end: usize) -> Word {
        Self::from_letters(&self.alphabet, self.letters[start..end].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        self.alphabet.check_same(&other.alphabet)?;
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Self::from_letters(&self.alphabet, letters))
    }

    pub fn reversed(&self) -> Word {
        let mut letters = self.letters.clone();
        letters.reverse();
        Self::from_letters(&self.alphabet, letters)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.letters.starts_with(&self.letters)
    }

    pub fn count(&self, letter: Letter) -> usize {
        self.letters.iter().filter(|&&l| l == letter).count()
    }

    /// Occurrence count of every letter of the alphabet, in alphabet order.
    pub fn abelian_vector(&self) -> Vec<usize> {
        let mut counts = vec![0; self.alphabet.len()];
        for l in &self.letters {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Same as [`abelian_vector`](Self::abelian_vector), keyed by symbol.
    pub fn abelian_map(&self) -> BTreeMap<char, usize> {
        self.alphabet
            .letters()
            .zip(self.abelian_vector())
            .map(|(l, n)| (self.alphabet.symbol(l), n))
            .collect()
    }

    /// All distinct factors of length `k`. Empty when `k > |w|`.
    pub fn factor_set(&self, k: usize) -> BTreeSet<Word> {
        if k > self.len() {
            return BTreeSet::new();
        }
        if k == 0 {
            return BTreeSet::from([Self::empty(&self.alphabet)]);
        }
        self.letters
            .windows(k)
            .map(|win| Self::from_letters(&self.alphabet, win.to_vec()))
            .collect()
    }

    pub fn lex_compare(&self, other: &Word) -> Result<LexOrder> {
        self.alphabet.check_same(&other.alphabet)?;
        Ok(lex_order(&self.letters, &other.letters))
    }

    /// Least `p ≥ 1` with `w[i] = w[i + p]` wherever both sides exist.
    /// Returns 0 for the empty word.
    pub fn smallest_period(&self) -> usize {
        smallest_period(&self.letters)
    }
}

pub(crate) fn lex_order(u: &[Letter], v: &[Letter]) -> LexOrder {
    for (a, b) in u.iter().zip(v) {
        match a.cmp(b) {
            Ordering::Less => return LexOrder::Less,
            Ordering::Greater => return LexOrder::Greater,
            Ordering::Equal => {}
        }
    }
    match u.len().cmp(&v.len()) {
        Ordering::Less => LexOrder::StrictPrefixOf,
        Ordering::Equal => LexOrder::Equal,
        Ordering::Greater => LexOrder::StrictExtensionOf,
    }
}

/// KMP failure function: `border[i]` is the longest proper border of `s[..=i]`.
pub(crate) fn borders(s: &[Letter]) -> Vec<usize> {
    let mut border = vec![0; s.len()];
    let mut k = 0;
    for i in 1..s.len() {
        while k > 0 && s[i] != s[k] {
            k = border[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        border[i] = k;
    }
    border
}

pub(crate) fn smallest_period(s: &[Letter]) -> usize {
    match borders(s).last() {
        Some(b) => s.len() - b,
        None => 0,
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by letters first (shortlex would lose the prefix order), then by alphabet.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .cmp(&other.letters)
            .then_with(|| self.alphabet.cmp(&other.alphabet))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "ε");
        }
        for &l in &self.letters {
            write!(f, "{}", self.alphabet.symbol(l))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

/// Renders letters without the ε placeholder.
pub(crate) fn render(alphabet: &Alphabet, letters: &[Letter]) -> String {
    letters.iter().map(|&l| alphabet.symbol(l)).collect()
}

/// The infinite word `preperiod · period^ω`.
#[derive(Clone, Debug)]
pub struct EventuallyPeriodicWord {
    preperiod: Word,
    period: Word,
}

impl EventuallyPeriodicWord {
    pub fn new(preperiod: Word, period: Word) -> Result<Self> {
        preperiod.alphabet.check_same(&period.alphabet)?;
        if period.is_empty() {
            return Err(Error::Precondition("period must be nonempty".into()));
        }
        Ok(EventuallyPeriodicWord { preperiod, period })
    }

    pub fn periodic(period: Word) -> Result<Self> {
        let pre = Word::empty(period.alphabet());
        Self::new(pre, period)
    }

    /// Reads `pre | period`; a text without `|` is taken as a purely periodic word.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self> {
        let (pre, period) = match text.split_once('|') {
            Some((p, q)) => (p, q),
            None => ("", text),
        };
        Self::new(Word::parse(alphabet, pre)?, Word::parse(alphabet, period)?)
    }

    pub fn parse_inferred(text: &str) -> Result<Self> {
        let alphabet = Alphabet::infer(&text.replace('|', ""))?;
        Self::parse(&alphabet, text)
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.period.alphabet()
    }

    pub fn preperiod(&self) -> &Word {
        &self.preperiod
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    pub fn letter_at(&self, i: usize) -> Letter {
        let p = self.preperiod.len();
        if i < p {
            self.preperiod.letters[i]
        } else {
            self.period.letters[(i - p) % self.period.len()]
        }
    }

    /// The first `n` letters.
    pub fn expand(&self, n: usize) -> Word {
        let letters = (0..n).map(|i| self.letter_at(i)).collect();
        Word::from_letters(self.alphabet(), letters)
    }

    /// Primitive period and shortest preperiod describing the same infinite word.
    pub fn normalized(&self) -> Self {
        let period = &self.period.letters;
        let p = smallest_period(period);
        let mut period: Vec<Letter> = if period.len() % p == 0 {
            period[..p].to_vec()
        } else {
            period.clone()
        };
        let mut pre = self.preperiod.letters.clone();
        while let (Some(&x), Some(&y)) = (pre.last(), period.last()) {
            if x != y {
                break;
            }
            pre.pop();
            period.rotate_right(1);
        }
        EventuallyPeriodicWord {
            preperiod: Word::from_letters(self.alphabet(), pre),
            period: Word::from_letters(self.alphabet(), period),
        }
    }
}

impl PartialEq for EventuallyPeriodicWord {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.normalized(), other.normalized());
        a.preperiod == b.preperiod && a.period == b.period
    }
}

impl Eq for EventuallyPeriodicWord {}

impl fmt::Display for EventuallyPeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let period = render(self.alphabet(), &self.period.letters);
        if self.preperiod.letters.is_empty() {
            write!(f, "| {period}")
        } else {
            write!(f, "{} | {period}", render(self.alphabet(), &self.preperiod.letters))
        }
    }
}

/// Where the letters of a [`PrefixStream`] come from.
#[derive(Clone, Debug)]
pub enum StreamSource {
    /// Limit word of a directive sequence along the chosen seed chain.
    Directive {
        spec: DirectiveSpec,
        seed: Option<Letter>,
    },
    /// `lim f^(k·power)(seed)`; the seed must be expanding for `f^power`.
    FixedPoint {
        morphism: Morphism,
        seed: Letter,
        power: usize,
    },
    Periodic(EventuallyPeriodicWord),
}

/// Lazily materialised right-infinite word.
#[derive(Debug)]
pub struct PrefixStream {
    source: StreamSource,
    buffer: Vec<Letter>,
    cursor: usize,
}

impl PrefixStream {
    pub fn new(source: StreamSource) -> Self {
        PrefixStream {
            source,
            buffer: Vec::new(),
            cursor: 0,
        }
    }

    pub fn source(&self) -> &StreamSource {
        &self.source
    }

    pub fn alphabet(&self) -> &Alphabet {
        match &self.source {
            StreamSource::Directive { spec, .. } => spec.alphabet(),
            StreamSource::FixedPoint { morphism, .. } => morphism.alphabet(),
            StreamSource::Periodic(w) => w.alphabet(),
        }
    }

    pub fn position(&self) -> usize {
        self.cursor
    }

    /// The first `n` letters. Does not move the cursor.
    pub fn prefix(&mut self, n: usize) -> Result<Word> {
        self.fill(n)?;
        Ok(Word::from_letters(
            &self.alphabet().clone(),
            self.buffer[..n].to_vec(),
        ))
    }

    fn fill(&mut self, n: usize) -> Result<()> {
        if self.buffer.len() >= n {
            return Ok(());
        }
        let target = n.max(2 * self.buffer.len()).max(64);
        let word = match &self.source {
            StreamSource::Directive { spec, seed } => {
                crate::sadic::generate_prefix(spec, target, *seed)?
            }
            StreamSource::FixedPoint {
                morphism,
                seed,
                power,
            } => morphism.power(*power).fixed_point_prefix(*seed, target)?,
            StreamSource::Periodic(w) => w.expand(target),
        };
        debug_assert!(word.letters.starts_with(&self.buffer));
        self.buffer = word.letters;
        Ok(())
    }
}

impl Clone for PrefixStream {
    fn clone(&self) -> Self {
        PrefixStream {
            source: self.source.clone(),
            buffer: self.buffer.clone(),
            cursor: 0,
        }
    }
}

impl Iterator for PrefixStream {
    type Item = Letter;

    fn next(&mut self) -> Option<Letter> {
        self.fill(self.cursor + 1).ok()?;
        let l = self.buffer[self.cursor];
        self.cursor += 1;
        Some(l)
    }
}
