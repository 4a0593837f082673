//! Nonerasing endomorphisms, the L/R/E/P generators and decomposition into them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{render, Alphabet, Letter, Word};

/// A nonerasing endomorphism of the free monoid over its alphabet.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Morphism {
    alphabet: Alphabet,
    images: Vec<Vec<Letter>>,
}

impl Morphism {
    pub fn new(alphabet: &Alphabet, images: Vec<Word>) -> Result<Self> {
        if images.len() != alphabet.len() {
            return Err(Error::Parse(format!(
                "expected {} images, got {}",
                alphabet.len(),
                images.len()
            )));
        }
        let mut out = Vec::with_capacity(images.len());
        for (l, img) in alphabet.letters().zip(images) {
            alphabet.check_same(img.alphabet())?;
            if img.is_empty() {
                return Err(Error::Erasing(alphabet.symbol(l)));
            }
            out.push(img.into_letters());
        }
        Ok(Morphism {
            alphabet: alphabet.clone(),
            images: out,
        })
    }

    /// Builds a morphism from image strings listed in alphabet order.
    pub fn from_images(alphabet: &Alphabet, images: &[&str]) -> Result<Self> {
        let words = images
            .iter()
            .map(|s| Word::parse(alphabet, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, words)
    }

    pub(crate) fn from_raw(alphabet: &Alphabet, images: Vec<Vec<Letter>>) -> Self {
        debug_assert!(images.len() == alphabet.len() && images.iter().all(|i| !i.is_empty()));
        Morphism {
            alphabet: alphabet.clone(),
            images,
        }
    }

    pub fn identity(alphabet: &Alphabet) -> Self {
        Self::from_raw(alphabet, alphabet.letters().map(|l| vec![l]).collect())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn image(&self, letter: Letter) -> Word {
        Word::from_letters(&self.alphabet, self.images[letter.index()].clone())
    }

    pub fn image_letters(&self, letter: Letter) -> &[Letter] {
        &self.images[letter.index()]
    }

    pub fn images(&self) -> &[Vec<Letter>] {
        &self.images
    }

    pub fn apply(&self, w: &Word) -> Result<Word> {
        self.alphabet.check_same(w.alphabet())?;
        Ok(Word::from_letters(&self.alphabet, self.apply_letters(w.letters())))
    }

    pub fn apply_letters(&self, w: &[Letter]) -> Vec<Letter> {
        let mut out = Vec::new();
        for &l in w {
            out.extend_from_slice(&self.images[l.index()]);
        }
        out
    }

    /// `apply_letters` cut after `limit` letters.
    pub fn apply_truncated(&self, w: &[Letter], limit: usize) -> Vec<Letter> {
        let mut out = Vec::new();
        for &l in w {
            if out.len() >= limit {
                break;
            }
            out.extend_from_slice(&self.images[l.index()]);
        }
        out.truncate(limit);
        out
    }

    /// `self ∘ g`, i.e. `x ↦ self(g(x))`.
    pub fn compose(&self, g: &Morphism) -> Result<Morphism> {
        self.alphabet.check_same(&g.alphabet)?;
        Ok(Self::from_raw(
            &self.alphabet,
            g.images.iter().map(|img| self.apply_letters(img)).collect(),
        ))
    }

    pub fn power(&self, n: usize) -> Morphism {
        let mut result = Self::identity(&self.alphabet);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.compose(&base).expect("same alphabet");
            }
            n >>= 1;
            if n > 0 {
                base = base.compose(&base).expect("same alphabet");
            }
        }
        result
    }

    /// Prefix of length `n` of `lim f^k(seed)`.
    ///
    /// Requires `f(seed)` to start with `seed` and to be longer than one letter.
    pub fn fixed_point_prefix(&self, seed: Letter, n: usize) -> Result<Word> {
        let img = &self.images[seed.index()];
        if img[0] != seed || img.len() < 2 {
            return Err(Error::NoLimit(format!(
                "'{}' is not an expanding seed: its image is {}",
                self.alphabet.symbol(seed),
                render(&self.alphabet, img)
            )));
        }
        let images = truncated_images(self, n.max(2));
        let mut prefix = truncated_fixed_point(&images, seed, n.max(2));
        prefix.truncate(n);
        Ok(Word::from_letters(&self.alphabet, prefix))
    }

    pub fn first_letter_map(&self) -> Vec<Letter> {
        self.images.iter().map(|img| img[0]).collect()
    }

    pub fn norm(&self) -> usize {
        self.images.iter().map(Vec::len).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.alphabet
            .letters()
            .all(|l| self.images[l.index()] == [l])
    }

    pub fn is_permutation(&self) -> bool {
        if self.images.iter().any(|img| img.len() != 1) {
            return false;
        }
        let mut seen = vec![false; self.alphabet.len()];
        for img in &self.images {
            seen[img[0].index()] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// The letter `a` when every image lies in `a⁺`.
    pub fn is_p_class(&self) -> Option<Letter> {
        let a = self.images[0][0];
        self.images
            .iter()
            .all(|img| img.iter().all(|&l| l == a))
            .then_some(a)
    }

    /// Finds `(α, g)` with `self = L_α ∘ g`.
    pub fn peel_left(&self) -> Option<(Letter, Morphism)> {
        let alpha = self.images[0][0];
        let mut images = Vec::with_capacity(self.images.len());
        for img in &self.images {
            // {α} ∪ {αβ} is a suffix code: decode right to left.
            let mut out = Vec::new();
            let mut i = img.len();
            while i > 0 {
                let c = img[i - 1];
                if c == alpha {
                    i -= 1;
                } else if i >= 2 && img[i - 2] == alpha {
                    i -= 2;
                } else {
                    return None;
                }
                out.push(c);
            }
            out.reverse();
            images.push(out);
        }
        Some((alpha, Self::from_raw(&self.alphabet, images)))
    }

    /// Finds `(α, g)` with `self = R_α ∘ g`.
    pub fn peel_right(&self) -> Option<(Letter, Morphism)> {
        let alpha = *self.images[0].last().unwrap();
        let mut images = Vec::with_capacity(self.images.len());
        for img in &self.images {
            // {α} ∪ {βα} is a prefix code: decode left to right.
            let mut out = Vec::new();
            let mut i = 0;
            while i < img.len() {
                let c = img[i];
                if c == alpha {
                    i += 1;
                } else if i + 1 < img.len() && img[i + 1] == alpha {
                    i += 2;
                } else {
                    return None;
                }
                out.push(c);
            }
            images.push(out);
        }
        Some((alpha, Self::from_raw(&self.alphabet, images)))
    }

    /// Text form on one line, e.g. `a->ab, b->a`.
    pub fn compact(&self) -> String {
        self.alphabet
            .letters()
            .map(|l| {
                format!(
                    "{}->{}",
                    self.alphabet.symbol(l),
                    render(&self.alphabet, &self.images[l.index()])
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Reads the morphism file format:
    ///
    /// ```text
    /// alphabet: a b
    /// a -> ab
    /// b -> a
    /// ```
    ///
    /// Without an `alphabet:` line the alphabet is inferred from the symbols used.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut alphabet = None;
        let mut rules: Vec<(char, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("alphabet:") {
                alphabet = Some(Alphabet::parse(rest)?);
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("line {}: expected `x -> image`", n + 1)))?;
            let mut lhs = lhs.trim().chars();
            let (Some(x), None) = (lhs.next(), lhs.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: left side must be a single letter",
                    n + 1
                )));
            };
            rules.push((x, rhs.split_whitespace().collect()));
        }
        let alphabet = match alphabet {
            Some(a) => a,
            None => {
                let all: String = rules
                    .iter()
                    .flat_map(|(x, img)| std::iter::once(*x).chain(img.chars()))
                    .collect();
                Alphabet::infer(&all)?
            }
        };
        let mut images: Vec<Option<Word>> = vec![None; alphabet.len()];
        for (x, img) in rules {
            let l = alphabet.require(x)?;
            if images[l.index()].is_some() {
                return Err(Error::Parse(format!("letter '{x}' has two images")));
            }
            images[l.index()] = Some(Word::parse(&alphabet, &img)?);
        }
        let images = alphabet
            .letters()
            .zip(images)
            .map(|(l, img)| {
                img.ok_or_else(|| {
                    Error::Parse(format!("no image given for '{}'", alphabet.symbol(l)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&alphabet, images)
    }
}

impl FromStr for Morphism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Writes the morphism file format.
impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbols: Vec<String> = self.alphabet.symbols().iter().map(char::to_string).collect();
        writeln!(f, "alphabet: {}", symbols.join(" "))?;
        for l in self.alphabet.letters() {
            writeln!(
                f,
                "{} -> {}",
                self.alphabet.symbol(l),
                render(&self.alphabet, &self.images[l.index()])
            )?;
        }
        Ok(())
    }
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Morphism[{}]", self.compact())
    }
}

#[derive(Serialize, Deserialize)]
struct MorphismRepr {
    alphabet: String,
    images: BTreeMap<char, String>,
}

impl Serialize for Morphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MorphismRepr {
            alphabet: self.alphabet.symbols().iter().collect(),
            images: self
                .alphabet
                .letters()
                .map(|l| {
                    (
                        self.alphabet.symbol(l),
                        render(&self.alphabet, &self.images[l.index()]),
                    )
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Morphism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = MorphismRepr::deserialize(d)?;
        let alphabet = Alphabet::parse(&repr.alphabet).map_err(D::Error::custom)?;
        let images: Vec<&str> = alphabet
            .symbols()
            .iter()
            .map(|c| repr.images.get(c).map(String::as_str).unwrap_or(""))
            .collect();
        Morphism::from_images(&alphabet, &images).map_err(D::Error::custom)
    }
}

/// Images cut to `limit` letters. Since morphisms are nonerasing, composing
/// cut images and cutting again gives the cut of the true composition.
pub(crate) fn truncated_images(m: &Morphism, limit: usize) -> Vec<Vec<Letter>> {
    m.images
        .iter()
        .map(|img| img[..img.len().min(limit)].to_vec())
        .collect()
}

/// Prefix of length `limit` of the fixed point of `h` grown from `seed`, by
/// repeated squaring of cut images. `h(seed)` must start with `seed` and have
/// at least two letters; `limit` must be at least 2.
pub(crate) fn truncated_fixed_point(h: &[Vec<Letter>], seed: Letter, limit: usize) -> Vec<Letter> {
    debug_assert!(h[seed.index()][0] == seed && h[seed.index()].len() > 1);
    let mut images = h.to_vec();
    while images[seed.index()].len() < limit {
        images = images
            .iter()
            .map(|img| {
                let mut out = Vec::new();
                for &l in img {
                    if out.len() >= limit {
                        break;
                    }
                    out.extend_from_slice(&images[l.index()]);
                }
                out.truncate(limit);
                out
            })
            .collect();
    }
    images.swap_remove(seed.index())
}

/// Name of a generator, or of a user supplied morphism.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneratorName {
    L(char),
    R(char),
    E(char, char),
    P(char),
    Named(String),
}

impl GeneratorName {
    /// Reads a token such as `La`, `rb`, `Eab`, `Pa`. Other tokens are [`GeneratorName::Named`].
    pub fn parse(token: &str) -> Self {
        let chars: Vec<char> = token.chars().collect();
        match chars.as_slice() {
            [t, x] if t.eq_ignore_ascii_case(&'l') => GeneratorName::L(*x),
            [t, x] if t.eq_ignore_ascii_case(&'r') => GeneratorName::R(*x),
            [t, x] if t.eq_ignore_ascii_case(&'p') => GeneratorName::P(*x),
            [t, x, y] if t.eq_ignore_ascii_case(&'e') && x != y => GeneratorName::E(*x, *y),
            _ => GeneratorName::Named(token.to_string()),
        }
    }

    /// Whitespace separated tokens.
    pub fn parse_word(text: &str) -> Vec<Self> {
        text.split_whitespace().map(Self::parse).collect()
    }

    /// Resolves L, R, E and P generators and the name `id`.
    pub fn to_morphism(&self, alphabet: &Alphabet) -> Result<Morphism> {
        match self {
            GeneratorName::L(x) => make_l(alphabet, alphabet.require(*x)?),
            GeneratorName::R(x) => make_r(alphabet, alphabet.require(*x)?),
            GeneratorName::E(x, y) => make_e(alphabet, alphabet.require(*x)?, alphabet.require(*y)?),
            GeneratorName::P(x) => make_p(alphabet, alphabet.require(*x)?),
            GeneratorName::Named(n) if n == "id" => Ok(Morphism::identity(alphabet)),
            GeneratorName::Named(n) => Err(Error::Directive(format!("unknown morphism name '{n}'"))),
        }
    }

    /// Letters mentioned by the name.
    pub fn symbols(&self) -> Vec<char> {
        match self {
            GeneratorName::L(x) | GeneratorName::R(x) | GeneratorName::P(x) => vec![*x],
            GeneratorName::E(x, y) => vec![*x, *y],
            GeneratorName::Named(_) => Vec::new(),
        }
    }

    pub fn is_lr(&self) -> bool {
        matches!(self, GeneratorName::L(_) | GeneratorName::R(_))
    }
}

impl fmt::Display for GeneratorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorName::L(x) => write!(f, "L{x}"),
            GeneratorName::R(x) => write!(f, "R{x}"),
            GeneratorName::E(x, y) => write!(f, "E{x}{y}"),
            GeneratorName::P(x) => write!(f, "P{x}"),
            GeneratorName::Named(n) => write!(f, "{n}"),
        }
    }
}

/// `α ↦ α`, `β ↦ αβ`.
pub fn make_l(alphabet: &Alphabet, alpha: Letter) -> Result<Morphism> {
    check_letter(alphabet, alpha)?;
    Ok(Morphism::from_raw(
        alphabet,
        alphabet
            .letters()
            .map(|b| if b == alpha { vec![b] } else { vec![alpha, b] })
            .collect(),
    ))
}

/// `α ↦ α`, `β ↦ βα`.
pub fn make_r(alphabet: &Alphabet, alpha: Letter) -> Result<Morphism> {
    check_letter(alphabet, alpha)?;
    Ok(Morphism::from_raw(
        alphabet,
        alphabet
            .letters()
            .map(|b| if b == alpha { vec![b] } else { vec![b, alpha] })
            .collect(),
    ))
}

/// Exchanges `α` and `β`.
pub fn make_e(alphabet: &Alphabet, alpha: Letter, beta: Letter) -> Result<Morphism> {
    check_letter(alphabet, alpha)?;
    check_letter(alphabet, beta)?;
    if alpha == beta {
        return Err(Error::Precondition(
            "an exchange needs two distinct letters".into(),
        ));
    }
    Ok(Morphism::from_raw(
        alphabet,
        alphabet
            .letters()
            .map(|x| {
                if x == alpha {
                    vec![beta]
                } else if x == beta {
                    vec![alpha]
                } else {
                    vec![x]
                }
            })
            .collect(),
    ))
}

/// Every letter to `α`.
pub fn make_p(alphabet: &Alphabet, alpha: Letter) -> Result<Morphism> {
    check_letter(alphabet, alpha)?;
    Ok(Morphism::from_raw(
        alphabet,
        vec![vec![alpha]; alphabet.len()],
    ))
}

fn check_letter(alphabet: &Alphabet, l: Letter) -> Result<()> {
    if alphabet.contains(l) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "letter index {} outside {alphabet}",
            l.index()
        )))
    }
}

/// Composes a generator word left to right: `[g1, g2]` gives `g1 ∘ g2`.
pub fn compose_names(alphabet: &Alphabet, names: &[GeneratorName]) -> Result<Morphism> {
    let mut acc = Morphism::identity(alphabet);
    for n in names {
        acc = acc.compose(&n.to_morphism(alphabet)?)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassVerdict {
    Accept,
    /// `stuck` is the residual morphism at which no rule applied.
    Reject { stuck: Morphism, reason: String },
}

/// Certificate that a morphism is a product of generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorDecomposition {
    pub factors: Vec<GeneratorName>,
    /// Terminal P-class element, when it is not a plain `make_p`.
    pub residual: Option<Morphism>,
    pub verdict: ClassVerdict,
}

impl GeneratorDecomposition {
    pub fn accepted(&self) -> bool {
        self.verdict == ClassVerdict::Accept
    }

    /// `factors[0] ∘ … ∘ factors[k-1] ∘ residual`.
    pub fn recompose(&self, alphabet: &Alphabet) -> Result<Morphism> {
        let head = compose_names(alphabet, &self.factors)?;
        match &self.residual {
            Some(r) => head.compose(r),
            None => Ok(head),
        }
    }
}

impl fmt::Display for GeneratorDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            ClassVerdict::Accept => write!(f, "Accept")?,
            ClassVerdict::Reject { .. } => write!(f, "Reject")?,
        }
        let names: Vec<String> = self.factors.iter().map(|g| g.to_string()).collect();
        write!(f, " [{}]", names.join(" "))?;
        if let Some(r) = &self.residual {
            write!(f, " then P-class [{}]", r.compact())?;
        }
        if let ClassVerdict::Reject { stuck, reason } = &self.verdict {
            write!(f, " stuck at [{}]: {reason}", stuck.compact())?;
        }
        Ok(())
    }
}

/// Transpositions whose left-to-right composition is the permutation `perm`
/// (`perm[x]` is the image of `x`).
pub fn transpositions(alphabet: &Alphabet, perm: &[Letter]) -> Vec<GeneratorName> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![Letter::new(start)];
        seen[start] = true;
        let mut x = perm[start];
        while x.index() != start {
            seen[x.index()] = true;
            cycle.push(x);
            x = perm[x.index()];
        }
        let c0 = alphabet.symbol(cycle[0]);
        for &c in cycle[1..].iter().rev() {
            out.push(GeneratorName::E(c0, alphabet.symbol(c)));
        }
    }
    out
}

/// Decides membership in `(L ∪ R ∪ Exch ∪ P)*`, the endomorphisms preserving episturmian words.
pub fn classify_episturmian_preserving(f: &Morphism) -> GeneratorDecomposition {
    let alphabet = f.alphabet().clone();
    let mut factors = Vec::new();
    let mut cur = f.clone();
    loop {
        if let Some(a) = cur.is_p_class() {
            let plain = make_p(&alphabet, a).expect("letter of alphabet");
            let residual = if cur == plain {
                factors.push(GeneratorName::P(alphabet.symbol(a)));
                None
            } else {
                Some(cur)
            };
            return GeneratorDecomposition {
                factors,
                residual,
                verdict: ClassVerdict::Accept,
            };
        }
        if cur.norm() == alphabet.len() && cur.is_permutation() {
            let perm: Vec<Letter> = cur.first_letter_map();
            factors.extend(transpositions(&alphabet, &perm));
            return GeneratorDecomposition {
                factors,
                residual: None,
                verdict: ClassVerdict::Accept,
            };
        }
        if let Some((a, g)) = cur.peel_left() {
            factors.push(GeneratorName::L(alphabet.symbol(a)));
            cur = g;
        } else if let Some((a, g)) = cur.peel_right() {
            factors.push(GeneratorName::R(alphabet.symbol(a)));
            cur = g;
        } else {
            return GeneratorDecomposition {
                factors,
                residual: None,
                verdict: ClassVerdict::Reject {
                    stuck: cur,
                    reason: "neither L nor R peels, and not a permutation or P-class".into(),
                },
            };
        }
    }
}

/// Decides membership in `(S_bal ∪ {E})*`, the morphisms preserving Sturmian words.
pub fn classify_sturmian_preserving(f: &Morphism) -> Result<GeneratorDecomposition> {
    let alphabet = f.alphabet().clone();
    if alphabet.len() != 2 {
        return Err(Error::Precondition(format!(
            "Sturmian classification needs a binary alphabet, got {alphabet}"
        )));
    }
    let (a, b) = (alphabet.symbol(Letter::new(0)), alphabet.symbol(Letter::new(1)));
    let mut factors = Vec::new();
    let mut cur = f.clone();
    let reject = |factors, stuck: Morphism, reason: &str| GeneratorDecomposition {
        factors,
        residual: None,
        verdict: ClassVerdict::Reject {
            stuck,
            reason: reason.into(),
        },
    };
    loop {
        if cur.is_identity() {
            break;
        }
        if cur.is_permutation() {
            factors.push(GeneratorName::E(a, b));
            break;
        }
        if cur.is_p_class().is_some() {
            return Ok(reject(factors, cur, "P-class morphisms do not preserve Sturmian words"));
        }
        let norm = cur.norm();
        let step = cur
            .peel_left()
            .map(|(x, g)| (GeneratorName::L(alphabet.symbol(x)), g))
            .or_else(|| {
                cur.peel_right()
                    .map(|(x, g)| (GeneratorName::R(alphabet.symbol(x)), g))
            });
        match step {
            Some((name, g)) if g.norm() < norm => {
                factors.push(name);
                cur = g;
            }
            _ => return Ok(reject(factors, cur, "neither L nor R peels")),
        }
    }
    Ok(GeneratorDecomposition {
        factors,
        residual: None,
        verdict: ClassVerdict::Accept,
    })
}

/// Rewrites a word over `L ∪ R ∪ Exch` as an `L ∪ R` word followed by exchanges,
/// pushing exchanges to the right with `π ∘ L_x = L_π(x) ∘ π` (and the same for `R`).
pub fn canonical_lr_exch(
    alphabet: &Alphabet,
    seq: &[GeneratorName],
) -> Result<(Vec<GeneratorName>, Vec<GeneratorName>)> {
    let mut perm: Vec<Letter> = alphabet.letters().collect();
    let mut lr = Vec::new();
    for g in seq {
        match g {
            GeneratorName::L(x) => {
                let x = alphabet.require(*x)?;
                lr.push(GeneratorName::L(alphabet.symbol(perm[x.index()])));
            }
            GeneratorName::R(x) => {
                let x = alphabet.require(*x)?;
                lr.push(GeneratorName::R(alphabet.symbol(perm[x.index()])));
            }
            GeneratorName::E(x, y) => {
                let (x, y) = (alphabet.require(*x)?, alphabet.require(*y)?);
                perm.swap(x.index(), y.index());
            }
            other => {
                return Err(Error::Precondition(format!(
                    "'{other}' is not an L, R or exchange generator"
                )))
            }
        }
    }
    Ok((lr, transpositions(alphabet, &perm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{HashSet, VecDeque};

    fn ab() -> Alphabet {
        Alphabet::latin(2).unwrap()
    }

    fn m(alphabet: &Alphabet, images: &[&str]) -> Morphism {
        Morphism::from_images(alphabet, images).unwrap()
    }

    fn gen(alphabet: &Alphabet, token: &str) -> Morphism {
        GeneratorName::parse(token).to_morphism(alphabet).unwrap()
    }

    #[test]
    fn apply_examples() {
        let a = ab();
        let la = gen(&a, "La");
        assert_eq!(la.apply(&a.word("bab").unwrap()).unwrap().to_string(), "abaab");
        let abc = Alphabet::latin(3).unwrap();
        let f1 = m(&abc, &["a", "bac", "baca"]);
        assert_eq!(f1.apply(&abc.word("b").unwrap()).unwrap().to_string(), "bac");
        let mu = m(&a, &["ab", "ba"]);
        assert_eq!(mu.apply(&a.word("ab").unwrap()).unwrap().to_string(), "abba");
    }

    #[test]
    fn compose_examples() {
        let a = ab();
        let (la, lb, ra, e) = (gen(&a, "La"), gen(&a, "Lb"), gen(&a, "Ra"), gen(&a, "Eab"));
        assert_eq!(e.compose(&lb).unwrap(), la.compose(&e).unwrap());
        assert_eq!(Morphism::identity(&a).compose(&la).unwrap(), la);
        let lr = la.compose(&ra).unwrap();
        // brute force: apply R_a then L_a letter by letter
        for x in a.letters() {
            let manual = la.apply(&ra.image(x)).unwrap();
            assert_eq!(lr.image(x), manual);
        }
        assert_eq!(lr.image(Letter::new(1)).to_string(), "aba");
    }

    #[test]
    fn generator_shapes() {
        let a = ab();
        assert_eq!(gen(&a, "La").compact(), "a->a, b->ab");
        assert_eq!(gen(&a, "Rb").compact(), "a->ab, b->b");
        let abc = Alphabet::latin(3).unwrap();
        assert_eq!(gen(&abc, "Eab").compact(), "a->b, b->a, c->c");
        assert_eq!(gen(&abc, "Pa").compact(), "a->a, b->a, c->a");
        assert!(make_e(&a, Letter::new(0), Letter::new(0)).is_err());
        assert_eq!(GeneratorName::parse("lb"), GeneratorName::L('b'));
        assert_eq!(GeneratorName::parse("f2"), GeneratorName::Named("f2".into()));
    }

    #[test]
    fn predicates() {
        let a = ab();
        let f2 = m(&a, &["ba", "ab"]);
        assert_eq!(f2.first_letter_map(), vec![Letter::new(1), Letter::new(0)]);
        assert_eq!(gen(&a, "La").first_letter_map(), vec![Letter::new(0); 2]);
        assert!(gen(&a, "Eab").is_permutation());
        assert!(!gen(&a, "La").is_permutation());
        assert!(!m(&a, &["a", "a"]).is_permutation());
        assert_eq!(m(&a, &["aa", "a"]).is_p_class(), Some(Letter::new(0)));
        assert_eq!(gen(&a, "La").is_p_class(), None);
        assert_eq!(m(&a, &["b", "bb"]).is_p_class(), Some(Letter::new(1)));
        assert_eq!(Morphism::identity(&a).norm(), 2);
        assert_eq!(gen(&a, "La").norm(), 3);
        let abc = Alphabet::latin(3).unwrap();
        assert_eq!(m(&abc, &["a", "bac", "baca"]).norm(), 8);
    }

    #[test]
    fn peeling() {
        let a = ab();
        let phi = m(&a, &["ab", "a"]);
        let (x, g) = phi.peel_left().unwrap();
        assert_eq!(x, Letter::new(0));
        assert_eq!(g.compact(), "a->b, b->a");
        assert_eq!(gen(&a, "La").compose(&g).unwrap(), phi);
        assert!(m(&a, &["ba", "ab"]).peel_left().is_none());
        assert!(gen(&a, "La").peel_left().unwrap().1.is_identity());

        let rbla = gen(&a, "Rb").compose(&gen(&a, "La")).unwrap();
        let (x, g) = rbla.peel_right().unwrap();
        assert_eq!((x, g), (Letter::new(1), gen(&a, "La")));
        assert!(gen(&a, "La").peel_right().is_none());
        assert!(gen(&a, "Ra").peel_right().unwrap().1.is_identity());
    }

    #[test]
    fn file_format_round_trip() {
        let text = "alphabet: a b\na -> ab\nb -> a\n";
        let f = Morphism::parse(text).unwrap();
        assert_eq!(f.to_string(), text);
        assert_eq!(Morphism::parse("a -> ab\nb -> a").unwrap(), f);
        assert!(matches!(
            Morphism::parse("alphabet: a b\na -> \nb -> a"),
            Err(Error::Erasing('a'))
        ));
        assert!(Morphism::parse("alphabet: a b\na -> ac\nb -> a").is_err());
        assert!(Morphism::parse("alphabet: a b\na -> a").is_err());
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<Morphism>(&json).unwrap(), f);
    }

    #[test]
    fn fixed_point_prefixes() {
        let a = ab();
        let mu = m(&a, &["ab", "ba"]);
        let brute = {
            let mut w = vec![Letter::new(0)];
            while w.len() < 100 {
                w = mu.apply_letters(&w);
            }
            w.truncate(100);
            w
        };
        assert_eq!(mu.fixed_point_prefix(Letter::new(0), 100).unwrap().letters(), &brute[..]);
        assert!(gen(&a, "La").fixed_point_prefix(Letter::new(0), 5).is_err());
        let fib = m(&a, &["ab", "a"]);
        assert_eq!(fib.fixed_point_prefix(Letter::new(0), 8).unwrap().to_string(), "abaababa");
    }

    #[test]
    fn episturmian_examples() {
        let a = ab();
        let f = gen(&a, "La").compose(&gen(&a, "Eab")).unwrap();
        let d = classify_episturmian_preserving(&f);
        assert!(d.accepted());
        assert_eq!(d.factors, vec![GeneratorName::L('a'), GeneratorName::E('a', 'b')]);
        assert_eq!(d.recompose(&a).unwrap(), f);

        let abc = Alphabet::latin(3).unwrap();
        let f1 = m(&abc, &["a", "bac", "baca"]);
        assert!(!classify_episturmian_preserving(&f1).accepted());
        assert!(!brute_generated(&abc, f1.norm(), true).contains(&f1));

        let d = classify_episturmian_preserving(&gen(&a, "Pa"));
        assert_eq!(d.factors, vec![GeneratorName::P('a')]);
        assert!(d.residual.is_none());

        let odd = m(&a, &["aa", "a"]);
        let d = classify_episturmian_preserving(&odd);
        assert!(d.accepted());
        assert_eq!(d.recompose(&a).unwrap(), odd);
    }

    #[test]
    fn permutation_cycles() {
        let abcd = Alphabet::latin(4).unwrap();
        let perm = m(&abcd, &["c", "a", "d", "b"]);
        let d = classify_episturmian_preserving(&perm);
        assert!(d.factors.iter().all(|g| matches!(g, GeneratorName::E('a', _))));
        assert_eq!(d.recompose(&abcd).unwrap(), perm);
    }

    #[test]
    fn sturmian_examples() {
        let a = ab();
        let phi = m(&a, &["ab", "a"]);
        let d = classify_sturmian_preserving(&phi).unwrap();
        assert_eq!(d.factors, vec![GeneratorName::L('a'), GeneratorName::E('a', 'b')]);
        let mu = m(&a, &["ab", "ba"]);
        assert!(!classify_sturmian_preserving(&mu).unwrap().accepted());
        let d = classify_sturmian_preserving(&Morphism::identity(&a)).unwrap();
        assert!(d.accepted() && d.factors.is_empty());
        assert!(classify_sturmian_preserving(&Morphism::identity(&Alphabet::latin(3).unwrap())).is_err());
    }

    #[test]
    fn canonical_examples() {
        let a = ab();
        let (lr, perm) = canonical_lr_exch(&a, &GeneratorName::parse_word("Eab Lb")).unwrap();
        assert_eq!(lr, vec![GeneratorName::L('a')]);
        assert_eq!(perm, vec![GeneratorName::E('a', 'b')]);
        let (lr, perm) = canonical_lr_exch(&a, &GeneratorName::parse_word("La")).unwrap();
        assert_eq!((lr, perm.is_empty()), (vec![GeneratorName::L('a')], true));
        let seq = GeneratorName::parse_word("Eab Rb Eab");
        let (lr, perm) = canonical_lr_exch(&a, &seq).unwrap();
        assert_eq!(lr, vec![GeneratorName::R('a')]);
        assert!(perm.is_empty());
        assert!(canonical_lr_exch(&a, &GeneratorName::parse_word("Pa")).is_err());
    }

    /// Every morphism reachable from the identity by left multiplication with a
    /// generator, keeping norms ≤ `max_norm`. Norms never decrease along the
    /// way, so this finds every product of generators with norm ≤ `max_norm`.
    fn brute_generated(alphabet: &Alphabet, max_norm: usize, with_p: bool) -> HashSet<Morphism> {
        let mut gens: Vec<Morphism> = Vec::new();
        for x in alphabet.letters() {
            gens.push(make_l(alphabet, x).unwrap());
            gens.push(make_r(alphabet, x).unwrap());
            for y in alphabet.letters().filter(|y| *y > x) {
                gens.push(make_e(alphabet, x, y).unwrap());
            }
        }
        if with_p {
            for x in alphabet.letters() {
                gens.extend(p_class_morphisms(alphabet, x, max_norm));
            }
        }
        let start = Morphism::identity(alphabet);
        let mut seen = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        while let Some(h) = queue.pop_front() {
            for g in &gens {
                let next = g.compose(&h).unwrap();
                if next.norm() <= max_norm && seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    fn p_class_morphisms(alphabet: &Alphabet, x: Letter, max_norm: usize) -> Vec<Morphism> {
        let n = alphabet.len();
        let mut out = Vec::new();
        let mut lens = vec![1; n];
        loop {
            if lens.iter().sum::<usize>() <= max_norm {
                out.push(Morphism::from_raw(
                    alphabet,
                    lens.iter().map(|&k| vec![x; k]).collect(),
                ));
            }
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                lens[i] += 1;
                if lens[i] <= max_norm {
                    break;
                }
                lens[i] = 1;
                i += 1;
            }
        }
    }

    fn all_binary_morphisms(max_norm: usize) -> Vec<Morphism> {
        let a = ab();
        let words = |len: usize| -> Vec<Vec<Letter>> {
            (0..1usize << len)
                .map(|bits| (0..len).map(|i| Letter::new((bits >> i) & 1)).collect())
                .collect()
        };
        let mut out = Vec::new();
        for la in 1..max_norm {
            for lb in 1..=max_norm - la {
                for x in words(la) {
                    for y in words(lb) {
                        out.push(Morphism::from_raw(&a, vec![x.clone(), y]));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn episturmian_matches_brute_force_on_binary() {
        let a = ab();
        let reachable = brute_generated(&a, 10, true);
        for f in all_binary_morphisms(6) {
            let d = classify_episturmian_preserving(&f);
            assert_eq!(d.accepted(), reachable.contains(&f), "{f:?}");
            if d.accepted() {
                assert_eq!(d.recompose(&a).unwrap(), f);
            }
        }
    }

    #[test]
    fn sturmian_matches_brute_force_on_binary() {
        let a = ab();
        let reachable = brute_generated(&a, 10, false);
        for f in all_binary_morphisms(7) {
            let d = classify_sturmian_preserving(&f).unwrap();
            assert_eq!(d.accepted(), reachable.contains(&f), "{f:?}");
            if d.accepted() {
                assert_eq!(d.recompose(&a).unwrap(), f);
            }
        }
    }

    fn lre_token(n: usize) -> impl Strategy<Value = GeneratorName> {
        let sym = move |i: usize| (b'a' + i as u8) as char;
        prop_oneof![
            (0..n).prop_map(move |i| GeneratorName::L(sym(i))),
            (0..n).prop_map(move |i| GeneratorName::R(sym(i))),
            (0..n, 1..n).prop_map(move |(i, d)| GeneratorName::E(sym(i), sym((i + d) % n))),
        ]
    }

    proptest! {
        #[test]
        fn canonical_form_preserves_value(
            (n, seq) in (2usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(lre_token(n), 0..=8)))
        ) {
            let alphabet = Alphabet::latin(n).unwrap();
            let (lr, perm) = canonical_lr_exch(&alphabet, &seq).unwrap();
            prop_assert!(lr.iter().all(GeneratorName::is_lr));
            let lhs = compose_names(&alphabet, &[lr, perm].concat()).unwrap();
            prop_assert_eq!(lhs, compose_names(&alphabet, &seq).unwrap());
        }

        #[test]
        fn classifier_accepts_generator_products(seq in prop::collection::vec(lre_token(3), 0..=8)) {
            let alphabet = Alphabet::latin(3).unwrap();
            let f = compose_names(&alphabet, &seq).unwrap();
            let d = classify_episturmian_preserving(&f);
            prop_assert!(d.accepted());
            prop_assert_eq!(d.recompose(&alphabet).unwrap(), f);
        }

        #[test]
        fn first_letter_map_is_multiplicative(
            x in prop::collection::vec(prop::collection::vec(0usize..3, 1..5), 3),
            y in prop::collection::vec(prop::collection::vec(0usize..3, 1..5), 3),
        ) {
            let alphabet = Alphabet::latin(3).unwrap();
            let to = |v: &Vec<Vec<usize>>| Morphism::from_raw(&alphabet, v.iter().map(|i| i.iter().map(|&k| Letter::new(k)).collect()).collect());
            let (f, g) = (to(&x), to(&y));
            let fg = f.compose(&g).unwrap().first_letter_map();
            let (ff, gg) = (f.first_letter_map(), g.first_letter_map());
            let expected: Vec<Letter> = gg.iter().map(|l| ff[l.index()]).collect();
            prop_assert_eq!(fg, expected);
            if f.is_permutation() {
                prop_assert_eq!(f.norm(), 3);
            }
        }

        #[test]
        fn peel_left_round_trip(
            alpha in 0usize..2,
            y in prop::collection::vec(prop::collection::vec(0usize..2, 1..6), 2),
        ) {
            let alphabet = ab();
            let g = Morphism::from_raw(&alphabet, y.iter().map(|i| i.iter().map(|&k| Letter::new(k)).collect()).collect());
            prop_assume!(g.norm() <= 12);
            let f = make_l(&alphabet, Letter::new(alpha)).unwrap().compose(&g).unwrap();
            let (x, h) = f.peel_left().unwrap();
            prop_assert_eq!(make_l(&alphabet, x).unwrap().compose(&h).unwrap(), f);
        }
    }
}
