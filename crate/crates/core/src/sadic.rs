//! Directive sequences, S-adic limit words, the named substitution families and
//! the normalization of `L ∪ R` directives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::desub::SubstitutionSet;
use crate::error::{Error, Result};
use crate::morphism::{
    truncated_fixed_point, truncated_images, GeneratorName, Morphism,
};
use crate::word::{Alphabet, Letter, Word};

/// An eventually periodic sequence of morphisms `pre · period^ω`.
#[derive(Clone)]
pub struct DirectiveSpec {
    alphabet: Alphabet,
    preperiod: Vec<GeneratorName>,
    period: Vec<GeneratorName>,
    registry: BTreeMap<String, Morphism>,
    resolved: Vec<Morphism>,
}

impl DirectiveSpec {
    pub fn new(
        alphabet: &Alphabet,
        preperiod: Vec<GeneratorName>,
        period: Vec<GeneratorName>,
    ) -> Result<Self> {
        Self::with_registry(alphabet, preperiod, period, BTreeMap::new())
    }

    /// Like [`new`](Self::new), resolving [`GeneratorName::Named`] entries through `registry`.
    pub fn with_registry(
        alphabet: &Alphabet,
        preperiod: Vec<GeneratorName>,
        period: Vec<GeneratorName>,
        registry: BTreeMap<String, Morphism>,
    ) -> Result<Self> {
        let resolved = preperiod
            .iter()
            .chain(&period)
            .map(|g| resolve(alphabet, g, &registry))
            .collect::<Result<Vec<_>>>()?;
        Ok(DirectiveSpec {
            alphabet: alphabet.clone(),
            preperiod,
            period,
            registry,
            resolved,
        })
    }

    /// Reads `La Rb (La Lb)^w`, inferring the alphabet.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, None, &BTreeMap::new())
    }

    /// Reads a directive. Without an explicit alphabet, the alphabet of the
    /// registry is used, or else `a..=max` over the letters named by generator tokens.
    pub fn parse_with(
        text: &str,
        alphabet: Option<&Alphabet>,
        registry: &BTreeMap<String, Morphism>,
    ) -> Result<Self> {
        let (pre_text, period_text) = split_directive(text)?;
        let pre = GeneratorName::parse_word(pre_text);
        let period = GeneratorName::parse_word(period_text);
        let alphabet = match alphabet {
            Some(a) => a.clone(),
            None => match registry.values().next() {
                Some(m) => m.alphabet().clone(),
                None => {
                    let symbols: String =
                        pre.iter().chain(&period).flat_map(|g| g.symbols()).collect();
                    Alphabet::infer(&symbols)?
                }
            },
        };
        Self::with_registry(&alphabet, pre, period, registry.clone())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn preperiod(&self) -> &[GeneratorName] {
        &self.preperiod
    }

    pub fn period(&self) -> &[GeneratorName] {
        &self.period
    }

    pub fn registry(&self) -> &BTreeMap<String, Morphism> {
        &self.registry
    }

    pub fn pre_len(&self) -> usize {
        self.preperiod.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Number of distinct positions: preperiod plus one period.
    pub fn phases(&self) -> usize {
        self.resolved.len()
    }

    /// Position of the `k`-th generator (0-based) among the phases.
    pub fn phase(&self, k: usize) -> usize {
        let p = self.pre_len();
        if k < p {
            k
        } else {
            assert!(self.period_len() > 0, "finite directive has no position {k}");
            p + (k - p) % self.period_len()
        }
    }

    /// Phase following `i`, wrapping from the end of the period to its start.
    pub fn next_phase(&self, i: usize) -> usize {
        if i + 1 == self.phases() {
            self.pre_len()
        } else {
            i + 1
        }
    }

    /// `σ_{k+1}` with `k` counted from 0.
    pub fn morphism_at(&self, k: usize) -> &Morphism {
        &self.resolved[self.phase(k)]
    }

    pub fn name_at(&self, k: usize) -> &GeneratorName {
        let i = self.phase(k);
        if i < self.pre_len() {
            &self.preperiod[i]
        } else {
            &self.period[i - self.pre_len()]
        }
    }

    pub fn morphism_at_phase(&self, i: usize) -> &Morphism {
        &self.resolved[i]
    }

    /// `σ_1 ∘ … ∘ σ_p` over the preperiod.
    pub fn preperiod_composition(&self) -> Morphism {
        compose_all(&self.alphabet, &self.resolved[..self.pre_len()])
    }

    /// `τ_1 ∘ … ∘ τ_q` over one period.
    pub fn period_composition(&self) -> Result<Morphism> {
        self.require_period()?;
        Ok(compose_all(&self.alphabet, &self.resolved[self.pre_len()..]))
    }

    /// The directive with the first `k` generators dropped.
    pub fn shifted(&self, k: usize) -> Result<DirectiveSpec> {
        if k <= self.pre_len() {
            return Self::with_registry(
                &self.alphabet,
                self.preperiod[k..].to_vec(),
                self.period.clone(),
                self.registry.clone(),
            );
        }
        self.require_period()?;
        let r = (k - self.pre_len()) % self.period_len();
        let mut period = self.period[r..].to_vec();
        period.extend_from_slice(&self.period[..r]);
        Self::with_registry(&self.alphabet, Vec::new(), period, self.registry.clone())
    }

    fn require_period(&self) -> Result<()> {
        if self.period.is_empty() {
            Err(Error::Directive(
                "the period is empty, so the directive has no limit word".into(),
            ))
        } else {
            Ok(())
        }
    }
}

fn resolve(
    alphabet: &Alphabet,
    g: &GeneratorName,
    registry: &BTreeMap<String, Morphism>,
) -> Result<Morphism> {
    if let GeneratorName::Named(n) = g {
        if let Some(m) = registry.get(n) {
            alphabet.check_same(m.alphabet())?;
            return Ok(m.clone());
        }
    }
    g.to_morphism(alphabet)
}

fn compose_all(alphabet: &Alphabet, ms: &[Morphism]) -> Morphism {
    ms.iter().fold(Morphism::identity(alphabet), |acc, m| {
        acc.compose(m).expect("same alphabet")
    })
}

fn split_directive(text: &str) -> Result<(&str, &str)> {
    let Some(open) = text.find('(') else {
        if text.contains(')') || text.contains('^') {
            return Err(Error::Directive(format!("unbalanced period group in {text:?}")));
        }
        return Ok((text, ""));
    };
    let rest = &text[open + 1..];
    let close = rest
        .find(')')
        .ok_or_else(|| Error::Directive(format!("missing ')' in {text:?}")))?;
    let period = &rest[..close];
    let tail = rest[close + 1..].trim();
    if !matches!(tail, "^w" | "^ω" | "^omega") {
        return Err(Error::Directive(format!(
            "period group must be closed by `)^w` at the end, found {tail:?}"
        )));
    }
    if period.contains('(') {
        return Err(Error::Directive("nested period groups are not supported".into()));
    }
    Ok((&text[..open], period))
}

impl fmt::Display for DirectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |gs: &[GeneratorName]| {
            gs.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ")
        };
        let pre = join(&self.preperiod);
        match (pre.is_empty(), self.period.is_empty()) {
            (_, true) => write!(f, "{pre}"),
            (true, false) => write!(f, "({})^w", join(&self.period)),
            (false, false) => write!(f, "{pre} ({})^w", join(&self.period)),
        }
    }
}

impl fmt::Debug for DirectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DirectiveSpec[{self} over {}]", self.alphabet)
    }
}

type Images = Vec<Vec<Letter>>;

fn trunc_apply(f: &Images, w: &[Letter], limit: usize) -> Vec<Letter> {
    let mut out = Vec::new();
    for &l in w {
        if out.len() >= limit {
            break;
        }
        out.extend_from_slice(&f[l.index()]);
    }
    out.truncate(limit);
    out
}

fn trunc_compose(f: &Images, g: &Images, limit: usize) -> Images {
    g.iter().map(|img| trunc_apply(f, img, limit)).collect()
}

fn trunc_compose_all(alphabet: &Alphabet, ms: &[Morphism], limit: usize) -> Images {
    let id: Images = alphabet.letters().map(|l| vec![l]).collect();
    ms.iter()
        .fold(id, |acc, m| trunc_compose(&acc, &truncated_images(m, limit), limit))
}

/// Letters on cycles of a self map, with their cycle lengths.
pub(crate) fn periodic_points(map: &[Letter]) -> Vec<(Letter, usize)> {
    let mut out = Vec::new();
    for start in 0..map.len() {
        let mut x = map[start];
        for steps in 1..=map.len() {
            if x.index() == start {
                out.push((Letter::new(start), steps));
                break;
            }
            x = map[x.index()];
        }
    }
    out
}

/// A Kőnig chain of an eventually periodic directive, identified by its letter
/// at the end of the preperiod.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KonigChain {
    pub letter: char,
    /// Cycle length of the letter under the first-letter map of one period.
    pub cycle_len: usize,
    /// Whether the words along the chain grow without bound.
    pub expanding: bool,
}

/// All Kőnig chains, ordered by letter.
///
/// A chain must pass, at every period boundary, through letters that have
/// preimages of every order under the first-letter map of the period; these
/// are exactly the periodic points of that map, and each periodic point
/// determines its chain.
pub fn konig_chains(spec: &DirectiveSpec) -> Result<Vec<KonigChain>> {
    let g = trunc_compose_all(spec.alphabet(), &spec.resolved[spec.pre_len()..], 2);
    spec.require_period()?;
    let first: Vec<Letter> = g.iter().map(|img| img[0]).collect();
    Ok(periodic_points(&first)
        .into_iter()
        .map(|(c, len)| {
            let mut h = g.clone();
            for _ in 1..len {
                h = trunc_compose(&h, &g, 2);
            }
            KonigChain {
                letter: spec.alphabet().symbol(c),
                cycle_len: len,
                expanding: h[c.index()].len() > 1,
            }
        })
        .collect())
}

/// Prefix of length `n` of the S-adic limit word.
///
/// `seed` names the chain letter at the end of the preperiod. Without a seed the
/// least chain letter is used. A seed that is not on a chain is iterated as a
/// constant seed, `lim σ_1 ⋯ σ_k(seed)` along period boundaries, and must converge.
pub fn generate_prefix(spec: &DirectiveSpec, n: usize, seed: Option<Letter>) -> Result<Word> {
    spec.require_period()?;
    let alphabet = spec.alphabet();
    let limit = n.max(2);
    let pre = trunc_compose_all(alphabet, &spec.resolved[..spec.pre_len()], limit);
    let g = trunc_compose_all(alphabet, &spec.resolved[spec.pre_len()..], limit);
    let first: Vec<Letter> = g.iter().map(|img| img[0]).collect();
    let points = periodic_points(&first);
    let chain = match seed {
        None => Some(points[0]),
        Some(s) => points.iter().copied().find(|(c, _)| *c == s),
    };
    let core: Vec<Letter> = match chain {
        Some((c, len)) => {
            let mut h = g.clone();
            for _ in 1..len {
                h = trunc_compose(&h, &g, limit);
            }
            if h[c.index()].len() > 1 {
                truncated_fixed_point(&h, c, limit)
            } else {
                let u = trunc_apply(&pre, &[c], limit);
                return Ok(Word::from_letters(
                    alphabet,
                    u.iter().copied().cycle().take(n).collect(),
                ));
            }
        }
        None => constant_seed_limit(spec, &g, seed.unwrap(), &points, limit)?,
    };
    let mut out = trunc_apply(&pre, &core, limit);
    if out.len() < n {
        // a finite ultimate value u: the limit point is u^ω
        out = out.iter().copied().cycle().take(n).collect();
    }
    out.truncate(n);
    Ok(Word::from_letters(alphabet, out))
}

fn constant_seed_limit(
    spec: &DirectiveSpec,
    g: &Images,
    seed: Letter,
    points: &[(Letter, usize)],
    limit: usize,
) -> Result<Vec<Letter>> {
    let step = |x: &Vec<Letter>| trunc_apply(g, x, limit);
    // Brent's cycle detection on x_{j+1} = trunc(G(x_j)).
    let max_steps = 8 * limit + 256;
    let (mut power, mut lam) = (1usize, 1usize);
    let mut tortoise = vec![seed];
    let mut hare = step(&tortoise);
    let mut steps = 0;
    while tortoise != hare {
        if power == lam {
            tortoise = hare.clone();
            power *= 2;
            lam = 0;
        }
        hare = step(&hare);
        lam += 1;
        steps += 1;
        if steps > max_steps {
            break;
        }
    }
    if tortoise == hare && lam == 1 {
        return Ok(hare);
    }
    let chains: Vec<String> = points
        .iter()
        .map(|(c, _)| spec.alphabet().symbol(*c).to_string())
        .collect();
    Err(Error::NoLimit(format!(
        "seed '{}' is not on a Kőnig chain and the words σ1⋯σk({}) do not converge; chain letters are {{{}}}",
        spec.alphabet().symbol(seed),
        spec.alphabet().symbol(seed),
        chains.join(",")
    )))
}

/// Named substitution families, some parametrised by a bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `{L_a, R_a, L_b, R_b}`.
    SBal,
    /// `{L_a, R_a}⁺{L_b, R_b} ∪ {L_b, R_b}⁺{L_a, R_a}`.
    SSturm,
    /// `{L_aⁿR_b, R_bⁿL_a : n ≥ 1}`.
    SLynd,
    LFamily,
    RFamily,
    LRFamily,
    /// `R*L`: a word over `R` followed by one `L`.
    RStarL,
    /// `L_{a1}⋯L_{ak}` using every letter, with `a_k` new.
    LStrictStand,
    /// Words over `L ∪ R` with some `L` and, for every letter α, some `L_α` or `R_α`.
    SStrictEpi,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::SBal,
        Family::SSturm,
        Family::SLynd,
        Family::LFamily,
        Family::RFamily,
        Family::LRFamily,
        Family::RStarL,
        Family::LStrictStand,
        Family::SStrictEpi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::SBal => "Sbal",
            Family::SSturm => "SSturm",
            Family::SLynd => "SLynd",
            Family::LFamily => "Lfam",
            Family::RFamily => "Rfam",
            Family::LRFamily => "LRfam",
            Family::RStarL => "RstarL",
            Family::LStrictStand => "LStrictStand",
            Family::SStrictEpi => "Sstrictepi",
        }
    }

    /// Looks up a family by its built-in name, ignoring case.
    pub fn from_name(name: &str) -> Option<Family> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Family::SBal | Family::SSturm | Family::SLynd)
    }

    /// Whether instantiating the family needs a bound.
    pub fn is_parametric(self) -> bool {
        matches!(
            self,
            Family::SSturm
                | Family::SLynd
                | Family::RStarL
                | Family::LStrictStand
                | Family::SStrictEpi
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyDescriptor {
    pub family: Family,
    pub alphabet: Alphabet,
}

impl FamilyDescriptor {
    pub fn new(family: Family, alphabet: &Alphabet) -> Result<Self> {
        if family.is_binary() && alphabet.len() != 2 {
            return Err(Error::Precondition(format!(
                "{family} lives on a binary alphabet, got {alphabet}"
            )));
        }
        if alphabet.len() < 2 {
            return Err(Error::Precondition(format!(
                "{family} needs at least two letters"
            )));
        }
        Ok(FamilyDescriptor {
            family,
            alphabet: alphabet.clone(),
        })
    }
}

/// Instantiates a family. For parametric families `bound` limits the length of
/// the run before the final generator (`SSturm`, `SLynd`, `LStrictStand`), the
/// number of `R` generators (`RstarL`) or the total length (`Sstrictepi`).
pub fn family_members(fam: &FamilyDescriptor, bound: usize) -> Result<SubstitutionSet> {
    let a = &fam.alphabet;
    let sym: Vec<char> = a.symbols().to_vec();
    let l = |x: char| GeneratorName::L(x);
    let r = |x: char| GeneratorName::R(x);
    if fam.family.is_parametric() && bound == 0 {
        return Err(Error::Precondition(format!(
            "{} needs a bound of at least 1",
            fam.family
        )));
    }
    let words: Vec<Vec<GeneratorName>> = match fam.family {
        Family::SBal => vec![
            vec![l(sym[0])],
            vec![r(sym[0])],
            vec![l(sym[1])],
            vec![r(sym[1])],
        ],
        Family::LFamily => sym.iter().map(|&x| vec![l(x)]).collect(),
        Family::RFamily => sym.iter().map(|&x| vec![r(x)]).collect(),
        Family::LRFamily => sym
            .iter()
            .flat_map(|&x| [vec![l(x)], vec![r(x)]])
            .collect(),
        Family::SLynd => {
            let (x, y) = (sym[0], sym[1]);
            let mut out = Vec::new();
            for k in 1..=bound {
                let mut w = vec![l(x); k];
                w.push(r(y));
                out.push(w);
                let mut w = vec![r(y); k];
                w.push(l(x));
                out.push(w);
            }
            out
        }
        Family::SSturm => {
            let types = [[l(sym[0]), r(sym[0])], [l(sym[1]), r(sym[1])]];
            let mut out = Vec::new();
            for (t, u) in [(0, 1), (1, 0)] {
                for run in words_over(&types[t], 1, bound) {
                    for last in &types[u] {
                        let mut w = run.clone();
                        w.push(last.clone());
                        out.push(w);
                    }
                }
            }
            out
        }
        Family::RStarL => {
            let rs: Vec<GeneratorName> = sym.iter().map(|&x| r(x)).collect();
            let mut out = Vec::new();
            for run in words_over(&rs, 0, bound) {
                for &x in &sym {
                    let mut w = run.clone();
                    w.push(l(x));
                    out.push(w);
                }
            }
            out
        }
        Family::LStrictStand => {
            let mut out = Vec::new();
            for &last in &sym {
                let others: Vec<GeneratorName> =
                    sym.iter().filter(|&&x| x != last).map(|&x| l(x)).collect();
                for run in words_over(&others, others.len(), bound) {
                    let used: BTreeSet<&GeneratorName> = run.iter().collect();
                    if used.len() == others.len() {
                        let mut w = run.clone();
                        w.push(l(last));
                        out.push(w);
                    }
                }
            }
            out
        }
        Family::SStrictEpi => {
            let gens: Vec<GeneratorName> = sym.iter().flat_map(|&x| [l(x), r(x)]).collect();
            words_over(&gens, 1, bound)
                .into_iter()
                .filter(|w| is_strict_epi_block(&sym, w))
                .collect()
        }
    };
    let mut members = Vec::with_capacity(words.len());
    for w in words {
        let name: String = w.iter().map(|g| g.to_string()).collect();
        let m = crate::morphism::compose_names(a, &w)?;
        members.push((name, m));
    }
    let set_name = if fam.family.is_parametric() {
        format!("{}:{bound}", fam.family)
    } else {
        fam.family.to_string()
    };
    SubstitutionSet::new(&set_name, a, members)
}

fn is_strict_epi_block(sym: &[char], w: &[GeneratorName]) -> bool {
    let has_l = w.iter().any(|g| matches!(g, GeneratorName::L(_)));
    let seen: BTreeSet<char> = w.iter().flat_map(|g| g.symbols()).collect();
    has_l && sym.iter().all(|x| seen.contains(x))
}

/// All words over `gens` with length in `min..=max`, shortest first.
fn words_over(gens: &[GeneratorName], min: usize, max: usize) -> Vec<Vec<GeneratorName>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<GeneratorName>> = vec![Vec::new()];
    for len in 0..=max {
        if len >= min {
            out.extend(layer.iter().cloned());
        }
        if len == max {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                gens.iter().map(move |g| {
                    let mut v = w.clone();
                    v.push(g.clone());
                    v
                })
            })
            .collect();
    }
    out
}

/// Outcome of [`validate_directive_for_family`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub valid: bool,
    pub reason: String,
}

impl Validation {
    fn ok(reason: impl Into<String>) -> Self {
        Validation {
            valid: true,
            reason: reason.into(),
        }
    }

    fn no(reason: impl Into<String>) -> Self {
        Validation {
            valid: false,
            reason: reason.into(),
        }
    }
}

/// Checks that an eventually periodic directive over single generators is a
/// directive of the family: every generator is allowed, blocks line up over
/// preperiod and period, and the period meets the family's frequency condition.
pub fn validate_directive_for_family(spec: &DirectiveSpec, fam: &FamilyDescriptor) -> Validation {
    if spec.alphabet() != &fam.alphabet {
        return Validation::no(format!(
            "directive alphabet {} differs from family alphabet {}",
            spec.alphabet(),
            fam.alphabet
        ));
    }
    if spec.period().is_empty() {
        return Validation::no("empty period");
    }
    let sym = fam.alphabet.symbols().to_vec();
    let all: Vec<&GeneratorName> = spec.preperiod().iter().chain(spec.period()).collect();
    let period = spec.period();
    let allowed = |g: &GeneratorName| match fam.family {
        Family::LFamily | Family::LStrictStand => matches!(g, GeneratorName::L(_)),
        Family::RFamily => matches!(g, GeneratorName::R(_)),
        _ => g.is_lr(),
    };
    if let Some(bad) = all.iter().find(|g| !allowed(g)) {
        return Validation::no(format!("generator {bad} is not allowed in {}", fam.family));
    }
    if fam.family == Family::SLynd {
        if let Some(bad) = all
            .iter()
            .find(|g| **g != &GeneratorName::L(sym[0]) && **g != &GeneratorName::R(sym[1]))
        {
            return Validation::no(format!(
                "generator {bad} is not L{} or R{}",
                sym[0], sym[1]
            ));
        }
    }
    match fam.family {
        Family::SBal | Family::LFamily | Family::RFamily | Family::LRFamily => {
            Validation::ok("all generators belong to the family")
        }
        Family::SSturm => {
            for (i, kind) in [(0, "a-type"), (1, "b-type")] {
                if !period.iter().any(|g| g.symbols() == vec![sym[i]]) {
                    return Validation::no(format!("no {kind} generator in period"));
                }
            }
            Validation::ok("period contains an a-type and a b-type generator")
        }
        Family::SStrictEpi => {
            if !period.iter().any(|g| matches!(g, GeneratorName::L(_))) {
                return Validation::no("no L generator in period");
            }
            if let Some(x) = sym
                .iter()
                .find(|x| !period.iter().any(|g| g.symbols() == vec![**x]))
            {
                return Validation::no(format!("no L{x} or R{x} in period"));
            }
            Validation::ok("period contains an L generator and a generator for every letter")
        }
        Family::RStarL => {
            if !period.iter().any(|g| matches!(g, GeneratorName::L(_))) {
                return Validation::no("no L generator in period, so the last R* block never closes");
            }
            Validation::ok("every block is an R-word followed by one L")
        }
        Family::SLynd => check_blocks(spec, 0u8, |state, g| {
            let is_l = matches!(g, GeneratorName::L(_));
            // 0: between blocks, 1: inside L_a⁺, 2: inside R_b⁺
            match (state, is_l) {
                (0, true) => Some((1, false)),
                (0, false) => Some((2, false)),
                (1, true) => Some((1, false)),
                (1, false) => Some((0, true)),
                (2, false) => Some((2, false)),
                (2, true) => Some((0, true)),
                _ => None,
            }
        }),
        Family::LStrictStand => {
            let full: BTreeSet<char> = sym.iter().copied().collect();
            check_blocks(spec, BTreeSet::<char>::new(), |seen, g| {
                let mut seen = seen.clone();
                seen.extend(g.symbols());
                if seen == full {
                    Some((BTreeSet::new(), true))
                } else {
                    Some((seen, false))
                }
            })
        }
    }
}

/// Runs a block automaton over `pre · period^ω`. `step` returns the next state
/// and whether a block closed. Valid when no step is rejected and blocks keep
/// closing inside the eventual cycle.
fn check_blocks<S: Clone + Eq>(
    spec: &DirectiveSpec,
    start: S,
    step: impl Fn(&S, &GeneratorName) -> Option<(S, bool)>,
) -> Validation {
    let mut state = start;
    for g in spec.preperiod() {
        match step(&state, g) {
            Some((s, _)) => state = s,
            None => return Validation::no(format!("preperiod does not split into blocks at {g}")),
        }
    }
    let mut boundary: Vec<S> = Vec::new();
    let mut closed: Vec<bool> = Vec::new();
    loop {
        if let Some(pos) = boundary.iter().position(|s| *s == state) {
            return if closed[pos..].iter().any(|c| *c) {
                Validation::ok("preperiod and period split into blocks of the family")
            } else {
                Validation::no("the period never completes a block")
            };
        }
        boundary.push(state.clone());
        let mut any = false;
        for g in spec.period() {
            match step(&state, g) {
                Some((s, c)) => {
                    state = s;
                    any |= c;
                }
                None => {
                    return Validation::no(format!("period does not split into blocks at {g}"))
                }
            }
        }
        closed.push(any);
    }
}

/// Result of [`normalize_directive`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    /// Chain letter at the end of the preperiod used to build the desubstituted words.
    pub chain: char,
    /// `σ'_1 … σ'_depth`.
    pub normalized: Vec<GeneratorName>,
    /// First letter of each normalized desubstituted word `w'_k`, for `k < depth`.
    pub witness_first_letters: Vec<char>,
    /// `n_k` with `w_k = first(w_k)^{n_k} w'_k`, for `k ≤ depth`.
    pub run_lengths: Vec<usize>,
    /// `(start, length)` of a repetition of the rewriting state
    /// (phase, pending run length, first letter), when one was seen.
    pub cycle: Option<(usize, usize)>,
}

impl Normalization {
    pub fn depth(&self) -> usize {
        self.normalized.len()
    }

    /// Whether `σ'_{k+1} ≠ R_α` whenever `w'_k` starts with `α`.
    pub fn condition_holds(&self) -> bool {
        self.normalized
            .iter()
            .zip(&self.witness_first_letters)
            .all(|(g, a)| *g != GeneratorName::R(*a))
    }

    /// The normalized sequence as an eventually periodic directive, when a cycle was seen.
    pub fn as_directive(&self, alphabet: &Alphabet) -> Option<Result<DirectiveSpec>> {
        let (start, len) = self.cycle?;
        Some(DirectiveSpec::new(
            alphabet,
            self.normalized[..start].to_vec(),
            self.normalized[start..start + len].to_vec(),
        ))
    }
}

/// Desubstituted words `w_0 … w_depth` along the chain through `chain`,
/// each cut to `len` letters.
pub fn desubstituted_prefixes(
    spec: &DirectiveSpec,
    chain: Letter,
    depth: usize,
    len: usize,
) -> Result<Vec<Vec<Letter>>> {
    spec.require_period()?;
    let (p, q) = (spec.pre_len(), spec.period_len());
    // first boundary index at or after depth
    let top = if depth <= p {
        p
    } else {
        p + (depth - p).div_ceil(q) * q
    };
    // chain letter at `top`: walk the cycle of the chain letter backwards
    let g = spec.period_composition()?;
    let first = g.first_letter_map();
    let (_, cycle_len) = periodic_points(&first)
        .into_iter()
        .find(|(c, _)| *c == chain)
        .ok_or_else(|| {
            Error::Precondition(format!(
                "'{}' is not a chain letter",
                spec.alphabet().symbol(chain)
            ))
        })?;
    let j = (top - p) / q;
    let back = (cycle_len - j % cycle_len) % cycle_len;
    let mut top_letter = chain;
    for _ in 0..back {
        top_letter = first[top_letter.index()];
    }
    let tail = DirectiveSpec::with_registry(
        spec.alphabet(),
        Vec::new(),
        spec.period().to_vec(),
        spec.registry().clone(),
    )?;
    let mut words = vec![Vec::new(); top + 1];
    words[top] = generate_prefix(&tail, len, Some(top_letter))?.into_letters();
    for k in (0..top).rev() {
        words[k] = spec.morphism_at(k).apply_truncated(&words[k + 1], len);
    }
    words.truncate(depth + 1);
    Ok(words)
}

/// Rewrites an `L ∪ R` directive, level by level, so that no `R_α` is applied
/// to a desubstituted word starting with `α`.
///
/// The desubstituted words are the limit words along the Kőnig chain `chain`
/// (default: the least chain letter). `n_k` tracks how many leading copies of
/// `first(w_k)` the normalized word `w'_k` has dropped.
pub fn normalize_directive(
    spec: &DirectiveSpec,
    depth: usize,
    chain: Option<Letter>,
) -> Result<Normalization> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    if let Some(bad) = spec
        .preperiod()
        .iter()
        .chain(spec.period())
        .find(|g| !g.is_lr())
    {
        return Err(Error::Precondition(format!(
            "normalization works on L and R generators only, found {bad}"
        )));
    }
    let chains = konig_chains(spec)?;
    let alphabet = spec.alphabet().clone();
    let chain = match chain {
        Some(c) => c,
        None => alphabet.require(chains[0].letter)?,
    };
    let words = desubstituted_prefixes(spec, chain, depth, depth + 2)?;
    let sym = |l: Letter| alphabet.symbol(l);

    let mut normalized = Vec::with_capacity(depth);
    let mut witness = Vec::with_capacity(depth);
    let mut runs = vec![0usize];
    let mut seen: BTreeMap<(usize, usize, Letter), usize> = BTreeMap::new();
    let mut cycle = None;
    for k in 0..depth {
        let n = runs[k];
        let w = &words[k];
        let alpha = w[0];
        if k >= spec.pre_len() && cycle.is_none() {
            let state = (spec.phase(k), n, alpha);
            if let Some(&start) = seen.get(&state) {
                cycle = Some((start, k - start));
            } else {
                seen.insert(state, k);
            }
        }
        witness.push(sym(w[n]));
        let sigma = spec.name_at(k).clone();
        let (x, is_l) = match &sigma {
            GeneratorName::L(x) => (alphabet.require(*x)?, true),
            GeneratorName::R(x) => (alphabet.require(*x)?, false),
            _ => unreachable!("checked above"),
        };
        let (out, next) = if n == 0 {
            if !is_l && x == alpha {
                (GeneratorName::L(sym(alpha)), 1)
            } else {
                (sigma, 0)
            }
        } else {
            let beta = w[n];
            match (is_l, x == alpha) {
                (true, true) if beta != alpha => (GeneratorName::R(sym(alpha)), n - 1),
                (true, true) => (GeneratorName::L(sym(alpha)), n),
                (true, false) => {
                    return Err(Error::Precondition(format!(
                        "L{} cannot produce a word starting with {}{}",
                        sym(x),
                        sym(alpha),
                        sym(alpha)
                    )))
                }
                (false, false) => (GeneratorName::L(sym(x)), 1),
                (false, true) if beta != alpha => (GeneratorName::R(sym(alpha)), n),
                (false, true) => (GeneratorName::L(sym(alpha)), n + 1),
            }
        };
        normalized.push(out);
        runs.push(next);
    }
    Ok(Normalization {
        chain: sym(chain),
        normalized,
        witness_first_letters: witness,
        run_lengths: runs,
        cycle,
    })
}

/// Prefix of length `n` of `σ'_1 ⋯ σ'_D(w'_D)`, which equals the original limit word.
pub fn normalized_prefix(spec: &DirectiveSpec, norm: &Normalization, n: usize) -> Result<Word> {
    let alphabet = spec.alphabet();
    let depth = norm.depth();
    let chain = alphabet.require(norm.chain)?;
    let skip = norm.run_lengths[depth];
    let words = desubstituted_prefixes(spec, chain, depth, n + skip)?;
    let mut w: Vec<Letter> = words[depth][skip..].to_vec();
    for g in norm.normalized.iter().rev() {
        w = g.to_morphism(alphabet)?.apply_truncated(&w, n);
    }
    w.truncate(n);
    Ok(Word::from_letters(alphabet, w))
}

/// Text form of a normalization.
pub fn render_normalization(norm: &Normalization, alphabet: &Alphabet) -> String {
    let names: Vec<String> = norm.normalized.iter().map(|g| g.to_string()).collect();
    let mut out = format!("chain: {}\nnormalized: {}\n", norm.chain, names.join(" "));
    out.push_str(&format!(
        "first letters: {}\n",
        norm.witness_first_letters.iter().collect::<String>()
    ));
    match norm.as_directive(alphabet) {
        Some(Ok(d)) => out.push_str(&format!("eventually periodic: {d}\n")),
        _ => out.push_str("eventually periodic: not detected\n"),
    }
    out.push_str(&format!(
        "condition: {}\n",
        if norm.condition_holds() { "holds" } else { "violated" }
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::render;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(text: &str) -> DirectiveSpec {
        DirectiveSpec::parse(text).unwrap()
    }

    fn gen(text: &str, n: usize) -> String {
        generate_prefix(&spec(text), n, None).unwrap().to_string()
    }

    fn gen_seed(text: &str, n: usize, seed: char) -> Result<String> {
        let s = spec(text);
        let l = s.alphabet().require(seed).unwrap();
        generate_prefix(&s, n, Some(l)).map(|w| w.to_string())
    }

    /// Standard episturmian word with the given directive, by iterated palindromic closure.
    fn palindromic_closure_word(directive: &[char], n: usize) -> String {
        let mut s: Vec<char> = Vec::new();
        for x in directive.iter().cycle() {
            if s.len() >= n {
                break;
            }
            s.push(*x);
            let is_pal = |v: &[char]| v.iter().eq(v.iter().rev());
            let k = (0..s.len()).find(|&i| is_pal(&s[i..])).unwrap();
            let head: Vec<char> = s[..k].iter().rev().copied().collect();
            s.extend(head);
        }
        s[..n].iter().collect()
    }

    /// `σ_1 ⋯ σ_k(a)` for k large, straight from the definition.
    fn brute_limit(spec: &DirectiveSpec, seed: Letter, k: usize, n: usize) -> String {
        let mut w = vec![seed];
        for i in (0..k).rev() {
            w = spec.morphism_at(i).apply_truncated(&w, 4 * n + 8);
        }
        render(spec.alphabet(), &w[..n.min(w.len())])
    }

    #[test]
    fn grammar() {
        let s = spec("La Rb (La Lb)^w");
        assert_eq!(s.to_string(), "La Rb (La Lb)^w");
        assert_eq!(s.pre_len(), 2);
        assert_eq!(s.name_at(5), &GeneratorName::L('b'));
        assert_eq!(spec("(La Lb Lc)^w").alphabet().len(), 3);
        assert_eq!(spec("(La)^w").alphabet().len(), 2);
        assert!(DirectiveSpec::parse("(La Lb").is_err());
        assert!(DirectiveSpec::parse("(La)^w Lb").is_err());
        assert!(DirectiveSpec::parse("(Lz foo)^w").is_err());
        assert_eq!(spec("La Lb").period_len(), 0);
    }

    #[test]
    fn generation_examples() {
        assert_eq!(gen("(La Lb)^w", 8), "abaababa");
        assert_eq!(gen_seed("(La)^w", 5, 'b').unwrap(), "aaaaa");
        let trib = palindromic_closure_word(&['a', 'b', 'c'], 500);
        assert_eq!(gen("(La Lb Lc)^w", 500), trib);
        assert_eq!(gen("(La Lb Lc)^w", 10), &trib[..10]);
        assert_eq!(gen("(Rb)^w", 4), "abbb");
        assert_eq!(gen_seed("(Rb)^w", 4, 'b').unwrap(), "bbbb");
        assert!(generate_prefix(&spec("La Lb"), 4, None).is_err());
    }

    #[test]
    fn generation_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let toks = ["La", "Lb", "Ra", "Rb"];
        for _ in 0..50 {
            let pre: Vec<&str> = (0..rng.gen_range(0..3)).map(|_| toks[rng.gen_range(0..4)]).collect();
            let per: Vec<&str> = (0..rng.gen_range(1..4)).map(|_| toks[rng.gen_range(0..4)]).collect();
            let s = spec(&format!("{} ({})^w", pre.join(" "), per.join(" ")));
            for c in konig_chains(&s).unwrap() {
                let l = s.alphabet().require(c.letter).unwrap();
                let got = generate_prefix(&s, 60, Some(l)).unwrap().to_string();
                // the chain letter at a far boundary
                let q = s.period_len();
                let g = s.period_composition().unwrap().first_letter_map();
                let j = 60 * c.cycle_len;
                let mut top = l;
                for _ in 0..(c.cycle_len - j % c.cycle_len) % c.cycle_len {
                    top = g[top.index()];
                }
                let brute = brute_limit(&s, top, s.pre_len() + j * q, 60);
                if c.expanding {
                    assert_eq!(got, brute, "{s}");
                } else {
                    assert!(got.starts_with(&brute), "{s}");
                }
            }
        }
    }

    #[test]
    fn prefix_stable() {
        let s = spec("Rb (La Rb Lb)^w");
        let long = generate_prefix(&s, 300, None).unwrap();
        for n in [1, 7, 64, 299] {
            assert!(generate_prefix(&s, n, None).unwrap().is_prefix_of(&long));
        }
    }

    #[test]
    fn chains() {
        let c = konig_chains(&spec("(Rb)^w")).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c[0].expanding && !c[1].expanding);
        let abc = Alphabet::latin(2).unwrap();
        let f2 = Morphism::from_images(&abc, &["ba", "ab"]).unwrap();
        let reg = BTreeMap::from([("f2".to_string(), f2)]);
        let s = DirectiveSpec::parse_with("(f2)^w", None, &reg).unwrap();
        let c = konig_chains(&s).unwrap();
        assert_eq!(c.iter().map(|c| c.cycle_len).collect::<Vec<_>>(), vec![2, 2]);
    }

    fn members(fam: Family, n: usize, size: usize) -> Vec<String> {
        let a = Alphabet::latin(size).unwrap();
        let d = FamilyDescriptor::new(fam, &a).unwrap();
        family_members(&d, n).unwrap().names()
    }

    #[test]
    fn family_instances() {
        assert_eq!(members(Family::SBal, 1, 2), vec!["La", "Lb", "Ra", "Rb"]);
        let mut lynd = members(Family::SLynd, 2, 2);
        lynd.sort();
        assert_eq!(lynd, vec!["LaLaRb", "LaRb", "RbLa", "RbRbLa"]);
        let mut strict = members(Family::LStrictStand, 3, 2);
        strict.sort();
        assert_eq!(
            strict,
            vec!["LaLaLaLb", "LaLaLb", "LaLb", "LbLa", "LbLbLa", "LbLbLbLa"]
        );
        assert_eq!(members(Family::LRFamily, 1, 3).len(), 6);
        assert_eq!(members(Family::SSturm, 2, 2).len(), 2 * (2 + 4) * 2);
        // R-words of length 0..=1 over 2 letters, times 2 final L's
        assert_eq!(members(Family::RStarL, 1, 2).len(), 6);
        let epi = members(Family::SStrictEpi, 2, 2);
        assert!(epi.contains(&"LaRb".to_string()) && !epi.contains(&"RaRb".to_string()));
        let l3 = members(Family::LStrictStand, 2, 3);
        assert!(l3.contains(&"LaLbLc".to_string()) && !l3.contains(&"LaLaLc".to_string()));
        assert!(FamilyDescriptor::new(Family::SBal, &Alphabet::latin(3).unwrap()).is_err());
    }

    fn validate(text: &str, fam: Family) -> Validation {
        let s = spec(text);
        let d = FamilyDescriptor::new(fam, s.alphabet()).unwrap();
        validate_directive_for_family(&s, &d)
    }

    #[test]
    fn validation() {
        assert!(validate("(La Lb)^w", Family::SSturm).valid);
        let v = validate("(La)^w", Family::SSturm);
        assert!(!v.valid);
        assert_eq!(v.reason, "no b-type generator in period");
        assert!(validate("(Ra Ra Lb)^w", Family::RStarL).valid);
        assert!(!validate("(Ra)^w", Family::RStarL).valid);
        assert!(validate("La (Rb La La Rb)^w", Family::SLynd).valid);
        assert!(validate("(La Rb Rb)^w", Family::SLynd).valid);
        assert!(!validate("(La)^w", Family::SLynd).valid);
        assert!(!validate("(Lb Ra)^w", Family::SLynd).valid);
        assert!(validate("(La La Lb)^w", Family::LStrictStand).valid);
        assert!(!validate("(La)^w", Family::LStrictStand).valid);
        assert!(validate("(La Rb)^w", Family::SStrictEpi).valid);
        assert!(!validate("(Ra Rb)^w", Family::SStrictEpi).valid);
        assert!(!validate("(La Rb)^w", Family::LFamily).valid);
    }

    #[test]
    fn normalization_examples() {
        let s = spec("(Ra)^w");
        let n = normalize_directive(&s, 10, None).unwrap();
        assert!(n.normalized.iter().all(|g| *g == GeneratorName::L('a')));
        assert!(n.condition_holds());

        let s = spec("(La Lb)^w");
        let n = normalize_directive(&s, 10, None).unwrap();
        assert_eq!(n.normalized, GeneratorName::parse_word("La Lb La Lb La Lb La Lb La Lb"));

        let s = spec("Rb (La)^w");
        let n = normalize_directive(&s, 6, None).unwrap();
        assert_eq!(n.normalized[0], GeneratorName::R('b'));
        assert_eq!(
            normalized_prefix(&s, &n, 200).unwrap(),
            generate_prefix(&s, 200, None).unwrap()
        );
        assert!(normalize_directive(&spec("(Eab)^w"), 3, None).is_err());
    }

    #[test]
    fn normalization_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let size = rng.gen_range(2..=3);
            let sym = |i: usize| (b'a' + i as u8) as char;
            let mut tok = || {
                let x = sym(rng.gen_range(0..size));
                if rng.gen_bool(0.5) { format!("L{x}") } else { format!("R{x}") }
            };
            let pre: Vec<String> = (0..2).map(|_| tok()).collect();
            let per: Vec<String> = (0..3).map(|_| tok()).collect();
            let a = Alphabet::latin(size).unwrap();
            let s = DirectiveSpec::parse_with(
                &format!("{} ({})^w", pre.join(" "), per.join(" ")),
                Some(&a),
                &BTreeMap::new(),
            )
            .unwrap();
            let n = normalize_directive(&s, 20, None).unwrap();
            assert!(n.condition_holds(), "{s}");
            assert_eq!(
                normalized_prefix(&s, &n, 300).unwrap(),
                generate_prefix(&s, 300, None).unwrap(),
                "{s}"
            );
        }
    }
}
