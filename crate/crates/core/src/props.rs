//! Word properties checked on finite prefixes.
//!
//! Properties of the finite word itself (balance) can hold; properties of the
//! infinite word behind a prefix are reported as `Fails` with a witness or as
//! `Unknown`. Every witness can be re-checked with [`verify_witness`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verdict::{Verdict, Witness};
use crate::word::{render, Alphabet, Letter, Word};

/// Left special factors of one length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialLevel {
    pub length: usize,
    pub factors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub special_factors: Vec<SpecialLevel>,
    /// Detected ultimate period as `(preperiod length, period)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<(usize, String)>,
    pub params: BTreeMap<String, usize>,
}

impl PropertyReport {
    fn new(property: &str, verdict: Verdict, params: &[(&str, usize)]) -> Self {
        PropertyReport {
            property: property.to_string(),
            verdict,
            special_factors: Vec::new(),
            period: None,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.property, self.verdict)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, " [{}]", ps.join(", "))?;
        }
        if let Some((p, q)) = &self.period {
            write!(f, "\n  preperiod {p}, period {q}")?;
        }
        for level in &self.special_factors {
            write!(f, "\n  length {}: {{{}}}", level.length, level.factors.join(", "))?;
        }
        Ok(())
    }
}

fn text(alphabet: &Alphabet, letters: &[Letter]) -> String {
    render(alphabet, letters)
}

/// Balance by per-length extremes of window letter counts.
pub fn is_balanced(w: &Word) -> PropertyReport {
    let l = w.letters();
    let n = l.len();
    let k = w.alphabet().len();
    let mut verdict = Verdict::Holds;
    let mut counts = vec![0usize; k];
    'len: for len in 1..n {
        counts.iter_mut().for_each(|c| *c = 0);
        for &x in &l[..len] {
            counts[x.index()] += 1;
        }
        // per letter: (min, start of min, max, start of max)
        let mut ext: Vec<(usize, usize, usize, usize)> = counts.iter().map(|&c| (c, 0, c, 0)).collect();
        for start in 1..=n - len {
            counts[l[start - 1].index()] -= 1;
            counts[l[start + len - 1].index()] += 1;
            for (c, e) in counts.iter().zip(ext.iter_mut()) {
                if *c < e.0 {
                    e.0 = *c;
                    e.1 = start;
                }
                if *c > e.2 {
                    e.2 = *c;
                    e.3 = start;
                }
            }
        }
        for (x, &(lo, lo_at, hi, hi_at)) in ext.iter().enumerate() {
            if hi - lo >= 2 {
                verdict = Verdict::fails(Witness::FactorPair {
                    u: text(w.alphabet(), &l[hi_at..hi_at + len]),
                    u_start: hi_at,
                    v: text(w.alphabet(), &l[lo_at..lo_at + len]),
                    v_start: lo_at,
                    letter: w.alphabet().symbol(Letter::new(x)),
                });
                break 'len;
            }
        }
    }
    PropertyReport::new("balanced", verdict, &[("length", n)])
}

/// Balance by comparing every pair of factors of equal length. Factors with the
/// same letter counts are compared once, through their first occurrence.
pub fn is_balanced_oracle(w: &Word) -> PropertyReport {
    let l = w.letters();
    let n = l.len();
    let k = w.alphabet().len();
    let mut prefix = vec![vec![0usize; k]; n + 1];
    for (i, x) in l.iter().enumerate() {
        prefix[i + 1] = prefix[i].clone();
        prefix[i + 1][x.index()] += 1;
    }
    let mut verdict = Verdict::Holds;
    'len: for len in 1..n {
        let mut seen: Vec<(Vec<usize>, usize)> = Vec::new();
        for start in 0..=n - len {
            let v: Vec<usize> = (0..k).map(|x| prefix[start + len][x] - prefix[start][x]).collect();
            if !seen.iter().any(|(u, _)| *u == v) {
                seen.push((v, start));
            }
        }
        for (i, (u, us)) in seen.iter().enumerate() {
            for (v, vs) in &seen[i + 1..] {
                if let Some(x) = (0..k).find(|&x| u[x].abs_diff(v[x]) >= 2) {
                    let (u_start, v_start) = if u[x] > v[x] { (*us, *vs) } else { (*vs, *us) };
                    verdict = Verdict::fails(Witness::FactorPair {
                        u: text(w.alphabet(), &l[u_start..u_start + len]),
                        u_start,
                        v: text(w.alphabet(), &l[v_start..v_start + len]),
                        v_start,
                        letter: w.alphabet().symbol(Letter::new(x)),
                    });
                    break 'len;
                }
            }
        }
    }
    PropertyReport::new("balanced", verdict, &[("length", n)])
}

/// Left special factors of each length `1..=maxlen`, sorted. The empty word is left out.
pub fn left_special_report(w: &Word, maxlen: usize) -> Result<Vec<SpecialLevel>> {
    if maxlen > w.len() {
        return Err(Error::Precondition(format!("maxlen {maxlen} exceeds the word length {}", w.len())));
    }
    let l = w.letters();
    let n = l.len();
    let mut out = Vec::with_capacity(maxlen);
    for len in 1..=maxlen {
        let mut ext: HashMap<&[Letter], u32> = HashMap::new();
        for start in 1..=n - len {
            *ext.entry(&l[start..start + len]).or_default() |= 1 << l[start - 1].index();
        }
        let mut factors: Vec<&[Letter]> = ext
            .into_iter()
            .filter(|(_, mask)| mask.count_ones() >= 2)
            .map(|(f, _)| f)
            .collect();
        factors.sort();
        out.push(SpecialLevel {
            length: len,
            factors: factors.iter().map(|f| text(w.alphabet(), f)).collect(),
        });
    }
    Ok(out)
}

/// At most one left special factor per length `1..=maxlen`.
pub fn special_factor_check(w: &Word, maxlen: usize) -> Result<PropertyReport> {
    let levels = left_special_report(w, maxlen)?;
    let verdict = levels
        .iter()
        .find(|lv| lv.factors.len() >= 2)
        .map(|lv| {
            Verdict::fails(Witness::SpecialFactors {
                length: lv.length,
                factors: lv.factors.clone(),
            })
        })
        .unwrap_or(Verdict::Unknown { depth: maxlen });
    let mut r = PropertyReport::new("special", verdict, &[("maxlen", maxlen)]);
    r.special_factors = levels;
    Ok(r)
}

/// Closure under reversal for factors of length `1..=maxlen`. A missing
/// reversal counts only if the factor last occurs at least `maxlen` letters
/// before the end of the word.
pub fn reversal_closure_check(w: &Word, maxlen: usize) -> Result<PropertyReport> {
    if maxlen > w.len() {
        return Err(Error::Precondition(format!("maxlen {maxlen} exceeds the word length {}", w.len())));
    }
    let l = w.letters();
    let n = l.len();
    let mut verdict = Verdict::Unknown { depth: maxlen };
    'len: for len in 1..=maxlen {
        let mut last_end: BTreeMap<&[Letter], usize> = BTreeMap::new();
        for start in 0..=n - len {
            last_end.insert(&l[start..start + len], start + len);
        }
        for (f, &end) in &last_end {
            if n - end < maxlen {
                continue;
            }
            let rev: Vec<Letter> = f.iter().rev().copied().collect();
            if !last_end.contains_key(rev.as_slice()) {
                verdict = Verdict::fails(Witness::MissingReversal {
                    factor: text(w.alphabet(), f),
                    reversal: text(w.alphabet(), &rev),
                    last_end: end,
                });
                break 'len;
            }
        }
    }
    Ok(PropertyReport::new("reversal", verdict, &[("maxlen", maxlen)]))
}

/// Necessary conditions for an episturmian word. Never `Holds`.
pub fn episturmian_necessary(w: &Word, maxlen: usize) -> Result<PropertyReport> {
    if 2 * maxlen > w.len() {
        return Err(Error::Precondition(format!(
            "maxlen {maxlen} exceeds half the word length {}",
            w.len()
        )));
    }
    let special = special_factor_check(w, maxlen)?;
    let verdict = if special.verdict.is_fails() {
        special.verdict.clone()
    } else {
        reversal_closure_check(w, maxlen)?.verdict
    };
    let mut r = PropertyReport::new("episturmian", verdict, &[("maxlen", maxlen)]);
    r.special_factors = special.special_factors;
    Ok(r)
}

/// Every left special factor of length `≤ maxlen` is a prefix.
pub fn is_lsp_prefixal(w: &Word, maxlen: usize) -> Result<PropertyReport> {
    let levels = left_special_report(w, maxlen)?;
    let first_bad = levels.iter().find_map(|lv| {
        lv.factors
            .iter()
            .find(|f| !text(w.alphabet(), w.letters()).starts_with(f.as_str()))
            .cloned()
    });
    let verdict = match first_bad {
        Some(factor) => Verdict::fails(Witness::NonPrefixSpecial { factor }),
        None => Verdict::Unknown { depth: maxlen },
    };
    let mut r = PropertyReport::new("lsp", verdict, &[("maxlen", maxlen)]);
    r.special_factors = levels;
    Ok(r)
}

/// Looks for a factor of length `k`, occurring before the last `margin`
/// letters, that occurs only once in the whole word.
pub fn is_recurrent_bounded(w: &Word, k: usize, margin: usize) -> Result<PropertyReport> {
    let n = w.len();
    if k == 0 || k + margin > n {
        return Err(Error::Precondition(format!(
            "need 1 ≤ k and k + margin ≤ |w|, got k={k}, margin={margin}, |w|={n}"
        )));
    }
    let l = w.letters();
    let mut occ: HashMap<&[Letter], (usize, usize)> = HashMap::new();
    for start in 0..=n - k {
        occ.entry(&l[start..start + k]).or_insert((0, start)).0 += 1;
    }
    let verdict = (0..=n - margin - k)
        .find(|&s| occ[&l[s..s + k]].0 == 1)
        .map(|s| {
            Verdict::fails(Witness::UniqueOccurrence {
                factor: text(w.alphabet(), &l[s..s + k]),
                position: s,
            })
        })
        .unwrap_or(Verdict::Unknown { depth: k });
    Ok(PropertyReport::new("recurrent", verdict, &[("k", k), ("margin", margin)]))
}

/// Compares every proper suffix with the word. A suffix that is a prefix of
/// the word leaves the comparison open.
pub fn is_lyndon_bounded(w: &Word) -> Result<PropertyReport> {
    let l = w.letters();
    let n = l.len();
    if n < 2 {
        return Err(Error::Precondition("need at least 2 letters".into()));
    }
    let mut verdict = Verdict::Unknown { depth: n };
    for start in 1..n {
        let offset = (0..n - start).find(|&j| l[start + j] != l[j]);
        if let Some(j) = offset {
            if l[start + j] < l[j] {
                verdict = Verdict::fails(Witness::SmallerSuffix { start, offset: j });
                break;
            }
        }
    }
    Ok(PropertyReport::new("lyndon", verdict, &[("length", n)]))
}

/// Least preperiod (then least period) whose periodic tail runs to the end of
/// `w`, repeats the period at least three times and covers at least half of `w`.
/// Without the last condition every long Sturmian prefix would end in some cube.
pub fn detect_ultimate_period(w: &Word) -> Result<Option<(usize, Word)>> {
    let n = w.len();
    if n < 4 {
        return Err(Error::Precondition("need at least 4 letters".into()));
    }
    for p in 0..=n / 2 {
        let tail = w.slice(p, n);
        let q = tail.smallest_period();
        if 3 * q <= n - p {
            return Ok(Some((p, w.slice(p, p + q))));
        }
    }
    Ok(None)
}

/// Ultimate period as a report: `Holds` when a period is detected.
pub fn period_check(w: &Word) -> Result<PropertyReport> {
    let found = detect_ultimate_period(w)?;
    let verdict = if found.is_some() {
        Verdict::Holds
    } else {
        Verdict::Unknown { depth: w.len() }
    };
    let mut r = PropertyReport::new("period", verdict, &[("length", w.len())]);
    r.period = found.map(|(p, q)| (p, q.to_string()));
    Ok(r)
}

fn occurrences(hay: &[char], needle: &[char]) -> Vec<usize> {
    if needle.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - needle.len())
        .filter(|&i| &hay[i..i + needle.len()] == needle)
        .collect()
}

/// Re-checks a witness against the raw word, with plain string scans.
/// `None` for witnesses that need more than the word (`NotFixed`).
pub fn verify_witness(w: &Word, witness: &Witness) -> Option<bool> {
    let s: Vec<char> = w.to_string().chars().filter(|_| !w.is_empty()).collect();
    let chars = |x: &str| x.chars().collect::<Vec<char>>();
    let occurs_at = |f: &[char], at: usize| s.get(at..at + f.len()) == Some(f);
    let left_ext = |f: &[char]| {
        let mut xs: Vec<char> = occurrences(&s, f)
            .into_iter()
            .filter(|&i| i > 0)
            .map(|i| s[i - 1])
            .collect();
        xs.sort();
        xs.dedup();
        xs.len()
    };
    Some(match witness {
        Witness::FactorPair {
            u,
            u_start,
            v,
            v_start,
            letter,
        } => {
            let (u, v) = (chars(u), chars(v));
            let cnt = |x: &[char]| x.iter().filter(|c| *c == letter).count();
            u.len() == v.len()
                && occurs_at(&u, *u_start)
                && occurs_at(&v, *v_start)
                && cnt(&u).abs_diff(cnt(&v)) >= 2
        }
        Witness::SpecialFactors { length, factors } => {
            factors.len() >= 2
                && factors.iter().all(|f| {
                    let f = chars(f);
                    f.len() == *length && left_ext(&f) >= 2
                })
        }
        Witness::MissingReversal {
            factor,
            reversal,
            last_end,
        } => {
            let f = chars(factor);
            let r = chars(reversal);
            let rev: Vec<char> = f.iter().rev().copied().collect();
            r == rev
                && occurrences(&s, &r).is_empty()
                && occurrences(&s, &f).last().map(|i| i + f.len()) == Some(*last_end)
        }
        Witness::NonPrefixSpecial { factor } => {
            let f = chars(factor);
            left_ext(&f) >= 2 && !s.starts_with(&f)
        }
        Witness::UniqueOccurrence { factor, position } => {
            occurrences(&s, &chars(factor)) == vec![*position]
        }
        Witness::SmallerSuffix { start, offset } => {
            start + offset < s.len()
                && *start > 0
                && s[*start..start + offset] == s[..*offset]
                && w.alphabet().letter(s[start + offset]).map(|l| l.index())
                    < w.alphabet().letter(s[*offset]).map(|l| l.index())
        }
        Witness::NotFixed { .. } => return None,
    })
}
