//! Desubstitution of finite prefixes, limit points of directive sequences,
//! the StabLet letter graph and fixed points of single morphisms.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphism::{GeneratorName, Morphism};
use crate::sadic::{konig_chains, DirectiveSpec, KonigChain};
use crate::verdict::{Verdict, Witness};
use crate::word::{
    render, Alphabet, EventuallyPeriodicWord, Letter, PrefixStream, StreamSource, Word,
};

/// Default node budget of [`directive_parses`].
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// A finite, named set of morphisms over one alphabet, ordered by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionSet {
    name: String,
    alphabet: Alphabet,
    members: Vec<(String, Morphism)>,
}

impl SubstitutionSet {
    pub fn new(name: &str, alphabet: &Alphabet, mut members: Vec<(String, Morphism)>) -> Result<Self> {
        members.sort_by(|a, b| a.0.cmp(&b.0));
        for w in members.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Precondition(format!("duplicate member name '{}'", w[0].0)));
            }
        }
        for (n, m) in &members {
            if m.alphabet() != alphabet {
                return Err(Error::AlphabetMismatch(
                    format!("{n} over {}", m.alphabet()),
                    alphabet.to_string(),
                ));
            }
        }
        Ok(SubstitutionSet {
            name: name.to_string(),
            alphabet: alphabet.clone(),
            members,
        })
    }

    /// A set of generators given as tokens, e.g. `["La", "Lb"]`.
    pub fn from_generators(alphabet: &Alphabet, tokens: &[&str]) -> Result<Self> {
        let members = tokens
            .iter()
            .map(|t| {
                let g = GeneratorName::parse(t);
                Ok((g.to_string(), g.to_morphism(alphabet)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&tokens.join(","), alphabet, members)
    }

    pub fn single(name: &str, m: &Morphism) -> Self {
        Self::new(name, m.alphabet(), vec![(name.to_string(), m.clone())]).expect("one member")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn members(&self) -> &[(String, Morphism)] {
        &self.members
    }

    pub fn names(&self) -> Vec<String> {
        self.members.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Morphism> {
        self.members.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// One way of reading a word `w` as a prefix of `σ(preimage)`.
///
/// The last image may stick out past the end of `w`: `consumed` letters of `w`
/// are covered by complete images and the remaining `residue` letters are a
/// proper prefix of the image of the last preimage letter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Parse {
    pub preimage: Word,
    pub consumed: usize,
    pub residue: usize,
}

impl Parse {
    pub fn is_complete(&self) -> bool {
        self.residue == 0
    }
}

/// All parses of `w` by `σ`, including ones whose last image is cut by the end of `w`.
/// Codes that are not uniquely decodable give several parses.
pub fn desubstitute_prefix(w: &Word, sigma: &Morphism) -> Vec<Parse> {
    desubstitute_prefix_limited(w, sigma, usize::MAX).0
}

/// Like [`desubstitute_prefix`], stopping after `limit` parses. The flag reports a cut.
pub fn desubstitute_prefix_limited(w: &Word, sigma: &Morphism, limit: usize) -> (Vec<Parse>, bool) {
    let alphabet = w.alphabet();
    let text = w.letters();
    let n = text.len();
    let k = alphabet.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Parse {
            preimage: w.clone(),
            consumed: 0,
            residue: 0,
        });
        return (out, false);
    }
    let mut pre: Vec<Letter> = Vec::new();
    // frames: (position in w, next letter to try)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    let mut cut = false;
    while let Some(top) = stack.last_mut() {
        let (pos, next) = *top;
        if pos == n {
            out.push(Parse {
                preimage: Word::from_letters(alphabet, pre.clone()),
                consumed: n,
                residue: 0,
            });
            top.1 = k;
        }
        if top.1 >= k {
            stack.pop();
            if !stack.is_empty() {
                pre.pop();
            }
        } else {
            top.1 += 1;
            let x = Letter::new(next);
            let img = sigma.image_letters(x);
            let rest = &text[pos..];
            if img.len() <= rest.len() {
                if rest.starts_with(img) {
                    pre.push(x);
                    stack.push((pos + img.len(), 0));
                }
            } else if img.starts_with(rest) {
                pre.push(x);
                out.push(Parse {
                    preimage: Word::from_letters(alphabet, pre.clone()),
                    consumed: pos,
                    residue: n - pos,
                });
                pre.pop();
            }
        }
        if out.len() >= limit {
            cut = !stack.is_empty();
            break;
        }
    }
    out.sort();
    (out, cut)
}

/// Exact preimages: words `u` with `σ(u) = w`.
fn exact_preimages(w: &[Letter], sigma: &Morphism) -> Vec<Vec<Letter>> {
    let k = sigma.alphabet().len();
    let mut out = Vec::new();
    let mut pre = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some(top) = stack.last_mut() {
        let (pos, next) = *top;
        if pos == w.len() {
            out.push(pre.clone());
            top.1 = k;
        }
        if top.1 >= k {
            stack.pop();
            if !stack.is_empty() {
                pre.pop();
            }
            continue;
        }
        top.1 += 1;
        let img = sigma.image_letters(Letter::new(next));
        if w[pos..].starts_with(img) {
            pre.push(Letter::new(next));
            stack.push((pos + img.len(), 0));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesubNode {
    pub parent: Option<usize>,
    pub depth: usize,
    /// Member applied to reach this node from its parent; `None` at the root.
    pub morphism: Option<String>,
    pub preimage: Word,
    pub consumed: usize,
    pub residue: usize,
    pub children: Vec<usize>,
}

/// Every chain of members `σ_1 … σ_d` (`d ≤ max_depth`) desubstituting a word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesubTree {
    pub root: Word,
    pub set: String,
    pub max_depth: usize,
    pub budget: usize,
    pub truncated: bool,
    pub nodes: Vec<DesubNode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseOutcome {
    /// Some chain reaches the requested depth.
    Found,
    /// No chain reaches the requested depth and exploration was complete.
    Empty,
    /// No chain reached the depth before the node budget ran out.
    Truncated,
}

impl ParseOutcome {
    pub fn exit_code(self) -> i32 {
        match self {
            ParseOutcome::Found => 0,
            ParseOutcome::Empty => 1,
            ParseOutcome::Truncated => 2,
        }
    }
}

/// Builds the tree of directive parses of `w` by members of `set`, down to `depth`.
pub fn directive_parses(w: &Word, set: &SubstitutionSet, depth: usize, budget: usize) -> Result<DesubTree> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    w.alphabet().check_same(set.alphabet())?;
    let mut tree = DesubTree {
        root: w.clone(),
        set: set.name().to_string(),
        max_depth: depth,
        budget,
        truncated: false,
        nodes: vec![DesubNode {
            parent: None,
            depth: 0,
            morphism: None,
            preimage: w.clone(),
            consumed: w.len(),
            residue: 0,
            children: Vec::new(),
        }],
    };
    if budget == 0 {
        tree.truncated = true;
        return Ok(tree);
    }
    // Preorder: each child is explored before its next sibling is created, so
    // one highly ambiguous node cannot spend the whole budget on its own level.
    struct Frame {
        id: usize,
        member: usize,
        pending: std::vec::IntoIter<Parse>,
        cut: bool,
        seen: HashSet<(usize, Vec<Letter>, usize)>,
    }
    let frame = |id| Frame { id, member: 0, pending: Vec::new().into_iter(), cut: false, seen: HashSet::new() };
    let mut stack = vec![frame(0)];
    while let Some(top) = stack.last_mut() {
        let Some(p) = top.pending.next() else {
            if top.cut {
                tree.truncated = true;
                break;
            }
            if top.member == set.len() {
                stack.pop();
                continue;
            }
            let room = budget.saturating_sub(tree.nodes.len());
            let (parses, cut) =
                desubstitute_prefix_limited(&tree.nodes[top.id].preimage, &set.members()[top.member].1, room.saturating_add(1));
            top.member += 1;
            top.pending = parses.into_iter();
            top.cut = cut;
            continue;
        };
        let member = top.member - 1;
        if !top.seen.insert((member, p.preimage.letters().to_vec(), p.consumed)) {
            continue;
        }
        if tree.nodes.len() >= budget {
            tree.truncated = true;
            break;
        }
        let parent = top.id;
        let id = tree.nodes.len();
        let node_depth = tree.nodes[parent].depth + 1;
        tree.nodes[parent].children.push(id);
        tree.nodes.push(DesubNode {
            parent: Some(parent),
            depth: node_depth,
            morphism: Some(set.members()[member].0.clone()),
            preimage: p.preimage,
            consumed: p.consumed,
            residue: p.residue,
            children: Vec::new(),
        });
        if node_depth < depth {
            stack.push(frame(id));
        }
    }
    Ok(tree)
}

impl DesubTree {
    pub fn outcome(&self) -> ParseOutcome {
        if self.nodes.iter().any(|n| n.depth == self.max_depth) {
            ParseOutcome::Found
        } else if self.truncated {
            ParseOutcome::Truncated
        } else {
            ParseOutcome::Empty
        }
    }

    pub fn has_full_depth_chain(&self) -> bool {
        self.outcome() == ParseOutcome::Found
    }

    /// Member names from the root down to `id`.
    pub fn chain(&self, id: usize) -> Vec<String> {
        let mut names = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            names.push(self.nodes[cur].morphism.clone().unwrap_or_default());
            cur = p;
        }
        names.reverse();
        names
    }

    /// Ids of nodes at the requested depth.
    pub fn full_depth_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].depth == self.max_depth)
            .collect()
    }

    /// Indented rendering, one node per line.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "root {} | set {} | depth {} | nodes {}{}\n",
            self.root,
            self.set,
            self.max_depth,
            self.nodes.len(),
            if self.truncated { " | TRUNCATED" } else { "" }
        );
        let mut stack: Vec<usize> = self.nodes[0].children.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            out.push_str(&format!(
                "{}{} <- {} (consumed {}, residue {})\n",
                "  ".repeat(n.depth),
                n.morphism.as_deref().unwrap_or("?"),
                n.preimage,
                n.consumed,
                n.residue
            ));
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// JSON Lines: a header object, then one object per node in id order.
    pub fn to_jsonl(&self) -> String {
        let header = TreeHeader {
            root: render(self.root.alphabet(), self.root.letters()),
            alphabet: self.root.alphabet().symbols().iter().collect(),
            set: self.set.clone(),
            depth: self.max_depth,
            budget: self.budget,
            truncated: self.truncated,
            nodes: self.nodes.len(),
        };
        let mut out = serde_json::to_string(&header).expect("serializable");
        out.push('\n');
        for (id, n) in self.nodes.iter().enumerate() {
            let rec = NodeRecord {
                id,
                parent: n.parent,
                depth: n.depth,
                morphism: n.morphism.clone(),
                preimage: render(n.preimage.alphabet(), n.preimage.letters()),
                consumed: n.consumed,
                residue: n.residue,
            };
            out.push_str(&serde_json::to_string(&rec).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: TreeHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Parse("empty tree document".into()))?,
        )
        .map_err(|e| Error::Parse(e.to_string()))?;
        let alphabet = Alphabet::new(header.alphabet.chars())?;
        let mut nodes: Vec<DesubNode> = Vec::with_capacity(header.nodes);
        for line in lines {
            let rec: NodeRecord =
                serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
            if rec.id != nodes.len() {
                return Err(Error::Parse(format!("node {} out of order", rec.id)));
            }
            if let Some(p) = rec.parent {
                let parent = nodes
                    .get_mut(p)
                    .ok_or_else(|| Error::Parse(format!("node {} has unknown parent {p}", rec.id)))?;
                parent.children.push(rec.id);
            }
            nodes.push(DesubNode {
                parent: rec.parent,
                depth: rec.depth,
                morphism: rec.morphism,
                preimage: Word::parse(&alphabet, &rec.preimage)?,
                consumed: rec.consumed,
                residue: rec.residue,
                children: Vec::new(),
            });
        }
        if nodes.len() != header.nodes {
            return Err(Error::Parse(format!(
                "header announces {} nodes, found {}",
                header.nodes,
                nodes.len()
            )));
        }
        Ok(DesubTree {
            root: Word::parse(&alphabet, &header.root)?,
            set: header.set,
            max_depth: header.depth,
            budget: header.budget,
            truncated: header.truncated,
            nodes,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TreeHeader {
    root: String,
    alphabet: String,
    set: String,
    depth: usize,
    budget: usize,
    truncated: bool,
    nodes: usize,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    morphism: Option<String>,
    preimage: String,
    consumed: usize,
    residue: usize,
}

/// One step of the desubstitution of a balanced binary word.
///
/// | first letter | absent factor | generator | code        |
/// |--------------|---------------|-----------|-------------|
/// | a            | bb            | `L_a`     | {a, ab}     |
/// | a            | aa            | `R_b`     | {ab, b}     |
/// | b            | bb            | `R_a`     | {a, ba}     |
/// | b            | aa            | `L_b`     | {b, ba}     |
///
/// When neither `aa` nor `bb` occurs, the `L` row of the first letter is used.
///
/// Only parses with a balanced preimage are kept. A finite balanced word is a
/// prefix of an infinite balanced word, whose preimage is balanced, so one such
/// parse exists; it is not always the complete one (`aaabaaabaaaa` decodes
/// completely to the unbalanced `aabaabaaaa`). Complete parses come first.
pub fn balanced_desub_step(w: &Word) -> Result<(GeneratorName, Parse)> {
    let alphabet = w.alphabet();
    if alphabet.len() != 2 {
        return Err(Error::Precondition(format!(
            "balanced desubstitution needs a binary alphabet, got {alphabet}"
        )));
    }
    let Some(first) = w.first() else {
        return Err(Error::Precondition("word is empty".into()));
    };
    let (a, b) = (Letter::new(0), Letter::new(1));
    let l = w.letters();
    let has = |x: Letter| l.windows(2).any(|p| p[0] == x && p[1] == x);
    let (has_aa, has_bb) = (has(a), has(b));
    if has_aa && has_bb {
        return Err(Error::Precondition(format!(
            "{w} contains both aa and bb, so it is not balanced"
        )));
    }
    let (sa, sb) = (alphabet.symbol(a), alphabet.symbol(b));
    let gen = match (first == a, has_bb) {
        (true, false) => GeneratorName::L(sa),
        (true, true) => GeneratorName::R(sb),
        (false, false) if has_aa => GeneratorName::R(sa),
        (false, _) => GeneratorName::L(sb),
    };
    let sigma = gen.to_morphism(alphabet)?;
    let parses = desubstitute_prefix(w, &sigma);
    let balanced: Vec<&Parse> = parses
        .iter()
        .filter(|p| crate::props::is_balanced(&p.preimage).verdict.is_holds())
        .collect();
    let best = balanced
        .iter()
        .find(|p| p.is_complete())
        .or_else(|| balanced.first())
        .map(|p| (*p).clone())
        .ok_or_else(|| Error::Precondition(format!("{w} has no balanced preimage by {gen}")))?;
    Ok((gen, best))
}

/// A limit word of a directive: ultimately periodic or given as a stream.
#[derive(Clone, Debug)]
pub enum LimitWord {
    Periodic(EventuallyPeriodicWord),
    Stream(PrefixStream),
}

#[derive(Clone, Debug)]
pub struct LimitPoint {
    pub chain: KonigChain,
    pub word: LimitWord,
}

impl LimitPoint {
    pub fn prefix(&mut self, n: usize) -> Result<Word> {
        match &mut self.word {
            LimitWord::Periodic(w) => Ok(w.expand(n)),
            LimitWord::Stream(s) => s.prefix(n),
        }
    }

    /// Plain form for reports.
    pub fn describe(&mut self, n: usize) -> Result<LimitPointReport> {
        let prefix = self.prefix(n)?.to_string();
        let (kind, preperiod, period) = match &self.word {
            LimitWord::Periodic(w) => (
                "periodic",
                Some(render(w.alphabet(), w.preperiod().letters())),
                Some(render(w.alphabet(), w.period().letters())),
            ),
            LimitWord::Stream(_) => ("stream", None, None),
        };
        Ok(LimitPointReport {
            chain: self.chain.letter,
            cycle_len: self.chain.cycle_len,
            kind: kind.into(),
            preperiod,
            period,
            prefix,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitPointReport {
    pub chain: char,
    pub cycle_len: usize,
    pub kind: String,
    pub preperiod: Option<String>,
    pub period: Option<String>,
    pub prefix: String,
}

/// One limit point per Kőnig chain, ordered by chain letter.
///
/// Along a chain whose words stop growing the ultimate value `u` is finite and
/// the limit point is `u^ω`; otherwise the limit is streamed.
pub fn limit_points(spec: &DirectiveSpec) -> Result<Vec<LimitPoint>> {
    let pre = spec.preperiod_composition();
    konig_chains(spec)?
        .into_iter()
        .map(|chain| {
            let c = spec.alphabet().require(chain.letter)?;
            let word = if chain.expanding {
                LimitWord::Stream(PrefixStream::new(StreamSource::Directive {
                    spec: spec.clone(),
                    seed: Some(c),
                }))
            } else {
                LimitWord::Periodic(EventuallyPeriodicWord::periodic(pre.image(c))?.normalized())
            };
            Ok(LimitPoint { chain, word })
        })
        .collect()
}

/// Vertices from which an infinite path leaves, in a graph given by out-edges.
fn infinite_path_vertices(out: &[Vec<usize>]) -> Vec<bool> {
    let n = out.len();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut degree: Vec<usize> = vec![0; n];
    for (v, targets) in out.iter().enumerate() {
        degree[v] = targets.len();
        for &t in targets {
            incoming[t].push(v);
        }
    }
    let mut alive = vec![true; n];
    let mut queue: Vec<usize> = (0..n).filter(|&v| degree[v] == 0).collect();
    while let Some(v) = queue.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &u in &incoming[v] {
            degree[u] -= 1;
            if degree[u] == 0 {
                queue.push(u);
            }
        }
    }
    alive
}

/// Letter graph of a finite set: an edge `α → β` labelled `f` when `f(β) = α`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterGraph {
    pub letters: Vec<char>,
    pub edges: Vec<(char, String, char)>,
    /// Vertices starting an infinite path.
    pub stablet: BTreeSet<char>,
}

impl LetterGraph {
    pub fn has_circuit(&self) -> bool {
        !self.stablet.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("letters: {}\nedges:\n", self.letters.iter().collect::<String>());
        for (a, f, b) in &self.edges {
            out.push_str(&format!("  {a} --{f}--> {b}\n"));
        }
        let set: Vec<String> = self.stablet.iter().map(char::to_string).collect();
        out.push_str(&format!("StabLet: {{{}}}\n", set.join(", ")));
        if !self.has_circuit() {
            out.push_str("no circuit in the graph\n");
        }
        out
    }
}

pub fn stablet_graph(set: &SubstitutionSet) -> LetterGraph {
    let a = set.alphabet();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); a.len()];
    let mut edges = Vec::new();
    for (name, f) in set.members() {
        for beta in a.letters() {
            if let [alpha] = f.image_letters(beta) {
                out_edges[alpha.index()].push(beta.index());
                edges.push((a.symbol(*alpha), name.clone(), a.symbol(beta)));
            }
        }
    }
    edges.sort();
    let alive = infinite_path_vertices(&out_edges);
    LetterGraph {
        letters: a.symbols().to_vec(),
        edges,
        stablet: a
            .letters()
            .filter(|l| alive[l.index()])
            .map(|l| a.symbol(l))
            .collect(),
    }
}

/// `alive[i][α]`: the letter α at phase `i` starts an infinite chain of
/// single-letter images along the directive.
fn stablet_by_phase(spec: &DirectiveSpec) -> Result<Vec<Vec<bool>>> {
    if spec.period_len() == 0 {
        return Err(Error::Directive("the period is empty".into()));
    }
    let k = spec.alphabet().len();
    let phases = spec.phases();
    let node = |i: usize, l: usize| i * k + l;
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); phases * k];
    for i in 0..phases {
        let f = spec.morphism_at_phase(i);
        let j = spec.next_phase(i);
        for beta in spec.alphabet().letters() {
            if let [alpha] = f.image_letters(beta) {
                out[node(i, alpha.index())].push(node(j, beta.index()));
            }
        }
    }
    let alive = infinite_path_vertices(&out);
    Ok((0..phases)
        .map(|i| (0..k).map(|l| alive[node(i, l)]).collect())
        .collect())
}

/// Letters that desubstitute indefinitely along the directive.
pub fn stablet_of_directive(spec: &DirectiveSpec) -> Result<BTreeSet<char>> {
    let alive = stablet_by_phase(spec)?;
    let a = spec.alphabet();
    Ok(a.letters()
        .filter(|l| alive[0][l.index()])
        .map(|l| a.symbol(l))
        .collect())
}

/// Words `σ_1 ⋯ σ_k(α)` with `α` in StabLet of the shifted directive, up to `bound` letters.
///
/// Every such word already arises with `k` equal to the preperiod length:
/// letters of StabLet inside the periodic part lie on cycles of single-letter
/// images, and below the preperiod they are single-letter images of such letters.
pub fn stabultlet_bounded(spec: &DirectiveSpec, bound: usize) -> Result<BTreeSet<Word>> {
    let alive = stablet_by_phase(spec)?;
    let pre = spec.preperiod_composition();
    let p = spec.pre_len();
    Ok(spec
        .alphabet()
        .letters()
        .filter(|l| alive[p][l.index()])
        .map(|l| pre.image(l))
        .filter(|w| w.len() <= bound)
        .collect())
}

/// Members of StabUltLet (bounded) that are not products of two or more members.
pub fn genstabfin_bounded(spec: &DirectiveSpec, bound: usize) -> Result<BTreeSet<Word>> {
    let ult = stabultlet_bounded(spec, bound)?;
    let pieces: HashSet<&[Letter]> = ult.iter().map(|w| w.letters()).collect();
    Ok(ult
        .iter()
        .filter(|w| !splits_into_pieces(w.letters(), &pieces))
        .cloned()
        .collect())
}

/// Whether `u` is a concatenation of at least two words from `pieces`.
fn splits_into_pieces(u: &[Letter], pieces: &HashSet<&[Letter]>) -> bool {
    let n = u.len();
    let mut can = vec![false; n + 1];
    can[0] = true;
    for i in 1..=n {
        can[i] = (0..i).any(|j| can[j] && !(j == 0 && i == n) && pieces.contains(&u[j..i]));
    }
    can[n]
}

/// Exact membership of a finite word in StabFin of the directive: whether
/// `w = σ_1(w_1)`, `w_1 = σ_2(w_2)`, … can go on forever.
pub fn desubstitutes_indefinitely(w: &Word, spec: &DirectiveSpec) -> Result<bool> {
    if spec.period_len() == 0 {
        return Err(Error::Directive("the period is empty".into()));
    }
    if w.is_empty() {
        return Ok(true);
    }
    spec.alphabet().check_same(w.alphabet())?;
    type State = (usize, Vec<Letter>);
    // 1: on the current path, 2: finished without finding a cycle
    let mut color: HashMap<State, u8> = HashMap::new();
    let mut stack: Vec<(State, Vec<State>)> = Vec::new();
    let expand = |s: &State| -> Vec<State> {
        let next = spec.next_phase(s.0);
        exact_preimages(&s.1, spec.morphism_at_phase(s.0))
            .into_iter()
            .map(|u| (next, u))
            .collect()
    };
    let start: State = (0, w.letters().to_vec());
    color.insert(start.clone(), 1);
    let kids = expand(&start);
    stack.push((start, kids));
    while let Some((state, kids)) = stack.last_mut() {
        match kids.pop() {
            Some(k) => match color.get(&k) {
                Some(1) => return Ok(true),
                Some(_) => {}
                None => {
                    color.insert(k.clone(), 1);
                    let grand = expand(&k);
                    stack.push((k, grand));
                }
            },
            None => {
                color.insert(state.clone(), 2);
                stack.pop();
            }
        }
    }
    Ok(false)
}

/// Shapes of the infinite words fixed by `f^π`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedPointFamily {
    /// Every infinite word over these letters (each is fixed by `f^π`).
    MortalOnly { letters: Vec<char> },
    /// `u · lim f^(kπ)(seed)` for any finite word `u` over `mortal`.
    MortalPrefixThenExpanding { mortal: Vec<char>, seed: char },
}

impl fmt::Display for FixedPointFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedPointFamily::MortalOnly { letters } => {
                write!(f, "{{{}}}^ω", letters.iter().collect::<String>())
            }
            FixedPointFamily::MortalPrefixThenExpanding { mortal, seed } if mortal.is_empty() => {
                write!(f, "lim f^(kπ)({seed})")
            }
            FixedPointFamily::MortalPrefixThenExpanding { mortal, seed } => write!(
                f,
                "{{{}}}* · lim f^(kπ)({seed})",
                mortal.iter().collect::<String>()
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// Least common multiple of the cycle lengths of the first-letter map.
    pub period: usize,
    /// Cycle length of each letter lying on a cycle (each at most `#A`).
    pub letter_periods: BTreeMap<char, usize>,
    /// Periodic letters `a` with `|f^π(a)| > 1`.
    pub expanding_seeds: Vec<char>,
    /// Letters with `f^π(a) = a`.
    pub mortal_letters: Vec<char>,
    pub families: Vec<FixedPointFamily>,
}

impl FixedPointReport {
    pub fn render_text(&self) -> String {
        let per: Vec<String> = self
            .letter_periods
            .iter()
            .map(|(c, p)| format!("{c}:{p}"))
            .collect();
        let mut out = format!(
            "period π = {}\nletter periods: {}\nexpanding seeds: {{{}}}\nmortal letters: {{{}}}\nfamilies:\n",
            self.period,
            per.join(" "),
            join_chars(&self.expanding_seeds),
            join_chars(&self.mortal_letters)
        );
        for f in &self.families {
            out.push_str(&format!("  {f}\n"));
        }
        out
    }
}

fn join_chars(cs: &[char]) -> String {
    cs.iter().map(char::to_string).collect::<Vec<_>>().join(", ")
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Describes the infinite words `w` with `f^n(w) = w` for some `n ≥ 1`.
pub fn fixed_point_analysis(f: &Morphism) -> FixedPointReport {
    let a = f.alphabet();
    let first = f.first_letter_map();
    let cycles = crate::sadic::periodic_points(&first);
    let period = cycles
        .iter()
        .fold(1, |acc, (_, len)| acc / gcd(acc, *len) * len);
    let mut expanding = Vec::new();
    let mut mortal = Vec::new();
    for (c, len) in &cycles {
        // f^π(c) has length 1 exactly when every image along the cycle is a single letter
        let mut x = *c;
        let mut single = true;
        for _ in 0..*len {
            single &= f.image_letters(x).len() == 1;
            x = first[x.index()];
        }
        if single {
            mortal.push(a.symbol(*c));
        } else {
            expanding.push(a.symbol(*c));
        }
    }
    let mut families = Vec::new();
    if !mortal.is_empty() {
        families.push(FixedPointFamily::MortalOnly {
            letters: mortal.clone(),
        });
    }
    for &seed in &expanding {
        families.push(FixedPointFamily::MortalPrefixThenExpanding {
            mortal: mortal.clone(),
            seed,
        });
    }
    FixedPointReport {
        period,
        letter_periods: cycles.iter().map(|(c, len)| (a.symbol(*c), *len)).collect(),
        expanding_seeds: expanding,
        mortal_letters: mortal,
        families,
    }
}

/// Images longer than this are not materialised by [`is_fixed_by_power`].
const MAX_IMAGE: usize = 1 << 22;

fn ep_image(f: &Morphism, w: &EventuallyPeriodicWord) -> Result<EventuallyPeriodicWord> {
    EventuallyPeriodicWord::new(f.apply(w.preperiod())?, f.apply(w.period())?)
}

/// First position where two eventually periodic words differ.
fn first_difference(u: &EventuallyPeriodicWord, v: &EventuallyPeriodicWord) -> Option<usize> {
    let (p, q) = (u.period().len(), v.period().len());
    let span = u.preperiod().len().max(v.preperiod().len()) + p / gcd(p, q) * q;
    (0..span).find(|&i| u.letter_at(i) != v.letter_at(i))
}

/// Holds when `f^n(w) = w` for some `1 ≤ n ≤ #A`, otherwise Fails with the
/// first mismatch for every tested power. Unknown if the images grow too large.
pub fn is_fixed_by_power(w: &EventuallyPeriodicWord, f: &Morphism) -> Result<Verdict> {
    f.alphabet().check_same(w.alphabet())?;
    let target = w.normalized();
    let mut cur = target.clone();
    let mut mismatches = Vec::new();
    for n in 1..=f.alphabet().len() {
        let grown: usize = cur.preperiod().len() + cur.period().len();
        if grown.saturating_mul(f.images().iter().map(Vec::len).max().unwrap_or(1)) > MAX_IMAGE {
            return Ok(Verdict::Unknown { depth: n - 1 });
        }
        cur = ep_image(f, &cur)?.normalized();
        match first_difference(&cur, &target) {
            None => return Ok(Verdict::Holds),
            Some(pos) => mismatches.push((n, pos)),
        }
    }
    Ok(Verdict::fails(Witness::NotFixed { mismatches }))
}

/// Least `n ≤ #A` with `f^n(w) = w`.
pub fn least_fixing_power(w: &EventuallyPeriodicWord, f: &Morphism) -> Result<Option<usize>> {
    let target = w.normalized();
    let mut cur = target.clone();
    for n in 1..=f.alphabet().len() {
        cur = ep_image(f, &cur)?.normalized();
        if cur == target {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Powers `n ≤ #A` for which the finite prefix is consistent with a fixed point
/// of `f^n`: `f^n(prefix)` starts with `prefix`.
pub fn prefix_fixing_powers(prefix: &Word, f: &Morphism) -> Result<Vec<usize>> {
    f.alphabet().check_same(prefix.alphabet())?;
    let n = prefix.len();
    let mut cur = prefix.letters().to_vec();
    let mut out = Vec::new();
    for k in 1..=f.alphabet().len() {
        cur = f.apply_truncated(&cur, n);
        if cur == prefix.letters() {
            out.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sadic::{family_members, generate_prefix, Family, FamilyDescriptor};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ab() -> Alphabet {
        Alphabet::latin(2).unwrap()
    }

    fn gen(a: &Alphabet, t: &str) -> Morphism {
        GeneratorName::parse(t).to_morphism(a).unwrap()
    }

    fn thue_morse(n: usize) -> Word {
        let a = ab();
        let mu = Morphism::from_images(&a, &["ab", "ba"]).unwrap();
        mu.fixed_point_prefix(Letter::new(0), n).unwrap()
    }

    fn sbal() -> SubstitutionSet {
        let d = FamilyDescriptor::new(Family::SBal, &ab()).unwrap();
        family_members(&d, 1).unwrap()
    }

    /// Oracle: every word u over the alphabet with |u| ≤ |w| such that w is a
    /// prefix of σ(u) and σ(u minus its last letter) is shorter than w.
    fn brute_parses(w: &Word, sigma: &Morphism) -> BTreeSet<(String, usize, usize)> {
        let a = w.alphabet();
        let k = a.len();
        let mut out = BTreeSet::new();
        let n = w.len();
        for len in 1..=n {
            for code in 0..k.pow(len as u32) {
                let u: Vec<Letter> = (0..len).map(|i| Letter::new(code / k.pow(i as u32) % k)).collect();
                let img = sigma.apply_letters(&u);
                let head = sigma.apply_letters(&u[..len - 1]).len();
                if img.starts_with(w.letters()) && head < n {
                    let consumed = if img.len() == n { n } else { head };
                    out.insert((render(a, &u), consumed, n - consumed));
                }
            }
        }
        out
    }

    fn as_set(ps: &[Parse]) -> BTreeSet<(String, usize, usize)> {
        ps.iter()
            .map(|p| (p.preimage.to_string(), p.consumed, p.residue))
            .collect()
    }

    #[test]
    fn parse_examples() {
        let a = ab();
        let ps = desubstitute_prefix(&a.word("abaab").unwrap(), &gen(&a, "La"));
        assert_eq!(as_set(&ps), BTreeSet::from([("bab".into(), 5, 0)]));
        let abc = Alphabet::latin(3).unwrap();
        let f1 = Morphism::from_images(&abc, &["a", "bac", "baca"]).unwrap();
        let ps = desubstitute_prefix(&abc.word("baca").unwrap(), &f1);
        let full: BTreeSet<String> = ps.iter().filter(|p| p.is_complete()).map(|p| p.preimage.to_string()).collect();
        assert_eq!(full, BTreeSet::from(["c".to_string(), "ba".to_string()]));
        assert!(desubstitute_prefix(&a.word("b").unwrap(), &gen(&a, "La")).is_empty());
    }

    proptest! {
        #[test]
        fn parses_match_oracle(
            w in prop::collection::vec(0usize..2, 1..9),
            imgs in prop::collection::vec(prop::collection::vec(0usize..2, 1..4), 2),
        ) {
            let a = ab();
            let w = Word::new(&a, w.into_iter().map(Letter::new).collect()).unwrap();
            let sigma = Morphism::from_raw(&a, imgs.iter().map(|i| i.iter().map(|&x| Letter::new(x)).collect()).collect());
            prop_assert_eq!(as_set(&desubstitute_prefix(&w, &sigma)), brute_parses(&w, &sigma));
        }
    }

    #[test]
    fn tree_examples() {
        let a = ab();
        let f2 = Morphism::from_images(&a, &["ba", "ab"]).unwrap();
        let set = SubstitutionSet::single("f2", &f2);
        let tree = directive_parses(&thue_morse(32), &set, 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(tree.nodes.len(), 5);
        let leaf = tree.full_depth_nodes()[0];
        assert_eq!(tree.chain(leaf), vec!["f2"; 4]);
        let mut id = leaf;
        // f2 = E∘μ sends the Thue–Morse word t to E(t) and E(t) back to t
        let e = gen(&a, "Eab");
        while let Some(p) = tree.nodes[id].parent {
            let w = &tree.nodes[id].preimage;
            let t = thue_morse(w.len());
            let expected = if tree.nodes[id].depth % 2 == 0 { t } else { e.apply(&t).unwrap() };
            assert_eq!(*w, expected);
            id = p;
        }

        let tree = directive_parses(&a.word("aaaa").unwrap(), &sbal(), 2, DEFAULT_BUDGET).unwrap();
        let chains: BTreeSet<Vec<String>> = tree.full_depth_nodes().iter().map(|&i| tree.chain(i)).collect();
        assert!(chains.contains(&vec!["La".to_string(), "La".to_string()]));
        assert!(chains.contains(&vec!["La".to_string(), "Ra".to_string()]));

        let la = SubstitutionSet::from_generators(&a, &["La"]).unwrap();
        let tree = directive_parses(&a.word("abb").unwrap(), &la, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(tree.outcome(), ParseOutcome::Empty);

        let fib = generate_prefix(&DirectiveSpec::parse("(La Lb)^w").unwrap(), 64, None).unwrap();
        let tree = directive_parses(&fib, &sbal(), 6, 10).unwrap();
        assert!(tree.truncated);
        assert_eq!(tree.nodes.len(), 10);
    }

    #[test]
    fn jsonl_round_trip() {
        let a = ab();
        let w = generate_prefix(&DirectiveSpec::parse("(La Rb)^w").unwrap(), 20, None).unwrap();
        let tree = directive_parses(&w, &sbal(), 3, DEFAULT_BUDGET).unwrap();
        let text = tree.to_jsonl();
        assert_eq!(DesubTree::from_jsonl(&text).unwrap(), tree);
        assert!(tree.render_text().lines().count() == tree.nodes.len());
        let _ = a;
    }

    /// Brute-force chain enumerator: every sequence of S_bal members of length
    /// `depth`, kept when some preimage chain exists (checked by the oracle parser).
    fn brute_chains(w: &Word, depth: usize) -> BTreeSet<Vec<String>> {
        let set = sbal();
        let mut frontier: Vec<(Vec<String>, Word)> = vec![(Vec::new(), w.clone())];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (names, u) in &frontier {
                for (n, m) in set.members() {
                    for (pre, _, _) in brute_parses(u, m) {
                        let mut ch = names.clone();
                        ch.push(n.clone());
                        next.push((ch, u.alphabet().word(&pre).unwrap()));
                    }
                }
            }
            frontier = next;
        }
        frontier.into_iter().map(|(c, _)| c).collect()
    }

    #[test]
    fn tree_complete_on_small_words() {
        let a = ab();
        for len in 1..=7 {
            for bits in 0..1u32 << len {
                let w = Word::new(&a, (0..len).map(|i| Letter::new((bits >> i) as usize & 1)).collect()).unwrap();
                let tree = directive_parses(&w, &sbal(), 2, DEFAULT_BUDGET).unwrap();
                let got: BTreeSet<Vec<String>> = tree.full_depth_nodes().iter().map(|&i| tree.chain(i)).collect();
                assert_eq!(got, brute_chains(&w, 2), "{w}");
            }
        }
    }

    #[test]
    fn tree_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let toks = ["La", "Lb", "Ra", "Rb"];
        for _ in 0..20 {
            let per: Vec<&str> = (0..3).map(|_| toks[rng.gen_range(0..4)]).collect();
            let spec = DirectiveSpec::parse(&format!("({})^w", per.join(" "))).unwrap();
            let w = generate_prefix(&spec, 40, None).unwrap();
            let set = sbal();
            let tree = directive_parses(&w, &set, 5, 20_000).unwrap();
            for (id, node) in tree.nodes.iter().enumerate().skip(1) {
                let mut img = node.preimage.clone();
                for name in tree.chain(id).iter().rev() {
                    img = set.get(name).unwrap().apply(&img).unwrap();
                }
                assert!(w.is_prefix_of(&img));
                let parent = &tree.nodes[node.parent.unwrap()];
                assert_eq!(node.depth, parent.depth + 1);
            }
        }
    }

    #[test]
    fn balanced_steps() {
        let a = ab();
        let (g, p) = balanced_desub_step(&a.word("abaab").unwrap()).unwrap();
        assert_eq!((g, p.preimage.to_string()), (GeneratorName::L('a'), "bab".into()));
        let (g, p) = balanced_desub_step(&a.word("babba").unwrap()).unwrap();
        assert_eq!(g, GeneratorName::L('b'));
        let lb = gen(&a, "Lb");
        assert_eq!(as_set(&[p.clone()]).len(), 1);
        assert!(brute_parses(&a.word("babba").unwrap(), &lb).contains(&(p.preimage.to_string(), p.consumed, p.residue)));
        let (g, _) = balanced_desub_step(&a.word("ababa").unwrap()).unwrap();
        assert_eq!(g, GeneratorName::L('a'));
        assert!(balanced_desub_step(&a.word("aabb").unwrap()).is_err());
        let (_, p) = balanced_desub_step(&a.word("aaabaaabaaaa").unwrap()).unwrap();
        assert_eq!((p.preimage.to_string(), p.residue), ("aabaabaaab".into(), 1));
    }

    #[test]
    fn limit_point_examples() {
        let rb = DirectiveSpec::parse("(Rb)^w").unwrap();
        let mut pts = limit_points(&rb).unwrap();
        assert_eq!(pts.len(), 2);
        let b_omega = EventuallyPeriodicWord::parse_inferred("|b").unwrap();
        assert!(pts.iter().any(|p| matches!(&p.word, LimitWord::Periodic(w) if *w == b_omega)));
        assert_eq!(pts[0].prefix(5).unwrap().to_string(), "abbbb");

        let mut la = limit_points(&DirectiveSpec::parse("(La)^w").unwrap()).unwrap();
        assert_eq!(la.len(), 1);
        assert_eq!(la[0].prefix(4).unwrap().to_string(), "aaaa");

        let a = ab();
        let f2 = Morphism::from_images(&a, &["ba", "ab"]).unwrap();
        let reg = BTreeMap::from([("f2".to_string(), f2)]);
        let s = DirectiveSpec::parse_with("(f2)^w", None, &reg).unwrap();
        let mut pts = limit_points(&s).unwrap();
        assert_eq!(pts.len(), 2);
        let tm = thue_morse(64);
        let tm_b = gen(&a, "Eab").apply(&tm).unwrap();
        assert_eq!(pts[0].prefix(64).unwrap(), tm);
        assert_eq!(pts[1].prefix(64).unwrap(), tm_b);
    }

    #[test]
    fn limit_points_agree_with_fixed_points() {
        let a = ab();
        let g = Morphism::from_images(&a, &["abab", "b"]).unwrap();
        let reg = BTreeMap::from([("g".to_string(), g.clone())]);
        let s = DirectiveSpec::parse_with("(g)^w", None, &reg).unwrap();
        let pts = limit_points(&s).unwrap();
        let rep = fixed_point_analysis(&g);
        let expanding: Vec<char> = pts.iter().filter(|p| p.chain.expanding).map(|p| p.chain.letter).collect();
        let mortal: Vec<char> = pts.iter().filter(|p| !p.chain.expanding).map(|p| p.chain.letter).collect();
        assert_eq!(expanding, rep.expanding_seeds);
        assert_eq!(mortal, rep.mortal_letters);
    }

    #[test]
    fn stablet_examples() {
        let a = ab();
        let g = stablet_graph(&SubstitutionSet::from_generators(&a, &["La", "Lb"]).unwrap());
        assert_eq!(g.stablet, BTreeSet::from(['a', 'b']));
        let g = stablet_graph(&SubstitutionSet::from_generators(&a, &["La"]).unwrap());
        assert_eq!(g.stablet, BTreeSet::from(['a']));
        let lynd = family_members(&FamilyDescriptor::new(Family::SLynd, &a).unwrap(), 3).unwrap();
        let g = stablet_graph(&lynd);
        assert!(g.stablet.is_empty() && !g.has_circuit());
    }

    fn f_id() -> DirectiveSpec {
        let abc = Alphabet::latin(3).unwrap();
        let f = Morphism::from_images(&abc, &["bc", "b", "c"]).unwrap();
        let reg = BTreeMap::from([("f".to_string(), f)]);
        DirectiveSpec::parse_with("f (id)^w", None, &reg).unwrap()
    }

    fn strings(ws: &BTreeSet<Word>) -> BTreeSet<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn directive_stablet() {
        assert_eq!(stablet_of_directive(&DirectiveSpec::parse("(La)^w").unwrap()).unwrap(), BTreeSet::from(['a']));
        let a = ab();
        let f2 = Morphism::from_images(&a, &["ba", "ab"]).unwrap();
        let reg = BTreeMap::from([("f2".to_string(), f2)]);
        let s = DirectiveSpec::parse_with("(f2)^w", None, &reg).unwrap();
        assert!(stablet_of_directive(&s).unwrap().is_empty());
        assert!(stabultlet_bounded(&s, 5).unwrap().is_empty());
        assert!(genstabfin_bounded(&s, 5).unwrap().is_empty());
        assert_eq!(stablet_of_directive(&f_id()).unwrap(), BTreeSet::from(['b', 'c']));
    }

    #[test]
    fn ultimate_sets() {
        let s = f_id();
        let to = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(strings(&stabultlet_bounded(&s, 5).unwrap()), to(&["b", "c", "bc"]));
        assert_eq!(strings(&genstabfin_bounded(&s, 5).unwrap()), to(&["b", "c"]));
        let la = DirectiveSpec::parse("(La)^w").unwrap();
        assert_eq!(strings(&stabultlet_bounded(&la, 5).unwrap()), to(&["a"]));
        assert_eq!(strings(&genstabfin_bounded(&la, 5).unwrap()), to(&["a"]));
    }

    /// Union over prefix lengths k of σ_1⋯σ_k(StabLet at k), straight from the definition.
    fn brute_stabultlet(spec: &DirectiveSpec, bound: usize) -> BTreeSet<Word> {
        let alive = stablet_by_phase(spec).unwrap();
        let mut out = BTreeSet::new();
        let mut comp = Morphism::identity(spec.alphabet());
        for k in 0..=spec.pre_len() + 3 * spec.period_len() {
            for l in spec.alphabet().letters() {
                if alive[spec.phase(k)][l.index()] {
                    let w = comp.image(l);
                    if w.len() <= bound {
                        out.insert(w);
                    }
                }
            }
            comp = comp.compose(spec.morphism_at(k)).unwrap();
        }
        out
    }

    #[test]
    fn stabultlet_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let abc = Alphabet::latin(3).unwrap();
        for _ in 0..200 {
            let mut reg = BTreeMap::new();
            for name in ["f", "g", "h"] {
                let imgs: Vec<String> = (0..3)
                    .map(|_| {
                        let len = if rng.gen_bool(0.6) { 1 } else { rng.gen_range(2..4) };
                        (0..len).map(|_| (b'a' + rng.gen_range(0..3u8)) as char).collect()
                    })
                    .collect();
                let refs: Vec<&str> = imgs.iter().map(String::as_str).collect();
                reg.insert(name.to_string(), Morphism::from_images(&abc, &refs).unwrap());
            }
            let names = ["f", "g", "h"];
            let pre: Vec<&str> = (0..rng.gen_range(0..3)).map(|_| names[rng.gen_range(0..3)]).collect();
            let per: Vec<&str> = (0..rng.gen_range(1..3)).map(|_| names[rng.gen_range(0..3)]).collect();
            let s = DirectiveSpec::parse_with(&format!("{} ({})^w", pre.join(" "), per.join(" ")), None, &reg).unwrap();
            let got = stabultlet_bounded(&s, 12).unwrap();
            assert_eq!(got, brute_stabultlet(&s, 12), "{s}");
            for w in &got {
                assert!(desubstitutes_indefinitely(w, &s).unwrap(), "{w} along {s}");
            }
            for x in genstabfin_bounded(&s, 12).unwrap() {
                for y in genstabfin_bounded(&s, 12).unwrap() {
                    assert!(desubstitutes_indefinitely(&x.concat(&y).unwrap(), &s).unwrap());
                }
            }
        }
    }

    #[test]
    fn stabfin_membership() {
        let s = f_id();
        let abc = s.alphabet().clone();
        assert!(desubstitutes_indefinitely(&abc.word("bcbbc").unwrap(), &s).unwrap());
        assert!(!desubstitutes_indefinitely(&abc.word("a").unwrap(), &s).unwrap());
    }

    #[test]
    fn fixed_point_examples() {
        let abc = Alphabet::latin(3).unwrap();
        let f1 = Morphism::from_images(&abc, &["a", "bac", "baca"]).unwrap();
        let r = fixed_point_analysis(&f1);
        assert_eq!((r.period, r.mortal_letters.clone(), r.expanding_seeds.clone()), (1, vec!['a'], vec!['b']));
        assert_eq!(r.families.len(), 2);

        let a = ab();
        let f2 = Morphism::from_images(&a, &["ba", "ab"]).unwrap();
        let r = fixed_point_analysis(&f2);
        assert_eq!((r.period, r.expanding_seeds.clone()), (2, vec!['a', 'b']));
        assert!(r.mortal_letters.is_empty());

        let g = Morphism::from_images(&a, &["abab", "b"]).unwrap();
        let r = fixed_point_analysis(&g);
        assert_eq!((r.mortal_letters.clone(), r.expanding_seeds.clone()), (vec!['b'], vec!['a']));
        assert!(r.letter_periods.values().all(|&p| p <= 2));
    }

    #[test]
    fn fixed_by_power_examples() {
        let abc = Alphabet::latin(3).unwrap();
        let f1 = Morphism::from_images(&abc, &["a", "bac", "baca"]).unwrap();
        let a_omega = EventuallyPeriodicWord::parse(&abc, "|a").unwrap();
        assert!(is_fixed_by_power(&a_omega, &f1).unwrap().is_holds());

        let a = ab();
        let f2 = Morphism::from_images(&a, &["ba", "ab"]).unwrap();
        let abw = EventuallyPeriodicWord::parse(&a, "|ab").unwrap();
        let v = is_fixed_by_power(&abw, &f2).unwrap();
        assert!(v.is_fails());
        // oracle: expand both sides to 32 letters
        let mut img = abw.expand(32).into_letters();
        for _ in 0..2 {
            img = f2.apply_truncated(&img, 32);
            assert_ne!(img, abw.expand(32).into_letters());
        }

        let g = Morphism::from_images(&a, &["abab", "b"]).unwrap();
        let bw = EventuallyPeriodicWord::parse(&a, "|b").unwrap();
        assert!(is_fixed_by_power(&bw, &g).unwrap().is_holds());
    }

    #[test]
    fn power_cap_against_factorial_search() {
        // all eventually periodic words with |pre| ≤ 2, |period| ≤ 3 over {a,b,c},
        // random morphisms: a fixing power ≤ 3! exists only if one ≤ 3 does
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let abc = Alphabet::latin(3).unwrap();
        let mut words = Vec::new();
        for pl in 0..=2usize {
            for ql in 1..=3usize {
                for code in 0..3usize.pow((pl + ql) as u32) {
                    let l: Vec<Letter> = (0..pl + ql).map(|i| Letter::new(code / 3usize.pow(i as u32) % 3)).collect();
                    words.push(EventuallyPeriodicWord::new(
                        Word::new(&abc, l[..pl].to_vec()).unwrap(),
                        Word::new(&abc, l[pl..].to_vec()).unwrap(),
                    ).unwrap());
                }
            }
        }
        for _ in 0..300 {
            let imgs: Vec<Vec<Letter>> = (0..3)
                .map(|_| (0..rng.gen_range(1..3)).map(|_| Letter::new(rng.gen_range(0..3))).collect())
                .collect();
            let f = Morphism::from_raw(&abc, imgs);
            for w in &words {
                let target = w.normalized();
                let mut cur = target.clone();
                let mut brute = None;
                for n in 1..=6 {
                    cur = ep_image(&f, &cur).unwrap().normalized();
                    if cur == target {
                        brute = Some(n);
                        break;
                    }
                }
                let capped = least_fixing_power(w, &f).unwrap();
                assert_eq!(capped.is_some(), brute.is_some(), "{f:?} on {w}");
                assert_eq!(is_fixed_by_power(w, &f).unwrap().is_holds(), capped.is_some());
            }
        }
    }

    #[test]
    fn prefix_powers() {
        let a = ab();
        let f2 = Morphism::from_images(&a, &["ba", "ab"]).unwrap();
        assert_eq!(prefix_fixing_powers(&thue_morse(512), &f2).unwrap(), vec![2]);
    }
}
