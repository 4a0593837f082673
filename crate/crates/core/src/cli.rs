//! Command-line front end. `run` returns the process exit code:
//! 0 holds or success, 1 fails, rejected or empty, 2 unknown or truncated,
//! 3 for usage and input errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::desub::{
    directive_parses, fixed_point_analysis, genstabfin_bounded, limit_points, stablet_graph,
    stablet_of_directive, stabultlet_bounded, SubstitutionSet, DEFAULT_BUDGET,
};
use crate::error::{Error, Result};
use crate::morphism::{classify_episturmian_preserving, classify_sturmian_preserving, GeneratorName, Morphism};
use crate::props;
use crate::sadic::{
    family_members, generate_prefix, normalize_directive, render_normalization, DirectiveSpec, Family,
    FamilyDescriptor,
};
use crate::word::{Alphabet, EventuallyPeriodicWord, Word};

#[derive(Parser, Debug)]
#[command(name = "stabset", version, about = "Substitution stable sets: generation, desubstitution and word checks")]
struct Cli {
    /// Output form.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prefix of the limit word of a directive.
    Generate {
        #[arg(long)]
        directive: String,
        #[arg(long)]
        length: usize,
        /// Letter at the end of the preperiod.
        #[arg(long)]
        seed: Option<char>,
        #[command(flatten)]
        lookup: Lookup,
    },
    /// Tree of directive parses of a word by members of a set.
    Parse {
        #[command(flatten)]
        input: WordInput,
        /// Built-in family (`Sbal`, `SLynd:3`, ...), generator list (`La,Lb`) or directory of morphism files.
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Checks a word property.
    Check {
        property: Property,
        #[command(flatten)]
        input: WordInput,
        #[arg(long, default_value_t = 12)]
        maxlen: usize,
        /// Factor length for `recurrent`.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Letters at the end ignored by `recurrent`.
        #[arg(long, default_value_t = 50)]
        margin: usize,
        /// Use the pairwise balance checker.
        #[arg(long)]
        oracle: bool,
    },
    /// Morphism classification and fixed points.
    Morphism {
        #[command(subcommand)]
        action: MorphismAction,
    },
    /// Letter graph and StabLet of a set, or stable letters and words of a directive.
    Stablet {
        #[arg(long, conflicts_with = "directive", required_unless_present = "directive")]
        set: Option<String>,
        #[arg(long)]
        directive: Option<String>,
        /// Longest word listed for StabUltLet and GenStabFin.
        #[arg(long, default_value_t = 8)]
        bound: usize,
        #[command(flatten)]
        lookup: Lookup,
    },
    /// Limit points of a directive, one per Kőnig chain.
    LimitPoints {
        #[arg(long)]
        directive: String,
        /// Prefix length shown for each limit point.
        #[arg(long, default_value_t = 40)]
        length: usize,
        #[command(flatten)]
        lookup: Lookup,
    },
    /// Rewrites an L/R directive so that no R_α meets a word starting with α.
    Normalize {
        #[arg(long)]
        directive: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        chain: Option<char>,
    },
}

#[derive(Subcommand, Debug)]
enum MorphismAction {
    /// Decomposes into generators or rejects.
    Classify {
        /// Morphism file, `-` for standard input.
        file: String,
        #[arg(long, value_enum, default_value_t = ClassFamily::Episturmian)]
        family: ClassFamily,
    },
    /// Describes the infinite words fixed by a power of the morphism.
    FixedPoints { file: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClassFamily {
    Episturmian,
    Sturmian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Property {
    Balanced,
    Special,
    Lsp,
    Reversal,
    Episturmian,
    Recurrent,
    Lyndon,
    Period,
}

#[derive(Args, Debug)]
struct WordInput {
    /// Word file (`-` for standard input). `pre | period` is expanded.
    file: Option<String>,
    /// Inline word instead of a file.
    #[arg(long, conflicts_with = "file")]
    word: Option<String>,
    /// Letters of the alphabet, e.g. "a b c". Inferred when absent.
    #[arg(long)]
    alphabet: Option<String>,
    /// Length to which an eventually periodic word is expanded.
    #[arg(long, default_value_t = 1000)]
    expand: usize,
    /// Bound for parametric built-in families.
    #[arg(long, default_value_t = 3)]
    bound: usize,
}

#[derive(Args, Debug)]
struct Lookup {
    /// Directory of morphism files; each file stem becomes a directive token.
    #[arg(long)]
    morphisms: Option<String>,
    /// Letters of the alphabet, e.g. "a b c".
    #[arg(long)]
    alphabet: Option<String>,
}

fn read_source(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
    }
}

fn parse_alphabet(text: &Option<String>) -> Result<Option<Alphabet>> {
    text.as_deref().map(Alphabet::parse).transpose()
}

/// Reads a word over `alphabet`, or over the inferred alphabet.
fn read_word(input: &WordInput, alphabet: Option<&Alphabet>) -> Result<Word> {
    let raw = match (&input.word, &input.file) {
        (Some(w), _) => w.clone(),
        (None, Some(f)) => read_source(f)?,
        (None, None) => return Err(Error::Parse("give a word file or --word".into())),
    };
    let text = raw.trim();
    let explicit = parse_alphabet(&input.alphabet)?;
    let alphabet = explicit.as_ref().or(alphabet);
    if text.contains('|') {
        let ep = match alphabet {
            Some(a) => EventuallyPeriodicWord::parse(a, text)?,
            None => EventuallyPeriodicWord::parse_inferred(text)?,
        };
        return Ok(ep.expand(input.expand));
    }
    match alphabet {
        Some(a) => Word::parse(a, text),
        None => Word::parse_inferred(text),
    }
}

fn load_morphism_dir(dir: &Path) -> Result<Vec<(String, Morphism)>> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut out = Vec::new();
    for p in entries {
        let name = p
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Io(format!("bad file name {}", p.display())))?
            .to_string();
        let text = fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        out.push((name, Morphism::parse(&text)?));
    }
    if out.is_empty() {
        return Err(Error::Io(format!("no morphism files in {}", dir.display())));
    }
    Ok(out)
}

/// Resolves a set given as a directory, a built-in family name or a generator list.
fn resolve_set(text: &str, alphabet: Option<&Alphabet>, bound: usize) -> Result<SubstitutionSet> {
    let path = Path::new(text);
    if path.is_dir() {
        let members = load_morphism_dir(path)?;
        let a = members[0].1.alphabet().clone();
        return SubstitutionSet::new(text, &a, members);
    }
    let (name, param) = match text.split_once(':') {
        Some((n, p)) => (
            n,
            Some(p.parse::<usize>().map_err(|_| Error::Parse(format!("bad family bound in '{text}'")))?),
        ),
        None => (text, None),
    };
    if let Some(family) = Family::from_name(name) {
        let a = match (family.is_binary(), alphabet) {
            (true, _) => Alphabet::latin(2)?,
            (false, Some(a)) => a.clone(),
            (false, None) => Alphabet::latin(2)?,
        };
        return family_members(&FamilyDescriptor::new(family, &a)?, param.unwrap_or(bound));
    }
    let tokens: Vec<&str> = text.split([',', ' ']).filter(|t| !t.is_empty()).collect();
    let names: Vec<GeneratorName> = tokens.iter().map(|t| GeneratorName::parse(t)).collect();
    if names.iter().any(|g| matches!(g, GeneratorName::Named(n) if n != "id")) {
        return Err(Error::Parse(format!(
            "'{text}' is neither a directory, a family name nor a generator list"
        )));
    }
    let a = match alphabet {
        Some(a) => a.clone(),
        None => Alphabet::infer(&names.iter().flat_map(|g| g.symbols()).collect::<String>())?,
    };
    SubstitutionSet::from_generators(&a, &tokens)
}

fn resolve_directive(text: &str, lookup: &Lookup) -> Result<DirectiveSpec> {
    let registry: BTreeMap<String, Morphism> = match &lookup.morphisms {
        Some(dir) => load_morphism_dir(Path::new(dir))?.into_iter().collect(),
        None => BTreeMap::new(),
    };
    let alphabet = parse_alphabet(&lookup.alphabet)?;
    DirectiveSpec::parse_with(text, alphabet.as_ref(), &registry)
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, text: &str, doc: &T) -> Result<()> {
    match format {
        Format::Text => write!(out, "{text}")?,
        Format::Machine => writeln!(out, "{}", serde_json::to_string(doc).map_err(|e| Error::Io(e.to_string()))?)?,
    }
    Ok(())
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct GenerateDoc<'a> {
    directive: String,
    length: usize,
    seed: Option<char>,
    word: &'a str,
}

#[derive(Serialize)]
struct ClassifyDoc<'a> {
    family: &'a str,
    accepted: bool,
    decomposition: &'a crate::morphism::GeneratorDecomposition,
}

#[derive(Serialize)]
struct DirectiveStabDoc {
    directive: String,
    bound: usize,
    stablet: Vec<char>,
    stabultlet: Vec<String>,
    genstabfin: Vec<String>,
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let format = cli.format;
    match cli.command {
        Command::Generate {
            directive,
            length,
            seed,
            lookup,
        } => {
            if length == 0 {
                return Err(Error::Precondition("length must be at least 1".into()));
            }
            let spec = resolve_directive(&directive, &lookup)?;
            let seed_letter = seed.map(|c| spec.alphabet().require(c)).transpose()?;
            let w = generate_prefix(&spec, length, seed_letter)?.to_string();
            let doc = GenerateDoc {
                directive: spec.to_string(),
                length,
                seed,
                word: &w,
            };
            emit(out, format, &format!("{w}\n"), &doc)?;
            Ok(0)
        }
        Command::Parse {
            input,
            set,
            depth,
            budget,
        } => {
            let alphabet = parse_alphabet(&input.alphabet)?;
            let set = resolve_set(&set, alphabet.as_ref(), input.bound)?;
            let w = read_word(&input, Some(set.alphabet()))?;
            let tree = directive_parses(&w, &set, depth, budget)?;
            match format {
                Format::Text => write!(out, "{}", tree.render_text())?,
                Format::Machine => write!(out, "{}", tree.to_jsonl())?,
            }
            Ok(tree.outcome().exit_code())
        }
        Command::Check {
            property,
            input,
            maxlen,
            k,
            margin,
            oracle,
        } => {
            let w = read_word(&input, None)?;
            let report = match property {
                Property::Balanced if oracle => props::is_balanced_oracle(&w),
                Property::Balanced => props::is_balanced(&w),
                Property::Special => props::special_factor_check(&w, maxlen)?,
                Property::Lsp => props::is_lsp_prefixal(&w, maxlen)?,
                Property::Reversal => props::reversal_closure_check(&w, maxlen)?,
                Property::Episturmian => props::episturmian_necessary(&w, maxlen)?,
                Property::Recurrent => props::is_recurrent_bounded(&w, k, margin)?,
                Property::Lyndon => props::is_lyndon_bounded(&w)?,
                Property::Period => props::period_check(&w)?,
            };
            emit(out, format, &format!("{report}\n"), &report)?;
            Ok(report.exit_code())
        }
        Command::Morphism { action } => match action {
            MorphismAction::Classify { file, family } => {
                let m = Morphism::parse(&read_source(&file)?)?;
                let (name, dec) = match family {
                    ClassFamily::Episturmian => ("episturmian", classify_episturmian_preserving(&m)),
                    ClassFamily::Sturmian => ("sturmian", classify_sturmian_preserving(&m)?),
                };
                let doc = ClassifyDoc {
                    family: name,
                    accepted: dec.accepted(),
                    decomposition: &dec,
                };
                emit(out, format, &format!("{dec}\n"), &doc)?;
                Ok(if dec.accepted() { 0 } else { 1 })
            }
            MorphismAction::FixedPoints { file } => {
                let m = Morphism::parse(&read_source(&file)?)?;
                let report = fixed_point_analysis(&m);
                emit(out, format, &report.render_text(), &report)?;
                Ok(0)
            }
        },
        Command::Stablet {
            set,
            directive,
            bound,
            lookup,
        } => {
            if let Some(set) = set {
                let alphabet = parse_alphabet(&lookup.alphabet)?;
                let set = resolve_set(&set, alphabet.as_ref(), 3)?;
                let graph = stablet_graph(&set);
                emit(out, format, &graph.render_text(), &graph)?;
                return Ok(0);
            }
            let spec = resolve_directive(directive.as_deref().unwrap_or_default(), &lookup)?;
            let doc = DirectiveStabDoc {
                directive: spec.to_string(),
                bound,
                stablet: stablet_of_directive(&spec)?.into_iter().collect(),
                stabultlet: stabultlet_bounded(&spec, bound)?.iter().map(Word::to_string).collect(),
                genstabfin: genstabfin_bounded(&spec, bound)?.iter().map(Word::to_string).collect(),
            };
            let text = format!(
                "directive: {}\nStabLet: {{{}}}\nStabUltLet (|u| ≤ {bound}): {{{}}}\nGenStabFin (|u| ≤ {bound}): {{{}}}\n",
                doc.directive,
                doc.stablet.iter().map(char::to_string).collect::<Vec<_>>().join(", "),
                doc.stabultlet.join(", "),
                doc.genstabfin.join(", ")
            );
            emit(out, format, &text, &doc)?;
            Ok(0)
        }
        Command::LimitPoints {
            directive,
            length,
            lookup,
        } => {
            let spec = resolve_directive(&directive, &lookup)?;
            let reports = limit_points(&spec)?
                .iter_mut()
                .map(|p| p.describe(length))
                .collect::<Result<Vec<_>>>()?;
            let mut text = String::new();
            for r in &reports {
                match (&r.preperiod, &r.period) {
                    (Some(pre), Some(per)) => {
                        let shown = if pre.is_empty() || pre == "ε" {
                            format!("({per})^ω")
                        } else {
                            format!("{pre}({per})^ω")
                        };
                        text.push_str(&format!("chain {}: {shown}\n", r.chain));
                    }
                    _ => text.push_str(&format!("chain {}: {}...\n", r.chain, r.prefix)),
                }
            }
            emit(out, format, &text, &reports)?;
            Ok(0)
        }
        Command::Normalize {
            directive,
            depth,
            chain,
        } => {
            let spec = DirectiveSpec::parse(&directive)?;
            let chain = chain.map(|c| spec.alphabet().require(c)).transpose()?;
            let norm = normalize_directive(&spec, depth, chain)?;
            emit(
                out,
                format,
                &with_newline(render_normalization(&norm, spec.alphabet())),
                &norm,
            )?;
            Ok(if norm.condition_holds() { 0 } else { 1 })
        }
    }
}

/// Runs the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            3
        }
    }
}

/// Runs with the process arguments and standard streams.
pub fn run() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
