//! Substitution stable sets: words, morphisms, S-adic directive sequences,
//! desubstitution, and checks on infinite words seen through finite prefixes.

pub mod cli;
pub mod desub;
pub mod error;
pub mod morphism;
pub mod props;
pub mod sadic;
pub mod verdict;
pub mod word;

pub use error::{Error, Result};
pub use morphism::{GeneratorName, Morphism};
pub use sadic::DirectiveSpec;
pub use verdict::{Verdict, Witness};
pub use word::{Alphabet, EventuallyPeriodicWord, Letter, PrefixStream, Word};
