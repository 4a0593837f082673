use thiserror::Error;

/// Errors raised by word, morphism and directive operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("letter '{letter}' is not in alphabet {alphabet}")]
    UnknownLetter { letter: char, alphabet: String },

    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(String, String),

    #[error("image of '{0}' is empty (morphism must be nonerasing)")]
    Erasing(char),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid directive: {0}")]
    Directive(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no limit word: {0}")]
    NoLimit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
