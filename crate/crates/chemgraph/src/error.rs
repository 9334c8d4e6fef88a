use thiserror::Error;

use crate::graph::Element;

/// Structural problems detected while assembling a graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("atom {atom} bonded to itself")]
    SelfLoop { atom: usize },
    #[error("atom index {atom} out of range for {count} atoms")]
    AtomOutOfRange { atom: usize, count: usize },
    #[error("atoms {a} and {b} are already bonded")]
    DuplicateBond { a: usize, b: usize },
    #[error("atom {atom} ({element}) exceeds its valence with {used} bonds")]
    Valence { atom: usize, element: Element, used: u8 },
    #[error("aromatic atom {atom} is not in a ring")]
    AromaticOutsideRing { atom: usize },
    #[error("aromatic bond {bond} joins a non-aromatic atom")]
    AromaticBondOnAliphatic { bond: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("input longer than {max} characters")]
    TooLong { max: usize },
    #[error("non-ASCII input")]
    NonAscii,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unclosed branch")]
    UnclosedBranch,
    #[error("unmatched closing parenthesis")]
    UnmatchedBranchClose,
    #[error("branch or bond without a preceding atom")]
    MissingAtom,
    #[error("ring closure {0} never closed")]
    UnclosedRing(u32),
    #[error("ring closure with conflicting bond orders")]
    RingBondConflict,
    #[error("unknown or unsupported element {0:?}")]
    UnknownElement(String),
    #[error("unterminated bracket atom")]
    UnterminatedBracket,
    #[error("dangling bond symbol")]
    DanglingBond,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A SMILES error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(offset: usize, kind: ParseErrorKind) -> Self {
        ParseError { offset, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fingerprint widths differ ({left} vs {right})")]
pub struct WidthMismatch {
    pub left: usize,
    pub right: usize,
}
