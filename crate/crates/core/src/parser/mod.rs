//! Concrete syntax: parsing `.strm` text into a [`Spec`] and printing any
//! [`Spec`] back.

mod ast;
mod lexer;
mod parse;
mod pretty;

pub use ast::{InputDecl, OutputDecl, Spec, TriggerDecl};
pub use lexer::Position;
pub use parse::parse_spec;
pub use pretty::{format_duration, pretty, pretty_expr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Position, message: String },
    #[error("{pos}: stream `{name}` is declared more than once")]
    DuplicateName { pos: Position, name: String },
    #[error("{pos}: access to undeclared stream `{name}`")]
    UnknownTarget { pos: Position, name: String },
    #[error("{pos}: input `{name}` needs a value type annotation")]
    MissingInputType { pos: Position, name: String },
}

impl ParseError {
    pub(crate) fn syntax(pos: Position, message: impl Into<String>) -> Self {
        ParseError::Syntax { pos, message: message.into() }
    }

    pub fn position(&self) -> Position {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::DuplicateName { pos, .. }
            | ParseError::UnknownTarget { pos, .. }
            | ParseError::MissingInputType { pos, .. } => *pos,
        }
    }
}
