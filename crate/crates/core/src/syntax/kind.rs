use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! kinds {
    ($($variant:ident),* $(,)?) => {
        /// Node-type labels of the subset grammar.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Kind {
            $($variant),*
        }

        impl Kind {
            pub const ALL: &'static [Kind] = &[$(Kind::$variant),*];

            pub fn label(self) -> &'static str {
                match self {
                    $(Kind::$variant => stringify!($variant)),*
                }
            }
        }

        impl FromStr for Kind {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok(Kind::$variant),)*
                    _ => Err(format!("unknown node kind `{s}`")),
                }
            }
        }
    };
}

kinds! {
    Program,
    VarDeclaration,
    LetDeclaration,
    ConstDeclaration,
    Declarator,
    FunctionDeclaration,
    FunctionExpression,
    ArrowFunction,
    Params,
    DefaultParam,
    RestParam,
    Block,
    Return,
    If,
    For,
    ForIn,
    ForOf,
    While,
    DoWhile,
    Break,
    Continue,
    Throw,
    Try,
    Catch,
    Finally,
    EmptyStatement,
    ExpressionStatement,
    Import,
    ImportDefault,
    ImportSpecifier,
    ImportNamespace,
    ExportDefault,
    ExportNamed,
    Call,
    New,
    Member,
    ComputedMember,
    Assign,
    Binary,
    Unary,
    UpdatePrefix,
    UpdatePostfix,
    Conditional,
    Object,
    Property,
    ShorthandProperty,
    Method,
    Spread,
    Array,
    Identifier,
    PropertyKey,
    PropertyName,
    Operator,
    StringLiteral,
    NumberLiteral,
    BooleanLiteral,
    NullLiteral,
    This,
    Empty,
    Foreign,
}

impl Kind {
    /// Kinds whose nodes carry a lexeme.
    pub fn has_value(self) -> bool {
        matches!(
            self,
            Kind::Identifier
                | Kind::PropertyKey
                | Kind::PropertyName
                | Kind::Operator
                | Kind::StringLiteral
                | Kind::NumberLiteral
                | Kind::BooleanLiteral
        )
    }

    /// Statements whose predicate or iteration governs execution of their body.
    pub fn is_control(self) -> bool {
        matches!(
            self,
            Kind::If
                | Kind::For
                | Kind::ForIn
                | Kind::ForOf
                | Kind::While
                | Kind::DoWhile
                | Kind::Try
                | Kind::Catch
                | Kind::Finally
                | Kind::Conditional
        )
    }

    pub fn is_function(self) -> bool {
        matches!(
            self,
            Kind::FunctionDeclaration | Kind::FunctionExpression | Kind::ArrowFunction | Kind::Method
        )
    }

    pub fn is_declaration(self) -> bool {
        matches!(
            self,
            Kind::VarDeclaration | Kind::LetDeclaration | Kind::ConstDeclaration
        )
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_roundtrip() {
        for &k in Kind::ALL {
            assert_eq!(k.label().parse::<Kind>().unwrap(), k);
        }
        assert!("Nope".parse::<Kind>().is_err());
    }
}
