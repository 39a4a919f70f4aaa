//! Lexing, identifier discovery, consistent renaming and the validity proxy
//! for single Java methods and Python functions.

mod analysis;
mod lexer;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use validate::validate;

/// Mask token used by masked training. Lexes as an ordinary identifier.
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Java,
    Python,
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lang::Java => "java",
            Lang::Python => "python",
        })
    }
}

impl std::str::FromStr for Lang {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Ok(Lang::Java),
            "python" | "py" => Ok(Lang::Python),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punctuation,
    CommentTrivia,
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Byte offsets `[start, end)` into the source.
    pub span: (usize, usize),
}

impl Token {
    pub fn is_trivia(&self) -> bool {
        matches!(self.kind, TokenKind::Whitespace | TokenKind::CommentTrivia)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal at offset {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated block comment at offset {offset}")]
    UnterminatedComment { offset: usize },
    #[error("unexpected character {ch:?} at offset {offset}")]
    UnexpectedChar { offset: usize, ch: char },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match self {
            LexError::UnterminatedString { offset }
            | LexError::UnterminatedComment { offset }
            | LexError::UnexpectedChar { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenameError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("`{0}` is not an identifier declared in the snippet")]
    NotFound(String),
    #[error("`{0}` already names an identifier in the snippet")]
    Collision(String),
    #[error("`{0}` is not a legal identifier")]
    IllegalName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentKind {
    MethodName,
    Variable,
    Parameter,
}

/// A programmer-defined identifier declared inside a snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierInfo {
    pub name: String,
    pub kind: IdentKind,
    /// Byte spans of every occurrence, declaration sites included, in source order.
    pub occurrences: Vec<(usize, usize)>,
    pub single_letter: bool,
}

const JAVA_KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

/// Words that can never name an identifier in `lang` (keywords plus reserved literals).
pub fn is_reserved(word: &str, lang: Lang) -> bool {
    match lang {
        Lang::Java => JAVA_KEYWORDS.contains(&word),
        Lang::Python => PYTHON_KEYWORDS.contains(&word),
    }
}

pub fn keywords(lang: Lang) -> &'static [&'static str] {
    match lang {
        Lang::Java => JAVA_KEYWORDS,
        Lang::Python => PYTHON_KEYWORDS,
    }
}

/// Lossless tokenization: concatenating the token texts yields `code`.
pub fn tokenize(code: &str, lang: Lang) -> Result<Vec<Token>, LexError> {
    lexer::tokenize(code, lang)
}

pub fn detokenize(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

/// Splits camelCase / snake_case words into lowercase subtokens.
pub fn split_subtokens(token_text: &str) -> Vec<String> {
    if token_text == UNK {
        return vec![UNK.to_string()];
    }
    let chars: Vec<char> = token_text.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if c.is_uppercase() && !cur.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            // fooBar | HTTPServer -> http, server
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Subtoken stream of a whole program: every identifier and keyword,
/// split and lowercased, in source order.
pub fn code_subtokens(code: &str, lang: Lang) -> Result<Vec<String>, LexError> {
    Ok(tokenize(code, lang)?
        .iter()
        .filter(|t| matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword))
        .flat_map(|t| split_subtokens(&t.text))
        .collect())
}

/// Identifiers declared in the snippet (method name, parameters, locals),
/// ordered by first declaration.
pub fn extract_identifiers(code: &str, lang: Lang) -> Result<Vec<IdentifierInfo>, LexError> {
    let an = analysis::Analysis::new(tokenize(code, lang)?, lang);
    Ok(an.identifiers())
}

/// Whether `name` is a legal replacement spelling: one identifier token, not reserved.
pub fn is_legal_identifier(name: &str, lang: Lang) -> bool {
    match tokenize(name, lang) {
        Ok(toks) => toks.len() == 1 && toks[0].kind == TokenKind::Identifier,
        Err(_) => false,
    }
}

/// Every identifier spelling appearing anywhere in the snippet.
pub fn identifier_names(code: &str, lang: Lang) -> Result<BTreeSet<String>, LexError> {
    Ok(tokenize(code, lang)?
        .into_iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.text)
        .collect())
}

/// Renames every occurrence of the declared identifier `old` to `new`.
///
/// Rejects `new` when it is not a legal identifier or already names any
/// identifier in the snippet. Comments and string literals are untouched.
pub fn rename(code: &str, old: &str, new: &str, lang: Lang) -> Result<String, RenameError> {
    let tokens = tokenize(code, lang)?;
    let an = analysis::Analysis::new(tokens, lang);
    let Some(info) = an.identifiers().into_iter().find(|i| i.name == old) else {
        return Err(RenameError::NotFound(old.to_string()));
    };
    if old == new {
        return Ok(code.to_string());
    }
    if !is_legal_identifier(new, lang) {
        return Err(RenameError::IllegalName(new.to_string()));
    }
    if an
        .tokens()
        .iter()
        .any(|t| t.kind == TokenKind::Identifier && t.text == new)
    {
        return Err(RenameError::Collision(new.to_string()));
    }
    Ok(splice(code, &info.occurrences, new))
}

/// Renames without legality or collision checks. Used for masking, where
/// several identifiers deliberately collapse onto `<unk>`, and by the random
/// baseline, which is allowed to produce broken programs.
pub fn rename_unchecked(
    code: &str,
    old: &str,
    new: &str,
    lang: Lang,
) -> Result<String, RenameError> {
    let infos = extract_identifiers(code, lang)?;
    let info = infos
        .into_iter()
        .find(|i| i.name == old)
        .ok_or_else(|| RenameError::NotFound(old.to_string()))?;
    Ok(splice(code, &info.occurrences, new))
}

/// Replaces each span (sorted, non-overlapping) with `new`.
pub(crate) fn splice(code: &str, spans: &[(usize, usize)], new: &str) -> String {
    let mut out = String::with_capacity(code.len());
    let mut last = 0;
    for &(s, e) in spans {
        out.push_str(&code[last..s]);
        out.push_str(new);
        last = e;
    }
    out.push_str(&code[last..]);
    out
}
