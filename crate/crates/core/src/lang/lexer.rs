//! Lossless lexers for Java and Python method snippets.
//!
//! Every byte of the input ends up in exactly one token, so concatenating
//! the token texts reproduces the source.

use super::{is_reserved, Lang, LexError, Token, TokenKind, UNK};

const JAVA_OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "+", "-", "*", "/", "%", "=", "<",
    ">", "!", "~", "?", ":", "&", "|", "^",
];

const PYTHON_OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "=", ":",
];

const JAVA_PUNCT: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', '@'];
const PYTHON_PUNCT: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    lang: Lang,
    tokens: Vec<Token>,
}

pub(crate) fn tokenize(code: &str, lang: Lang) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        src: code,
        pos: 0,
        lang,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

fn is_ident_start(c: char, lang: Lang) -> bool {
    c == '_' || c.is_alphabetic() || (lang == Lang::Java && c == '$')
}

fn is_ident_continue(c: char, lang: Lang) -> bool {
    c == '_' || c.is_alphanumeric() || (lang == Lang::Java && c == '$')
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn push(&mut self, start: usize, kind: TokenKind) {
        self.tokens.push(Token {
            text: self.src[start..self.pos].to_string(),
            kind,
            span: (start, self.pos),
        });
    }

    fn bump_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                self.bump_while(char::is_whitespace);
                self.push(start, TokenKind::Whitespace);
            } else if self.lang == Lang::Python && c == '\\' && self.is_line_continuation() {
                self.pos += 1;
                self.bump_while(char::is_whitespace);
                self.push(start, TokenKind::Whitespace);
            } else if self.rest().starts_with(UNK) {
                self.pos += UNK.len();
                self.push(start, TokenKind::Identifier);
            } else if self.lang == Lang::Java && self.rest().starts_with("//")
                || self.lang == Lang::Python && c == '#'
            {
                self.bump_while(|c| c != '\n');
                self.push(start, TokenKind::CommentTrivia);
            } else if self.lang == Lang::Java && self.rest().starts_with("/*") {
                match self.rest()[2..].find("*/") {
                    Some(end) => self.pos += 2 + end + 2,
                    None => return Err(LexError::UnterminatedComment { offset: start }),
                }
                self.push(start, TokenKind::CommentTrivia);
            } else if let Some(prefix_len) = self.string_prefix_len() {
                self.pos += prefix_len;
                self.lex_string(start)?;
                self.push(start, TokenKind::Literal);
            } else if c.is_ascii_digit()
                || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            {
                self.lex_number();
                self.push(start, TokenKind::Literal);
            } else if is_ident_start(c, self.lang) {
                let lang = self.lang;
                self.bump_while(|c| is_ident_continue(c, lang));
                let text = &self.src[start..self.pos];
                let kind = if matches!(text, "true" | "false" | "null") && self.lang == Lang::Java {
                    TokenKind::Literal
                } else if is_reserved(text, self.lang) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(start, kind);
            } else if let Some(op) = self.match_operator() {
                self.pos += op.len();
                let kind = if op == "..." && self.lang == Lang::Python {
                    TokenKind::Literal
                } else {
                    TokenKind::Operator
                };
                self.push(start, kind);
            } else if self.punct().contains(&c) {
                self.pos += c.len_utf8();
                self.push(start, TokenKind::Punctuation);
            } else {
                return Err(LexError::UnexpectedChar {
                    offset: start,
                    ch: c,
                });
            }
        }
        Ok(())
    }

    fn punct(&self) -> &'static [char] {
        match self.lang {
            Lang::Java => JAVA_PUNCT,
            Lang::Python => PYTHON_PUNCT,
        }
    }

    fn match_operator(&self) -> Option<&'static str> {
        let ops = match self.lang {
            Lang::Java => JAVA_OPERATORS,
            Lang::Python => PYTHON_OPERATORS,
        };
        let rest = self.rest();
        ops.iter().copied().find(|op| rest.starts_with(op))
    }

    fn is_line_continuation(&self) -> bool {
        let after = &self.rest()[1..];
        after.starts_with('\n') || after.starts_with("\r\n")
    }

    /// Length of the string prefix (0 for a bare quote) when a string
    /// literal starts at the cursor.
    fn string_prefix_len(&self) -> Option<usize> {
        let rest = self.rest();
        match self.lang {
            Lang::Java => (rest.starts_with('"') || rest.starts_with('\'')).then_some(0),
            Lang::Python => {
                let prefix: usize = rest
                    .chars()
                    .take(2)
                    .take_while(|c| matches!(c, 'r' | 'R' | 'b' | 'B' | 'u' | 'U' | 'f' | 'F'))
                    .count();
                for len in (0..=prefix).rev() {
                    let p = &rest[..len];
                    let ok_prefix = len == 0 || is_python_string_prefix(p);
                    if ok_prefix && (rest[len..].starts_with('"') || rest[len..].starts_with('\''))
                    {
                        return Some(len);
                    }
                }
                None
            }
        }
    }

    fn lex_string(&mut self, start: usize) -> Result<(), LexError> {
        let quote = self.peek().expect("caller saw a quote");
        let triple: String = std::iter::repeat_n(quote, 3).collect();
        let is_triple =
            self.rest().starts_with(&triple) && (self.lang == Lang::Python || quote == '"');
        let (delim, multiline) = if is_triple {
            (triple.as_str(), true)
        } else {
            (&triple[..1], false)
        };
        self.pos += delim.len();
        loop {
            let Some(c) = self.peek() else {
                return Err(LexError::UnterminatedString { offset: start });
            };
            if c == '\\' {
                self.pos += 1;
                if let Some(n) = self.peek() {
                    self.pos += n.len_utf8();
                }
                continue;
            }
            if self.rest().starts_with(delim) {
                self.pos += delim.len();
                return Ok(());
            }
            if c == '\n' && !multiline {
                return Err(LexError::UnterminatedString { offset: start });
            }
            self.pos += c.len_utf8();
        }
    }

    fn lex_number(&mut self) {
        let start = self.pos;
        let hex = self.rest().starts_with("0x") || self.rest().starts_with("0X");
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_alphanumeric() || c == '_' => self.pos += 1,
                Some('.') if !self.src[start..self.pos].contains('.') && !hex => {
                    // `1..2` or a method call on a literal is not part of the number
                    match self.peek_at(1) {
                        Some(d) if d.is_ascii_digit() => self.pos += 1,
                        Some(d)
                            if d.is_alphabetic()
                                && !matches!(
                                    d,
                                    'e' | 'E' | 'f' | 'F' | 'd' | 'D' | 'j' | 'J' | 'l' | 'L'
                                ) =>
                        {
                            break
                        }
                        _ => self.pos += 1,
                    }
                }
                Some('+' | '-') => {
                    let prev = self.src[..self.pos].chars().last();
                    let exp = if hex {
                        matches!(prev, Some('p' | 'P'))
                    } else {
                        matches!(prev, Some('e' | 'E'))
                    };
                    if exp && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
    }
}

fn is_python_string_prefix(p: &str) -> bool {
    matches!(
        p.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}
