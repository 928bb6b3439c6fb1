use super::ast::Span;
use super::ParseError;

/// Reserved words of the expression language.
pub const KEYWORDS: &[&str] = &[
    "self",
    "true",
    "false",
    "and",
    "or",
    "not",
    "implies",
    "if",
    "then",
    "else",
    "endif",
    "let",
    "in",
    "mod",
    "undefined",
    "isUndefined",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Numeric literal text; `is_float` when it has a fraction or exponent.
    Number {
        text: String,
        is_float: bool,
    },
    Str(String),
    Date(String),
    Ident(String),
    Keyword(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Number { text, .. } => format!("number `{text}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Date(d) => format!("date `@{d}`"),
            Tok::Ident(i) => format!("identifier `{i}`"),
            Tok::Keyword(k) => format!("`{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &[&str] = &["->", "::", "<>", "<=", ">=", "+", "-", "*", "/", "(", ")", ".", ",", "|", "=", "<", ">"];

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_float = false;
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                is_float = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::Number { text: src[start..i].to_owned(), is_float },
                span: Span::new(start, i),
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word.to_owned()),
            };
            out.push(Token { tok, span: Span::new(start, i) });
        } else if c == b'\'' {
            i += 1;
            let mut text = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(ParseError::at(src, Span::new(start, i), "unterminated string literal", vec![]));
                };
                match ch {
                    '\'' => {
                        i += 1;
                        break;
                    }
                    '\\' => {
                        let esc = src[i + 1..].chars().next();
                        let unescaped = match esc {
                            Some('\'') => '\'',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => {
                                return Err(ParseError::at(
                                    src,
                                    Span::new(i, i + 1 + esc.map_or(0, char::len_utf8)),
                                    "invalid escape sequence",
                                    vec![],
                                ))
                            }
                        };
                        text.push(unescaped);
                        i += 2;
                    }
                    _ => {
                        text.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(text), span: Span::new(start, i) });
        } else if c == b'@' {
            i += 1;
            // Digits with at most two inner dashes, so `@2024-05-01-x` stops
            // before the subtraction.
            let mut dashes = 0;
            while i < bytes.len() {
                if bytes[i].is_ascii_digit() {
                    i += 1;
                } else if bytes[i] == b'-' && dashes < 2 && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    dashes += 1;
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Date(src[start + 1..i].to_owned()), span: Span::new(start, i) });
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            out.push(Token { tok: Tok::Sym(sym), span: Span::new(start, i) });
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::at(
                src,
                Span::new(i, i + ch.len_utf8()),
                format!("unexpected character `{ch}`"),
                vec![],
            ));
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len()) });
    Ok(out)
}
