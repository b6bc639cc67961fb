use super::ast::Span;
use super::{Phase, ScriptError};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Number(f64),
    Str(String),
    Ident(String),
    /// One of the reserved words in `ast::KEYWORDS`.
    Keyword(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Keyword(k) => format!("keyword `{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: [&str; 19] = [
    "=>", "==", "!=", "<=", ">=", "(", ")", "{", "}", ",", ".", "=", "<", ">", "+", "-", "*", "/",
    "!",
];

fn keyword(word: &str) -> Option<&'static str> {
    super::ast::KEYWORDS.iter().copied().find(|k| *k == word)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.column)
    }
}

fn lex_error(span: Span, message: impl Into<String>) -> ScriptError {
    ScriptError::new(Phase::Lex, span, message)
}

/// Split source text into tokens. `#` starts a comment running to the end
/// of the line. The final token is always `Eof`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ScriptError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let span = cur.span();
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span,
            });
            return Ok(out);
        };
        let tok = if c == '#' {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, span)?
        } else if c == '"' {
            lex_string(&mut cur, span)?
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while cur
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                word.push(cur.bump().unwrap_or_default());
            }
            keyword(&word).map_or(Tok::Ident(word), Tok::Keyword)
        } else {
            lex_symbol(&mut cur, span)?
        };
        out.push(Token { tok, span });
    }
}

fn lex_number(cur: &mut Cursor<'_>, span: Span) -> Result<Tok, ScriptError> {
    let mut text = String::new();
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        text.push(cur.bump().unwrap_or_default());
    }
    // A dot only belongs to the number when a digit follows it, so that
    // `5.name()` still lexes as a method call.
    let mut ahead = cur.chars.clone();
    if ahead.next() == Some('.') && ahead.next().is_some_and(|c| c.is_ascii_digit()) {
        text.push(cur.bump().unwrap_or_default());
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            text.push(cur.bump().unwrap_or_default());
        }
    }
    if cur
        .peek()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
    {
        let mut ahead = cur.chars.clone();
        let mut word = String::new();
        while let Some(c) = ahead
            .next()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        {
            word.push(c);
        }
        return Err(lex_error(
            cur.span(),
            format!(
                "number `{text}` runs into `{word}`; put a space between a number and its unit"
            ),
        ));
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Tok::Number)
        .ok_or_else(|| lex_error(span, format!("number `{text}` is out of range")))
}

fn lex_string(cur: &mut Cursor<'_>, span: Span) -> Result<Tok, ScriptError> {
    cur.bump();
    let mut s = String::new();
    loop {
        let at = cur.span();
        match cur.bump() {
            None => return Err(lex_error(span, "unterminated string literal")),
            Some('"') => return Ok(Tok::Str(s)),
            Some('\\') => match cur.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some(other) => {
                    return Err(lex_error(
                        at,
                        format!("unknown escape sequence `\\{other}` in string"),
                    ))
                }
                None => return Err(lex_error(span, "unterminated string literal")),
            },
            Some(c) => s.push(c),
        }
    }
}

fn lex_symbol(cur: &mut Cursor<'_>, span: Span) -> Result<Tok, ScriptError> {
    let mut ahead = cur.chars.clone();
    let first = ahead.next().unwrap_or_default();
    let second = ahead.next();
    let pair: String = [Some(first), second].into_iter().flatten().collect();
    let sym = SYMBOLS
        .iter()
        .find(|s| s.len() == 2 && **s == pair)
        .or_else(|| {
            SYMBOLS
                .iter()
                .find(|s| s.len() == 1 && s.starts_with(first))
        })
        .copied();
    match sym {
        Some("!") => Err(lex_error(span, "`!` is not an operator; use `not` or `!=`")),
        Some(s) => {
            for _ in 0..s.len() {
                cur.bump();
            }
            Ok(Tok::Sym(s))
        }
        None => Err(lex_error(span, format!("unexpected character `{first}`"))),
    }
}
