use crate::error::ScriptError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Char(char),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// A line break separates this token from the previous one.
    pub newline: bool,
}

const PUNCTS: [&str; 27] = [
    "=>", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ";", ":", ".",
    "=", "!", "+", "-", "*", "/", "%", "<", ">", "_",
];

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ScriptError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    let mut newline = true;
    loop {
        while let Some(c) = cur.peek() {
            if c == '\n' {
                newline = true;
                cur.bump();
            } else if c.is_whitespace() {
                cur.bump();
            } else if c == '/' && src_rest_starts(&cur, "//") {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                line,
                col,
                newline: true,
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            number(&mut cur, line, col)?
        } else if c.is_alphabetic() || c == '$' || (c == '_' && ident_follows(&cur)) {
            let mut s = String::new();
            while let Some(c) = cur
                .peek()
                .filter(|c| c.is_alphanumeric() || *c == '_' || *c == '$')
            {
                s.push(c);
                cur.bump();
            }
            Tok::Ident(s)
        } else if c == '"' {
            cur.bump();
            Tok::Str(quoted(&mut cur, '"', line, col)?)
        } else if c == '\'' {
            cur.bump();
            let s = quoted(&mut cur, '\'', line, col)?;
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(ch), None) => Tok::Char(ch),
                _ => {
                    return Err(ScriptError::syntax(
                        line,
                        col,
                        "character literal must hold one character",
                    ))
                }
            }
        } else {
            let p = PUNCTS
                .iter()
                .find(|p| src_rest_starts(&cur, p))
                .ok_or_else(|| {
                    ScriptError::syntax(line, col, format!("unexpected character `{c}`"))
                })?;
            for _ in 0..p.len() {
                cur.bump();
            }
            Tok::Punct(p)
        };
        out.push(Token {
            tok,
            line,
            col,
            newline,
        });
        newline = false;
    }
}

fn src_rest_starts(cur: &Cursor<'_>, s: &str) -> bool {
    let mut it = cur.chars.clone();
    s.chars().all(|c| it.next() == Some(c))
}

fn ident_follows(cur: &Cursor<'_>) -> bool {
    let mut it = cur.chars.clone();
    it.next();
    it.next().is_some_and(|c| c.is_alphanumeric() || c == '_')
}

fn number(cur: &mut Cursor<'_>, line: usize, col: usize) -> Result<Tok, ScriptError> {
    let mut s = String::new();
    while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
        s.push(c);
        cur.bump();
    }
    let mut ahead = cur.chars.clone();
    if ahead.next() == Some('.') && ahead.next().is_some_and(|c| c.is_ascii_digit()) {
        s.push('.');
        cur.bump();
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            s.push(c);
            cur.bump();
        }
        return s
            .parse()
            .map(Tok::Float)
            .map_err(|_| ScriptError::syntax(line, col, "malformed number"));
    }
    s.parse()
        .map(Tok::Int)
        .map_err(|_| ScriptError::syntax(line, col, "integer literal out of range"))
}

fn quoted(
    cur: &mut Cursor<'_>,
    close: char,
    line: usize,
    col: usize,
) -> Result<String, ScriptError> {
    let mut s = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(ScriptError::syntax(line, col, "unterminated literal"))
            }
            Some(c) if c == close => return Ok(s),
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('r') => s.push('\r'),
                Some('0') => s.push('\0'),
                Some(c @ ('\\' | '"' | '\'')) => s.push(c),
                _ => {
                    return Err(ScriptError::syntax(
                        cur.line,
                        cur.col,
                        "unknown escape sequence",
                    ))
                }
            },
            Some(c) => s.push(c),
        }
    }
}
