use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// A lexing or parsing failure at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

// Longest first so that prefixes do not win.
const SYMBOLS: &[&str] = &[
    "<~$", "<-", "<$", "<~", "<@", "<>", "->", "=>", "==", "~=", "&&", "/\\", "\\/", "{", "}", "(", ")", "[", "]", ";",
    ",", ":", ".", "=", "!", "@", "/",
];

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '#';
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let j = (i..chars.len()).find(|&j| !ident_char(chars[j])).unwrap_or(chars.len());
            let s: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let j = (i..chars.len()).find(|&j| !chars[j].is_ascii_digit()).unwrap_or(chars.len());
            let s: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            Tok::Num(s)
        } else {
            let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    col += s.len();
                    Tok::Sym(s)
                }
                None => {
                    return Err(ParseError { line, col, message: format!("unexpected character `{c}`") });
                }
            }
        };
        out.push(Token { tok, line: start.0, col: start.1 });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrows_lex_longest_first() {
        let toks: Vec<Tok> = lex("t[x] <~$ dY; r <~ t[x];").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(toks[4], Tok::Sym("<~$"));
        assert_eq!(toks[8], Tok::Sym("<~"));
    }

    #[test]
    fn positions_are_one_based() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(lex("// hi\nx").unwrap().len(), 2);
    }
}
