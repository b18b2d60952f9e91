use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    /// Magnitude only; a leading minus is a separate token.
    Int(u64),
    /// `@name` or `@17`.
    Pointer(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Pointer(p) => format!("pointer @{p}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest first so that `->` wins over `-`.
const PUNCTS: &[&str] = &[
    ":=", "->", "==", "!=", "<=", ">=", "&&", "||", "++", "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "=", "<",
    ">", "+", "-", "*", "/", "%", "!", "`", "_",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let pos = Pos { line, col };
        if c.is_ascii_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|d| d.is_ascii_alphanumeric() || *d == '_')) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<u64>().map_err(|_| ParseError::new(pos, format!("integer literal {text} is too large")))?;
            out.push(Token { tok: Tok::Int(n), pos });
        } else if c == '@' {
            bump!();
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            if start == i {
                return Err(ParseError::new(pos, "expected a pointer name after `@`"));
            }
            out.push(Token { tok: Tok::Pointer(chars[start..i].iter().collect()), pos });
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::new(pos, "unterminated string literal")),
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        let esc = chars.get(i + 1).copied();
                        let ch = match esc {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => {
                                return Err(ParseError::new(Pos { line, col }, "unknown escape sequence"));
                            }
                        };
                        bump!();
                        bump!();
                        s.push(ch);
                    }
                    Some(_) => {
                        s.push(chars[i]);
                        bump!();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
                return Err(ParseError::new(pos, format!("unexpected character `{c}`")));
            };
            for _ in 0..p.chars().count() {
                bump!();
            }
            out.push(Token { tok: Tok::Punct(p), pos });
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks(r#"p -> "select course" : (id, r) // c"#),
            vec![
                Tok::Ident("p".into()),
                Tok::Punct("->"),
                Tok::Str("select course".into()),
                Tok::Punct(":"),
                Tok::Punct("("),
                Tok::Ident("id".into()),
                Tok::Punct(","),
                Tok::Ident("r".into()),
                Tok::Punct(")"),
                Tok::Eof
            ]
        );
        assert_eq!(toks("t.0.1"), vec![
            Tok::Ident("t".into()),
            Tok::Punct("."),
            Tok::Int(0),
            Tok::Punct("."),
            Tok::Int(1),
            Tok::Eof
        ]);
        assert_eq!(toks("@pf1 @3 2`x _"), vec![
            Tok::Pointer("pf1".into()),
            Tok::Pointer("3".into()),
            Tok::Int(2),
            Tok::Punct("`"),
            Tok::Ident("x".into()),
            Tok::Punct("_"),
            Tok::Eof
        ]);
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("a\n  bb").unwrap();
        assert_eq!((t[1].pos.line, t[1].pos.col), (2, 3));
        let e = tokenize("x $").unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (1, 3));
        assert!(tokenize("\"abc").is_err());
        assert!(tokenize("99999999999999999999").is_err());
        assert_eq!(toks(r#""a\"b""#), vec![Tok::Str("a\"b".into()), Tok::Eof]);
    }
}
