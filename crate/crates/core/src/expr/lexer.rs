use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Literal text of `digits["." digits]`, kept so `%` can shift it exactly.
    Number(String),
    Ident(String),
    Quoted(String),
    Percent,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Amp,
    Bar,
    Bang,
    Implies,
    Iff,
    Le,
    Ge,
    Ne,
    Lt,
    Gt,
    Eq,
    Assign,
    End,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number {n}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Quoted(s) => format!("literal '{s}'"),
            Tok::End => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Percent => "%",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Bang => "!",
            Tok::Implies => "=>",
            Tok::Iff => "<=>",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Eq => "=",
            Tok::Assign => ":=",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

/// Splits `src` into tokens. Identifiers may be dotted (`left.tool`), which
/// the network module uses for pair predicates.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = |a: u8, b: u8| c == a && bytes.get(i + 1) == Some(&b);
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                let frac = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == frac {
                    return Err(ParseError::new(i, "expected digits after decimal point", src));
                }
            }
            Tok::Number(src[start..i].to_string())
        } else if c.is_ascii_alphabetic() || c == b'_' {
            loop {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let dotted = i + 1 < bytes.len()
                    && bytes[i] == b'.'
                    && (bytes[i + 1].is_ascii_alphabetic() || bytes[i + 1] == b'_');
                if !dotted {
                    break;
                }
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c == b'\'' {
            i += 1;
            let body = i;
            while i < bytes.len() && bytes[i] != b'\'' {
                i += 1;
            }
            if i == bytes.len() {
                return Err(ParseError::new(start, "unterminated literal", src));
            }
            i += 1;
            Tok::Quoted(src[body..i - 1].to_string())
        } else if c == b'<' && bytes.get(i + 1) == Some(&b'=') && bytes.get(i + 2) == Some(&b'>') {
            i += 3;
            Tok::Iff
        } else if two(b'<', b'=') {
            i += 2;
            Tok::Le
        } else if two(b'>', b'=') {
            i += 2;
            Tok::Ge
        } else if two(b'!', b'=') {
            i += 2;
            Tok::Ne
        } else if two(b'=', b'>') {
            i += 2;
            Tok::Implies
        } else if two(b':', b'=') {
            i += 2;
            Tok::Assign
        } else {
            i += 1;
            match c {
                b'%' => Tok::Percent,
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b',' => Tok::Comma,
                b'&' => Tok::Amp,
                b'|' => Tok::Bar,
                b'!' => Tok::Bang,
                b'<' => Tok::Lt,
                b'>' => Tok::Gt,
                b'=' => Tok::Eq,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(ParseError::new(start, format!("unexpected character `{ch}`"), src));
                }
            }
        };
        out.push(Token { tok, pos: start });
    }
    out.push(Token {
        tok: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

/// Parses `digits["." digits]`, optionally scaled by 1/100 by moving the
/// decimal point so `0.8%` yields the correctly rounded `0.008`.
pub(crate) fn number_value(text: &str, percent: bool) -> f64 {
    if !percent {
        return text.parse().expect("lexer produced a valid number");
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    let digits = format!("{int}{frac}");
    let scale = frac.len() + 2;
    let shifted = if digits.len() > scale {
        let (a, b) = digits.split_at(digits.len() - scale);
        format!("{a}.{b}")
    } else {
        format!("0.{}{digits}", "0".repeat(scale - digits.len()))
    };
    shifted.parse().expect("shifted number is valid")
}
