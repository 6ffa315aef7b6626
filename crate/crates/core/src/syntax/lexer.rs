use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(usize),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Colon,
    Bar,
    Amp,
    Plus,
    Star,
    At,
    Eq,
    /// `^->`
    ConfProj,
    /// `^<-`
    IntegProj,
    /// `\/`
    Join,
    /// `/\_`
    Meet,
    /// `-[` opening a function arrow
    ArrowOpen,
    /// `->`
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Eof => "end of input".into(),
            t => format!("`{}`", t.text()),
        }
    }

    pub fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Bar => "|",
            Tok::Amp => "&",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::At => "@",
            Tok::Eq => "=",
            Tok::ConfProj => "^->",
            Tok::IntegProj => "^<-",
            Tok::Join => "\\/",
            Tok::Meet => "/\\_",
            Tok::ArrowOpen => "-[",
            Tok::Arrow => "->",
            Tok::Ident(_) | Tok::Num(_) | Tok::Eof => "",
        }
    }
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let symbols: &[(&str, Tok)] = &[
        ("^->", Tok::ConfProj),
        ("^<-", Tok::IntegProj),
        ("/\\_", Tok::Meet),
        ("\\/", Tok::Join),
        ("-[", Tok::ArrowOpen),
        ("->", Tok::Arrow),
        ("(", Tok::LParen),
        (")", Tok::RParen),
        ("[", Tok::LBrack),
        ("]", Tok::RBrack),
        (",", Tok::Comma),
        (".", Tok::Dot),
        (":", Tok::Colon),
        ("|", Tok::Bar),
        ("&", Tok::Amp),
        ("+", Tok::Plus),
        ("*", Tok::Star),
        ("@", Tok::At),
        ("=", Tok::Eq),
    ];
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if src[i..].starts_with("--") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let span = |end: usize| Span { start, end, line, col };
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), span(i)));
            col += (i - start) as u32;
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse().map_err(|_| ParseError {
                line,
                col,
                expected: vec!["a small number".into()],
                found: src[start..i].to_string(),
            })?;
            out.push((Tok::Num(n), span(i)));
            col += (i - start) as u32;
            continue;
        }
        for (s, t) in symbols {
            if src[i..].starts_with(s) {
                i += s.len();
                out.push((t.clone(), span(i)));
                col += s.len() as u32;
                continue 'outer;
            }
        }
        let ch = src[i..].chars().next().unwrap_or('?');
        return Err(ParseError { line, col, expected: vec!["a token".into()], found: ch.to_string() });
    }
    out.push((Tok::Eof, Span { start: i, end: i, line, col }));
    Ok(out)
}
