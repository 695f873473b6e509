//! Hand-rolled lexer for the `.skel` surface syntax.

use super::{Code, Diagnostic, Loc, SourceUnit};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    KwProgram,
    KwShared,
    KwInit,
    KwProcess,
    KwProps,
    KwState,
    KwTs,
    KwArc,
    KwWhen,
    KwDo,
    KwSync,
    KwWith,
    KwAlt,
    KwSkip,
    KwTrue,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Arrow,   // ->
    Becomes, // :=
    Eq,
    Ne,
    Lt,
    Le,
    Amp,
    Pipe,
    Bang,
    ParPar, // ||
    Plus,
    Minus,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::KwProgram => "program",
            Tok::KwShared => "shared",
            Tok::KwInit => "init",
            Tok::KwProcess => "process",
            Tok::KwProps => "props",
            Tok::KwState => "state",
            Tok::KwTs => "ts",
            Tok::KwArc => "arc",
            Tok::KwWhen => "when",
            Tok::KwDo => "do",
            Tok::KwSync => "sync",
            Tok::KwWith => "with",
            Tok::KwAlt => "alt",
            Tok::KwSkip => "skip",
            Tok::KwTrue => "true",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Arrow => "->",
            Tok::Becomes => ":=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Bang => "!",
            Tok::ParPar => "||",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub loc: Loc,
}

pub fn lex(src: &SourceUnit) -> Result<Vec<Spanned>, Diagnostic> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let bytes: Vec<char> = src.text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let loc = Loc { line, col };
        let advance = |n: usize, col: &mut u32, i: &mut usize| {
            *col += n as u32;
            *i += n;
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            ' ' | '\t' | '\r' => advance(1, &mut col, &mut i),
            '/' if i + 1 < bytes.len() && bytes[i + 1] == '/' => {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                }
            }
            '{' => {
                out.push(Spanned {
                    tok: Tok::LBrace,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            '}' => {
                out.push(Spanned {
                    tok: Tok::RBrace,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            '(' => {
                out.push(Spanned {
                    tok: Tok::LParen,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            ')' => {
                out.push(Spanned {
                    tok: Tok::RParen,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            ';' => {
                out.push(Spanned {
                    tok: Tok::Semi,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            ',' => {
                out.push(Spanned {
                    tok: Tok::Comma,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            '+' => {
                out.push(Spanned {
                    tok: Tok::Plus,
                    loc,
                });
                advance(1, &mut col, &mut i);
            }
            '&' => {
                out.push(Spanned { tok: Tok::Amp, loc });
                advance(1, &mut col, &mut i);
            }
            '=' => {
                out.push(Spanned { tok: Tok::Eq, loc });
                advance(1, &mut col, &mut i);
            }
            ':' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    out.push(Spanned {
                        tok: Tok::Becomes,
                        loc,
                    });
                    advance(2, &mut col, &mut i);
                } else {
                    out.push(Spanned {
                        tok: Tok::Colon,
                        loc,
                    });
                    advance(1, &mut col, &mut i);
                }
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '>' {
                    out.push(Spanned {
                        tok: Tok::Arrow,
                        loc,
                    });
                    advance(2, &mut col, &mut i);
                } else {
                    out.push(Spanned {
                        tok: Tok::Minus,
                        loc,
                    });
                    advance(1, &mut col, &mut i);
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    out.push(Spanned { tok: Tok::Ne, loc });
                    advance(2, &mut col, &mut i);
                } else {
                    out.push(Spanned {
                        tok: Tok::Bang,
                        loc,
                    });
                    advance(1, &mut col, &mut i);
                }
            }
            '<' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    out.push(Spanned { tok: Tok::Le, loc });
                    advance(2, &mut col, &mut i);
                } else {
                    out.push(Spanned { tok: Tok::Lt, loc });
                    advance(1, &mut col, &mut i);
                }
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '|' {
                    out.push(Spanned {
                        tok: Tok::ParPar,
                        loc,
                    });
                    advance(2, &mut col, &mut i);
                } else {
                    out.push(Spanned {
                        tok: Tok::Pipe,
                        loc,
                    });
                    advance(1, &mut col, &mut i);
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                col += (i - start) as u32;
                let n: i64 = text.parse().map_err(|_| {
                    Diagnostic::error(
                        &src.origin,
                        loc,
                        Code::SyntaxError,
                        format!("integer literal `{text}` out of range"),
                    )
                })?;
                out.push(Spanned {
                    tok: Tok::Int(n),
                    loc,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                col += (i - start) as u32;
                let tok = match text.as_str() {
                    "program" => Tok::KwProgram,
                    "shared" => Tok::KwShared,
                    "init" => Tok::KwInit,
                    "process" => Tok::KwProcess,
                    "props" => Tok::KwProps,
                    "state" => Tok::KwState,
                    "ts" => Tok::KwTs,
                    "arc" => Tok::KwArc,
                    "when" => Tok::KwWhen,
                    "do" => Tok::KwDo,
                    "sync" => Tok::KwSync,
                    "with" => Tok::KwWith,
                    "alt" => Tok::KwAlt,
                    "skip" => Tok::KwSkip,
                    "true" => Tok::KwTrue,
                    _ => Tok::Ident(text),
                };
                out.push(Spanned { tok, loc });
            }
            other => {
                return Err(Diagnostic::error(
                    &src.origin,
                    loc,
                    Code::SyntaxError,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        loc: Loc { line, col },
    });
    Ok(out)
}
