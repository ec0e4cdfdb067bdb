// SPDX-License-Identifier: Apache-2.0

//! Hand-written lexer for MiniSol. Annotation lines (`#invariant ...`,
//! `#pre ...`, `#post ...`, `#modifies ...`) are line-delimited: the lexer
//! emits an `EndOfAnnotation` token at the end of the physical line so the
//! parser knows where the annotation expression stops.

use crate::word::Word256;

use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(Word256),
    // Keywords.
    Contract,
    Constructor,
    Function,
    Returns,
    Return,
    Let,
    Require,
    Assert,
    If,
    Else,
    Call,
    Forall,
    Sum,
    True,
    False,
    Msg,
    Uint256,
    AddressTy,
    BoolTy,
    Map,
    // Annotation introducers and terminator.
    HashInvariant,
    HashPre,
    HashPost,
    HashModifies,
    EndOfAnnotation,
    // Punctuation.
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    ColonColon,
    Dot,
    FatArrow,
    Assign,
    // Operators.
    Plus,
    Minus,
    Star,
    StarStar,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Eof => "end of input".to_string(),
            Tok::EndOfAnnotation => "end of annotation line".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Contract => "contract",
            Tok::Constructor => "constructor",
            Tok::Function => "function",
            Tok::Returns => "returns",
            Tok::Return => "return",
            Tok::Let => "let",
            Tok::Require => "require",
            Tok::Assert => "assert",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Call => "call",
            Tok::Forall => "forall",
            Tok::Sum => "sum",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Msg => "msg",
            Tok::Uint256 => "uint256",
            Tok::AddressTy => "address",
            Tok::BoolTy => "bool",
            Tok::Map => "map",
            Tok::HashInvariant => "#invariant",
            Tok::HashPre => "#pre",
            Tok::HashPost => "#post",
            Tok::HashModifies => "#modifies",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::ColonColon => "::",
            Tok::Dot => ".",
            Tok::FatArrow => "=>",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::StarStar => "**",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut in_annotation = false;

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            tokens.push(Token {
                tok: $tok,
                line: $line,
                col: $col,
            })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);

        // Newlines terminate annotation lines.
        if c == '\n' {
            if in_annotation {
                push!(Tok::EndOfAnnotation, tline, tcol);
                in_annotation = false;
            }
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
        // Comments.
        if c == '/' && i + 1 < chars.len() && chars[i + 1] == '/' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue; // newline handled above
        }
        if c == '/' && i + 1 < chars.len() && chars[i + 1] == '*' {
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        expected: "`*/`".into(),
                        found: "end of input".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        // Annotation introducer.
        if c == '#' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let tok = match word.as_str() {
                "invariant" => Tok::HashInvariant,
                "pre" => Tok::HashPre,
                "post" => Tok::HashPost,
                "modifies" => Tok::HashModifies,
                other => {
                    return Err(ParseError::Syntax {
                        line: tline,
                        col: tcol,
                        expected: "#invariant, #pre, #post, or #modifies".into(),
                        found: format!("#{other}"),
                    })
                }
            };
            col += (j - i) as u32;
            i = j;
            push!(tok, tline, tcol);
            in_annotation = true;
            continue;
        }
        // Numbers (decimal or 0x-hex).
        if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            if c == '0' && i + 1 < chars.len() && (chars[i + 1] == 'x' || chars[i + 1] == 'X') {
                j = i + 2;
                while j < chars.len() && chars[j].is_ascii_hexdigit() {
                    j += 1;
                }
            } else {
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let literal: String = chars[start..j].iter().collect();
            let value = Word256::parse(&literal).ok_or(ParseError::BadLiteral {
                line: tline,
                col: tcol,
                literal: literal.clone(),
            })?;
            col += (j - i) as u32;
            i = j;
            push!(Tok::Int(value), tline, tcol);
            continue;
        }
        // Identifiers and keywords.
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let tok = match word.as_str() {
                "contract" => Tok::Contract,
                "constructor" => Tok::Constructor,
                "function" => Tok::Function,
                "returns" => Tok::Returns,
                "return" => Tok::Return,
                "let" => Tok::Let,
                "require" => Tok::Require,
                "assert" => Tok::Assert,
                "if" => Tok::If,
                "else" => Tok::Else,
                "call" => Tok::Call,
                "forall" => Tok::Forall,
                "sum" => Tok::Sum,
                "true" => Tok::True,
                "false" => Tok::False,
                "msg" => Tok::Msg,
                "uint256" => Tok::Uint256,
                "address" => Tok::AddressTy,
                "bool" => Tok::BoolTy,
                "map" => Tok::Map,
                _ => Tok::Ident(word.clone()),
            };
            col += (j - i) as u32;
            i = j;
            push!(tok, tline, tcol);
            continue;
        }
        // Operators and punctuation.
        let two: Option<Tok> = if i + 1 < chars.len() {
            match (c, chars[i + 1]) {
                (':', ':') => Some(Tok::ColonColon),
                ('=', '>') => Some(Tok::FatArrow),
                ('=', '=') => Some(Tok::EqEq),
                ('!', '=') => Some(Tok::Ne),
                ('<', '=') => Some(Tok::Le),
                ('>', '=') => Some(Tok::Ge),
                ('&', '&') => Some(Tok::AndAnd),
                ('|', '|') => Some(Tok::OrOr),
                ('*', '*') => Some(Tok::StarStar),
                _ => None,
            }
        } else {
            None
        };
        if let Some(tok) = two {
            push!(tok, tline, tcol);
            i += 2;
            col += 2;
            continue;
        }
        let one = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '=' => Tok::Assign,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '!' => Tok::Bang,
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: "a token".into(),
                    found: format!("`{other}`"),
                })
            }
        };
        push!(one, tline, tcol);
        i += 1;
        col += 1;
    }

    if in_annotation {
        push!(Tok::EndOfAnnotation, line, col);
    }
    push!(Tok::Eof, line, col);
    Ok(tokens)
}
