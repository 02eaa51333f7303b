use core::fmt;

/// Lexical class of a SMILES token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    AtomOrganic,
    AtomBracket,
    Bond,
    BranchOpen,
    BranchClose,
    RingClosure,
    Dot,
}

/// A token borrowed from the source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of the token in the source.
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenizeError {
    Empty,
    UnknownCharacter { pos: usize },
    UnterminatedBracket { pos: usize },
    BadRingLabel { pos: usize },
}

impl fmt::Display for TokenizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenizeError::Empty => write!(f, "empty SMILES string"),
            TokenizeError::UnknownCharacter { pos } => write!(f, "unknown character at {pos}"),
            TokenizeError::UnterminatedBracket { pos } => {
                write!(f, "bracket atom opened at {pos} is never closed")
            }
            TokenizeError::BadRingLabel { pos } => {
                write!(f, "'%' at {pos} must be followed by two digits")
            }
        }
    }
}

impl core::error::Error for TokenizeError {}

/// Split a SMILES string into tokens. The concatenation of the returned token
/// texts is always the input string.
pub fn tokenize(text: &str) -> Result<alloc::vec::Vec<Token<'_>>, TokenizeError> {
    if text.is_empty() {
        return Err(TokenizeError::Empty);
    }
    let bytes = text.as_bytes();
    let mut tokens = alloc::vec::Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let kind = match bytes[i] {
            b'B' | b'C' => {
                let two = matches!((bytes[i], bytes.get(i + 1)), (b'B', Some(b'r')) | (b'C', Some(b'l')));
                i += if two { 2 } else { 1 };
                TokenKind::AtomOrganic
            }
            b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                i += 1;
                TokenKind::AtomOrganic
            }
            b'[' => {
                let close = bytes[i + 1..]
                    .iter()
                    .position(|&b| b == b']')
                    .ok_or(TokenizeError::UnterminatedBracket { pos: i })?;
                i += close + 2;
                TokenKind::AtomBracket
            }
            b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                i += 1;
                TokenKind::Bond
            }
            b'(' => {
                i += 1;
                TokenKind::BranchOpen
            }
            b')' => {
                i += 1;
                TokenKind::BranchClose
            }
            b'.' => {
                i += 1;
                TokenKind::Dot
            }
            b'0'..=b'9' => {
                i += 1;
                TokenKind::RingClosure
            }
            b'%' => {
                let ok = bytes.len() >= i + 3
                    && bytes[i + 1].is_ascii_digit()
                    && bytes[i + 2].is_ascii_digit();
                if !ok {
                    return Err(TokenizeError::BadRingLabel { pos: i });
                }
                i += 3;
                TokenKind::RingClosure
            }
            _ => return Err(TokenizeError::UnknownCharacter { pos: i }),
        };
        tokens.push(Token { kind, text: &text[start..i], pos: start });
    }
    Ok(tokens)
}
