use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::{tokenize, TokenizeError};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

const PAD_TEXT: &str = "<pad>";
const BOS_TEXT: &str = "<bos>";
const EOS_TEXT: &str = "<eos>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabError {
    UnknownToken { token: String },
    Tokenize(TokenizeError),
    Malformed(&'static str),
}

impl fmt::Display for VocabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VocabError::UnknownToken { token } => write!(f, "token {token:?} is not in the vocabulary"),
            VocabError::Tokenize(e) => write!(f, "{e}"),
            VocabError::Malformed(why) => write!(f, "malformed vocabulary: {why}"),
        }
    }
}

impl core::error::Error for VocabError {}

/// Token inventory: the three specials at 0..3, then corpus tokens in
/// byte order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Collect every token appearing in `lines`.
    pub fn from_corpus<'s>(lines: impl IntoIterator<Item = &'s str>) -> Result<Self, VocabError> {
        let mut seen = BTreeSet::new();
        for line in lines {
            for t in tokenize(line).map_err(VocabError::Tokenize)? {
                seen.insert(t.text.to_string());
            }
        }
        let mut tokens: Vec<String> = [PAD_TEXT, BOS_TEXT, EOS_TEXT].iter().map(|s| s.to_string()).collect();
        tokens.extend(seen);
        Self::try_from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// `BOS, tokens.., EOS`.
    pub fn encode(&self, smiles: &str) -> Result<Vec<u32>, VocabError> {
        let toks = tokenize(smiles).map_err(VocabError::Tokenize)?;
        let mut out = Vec::with_capacity(toks.len() + 2);
        out.push(BOS);
        for t in toks {
            let id = self.id(t.text).filter(|&i| i > EOS);
            out.push(id.ok_or_else(|| VocabError::UnknownToken { token: t.text.to_string() })?);
        }
        out.push(EOS);
        Ok(out)
    }

    /// Concatenate token texts, skipping the specials.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter(|&&i| i > EOS)
            .filter_map(|&i| self.token(i))
            .collect()
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = VocabError;

    fn try_from(tokens: Vec<String>) -> Result<Self, VocabError> {
        if tokens.len() < 3 || tokens[0] != PAD_TEXT || tokens[1] != BOS_TEXT || tokens[2] != EOS_TEXT {
            return Err(VocabError::Malformed("special tokens must lead"));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(VocabError::Malformed("duplicate token"));
            }
        }
        Ok(Vocabulary { tokens, index })
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn round_trips_corpus_lines() {
        let v = Vocabulary::from_corpus(["CCO", "c1ccccc1Cl", "[NH4+]"]).unwrap();
        assert_eq!(v.token(PAD), Some("<pad>"));
        assert_eq!(v.id("Cl"), Some(v.encode("Cl").unwrap()[1]));
        for s in ["CCO", "c1ccccc1Cl", "[NH4+]", "OCC"] {
            let ids = v.encode(s).unwrap();
            assert_eq!((ids[0], *ids.last().unwrap()), (BOS, EOS));
            assert_eq!(v.decode(&ids), s);
        }
        assert_eq!(v.encode("CBr"), Err(VocabError::UnknownToken { token: "Br".into() }));
        assert!(matches!(v.encode(""), Err(VocabError::Tokenize(_))));
    }

    #[test]
    fn ids_are_bijective() {
        let v = Vocabulary::from_corpus(["CC(=O)N", "C#N"]).unwrap();
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.id(t), Some(i as u32));
        }
        let back = Vocabulary::try_from(Vec::from(v.clone())).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::try_from(vec!["C".to_string()]).is_err());
    }
}
