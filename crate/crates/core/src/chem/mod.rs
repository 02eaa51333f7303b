//! SMILES tokenization, parsing into molecular graphs, canonical keys and
//! randomized re-rendering.

mod canon;
pub mod element;
mod mol;
mod parse;
mod token;
mod write;

pub use canon::{canonical_key, render_random_smiles, symmetry_classes};
pub use mol::{Atom, Bond, BondOrder, Molecule};
pub use parse::{parse_smiles, SmilesError};
pub use token::{tokenize, Token, TokenKind, TokenizeError};
