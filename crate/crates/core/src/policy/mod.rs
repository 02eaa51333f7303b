//! Character-level SMILES language model with exact likelihoods, ancestral
//! sampling and Adam training over a small reverse-mode tape.

mod adam;
mod matrix;
mod model;
pub mod tape;
mod train;
mod vocab;

pub use adam::{Adam, AdamConfig};
pub use matrix::Matrix;
pub use model::{GruLM, Hyper, ModelError, Sample, DEFAULT_MAX_LEN};
pub use train::{encode_corpus, encode_corpus_default, pretrain, pretrain_with, EncodedCorpus, EpochStats, PretrainConfig};
pub use vocab::{VocabError, Vocabulary, BOS, EOS, PAD};
