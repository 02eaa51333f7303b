use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::model::{GruLM, DEFAULT_MAX_LEN};
use super::vocab::{VocabError, Vocabulary};
use crate::exec::{Executor, Serial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig { epochs: 5, batch_size: 128, lr: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean sequence NLL over the epoch, measured before each batch's update.
    pub mean_nll: f64,
    pub mean_token_nll: f64,
    pub sequences: usize,
    pub tokens: usize,
}

/// Encoded corpus lines plus how many were dropped for exceeding `max_len`
/// generated tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCorpus {
    pub sequences: Vec<Vec<u32>>,
    pub too_long: usize,
}

pub fn encode_corpus<'s>(
    vocab: &Vocabulary,
    lines: impl IntoIterator<Item = &'s str>,
    max_len: usize,
) -> Result<EncodedCorpus, VocabError> {
    let mut sequences = Vec::new();
    let mut too_long = 0;
    for line in lines {
        let seq = vocab.encode(line)?;
        if seq.len() - 1 > max_len {
            too_long += 1;
        } else {
            sequences.push(seq);
        }
    }
    Ok(EncodedCorpus { sequences, too_long })
}

pub fn encode_corpus_default<'s>(
    vocab: &Vocabulary,
    lines: impl IntoIterator<Item = &'s str>,
) -> Result<EncodedCorpus, VocabError> {
    encode_corpus(vocab, lines, DEFAULT_MAX_LEN)
}

/// Maximum-likelihood training with Adam on shuffled minibatches. Each
/// batch minimizes the mean sequence NLL.
pub fn pretrain(model: &mut GruLM, corpus: &[Vec<u32>], cfg: &PretrainConfig) -> Vec<EpochStats> {
    pretrain_with(&Serial, model, corpus, cfg, |_| {})
}

pub fn pretrain_with<E: Executor>(
    exec: &E,
    model: &mut GruLM,
    corpus: &[Vec<u32>],
    cfg: &PretrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Vec<EpochStats> {
    assert!(cfg.batch_size > 0, "batch size must be positive");
    let mut opt = Adam::new(AdamConfig::with_lr(cfg.lr), model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut stats = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut nll_sum, mut tokens) = (0.0, 0);
        for batch in order.chunks(cfg.batch_size) {
            let seqs: Vec<&[u32]> = batch.iter().map(|&i| corpus[i].as_slice()).collect();
            let w = 1.0 / seqs.len() as f64;
            let (nlls, grads) = model.nll_and_grad_with(exec, &seqs, |_, _| w);
            opt.update(model.params_mut(), &grads);
            nll_sum += nlls.iter().sum::<f64>();
            tokens += seqs.iter().map(|s| s.len() - 1).sum::<usize>();
        }
        let n = corpus.len();
        let s = EpochStats {
            epoch,
            mean_nll: if n == 0 { 0.0 } else { nll_sum / n as f64 },
            mean_token_nll: if tokens == 0 { 0.0 } else { nll_sum / tokens as f64 },
            sequences: n,
            tokens,
        };
        on_epoch(&s);
        stats.push(s);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Hyper;
    use alloc::vec;

    const SMALL: Hyper = Hyper { embed: 8, hidden: 16, layers: 1 };

    #[test]
    fn zero_epochs_is_a_no_op() {
        let v = Vocabulary::from_corpus(["CCO"]).unwrap();
        let mut m = GruLM::new(v.clone(), SMALL, 1).unwrap();
        let before = m.clone();
        let corpus = vec![v.encode("CCO").unwrap()];
        let cfg = PretrainConfig { epochs: 0, ..PretrainConfig::default() };
        assert!(pretrain(&mut m, &corpus, &cfg).is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn memorizes_one_molecule() {
        let v = Vocabulary::from_corpus(["CC(=O)Nc1ccc(O)cc1"]).unwrap();
        let mut m = GruLM::new(v.clone(), SMALL, 2).unwrap();
        let seq = v.encode("CC(=O)Nc1ccc(O)cc1").unwrap();
        let cfg = PretrainConfig { epochs: 200, batch_size: 1, lr: 1e-2, seed: 0 };
        let stats = pretrain(&mut m, core::slice::from_ref(&seq), &cfg);
        assert_eq!(stats.len(), 200);
        let per_token = m.nll(&seq).unwrap() / (seq.len() - 1) as f64;
        assert!(per_token < 0.1, "{per_token}");
    }

    #[test]
    fn long_lines_are_dropped() {
        let v = Vocabulary::from_corpus(["CCCC"]).unwrap();
        let c = encode_corpus(&v, ["CC", "CCCC", "CCC"], 4).unwrap();
        assert_eq!(c.sequences.len(), 2);
        assert_eq!(c.too_long, 1);
    }
}
