//! SMILES corpus files: one record per line, first whitespace-separated
//! field is the SMILES, blank lines and `#` comments are ignored.

use std::path::{Path, PathBuf};

use molbench_core::chem::{parse_smiles, Molecule, SmilesError};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::io::{read_bytes, sha256_hex};

#[derive(Debug, Clone)]
pub struct Corpus {
    pub path: PathBuf,
    /// SHA-256 of the file bytes.
    pub digest: String,
    pub smiles: Vec<String>,
}

impl Corpus {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_bytes(path)?;
        let digest = sha256_hex(&bytes);
        let text = String::from_utf8(bytes).map_err(|_| HarnessError::format(path, "corpus is not UTF-8"))?;
        let smiles = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_whitespace().next())
            .map(str::to_string)
            .collect();
        Ok(Corpus { path: path.to_path_buf(), digest, smiles })
    }

    pub fn len(&self) -> usize {
        self.smiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smiles.is_empty()
    }

    /// Parse every record, keeping input order.
    pub fn parse(&self) -> Vec<std::result::Result<Molecule, SmilesError>> {
        self.smiles.par_iter().map(|s| parse_smiles(s)).collect()
    }

    /// Parsed molecules plus the number of records that failed.
    pub fn molecules(&self) -> (Vec<Molecule>, u64) {
        let mut ok = Vec::with_capacity(self.len());
        let mut failed = 0;
        for (i, r) in self.parse().into_iter().enumerate() {
            match r {
                Ok(m) => ok.push(m),
                Err(e) => {
                    log::warn!("{}: record {} ({}) skipped: {e}", self.path.display(), i + 1, self.smiles[i]);
                    failed += 1;
                }
            }
        }
        (ok, failed)
    }
}
