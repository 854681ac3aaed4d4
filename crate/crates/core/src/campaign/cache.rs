// SPDX-License-Identifier: Apache-2.0

//! Append-only verdict cache (one JSON record per line).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bmc::Verdict;
use crate::oracle::Stimulus;

use super::CampaignError;

pub const CACHE_FILE: &str = "verdicts.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub bit: u32,
    pub property: String,
    pub verdict: Verdict,
    pub failed_at: Option<usize>,
    pub witness: Option<Stimulus>,
}

pub fn cache_key(core_hash: &str, bit: u32, property: &str, k_max: usize, induction: bool) -> String {
    let mut h = Sha256::new();
    h.update(format!("{core_hash}\n{bit}\n{property}\n{k_max}\n{induction}").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Cache {
    path: PathBuf,
    records: HashMap<String, CacheRecord>,
    out: Option<File>,
}

impl Cache {
    /// Opens (creating if needed) the cache in `dir`. Unparsable lines, such
    /// as a truncated final record, are skipped.
    pub fn open(dir: &Path) -> Result<Cache, CampaignError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut records = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                if let Ok(r) = serde_json::from_str::<CacheRecord>(&line?) {
                    records.insert(r.key.clone(), r);
                }
            }
        }
        Ok(Cache { path, records, out: None })
    }

    pub fn get(&self, key: &str) -> Option<&CacheRecord> {
        self.records.get(key)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, r: CacheRecord) -> Result<(), CampaignError> {
        if self.out.is_none() {
            self.out = Some(OpenOptions::new().create(true).append(true).open(&self.path)?);
        }
        let f = self.out.as_mut().expect("opened above");
        writeln!(f, "{}", serde_json::to_string(&r).expect("record serializes"))?;
        self.records.insert(r.key.clone(), r);
        Ok(())
    }
}
