//! Sharded JSONL output with a digest manifest.

use std::borrow::Borrow;
use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetError, InstructionRecord};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInfo {
    /// File name relative to the output directory.
    pub path: String,
    pub records: usize,
    /// Hex sha256 of the shard's bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub shards: Vec<ShardInfo>,
    pub total: usize,
    pub config: serde_json::Value,
}

struct Shard {
    path: PathBuf,
    name: String,
    out: BufWriter<File>,
    hash: Sha256,
    records: usize,
}

impl Shard {
    fn open(dir: &Path, index: usize) -> io::Result<Shard> {
        let name = format!("shard-{index:05}.jsonl");
        let path = dir.join(&name);
        let out = BufWriter::new(File::create(&path)?);
        Ok(Shard {
            path,
            name,
            out,
            hash: Sha256::new(),
            records: 0,
        })
    }

    fn write(&mut self, line: &[u8]) -> io::Result<()> {
        self.out.write_all(line)?;
        self.hash.update(line);
        self.records += 1;
        Ok(())
    }

    fn finish(self) -> io::Result<ShardInfo> {
        let file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()?;
        Ok(ShardInfo {
            path: self.name,
            records: self.records,
            sha256: hex::encode(self.hash.finalize()),
        })
    }
}

/// Writes records as newline-delimited JSON in shards of at most
/// `shard_size`, then `manifest.json`. On failure every file this call
/// created is removed before the error is returned.
pub fn emit_jsonl<I>(
    records: I,
    shard_size: usize,
    out_dir: &Path,
    config: serde_json::Value,
) -> Result<Manifest, DatasetError>
where
    I: IntoIterator,
    I::Item: Borrow<InstructionRecord>,
{
    if shard_size == 0 {
        return Err(DatasetError::ShardSize);
    }
    fs::create_dir_all(out_dir)?;
    let mut created: Vec<PathBuf> = Vec::new();
    let result = write_all(records, shard_size, out_dir, config, &mut created);
    if result.is_err() {
        for p in &created {
            let _ = fs::remove_file(p);
        }
    }
    result
}

fn write_all<I>(
    records: I,
    shard_size: usize,
    out_dir: &Path,
    config: serde_json::Value,
    created: &mut Vec<PathBuf>,
) -> Result<Manifest, DatasetError>
where
    I: IntoIterator,
    I::Item: Borrow<InstructionRecord>,
{
    let mut shards = Vec::new();
    let mut current: Option<Shard> = None;
    let mut line = Vec::new();
    let mut total = 0;
    for r in records {
        if current.as_ref().is_some_and(|s| s.records == shard_size) {
            shards.push(current.take().expect("open shard").finish()?);
        }
        let shard = match current.as_mut() {
            Some(s) => s,
            None => {
                let s = Shard::open(out_dir, shards.len())?;
                created.push(s.path.clone());
                current.insert(s)
            }
        };
        line.clear();
        serde_json::to_writer(&mut line, r.borrow())?;
        line.push(b'\n');
        shard.write(&line)?;
        total += 1;
    }
    if let Some(s) = current {
        shards.push(s.finish()?);
    }
    let manifest = Manifest { shards, total, config };
    let path = out_dir.join(MANIFEST_NAME);
    created.push(path.clone());
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(&path, text)?;
    Ok(manifest)
}

/// Reads every record from a JSONL file.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<InstructionRecord>, DatasetError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
