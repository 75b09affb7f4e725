//! `run.json`: the resolved configuration of one invocation plus content
//! hashes of everything it read and wrote.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::Failure;

pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub command: Command,
    /// Input path to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file, relative to the output directory, to SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// Outputs whose contents depend on wall-clock time.
    pub volatile: Vec<String>,
    pub elapsed_seconds: f64,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| curricula::Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Failure::Integrity(format!("{}: {e}", path.display())))
    }
}

pub fn hash_file(path: &Path) -> Result<String, Failure> {
    let mut f = File::open(path).map_err(|e| curricula::Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| curricula::Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Collects input and output hashes while a command runs.
pub struct RunLog {
    pub out: PathBuf,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub volatile: Vec<String>,
}

impl RunLog {
    pub fn new(out: &Path, seed: u64) -> Result<Self, Failure> {
        std::fs::create_dir_all(out).map_err(|e| curricula::Error::io(out, e))?;
        Ok(RunLog {
            out: out.to_path_buf(),
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            volatile: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<(), Failure> {
        let h = hash_file(path)?;
        self.inputs.insert(path.display().to_string(), h);
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| curricula::Error::io(dir, e))?;
        }
        std::fs::write(&p, contents).map_err(|e| curricula::Error::io(&p, e))?;
        self.recorded(name)?;
        Ok(p)
    }

    pub fn write_volatile(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
        let p = self.write(name, contents)?;
        self.volatile.push(name.to_owned());
        Ok(p)
    }

    /// Records a file some library call already wrote under the output dir.
    pub fn recorded(&mut self, name: &str) -> Result<(), Failure> {
        let h = hash_file(&self.path(name))?;
        self.outputs.insert(name.to_owned(), h);
        Ok(())
    }

    pub fn recorded_path(&mut self, path: &Path) -> Result<(), Failure> {
        let name = path
            .strip_prefix(&self.out)
            .map_err(|_| Failure::Integrity(format!("{} is outside the output directory", path.display())))?;
        self.recorded(&name.to_string_lossy())
    }

    pub fn finish(self, command: Command, threads: usize, elapsed_seconds: f64) -> Result<RunRecord, Failure> {
        let record = RunRecord {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: self.seed,
            threads,
            command,
            inputs: self.inputs,
            outputs: self.outputs,
            volatile: self.volatile,
            elapsed_seconds,
        };
        let p = self.out.join(RUN_FILE);
        let json = serde_json::to_string_pretty(&record).expect("run record serializes") + "\n";
        std::fs::write(&p, json).map_err(|e| curricula::Error::io(&p, e))?;
        Ok(record)
    }
}

/// Stable outputs of a record, skipping volatile ones.
pub fn stable_outputs(r: &RunRecord) -> BTreeMap<&str, &str> {
    r.outputs
        .iter()
        .filter(|(k, _)| !r.volatile.contains(k))
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect()
}
