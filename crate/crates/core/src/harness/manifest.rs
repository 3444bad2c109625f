//! Append-only run manifests with content hashes of every produced file.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileRecord {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Identity of the run: hash of everything that determines its outputs.
    pub key: String,
    pub config_echo: String,
    /// `(label, seed, stream)`.
    pub seeds: Vec<(String, u64, u64)>,
    /// Labelled content hashes of inputs, such as the noise realization.
    pub hashes: Vec<(String, String)>,
    pub files: Vec<FileRecord>,
    pub wall_clock_s: f64,
    pub steps: u64,
}

impl RunManifest {
    pub fn new(command: &str, config_echo: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            version: ARTIFACT_VERSION.to_string(),
            key: sha256_hex(format!("{command}\n{config_echo}").as_bytes()),
            config_echo: config_echo.to_string(),
            ..Default::default()
        }
    }

    /// Records `rel` (relative to `dir`) with its current hash.
    pub fn add_file(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let sha256 = sha256_file(&dir.join(rel))?;
        self.files.push(FileRecord { path: rel.to_string(), sha256 });
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("[run]\n");
        writeln!(s, "command = {}", self.command).unwrap();
        writeln!(s, "version = {}", self.version).unwrap();
        writeln!(s, "key = {}", self.key).unwrap();
        writeln!(s, "steps = {}", self.steps).unwrap();
        writeln!(s, "wall_clock_s = {:.3}", self.wall_clock_s).unwrap();
        for (label, seed, stream) in &self.seeds {
            writeln!(s, "seed {label} = {seed} {stream}").unwrap();
        }
        for (label, h) in &self.hashes {
            writeln!(s, "hash {label} = {h}").unwrap();
        }
        for f in &self.files {
            writeln!(s, "file {} = {}", f.path, f.sha256).unwrap();
        }
        for line in self.config_echo.lines() {
            writeln!(s, "config {line}").unwrap();
        }
        s.push_str("[end]\n");
        s
    }

    /// Appends this run to `dir/manifest.txt`; earlier runs are never rewritten.
    pub fn append(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join(MANIFEST_FILE))?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Checks that every referenced file exists with the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for f in &self.files {
            let path = dir.join(&f.path);
            let h = sha256_file(&path).map_err(|_| Error::Format(format!("missing file {}", path.display())))?;
            if h != f.sha256 {
                return Err(Error::Format(format!("hash mismatch for {}", path.display())));
            }
        }
        Ok(())
    }
}

fn parse_block(lines: &[&str]) -> Result<RunManifest> {
    let mut m = RunManifest::default();
    let mut echo = String::new();
    for line in lines {
        let bad = || Error::Format(format!("malformed manifest line {line:?}"));
        if let Some(rest) = line.strip_prefix("config ") {
            echo.push_str(rest);
            echo.push('\n');
            continue;
        }
        let (lhs, rhs) = line.split_once(" = ").ok_or_else(bad)?;
        let mut head = lhs.splitn(2, ' ');
        let tag = head.next().ok_or_else(bad)?;
        let label = head.next();
        match (tag, label) {
            ("command", None) => m.command = rhs.to_string(),
            ("version", None) => m.version = rhs.to_string(),
            ("key", None) => m.key = rhs.to_string(),
            ("steps", None) => m.steps = rhs.parse().map_err(|_| bad())?,
            ("wall_clock_s", None) => m.wall_clock_s = rhs.parse().map_err(|_| bad())?,
            ("seed", Some(label)) => {
                let (a, b) = rhs.split_once(' ').ok_or_else(bad)?;
                m.seeds.push((label.to_string(), a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
            }
            ("hash", Some(label)) => m.hashes.push((label.to_string(), rhs.to_string())),
            ("file", Some(path)) => m.files.push(FileRecord { path: path.to_string(), sha256: rhs.to_string() }),
            _ => return Err(bad()),
        }
    }
    m.config_echo = echo;
    Ok(m)
}

/// Every run recorded in `dir/manifest.txt`, oldest first.
pub fn read_manifests(dir: &Path) -> Result<Vec<RunManifest>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    let mut runs = Vec::new();
    let mut block: Option<Vec<&str>> = None;
    for line in text.lines() {
        match (line, block.as_mut()) {
            ("[run]", None) => block = Some(Vec::new()),
            ("[end]", Some(lines)) => {
                runs.push(parse_block(lines)?);
                block = None;
            }
            (_, Some(lines)) => lines.push(line),
            (l, None) if l.trim().is_empty() => {}
            (l, None) => return Err(Error::Format(format!("stray manifest line {l:?}"))),
        }
    }
    if block.is_some() {
        return Err(Error::Format("unterminated manifest block".into()));
    }
    Ok(runs)
}

/// The most recent run with identity `key` whose files still verify.
pub fn find_completed(dir: &Path, key: &str) -> Result<Option<RunManifest>> {
    Ok(read_manifests(dir)?
        .into_iter()
        .rev()
        .find(|m| m.key == key && m.verify(dir).is_ok()))
}
