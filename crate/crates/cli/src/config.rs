//! Settings from a `key = value` file, overridden by environment variables
//! and flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dualsynth::brics::DEFAULT_ALPHA;
use dualsynth::tokenizer::SpecialPairing;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SHARD_SIZE: usize = 10_000;

pub const KEYS: [&str; 10] = [
    "seed",
    "k",
    "alpha",
    "shard_size",
    "out",
    "vocab",
    "groups",
    "templates",
    "invalid_as_zero",
    "special_pairing",
];

/// Every key is optional at each layer; `resolve` fills defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub shard_size: Option<usize>,
    pub out: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub invalid_as_zero: Option<bool>,
    pub special_pairing: Option<SpecialPairing>,
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl Layer {
    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let bad = || anyhow!("bad value `{value}` for `{key}`");
        let path = || {
            let p = PathBuf::from(value);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };
        match key {
            "seed" => self.seed = Some(value.parse().map_err(|_| bad())?),
            "k" => self.k = Some(value.parse().map_err(|_| bad())?),
            "alpha" => self.alpha = Some(value.parse().map_err(|_| bad())?),
            "shard_size" | "shards" => self.shard_size = Some(value.parse().map_err(|_| bad())?),
            "out" => self.out = Some(path()),
            "vocab" => self.vocab = Some(path()),
            "groups" => self.groups = Some(path()),
            "templates" => self.templates = Some(path()),
            "invalid_as_zero" => self.invalid_as_zero = Some(parse_bool(value).ok_or_else(bad)?),
            "special_pairing" => self.special_pairing = Some(value.parse().map_err(|_| bad())?),
            _ => bail!("unknown key `{key}` (known: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    /// Parses config text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Layer> {
        let mut layer = Layer::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
            layer
                .set(key.trim(), value.trim(), base)
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(layer)
    }

    pub fn load(path: &Path) -> Result<Layer> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Layer::parse(&text, base).with_context(|| format!("config {}", path.display()))
    }

    /// Values in `over` win.
    pub fn overlay(self, over: Layer) -> Layer {
        Layer {
            seed: over.seed.or(self.seed),
            k: over.k.or(self.k),
            alpha: over.alpha.or(self.alpha),
            shard_size: over.shard_size.or(self.shard_size),
            out: over.out.or(self.out),
            vocab: over.vocab.or(self.vocab),
            groups: over.groups.or(self.groups),
            templates: over.templates.or(self.templates),
            invalid_as_zero: over.invalid_as_zero.or(self.invalid_as_zero),
            special_pairing: over.special_pairing.or(self.special_pairing),
        }
    }

    pub fn resolve(self) -> Settings {
        Settings {
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            k: self.k,
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            shard_size: self.shard_size.unwrap_or(DEFAULT_SHARD_SIZE),
            out: self.out,
            vocab: self.vocab,
            groups: self.groups,
            templates: self.templates,
            invalid_as_zero: self.invalid_as_zero.unwrap_or(false),
            special_pairing: self.special_pairing.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    /// `None` means derive from the data.
    pub k: Option<usize>,
    pub alpha: f64,
    pub shard_size: usize,
    pub out: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub invalid_as_zero: bool,
    pub special_pairing: SpecialPairing,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_overlay() {
        let file = Layer::parse(
            "# comment\nseed = 7\nalpha=2.0\nshards = 3\ntemplates = t.txt\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(file.seed, Some(7));
        assert_eq!(file.shard_size, Some(3));
        assert_eq!(file.templates, Some(PathBuf::from("/cfg/t.txt")));
        let flags = Layer {
            seed: Some(9),
            ..Layer::default()
        };
        let s = file.overlay(flags).resolve();
        assert_eq!((s.seed, s.alpha, s.shard_size), (9, 2.0, 3));
        assert_eq!(s.special_pairing, SpecialPairing::Mnemonic);
    }

    #[test]
    fn errors() {
        assert!(Layer::parse("colour = red", Path::new(".")).is_err());
        assert!(Layer::parse("seed = x", Path::new(".")).is_err());
        assert!(Layer::parse("seed", Path::new(".")).is_err());
        assert!(Layer::parse("invalid_as_zero = maybe", Path::new(".")).is_err());
        assert_eq!(
            Layer::parse("invalid_as_zero = yes", Path::new("."))
                .unwrap()
                .invalid_as_zero,
            Some(true)
        );
    }
}
