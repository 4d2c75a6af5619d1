use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use dualsynth::brics::{fragment as fragment_molecule, FragmentParams};
use dualsynth::dataset::{
    emit_jsonl, make_finetune_pairs, make_pretrain_pairs, preprocess as preprocess_corpus, read_jsonl, read_reactions,
    DatasetError, Filters, InstructionRecord, MoleculeLibrary, Task, Templates,
};
use dualsynth::metrics::{evaluate, topk_accuracy, EvalOptions};
use dualsynth::molgraph::{canonical_smiles, parse_smiles};
use dualsynth::tokenizer::{SourceKind, Vocab};
use serde_json::json;

use crate::config::Settings;
use crate::{fail, Categorize, Category, KindArg, Outcome};

/// Cap parameter for a lone SMILES when no library average is available.
pub const SINGLE_MOLECULE_K: usize = 50;
const TOPK: [usize; 4] = [1, 3, 5, 10];

fn open(path: &Path) -> Outcome<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .or_fail(Category::Io)?;
    Ok(Box::new(BufReader::new(f)))
}

fn read_text(path: &Path) -> Outcome<String> {
    let mut s = String::new();
    open(path)?
        .read_to_string(&mut s)
        .with_context(|| format!("reading {}", path.display()))
        .or_fail(Category::Io)?;
    Ok(s)
}

/// Writes to `--out` when set, else stdout.
fn output(settings: &Settings) -> Outcome<Box<dyn Write>> {
    match &settings.out {
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .or_fail(Category::Io)?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn dataset_failure(e: DatasetError) -> crate::Failure {
    let category = match e {
        DatasetError::Io(_) => Category::Io,
        DatasetError::Template { .. } | DatasetError::MissingTemplate(_) | DatasetError::ShardSize => Category::Config,
        DatasetError::Brics(dualsynth::brics::BricsError::Domain(_)) => Category::Config,
        _ => Category::Data,
    };
    crate::Failure {
        category,
        error: e.into(),
    }
}

fn load_vocab(settings: &Settings) -> Outcome<Vocab> {
    let vocab = if let Some(p) = &settings.vocab {
        Vocab::from_text(&read_text(p)?)
            .with_context(|| format!("vocabulary {}", p.display()))
            .or_fail(Category::Config)?
    } else if let Some(p) = &settings.groups {
        Vocab::build(&read_text(p)?)
            .with_context(|| format!("group file {}", p.display()))
            .or_fail(Category::Config)?
    } else {
        Vocab::standard()
    };
    Ok(vocab.with_pairing(settings.special_pairing))
}

fn load_templates(settings: &Settings) -> Outcome<Templates> {
    match &settings.templates {
        Some(p) => Templates::from_text(&read_text(p)?)
            .with_context(|| format!("templates {}", p.display()))
            .or_fail(Category::Config),
        None => Ok(Templates::standard()),
    }
}

fn params(settings: &Settings, k: usize) -> Outcome<FragmentParams> {
    FragmentParams::new(k, settings.alpha, settings.seed).or_fail(Category::Config)
}

fn io<T>(r: io::Result<T>) -> Outcome<T> {
    r.or_fail(Category::Io)
}

pub fn preprocess(settings: &Settings, corpus: &Path) -> Outcome {
    let vocab = load_vocab(settings)?;
    let reader = open(corpus)?;
    let mut read_error = None;
    // Invalid UTF-8 becomes replacement characters, which then fail to
    // parse and are counted as unreadable.
    let lines = reader.split(b'\n').map_while(|l| match l {
        Ok(bytes) => Some(String::from_utf8_lossy(&bytes).into_owned()),
        Err(e) => {
            read_error = Some(e);
            None
        }
    });
    let lib = preprocess_corpus(lines, &vocab, &Filters::default());
    if let Some(e) = read_error {
        return Err(e)
            .with_context(|| format!("reading {}", corpus.display()))
            .or_fail(Category::Io);
    }
    let mut out = output(settings)?;
    io(lib.write_tsv(&mut out))?;
    io(out.flush())?;
    let summary = json!({ "stats": lib.stats, "k": lib.k(), "mean_length": lib.mean_length() });
    eprintln!("{summary}");
    Ok(())
}

pub fn fragment(settings: &Settings, input: &str) -> Outcome {
    let path = Path::new(input);
    let from_file = path.is_file() || input == "-";
    let lines: Vec<String> = if from_file {
        read_text(path)?
            .lines()
            .filter_map(|l| l.split_whitespace().next().map(str::to_string))
            .collect()
    } else {
        vec![input.to_string()]
    };
    let k = match settings.k {
        Some(k) => k,
        None if from_file => {
            let lengths: Vec<usize> = lines
                .iter()
                .filter_map(|l| parse_smiles(l).ok())
                .map(|m| canonical_smiles(&m).len())
                .collect();
            if lengths.is_empty() {
                return fail(Category::Data, format!("no readable SMILES in {input}"));
            }
            ((lengths.iter().sum::<usize>() as f64 / lengths.len() as f64).round() as usize).max(1)
        }
        None => SINGLE_MOLECULE_K,
    };
    let p = params(settings, k)?;
    let mut out = output(settings)?;
    io(writeln!(out, "# k={} alpha={} seed={}", p.k, p.alpha, p.seed))?;
    let mut failures = 0;
    for line in &lines {
        let result = parse_smiles(line)
            .map_err(anyhow::Error::from)
            .and_then(|m| fragment_molecule(&m, &p).map_err(anyhow::Error::from));
        match result {
            Ok(fs) => io(writeln!(
                out,
                "{}\tcap={}\t{}",
                fs.parent_canonical,
                fs.cap,
                fs.to_smiles()
            ))?,
            Err(e) => {
                failures += 1;
                eprintln!("skipping {line}: {e:#}");
            }
        }
    }
    io(out.flush())?;
    if failures > 0 && !from_file {
        return fail(Category::Data, format!("cannot fragment {input}"));
    }
    Ok(())
}

pub fn build(settings: &Settings, library: Option<&Path>, reactions: Option<&Path>) -> Outcome {
    if library.is_none() && reactions.is_none() {
        return fail(Category::Usage, "build needs --library, --reactions or both");
    }
    let Some(out_dir) = &settings.out else {
        return fail(Category::Usage, "build needs --out <directory>");
    };
    let vocab = load_vocab(settings)?;
    let templates = load_templates(settings)?;
    let filters = Filters::default();
    let mut records: Vec<InstructionRecord> = Vec::new();
    let mut config = json!({
        "seed": settings.seed,
        "alpha": settings.alpha,
        "shard_size": settings.shard_size,
        "special_pairing": settings.special_pairing,
        "max_weight": filters.max_weight,
        "max_tokens": filters.max_tokens,
        "vocab_size": vocab.len(),
        "templates": settings.templates.as_ref().map_or("builtin".to_string(), |p| p.display().to_string()),
    });
    if let Some(path) = library {
        let lib = MoleculeLibrary::read_tsv(open(path)?)
            .with_context(|| format!("library {}", path.display()))
            .or_fail(Category::Data)?;
        let k = match settings.k.or(lib.k()) {
            Some(k) => k,
            None => return fail(Category::Data, format!("library {} is empty", path.display())),
        };
        config["k"] = json!(k);
        let out =
            make_pretrain_pairs(&lib, &params(settings, k)?, &vocab, &templates, &filters).map_err(dataset_failure)?;
        eprintln!("pretraining: {}", json!(out.stats));
        records.extend(out.records);
    }
    if let Some(path) = reactions {
        let rx = read_reactions(open(path)?).map_err(dataset_failure)?;
        let out = make_finetune_pairs(&rx, &vocab, &templates, &filters).map_err(dataset_failure)?;
        eprintln!("fine-tuning: {}", json!(out.stats));
        records.extend(out.records);
    }
    let manifest = emit_jsonl(&records, settings.shard_size, out_dir, config).map_err(dataset_failure)?;
    println!(
        "wrote {} records in {} shard(s) to {}",
        manifest.total,
        manifest.shards.len(),
        out_dir.display()
    );
    for s in &manifest.shards {
        println!("{}\t{}\t{}", s.path, s.records, s.sha256);
    }
    Ok(())
}

pub fn tokenize(settings: &Settings, text: &str, kind: KindArg, as_tokens: bool) -> Outcome {
    let vocab = load_vocab(settings)?;
    let inputs: Vec<String> = if text == "-" {
        read_text(Path::new("-"))?.lines().map(str::to_string).collect()
    } else {
        vec![text.to_string()]
    };
    let mut out = output(settings)?;
    for s in &inputs {
        let kind = match kind {
            KindArg::Molecule => SourceKind::Molecule,
            KindArg::Fragments => SourceKind::FragmentSet,
            KindArg::Auto if s.contains('*') => SourceKind::FragmentSet,
            KindArg::Auto => SourceKind::Molecule,
        };
        let ts = vocab.tokenize(s, kind).or_fail(Category::Data)?;
        let words: Vec<String> = ts
            .tokens
            .iter()
            .map(|&id| {
                if as_tokens {
                    vocab.token(id).unwrap_or("?").to_string()
                } else {
                    id.to_string()
                }
            })
            .collect();
        io(writeln!(out, "{}", words.join(" ")))?;
    }
    io(out.flush())
}

pub fn vocab(settings: &Settings) -> Outcome {
    let v = load_vocab(settings)?;
    let mut out = output(settings)?;
    io(v.write_to(&mut out))?;
    io(out.flush())
}

/// Splits a prediction line into ranked candidates.
fn candidates(line: &str) -> Vec<String> {
    line.split('\t').map(|c| c.trim().to_string()).collect()
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

pub fn eval(settings: &Settings, preds_path: &Path, refs_path: &Path, as_json: bool) -> Outcome {
    let pred_text = read_text(preds_path)?;
    let (ranked, refs): (Vec<Vec<String>>, Vec<String>) = if is_jsonl(refs_path) {
        let records = read_jsonl(open(refs_path)?).map_err(dataset_failure)?;
        let mut by_id: HashMap<String, Vec<String>> = HashMap::new();
        for line in pred_text.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = candidates(line);
            let id = parts.remove(0);
            by_id.insert(id, parts);
        }
        let missing = records.iter().filter(|r| !by_id.contains_key(&r.id)).count();
        if missing > 0 {
            eprintln!("{missing} reference record(s) have no prediction and score as empty");
        }
        records
            .iter()
            .map(|r| (by_id.remove(&r.id).unwrap_or_default(), r.output.clone()))
            .unzip()
    } else {
        let refs: Vec<String> = read_text(refs_path)?.lines().map(|l| l.trim().to_string()).collect();
        let ranked: Vec<Vec<String>> = pred_text.lines().map(candidates).collect();
        (ranked, refs)
    };
    if ranked.len() != refs.len() {
        return fail(
            Category::Data,
            format!("{} prediction lines but {} references", ranked.len(), refs.len()),
        );
    }
    let top1: Vec<String> = ranked.iter().map(|c| c.first().cloned().unwrap_or_default()).collect();
    let opts = EvalOptions {
        invalid_as_zero: settings.invalid_as_zero,
        ..EvalOptions::default()
    };
    let report = evaluate(&top1, &refs, &opts).or_fail(Category::Data)?;
    let ranked_lists = ranked.iter().any(|c| c.len() > 1);
    let mut topk = BTreeMap::new();
    if ranked_lists {
        for k in TOPK {
            topk.insert(
                format!("top{k}"),
                topk_accuracy(&ranked, &refs, k).or_fail(Category::Data)?,
            );
        }
    }
    let mut out = output(settings)?;
    if as_json {
        let mut value = serde_json::to_value(&report).or_fail(Category::Other)?;
        if ranked_lists {
            value["topk"] = json!(topk);
        }
        io(writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&value).or_fail(Category::Other)?
        ))?;
    } else {
        io(write!(out, "{}", report.to_table()))?;
        for (name, v) in &topk {
            io(writeln!(out, "{name}: {v:.3}"))?;
        }
    }
    io(out.flush())
}

/// Shard files of a build directory in manifest order, or the paths given.
fn dataset_files(inputs: &[PathBuf]) -> Outcome<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if !input.is_dir() {
            files.push(input.clone());
            continue;
        }
        let manifest = input.join("manifest.json");
        if manifest.is_file() {
            let m: dualsynth::dataset::Manifest = serde_json::from_str(&read_text(&manifest)?)
                .with_context(|| format!("manifest {}", manifest.display()))
                .or_fail(Category::Data)?;
            files.extend(m.shards.iter().map(|s| input.join(&s.path)));
        } else {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))
                .or_fail(Category::Io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| is_jsonl(p))
                .collect();
            found.sort();
            files.extend(found);
        }
    }
    Ok(files)
}

pub const WEIGHT_BANDS: [(&str, f64, f64); 5] = [
    ("<250", 0.0, 250.0),
    ("250-320", 250.0, 320.0),
    ("320-480", 320.0, 480.0),
    ("480-500", 480.0, 500.0),
    (">500", 500.0, f64::INFINITY),
];

fn band(weight: f64) -> &'static str {
    for (name, lo, hi) in WEIGHT_BANDS {
        if weight >= lo && (weight < hi || (hi == 500.0 && weight <= hi)) {
            return name;
        }
    }
    ">500"
}

pub fn stats(inputs: &[PathBuf], as_json: bool) -> Outcome {
    let mut tasks: BTreeMap<String, usize> = BTreeMap::new();
    let mut counts: Vec<usize> = vec![0; 11];
    let mut weights: BTreeMap<&str, usize> = WEIGHT_BANDS.iter().map(|b| (b.0, 0)).collect();
    let mut molecules = 0usize;
    for file in dataset_files(inputs)? {
        let records = read_jsonl(open(&file)?).map_err(dataset_failure)?;
        for r in records {
            *tasks.entry(r.task.to_string()).or_default() += 1;
            if r.task != Task::Fragmentation {
                continue;
            }
            molecules += 1;
            let n = r.output.split('.').count();
            counts[n.min(11) - 1] += 1;
            let m = parse_smiles(&r.input)
                .with_context(|| format!("record {} in {}", r.id, file.display()))
                .or_fail(Category::Data)?;
            *weights.entry(band(m.molecular_weight())).or_default() += 1;
        }
    }
    let label = |i: usize| {
        if i == 10 {
            ">10".to_string()
        } else {
            (i + 1).to_string()
        }
    };
    let share = |c: usize| {
        if molecules == 0 {
            0.0
        } else {
            c as f64 / molecules as f64
        }
    };
    let mid: usize = ["250-320", "320-480", "480-500"].iter().map(|b| weights[b]).sum();
    if as_json {
        let fragments: BTreeMap<String, usize> = counts.iter().enumerate().map(|(i, &c)| (label(i), c)).collect();
        let value = json!({
            "records": tasks,
            "molecules": molecules,
            "fragment_counts": fragments,
            "weight_bands": weights,
            "weight_250_500": mid,
        });
        println!("{}", serde_json::to_string_pretty(&value).or_fail(Category::Other)?);
        return Ok(());
    }
    let mut out = BufWriter::new(io::stdout().lock());
    for (task, n) in &tasks {
        io(writeln!(out, "{task:<16}{n:>10}"))?;
    }
    io(writeln!(out, "\nfragments per molecule ({molecules} molecules)"))?;
    for (i, &c) in counts.iter().enumerate() {
        io(writeln!(out, "{:>6}{c:>10}{:>9.2}%", label(i), share(c) * 100.0))?;
    }
    io(writeln!(out, "\nmolecular weight (g/mol)"))?;
    for (name, _, _) in WEIGHT_BANDS {
        let c = weights[name];
        io(writeln!(out, "{name:>8}{c:>10}{:>9.2}%", share(c) * 100.0))?;
    }
    io(writeln!(out, "{:>8}{mid:>10}{:>9.2}%", "250-500", share(mid) * 100.0))?;
    io(out.flush())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_bands() {
        assert_eq!(band(100.0), "<250");
        assert_eq!(band(250.0), "250-320");
        assert_eq!(band(479.9), "320-480");
        assert_eq!(band(500.0), "480-500");
        assert_eq!(band(500.1), ">500");
    }
}
