//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::time::{Duration, Instant};

use dualsynth::brics::{find_brics_bonds, fragment, max_fragments, FragmentParams, DEFAULT_ALPHA};
use dualsynth::dataset::{
    emit_jsonl, make_finetune_pairs, make_pretrain_pairs, parse_links, preprocess, read_reactions, Direction, Filters,
    InstructionRecord, MoleculeLibrary, Task, Templates,
};
use dualsynth::metrics::{
    bleu, evaluate, fingerprint, levenshtein, tanimoto, EvalOptions, FingerprintBitset, Scheme, DEFAULT_WIDTH,
};
use dualsynth::molgraph::{canonical_smiles, parse_smiles, random_smiles, Molecule};
use dualsynth::recombine::{carbon_cap, rejoin, rejoin_linked};
use dualsynth::tokenizer::{SourceKind, Vocab};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bleu_oracle, cap_oracle, corpus, fixture, isomorphic, levenshtein_oracle};

const SEED: u64 = 20240611;

type Criterion = (&'static str, fn(&Setup) -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Setup {
    corpus: Vec<String>,
    molecules: Vec<Molecule>,
    library: MoleculeLibrary,
    params: FragmentParams,
}

fn setup() -> Setup {
    let corpus = corpus();
    let molecules = corpus.iter().map(|s| parse_smiles(s).unwrap()).collect();
    let library = preprocess(&corpus, &Vocab::standard(), &Filters::default());
    let k = library.k().expect("non-empty library");
    let params = FragmentParams::new(k, DEFAULT_ALPHA, SEED).unwrap();
    Setup {
        corpus,
        molecules,
        library,
        params,
    }
}

fn round_trip(s: &Setup) -> Outcome {
    let start = Instant::now();
    let (mut eligible, mut ok) = (0, 0);
    let mut failures = Vec::new();
    for m in &s.molecules {
        if find_brics_bonds(m).unwrap().is_empty() {
            continue;
        }
        eligible += 1;
        let fs = fragment(m, &s.params).unwrap();
        match rejoin(&fs) {
            Ok(r) if canonical_smiles(&r) == canonical_smiles(m) && isomorphic(&r, m) => ok += 1,
            _ => failures.push(canonical_smiles(m)),
        }
    }
    let took = start.elapsed();
    outcome(
        s.molecules.len() >= 1000 && ok == eligible && took < Duration::from_secs(60),
        format!(
            "{ok}/{eligible} molecules with a BRICS bond restored ({} in corpus), {:.2}s single-threaded{}",
            s.molecules.len(),
            took.as_secs_f64(),
            failures
                .first()
                .map(|f| format!(", first failure {f}"))
                .unwrap_or_default()
        ),
    )
}

fn cap_compliance(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut formula_mismatch = 0;
    let mut over_cap = 0;
    const TRIPLES: usize = 10_000;
    for _ in 0..TRIPLES {
        let l = rng.random_range(1..=2000usize);
        let k = rng.random_range(1..=200usize);
        let alpha = rng.random_range(0.05..4.0f64);
        if max_fragments(l, k, alpha).unwrap() != cap_oracle(l, k, alpha) {
            formula_mismatch += 1;
        }
    }
    for _ in 0..TRIPLES {
        let m = &s.molecules[rng.random_range(0..s.molecules.len())];
        let k = rng.random_range(1..=80usize);
        let alpha = rng.random_range(0.05..4.0f64);
        let p = FragmentParams::new(k, alpha, rng.random()).unwrap();
        let fs = fragment(m, &p).unwrap();
        let l = fs.parent_canonical.len();
        if fs.fragments.len() > max_fragments(l, k, alpha).unwrap() || fs.fragments.len() > cap_oracle(l, k, alpha) {
            over_cap += 1;
        }
    }
    outcome(
        formula_mismatch == 0 && over_cap == 0,
        format!("{TRIPLES} formula triples, {formula_mismatch} mismatches; {TRIPLES} fragmentations, {over_cap} over the cap"),
    )
}

fn distribution(s: &Setup) -> Outcome {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for m in &s.molecules {
        *hist.entry(fragment(m, &s.params).unwrap().fragments.len()).or_default() += 1;
    }
    let over: usize = hist.range(11..).map(|(_, c)| c).sum();
    let share = over as f64 / s.molecules.len() as f64;
    let (&mode, _) = hist.iter().max_by_key(|&(n, c)| (c, std::cmp::Reverse(*n))).unwrap();
    outcome(
        share <= 0.02 && (1..=10).contains(&mode),
        format!(
            "k={} alpha={}: {:.2}% above 10 fragments, modal count {mode}, histogram {hist:?}",
            s.params.k,
            s.params.alpha,
            share * 100.0
        ),
    )
}

fn tokenizer(s: &Setup) -> Outcome {
    let grouped = Vocab::standard();
    let plain = Vocab::build("").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let small = FragmentParams::new(1, DEFAULT_ALPHA, SEED).unwrap();
    let (mut identity, mut compressed, mut fragment_inputs) = (0, 0, 0);
    const N: usize = 10_000;
    for i in 0..N {
        let m = &s.molecules[i % s.molecules.len()];
        let (text, kind) = if i % 2 == 0 {
            (random_smiles(m, &mut rng), SourceKind::Molecule)
        } else {
            let fs = fragment(m, &small).unwrap();
            let parts: Vec<String> = fs.fragments.iter().map(|f| random_smiles(f, &mut rng)).collect();
            fragment_inputs += parts.iter().any(|p| p.contains('*')) as usize;
            (parts.join("."), SourceKind::FragmentSet)
        };
        let ts = grouped.tokenize(&text, kind).unwrap();
        identity += (grouped.detokenize(&ts).unwrap() == text) as usize;
        compressed += (grouped.token_length(&text).unwrap() <= plain.token_length(&text).unwrap()) as usize;
    }
    outcome(
        identity == N && compressed == N,
        format!("{identity}/{N} identical after round trip ({fragment_inputs} with dummy atoms), compression held on {compressed}/{N}"),
    )
}

fn random_string(rng: &mut ChaCha8Rng, alphabet: &[u8], max: usize) -> String {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
        .collect()
}

fn metric_oracles(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let alphabet = b"CNOcn()=#123[]@+-";
    let mut lev_bad = 0;
    for _ in 0..10_000 {
        let (a, b) = (
            random_string(&mut rng, alphabet, 30),
            random_string(&mut rng, alphabet, 30),
        );
        lev_bad += (levenshtein(&a, &b) != levenshtein_oracle(&a, &b)) as usize;
    }
    let mut bleu_worst = 0.0f64;
    for i in 0..100 {
        let p = &s.corpus[rng.random_range(0..s.corpus.len())];
        let r = if i % 4 == 0 {
            p.clone()
        } else {
            s.corpus[rng.random_range(0..s.corpus.len())].clone()
        };
        bleu_worst = bleu_worst.max((bleu(p, &r) - bleu_oracle(p, &r)).abs());
    }
    let mut tani_bad = 0;
    for _ in 0..10_000 {
        let width = 1 << rng.random_range(6..=11);
        let mut a = FingerprintBitset::new(Scheme::Morgan, width).unwrap();
        let mut b = a.clone();
        for _ in 0..rng.random_range(0..40) {
            a.set(rng.random_range(0..width));
        }
        for _ in 0..rng.random_range(0..40) {
            b.set(rng.random_range(0..width));
        }
        let t = tanimoto(&a, &b).unwrap();
        let ok = (0.0..=1.0).contains(&t) && t == tanimoto(&b, &a).unwrap() && tanimoto(&a, &a).unwrap() == 1.0;
        tani_bad += (!ok) as usize;
    }
    outcome(
        lev_bad == 0 && bleu_worst <= 1e-9 && tani_bad == 0,
        format!("levenshtein {lev_bad}/10000 disagreements; bleu max deviation {bleu_worst:.1e} over 100 pairs; tanimoto {tani_bad}/10000 violations"),
    )
}

fn fingerprint_invariance(s: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sample = &s.molecules[..1000.min(s.molecules.len())];
    let (mut same, mut total) = (0, 0);
    for m in sample {
        let base: Vec<_> = Scheme::ALL
            .iter()
            .map(|&sc| fingerprint(m, sc, DEFAULT_WIDTH).unwrap())
            .collect();
        for _ in 0..10 {
            let r = parse_smiles(&random_smiles(m, &mut rng)).unwrap();
            for (sc, want) in Scheme::ALL.iter().zip(&base) {
                total += 1;
                same += (&fingerprint(&r, *sc, DEFAULT_WIDTH).unwrap() == want) as usize;
            }
        }
    }
    outcome(
        sample.len() == 1000 && same == total,
        format!(
            "{same}/{total} bitsets identical across serializations ({} molecules x 10 x 3 schemes)",
            sample.len()
        ),
    )
}

fn dotted_fingerprint(smiles: &str) -> FingerprintBitset {
    fingerprint(&parse_smiles(smiles).unwrap(), Scheme::Morgan, DEFAULT_WIDTH).unwrap()
}

fn affinity(s: &Setup) -> Outcome {
    let reactions = read_reactions(fixture("reactions.tsv").as_bytes()).unwrap();
    let capped: Vec<FingerprintBitset> = reactions
        .iter()
        .map(|rx| {
            let fs = fragment(&parse_smiles(&rx.product).unwrap(), &s.params).unwrap();
            let parts: Vec<String> = fs.fragments.iter().map(|f| canonical_smiles(&carbon_cap(f))).collect();
            dotted_fingerprint(&parts.join("."))
        })
        .collect();
    let reactants: Vec<FingerprintBitset> = reactions
        .iter()
        .map(|rx| dotted_fingerprint(&rx.reactants.join(".")))
        .collect();
    let n = reactions.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(SEED));
    // Break fixed points so no reaction is compared with its own reactants.
    for i in 0..n {
        if perm[i] == i {
            let j = (i + 1) % n;
            perm.swap(i, j);
        }
    }
    let mean = |pairs: &mut dyn Iterator<Item = (usize, usize)>| -> f64 {
        let v: Vec<f64> = pairs
            .map(|(i, j)| tanimoto(&capped[i], &reactants[j]).unwrap())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let true_mean = mean(&mut (0..n).map(|i| (i, i)));
    let shuffled_mean = mean(&mut (0..n).map(|i| (i, perm[i])));
    let fixed = (0..n).filter(|&i| perm[i] == i).count();
    outcome(
        n == 100 && fixed == 0 && true_mean - shuffled_mean >= 0.15,
        format!(
            "{n} reactions: true reactants {true_mean:.3}, shuffled {shuffled_mean:.3}, gap {:.3}",
            true_mean - shuffled_mean
        ),
    )
}

fn build(s: &Setup, dir: &std::path::Path) -> Vec<InstructionRecord> {
    let vocab = Vocab::standard();
    let templates = Templates::standard();
    let filters = Filters::default();
    let mut records = make_pretrain_pairs(&s.library, &s.params, &vocab, &templates, &filters)
        .unwrap()
        .records;
    let reactions = read_reactions(fixture("reactions.tsv").as_bytes()).unwrap();
    records.extend(
        make_finetune_pairs(&reactions, &vocab, &templates, &filters)
            .unwrap()
            .records,
    );
    let config = serde_json::json!({ "seed": SEED, "k": s.params.k, "alpha": s.params.alpha, "shard_size": 500 });
    emit_jsonl(&records, 500, dir, config).unwrap();
    records
}

fn dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism_and_duality(s: &Setup) -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let records = build(s, a.path());
    build(s, b.path());
    let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
    let identical = fa == fb && fa.len() > 1;

    let vocab = Vocab::standard();
    let mut by_pair: BTreeMap<&str, Vec<&InstructionRecord>> = BTreeMap::new();
    for r in &records {
        by_pair.entry(r.pair_id()).or_default().push(r);
    }
    let dual = by_pair.values().all(|pair| {
        pair.len() == 2
            && pair[0].direction == Direction::Forward
            && pair[1].direction == Direction::Backward
            && pair[0].input == pair[1].output
            && pair[0].output == pair[1].input
    });
    let pretrain_pairs = records.iter().filter(|r| r.task == Task::Fragmentation).count();
    let with_bond = s
        .library
        .records
        .iter()
        .filter(|r| !find_brics_bonds(&parse_smiles(&r.smiles).unwrap()).unwrap().is_empty())
        .count();
    let pretrain_records = records
        .iter()
        .filter(|r| matches!(r.task, Task::Fragmentation | Task::Recombination))
        .count();

    let mut over = 0;
    for r in &records {
        for payload in [&r.input, &r.output] {
            let tokens = vocab.token_length(payload).unwrap();
            let weight = parse_smiles(payload).unwrap().molecular_weight();
            over += (tokens > 512 || weight > 1000.0) as usize;
        }
    }
    let mut restored = 0;
    for r in records.iter().filter(|r| r.task == Task::Fragmentation) {
        let frags: Vec<Molecule> = r.output.split('.').map(|f| parse_smiles(f).unwrap()).collect();
        let links = parse_links(&r.meta["links"]).unwrap();
        restored += rejoin_linked(&frags, &links).is_ok_and(|m| canonical_smiles(&m) == r.input) as usize;
    }
    outcome(
        identical && dual && pretrain_records == 2 * with_bond && over == 0 && restored == pretrain_pairs,
        format!(
            "{} files byte-identical: {identical}; {} records in {} dual pairs: {dual}; pretraining {pretrain_records} records for {with_bond} molecules with a BRICS bond; {over} payloads over a filter; {restored}/{pretrain_pairs} fragment payloads rejoin",
            fa.len(),
            records.len(),
            by_pair.len()
        ),
    )
}

fn identity_suite(s: &Setup) -> Outcome {
    let r = evaluate(&s.corpus, &s.corpus, &EvalOptions::default()).unwrap();
    let all_one = [r.fts_path, r.fts_keys, r.fts_morgan].iter().all(|v| *v == Some(1.0));
    outcome(
        r.exact == 1.0
            && r.bleu == 1.0
            && r.levenshtein == 0.0
            && all_one
            && r.validity == 1.0
            && r.n == s.corpus.len(),
        format!(
            "n={} exact={} bleu={} levenshtein={} fts path/keys/morgan={:?}/{:?}/{:?} validity={}",
            r.n, r.exact, r.bleu, r.levenshtein, r.fts_path, r.fts_keys, r.fts_morgan, r.validity
        ),
    )
}

fn main() {
    let s = setup();
    let criteria: [Criterion; 9] = [
        ("1 fragment/rejoin round trip", round_trip),
        ("2 fragment cap compliance", cap_compliance),
        ("3 fragment count distribution", distribution),
        ("4 tokenizer round trip and compression", tokenizer),
        ("5 metric oracles", metric_oracles),
        ("6 fingerprint serialization invariance", fingerprint_invariance),
        ("7 fragment-reactant affinity", affinity),
        ("8 build determinism and duality", determinism_and_duality),
        ("9 identity evaluation", identity_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run(&s);
        failed += (!o.pass) as usize;
        println!(
            "[{}] criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
