use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dualsynth"));
    for (key, _) in std::env::vars() {
        if key.starts_with("DUALSYNTH_") {
            c.env_remove(key);
        }
    }
    c
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn fragment_prints_fragments_and_cap() {
    let o = run(bin().args(["fragment", "OCCCN1CCOCC1"]));
    assert!(o.status.success());
    let text = stdout(&o);
    let line = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let cols: Vec<&str> = line.split('\t').collect();
    assert_eq!(cols[0], "OCCCN1CCOCC1");
    assert!(cols[1].starts_with("cap="));
    assert_eq!(cols[2], "[4*]CCCO.[5*]N1CCOCC1");
}

#[test]
fn eval_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs.txt");
    fs::write(&refs, "CCO\nc1ccccc1\nOCCCN1CCOCC1\n").unwrap();
    let o = run(bin().arg("eval").arg(&refs).arg(&refs).arg("--json"));
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exact"], 1.0);
    assert_eq!(v["validity"], 1.0);
    assert_eq!(v["levenshtein"], 0.0);
}

fn build(out: &Path, seed: &str) -> serde_json::Value {
    let dir = out.parent().unwrap();
    let lib = dir.join(format!("lib-{seed}.tsv"));
    let o = run(bin()
        .arg("preprocess")
        .arg(fixtures().join("corpus.smi"))
        .arg("--out")
        .arg(&lib));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(bin()
        .arg("build")
        .arg("--library")
        .arg(&lib)
        .arg("--reactions")
        .arg(fixtures().join("reactions.tsv"))
        .arg("--out")
        .arg(out)
        .args(["--seed", seed, "--shards", "700"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn build_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = build(&dir.path().join("a"), "5");
    let b = build(&dir.path().join("b"), "5");
    assert_eq!(a, b);
    assert_eq!(a["total"], 2586);
    assert_eq!(a["shards"].as_array().unwrap().len(), 4);
    for s in a["shards"].as_array().unwrap() {
        let name = s["path"].as_str().unwrap();
        assert_eq!(
            fs::read(dir.path().join("a").join(name)).unwrap(),
            fs::read(dir.path().join("b").join(name)).unwrap()
        );
    }

    let o = run(bin().arg("stats").arg(dir.path().join("a")).arg("--json"));
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["molecules"], 1193);
    assert_eq!(v["fragment_counts"][">10"], 0);
}

#[test]
fn exit_codes_by_category() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(bin().arg("--no-such-flag")).status.code(), Some(2));
    assert_eq!(
        run(bin().args(["eval", "/nonexistent/p.txt", "/nonexistent/r.txt"]))
            .status
            .code(),
        Some(3)
    );
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(
        run(bin().arg("--config").arg(&cfg).args(["fragment", "C"]))
            .status
            .code(),
        Some(4)
    );
    assert_eq!(run(bin().args(["fragment", "C1CC"])).status.code(), Some(5));
    let o = run(bin().args(["fragment", "C1CC"]));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[data]"));
}

#[test]
fn precedence_file_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "alpha = 3\nk = 5\n").unwrap();
    let header = |c: &mut Command| stdout(&run(c)).lines().next().unwrap().to_string();
    let s = "CCCOCCC(=O)c1ccccc1";
    assert_eq!(
        header(bin().arg("--config").arg(&cfg).args(["fragment", s])),
        "# k=5 alpha=3 seed=0"
    );
    assert_eq!(
        header(
            bin()
                .arg("--config")
                .arg(&cfg)
                .env("DUALSYNTH_ALPHA", "2")
                .args(["fragment", s])
        ),
        "# k=5 alpha=2 seed=0"
    );
    assert_eq!(
        header(
            bin()
                .arg("--config")
                .arg(&cfg)
                .env("DUALSYNTH_ALPHA", "2")
                .args(["fragment", s, "--alpha", "1"])
        ),
        "# k=5 alpha=1 seed=0"
    );
}

#[test]
fn tokenize_and_pairing() {
    let o = run(bin().args(["tokenize", "[1*]CCO", "--tokens"]));
    let text = stdout(&o);
    assert!(text.starts_with("<BOF> [1*]"), "{text}");
    let o = run(bin().args(["tokenize", "CCO", "--tokens", "--special-pairing", "paper"]));
    assert!(stdout(&o).starts_with("<BOF>"));
    let o = run(bin().args(["tokenize", "CCO", "--tokens"]));
    assert!(stdout(&o).starts_with("<BOM>"));
}

#[test]
fn eval_against_dataset_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let o = run(bin()
        .arg("build")
        .arg("--reactions")
        .arg(fixtures().join("reactions.tsv"))
        .arg("--out")
        .arg(&out));
    assert!(o.status.success());
    let shard = out.join("shard-00000.jsonl");
    // Perfect predictions keyed by id, with a wrong candidate ranked second.
    let preds: String = fs::read_to_string(&shard)
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!("{}\t{}\tC\n", v["id"].as_str().unwrap(), v["output"].as_str().unwrap())
        })
        .collect();
    let p = dir.path().join("preds.tsv");
    fs::write(&p, preds).unwrap();
    let o = run(bin().arg("eval").arg(&p).arg(&shard).arg("--json"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 200);
    assert_eq!(v["exact"], 1.0);
    assert_eq!(v["topk"]["top1"], 1.0);
}
