use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use cscime::config::CONFIG_KEYS;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cscime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cscime"))
        .arg("--config")
        .arg(root().join("configs/default.toml"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A small model shared by every test that needs one.
fn model() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    let dir = DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let corpus = fs::read_to_string(root().join("data/corpus/people_daily_1998_01.txt")).unwrap();
        let head: Vec<&str> = corpus.lines().take(3000).collect();
        let corpus_path = dir.path().join("corpus.txt");
        fs::write(&corpus_path, head.join("\n")).unwrap();
        let lm = dir.path().join("model/small.lm");
        let o = cscime(&["train-lm", "--corpus", p(&corpus_path), "-o", p(&lm)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dir
    });
    Box::leak(dir.path().join("model/small.lm").into_boxed_path())
}

fn lm_override() -> String {
    format!("paths.lm=\"{}\"", model().display())
}

#[test]
fn help_matches_golden() {
    let o = Command::new(env!("CARGO_BIN_EXE_cscime")).arg("--help").output().unwrap();
    assert!(o.status.success());
    let help = String::from_utf8(o.stdout).unwrap();
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt")).unwrap();
    assert_eq!(help, golden);
    for (key, _) in CONFIG_KEYS {
        assert!(help.contains(key), "{key} missing from --help");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = dir.path().join("out.jsonl");

    // missing input file
    let o = cscime(&["--set", &lm_override(), "generate", "-i", p(&missing), "-o", p(&out)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));

    // unknown key and bad value
    let o = cscime(&["--set", "noise.nonsense=1", "tag", "-i", p(&missing)]);
    assert_eq!(code(&o), 1);
    let o = cscime(&["--set", "noise.delta=\"abc\"", "tag", "-i", p(&missing)]);
    assert_eq!(code(&o), 1);
    let o = cscime(&["--set", "filter.normal=1.5", "tag", "-i", p(&missing)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("filter.normal"));

    // malformed model
    let bad_lm = dir.path().join("bad.lm");
    fs::write(&bad_lm, "not an arpa file\n").unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, "今天天气很好\n").unwrap();
    let o =
        cscime(&["--set", &format!("paths.lm=\"{}\"", bad_lm.display()), "generate", "-i", p(&input), "-o", p(&out)]);
    assert_eq!(code(&o), 1);

    // malformed pair line
    let pairs = dir.path().join("pairs.txt");
    fs::write(&pairs, "no tab on this line\n").unwrap();
    let o = cscime(&["tag", "-i", p(&pairs)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

fn lexicon_freq(text: &str, surface: &str) -> Vec<u64> {
    text.lines()
        .filter(|l| l.split('\t').next() == Some(surface))
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn build_dict_adds_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.tsv");
    fs::write(&base, "现在\txian zai\t10\t0\n现\txian\t3\t0\n在\tzai\t5\t0\n").unwrap();
    let corpus = dir.path().join("corpus.txt");
    fs::write(&corpus, "现在现在\n").unwrap();
    let out = dir.path().join("out.tsv");
    let o = cscime(&["build-dict", "--corpus", p(&corpus), "--base", p(&base), "-o", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(lexicon_freq(&text, "现在"), vec![12]);
    assert_eq!(lexicon_freq(&text, "现"), vec![3]);

    fs::write(&corpus, "").unwrap();
    let o = cscime(&["build-dict", "--corpus", p(&corpus), "--base", p(&base), "-o", p(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(lexicon_freq(&text, "现在"), vec![10]);
    assert_eq!(lexicon_freq(&text, "在"), vec![5]);
}

#[test]
fn generate_and_tag() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fs::read_to_string(root().join("data/corpus/people_daily_1998_01.txt")).unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, corpus.lines().take(200).collect::<Vec<_>>().join("\n")).unwrap();
    let out = dir.path().join("pairs.jsonl");
    let report = dir.path().join("report.json");
    let o = cscime(&[
        "--set",
        &lm_override(),
        "generate",
        "-i",
        p(&input),
        "-o",
        p(&out),
        "--no-lm-filter",
        "--report",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pairs = fs::read_to_string(&out).unwrap();
    let report: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let emitted = report["emitted"].as_u64().unwrap();
    assert!(emitted > 150);
    assert_eq!(pairs.lines().count() as u64, emitted);
    for line in pairs.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_ne!(v["source"], v["target"]);
        assert!(!v["spans"].as_array().unwrap().is_empty());
    }

    let o = cscime(&["tag", "-i", p(&out)]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("same_pinyin"));
    let json: Value = serde_json::from_str(&stdout[stdout.find("\n{").unwrap()..]).unwrap();
    assert_eq!(json["distribution"]["pairs"].as_u64(), Some(emitted));
    assert_eq!(json["span_tag_mismatches"].as_u64(), Some(0));

    // TSV output carries the same sentences
    let tsv = dir.path().join("pairs.tsv");
    let o = cscime(&[
        "--set",
        &lm_override(),
        "generate",
        "-i",
        p(&input),
        "-o",
        p(&tsv),
        "--no-lm-filter",
        "--format",
        "tsv",
    ]);
    assert!(o.status.success());
    let tsv = fs::read_to_string(&tsv).unwrap();
    let from_jsonl: Vec<String> = pairs
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            format!("{}\t{}", v["source"].as_str().unwrap(), v["target"].as_str().unwrap())
        })
        .collect();
    assert_eq!(tsv.lines().collect::<Vec<_>>(), from_jsonl);
}

#[test]
fn infinite_delta_emits_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, "今天天气很好\n我们现在出发\n").unwrap();
    let out = dir.path().join("pairs.jsonl");
    let o = cscime(&["--set", &lm_override(), "generate", "-i", p(&input), "-o", p(&out), "--delta", "inf"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn max_pairs_caps_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fs::read_to_string(root().join("data/corpus/people_daily_1998_01.txt")).unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, corpus.lines().take(100).collect::<Vec<_>>().join("\n")).unwrap();
    let out = dir.path().join("pairs.jsonl");
    let o = cscime(&["--set", &lm_override(), "generate", "-i", p(&input), "-o", p(&out), "--max-pairs", "7"]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 7);
}

#[test]
fn filter_thresholds_and_probability_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, "今天天气很好\n他的书在桌子上\n").unwrap();
    let kept = dir.path().join("kept.txt");
    let suspect = dir.path().join("suspect.txt");
    let run = |extra: &[&str]| {
        let mut args = vec!["--set", "filter.special=1.0", "--set", "filter.entity=1.0"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["filter", "-i", p(&input), "--kept", p(&kept), "--suspect", p(&suspect)]);
        stdout_json(&cscime(&args))
    };

    // probabilities are strictly below 1, so threshold 1.0 keeps everything
    let lm = lm_override();
    let r = run(&["--set", &lm, "--set", "filter.normal=1.0"]);
    assert_eq!((r["total"].as_u64(), r["kept"].as_u64()), (Some(2), Some(2)));
    assert_eq!(fs::read_to_string(&kept).unwrap().lines().count(), 2);

    let r = run(&["--set", &lm, "--set", "filter.normal=0.0", "--set", "filter.special=0.0"]);
    assert_eq!(r["suspect"].as_u64(), Some(2));
    assert_eq!(fs::read_to_string(&suspect).unwrap(), "今天天气很好\n他的书在桌子上\n");

    let probs = dir.path().join("probs.jsonl");
    fs::write(&probs, "[0.1,0.1,0.1,0.1,0.1,0.1]\n[0.2,0.9,0.1,0.1,0.1,0.1,0.1]\n").unwrap();
    // 的 at offset 1 carries 0.9 and trips the special threshold
    let o = cscime(&[
        "--set",
        "filter.special=0.5",
        "--set",
        "filter.entity=0.5",
        "--set",
        "filter.normal=0.5",
        "filter",
        "-i",
        p(&input),
        "--kept",
        p(&kept),
        "--suspect",
        p(&suspect),
        "--probs",
        p(&probs),
    ]);
    let r = stdout_json(&o);
    assert_eq!((r["kept"].as_u64(), r["suspect"].as_u64()), (Some(1), Some(1)));
    assert_eq!(fs::read_to_string(&kept).unwrap(), "今天天气很好\n");
    assert_eq!(fs::read_to_string(&suspect).unwrap(), "他的书在桌子上\n");

    // a probability row of the wrong length is a parse error
    fs::write(&probs, "[0.1]\n[0.1]\n").unwrap();
    let o = cscime(&["filter", "-i", p(&input), "--kept", p(&kept), "--suspect", p(&suspect), "--probs", p(&probs)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn evaluate_reports_all_four_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        path
    };
    let src = write("src.txt", "现再出发\n今天天气很好\n他门来了\n");
    let gold = write("gold.txt", "现在出发\n今天天气很好\n他们来了\n");
    let pred = write("pred.txt", "现在出发\n今天天汽很好\n他门来了\n");
    let r = stdout_json(&cscime(&["evaluate", "--src", p(&src), "--gold", p(&gold), "--pred", p(&pred)]));
    let cd = &r["char_detection"];
    assert_eq!((cd["tp"].as_u64(), cd["fp"].as_u64(), cd["fn"].as_u64()), (Some(1), Some(1), Some(1)));
    let sc = &r["sentence_correction"];
    assert_eq!((sc["tp"].as_u64(), sc["fp"].as_u64(), sc["fn"].as_u64()), (Some(1), Some(1), Some(1)));
    assert!((sc["f1"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let short = write("short.txt", "现在出发\n");
    let o = cscime(&["evaluate", "--src", p(&src), "--gold", p(&gold), "--pred", p(&short)]);
    assert_eq!(code(&o), 1);
    let ragged = write("ragged.txt", "现在\n今天天气很好\n他们来了\n");
    let o = cscime(&["evaluate", "--src", p(&src), "--gold", p(&gold), "--pred", p(&ragged)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn tag_with_supplied_segmentation() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    fs::write(&pairs, "开心地驴友\t开心地旅游\n卢山很美\t庐山很美\n").unwrap();
    let semantic = |args: &[&str]| {
        let o = cscime(args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        let json: Value = serde_json::from_str(&stdout[stdout.find("\n{").unwrap()..]).unwrap();
        json["distribution"]["by_char"]["semantic"].clone()
    };
    // order: entity_word, normal_word, special_char, normal_char
    assert_eq!(semantic(&["tag", "-i", p(&pairs)]), serde_json::json!([1, 2, 0, 0]));

    let seg = dir.path().join("seg.txt");
    fs::write(&seg, "开心 地 旅 游\n庐山 很 美\n").unwrap();
    assert_eq!(semantic(&["tag", "-i", p(&pairs), "--segmentation", p(&seg)]), serde_json::json!([1, 0, 0, 2]));

    fs::write(&seg, "开心 地 旅游\n").unwrap();
    assert_eq!(code(&cscime(&["tag", "-i", p(&pairs), "--segmentation", p(&seg)])), 1);
    fs::write(&seg, "开心 地 旅游\n庐山 很\n").unwrap();
    let o = cscime(&["tag", "-i", p(&pairs), "--segmentation", p(&seg)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
