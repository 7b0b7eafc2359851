use std::path::Path;
use std::process::{Command, Output};
use std::time::Duration;

use cdfsort::data::{read_keys, write_keys};
use cdfsort::Key;
use cdfsort_cli::{load_dataset, run_bench, run_pivot_quality, Algorithm, BenchOptions, CSV_HEADER};

fn cdfsort(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdfsort")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_rootdups_matches_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.bin");
    let o = cdfsort(&["generate", "rootdups", "16", "42", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_keys(&out).unwrap(), [0, 1, 2, 3].repeat(4));
}

#[test]
fn generate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    for f in [&a, &b] {
        let o = cdfsort(&["generate", "uniform", "1000000", "1", p(f)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes.len(), 8 + 8 * 1_000_000);
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let c = dir.path().join("c.bin");
    let o = cdfsort(&["generate", "--dataset", "uniform", "--n", "1000000", "--seed", "1", "--out", p(&c)]);
    assert!(o.status.success());
    assert_eq!(bytes, std::fs::read(&c).unwrap());
}

#[test]
fn generate_rejects_unknown_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = cdfsort(&["generate", "pareto", "10", "1", p(&dir.path().join("x.bin"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("uniform"), "{}", stderr(&o));
}

#[test]
fn bench_csv_schema_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = cdfsort(&["bench", "aips2o", "uniform", "100000", "10", "1", "--csv", p(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "algorithm,dataset,n,workers,run,elapsed_ns,keys_per_second,verified");
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 10 + 2);
    for (i, line) in lines[1..11].iter().enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8);
        assert_eq!(&f[..5], &["aips2o", "uniform", "100000", "1", &i.to_string()]);
        let ns: f64 = f[5].parse().unwrap();
        let rate: f64 = f[6].parse().unwrap();
        assert!((rate - 100_000.0 / (ns * 1e-9)).abs() <= 0.01 * rate);
        assert_eq!(f[7], "true");
    }
    assert!(lines[11].starts_with("aips2o,uniform,100000,1,mean,"));
    assert!(lines[12].starts_with("aips2o,uniform,100000,1,std,"));
}

#[test]
fn bench_several_algorithms_on_file_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.bin");
    write_keys(&data, &[5, 3, 9, 1, 1, 0, 7]).unwrap();
    let mut args = vec!["bench", "--dataset", p(&data), "--runs", "2"];
    for a in Algorithm::ALL {
        args.extend(["--algo", a.name()]);
    }
    let o = cdfsort(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for a in Algorithm::ALL {
        assert_eq!(
            out.lines().filter(|l| l.starts_with(&format!("{},d,7,1,", a.name()))).count(),
            4,
            "{out}"
        );
    }
}

#[test]
fn bench_single_run_on_two_keys() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("two.bin");
    write_keys(&data, &[2, 1]).unwrap();
    let o = cdfsort(&["bench", "--algo", "aips2o", "--dataset", p(&data), "--runs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let records: Vec<&str> = out.lines().filter(|l| l.split(',').nth(4) == Some("0")).collect();
    assert_eq!(records.len(), 1);
    assert!(records[0].ends_with(",true"));
}

#[test]
fn bench_unknown_algorithm_lists_registry() {
    let o = cdfsort(&["bench", "--algo", "timsort", "--dataset", "uniform", "--n", "10"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for a in Algorithm::ALL {
        assert!(err.contains(a.name()), "{err}");
    }
}

#[test]
fn timer_excludes_loading_and_includes_the_sort() {
    let slow_load = || {
        std::thread::sleep(Duration::from_millis(300));
        load_dataset("uniform", Some(1000), 1).unwrap().1
    };
    let input = slow_load();
    let opts = BenchOptions {
        algorithms: vec![Algorithm::Aips2o],
        runs: 2,
        workers: 1,
        seed: 1,
    };
    let report = run_bench("uniform", &input, &opts, |a, k, c| {
        std::thread::sleep(Duration::from_millis(40));
        a.run(k, c);
    })
    .unwrap();
    assert_eq!(report.records.len(), 2);
    for r in &report.records {
        assert!(r.verified);
        assert!(r.elapsed_ns >= 40_000_000, "{}", r.elapsed_ns);
        assert!(r.elapsed_ns < 300_000_000, "{}", r.elapsed_ns);
    }
}

#[test]
fn unverified_run_fails_and_is_not_summarised() {
    let input: Vec<Key> = (0..500).collect();
    let opts = BenchOptions {
        algorithms: vec![Algorithm::Reference],
        runs: 3,
        workers: 1,
        seed: 1,
    };
    let err = run_bench("ascending", &input, &opts, |_, k, _| {
        k.sort_unstable();
        k.swap(0, 1);
    })
    .unwrap_err();
    let failed = err.downcast_ref::<cdfsort_cli::VerificationFailed>().unwrap();
    assert_eq!(failed.index, Some(1));
    assert_eq!(failed.report.records.len(), 1);
    assert!(failed.report.summaries.is_empty());
    assert!(err.to_string().contains("violation at index 1"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.bin");
    let bad = dir.path().join("bad.bin");
    let broken = dir.path().join("broken.bin");
    write_keys(&good, &[1, 2, 2, 9]).unwrap();
    write_keys(&bad, &[2, 1]).unwrap();
    std::fs::write(&broken, [2, 0, 0, 0, 0, 0, 0, 0, 1]).unwrap();

    assert!(cdfsort(&["verify", p(&good)]).status.success());
    let o = cdfsort(&["verify", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation at index 1"));
    let o = cdfsort(&["verify", p(&broken)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("offset 9"), "{}", stderr(&o));
}

#[test]
fn classic_sort_output_passes_verify() {
    let dir = tempfile::tempdir().unwrap();
    for algo in ["learnedsort-classic", "learned-quicksort", "quicksort-learned-pivot"] {
        let out = dir.path().join(format!("{algo}.bin"));
        let o = cdfsort(&[
            "classic-sort",
            "--algo",
            algo,
            "--dataset",
            "lognormal",
            "--n",
            "50000",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("verified=true"));
        assert!(cdfsort(&["verify", p(&out)]).status.success());
    }
}

#[test]
fn pivot_quality_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for f in [&a, &b] {
        let o = cdfsort(&[
            "pivot-quality",
            "--n",
            "100000",
            "--pivots",
            "63",
            "--trials",
            "1",
            "--seed",
            "5",
            "--csv",
            p(f),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("trial,method,pivot_count,distance,complete\n"));
    assert_eq!(text.lines().count(), 1 + 2 + 2);
}

#[test]
fn perfect_splitters_score_zero() {
    let sorted: Vec<Key> = (0..10_000).collect();
    let perfect = |a: &[Key], b: usize, _: &mut _| (1..b).map(|i| a[i * a.len() / b - 1]).collect();
    let rows = run_pivot_quality(&sorted, 99, 2, 1, perfect).unwrap();
    for r in rows {
        assert_eq!(r.random.distance, 0.0);
        assert_eq!(r.random.pivot_count, 99);
    }
}

#[test]
fn pivot_quality_rejects_zero_pivots() {
    let o = cdfsort(&["pivot-quality", "--n", "1000", "--pivots", "0"]);
    assert!(!o.status.success());
}
