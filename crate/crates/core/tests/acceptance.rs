//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{auditor_for, brute_force_diff, fast_policy, precedence_cases, privacy_entry, random};
use gptaudit::analysis::{export_report, ReportFormat};
use gptaudit::audit::AuditPolicy;
use gptaudit::driver::SimulatedDriver;
use gptaudit::fixture::{generate_corpus, serve, CorpusConfig};
use gptaudit::model::{
    build_access_url, classify, ActionDescriptor, GizmoId, GptClass, GptMetadata, KnowledgeFile,
    DEFAULT_STORE_BASE,
};
use gptaudit::pipeline::{crawl, mask_volatile};
use gptaudit::store::{diff_snapshots, load_snapshot, write_snapshot, ChangeEvent, StoreError};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Runtime::new().expect("tokio runtime")
}

fn csv_rows(path: &Path) -> Vec<(String, String)> {
    common::read(path)
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.rsplit_once(',').expect("two columns");
            (k.to_owned(), v.to_owned())
        })
        .collect()
}

fn rows(pairs: &[(&str, u32)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| ((*k).to_owned(), v.to_string()))
        .collect()
}

/// Crawls a generated corpus end to end and exports CSV and JSON reports.
async fn full_run(
    config: &CorpusConfig,
    policy: AuditPolicy,
    root: &Path,
) -> (String, std::path::PathBuf) {
    let corpus = generate_corpus(config).expect("valid config");
    let handle = serve(&corpus).await.expect("fixture binds");
    let driver = SimulatedDriver::new(&handle.base_url(), 200.0).expect("client");
    let auditor = auditor_for(&handle, policy);
    let outcome = crawl(
        corpus.metadata().cloned().collect(),
        Arc::new(driver),
        &auditor,
        8,
    )
    .await;
    let id = outcome.snapshot.snapshot_id.clone();
    write_snapshot(&outcome.snapshot, root).expect("snapshot written");
    let snapshot = load_snapshot(root, &id).expect("snapshot loads");
    let reports = root.join(format!("report-{id}"));
    export_report(&snapshot, ReportFormat::Csv, &reports).expect("csv report");
    export_report(&snapshot, ReportFormat::Json, &reports).expect("json report");
    (id, reports)
}

fn replica_end_to_end() -> Check {
    let started = Instant::now();
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (_, reports) = runtime().block_on(full_run(
        &CorpusConfig::replica(42),
        AuditPolicy::default(),
        root.path(),
    ));
    let audits = csv_rows(&reports.join("audit_distribution.csv"));
    let expected = rows(&[
        ("accessible", 92),
        ("broken", 9),
        ("homepage", 5),
        ("timeout", 2),
        ("server_error", 2),
    ]);
    ensure(audits == expected, || {
        format!("audit_distribution {audits:?}")
    })?;
    let buckets = csv_rows(&reports.join("domain_count_distribution.csv"));
    let expected = rows(&[("0", 409), ("1", 79), ("2+", 12)]);
    ensure(buckets == expected, || {
        format!("domain_count_distribution {buckets:?}")
    })?;
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(90), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "92/9/5/2/2 and 409/79/12 in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn classification_partition() -> Check {
    // Knowledge/actions presence (non-empty) → label, straight from the
    // taxonomy: actions decide alone, else knowledge, else prompt-only.
    const ORACLE: [((bool, bool), GptClass); 4] = [
        ((false, false), GptClass::PromptBased),
        ((true, false), GptClass::KnowledgeBased),
        ((false, true), GptClass::ActionBased),
        ((true, true), GptClass::ActionBased),
    ];
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut combos = HashSet::new();
    let cases = 2_048;
    for i in 0..cases {
        // Five optional slots; the low bits walk every presence mask.
        let mask = i % 32;
        let id = GizmoId::parse(&format!("c{:08}", i)).expect("valid id");
        let mut m = GptMetadata::new(id, "n", "i").expect("valid metadata");
        let present = |bit: usize| mask & (1 << bit) != 0;
        if present(0) {
            m.description = Some("d".into());
        }
        if present(1) {
            m.conversation = Some(vec!["hi".into()]);
        }
        if present(2) {
            m.capabilities = Some(vec!["web_browsing".into()]);
        }
        // A present slot may still be an empty list, which counts as absent.
        let k_len = if present(3) { rng.gen_range(0..3) } else { 0 };
        let a_len = if present(4) { rng.gen_range(0..3) } else { 0 };
        if present(3) {
            m.knowledge = Some(
                (0..k_len)
                    .map(|j| KnowledgeFile {
                        name: format!("f{j}"),
                        bytes: 1,
                    })
                    .collect(),
            );
        }
        if present(4) {
            m.actions = Some(
                (0..a_len)
                    .map(|j| ActionDescriptor {
                        domain: format!("d{j}.test"),
                        privacy_policy: format!("https://d{j}.test/p"),
                    })
                    .collect(),
            );
        }
        combos.insert(mask);
        let key = (k_len > 0, a_len > 0);
        let want = ORACLE
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, c)| *c)
            .expect("total table");
        let got = classify(&m);
        ensure(got == want, || {
            format!("mask {mask:05b} k={k_len} a={a_len}: {got} != {want}")
        })?;
        let labels = GptClass::ALL.iter().filter(|c| **c == got).count();
        ensure(labels == 1, || "label not unique".into())?;
    }
    ensure(combos.len() == 32, || {
        format!("{} presence combinations", combos.len())
    })?;
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{cases} cases over 32 presence masks"))
}

fn audit_precedence() -> Check {
    let (corpus, cases) = precedence_cases();
    ensure(cases.len() == 12, || format!("{} cases", cases.len()))?;
    runtime().block_on(async {
        let handle = serve(&corpus).await.map_err(|e| e.to_string())?;
        let auditor = auditor_for(&handle, fast_policy(Duration::from_millis(400)));
        for (e, expected) in &cases {
            let got = auditor.audit_link(&privacy_entry(e)).await.outcome;
            ensure(got == *expected, || {
                format!("{}: got {got}, expected {expected}", e.policy_url)
            })?;
        }
        Ok("12/12 links classified as specified".to_owned())
    })
}

fn snapshot_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..100 {
        let s = random::snapshot(&mut rng, &format!("rt-{i}"), 25);
        write_snapshot(&s, root.path()).map_err(|e| e.to_string())?;
        let back = load_snapshot(root.path(), &s.snapshot_id).map_err(|e| e.to_string())?;
        ensure(back == s, || format!("snapshot {i} differs after reload"))?;
    }
    let mut corrupted = 0;
    for file in ["apps", "panels", "audits", "documents"] {
        for trial in 0..5 {
            let s = loop {
                let s = random::snapshot(&mut rng, &format!("c-{file}-{trial}"), 10);
                if !s.audits.is_empty() && !s.documents.is_empty() {
                    break s;
                }
            };
            let dir = write_snapshot(&s, root.path()).map_err(|e| e.to_string())?;
            let path = dir.join(format!("{file}.jsonl"));
            let mut bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            let at = rng.gen_range(0..bytes.len());
            bytes[at] = bytes[at].wrapping_add(rng.gen_range(1..=255));
            std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
            match load_snapshot(root.path(), &s.snapshot_id) {
                Err(StoreError::CorruptManifest(named)) if named == file => corrupted += 1,
                other => return Err(format!("corrupted {file} gave {other:?}")),
            }
        }
    }
    Ok(format!("100 round trips, {corrupted} corruptions named"))
}

fn diff_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = 200;
    for round in 0..pairs {
        let a = random::snapshot(&mut rng, "a", 50);
        let b = random::snapshot(&mut rng, "b", 50);
        let forward: HashSet<ChangeEvent> = diff_snapshots(&a, &b).events.into_iter().collect();
        ensure(forward == brute_force_diff(&a, &b), || {
            format!("pair {round} disagrees with oracle")
        })?;
        let backward: HashSet<ChangeEvent> = diff_snapshots(&b, &a).events.into_iter().collect();
        let mirrored: HashSet<ChangeEvent> = forward.iter().map(ChangeEvent::reversed).collect();
        ensure(backward == mirrored, || {
            format!("pair {round} not antisymmetric")
        })?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{pairs} pairs in {:.2}s", elapsed.as_secs_f64()))
}

fn determinism() -> Check {
    let mut config = CorpusConfig::replica(9);
    config.hang_delay_ms = 3_000;
    let policy = fast_policy(Duration::from_secs(1));
    let rt = runtime();
    let root_a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root_b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (id_a, rep_a) = rt.block_on(full_run(&config, policy.clone(), root_a.path()));
    let (id_b, rep_b) = rt.block_on(full_run(&config, policy, root_b.path()));
    let mut compared = 0;
    for name in [
        "audit_distribution",
        "domain_count_distribution",
        "domain_frequency",
        "classification",
    ] {
        for ext in ["csv", "json"] {
            let file = format!("{name}.{ext}");
            let a = std::fs::read(rep_a.join(&file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(rep_b.join(&file)).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{file} differs"))?;
            compared += 1;
        }
    }
    for data in ["apps", "panels", "audits", "documents"] {
        let a = common::read(&root_a.path().join(&id_a).join(format!("{data}.jsonl")));
        let b = common::read(&root_b.path().join(&id_b).join(format!("{data}.jsonl")));
        ensure(mask_volatile(&a) == mask_volatile(&b), || {
            format!("{data}.jsonl differs after masking")
        })?;
        compared += 1;
    }
    Ok(format!("{compared} files identical"))
}

fn url_construction() -> Check {
    let id = GizmoId::parse("1abcD2EFG").map_err(|e| e.to_string())?;
    let url = build_access_url(DEFAULT_STORE_BASE, &id);
    ensure(url == "https://chatgpt.com/g/g-1abcD2EFG", || {
        format!("got {url}")
    })?;
    Ok(url)
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("replica end-to-end", replica_end_to_end),
        ("classification partition", classification_partition),
        ("audit precedence", audit_precedence),
        ("snapshot round-trip and corruption", snapshot_round_trip),
        ("diff oracle equivalence", diff_oracle),
        ("determinism", determinism),
        ("URL construction", url_construction),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {}: {name} ... PASS ({detail})", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: {name} ... FAIL ({why})", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
