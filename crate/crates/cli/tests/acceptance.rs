//! One line per release criterion: `PASS`, `FAIL` or `SKIPPED`, with timing.
//! Exits non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod projects;
#[path = "../../service/tests/common/mod.rs"]
mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use petgraph::unionfind::UnionFind;
use qualnet_core::baseline::{causal_subset, evaluate_semeval, Baseline, CooccurrenceMode, CueRules};
use qualnet_core::ingest::{parse_semeval, CausalDirection};
use qualnet_core::metrics::{kappa, match_sets, precision_recall, psa, MatchPolicy};
use qualnet_core::model::{validate_project, EdgeOrigin, IndicatorId, MergeRecord, Project, SentenceId};
use qualnet_core::network::{build_indicator_graph, consolidate};
use qualnet_core::pipeline::{apply_merge_records, generate_pairs, merge_records_from_pairs};
use qualnet_core::store;
use rand::Rng;

const SEMEVAL_ENV: &str = "QUALNET_SEMEVAL_FILE";

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pair_generation() -> Check {
    let mut r = projects::rng(1);
    let mut trials = 0;
    for n in 0..=12usize {
        for _ in 0..50 {
            let items: Vec<u32> = (0..n).map(|_| r.random()).collect();
            let mut expected = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i < j {
                        expected.push((items[i], items[j]));
                    }
                }
            }
            ensure(generate_pairs(&items) == expected, || format!("n={n}: {items:?}"))?;
            trials += 1;
        }
    }
    Ok(format!("{trials} sentences, n in 0..=12"))
}

fn conservation() -> Check {
    let mut weight = 0;
    for seed in 0..200 {
        let p = projects::random_project(seed, projects::Shape::default());
        let g = build_indicator_graph(&p);
        let cg = consolidate(&g, &p.concepts);
        let concept = |id| g.node(id).and_then(|n| n.concept_id);
        let mut mapped = 0;
        for e in &g.edges {
            if let (Some(a), Some(b)) = (concept(e.cause), concept(e.effect)) {
                mapped += 1;
                let ce = cg.edge(a, b).ok_or_else(|| format!("seed {seed}: edge {a}->{b} lost"))?;
                ensure(ce.contributing_edge_ids.contains(&e.id), || format!("seed {seed}: edge {} misfiled", e.id))?;
            }
        }
        let total: usize = cg.edges.iter().map(|e| e.weight).sum();
        ensure(total == mapped, || format!("seed {seed}: weight {total} != {mapped} mapped edges"))?;
        weight += total;
    }
    Ok(format!("200 projects, {weight} mapped edges"))
}

fn multiset_overlap(a: &[String], b: &[String]) -> usize {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for x in b {
        counts.entry(x).or_default().1 += 1;
    }
    counts.values().map(|(x, y)| (*x).min(*y)).sum()
}

fn metrics_oracles() -> Check {
    const TOL: f64 = 1e-12;
    let mut r = projects::rng(7);
    let policy = MatchPolicy::<f64>::ExactNormalized;
    let labels = ["a", "b", "c", "d", "e", "f"];
    let set = |r: &mut rand::rngs::StdRng| -> Vec<String> {
        (0..r.random_range(0..10)).map(|_| labels[r.random_range(0..labels.len())].to_string()).collect()
    };
    let mut psa_cases = 0;
    while psa_cases < 500 {
        let (a, b) = (set(&mut r), set(&mut r));
        if a.is_empty() && b.is_empty() {
            continue;
        }
        let shared = multiset_overlap(&a, &b);
        let (x, y) = (a.len() - shared, b.len() - shared);
        let expected = (2 * shared) as f64 / (2 * shared + x + y) as f64;
        let got = psa(&a, &b, &policy, None).map_err(|e| e.to_string())?.value;
        ensure((got - expected).abs() <= TOL, || format!("psa {a:?} {b:?}: {got} vs {expected}"))?;
        psa_cases += 1;

        let m = match_sets(&a, &b, &policy, None).map_err(|e| e.to_string())?;
        let pr = precision_recall(&m, &a, &b);
        let tp = pr.ledger.iter().filter(|l| l.gold.is_some()).count();
        ensure(tp == shared && pr.true_positive == tp, || format!("ledger {a:?} {b:?}"))?;
        ensure(pr.false_positive == a.len() - tp && pr.false_negative == b.len() - tp, || format!("ledger {a:?} {b:?}"))?;
        if !a.is_empty() {
            ensure((pr.precision - tp as f64 / a.len() as f64).abs() <= TOL, || format!("precision {a:?} {b:?}"))?;
        }
        if !b.is_empty() {
            ensure((pr.recall - tp as f64 / b.len() as f64).abs() <= TOL, || format!("recall {a:?} {b:?}"))?;
        }
    }
    let mut kappa_cases = 0;
    let mut degenerate = 0;
    while kappa_cases < 500 {
        let n = r.random_range(1..60);
        let a: Vec<u8> = (0..n).map(|_| r.random_range(0..4)).collect();
        let b: Vec<u8> = (0..n).map(|_| r.random_range(0..4)).collect();
        let nf = n as f64;
        let po = a.iter().zip(&b).filter(|(x, y)| x == y).count() as f64 / nf;
        let pe: f64 = (0u8..4)
            .map(|k| {
                let ra = a.iter().filter(|&&x| x == k).count() as f64 / nf;
                let rb = b.iter().filter(|&&x| x == k).count() as f64 / nf;
                ra * rb
            })
            .sum();
        match kappa::<f64, _>(&a, &b) {
            Ok(k) => {
                let expected = (po - pe) / (1.0 - pe);
                ensure((k.value - expected).abs() <= TOL, || format!("kappa {a:?} {b:?}: {} vs {expected}", k.value))?;
                ensure((-1.0..=1.0).contains(&k.value), || format!("kappa {} out of range", k.value))?;
            }
            Err(_) => {
                ensure((pe - 1.0).abs() <= TOL, || format!("kappa refused {a:?} {b:?}"))?;
                degenerate += 1;
            }
        }
        kappa_cases += 1;
    }
    Ok(format!("500 PSA, 500 kappa ({degenerate} undefined), 500 ledgers"))
}

fn semeval_records() -> Result<Option<Vec<qualnet_core::ingest::SemEvalRecord>>, String> {
    let Some(path) = std::env::var_os(SEMEVAL_ENV) else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", Path::new(&path).display()))?;
    let records = parse_semeval(&text).map_err(|e| e.to_string())?;
    Ok(Some(causal_subset(&records)))
}

fn semeval_cooccurrence() -> Result<Option<String>, String> {
    let Some(records) = semeval_records()? else { return Ok(None) };
    let report = evaluate_semeval::<f64>(&records, &Baseline::Cooccurrence(CooccurrenceMode::Consecutive));
    // e1 always precedes e2, so a text-order edge is correct exactly for (e1,e2) records
    let forward = records.iter().filter(|r| r.causal_direction == CausalDirection::E1CausesE2).count();
    let fraction = forward as f64 / records.len() as f64;
    let p = report.precision.ok_or("no predictions")?;
    let rec = report.recall.ok_or("no gold edges")?;
    let dir = report.direction_accuracy.ok_or("no matched pairs")?;
    ensure(rec == 1.0, || format!("recall {rec}"))?;
    ensure((p - fraction).abs() < 1e-12 && (dir - fraction).abs() < 1e-12, || {
        format!("precision {p}, direction {dir}, forward fraction {fraction}")
    })?;
    ensure((p - 0.38).abs() <= 0.10, || format!("precision {:.2}% outside 38% +/- 10pp", p * 100.0))?;
    Ok(Some(format!("{} records, P = DirAcc = {:.2}%, R = 100.00%", records.len(), p * 100.0)))
}

fn semeval_cue() -> Result<Option<String>, String> {
    let Some(records) = semeval_records()? else { return Ok(None) };
    let report = evaluate_semeval::<f64>(&records, &Baseline::Cue(CueRules::default()));
    let p = report.precision.ok_or("no predictions")?;
    let rec = report.recall.unwrap_or(0.0);
    ensure(p >= 0.60 && rec <= 0.25, || format!("P {:.2}%, R {:.2}%", p * 100.0, rec * 100.0))?;
    Ok(Some(format!("{} records, P {:.2}%, R {:.2}%", records.len(), p * 100.0, rec * 100.0)))
}

fn union_find_records(n: usize, pairs: &[(usize, usize)]) -> Vec<MergeRecord> {
    let mut uf = UnionFind::<usize>::new(n);
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut out: Vec<MergeRecord> = groups
        .into_values()
        .filter(|g| g.len() > 1)
        .map(|g| MergeRecord {
            canonical_indicator_id: IndicatorId(g[0] as u64),
            absorbed_indicator_ids: g[1..].iter().map(|&i| IndicatorId(i as u64)).collect(),
        })
        .collect();
    out.sort_by_key(|r| r.canonical_indicator_id);
    out
}

fn merge_union_find() -> Check {
    let mut r = projects::rng(11);
    for trial in 0..300 {
        let n = r.random_range(1..=40);
        let pairs: Vec<(usize, usize)> = (0..r.random_range(0..60))
            .map(|_| (r.random_range(0..n), r.random_range(0..n)))
            .filter(|(a, b)| a != b)
            .collect();
        let mut p = Project::new("merge");
        p.add_unit("x", &["x".into()]);
        let ids: Vec<IndicatorId> = (0..n)
            .map(|i| p.add_indicator(SentenceId(0), &format!("i{i}"), None).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        for _ in 0..r.random_range(0..80) {
            let (a, b) = (r.random_range(0..n), r.random_range(0..n));
            if a != b {
                p.add_edge(ids[a], ids[b], EdgeOrigin::Pipeline).map_err(|e| e.to_string())?;
            }
        }
        let decisions: Vec<_> = pairs.iter().map(|&(a, b)| (ids[a], ids[b])).collect();
        let records = merge_records_from_pairs(&[], &decisions);
        ensure(records == union_find_records(n, &pairs), || format!("trial {trial}: components differ"))?;
        for rec in &records {
            ensure(rec.absorbed_indicator_ids.iter().all(|a| *a > rec.canonical_indicator_id), || {
                format!("trial {trial}: canonical is not the minimum id")
            })?;
        }
        let before: Vec<_> = p.active_edges().map(|e| e.edge_id).collect();
        let rw = apply_merge_records(&mut p, records);
        let after: BTreeSet<_> = p.active_edges().map(|e| e.edge_id).collect();
        let collapsed: BTreeSet<_> = rw.collapsed.iter().copied().collect();
        for e in &before {
            match rw.survivors.get(e) {
                Some(s) => ensure(!collapsed.contains(e) && after.contains(s), || format!("trial {trial}: edge {e}"))?,
                None => ensure(collapsed.contains(e), || format!("trial {trial}: edge {e} vanished"))?,
            }
        }
        ensure(validate_project(&p).is_empty(), || format!("trial {trial}: invalid after merge"))?;
    }
    Ok("300 trials, up to 40 indicators".into())
}

fn fixture(rel: &str) -> String {
    session::fixtures().join(rel).display().to_string()
}

fn golden_end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<String, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_qualnet"))
            .args(args)
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
        String::from_utf8(out.stdout).map_err(|e| e.to_string())
    };
    run(&[
        "ingest",
        &fixture("mock6/corpus.txt"),
        "-o",
        "m6.qualnet.json",
        "--overview-file",
        &fixture("mock6/overview.txt"),
        "--concepts",
        &fixture("mock6/concepts.json"),
        "--id",
        "mock6",
    ])?;
    let report = run(&["--json", "run", "m6.qualnet.json", "--provider", &format!("mock:{}", fixture("mock6/mock_script.json"))])?;
    let report: serde_json::Value = serde_json::from_str(&report).map_err(|e| e.to_string())?;
    let stages = report["stages"].as_array().map_or(0, Vec::len);
    ensure(stages == 4, || format!("{stages} stages ran"))?;
    let exported = run(&["export", "m6.qualnet.json"])?;
    let golden = std::fs::read_to_string(fixture("mock6/golden_network.json")).map_err(|e| e.to_string())?;
    ensure(exported == golden, || "export differs from the golden network".into())?;
    Ok(format!("4 stages, {} bytes identical", golden.len()))
}

fn store_round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("p.qualnet.json");
    for seed in 0..100 {
        let p = projects::random_project(seed, projects::Shape::default());
        store::save(&p, &path).map_err(|e| format!("seed {seed}: {e}"))?;
        let first = std::fs::read(&path).map_err(|e| e.to_string())?;
        let loaded = store::load(&path).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(loaded == p, || format!("seed {seed}: loaded project differs"))?;
        store::save(&loaded, &path).map_err(|e| e.to_string())?;
        ensure(std::fs::read(&path).map_err(|e| e.to_string())? == first, || format!("seed {seed}: bytes changed"))?;
    }
    Ok("100 projects".into())
}

fn api_contract() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?;
    let outcome = rt.block_on(async {
        let app = session::open(dir.path(), session::mock6_backend());
        session::scripted_session(&app).await
    })?;
    ensure(outcome.stale_status == 409, || format!("stale edit gave {}", outcome.stale_status))?;
    Ok(format!("final revision {}, stale edit 409", outcome.final_revision))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("pair generation oracle", Duration::from_secs(1), Box::new(|| plain(pair_generation()))),
        ("consolidation conservation", Duration::from_secs(5), Box::new(|| plain(conservation()))),
        ("metrics oracles", Duration::from_secs(5), Box::new(|| plain(metrics_oracles()))),
        ("semeval co-occurrence reproduction", Duration::from_secs(10), Box::new(|| gated(semeval_cooccurrence()))),
        ("semeval causal-cue property", Duration::from_secs(10), Box::new(|| gated(semeval_cue()))),
        ("merge union-find oracle", Duration::from_secs(2), Box::new(|| plain(merge_union_find()))),
        ("golden end-to-end", Duration::from_secs(5), Box::new(|| plain(golden_end_to_end()))),
        ("store round trip", Duration::from_secs(5), Box::new(|| plain(store_round_trip()))),
        ("api contract", Duration::from_secs(10), Box::new(|| plain(api_contract()))),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Outcome::Pass(_) if took > limit => Outcome::Fail(format!("took {took:.2?}, limit {limit:?}")),
            o => o,
        };
        match outcome {
            Outcome::Pass(detail) => println!("PASS    {name}: {detail} ({took:.2?})"),
            Outcome::Fail(why) => {
                failed += 1;
                println!("FAIL    {name}: {why} ({took:.2?})");
            }
            Outcome::Skipped(why) => println!("SKIPPED {name}: {why}"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn plain(c: Check) -> Outcome {
    match c {
        Ok(d) => Outcome::Pass(d),
        Err(e) => Outcome::Fail(e),
    }
}

fn gated(c: Result<Option<String>, String>) -> Outcome {
    match c {
        Ok(Some(d)) => Outcome::Pass(d),
        Ok(None) => Outcome::Skipped(format!("set {SEMEVAL_ENV} to the SemEval-2010 Task 8 file")),
        Err(e) => Outcome::Fail(e),
    }
}
