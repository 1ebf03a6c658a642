//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scm_core::diagnose::{
    approximate_all_mics, cycle_relation, find_all_mics, find_one_mic, is_mic, mic_graph,
    DiagnosisOptions,
};
use scm_core::{
    brute_force_consistent, check_consistency, generate, parse_instance, reduce_inputs,
    ConstraintScope, GenParams, SolverOptions, ValidatedInstance, VertexId,
};
use scm_testkit::{
    cnf_instance, data_path, ids, load, random_cnf, truth_table_sat, yeast_neighborhoods,
    Exhaustive,
};

const GAMMAS: [f64; 5] = [0.01, 0.02, 0.033, 0.05, 0.1];

/// MICs produced while running the other criteria, re-checked by the
/// connectivity criterion.
#[derive(Default)]
struct Produced {
    mics: Vec<(ValidatedInstance, Vec<VertexId>)>,
}

impl Produced {
    fn add(&mut self, inst: &ValidatedInstance, members: &[VertexId]) {
        self.mics.push((inst.clone(), members.to_vec()));
    }
}

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn(&mut Produced) -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scm(args: &[&str]) -> (Output, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_scm"))
        .args(args)
        .output()
        .expect("binary runs");
    (out, start.elapsed())
}

fn fixture(name: &str) -> String {
    data_path(name).to_string_lossy().into_owned()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn operon_profiles(_: &mut Produced) -> Verdict {
    let mut slowest = Duration::ZERO;
    for (file, expected, code) in [
        ("operon_mu1.txt", "CONSISTENT\n", 0),
        ("operon_mu2.txt", "INCONSISTENT\n", 1),
        ("operon_mu3.txt", "CONSISTENT\n", 0),
        ("operon_mu4.txt", "INCONSISTENT\n", 1),
    ] {
        let (out, t) = scm(&["check", &fixture(file)]);
        slowest = slowest.max(t);
        ensure(text(&out) == expected && out.status.code() == Some(code), || {
            format!("{file}: got {:?} exit {:?}", text(&out), out.status.code())
        })?;
    }
    let (out, t) = scm(&["check", &fixture("operon_mu3.txt"), "--witness"]);
    slowest = slowest.max(t);
    let got = text(&out);
    for line in ["obs L_i +", "obs LacY -", "obs LacZ -", "obs A -", "obs cAMP-CRP +"] {
        ensure(got.lines().any(|l| l == line), || format!("witness lacks `{line}`"))?;
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest run {slowest:?}"))?;
    Ok(format!("4 profiles and witness match; slowest run {slowest:.2?}"))
}

fn small_core_example(produced: &mut Produced) -> Verdict {
    let start = Instant::now();
    let (out, _) = scm(&["diagnose", &fixture("small_core.txt"), "--mode", "all"]);
    ensure(text(&out) == "A D\ncomplete: true\n", || format!("diagnose printed {:?}", text(&out)))?;

    let (out, _) = scm(&["reduce", &fixture("small_core.txt")]);
    let reduced = parse_instance(&text(&out)).map_err(|e| e.to_string())?;
    let inputs: Vec<&str> = reduced.inputs().map(|v| reduced.name(v)).collect();
    ensure(inputs == ["B", "C", "E"], || format!("reduce marked {inputs:?}"))?;

    let groups: Vec<Vec<&str>> = cycle_relation(&reduced)
        .groups()
        .iter()
        .map(|g| g.iter().map(|&v| reduced.name(v)).collect())
        .collect();
    ensure(groups == [["A", "D"]], || format!("cycle relation {groups:?}"))?;

    let inst = load("small_core.txt");
    for m in find_all_mics(&reduce_inputs(&inst).0, &DiagnosisOptions::default()).mics {
        produced.add(&inst, m.members());
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("MIC {{A, D}} complete, inputs B C E, one cycle class; {elapsed:.2?}"))
}

fn oracle_corpus() -> Vec<ValidatedInstance> {
    let mut out = Vec::new();
    let mut seed = 1000;
    for alpha in 3..=12 {
        for beta in [1.5, 2.5] {
            for gamma in [0.1, 0.3] {
                for _ in 0..13 {
                    seed += 1;
                    out.push(generate(&GenParams::new(alpha, beta, gamma, seed)).unwrap());
                }
            }
        }
    }
    out
}

fn oracle_equivalence(produced: &mut Produced) -> Verdict {
    let start = Instant::now();
    let corpus = oracle_corpus();
    let (mut status_mismatch, mut mic_mismatch, mut inconsistent, mut mic_total) = (0, 0, 0, 0);
    for inst in &corpus {
        let oracle = Exhaustive::new(inst).ok_or("instance outside oracle bounds")?;
        let solver = check_consistency(inst, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let brute = brute_force_consistent(inst, &ConstraintScope::all(inst)).map_err(|e| e.to_string())?;
        if solver.is_consistent() != brute || brute != oracle.all_consistent() {
            status_mismatch += 1;
        }
        inconsistent += usize::from(!brute);

        let report = find_all_mics(inst, &DiagnosisOptions::unbounded());
        let got: Vec<Vec<VertexId>> = report.mics.iter().map(|m| m.members().to_vec()).collect();
        if got != oracle.mics() || !report.complete {
            mic_mismatch += 1;
        }
        mic_total += got.len();
        for m in &got {
            produced.add(inst, m);
        }
        if let Ok(Some(m)) = find_one_mic(inst, &DiagnosisOptions::default()) {
            produced.add(inst, m.members());
        }
    }
    let elapsed = start.elapsed();
    ensure(status_mismatch == 0 && mic_mismatch == 0, || {
        format!("{status_mismatch} status and {mic_mismatch} MIC-set mismatches")
    })?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} instances ({inconsistent} inconsistent, {mic_total} MICs), zero mismatches; {elapsed:.2?}",
        corpus.len()
    ))
}

fn sat_fixture(_: &mut Produced) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut mismatches, mut sat) = (0, 0);
    for _ in 0..100 {
        let (vars, cnf) = random_cnf(&mut rng, 8, 12);
        let expected = truth_table_sat(vars, &cnf);
        let got = check_consistency(&cnf_instance(vars, &cnf), &SolverOptions::default())
            .map_err(|e| e.to_string())?
            .is_consistent();
        mismatches += usize::from(got != expected);
        sat += usize::from(expected);
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    Ok(format!("100 CNFs ({sat} satisfiable), zero mismatches"))
}

fn connectivity(produced: &mut Produced) -> Verdict {
    let mut violations = 0;
    for (inst, members) in &produced.mics {
        if !mic_graph(inst, members).strongly_connects(members) {
            violations += 1;
        }
    }
    let mut pairs = 0;
    for inst in &oracle_corpus() {
        let rel = cycle_relation(inst);
        for m in Exhaustive::new(inst).ok_or("instance outside oracle bounds")?.mics() {
            for (k, &u) in m.iter().enumerate() {
                for &v in &m[k + 1..] {
                    pairs += 1;
                    violations += usize::from(!rel.related(u, v));
                }
            }
        }
    }
    ensure(!produced.mics.is_empty(), || "no MICs were produced".into())?;
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!(
        "{} produced MICs connected, {pairs} exhaustive MIC pairs related",
        produced.mics.len()
    ))
}

fn scaling(_: &mut Produced) -> Verdict {
    let alphas = [500usize, 1000, 1500, 2000, 2500, 3000, 3500, 4000];
    let mut points = Vec::new();
    let mut slowest = Duration::ZERO;
    for &alpha in &alphas {
        let mut total = Duration::ZERO;
        let mut runs = 0u32;
        for seed in 0..3 {
            let inst = generate(&GenParams::new(alpha, 2.5, 0.1, seed)).unwrap();
            let start = Instant::now();
            check_consistency(&inst, &SolverOptions::default()).map_err(|e| e.to_string())?;
            let t = start.elapsed();
            slowest = slowest.max(t);
            total += t;
            runs += 1;
        }
        points.push(((alpha as f64).ln(), (total / runs).as_secs_f64().max(1e-4).ln()));
    }
    // Least-squares slope of log time over log size.
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let cov: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = points.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let slope = cov / var;
    ensure(slowest < Duration::from_secs(60), || format!("slowest check {slowest:?}"))?;
    ensure(slope <= 2.0, || format!("log-log slope {slope:.2}"))?;
    Ok(format!("alpha 500..4000, slowest {slowest:.2?}, log-log slope {slope:.2}"))
}

fn benchmark_mics(produced: &mut Produced) -> Verdict {
    let mut summary = Vec::new();
    for alpha in [50usize, 75, 100, 125, 150] {
        let (mut ok, mut found) = (0, 0);
        for seed in 0..50u64 {
            let gamma = GAMMAS[seed as usize % GAMMAS.len()];
            let inst = generate(&GenParams::new(alpha, 2.5, gamma, seed)).unwrap();
            let reduced = reduce_inputs(&inst).0;
            let opts = DiagnosisOptions::default();
            match find_one_mic(&reduced, &opts) {
                Ok(None) => ok += 1,
                Ok(Some(m)) => {
                    let on_reduced = is_mic(&reduced, m.members(), &opts).map_err(|e| e.to_string())?;
                    let on_original = is_mic(&inst, m.members(), &opts).map_err(|e| e.to_string())?;
                    ensure(on_reduced.is_mic && on_original.is_mic, || {
                        format!("alpha {alpha} seed {seed}: {:?} fails verification", m.names(&inst))
                    })?;
                    produced.add(&inst, m.members());
                    ok += 1;
                    found += 1;
                }
                Err(_) => {}
            }
        }
        ensure(ok * 10 >= 50 * 9, || format!("alpha {alpha}: only {ok}/50 resolved"))?;
        summary.push(format!("{alpha}:{ok}/50({found} MIC)"));
    }
    Ok(summary.join(" "))
}

fn yeast_neighborhoods_check(produced: &mut Produced) -> Verdict {
    for (text, expected) in yeast_neighborhoods() {
        let inst = parse_instance(text).map_err(|e| e.to_string())?.guess_inputs();
        let members = ids(&inst, &expected);
        let verdict = is_mic(&inst, &members, &DiagnosisOptions::default()).map_err(|e| e.to_string())?;
        ensure(verdict.is_mic, || format!("{expected:?} is not a MIC"))?;
        produced.add(&inst, &members);
        for m in approximate_all_mics(&inst, &DiagnosisOptions::default()).mics {
            produced.add(&inst, m.members());
        }
    }
    Ok("all 6 neighborhoods verified".into())
}

fn determinism(_: &mut Produced) -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let generated = dir.path().join("gen.txt");
    let (out, _) = scm(&["generate", "--alpha", "150", "--gamma", "0.1", "--seed", "42"]);
    std::fs::write(&generated, &out.stdout).map_err(|e| e.to_string())?;
    let gen_path = generated.to_string_lossy().into_owned();
    let (mu2, mu3, core) = (
        fixture("operon_mu2.txt"),
        fixture("operon_mu3.txt"),
        fixture("small_core.txt"),
    );
    let commands: Vec<Vec<&str>> = vec![
        vec!["generate", "--alpha", "300", "--gamma", "0.05", "--seed", "7"],
        vec!["check", &mu3, "--witness"],
        vec!["check", &gen_path, "--witness", "--seed", "3"],
        vec!["check", &mu2],
        vec!["diagnose", &core, "--mode", "all", "--json"],
        vec!["diagnose", &gen_path, "--mode", "all"],
        vec!["diagnose", &gen_path, "--mode", "approx", "--json"],
        vec!["diagnose", &mu2, "--mode", "one", "--seed", "9"],
        vec!["reduce", &gen_path],
        vec!["export", "--format", "asp", &gen_path],
        vec!["export", "--format", "dot", &core],
    ];
    for args in &commands {
        let runs: Vec<Vec<u8>> = (0..3).map(|_| scm(args).0.stdout).collect();
        ensure(runs.iter().all(|r| *r == runs[0]), || format!("`{}` differs", args.join(" ")))?;
        ensure(!runs[0].is_empty(), || format!("`{}` printed nothing", args.join(" ")))?;
    }
    Ok(format!("{} commands byte-identical over 3 runs", commands.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "lactose operon profiles", operon_profiles),
        (2, "five-vertex core example", small_core_example),
        (3, "oracle equivalence", oracle_equivalence),
        (4, "SAT encoding fixture", sat_fixture),
        (6, "consistency scaling", scaling),
        (7, "MIC search at benchmark scale", benchmark_mics),
        (8, "yeast MIC neighborhoods", yeast_neighborhoods_check),
        (9, "CLI determinism", determinism),
        // Runs last so it sees every MIC the others produced.
        (5, "connectivity guard", connectivity),
    ];
    let mut produced = Produced::default();
    let mut results: Vec<(u32, &str, Verdict)> = criteria
        .iter()
        .map(|&(n, name, f)| {
            let verdict = catch_unwind(AssertUnwindSafe(|| f(&mut produced)))
                .unwrap_or_else(|p| {
                    Err(p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panicked".into()))
                });
            (n, name, verdict)
        })
        .collect();
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, verdict) in &results {
        match verdict {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
