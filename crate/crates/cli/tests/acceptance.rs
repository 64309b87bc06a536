//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use qimp::diagnostics::{codes, SourceMap};
use qimp::driver;
use qimp::lowering::{emit_ir_text, verify_ir, IrFunction, IrModule, Region};
use qimp::ownership::check_program;
use qimp::sim::{run_imperative, Gate, QuantumState, RuntimeErrorKind, Transcript};
use qimp::testgen::{accepted_program, rejected_program, Fault, GeneratedProgram, MAX_STMTS};
use qimp::types::TypedProgram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GENERATED: u64 = 500;
const SEEDS: usize = 100;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn paper(name: &str) -> PathBuf {
    root().join("corpus/paper").join(name)
}

fn sources(name: &str, text: &str) -> SourceMap {
    let mut s = SourceMap::new();
    s.add(name, text);
    s
}

fn corpus_typed(name: &str) -> TypedProgram {
    let s = driver::load(&[paper(name)]).expect("corpus file");
    driver::typecheck(&s).expect("corpus types").1
}

fn generated_typed(g: &GeneratedProgram) -> Result<TypedProgram, String> {
    driver::typecheck(&sources("gen.qimp", &g.source)).map(|(_, t)| t).map_err(|e| format!("{e}\n{}", g.source))
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{what} took {took:?}, limit {limit:?}"));
    }
    Ok(())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn listing_fidelity() -> Outcome {
    let start = Instant::now();
    let accepted = ["bell.qimp", "bell_main.qimp", "foo.qimp", "bar.qimp", "struct_example.qimp", "foo_imperative.qimp"];
    for name in accepted {
        let d = check_program(&corpus_typed(name));
        ensure(d.is_empty(), || format!("{name}: unexpected {d:?}"))?;
    }
    let rejected = [
        ("bell_already_borrowed.qimp", codes::ALREADY_BORROWED, "q1 already borrowed", 4),
        ("main_already_consumed.qimp", codes::ALREADY_CONSUMED, "q1 already consumed", 11),
        ("foo_not_owned.qimp", codes::NOT_OWNED, "Cannot measure qubit since it is not owned", 5),
        ("baz.qimp", codes::NOT_CONSUMED, "Allocated qubit is not consumed", 2),
    ];
    for (name, code, message, line) in rejected {
        let d = check_program(&corpus_typed(name));
        let got: Vec<_> = d.iter().map(|d| (d.code, d.message.as_str(), d.span.start_line)).collect();
        ensure(got == [(code, message, line)], || format!("{name}: {got:?}"))?;
    }
    // The pure listing's counterpart is the lowered form of foo_imperative.
    let golden = std::fs::read_to_string(root().join("corpus/golden/foo_imperative.ir")).map_err(|e| e.to_string())?;
    let ir = emit_ir_text(&driver::lower(&corpus_typed("foo_imperative.qimp")).map_err(|e| e.to_string())?);
    ensure(ir == golden, || "foo_imperative lowering differs from golden".into())?;
    within(start, Duration::from_secs(1), "listing checks")?;
    Ok(format!("{} accepted, {} rejected listings, {:?}", accepted.len(), rejected.len(), start.elapsed()))
}

fn translation_fidelity() -> Outcome {
    let module = driver::lower(&corpus_typed("foo_imperative.qimp")).map_err(|e| e.to_string())?;
    let f = module.function("foo_imperative").ok_or("missing function")?;
    ensure(f.signature.to_string() == "(qubit) -> (qubit)", || format!("signature {}", f.signature))?;
    let ops: Vec<String> = f.body.nodes.iter().map(|n| n.op.name()).collect();
    ensure(ops == ["input", "h", "z", "output"], || format!("nodes {ops:?}"))?;
    let golden = std::fs::read_to_string(root().join("corpus/golden/foo_imperative.ir")).map_err(|e| e.to_string())?;
    ensure(emit_ir_text(&module) == golden, || "golden mismatch".into())?;
    Ok("signature (qubit) -> (qubit), input -> h -> z -> output, golden match".into())
}

/// Entry harnesses standing in for every accepted listing.
const CORPUS_ENTRIES: [&str; 4] = ["bell_main.qimp", "bar_main.qimp", "foo_harness.qimp", "struct_example_small.qimp"];

struct Generated {
    typed: Vec<TypedProgram>,
    /// Imperative transcripts per program, one per seed.
    runs: Vec<Vec<Transcript>>,
}

fn differential(out: &mut Option<Generated>) -> Outcome {
    let start = Instant::now();
    for name in CORPUS_ENTRIES {
        let typed = corpus_typed(name);
        if let Some(d) = driver::diff(&typed, "main", 0, SEEDS).map_err(|e| format!("{name}: {e}"))? {
            return Err(format!("{name}: seed {} {}", d.seed, d.detail));
        }
    }
    let mut gen = Generated { typed: Vec::new(), runs: Vec::new() };
    let mut max_stmts = 0;
    let mut nested = 0;
    for seed in 0..GENERATED {
        let g = accepted_program(seed);
        max_stmts = max_stmts.max(g.statements);
        nested += usize::from(g.depth >= 2);
        ensure(g.statements <= MAX_STMTS, || format!("seed {seed}: {} statements", g.statements))?;
        let typed = generated_typed(&g)?;
        let module = driver::lower(&typed).map_err(|e| format!("seed {seed}: {e}"))?;
        let mut runs = Vec::with_capacity(SEEDS);
        for s in 0..SEEDS as u64 {
            let a = run_imperative(&typed, "main", s, 1).map_err(|e| e.to_string())?;
            let b = qimp::sim::run_ir(&module, "main", s, 1).map_err(|e| e.to_string())?;
            if let Some(d) = a.first_divergence(&b) {
                return Err(format!("generated seed {seed}, run seed {s}: {d}\n{}", g.source));
            }
            runs.push(a);
        }
        gen.typed.push(typed);
        gen.runs.push(runs);
    }
    within(start, Duration::from_secs(120), "differential runs")?;
    *out = Some(gen);
    Ok(format!(
        "{} corpus + {GENERATED} generated programs x {SEEDS} seeds identical (max {max_stmts} statements, {nested} nested), {:?}",
        CORPUS_ENTRIES.len(),
        start.elapsed()
    ))
}

fn dynamic_kind(fault: Fault) -> Option<RuntimeErrorKind> {
    match fault {
        Fault::AlreadyBorrowed => Some(RuntimeErrorKind::DoubleBorrowAlias),
        Fault::AlreadyConsumed => Some(RuntimeErrorKind::UseAfterFree),
        Fault::NotConsumed => Some(RuntimeErrorKind::LeakAtScopeExit),
        Fault::NotOwned | Fault::ConditionallyConsumed => None,
    }
}

fn soundness(gen: Option<&Generated>) -> Outcome {
    let gen = gen.ok_or("differential criterion did not produce programs")?;
    for (i, (typed, runs)) in gen.typed.iter().zip(&gen.runs).enumerate() {
        ensure(check_program(typed).is_empty(), || format!("generated {i} not accepted"))?;
        for (s, t) in runs.iter().enumerate() {
            if let Some(e) = t.error.as_ref().filter(|e| e.kind.is_ownership()) {
                return Err(format!("accepted program {i} raised {:?} at seed {s}", e.kind));
            }
        }
    }
    let paper_errors = [
        ("bell_already_borrowed.qimp", RuntimeErrorKind::DoubleBorrowAlias),
        ("main_already_consumed.qimp", RuntimeErrorKind::UseAfterFree),
        ("baz_main.qimp", RuntimeErrorKind::LeakAtScopeExit),
    ];
    for (name, kind) in paper_errors {
        let t = run_imperative(&corpus_typed(name), "main", 0, 1).map_err(|e| e.to_string())?;
        ensure(t.error.as_ref().map(|e| e.kind) == Some(kind), || format!("{name}: {:?}", t.error))?;
    }
    let mut caught = 0;
    for seed in 0..GENERATED {
        let g = rejected_program(seed);
        let typed = generated_typed(&g)?;
        let found: Vec<&str> = check_program(&typed).iter().map(|d| d.code).collect();
        let fault = g.fault.expect("rejected programs carry a fault");
        ensure(found.contains(&fault.code()), || format!("rejected seed {seed}: want {}, got {found:?}", fault.code()))?;
        let Some(kind) = dynamic_kind(fault) else { continue };
        let hit = (0..SEEDS as u64).any(|s| {
            run_imperative(&typed, "main", s, 1).is_ok_and(|t| t.error.is_some_and(|e| e.kind == kind))
        });
        ensure(hit, || format!("rejected seed {seed} ({}) never raised {kind:?}\n{}", fault.code(), g.source))?;
        caught += 1;
    }
    Ok(format!(
        "no ownership errors on {GENERATED} accepted programs; {caught} QB001/2/4 rejections raised their dynamic error; {GENERATED} rejected programs flagged"
    ))
}

fn quantum_wires(r: &Region, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
    for (i, w) in r.wires.iter().enumerate() {
        if w.ty.is_quantum() {
            out.push((path.clone(), i));
        }
    }
    for (ni, n) in r.nodes.iter().enumerate() {
        for (ri, sub) in n.regions.iter().enumerate() {
            path.extend([ni, ri]);
            quantum_wires(sub, path, out);
            path.truncate(path.len() - 2);
        }
    }
}

fn region_at<'a>(r: &'a mut Region, path: &[usize]) -> &'a mut Region {
    match path {
        [] => r,
        [n, i, rest @ ..] => region_at(&mut r.nodes[*n].regions[*i], rest),
        _ => unreachable!("paths come in pairs"),
    }
}

fn mutate(f: &IrFunction, rng: &mut ChaCha8Rng) -> Option<(IrFunction, &'static str)> {
    let mut wires = Vec::new();
    quantum_wires(&f.body, &mut Vec::new(), &mut wires);
    if wires.is_empty() {
        return None;
    }
    let (path, i) = wires[rng.gen_range(0..wires.len())].clone();
    let mut m = f.clone();
    let r = region_at(&mut m.body, &path);
    let what = if rng.gen_bool(0.5) {
        let w = r.wires[i].clone();
        r.wires.push(w);
        "duplicate"
    } else {
        r.wires.remove(i);
        "delete"
    };
    Some((m, what))
}

fn linearity(gen: Option<&Generated>) -> Outcome {
    let gen = gen.ok_or("differential criterion did not produce programs")?;
    let mut modules: Vec<IrModule> = Vec::new();
    for name in CORPUS_ENTRIES {
        modules.push(driver::lower(&corpus_typed(name)).map_err(|e| format!("{name}: {e}"))?);
    }
    for (i, t) in gen.typed.iter().enumerate() {
        modules.push(driver::lower(t).map_err(|e| format!("generated {i}: {e}"))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mutated, mut flagged, mut kinds) = (0, 0, [0, 0]);
    for m in &modules {
        if mutated == 100 {
            break;
        }
        let main = m.function("main").ok_or("missing main")?;
        let Some((bad, what)) = mutate(main, &mut rng) else { continue };
        mutated += 1;
        kinds[usize::from(what == "delete")] += 1;
        if !verify_ir(&bad).is_empty() {
            flagged += 1;
        }
    }
    ensure(mutated == 100, || format!("only {mutated} graphs had quantum wires"))?;
    ensure(flagged == mutated, || format!("{flagged}/{mutated} mutations flagged"))?;
    Ok(format!(
        "{} lowered modules verify clean; {flagged}/{mutated} mutations flagged ({} duplicated, {} deleted)",
        modules.len(),
        kinds[0],
        kinds[1]
    ))
}

fn physics() -> Outcome {
    let start = Instant::now();
    let bell = driver::run(&corpus_typed("bell_main.qimp"), driver::Mode::Imperative, "main", 0, 1000)
        .map_err(|e| e.to_string())?;
    ensure(bell.error.is_none() && bell.shots.len() == 1000, || format!("bell run: {:?}", bell.error))?;
    for (i, shot) in bell.shots.iter().enumerate() {
        let m = &shot.measurements;
        ensure(m.len() == 2 && m[0].bit == m[1].bit, || format!("bell seed {i}: {m:?}"))?;
    }

    let zero = driver::typecheck(&sources("z.qimp", "def main() -> bool:\n   return measure(qubit())\n"))
        .map_err(|e| e.to_string())?
        .1;
    let t = run_imperative(&zero, "main", 0, 1000).map_err(|e| e.to_string())?;
    ensure(t.shots.iter().all(|s| !s.measurements[0].bit), || "|0> measured 1".into())?;

    let plus = driver::typecheck(&sources("p.qimp", "def main() -> bool:\n   q = qubit()\n   h(q)\n   return measure(q)\n"))
        .map_err(|e| e.to_string())?
        .1;
    let t = run_imperative(&plus, "main", 0, 10_000).map_err(|e| e.to_string())?;
    let ones = t.shots.iter().filter(|s| s.measurements[0].bit).count();
    let freq = ones as f64 / 10_000.0;
    ensure((0.48..=0.52).contains(&freq), || format!("H frequency {freq}"))?;

    let mut worst: f64 = 0.0;
    for circuit in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(circuit);
        let mut s = QuantumState::new(circuit);
        let qs: Vec<_> = (0..10).map(|_| s.alloc().expect("capacity")).collect();
        for _ in 0..1000 {
            let a = qs[rng.gen_range(0..10)];
            let mut b = qs[rng.gen_range(0..10)];
            while b == a {
                b = qs[rng.gen_range(0..10)];
            }
            let gate = match rng.gen_range(0..9) {
                0 => Gate::H,
                1 => Gate::X,
                2 => Gate::Y,
                3 => Gate::Z,
                4 => Gate::S,
                5 => Gate::T,
                6 => Gate::Rz(rng.gen_range(-3.2..3.2)),
                7 => Gate::Cx,
                _ => Gate::Cz,
            };
            let targets = if gate.arity() == 2 { vec![a, b] } else { vec![a] };
            s.apply_gate(gate, &targets).map_err(|e| format!("{e:?}"))?;
        }
        worst = worst.max((s.norm() - 1.0).abs());
    }
    ensure(worst < 1e-9, || format!("norm drift {worst:e}"))?;
    within(start, Duration::from_secs(30), "physics checks")?;
    Ok(format!("bell 1000/1000 equal, |0> 1000/1000 zero, H freq {freq:.4}, norm drift {worst:.1e}"))
}

fn qimp(args: &[&str]) -> (i32, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_qimp"))
        .args(args)
        .current_dir(root())
        .env("QIMP_COLOR", "never")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout, out.stderr)
}

fn determinism() -> Outcome {
    let p = |n: &str| format!("corpus/paper/{n}");
    let commands: Vec<Vec<String>> = vec![
        vec!["check".into(), p("bell.qimp")],
        vec!["check".into(), p("baz.qimp")],
        vec!["check".into(), p("struct_example.qimp"), "--emit".into(), "json".into()],
        vec!["check".into(), p("bell_main.qimp"), "--emit".into(), "ast".into()],
        vec!["check".into(), p("bell_main.qimp"), "--emit".into(), "typed-ast".into()],
        vec!["lower".into(), p("struct_example_small.qimp")],
        vec!["lower".into(), p("bell_main.qimp"), "--emit".into(), "ir-json".into()],
        vec!["run".into(), p("bell_main.qimp"), "--seed".into(), "7".into(), "--shots".into(), "50".into()],
        vec!["run".into(), p("bar_main.qimp"), "--mode".into(), "ir".into(), "--shots".into(), "20".into()],
        vec!["run".into(), p("baz_main.qimp")],
        vec!["diff".into(), p("foo_harness.qimp"), "--seeds".into(), "20".into(), "--emit".into(), "json".into()],
    ];
    for c in &commands {
        let args: Vec<&str> = c.iter().map(String::as_str).collect();
        let first = qimp(&args);
        let second = qimp(&args);
        ensure(first == second, || format!("`qimp {}` differs between runs", args.join(" ")))?;
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let mut generated = None;
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "listing fidelity", listing_fidelity()),
        (2, "translation fidelity", translation_fidelity()),
        (3, "differential equivalence", differential(&mut generated)),
        (4, "checker soundness oracle", soundness(generated.as_ref())),
        (5, "IR linearity", linearity(generated.as_ref())),
        (6, "physics sanity", physics()),
        (7, "determinism", determinism()),
    ];
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
