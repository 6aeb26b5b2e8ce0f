//! Acceptance criteria 1-12. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use concretix::{
    check_validity, concretize, encode_problem, is_subset_minimal, minimize_core, parse_specs, AbstractSpec,
    ConcretizeOptions, CoreStrategy, EncodeOptions, ObjectiveLevelPlan, Outcome, Repo, VariantValue,
};
use concretix_logic::{
    compare_objectives, enumerate_models, ground, parse_program, solve, GroundAtom, GroundProgram, ObjectiveVector,
    SolveOptions, SolveResult, Solver,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn opts(reuse: bool) -> ConcretizeOptions {
    ConcretizeOptions {
        reuse,
        ..ConcretizeOptions::default()
    }
}

fn solved(
    repo: &Repo,
    specs: &str,
    reuse: bool,
    db: Option<&concretix::InstalledDatabase>,
) -> Result<concretix::ConcreteDAG, String> {
    let roots = parse_specs(specs).map_err(|e| e.to_string())?;
    let c = concretize(repo, &roots, db, &opts(reuse)).map_err(|e| format!("{specs}: {e}"))?;
    match c.outcome {
        Outcome::Solved { dag, .. } => Ok(dag),
        Outcome::Unsatisfiable(d) => Err(format!("{specs}: unexpectedly unsatisfiable: {:?}", d.messages)),
    }
}

fn c1_stable_model_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let n = 200;
    for i in 0..n {
        let atoms = rng.random_range(2..=15);
        let gp = random_program(&mut rng, atoms, 25, 0);
        let found: BTreeSet<_> = enumerate_models(&gp, 1 << 15)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|m| m.true_atoms)
            .collect();
        let want = brute_force_models(&gp);
        ensure!(
            found == want,
            "program {i}: {} models enumerated, {} stable",
            found.len(),
            want.len()
        );
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(60), "took {t:?}");
    Ok(format!("{n} programs in {:.1}s", t.as_secs_f64()))
}

fn c2_grounding_figure() -> Result<String, String> {
    let src = "
        depends_on(a, b). depends_on(a, c).
        depends_on(b, d). depends_on(c, d).
        node(D) :- node(P), depends_on(P, D).
        1 { node(a); node(b) }.
    ";
    let gp = ground(&parse_program(src).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let models = enumerate_models(&gp, 100).map_err(|e| e.to_string())?;
    let got: BTreeSet<BTreeSet<String>> = models
        .iter()
        .map(|m| {
            m.atoms(&gp)
                .filter(|a| a.predicate.as_str() == "node")
                .map(|a| a.to_string())
                .collect()
        })
        .collect();
    let want: BTreeSet<BTreeSet<String>> = [
        vec!["node(b)", "node(d)"],
        vec!["node(a)", "node(b)", "node(c)", "node(d)"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    ensure!(models.len() == 2 && got == want, "models: {got:?}");
    Ok("2 stable models".into())
}

fn c3_lexicographic_optimality() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(3);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..150 {
        let atoms = rng.random_range(2..=12);
        let levels = rng.random_range(2..=4);
        let gp = random_program(&mut rng, atoms, 20, levels);
        let all = brute_force_models(&gp);
        match solve(&gp, &[], &SolveOptions::default()).map_err(|e| e.to_string())? {
            SolveResult::Satisfiable(m) => {
                let best = all
                    .iter()
                    .map(|s| ObjectiveVector::evaluate(&gp, |a| s.contains(&a)))
                    .min_by(compare_objectives)
                    .ok_or(format!("program {i}: solver found a model, brute force none"))?;
                ensure!(
                    compare_objectives(&m.objective, &best).is_eq(),
                    "program {i}: solver {} vs best {}",
                    m.objective,
                    best
                );
                sat += 1;
            }
            SolveResult::Unsatisfiable(_) => {
                ensure!(
                    all.is_empty(),
                    "program {i}: solver says unsat, {} models exist",
                    all.len()
                );
                unsat += 1;
            }
        }
    }
    ensure!(sat >= 100, "only {sat} satisfiable programs");
    Ok(format!("{sat} optimized, {unsat} unsatisfiable"))
}

fn c4_hpctoolkit() -> Result<String, String> {
    let repo = repo("basic");
    let roots = parse_specs("hpctoolkit ^mpich").unwrap();
    ensure!(roots[0].root.variants.is_empty(), "input names a variant");
    let dag = solved(&repo, "hpctoolkit ^mpich", false, None)?;
    let h = dag.node("hpctoolkit").ok_or("no hpctoolkit node")?;
    ensure!(
        h.variants["mpi"] == VariantValue::Bool(true),
        "mpi = {}",
        h.variants["mpi"]
    );
    ensure!(dag.has_edge("hpctoolkit", "mpich"), "no edge hpctoolkit -> mpich");
    Ok("mpi=true, hpctoolkit -> mpich".into())
}

fn c5_berkeleygw() -> Result<String, String> {
    let repo = repo("basic");
    let dag = solved(&repo, "berkeleygw", false, None)?;
    let b = dag.node("berkeleygw").ok_or("no berkeleygw")?;
    ensure!(b.variants["openmp"] == VariantValue::Bool(true), "openmp off");
    ensure!(
        dag.has_edge("berkeleygw", "openblas"),
        "openblas not the lapack provider"
    );
    let o = dag.node("openblas").unwrap();
    ensure!(
        o.variants["threads"] == VariantValue::from_text("openmp"),
        "threads = {}",
        o.variants["threads"]
    );
    // The constraint is conditional on both the variant and the provider.
    let dag = solved(&repo, "berkeleygw~openmp", false, None)?;
    ensure!(
        dag.node("openblas").unwrap().variants["threads"] == VariantValue::from_text("none"),
        "forced without openmp"
    );
    let dag = solved(&repo, "berkeleygw ^netlib-lapack", false, None)?;
    ensure!(dag.node("openblas").is_none(), "openblas present with netlib-lapack");
    Ok("openblas threads=openmp".into())
}

fn c6_reuse_preference() -> Result<String, String> {
    let repo = repo("reuse");
    let db = installed("reuse");
    let on = solved(&repo, "cmake", true, Some(&db))?;
    let off = solved(&repo, "cmake", false, Some(&db))?;
    let (a, b) = (on.node("cmake").unwrap(), off.node("cmake").unwrap());
    ensure!(
        a.version.as_str() == "3.21.1" && !a.build,
        "reuse: cmake@{} build={}",
        a.version,
        a.build
    );
    ensure!(
        b.version.as_str() == "3.21.4" && b.build,
        "no reuse: cmake@{} build={}",
        b.version,
        b.build
    );
    Ok("reuse 3.21.1 installed, fresh 3.21.4 built".into())
}

fn c7_reuse_counts() -> Result<String, String> {
    let repo = repo("reuse");
    let db = installed("reuse");
    let on = solved(&repo, "hdf5", true, Some(&db))?;
    let off = solved(&repo, "hdf5", false, Some(&db))?;
    ensure!(
        on.reused() == 16 && on.built() == 4,
        "reuse: {} reused, {} built",
        on.reused(),
        on.built()
    );
    ensure!(
        off.built() == 20 && off.reused() == 0,
        "no reuse: {} built",
        off.built()
    );
    Ok("16 reused + 4 built; 20 built without reuse".into())
}

fn c8_defaults_not_degraded() -> Result<String, String> {
    let repo = repo("cmake-openssl");
    let db = installed("cmake-openssl");
    let roots = parse_specs("cmake").unwrap();
    let run = |plan: ObjectiveLevelPlan| {
        let o = ConcretizeOptions {
            reuse: true,
            plan,
            ..ConcretizeOptions::default()
        };
        concretize(&repo, &roots, Some(&db), &o).map(|c| c.dag().cloned())
    };
    let bucketed = run(ObjectiveLevelPlan::table2())
        .map_err(|e| e.to_string())?
        .ok_or("unsat")?;
    let cmake = bucketed.node("cmake").unwrap();
    ensure!(
        cmake.variants["openssl"] == VariantValue::Bool(true),
        "bucketed plan disabled networking"
    );
    ensure!(bucketed.node("openssl").is_some_and(|n| n.build), "openssl not built");
    let flat = run(ObjectiveLevelPlan::build_count_first())
        .map_err(|e| e.to_string())?
        .ok_or("unsat")?;
    ensure!(
        flat.node("cmake").unwrap().variants["openssl"] == VariantValue::Bool(false),
        "build-count-first plan kept networking; the fixture does not exercise the failure mode"
    );
    Ok(format!(
        "+openssl with {} builds; build-count-first gives ~openssl",
        bucketed.built()
    ))
}

fn c9_minimal_core_toy() -> Result<String, String> {
    let src = "
        { foo(x); foo(y); bar(1); bar(2); bar(3) }.
        :- foo(A), foo(B), A != B.
    ";
    let gp = ground(&parse_program(src).unwrap()).unwrap();
    let assumptions: Vec<GroundAtom> = ["bar(1)", "foo(x)", "bar(2)", "foo(y)", "bar(3)"]
        .iter()
        .map(|s| GroundAtom::parse(s).unwrap())
        .collect();
    let mut solver = Solver::new(&gp, &SolveOptions::default());
    ensure!(!solver.check(&assumptions).unwrap().is_sat(), "toy program satisfiable");
    let want: BTreeSet<GroundAtom> = [
        GroundAtom::parse("foo(x)").unwrap(),
        GroundAtom::parse("foo(y)").unwrap(),
    ]
    .into();
    for s in [CoreStrategy::Linear, CoreStrategy::Batched] {
        let m = minimize_core(&mut solver, &assumptions, s);
        let got: BTreeSet<GroundAtom> = m.core.iter().cloned().collect();
        ensure!(m.core.len() == 2 && got == want, "{s:?}: {got:?}");
    }
    Ok("{foo(x), foo(y)}".into())
}

/// Encodes and grounds a request for direct solver access.
fn grounded(repo: &Repo, roots: &[AbstractSpec]) -> (concretix::EncodedProblem, GroundProgram) {
    let p = encode_problem(repo, roots, None, &EncodeOptions::default()).unwrap();
    let gp = ground(&parse_program(&p.program_text()).unwrap()).unwrap();
    (p, gp)
}

fn c10_core_minimality() -> Result<String, String> {
    let corpus = unsat_corpus();
    ensure!(corpus.len() >= 50, "only {} unsat fixtures", corpus.len());
    let mut sizes = BTreeSet::new();
    for (name, spec) in &corpus {
        let repo = repo(name);
        let roots = parse_specs(spec).unwrap();
        let (problem, gp) = grounded(&repo, &roots);
        let mut solver = Solver::new(&gp, &SolveOptions::default());
        let core = match solver.solve(&problem.assumptions).map_err(|e| e.to_string())? {
            SolveResult::Unsatisfiable(c) => c.atoms.into_iter().collect::<Vec<_>>(),
            SolveResult::Satisfiable(_) => return Err(format!("{name}: '{spec}' is satisfiable")),
        };
        let lin = minimize_core(&mut solver, &core, CoreStrategy::Linear);
        let bat = minimize_core(
            &mut Solver::new(&gp, &SolveOptions::default()),
            &core,
            CoreStrategy::Batched,
        );
        let mut fresh = Solver::new(&gp, &SolveOptions::default());
        for (label, m) in [("linear", &lin), ("batched", &bat)] {
            ensure!(m.minimal, "{name}: '{spec}': {label} minimization incomplete");
            ensure!(
                is_subset_minimal(&mut fresh, &m.core).map_err(|e| e.to_string())?,
                "{name}: '{spec}': {label} core {:?} is not subset-minimal",
                m.core
            );
        }
        ensure!(
            lin.core.len() == bat.core.len(),
            "{name}: '{spec}': linear {} vs batched {}",
            lin.core.len(),
            bat.core.len()
        );
        ensure!(
            lin.stats.extra_solves <= problem.assumptions.len(),
            "{name}: '{spec}': {} extra solves for {} assumptions",
            lin.stats.extra_solves,
            problem.assumptions.len()
        );
        sizes.insert(lin.core.len());
    }
    Ok(format!("{} fixtures, core sizes {:?}", corpus.len(), sizes))
}

fn c11_validity_suite() -> Result<String, String> {
    let mut count = 0;
    for (name, spec, reuse) in sat_corpus() {
        let repo = repo(name);
        let db = std::path::Path::new(&fixture_dir(name).join("installed.json"))
            .exists()
            .then(|| installed(name));
        let roots = parse_specs(&spec).unwrap();
        let dag = solved(&repo, &spec, reuse, db.as_ref())?;
        let v = check_validity(&dag, &repo, &roots, db.as_ref());
        ensure!(v.is_empty(), "{name}: '{spec}': {v:?}");
        ensure!(dag.topological_order().is_some(), "{name}: '{spec}': cycle");
        count += 1;
    }
    let gen = generated_repo(50, 7);
    for p in gen.recipes.keys() {
        let roots = parse_specs(p).unwrap();
        let dag = solved(&gen, p, false, None)?;
        let v = check_validity(&dag, &gen, &roots, None);
        ensure!(v.is_empty(), "generated '{p}': {v:?}");
        count += 1;
    }
    Ok(format!("{count} solutions valid"))
}

fn c12_desk_scale() -> Result<String, String> {
    let repo = generated_repo(50, 7);
    ensure!(
        repo.recipes.len() == 52 && repo.virtuals["vmpi"].len() == 2,
        "unexpected generated repo shape"
    );
    let mut worst = Duration::ZERO;
    let mut largest = 0;
    for p in repo.recipes.keys() {
        let roots = parse_specs(p).unwrap();
        let start = Instant::now();
        let c = concretize(&repo, &roots, None, &ConcretizeOptions::default()).map_err(|e| e.to_string())?;
        let wall = start.elapsed();
        ensure!(c.dag().is_some(), "{p} unsatisfiable");
        ensure!(wall < Duration::from_secs(5), "{p} took {wall:?}");
        let report = c.timings.to_string();
        for phase in ["setup", "load", "ground", "solve", "total"] {
            ensure!(report.contains(phase), "timing report lacks {phase}");
        }
        ensure!(c.timings.total() <= wall, "phases exceed wall time");
        worst = worst.max(wall);
        largest = largest.max(c.possible_dependencies);
    }
    Ok(format!(
        "{} roots, slowest {:.0} ms, up to {largest} possible dependencies",
        repo.recipes.len(),
        worst.as_secs_f64() * 1000.0
    ))
}

fn main() {
    let criteria: [(u32, &str, Check); 12] = [
        (1, "stable-model oracle equivalence", c1_stable_model_oracle),
        (2, "grounding figure has two stable models", c2_grounding_figure),
        (3, "lexicographic optimality", c3_lexicographic_optimality),
        (4, "hpctoolkit finds mpi variant", c4_hpctoolkit),
        (5, "berkeleygw forces openblas openmp", c5_berkeleygw),
        (6, "reuse prefers installed cmake", c6_reuse_preference),
        (7, "reuse counts 16 + 4", c7_reuse_counts),
        (8, "defaults not degraded by build count", c8_defaults_not_degraded),
        (9, "minimal core toy", c9_minimal_core_toy),
        (10, "core minimality oracle", c10_core_minimality),
        (11, "validity suite", c11_validity_suite),
        (12, "desk-scale performance proxy", c12_desk_scale),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
