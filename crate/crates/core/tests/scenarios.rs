mod common;

use common::*;
use concretix::{
    concretize, encode_problem, parse_json, parse_specs, render_json, render_tree, ConcreteDAG, ConcretizeOptions,
    CoreStrategy, EncodeOptions, InstalledDatabase, Repo, VariantValue,
};

fn solve(repo: &Repo, specs: &str, reuse: bool, db: Option<&InstalledDatabase>) -> ConcreteDAG {
    let roots = parse_specs(specs).unwrap();
    let options = ConcretizeOptions {
        reuse,
        ..ConcretizeOptions::default()
    };
    concretize(repo, &roots, db, &options)
        .unwrap()
        .dag()
        .unwrap_or_else(|| panic!("{specs} is unsatisfiable"))
        .clone()
}

#[test]
fn fact_dump_is_deterministic() {
    let repo = repo("basic");
    let roots = parse_specs("hdf5+mpi ^zlib@1.2.8").unwrap();
    let a = encode_problem(&repo, &roots, None, &EncodeOptions::default())
        .unwrap()
        .program_text();
    let b = encode_problem(&repo, &roots, None, &EncodeOptions::default())
        .unwrap()
        .program_text();
    assert_eq!(a, b);
}

#[test]
fn fact_dump_golden_lines() {
    let repo = repo("basic");
    let text = encode_problem(&repo, &parse_specs("zlib").unwrap(), None, &EncodeOptions::default())
        .unwrap()
        .program_text();
    let facts: Vec<&str> = text
        .lines()
        .filter(|l| l.contains("\"zlib\"") && !l.starts_with('%'))
        .collect();
    for want in [
        r#"root("zlib")."#,
        r#"version_declared("zlib","1.2.11",0)."#,
        r#"version_declared("zlib","1.2.7",2)."#,
        r#"variant_default_value("zlib","shared","true")."#,
        r#"variant_possible_value("zlib","shared","false")."#,
        r#"condition_requirement(1,"node_compiler","zlib","intel")."#,
        r#"conflict(1,"zlib")."#,
    ] {
        assert!(facts.contains(&want), "missing {want}");
    }
}

#[test]
fn conditional_dependency_follows_variant() {
    let repo = repo("basic");
    let off = solve(&repo, "hdf5", false, None);
    assert_eq!(off.node("hdf5").unwrap().variants["mpi"], VariantValue::Bool(false));
    assert!(off.node("mpich").is_none() && off.node("openmpi").is_none());
    let on = solve(&repo, "hdf5+mpi", false, None);
    assert!(on.has_edge("hdf5", "mpich"), "preferred provider not chosen");
    let other = solve(&repo, "hdf5+mpi ^openmpi", false, None);
    assert!(other.has_edge("hdf5", "openmpi") && other.node("mpich").is_none());
}

#[test]
fn newest_versions_and_preferred_compiler_by_default() {
    let repo = repo("basic");
    let dag = solve(&repo, "example", false, None);
    for n in &dag.nodes {
        let recipe = repo.recipe(&n.name).unwrap();
        assert_eq!(recipe.version_index(&n.version), Some(0), "{} not newest", n.name);
        assert_eq!(n.compiler.name, "gcc");
        assert_eq!(n.compiler.version.as_str(), "10.2.0");
        assert_eq!(n.os, "centos8");
        assert_eq!(n.target, "icelake");
    }
}

#[test]
fn compiler_choice_limits_target() {
    let dag = solve(&repo("basic"), "zlib%gcc@9.3.0", false, None);
    let z = dag.node("zlib").unwrap();
    assert_eq!(z.compiler.version.as_str(), "9.3.0");
    assert_eq!(z.target, "skylake");
}

#[test]
fn reuse_never_builds_more() {
    let repo = repo("reuse");
    let db = installed("reuse");
    for p in repo.recipes.keys() {
        let on = solve(&repo, p, true, Some(&db));
        let off = solve(&repo, p, false, Some(&db));
        assert!(
            on.built() <= off.built(),
            "{p}: {} built with reuse, {} without",
            on.built(),
            off.built()
        );
        assert_eq!(off.reused(), 0);
    }
}

#[test]
fn explanation_names_the_conflict() {
    let repo = repo("basic");
    let roots = parse_specs("example%intel").unwrap();
    let mut messages = Vec::new();
    for core_strategy in [CoreStrategy::Linear, CoreStrategy::Batched] {
        let options = ConcretizeOptions {
            core_strategy,
            ..ConcretizeOptions::default()
        };
        let c = concretize(&repo, &roots, None, &options).unwrap();
        let d = c.diagnostic().expect("unsatisfiable");
        assert!(d.minimal);
        assert!(
            d.messages
                .iter()
                .any(|m| m.contains("Known failure when building with intel")),
            "{:?}",
            d.messages
        );
        messages.push(d.messages.clone());
    }
    assert_eq!(messages[0], messages[1]);
}

#[test]
fn version_conflict_explanation() {
    let repo = repo("basic");
    let c = concretize(
        &repo,
        &parse_specs("example@1.1.0 ^zlib@1.2.7").unwrap(),
        None,
        &ConcretizeOptions::default(),
    )
    .unwrap();
    let d = c.diagnostic().unwrap();
    assert!(!d.messages.is_empty());
    assert!(d.to_string().starts_with("error: "));
    assert!(d.stats.final_size <= d.stats.initial_size);
}

#[test]
fn json_round_trip() {
    for (name, spec, reuse) in sat_corpus().into_iter().step_by(5) {
        let db = fixture_dir(name)
            .join("installed.json")
            .exists()
            .then(|| installed(name));
        let dag = solve(&repo(name), &spec, reuse, db.as_ref());
        assert_eq!(parse_json(&render_json(&dag)).unwrap(), dag, "{name}: {spec}");
    }
}

#[test]
fn tree_lists_every_node() {
    let dag = solve(&repo("basic"), "hdf5+mpi example", false, None);
    let tree = render_tree(&dag);
    for n in &dag.nodes {
        assert!(
            tree.contains(&format!("{}@{}", n.name, n.version)),
            "{} missing from\n{tree}",
            n.name
        );
    }
}

#[test]
fn same_seed_same_answer() {
    let repo = generated_repo(30, 11);
    let roots = parse_specs("pkg00").unwrap();
    let run = || {
        concretize(&repo, &roots, None, &ConcretizeOptions::default())
            .unwrap()
            .dag()
            .cloned()
    };
    assert_eq!(run(), run());
}
