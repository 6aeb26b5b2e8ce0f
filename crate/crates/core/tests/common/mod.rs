#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use concretix::{load_installed, load_repo, possible_dependencies, InstalledDatabase, PackageRecipe, Repo, RepoConfig};
use concretix_logic::{is_stable_model, AtomId, GroundAtom, GroundProgram, Value};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn repo(name: &str) -> Repo {
    load_repo(fixture_dir(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn installed(name: &str) -> InstalledDatabase {
    load_installed(fixture_dir(name).join("installed.json")).unwrap()
}

pub const FIXTURE_REPOS: [&str; 3] = ["basic", "reuse", "cmake-openssl"];

/// A layered repository of `n` packages plus two providers of `vmpi`.
/// Package `pkgNN` only depends on packages with larger numbers.
pub fn generated_repo(n: usize, seed: u64) -> Repo {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut recipes = Vec::new();
    for i in 0..n {
        let mut t = format!("name = \"pkg{i:02}\"\nversions = [");
        let nv = rng.random_range(2..=4);
        let versions: Vec<String> = (0..nv)
            .map(|k| format!("\"{}.{}.0\"", nv - k, rng.random_range(0..10)))
            .collect();
        t.push_str(&versions.join(", "));
        t.push_str("]\n");
        let with_mpi = i % 7 == 3;
        if with_mpi {
            t.push_str(
                "\n[[variants]]\nname = \"mpi\"\ndefault = true\n\n[[depends]]\nspec = \"vmpi\"\nwhen = \"+mpi\"\n",
            );
        }
        if rng.random_bool(0.5) {
            t.push_str("\n[[variants]]\nname = \"shared\"\ndefault = true\n");
        }
        if rng.random_bool(0.3) {
            t.push_str("\n[[variants]]\nname = \"build_type\"\ndefault = \"release\"\nvalues = [\"debug\", \"release\", \"minsize\"]\n");
        }
        if i + 1 < n {
            let k = rng.random_range(1..=3).min(n - i - 1);
            let mut deps = BTreeSet::new();
            while deps.len() < k {
                let span = (n - i - 1).min(8);
                deps.insert(i + 1 + rng.random_range(0..span));
            }
            for d in deps {
                t.push_str(&format!("\n[[depends]]\nspec = \"pkg{d:02}\"\n"));
            }
        }
        recipes.push(PackageRecipe::from_toml(&t, &format!("pkg{i:02}.pkg")).unwrap());
    }
    for (p, dep) in [("prov-a", None), ("prov-b", Some(n - 1))] {
        let mut t = format!("name = \"{p}\"\nversions = [\"2.0\", \"1.0\"]\n\n[[provides]]\nvirtual = \"vmpi\"\n");
        if let Some(d) = dep {
            t.push_str(&format!("\n[[depends]]\nspec = \"pkg{d:02}\"\n"));
        }
        recipes.push(PackageRecipe::from_toml(&t, &format!("{p}.pkg")).unwrap());
    }
    let config = RepoConfig::from_toml(
        r#"
        [[compilers]]
        name = "gcc"
        version = "11.2.0"
        targets = ["x86_64", "icelake"]
        [[compilers]]
        name = "clang"
        version = "13.0.0"
        targets = ["x86_64"]
        [[targets]]
        name = "icelake"
        parent = "x86_64"
        [[targets]]
        name = "x86_64"
        weight = 1
        [[os]]
        name = "rhel8"
        [[os]]
        name = "ubuntu20.04"
        weight = 1
        [preferences.providers]
        vmpi = ["prov-a", "prov-b"]
        "#,
        "config.toml",
    )
    .unwrap();
    Repo::new(recipes, config).unwrap()
}

/// Requests that cannot be concretized, with the repo they run against.
pub fn unsat_corpus() -> Vec<(&'static str, String)> {
    let mut out: Vec<(&'static str, String)> = [
        ("basic", "example@1.1.0 ^zlib@1.2.7"),
        ("basic", "example%intel"),
        ("basic", "example ^bzip2@1.0.6"),
        ("basic", "hpctoolkit~mpi ^mpich"),
        ("basic", "example target=aarch64"),
        ("basic", "zlib~shared%intel"),
        ("basic", "example target=neoverse_n1"),
        ("basic", "hdf5 ^zlib@1.2.7"),
        ("basic", "hdf5%intel target=aarch64"),
        ("basic", "zlib os=plan9"),
        ("basic", "zlib%clang"),
        ("basic", "zlib%gcc@8"),
        ("basic", "zlib+nosuch"),
        ("basic", "mpich device=ch5"),
        ("basic", "berkeleygw+openmp ^openblas threads=pthreads"),
        ("basic", "example ^mpich ^openmpi"),
        ("basic", "hdf5~mpi ^mpich"),
        ("basic", "example~bzip ^bzip2"),
        ("basic", "example@1.1.0%intel"),
        ("basic", "example ^zlib~shared%intel"),
        ("basic", "berkeleygw ^netlib-lapack ^openblas"),
        ("basic", "openblas threads=foo"),
        ("basic", "zlib target=sparc"),
        ("basic", "zlib target=aarch64%intel"),
        ("basic", "example ^zlib@1.2.8 hdf5 ^zlib@1.2.11"),
        ("basic", "mpich device=ch3 example ^mpich device=ch4"),
        ("basic", "zlib os=centos8 hdf5 ^zlib os=ubuntu20.04"),
        ("basic", "zlib%intel@19.1.0 hdf5 ^zlib%gcc"),
        ("basic", "example@1.0.0 ^zlib%gcc@9.3.0 hdf5@1.10.2 ^zlib%gcc@10.2.0"),
        ("reuse", "hdf5~mpi ^openmpi"),
        ("reuse", "hdf5 ^mpich ^openmpi"),
        ("reuse", "zlib ^openssl"),
        ("reuse", "cmake@3.21.4 hdf5 ^cmake@3.21.1"),
        ("cmake-openssl", "cmake~openssl ^openssl"),
    ]
    .into_iter()
    .map(|(r, s)| (r, s.to_string()))
    .collect();
    // Unreachable dependencies and impossible settings for every package.
    for name in ["basic", "cmake-openssl"] {
        let r = repo(name);
        for p in r.recipes.keys() {
            let possible = possible_dependencies(&r, &[p.as_str()]).unwrap();
            if let Some(q) = r.recipes.keys().find(|q| !possible.contains(*q)) {
                out.push((name, format!("{p} ^{q}")));
            }
            out.push((name, format!("{p} os=hurd")));
        }
    }
    out
}

/// Satisfiable requests across the fixtures, with the reuse flag.
pub fn sat_corpus() -> Vec<(&'static str, String, bool)> {
    let mut out: Vec<(&'static str, String, bool)> = [
        ("basic", "example@1.0.0 ^zlib@1.2.11"),
        ("basic", "example@1.0.0 ^zlib@1.2.7"),
        ("basic", "hpctoolkit ^mpich"),
        ("basic", "hdf5@1.10.2 ^zlib"),
        ("basic", "berkeleygw"),
        ("basic", "berkeleygw~openmp"),
        ("basic", "berkeleygw ^netlib-lapack"),
        ("basic", "berkeleygw ^openblas threads=pthreads"),
        ("basic", "example ^openmpi"),
        ("basic", "hdf5+mpi example"),
        ("basic", "example%gcc@9.3.0 target=x86_64"),
        ("basic", "hdf5 target=skylake: ^zlib target=x86_64"),
        ("reuse", "libevent ^zlib"),
        ("reuse", "hdf5 ^cmake@3.20.5"),
        ("reuse", "cmake~ownlibs"),
        ("cmake-openssl", "cmake~openssl"),
    ]
    .into_iter()
    .flat_map(|(r, s)| [(r, s.to_string(), false), (r, s.to_string(), true)])
    .collect();
    for name in FIXTURE_REPOS {
        for p in repo(name).recipes.keys() {
            out.push((name, p.clone(), false));
            out.push((name, p.clone(), true));
        }
    }
    out
}

/// Random ground program over `atoms` atoms named `a(i)`.
pub fn random_program(rng: &mut StdRng, atoms: usize, rules: usize, levels: i64) -> GroundProgram {
    let mut gp = GroundProgram::new();
    let ids: Vec<AtomId> = (0..atoms)
        .map(|i| gp.add_atom(GroundAtom::new("a", vec![Value::Int(i as i64)])))
        .collect();
    let pick = |rng: &mut StdRng, max: usize| -> Vec<AtomId> {
        let k = rng.random_range(0..=max);
        (0..k).map(|_| ids[rng.random_range(0..atoms)]).collect()
    };
    for _ in 0..rng.random_range(1..=rules) {
        match rng.random_range(0..7) {
            0..=3 => {
                let h = ids[rng.random_range(0..atoms)];
                let (p, n) = (pick(rng, 3), pick(rng, 2));
                gp.add_rule(h, p, n);
            }
            4 | 5 => {
                let mut e = pick(rng, 3);
                e.push(ids[rng.random_range(0..atoms)]);
                let lo = rng.random_bool(0.4).then(|| rng.random_range(0..3));
                let hi = rng.random_bool(0.4).then(|| rng.random_range(lo.unwrap_or(0)..4));
                let (p, n) = (pick(rng, 2), pick(rng, 1));
                gp.add_choice(lo, hi, e, p, n);
            }
            _ => {
                let mut p = pick(rng, 2);
                p.push(ids[rng.random_range(0..atoms)]);
                let n = pick(rng, 2);
                gp.add_constraint(p, n);
            }
        }
    }
    if levels > 0 {
        for t in 0..rng.random_range(1..8) {
            let a = ids[rng.random_range(0..atoms)];
            gp.add_minimize(
                a,
                rng.random_range(-2..6),
                rng.random_range(1..=levels),
                vec![Value::Int(t)],
            );
        }
    }
    gp
}

pub fn brute_force_models(gp: &GroundProgram) -> BTreeSet<BTreeSet<AtomId>> {
    let n = gp.num_atoms();
    (0u32..1 << n)
        .map(|mask| (0..n as u32).filter(|i| mask >> i & 1 == 1).map(AtomId).collect())
        .filter(|s| is_stable_model(gp, s))
        .collect()
}
