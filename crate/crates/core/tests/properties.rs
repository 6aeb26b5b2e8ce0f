use std::cmp::Ordering;
use std::collections::BTreeMap;

use concretix::{
    merge_constraints, parse_spec, render_spec, version_compare, version_satisfies, AbstractSpec, NodeConstraint,
    VariantValue, Version, VersionConstraint,
};
use proptest::prelude::*;

fn version() -> impl Strategy<Value = Version> {
    prop::collection::vec(0u32..12, 1..4)
        .prop_map(|parts| Version::parse(&parts.iter().map(u32::to_string).collect::<Vec<_>>().join(".")).unwrap())
}

fn constraint() -> impl Strategy<Value = VersionConstraint> {
    prop_oneof![
        Just(String::new()),
        version().prop_map(|v| v.to_string()),
        version().prop_map(|v| format!("{v}:")),
        version().prop_map(|v| format!(":{v}")),
        (version(), version()).prop_map(|(a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            format!("{lo}:{hi}")
        }),
    ]
    .prop_map(|s| {
        if s.is_empty() {
            VersionConstraint::any()
        } else {
            VersionConstraint::parse(&s).unwrap()
        }
    })
}

fn variant_value() -> impl Strategy<Value = VariantValue> {
    prop_oneof![
        any::<bool>().prop_map(VariantValue::Bool),
        "[a-z][a-z0-9]{0,5}".prop_map(|s: String| VariantValue::from_text(&s))
    ]
}

fn node(name: impl Strategy<Value = String>) -> impl Strategy<Value = NodeConstraint> {
    (
        name,
        constraint(),
        prop::option::of((prop::sample::select(vec!["gcc", "clang", "intel"]), constraint())),
        prop::collection::btree_map("v[a-z]{1,4}", variant_value(), 0..3),
        prop::option::of(prop::sample::select(vec!["x86_64", "icelake", "skylake:", "aarch64"])),
        prop::option::of(prop::sample::select(vec!["centos8", "ubuntu20.04"])),
    )
        .prop_map(|(name, versions, compiler, variants, target, os)| NodeConstraint {
            name: Some(name),
            versions,
            compiler: compiler.map(|(n, versions)| concretix::spec::CompilerConstraint {
                name: n.to_string(),
                versions,
            }),
            variants,
            target: target.map(String::from),
            os: os.map(String::from),
            flags: BTreeMap::new(),
        })
}

fn spec() -> impl Strategy<Value = AbstractSpec> {
    (
        node(prop::sample::select(vec!["hdf5", "example", "cmake"]).prop_map(String::from)),
        prop::collection::btree_set(prop::sample::select(vec!["zlib", "bzip2", "mpich", "openssl-x"]), 0..3),
    )
        .prop_flat_map(|(root, names)| {
            let deps: Vec<_> = names.into_iter().map(|n| node(Just(n.to_string()))).collect();
            (Just(root), deps)
        })
        .prop_map(|(root, dependencies)| AbstractSpec { root, dependencies })
}

proptest! {
    #[test]
    fn spec_render_parse_round_trip(s in spec()) {
        let text = render_spec(&s);
        let back = parse_spec(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        prop_assert_eq!(back, s, "{}", text);
    }

    #[test]
    fn merge_is_commutative(a in spec(), b in spec()) {
        let ab = merge_constraints(&a, &b).ok();
        let ba = merge_constraints(&b, &a).ok();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn merge_is_idempotent(a in spec()) {
        let m = merge_constraints(&a, &a).unwrap();
        prop_assert_eq!(merge_constraints(&m, &m).unwrap(), m.clone());
        prop_assert_eq!(merge_constraints(&m, &AbstractSpec { root: NodeConstraint::default(), dependencies: vec![] }).unwrap(), m);
    }

    #[test]
    fn version_order_is_total(a in version(), b in version(), c in version()) {
        prop_assert_eq!(version_compare(&a, &b), version_compare(&b, &a).reverse());
        if version_compare(&a, &b) != Ordering::Greater && version_compare(&b, &c) != Ordering::Greater {
            prop_assert_ne!(version_compare(&a, &c), Ordering::Greater);
        }
        prop_assert_eq!(version_compare(&a, &b) == Ordering::Equal, a == b);
    }

    #[test]
    fn point_constraint_holds_for_its_version(v in version()) {
        prop_assert!(version_satisfies(&v, &VersionConstraint::point(v.clone())));
        prop_assert!(version_satisfies(&v, &VersionConstraint::any()));
    }

    #[test]
    fn intersection_is_conjunction(a in constraint(), b in constraint(), v in version()) {
        let both = version_satisfies(&v, &a) && version_satisfies(&v, &b);
        match a.intersect(&b) {
            Some(c) => prop_assert_eq!(version_satisfies(&v, &c), both),
            None => prop_assert!(!both),
        }
    }

    #[test]
    fn constraint_display_round_trips(c in constraint()) {
        prop_assume!(!c.is_any());
        prop_assert_eq!(VersionConstraint::parse(&c.to_string()).unwrap(), c);
    }
}
