//! The grounder against naive instantiation over the whole Herbrand universe.

use std::collections::{BTreeSet, HashMap};

use concretix_logic::{
    enumerate_models, ground, parse_program, BodyElem, CmpOp, GroundAtom, GroundProgram, Literal, Program, RuleKind,
    Symbol, Term, Value,
};
use proptest::prelude::*;

const CONSTS: [&str; 4] = ["a", "b", "c", "d"];
const VARS: [&str; 3] = ["X", "Y", "Z"];
const PREDS: [(&str, usize); 3] = [("p", 1), ("q", 2), ("r", 1)];

#[derive(Clone, Debug)]
enum Arg {
    Var(usize),
    Const(usize),
}

fn arg() -> impl Strategy<Value = Arg> {
    prop_oneof![3 => (0..VARS.len()).prop_map(Arg::Var), 1 => (0..CONSTS.len()).prop_map(Arg::Const)]
}

fn atom() -> impl Strategy<Value = (usize, Vec<Arg>)> {
    (0..PREDS.len()).prop_flat_map(|p| (Just(p), prop::collection::vec(arg(), PREDS[p].1)))
}

#[derive(Clone, Debug)]
struct RuleGen {
    kind: u8,
    head: (usize, Vec<Arg>),
    pos: Vec<(usize, Vec<Arg>)>,
    neg: Option<(usize, Vec<Arg>)>,
    neq: bool,
}

fn rule_gen() -> impl Strategy<Value = RuleGen> {
    (
        0u8..4,
        atom(),
        prop::collection::vec(atom(), 1..3),
        prop::option::of(atom()),
        any::<bool>(),
    )
        .prop_map(|(kind, head, pos, neg, neq)| RuleGen {
            kind,
            head,
            pos,
            neg,
            neq,
        })
}

fn render_atom(a: &(usize, Vec<Arg>), bound: &BTreeSet<usize>) -> String {
    let (p, args) = a;
    let args: Vec<String> = args
        .iter()
        .map(|x| match x {
            Arg::Var(v) if bound.contains(v) => VARS[*v].to_string(),
            Arg::Var(v) => CONSTS[*v].to_string(),
            Arg::Const(c) => CONSTS[*c].to_string(),
        })
        .collect();
    format!("{}({})", PREDS[*p].0, args.join(","))
}

/// Renders a safe rule: variables outside the positive body become constants.
fn render(r: &RuleGen) -> String {
    let all = BTreeSet::new();
    let mut bound = BTreeSet::new();
    for (_, args) in &r.pos {
        for a in args {
            if let Arg::Var(v) = a {
                bound.insert(*v);
            }
        }
    }
    let pos: Vec<String> = r.pos.iter().map(|a| render_atom(a, &bound)).collect();
    let mut body = pos.join(", ");
    if let Some(n) = &r.neg {
        body.push_str(&format!(", not {}", render_atom(n, &bound)));
    }
    if r.neq && bound.len() >= 2 {
        let v: Vec<&usize> = bound.iter().take(2).collect();
        body.push_str(&format!(", {} != {}", VARS[*v[0]], VARS[*v[1]]));
    }
    match r.kind {
        0 => format!("{}.", render_atom(&r.head, &all)),
        1 => format!("{} :- {body}.", render_atom(&r.head, &bound)),
        2 => format!("{{ {} }} :- {body}.", render_atom(&r.head, &bound)),
        _ => format!(":- {body}."),
    }
}

fn subst(t: &Term, env: &HashMap<Symbol, Value>) -> Value {
    match t {
        Term::Value(v) => *v,
        Term::Var(v) => env[v],
        Term::Arith(..) => unreachable!(),
    }
}

fn inst(a: &concretix_logic::Atom, env: &HashMap<Symbol, Value>) -> GroundAtom {
    GroundAtom {
        predicate: a.predicate,
        args: a.args.iter().map(|t| subst(t, env)).collect(),
    }
}

fn naive(p: &Program) -> GroundProgram {
    let mut gp = GroundProgram::new();
    let consts: Vec<Value> = CONSTS.iter().map(|c| Value::sym(c)).collect();
    for rule in &p.rules {
        let mut vars = Vec::new();
        match &rule.kind {
            RuleKind::Fact(a) => a.collect_vars(&mut vars),
            RuleKind::Normal { head, body } => {
                head.collect_vars(&mut vars);
                body.iter().for_each(|b| b.collect_vars(&mut vars));
            }
            RuleKind::Choice { head, body } => {
                head.elements.iter().for_each(|e| e.atom.collect_vars(&mut vars));
                body.iter().for_each(|b| b.collect_vars(&mut vars));
            }
            RuleKind::Integrity { body } => body.iter().for_each(|b| b.collect_vars(&mut vars)),
            RuleKind::Minimize(_) => unreachable!(),
        }
        vars.sort();
        vars.dedup();
        let combos = consts.len().pow(vars.len() as u32);
        for mut k in 0..combos {
            let mut env = HashMap::new();
            for v in &vars {
                env.insert(*v, consts[k % consts.len()]);
                k /= consts.len();
            }
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            let mut ok = true;
            let body: &[BodyElem] = match &rule.kind {
                RuleKind::Normal { body, .. } | RuleKind::Choice { body, .. } | RuleKind::Integrity { body } => body,
                _ => &[],
            };
            for b in body {
                match b {
                    BodyElem::Lit(Literal::Pos(a)) => pos.push(gp.add_atom(inst(a, &env))),
                    BodyElem::Lit(Literal::Neg(a)) => neg.push(gp.add_atom(inst(a, &env))),
                    BodyElem::Lit(Literal::Cmp(CmpOp::Ne, l, r)) => ok &= subst(l, &env) != subst(r, &env),
                    _ => unreachable!(),
                }
            }
            if !ok {
                continue;
            }
            match &rule.kind {
                RuleKind::Fact(a) => {
                    let h = gp.add_atom(inst(a, &env));
                    gp.add_fact(h);
                }
                RuleKind::Normal { head, .. } => {
                    let h = gp.add_atom(inst(head, &env));
                    gp.add_rule(h, pos, neg);
                }
                RuleKind::Choice { head, .. } => {
                    let elems = head.elements.iter().map(|e| gp.add_atom(inst(&e.atom, &env))).collect();
                    gp.add_choice(
                        head.lower.map(|l| l as u32),
                        head.upper.map(|u| u as u32),
                        elems,
                        pos,
                        neg,
                    );
                }
                RuleKind::Integrity { .. } => gp.add_constraint(pos, neg),
                RuleKind::Minimize(_) => unreachable!(),
            }
        }
    }
    gp
}

fn model_strings(gp: &GroundProgram) -> BTreeSet<BTreeSet<String>> {
    enumerate_models(gp, 100_000)
        .unwrap()
        .iter()
        .map(|m| m.shown(gp).iter().map(|a| a.to_string()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn grounding_preserves_stable_models(rules in prop::collection::vec(rule_gen(), 1..7)) {
        let text: String = rules.iter().map(render).collect::<Vec<_>>().join("\n");
        let program = parse_program(&text).unwrap();
        let smart = ground(&program).unwrap();
        let full = naive(&program);
        prop_assert!(smart.num_atoms() <= full.num_atoms());
        prop_assert_eq!(model_strings(&smart), model_strings(&full), "program:\n{}", text);
    }
}

#[test]
fn transitive_closure_matches_naive() {
    let text = "
        depends_on(a, b). depends_on(b, c). depends_on(c, d).
        path(A, B) :- depends_on(A, B).
        path(A, C) :- path(A, B), depends_on(B, C).
    ";
    let program = parse_program(text).unwrap();
    let smart = model_strings(&ground(&program).unwrap());
    assert_eq!(smart.len(), 1);
    let full = model_strings(&naive(&program));
    assert_eq!(smart, full);
    let paths = smart
        .iter()
        .next()
        .unwrap()
        .iter()
        .filter(|a| a.starts_with("path"))
        .count();
    assert_eq!(paths, 6);
}
