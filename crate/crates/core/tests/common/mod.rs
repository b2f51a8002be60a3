#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use patternforge::composition::Combination;
use patternforge::expr::{BinOp, Expr, Goal, SetItem};
use patternforge::{load_catalog, load_network, load_project, Catalog, Limits, Network, Project, RelOp};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub struct Fixture {
    pub catalog: Catalog,
    pub network: Network,
    pub project: Project,
}

pub fn fixture(dir: &str) -> Fixture {
    let catalog = load_catalog(&read_fixture(&format!("{dir}/catalog.json"))).unwrap();
    let network = load_network(&read_fixture(&format!("{dir}/network.json")), &catalog).unwrap();
    let project = load_project(&read_fixture(&format!("{dir}/project.json")), &catalog).unwrap();
    Fixture {
        catalog,
        network,
        project,
    }
}

// ---------------------------------------------------------------------------
// Syntax strategies
// ---------------------------------------------------------------------------

const NAMES: &[&str] = &["effort", "rd", "left.tool", "x_1", "reliability", "inp", "trueish", "seq", "while"];
const FUNCS: &[&str] = &["f", "g", "defect_rate"];
const TEXTS: &[&str] = &["verified", "draft", "a b", "x.y", "", "42"];

fn arb_number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..2000).prop_map(f64::from),
        (0u32..100_000).prop_map(|n| f64::from(n) / 1000.0),
        (0.0f64..1e9),
        Just(0.1),
        Just(1e-7),
        Just(123456789.125),
    ]
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_number().prop_map(Expr::Number),
        prop::sample::select(TEXTS).prop_map(Expr::literal),
        any::<bool>().prop_map(Expr::Bool),
        prop::sample::select(NAMES).prop_map(Expr::attr),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::Binary {
                    op,
                    left: Box::new(l),
                    right: Box::new(r),
                }),
            (prop::sample::select(FUNCS), prop::collection::vec(inner, 0..3)).prop_map(|(f, args)| Expr::Call {
                function: f.to_string(),
                args,
            }),
        ]
    })
}

fn arb_relop() -> impl Strategy<Value = RelOp> {
    prop::sample::select(vec![RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge, RelOp::Eq, RelOp::Ne])
}

fn arb_set() -> impl Strategy<Value = Vec<SetItem>> {
    let item = prop_oneof![
        arb_number().prop_map(SetItem::Number),
        any::<bool>().prop_map(SetItem::Bool),
        prop::sample::select(TEXTS).prop_map(|t| SetItem::Text(t.to_string())),
    ];
    prop::collection::vec(item, 1..4).prop_map(|items| {
        let mut out: Vec<SetItem> = Vec::new();
        for i in items {
            if !out.contains(&i) {
                out.push(i);
            }
        }
        out
    })
}

pub fn arb_goal() -> impl Strategy<Value = Goal> {
    let leaf = prop_oneof![
        any::<bool>().prop_map(Goal::Const),
        // `!=` is sugar for a negated equality, so it never appears in trees
        (arb_expr(), arb_relop().prop_filter("sugar", |op| *op != RelOp::Ne), arb_expr())
            .prop_map(|(lhs, op, rhs)| Goal::Compare { lhs, op, rhs }),
        (arb_expr(), arb_set()).prop_map(|(lhs, set)| Goal::Member { lhs, set }),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|g| Goal::Not(Box::new(g))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Goal::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Goal::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Goal::Implies(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Goal::Iff(Box::new(a), Box::new(b))),
        ]
    })
}

/// Combinations over arbitrary ids (syntax only).
pub fn arb_combination_syntax() -> impl Strategy<Value = Combination> {
    let ids = &["a", "elicit_functional", "seq", "par", "if", "while", "p2"];
    combination_over(ids, arb_goal().boxed())
}

/// Combinations drawn from `ids` with guards from `guards`.
pub fn combination_over(ids: &'static [&'static str], guards: BoxedStrategy<Goal>) -> BoxedStrategy<Combination> {
    let leaf = prop::sample::select(ids).prop_map(Combination::atom);
    leaf.prop_recursive(4, 20, 3, move |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Combination::Seq),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Combination::Par),
            (guards.clone(), inner.clone(), prop::option::of(inner.clone()))
                .prop_map(|(g, t, e)| Combination::cond(g, t, e)),
            (guards.clone(), inner).prop_map(|(g, b)| Combination::iter(g, b)),
        ]
    })
    .boxed()
}

// ---------------------------------------------------------------------------
// Law catalog: number attributes with commutative merges only
// ---------------------------------------------------------------------------

pub const LAW_ATOMS: &[&str] = &["inc_x", "dbl_y", "dec_z", "mix", "noop"];

pub fn law_catalog() -> Catalog {
    let doc = json!({
        "schema": [
            {"name": "x", "kind": "number", "merge": "additive"},
            {"name": "y", "kind": "number", "merge": "max"},
            {"name": "z", "kind": "number", "merge": "min"}
        ],
        "patterns": [
            {"id": "inc_x", "transformations": ["x := x + 3"]},
            {"id": "dbl_y", "transformations": ["y := y * 2 + 0.1"]},
            {"id": "dec_z", "transformations": ["z := z - 1.5"]},
            {"id": "mix", "transformations": ["x := x + y / 4", "z := z + x * 0.01"]},
            {"id": "noop"}
        ]
    });
    load_catalog(&doc.to_string()).unwrap()
}

pub const LAW_GUARDS: &[&str] = &["x < 20", "y >= 5 | z < 0", "!(x > 7) & y < 40", "z > 3 => x < 12", "true", "false"];

pub fn law_guard(catalog: &Catalog) -> BoxedStrategy<Goal> {
    let goals: Vec<Goal> = LAW_GUARDS.iter().map(|g| catalog.parse_goal(g).unwrap()).collect();
    prop::sample::select(goals).boxed()
}

/// Law combinations whose loops always advance `x` and are guarded by
/// `x < k`, so they terminate well below the default cap.
pub fn law_combination(catalog: &Catalog) -> BoxedStrategy<Combination> {
    let guards = law_guard(catalog);
    let loop_guards: Vec<Goal> = ["x < 10", "x < 25", "x <= 31"]
        .iter()
        .map(|g| catalog.parse_goal(g).unwrap())
        .collect();
    let leaf = prop::sample::select(LAW_ATOMS).prop_map(Combination::atom);
    leaf.prop_recursive(3, 16, 3, move |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Combination::Seq),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Combination::Par),
            (guards.clone(), inner.clone(), prop::option::of(inner.clone()))
                .prop_map(|(g, t, e)| Combination::cond(g, t, e)),
            (prop::sample::select(loop_guards.clone()), inner)
                .prop_map(|(g, b)| Combination::iter(g, Combination::Seq(vec![Combination::atom("inc_x"), b]))),
        ]
    })
    .boxed()
}

pub fn arb_law_state() -> impl Strategy<Value = patternforge::State> {
    (-5i32..15, 0i32..20, -2i32..30).prop_map(|(x, y, z)| {
        [("x", f64::from(x)), ("y", f64::from(y) / 2.0), ("z", f64::from(z))]
            .into_iter()
            .collect()
    })
}

// ---------------------------------------------------------------------------
// Random planning instances and the brute-force oracle
// ---------------------------------------------------------------------------

pub struct Instance {
    pub catalog: Catalog,
    pub network: Network,
    pub state: patternforge::State,
    pub goal: Goal,
    pub limits: Limits,
    /// Compatibility rule, mirrored by the oracle: `Some(true)` tools must be
    /// equal, `Some(false)` must differ.
    pub same_tool: Option<bool>,
}

const ARTIFACTS: &[&str] = &["r0", "r1", "r2"];

fn some_artifacts(rng: &mut ChaCha8Rng, p: f64) -> Vec<&'static str> {
    ARTIFACTS.iter().copied().filter(|_| rng.gen_bool(p)).collect()
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=6);
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let menu = |rng: &mut ChaCha8Rng| -> String {
        match rng.gen_range(0..6) {
            0 => format!("x := x + {}", rng.gen_range(1..20)),
            1 => format!("y := y + {}", rng.gen_range(1..5)),
            2 => format!("z := z - {}", rng.gen_range(1..4)),
            3 => format!("m := '{}'", ["a", "b", "c"].choose(rng).unwrap()),
            4 => "x := x * 2".to_string(),
            _ => "y := x / 10".to_string(),
        }
    };
    let patterns: Vec<serde_json::Value> = ids
        .iter()
        .map(|id| {
            let k = rng.gen_range(0..=2);
            let tr: Vec<String> = (0..k).map(|_| menu(&mut rng)).collect();
            let mut p = json!({
                "id": id,
                "significance": {"usage_count": rng.gen_range(0..4)},
                "transformations": tr,
                "consumes": some_artifacts(&mut rng, 0.2),
                "produces": some_artifacts(&mut rng, 0.3),
            });
            if rng.gen_bool(0.8) {
                p["characterization"] = json!({"t": if rng.gen_bool(0.5) { "p" } else { "q" }});
            }
            p
        })
        .collect();
    let doc = json!({
        "schema": [
            {"name": "x", "kind": "number", "merge": "additive"},
            {"name": "y", "kind": "number", "merge": "max"},
            {"name": "z", "kind": "number", "merge": "min"},
            {"name": "m", "kind": "enum", "domain": ["a", "b", "c"]},
            {"name": "t", "kind": "enum", "domain": ["p", "q"]}
        ],
        "patterns": patterns
    });
    let catalog = load_catalog(&doc.to_string()).unwrap();

    let endpoint = |rng: &mut ChaCha8Rng| -> String {
        if ids.is_empty() || rng.gen_bool(0.15) {
            "*".to_string()
        } else {
            ids.choose(rng).unwrap().clone()
        }
    };
    let adjacency: Vec<serde_json::Value> = if rng.gen_bool(0.5) {
        vec![]
    } else {
        (0..rng.gen_range(1..8))
            .map(|_| json!({"from": endpoint(&mut rng), "to": endpoint(&mut rng)}))
            .collect()
    };
    let same_tool = match rng.gen_range(0..3) {
        0 => None,
        1 => Some(true),
        _ => Some(false),
    };
    let compatibility: Vec<&str> = match same_tool {
        None => vec![],
        Some(true) => vec!["left.t = right.t"],
        Some(false) => vec!["left.t != right.t"],
    };
    let net_doc = json!({
        "adjacency": adjacency,
        "compatibility": compatibility,
        "initial_artifacts": some_artifacts(&mut rng, 0.6),
    });
    let network = load_network(&net_doc.to_string(), &catalog).unwrap();

    let state = catalog
        .validate_state([
            ("x".to_string(), f64::from(rng.gen_range(0..10)).into()),
            ("y".to_string(), f64::from(rng.gen_range(0..5)).into()),
            ("z".to_string(), f64::from(rng.gen_range(10..20)).into()),
            ("m".to_string(), (*["a", "b", "c"].choose(&mut rng).unwrap()).into()),
        ])
        .unwrap();
    let goal_text = match rng.gen_range(0..6) {
        0 => format!("x < {}", rng.gen_range(5..60)),
        1 => format!("x >= {} & m = 'b'", rng.gen_range(0..30)),
        2 => format!("y > {} | z < {}", rng.gen_range(0..6), rng.gen_range(8..18)),
        3 => "true".to_string(),
        4 => format!("m in {{'a', 'c'}} => x <= {}", rng.gen_range(0..40)),
        _ => format!("!(x = {}) & z >= {}", rng.gen_range(0..20), rng.gen_range(5..20)),
    };
    let goal = catalog.parse_goal(&goal_text).unwrap();
    let limits = Limits {
        max_atoms: rng.gen_range(1..=4),
        max_par_width: rng.gen_range(2..=3),
        allow_par: rng.gen_bool(0.8),
        ..Limits::default()
    };
    Instance {
        catalog,
        network,
        state,
        goal,
        limits,
        same_tool,
    }
}

/// Every Seq-of-steps shape with distinct atoms, no pruning, as step lists.
pub fn brute_force_shapes(ids: &[String], limits: &Limits) -> Vec<Vec<Vec<String>>> {
    let width = if limits.allow_par { limits.max_par_width } else { 1 };
    let mut groups: Vec<Vec<String>> = Vec::new();
    for mask in 1u32..(1 << ids.len()) {
        let g: Vec<String> = (0..ids.len()).filter(|i| mask & (1 << i) != 0).map(|i| ids[i].clone()).collect();
        if g.len() <= width {
            groups.push(g);
        }
    }
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Vec<String>>> = vec![vec![]];
    while let Some(prefix) = frontier.pop() {
        let used: usize = prefix.iter().map(Vec::len).sum();
        for g in &groups {
            if used + g.len() > limits.max_atoms || g.iter().any(|id| prefix.iter().flatten().any(|u| u == id)) {
                continue;
            }
            let mut next = prefix.clone();
            next.push(g.clone());
            out.push(next.clone());
            frontier.push(next);
        }
    }
    out
}

pub fn shape_text(steps: &[Vec<String>]) -> String {
    let step = |s: &Vec<String>| {
        if s.len() == 1 {
            s[0].clone()
        } else {
            format!("par({})", s.join(", "))
        }
    };
    if steps.len() == 1 {
        step(&steps[0])
    } else {
        format!("seq({})", steps.iter().map(step).collect::<Vec<_>>().join(", "))
    }
}

/// Reference admissibility for flat shapes, written from the constraint
/// definitions rather than the library checker.
pub fn oracle_admits(inst: &Instance, steps: &[Vec<String>]) -> bool {
    let c = &inst.catalog;
    let net = &inst.network;
    for w in steps.windows(2) {
        if let ([a], [b]) = (w[0].as_slice(), w[1].as_slice()) {
            let ok = net.adjacency.is_empty()
                || net
                    .adjacency
                    .iter()
                    .any(|r| (r.from == "*" || r.from == *a) && (r.to == "*" || r.to == *b));
            if !ok {
                return false;
            }
        }
    }
    if let Some(same) = inst.same_tool {
        let atoms: Vec<&String> = steps.iter().flatten().collect();
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[i + 1..] {
                let ta = c.pattern(a).unwrap().characterization.get("t");
                let tb = c.pattern(b).unwrap().characterization.get("t");
                if let (Some(ta), Some(tb)) = (ta, tb) {
                    if (ta == tb) != same {
                        return false;
                    }
                }
            }
        }
    }
    let mut available: BTreeSet<String> = net.initial_artifacts.clone();
    for step in steps {
        let mut produced = BTreeSet::new();
        for id in step {
            let p = c.pattern(id).unwrap();
            if !p.consumes.is_subset(&available) {
                return false;
            }
            produced.extend(p.produces.iter().cloned());
        }
        available.extend(produced);
    }
    true
}

/// Admissible combination texts according to the oracle, sorted.
pub fn oracle_enumeration(inst: &Instance) -> Vec<String> {
    let ids: Vec<String> = inst.catalog.patterns().map(|p| p.id.clone()).collect();
    let mut out: Vec<String> = brute_force_shapes(&ids, &inst.limits)
        .into_iter()
        .filter(|s| oracle_admits(inst, s))
        .map(|s| shape_text(&s))
        .collect();
    out.sort();
    out.dedup();
    out
}
