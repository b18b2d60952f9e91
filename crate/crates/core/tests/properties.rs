//! Randomized laws: multiset algebra, the classical firing rule, printer
//! round-trips, evaluation purity and type preservation.

use std::collections::BTreeMap;

use proptest::prelude::*;

use pnrd_core::engine::PnrdNet;
use pnrd_core::lang::ast::{BinOp, Expr, Pattern, Quantifier, UnOp};
use pnrd_core::lang::{eval_expr, load_model, parse_expr, parse_type, print_expr, Binding, GlobalStore, Value};
use pnrd_core::simulate::simulate;
use pnrd_core::{Multiset, Net, TokenGame};

fn ms() -> impl Strategy<Value = Multiset<u8>> {
    prop::collection::btree_map(0u8..6, 1u64..5, 0..5).prop_map(|m| Multiset::from_counts(m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sum_is_a_commutative_monoid(a in ms(), b in ms(), c in ms()) {
        prop_assert_eq!(a.sum(&b).unwrap(), b.sum(&a).unwrap());
        prop_assert_eq!(a.sum(&b).unwrap().sum(&c).unwrap(), a.sum(&b.sum(&c).unwrap()).unwrap());
        prop_assert_eq!(a.sum(&Multiset::new()).unwrap(), a.clone());
    }

    #[test]
    fn inclusion_and_truncated_subtraction(a in ms(), b in ms()) {
        let ab = a.sum(&b).unwrap();
        prop_assert!(a.is_subset(&ab));
        prop_assert!(a.subtract(&b).is_subset(&a));
        if b.is_subset(&a) {
            prop_assert_eq!(a.subtract(&b).sum(&b).unwrap(), a.clone());
        }
        // Pointwise definitions.
        for x in 0u8..6 {
            prop_assert_eq!(ab.count(&x), a.count(&x) + b.count(&x));
            prop_assert_eq!(a.subtract(&b).count(&x), a.count(&x).saturating_sub(b.count(&x)));
            prop_assert_eq!(a.union(&b).count(&x), a.count(&x).max(b.count(&x)));
        }
        prop_assert!(a.iter().all(|(_, n)| *n > 0));
    }

    #[test]
    fn union_is_a_semilattice(a in ms(), b in ms(), c in ms()) {
        prop_assert_eq!(a.union(&a), a.clone());
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
    }
}

#[derive(Debug, Clone)]
struct RandomNet {
    pre: Vec<Vec<u64>>,
    post: Vec<Vec<u64>>,
    marking: Vec<u64>,
}

impl RandomNet {
    fn net(&self) -> Net {
        let places = self.marking.len();
        let mut b = Net::builder();
        for p in 0..places {
            b = b.place(format!("p{p}"));
        }
        for t in 0..self.pre.len() {
            b = b.transition(format!("t{t}"));
            for p in 0..places {
                if self.pre[t][p] > 0 {
                    b = b.weighted_arc(format!("p{p}"), format!("t{t}"), self.pre[t][p]);
                }
                if self.post[t][p] > 0 {
                    b = b.weighted_arc(format!("t{t}"), format!("p{p}"), self.post[t][p]);
                }
            }
        }
        b.build().unwrap()
    }
}

fn random_net() -> impl Strategy<Value = RandomNet> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(np, nt)| {
        let row = prop::collection::vec(0u64..3, np);
        (
            prop::collection::vec(row.clone(), nt),
            prop::collection::vec(row, nt),
            prop::collection::vec(0u64..4, np),
        )
            .prop_map(|(pre, post, marking)| RandomNet { pre, post, marking })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn firing_conserves_flow_and_reverses(rn in random_net()) {
        let net = rn.net();
        let m = net.marking(rn.marking.iter().enumerate().map(|(i, n)| (["p0", "p1", "p2", "p3", "p4", "p5"][i], *n))).unwrap();
        let rev = net.reversed();
        for (t, pre) in rn.pre.iter().enumerate() {
            let tid = format!("t{t}");
            let covered = pre.iter().zip(&rn.marking).all(|(w, n)| w <= n);
            prop_assert_eq!(net.is_enabled(&m, &tid).unwrap(), covered);
            prop_assert_eq!(covered, net.preset(&tid).unwrap().is_subset(m.as_multiset()));
            if !covered {
                prop_assert!(net.fire(&m, &tid).is_err());
                continue;
            }
            let m2 = net.fire(&m, &tid).unwrap();
            for p in 0..rn.marking.len() {
                let pid = format!("p{p}");
                let delta = m2.get(&pid) as i64 - m.get(&pid) as i64;
                prop_assert_eq!(delta, rn.post[t][p] as i64 - rn.pre[t][p] as i64);
            }
            prop_assert_eq!(rev.fire(&m2, &tid).unwrap(), m.clone());
        }
    }
}

fn names() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["x", "y", "count", "p", "pool2"]).prop_map(str::to_owned)
}

fn pattern() -> impl Strategy<Value = Pattern> {
    let leaf = prop_oneof![Just(Pattern::Wildcard), prop::sample::select(vec!["a", "b"]).prop_map(|s| Pattern::Bind(s.into()))];
    leaf.prop_recursive(2, 6, 3, |inner| prop::collection::vec(inner, 1..3).prop_map(Pattern::Tuple))
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Unit),
        any::<bool>().prop_map(Expr::Bool),
        (-40i64..40).prop_map(Expr::Int),
        prop::sample::select(vec!["", "a b", "q\"t", "back\\slash"]).prop_map(|s| Expr::Str(s.into())),
        names().prop_map(Expr::Name),
        prop::sample::select(vec!["pf1", "0"]).prop_map(|s| Expr::PointerLit(s.into())),
        Just(Expr::RefOf("p".into())),
        prop::collection::vec(names(), 1..3).prop_map(Expr::Tokens),
    ];
    let ops = vec![
        BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod, BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt,
        BinOp::Ge, BinOp::And, BinOp::Or, BinOp::In, BinOp::Subset, BinOp::Union, BinOp::Concat,
    ];
    leaf.prop_recursive(4, 40, 4, move |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Expr::Tuple),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Expr::Set),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Expr::List),
            prop::collection::vec((prop::sample::select(vec!["a", "b"]), inner.clone()), 1..3)
                .prop_map(|fs| {
                    let mut seen = std::collections::BTreeSet::new();
                    Expr::Record(fs.into_iter().filter(|(k, _)| seen.insert(*k)).map(|(k, v)| (k.to_owned(), v)).collect())
                }),
            (inner.clone(), prop::sample::select(vec!["completed", "n"])).prop_map(|(e, f)| Expr::Field(Box::new(e), f.into())),
            (inner.clone(), 0usize..3).prop_map(|(e, i)| Expr::Index(Box::new(e), i)),
            (prop::sample::select(vec![UnOp::Not, UnOp::Neg]), inner.clone()).prop_map(|(o, e)| Expr::Unary(o, Box::new(e))),
            (prop::sample::select(ops.clone()), inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::bin(o, l, r)),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| Expr::If(Box::new(c), Box::new(a), Box::new(b))),
            inner.clone().prop_map(|e| Expr::Len(Box::new(e))),
            (prop::sample::select(vec![Quantifier::Forall, Quantifier::Exists]), pattern(), inner.clone(), inner)
                .prop_map(|(q, p, d, b)| Expr::Quant(q, p, Box::new(d), Box::new(b))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn printing_then_parsing_is_identity(e in expr()) {
        let text = print_expr(&e);
        let back = parse_expr(&text);
        prop_assert!(back.is_ok(), "{} does not parse: {:?}", text, back);
        prop_assert_eq!(back.unwrap(), e, "{}", text);
    }
}

/// Well-typed random expressions, as source text with their static type.
fn typed(ty: &'static str, depth: u32) -> BoxedStrategy<String> {
    let int_leaf = prop_oneof![(-9i64..10).prop_map(|n| n.to_string()), Just("x".into()), Just("y".into()), Just("len(pf.completed)".into())];
    let bool_leaf = prop_oneof![Just("true".into()), Just("false".into()), Just("(3 in pf.completed)".into())];
    let set_leaf = prop_oneof![Just("pf.completed".into()), Just("s".into()), Just("{}".into()), Just("{1, 2}".into())];
    let list_leaf = prop_oneof![Just("l".into()), Just("[]".into()), Just("[x, 4]".into())];
    let leaf: BoxedStrategy<String> = match ty {
        "Int" => int_leaf.boxed(),
        "Bool" => bool_leaf.boxed(),
        "Set Int" => set_leaf.boxed(),
        _ => list_leaf.boxed(),
    };
    if depth == 0 {
        return leaf;
    }
    let d = depth - 1;
    let rec: BoxedStrategy<String> = match ty {
        "Int" => prop_oneof![
            (typed("Int", d), prop::sample::select(vec!["+", "-", "*"]), typed("Int", d)).prop_map(|(a, o, b)| format!("({a} {o} {b})")),
            (typed("Bool", d), typed("Int", d), typed("Int", d)).prop_map(|(c, a, b)| format!("(if {c} then {a} else {b})")),
            typed("List Int", d).prop_map(|l| format!("len({l})")),
            typed("Int", d).prop_map(|a| format!("-({a})")),
            (typed("Int", d), typed("Int", d)).prop_map(|(a, b)| format!("(({a}), {b}).1")),
        ]
        .boxed(),
        "Bool" => prop_oneof![
            (typed("Int", d), prop::sample::select(vec!["<", "<=", "==", "!=", ">", ">="]), typed("Int", d))
                .prop_map(|(a, o, b)| format!("({a} {o} {b})")),
            (typed("Bool", d), prop::sample::select(vec!["&&", "||"]), typed("Bool", d)).prop_map(|(a, o, b)| format!("({a} {o} {b})")),
            typed("Bool", d).prop_map(|a| format!("!({a})")),
            (typed("Int", d), typed("Set Int", d)).prop_map(|(a, s)| format!("({a} in {s})")),
            (typed("Set Int", d), typed("Set Int", d)).prop_map(|(a, b)| format!("({a} subset {b})")),
            typed("List Int", d).prop_map(|l| format!("(forall k in {l}: k > x)")),
        ]
        .boxed(),
        "Set Int" => prop_oneof![
            (typed("Set Int", d), typed("Set Int", d)).prop_map(|(a, b)| format!("({a} union {b})")),
            (typed("Int", d), typed("Int", d)).prop_map(|(a, b)| format!("{{{a}, {b}}}")),
        ]
        .boxed(),
        _ => prop_oneof![
            (typed("List Int", d), typed("List Int", d)).prop_map(|(a, b)| format!("({a} ++ {b})")),
            (typed("Int", d), typed("Int", d)).prop_map(|(a, b)| format!("[{a}, {b}]")),
        ]
        .boxed(),
    };
    prop_oneof![leaf, rec].boxed()
}

fn typed_case() -> impl Strategy<Value = (&'static str, String)> {
    prop::sample::select(vec!["Int", "Bool", "Set Int", "List Int"]).prop_flat_map(|ty| typed(ty, 3).prop_map(move |e| (ty, e)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Every well-typed expression evaluates to a value of its static type,
    /// and evaluation leaves the store untouched.
    #[test]
    fn evaluation_preserves_types_and_the_store((ty, e) in typed_case(), x in -5i64..6, y in -5i64..6) {
        let src = format!(
            "types P = {{completed: Set Int}}; pointers q : P = {{completed: {{1, 3}}}};
             vars x, y : Int; s : Set Int; l : List Int; pf : Ref P;
             places a : (Int, Int, Set Int, List Int, Ref P) = ({x}, {y}, {{2}}, [1, 5], q); out : {ty};
             transitions t; arcs a -> t : (x, y, s, l, pf); t -> out : ({e});"
        );
        let model = load_model(&src);
        prop_assert!(model.is_ok(), "{}: {:?}", e, model.err().map(|m| m.messages()));
        let model = model.unwrap();
        let out = &model.transitions[0].outputs[0].entries[0].1;
        let mut b = Binding::new();
        b.insert("x", Value::Int(x));
        b.insert("y", Value::Int(y));
        b.insert("s", Value::int_set([2]));
        b.insert("l", Value::int_list([1, 5]));
        b.insert("pf", Value::pointer("q"));
        let store: GlobalStore = model.initial_store();
        let before = store.clone();
        let v = eval_expr(out, &b, &store);
        prop_assert_eq!(&store, &before);
        let v = v.unwrap();
        prop_assert!(v.conforms(&parse_type(ty).unwrap()), "{} gave {}", e, v);
        // The engine agrees with direct evaluation.
        let net = PnrdNet::new(model);
        let s0 = net.initial_state();
        let modes = net.enabled_modes(&s0).unwrap();
        prop_assert_eq!(modes.len(), 1);
        let s1 = net.fire_mode(&s0, &modes[0]).unwrap();
        prop_assert_eq!(net.tokens(&s1, "out").unwrap().elements().next(), Some(&v));
        prop_assert_eq!(&s1.store, &s0.store);
    }
}

#[test]
fn seeded_choice_is_uniform_over_modes() {
    let net = Net::builder().place("i").place("a").place("b").transition("left").transition("right")
        .arc("i", "left").arc("left", "a").arc("i", "right").arc("right", "b").build().unwrap();
    let m = net.marking([("i", 1)]).unwrap();
    assert_eq!(net.enabled_modes(&m).unwrap().len(), 2);
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    let runs = 10_000u64;
    for seed in 0..runs {
        let t = simulate(&net, "m", m.clone(), seed, 1).unwrap();
        *freq.entry(t.steps[0].transition.clone()).or_default() += 1;
    }
    for (t, n) in &freq {
        let f = *n as f64 / runs as f64;
        assert!((0.47..=0.53).contains(&f), "{t}: {f}");
    }
    assert_eq!(freq.len(), 2);
}
