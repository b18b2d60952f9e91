//! Cross-checks of the engines and analyses against independently written
//! oracles: brute-force state machines, subset checks and replays.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use pnrd_core::analysis::{check_invariant, dangling_states, explore_hl, find_deadlocks, InvariantOutcome};
use pnrd_core::corpus::load_corpus;
use pnrd_core::engine::{PnrdNet, PnrdState};
use pnrd_core::lang::typecheck::eval_invariant;
use pnrd_core::lang::{load_model, Value};
use pnrd_core::net::{wf_soundness, wf_validate, Soundness};
use pnrd_core::graph::{state_hash, TokenGame};
use pnrd_core::simulate::{export_log, replay, simulate_many};
use pnrd_core::{explore, Bounds};

#[test]
fn fig1_is_a_sound_workflow_net_whose_only_deadlock_is_completion() {
    let entry = load_corpus("fig1").unwrap();
    let wf = entry.workflow().unwrap();
    assert!(wf_validate(&wf.net, &wf.source, &wf.sink).unwrap().is_workflow_net());
    assert!(matches!(wf_soundness(&wf, Bounds::default()).unwrap(), Soundness::Sound { .. }));
    let g = explore(&wf.net, wf.initial_marking(), Bounds::default()).unwrap();
    assert!(!g.truncated);
    let final_key = wf.final_marking().to_string();
    let sinks = find_deadlocks(&g);
    assert_eq!(sinks.len(), 1);
    assert_eq!(g.keys[sinks[0]], final_key);
}

fn int(v: &Value) -> i64 {
    match v {
        Value::Int(n) => *n,
        other => panic!("expected an Int, got {other}"),
    }
}

fn int_set(v: &Value) -> BTreeSet<i64> {
    match v {
        Value::Set(s) => s.iter().map(int).collect(),
        other => panic!("expected a set, got {other}"),
    }
}

fn fields(v: &Value) -> &[Value] {
    match v {
        Value::Tuple(fs) => fs,
        other => panic!("expected a tuple, got {other}"),
    }
}

/// `(student, course)` pairs allowed by the catalog and the portfolios,
/// computed directly from the state.
fn allowed_choices(net: &PnrdNet, s: &PnrdState) -> BTreeSet<(i64, i64)> {
    let mut out = BTreeSet::new();
    for student in net.tokens(s, "student pool").unwrap().elements() {
        let [id, Value::Pointer(p)] = fields(student) else { panic!("{student}") };
        let Value::Record(pf) = &s.store[p] else { panic!() };
        let completed = int_set(&pf["completed"]);
        let enrolled = int_set(&pf["enrolled"]);
        for course in net.tokens(s, "course pool").unwrap().elements() {
            let [c, _, pre] = fields(course) else { panic!("{course}") };
            if int_set(pre).is_subset(&completed) && !enrolled.contains(&int(c)) {
                out.insert((int(id), int(c)));
            }
        }
    }
    out
}

#[test]
fn fig3_course_choice_matches_the_prerequisite_oracle_everywhere() {
    let entry = load_corpus("fig3").unwrap();
    let net = entry.net();
    let g = explore_hl(&net, entry.explore_from.clone(), Bounds::default()).unwrap();
    assert!(!g.truncated);
    assert_eq!(g.len(), 28_561);
    let mut gated = 0;
    for s in &g.nodes {
        let modes: BTreeSet<(i64, i64)> = net
            .enabled_modes(s)
            .unwrap()
            .iter()
            .filter(|m| m.name == "choose course")
            .map(|m| (int(m.binding.get("id").unwrap()), int(m.binding.get("c").unwrap())))
            .collect();
        let want = allowed_choices(&net, s);
        assert_eq!(modes, want);
        gated += usize::from(want.len() < 8 && !want.is_empty());
    }
    assert!(gated > 0);
    for inv in &net.model().invariants {
        assert!(check_invariant(&g, inv).unwrap().holds(), "{}", inv.name);
    }
    assert!(dangling_states(&g).is_empty());
}

// ---- fig4 as a hand-written state machine ----------------------------------

type Members = [(i64, &'static str); 3];

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct Teams {
    roles: &'static [&'static str],
    pool: BTreeSet<i64>,
    selected: BTreeSet<(i64, &'static str)>,
    team_ids: BTreeSet<i64>,
    subjects: BTreeSet<i64>,
    teams: BTreeSet<(i64, Members)>,
    /// Projects in each of the five stages between selection and review.
    stages: [BTreeSet<(i64, Members, i64)>; 5],
    completed: Vec<(i64, i64)>,
    portfolios: BTreeMap<i64, BTreeSet<(i64, &'static str)>>,
}

fn teams_initial(students: i64, roles: &'static [&'static str], team_ids: &[i64], subjects: &[i64]) -> Teams {
    Teams {
        roles,
        pool: (1..=students).collect(),
        selected: BTreeSet::new(),
        team_ids: team_ids.iter().copied().collect(),
        subjects: subjects.iter().copied().collect(),
        teams: BTreeSet::new(),
        stages: Default::default(),
        completed: Vec::new(),
        portfolios: (1..=students).map(|i| (i, BTreeSet::new())).collect(),
    }
}

fn teams_successors(s: &Teams) -> Vec<Teams> {
    let mut out = Vec::new();
    for &i in &s.pool {
        for &r in s.roles {
            let mut n = s.clone();
            n.pool.remove(&i);
            n.selected.insert((i, r));
            out.push(n);
        }
    }
    for &(i, r) in &s.selected {
        let mut n = s.clone();
        n.selected.remove(&(i, r));
        n.pool.insert(i);
        out.push(n);
    }
    let sel: Vec<_> = s.selected.iter().copied().collect();
    for a in &sel {
        for b in &sel {
            for c in &sel {
                if !(a.0 < b.0 && b.0 < c.0) || a.1 == b.1 || a.1 == c.1 || b.1 == c.1 {
                    continue;
                }
                for &t in &s.team_ids {
                    let mut n = s.clone();
                    for m in [a, b, c] {
                        n.selected.remove(m);
                    }
                    n.team_ids.remove(&t);
                    n.teams.insert((t, [*a, *b, *c]));
                    out.push(n);
                }
            }
        }
    }
    for team in &s.teams {
        for &sub in &s.subjects {
            let mut n = s.clone();
            n.teams.remove(team);
            n.subjects.remove(&sub);
            n.stages[0].insert((team.0, team.1, sub));
            out.push(n);
        }
    }
    // discuss, complete individual assignments, discuss results
    for (from, to) in [(0, 1), (1, 2), (2, 3)] {
        for p in &s.stages[from] {
            let mut n = s.clone();
            n.stages[from].remove(p);
            n.stages[to].insert(*p);
            out.push(n);
        }
    }
    for p @ (t, ms, sub) in &s.stages[1] {
        let mut n = s.clone();
        n.stages[1].remove(p);
        n.pool.extend(ms.iter().map(|m| m.0));
        n.subjects.insert(*sub);
        n.team_ids.insert(*t);
        out.push(n);
    }
    for p in &s.stages[3] {
        for q in &s.stages[3] {
            if p.0 < q.0 {
                let mut n = s.clone();
                for x in [p, q] {
                    n.stages[3].remove(x);
                    n.stages[4].insert(*x);
                }
                out.push(n);
            }
        }
    }
    for p @ (t, ms, sub) in &s.stages[4] {
        let mut n = s.clone();
        n.stages[4].remove(p);
        n.pool.extend(ms.iter().map(|m| m.0));
        n.completed.push((*t, *sub));
        n.completed.sort();
        for (i, r) in ms {
            n.portfolios.get_mut(i).unwrap().insert((*sub, *r));
        }
        out.push(n);
    }
    out
}

/// Breadth-first count of states, edges and dead states.
fn teams_space(initial: Teams) -> (usize, usize, usize) {
    let mut seen = HashSet::from([initial.clone()]);
    let mut queue = VecDeque::from([initial]);
    let (mut edges, mut dead) = (0, 0);
    while let Some(s) = queue.pop_front() {
        let next = teams_successors(&s);
        edges += next.len();
        dead += usize::from(next.is_empty());
        for n in next {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    (seen.len(), edges, dead)
}

#[test]
fn fig4_state_space_matches_a_hand_written_state_machine() {
    let entry = load_corpus("fig4").unwrap();
    let net = entry.net();
    let g = explore_hl(&net, entry.explore_from.clone(), Bounds::default()).unwrap();
    assert!(!g.truncated);
    let (states, edges, dead) = teams_space(teams_initial(3, &["dev", "lead", "tester"], &[1, 2], &[101, 102]));
    assert_eq!((g.len(), g.edges.len(), find_deadlocks(&g).len()), (states, edges, dead));
    for inv in &net.model().invariants {
        assert_eq!(check_invariant(&g, inv).unwrap(), InvariantOutcome::Holds { states, complete: true }, "{}", inv.name);
    }
}

#[test]
fn fig4_with_two_students_and_two_roles_matches_the_state_machine() {
    // Two students cannot form a team of three: the space is role
    // selection only, but it still exercises the read-only role pool.
    let entry = load_corpus("fig4").unwrap();
    let src = entry
        .source
        .replace("[(1, pf1), (2, pf2), (3, pf3)]", "[(1, pf1), (2, pf2)]")
        .replace("[\"lead\", \"dev\", \"tester\"]", "[\"lead\", \"dev\"]")
        .replace("\"project subjects\" : Int = [101, 102]", "\"project subjects\" : Int = [101]");
    let net = PnrdNet::new(load_model(&src).unwrap());
    let g = explore_hl(&net, net.initial_state(), Bounds::default()).unwrap();
    let (states, edges, dead) = teams_space(teams_initial(2, &["dev", "lead"], &[1, 2], &[101]));
    assert_eq!((g.len(), g.edges.len(), find_deadlocks(&g).len()), (states, edges, dead));
    // Per student: in the pool or holding one of two roles.
    assert_eq!(states, 9);
}

/// Replays a counterexample path by its mode labels and returns the final
/// state.
fn replay_labels(net: &PnrdNet, path: &[String]) -> PnrdState {
    let mut s = net.initial_state();
    for label in path {
        let modes = net.enabled_modes(&s).unwrap();
        let mode = modes.iter().find(|m| &m.to_string() == label).unwrap_or_else(|| panic!("`{label}` is not enabled"));
        s = net.fire_mode(&s, mode).unwrap();
    }
    s
}

#[test]
fn fig4_without_the_role_check_has_a_short_replayable_counterexample() {
    let entry = load_corpus("fig4").unwrap();
    let src = entry.source.replace("r1 != r2 && r1 != r3 && r2 != r3 && ", "");
    assert_ne!(src, entry.source);
    let net = PnrdNet::new(load_model(&src).unwrap());
    let g = explore_hl(&net, net.initial_state(), Bounds::default()).unwrap();
    let inv = net.model().invariant("distinct roles").unwrap();
    let InvariantOutcome::Violated { node, path } = check_invariant(&g, inv).unwrap() else {
        panic!("the mutant satisfies the invariant");
    };
    // Three role selections and one team creation.
    assert_eq!(path.len(), 4);
    assert_eq!(path.len(), g.depth(node));
    let last = replay_labels(&net, &path);
    assert!(!eval_invariant(inv, &last.marking, &last.store).unwrap());
    assert!(path.last().unwrap().starts_with("create team"));
}

#[test]
fn seeded_traces_are_reproducible_and_replay() {
    let entry = load_corpus("fig3").unwrap();
    let net = entry.net();
    let a = simulate_many(&net, entry.source, &entry.initial, 7, 40, 20).unwrap();
    let b = simulate_many(&net, entry.source, &entry.initial, 7, 40, 20).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_json(), y.to_json());
        let end = replay(&net, entry.initial.clone(), x).unwrap();
        if let Some(step) = x.steps.last() {
            assert_eq!(state_hash(&net.state_key(&end)), step.post);
        }
    }
    let mut csv = Vec::new();
    export_log(&a[..10], &mut csv).unwrap();
    let rows = String::from_utf8(csv).unwrap().lines().count() - 1;
    assert_eq!(rows, a[..10].iter().map(|t| t.steps.len()).sum::<usize>());
}

#[test]
fn a_tampered_trace_fails_to_replay() {
    let entry = load_corpus("fig2").unwrap();
    let net = entry.net();
    let mut t = simulate_many(&net, entry.source, &entry.initial, 1, 10, 1).unwrap().remove(0);
    assert!(!t.steps.is_empty());
    t.steps[0].post = "0000000000000000".into();
    assert!(replay(&net, entry.initial.clone(), &t).is_err());
}
