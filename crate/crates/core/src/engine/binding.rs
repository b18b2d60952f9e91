use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{EngineError, Mode};
use crate::lang::printer::print_name;
use crate::lang::typecheck::{TExpr, TTransition, TypedModel};
use crate::lang::{eval_expr, eval_guard, Binding, GlobalStore, Value};
use crate::multiset::Multiset;

/// Canonical rendering of a marking, every place in declaration order.
pub fn marking_key(model: &TypedModel, marking: &[Multiset<Value>]) -> String {
    let mut s = String::new();
    for (p, ms) in model.places.iter().zip(marking) {
        if !s.is_empty() {
            s.push_str("; ");
        }
        let _ = write!(s, "{}={ms}", print_name(&p.name));
    }
    s
}

/// Matches a pattern-shaped expression against a token, extending `b`.
/// Sub-expressions that are not patterns are left to the demand check.
fn match_token(e: &TExpr, v: &Value, b: &mut Binding) -> bool {
    match (e, v) {
        (TExpr::Var(n), v) => match b.get(n) {
            Some(bound) => bound == v,
            None => {
                b.insert(n.clone(), v.clone());
                true
            }
        },
        (TExpr::Const(c), v) => c == v,
        (TExpr::Tuple(es), Value::Tuple(vs)) => es.len() == vs.len() && es.iter().zip(vs).all(|(e, v)| match_token(e, v, b)),
        (TExpr::Tuple(_), _) => false,
        (TExpr::Record(fs), Value::Record(vs)) => {
            fs.len() == vs.len() && fs.iter().all(|(k, e)| vs.get(k).is_some_and(|v| match_token(e, v, b)))
        }
        (TExpr::Record(_), _) => false,
        _ => true,
    }
}

/// Input demands of `t` under `(b, s)`, one multiset per input arc.
pub(crate) fn demands(t: &TTransition, b: &Binding, s: &GlobalStore) -> Result<Vec<(usize, Multiset<Value>)>, EngineError> {
    let mut out = Vec::with_capacity(t.inputs.len());
    for arc in &t.inputs {
        let mut ms = Multiset::new();
        for (n, e) in &arc.entries {
            ms.insert_n(eval_expr(e, b, s)?, *n)?;
        }
        out.push((arc.place, ms));
    }
    Ok(out)
}

/// Whether `(t, b)` is enabled: the binding assigns every variable, the
/// demands are included in the marking, and the guard holds.
pub(crate) fn is_enabled(t: &TTransition, marking: &[Multiset<Value>], s: &GlobalStore, b: &Binding) -> Result<bool, EngineError> {
    if let Some(var) = t.vars.keys().find(|v| b.get(v).is_none()) {
        return Err(EngineError::IncompleteBinding { transition: t.name.clone(), var: var.clone() });
    }
    for (place, demand) in demands(t, b, s)? {
        if !demand.is_subset(&marking[place]) {
            return Ok(false);
        }
    }
    Ok(eval_guard(t.guard.as_ref(), b, s)?)
}

/// All bindings of `t` enabled in `marking` under store `s`, deduplicated,
/// ordered by their rendering.
pub(crate) fn enumerate(t: &TTransition, marking: &[Multiset<Value>], s: &GlobalStore) -> Result<Vec<Binding>, EngineError> {
    let slots: Vec<(usize, &TExpr)> = t
        .inputs
        .iter()
        .flat_map(|arc| arc.entries.iter().map(move |(_, e)| (arc.place, e)))
        .filter(|(_, e)| {
            let mut vs = BTreeSet::new();
            e.pattern_vars(&mut vs);
            !vs.is_empty()
        })
        .collect();
    let mut found = BTreeSet::new();
    search(t, &slots, marking, s, Binding::new(), &mut found)?;
    let mut out: Vec<Binding> = found.into_iter().collect();
    out.sort_by_cached_key(ToString::to_string);
    Ok(out)
}

fn search(
    t: &TTransition,
    slots: &[(usize, &TExpr)],
    marking: &[Multiset<Value>],
    s: &GlobalStore,
    b: Binding,
    found: &mut BTreeSet<Binding>,
) -> Result<(), EngineError> {
    let Some(&(place, pattern)) = slots.first() else {
        if !found.contains(&b) && is_enabled(t, marking, s, &b)? {
            found.insert(b);
        }
        return Ok(());
    };
    for token in marking[place].elements() {
        let mut next = b.clone();
        if match_token(pattern, token, &mut next) {
            search(t, &slots[1..], marking, s, next, found)?;
        }
    }
    Ok(())
}

/// Enabled modes of every transition, ordered by transition name, then
/// binding rendering.
pub(crate) fn enabled_modes(model: &TypedModel, marking: &[Multiset<Value>], s: &GlobalStore) -> Result<Vec<Mode>, EngineError> {
    let mut order: Vec<usize> = (0..model.transitions.len()).collect();
    order.sort_by(|&a, &b| model.transitions[a].name.cmp(&model.transitions[b].name));
    let mut modes = Vec::new();
    for i in order {
        let t = &model.transitions[i];
        for binding in enumerate(t, marking, s)? {
            modes.push(Mode { transition: i, name: t.name.clone(), binding });
        }
    }
    Ok(modes)
}

/// The firing rule: consume the demands evaluated in the pre-firing store,
/// run the operator, then produce outputs evaluated in the new store with
/// the binding extended by allocated pointers.
pub(crate) fn fire(
    model: &TypedModel,
    marking: &[Multiset<Value>],
    s: &GlobalStore,
    mode: &Mode,
) -> Result<(Vec<Multiset<Value>>, GlobalStore), EngineError> {
    let t = &model.transitions[mode.transition];
    let b = &mode.binding;
    if !is_enabled(t, marking, s, b)? {
        return Err(EngineError::NotEnabled { transition: t.name.clone(), binding: b.to_string() });
    }
    let mut next = marking.to_vec();
    for (place, demand) in demands(t, b, s)? {
        next[place] = next[place].subtract(&demand);
    }
    let (store, extended) = crate::lang::apply_operator(&t.ops, b, s)?;
    for arc in &t.outputs {
        for (n, e) in &arc.entries {
            let v = eval_expr(e, &extended, &store)?;
            let mut ptrs = BTreeSet::new();
            v.pointers(&mut ptrs);
            if let Some(p) = ptrs.into_iter().find(|p| !store.contains_key(p)) {
                return Err(EngineError::DanglingToken { transition: t.name.clone(), pointer: p });
            }
            next[arc.place].insert_n(v, *n)?;
        }
    }
    Ok((next, store))
}
