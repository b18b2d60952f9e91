//! Evaluation of typed expressions under a binding and a global store, and
//! application of store operators.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{BinOp, Pattern, Quantifier, UnOp};
use super::typecheck::{TAction, TExpr, Target};
use super::value::Value;
use super::{Binding, GlobalStore};
use crate::multiset::Multiset;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("dangling pointer @{0}")]
    Dangling(String),
    #[error("integer overflow")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("`tokens(...)` can only be evaluated against a marking")]
    NoMarking,
    #[error("value {value} does not fit type {expected} stored at @{pointer}")]
    Assignment { pointer: String, expected: String, value: String },
    #[error("runtime type error: {0}")]
    Type(String),
}

/// `ν(e, b, s)`: the value of `e` with variables taken from `b` and
/// references followed in `s`. Never modifies `s`.
pub fn eval_expr(e: &TExpr, b: &Binding, s: &GlobalStore) -> Result<Value, EvalError> {
    eval_with_marking(e, b, s, None)
}

/// Like [`eval_expr`], additionally giving `tokens(...)` a marking to read.
pub fn eval_with_marking(
    e: &TExpr,
    b: &Binding,
    s: &GlobalStore,
    marking: Option<&[Multiset<Value>]>,
) -> Result<Value, EvalError> {
    let ev = Evaluator { binding: b, store: s, marking };
    ev.eval(e, &mut Vec::new())
}

/// An absent guard is true.
pub fn eval_guard(g: Option<&TExpr>, b: &Binding, s: &GlobalStore) -> Result<bool, EvalError> {
    match g {
        None => Ok(true),
        Some(g) => match eval_expr(g, b, s)? {
            Value::Bool(v) => Ok(v),
            other => Err(EvalError::Type(format!("guard evaluated to {other}"))),
        },
    }
}

/// Next unused pointer name: one past the largest numeric name in the store.
/// Pointers are never deleted, so names are never reused within a run.
pub fn fresh_pointer(s: &GlobalStore) -> String {
    s.keys().filter_map(|k| k.parse::<u64>().ok()).max().map_or(0, |n| n + 1).to_string()
}

/// `o(θ(t))(s)`: runs the actions in order and returns the new store together
/// with the binding extended by freshly allocated pointers. Each action's
/// expression sees the effects of the actions before it.
pub fn apply_operator(ops: &[TAction], b: &Binding, s: &GlobalStore) -> Result<(GlobalStore, Binding), EvalError> {
    let mut store = s.clone();
    let mut binding = b.clone();
    for op in ops {
        match op {
            TAction::Alloc { var, value, ty } => {
                let v = eval_expr(value, &binding, &store)?;
                let name = fresh_pointer(&store);
                if !v.conforms(ty) {
                    return Err(EvalError::Assignment { pointer: name, expected: ty.to_string(), value: v.to_string() });
                }
                store.insert(name.clone(), v);
                binding.insert(var.clone(), Value::Pointer(name));
            }
            TAction::Set { target, path, value, ty } => {
                let v = eval_expr(value, &binding, &store)?;
                let pointer = resolve_target(target, &binding)?;
                if !v.conforms(ty) {
                    return Err(EvalError::Assignment { pointer, expected: ty.to_string(), value: v.to_string() });
                }
                *slot(&mut store, &pointer, path)? = v;
            }
            TAction::Append { target, path, value } => {
                let v = eval_expr(value, &binding, &store)?;
                let pointer = resolve_target(target, &binding)?;
                match slot(&mut store, &pointer, path)? {
                    Value::List(items) => items.push(v),
                    other => return Err(EvalError::Type(format!("cannot append to {}", other.kind()))),
                }
            }
            TAction::Insert { target, path, value } => {
                let v = eval_expr(value, &binding, &store)?;
                let pointer = resolve_target(target, &binding)?;
                match slot(&mut store, &pointer, path)? {
                    Value::Set(items) => {
                        items.insert(v);
                    }
                    other => return Err(EvalError::Type(format!("cannot insert into {}", other.kind()))),
                }
            }
        }
    }
    Ok((store, binding))
}

fn resolve_target(target: &Target, b: &Binding) -> Result<String, EvalError> {
    match target {
        Target::Pointer(p) => Ok(p.clone()),
        Target::Var(v) => match b.get(v) {
            Some(Value::Pointer(p)) => Ok(p.clone()),
            Some(other) => Err(EvalError::Type(format!("`{v}` holds {other}, not a pointer"))),
            None => Err(EvalError::Unbound(v.clone())),
        },
    }
}

fn slot<'a>(store: &'a mut GlobalStore, pointer: &str, path: &[String]) -> Result<&'a mut Value, EvalError> {
    let mut cur = store.get_mut(pointer).ok_or_else(|| EvalError::Dangling(pointer.to_owned()))?;
    for f in path {
        cur = match cur {
            Value::Record(fs) => fs.get_mut(f).ok_or_else(|| EvalError::Type(format!("no field `{f}`")))?,
            other => return Err(EvalError::Type(format!("cannot select `{f}` of {}", other.kind()))),
        };
    }
    Ok(cur)
}

struct Evaluator<'a> {
    binding: &'a Binding,
    store: &'a GlobalStore,
    marking: Option<&'a [Multiset<Value>]>,
}

fn int(v: &Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(*n),
        other => Err(EvalError::Type(format!("expected int, found {}", other.kind()))),
    }
}

fn boolean(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(EvalError::Type(format!("expected bool, found {}", other.kind()))),
    }
}

fn items(v: &Value) -> Result<Vec<&Value>, EvalError> {
    match v {
        Value::Set(s) => Ok(s.iter().collect()),
        Value::List(l) => Ok(l.iter().collect()),
        other => Err(EvalError::Type(format!("expected a collection, found {}", other.kind()))),
    }
}

fn bind(p: &Pattern, v: &Value, locals: &mut Vec<(String, Value)>) -> Result<(), EvalError> {
    match (p, v) {
        (Pattern::Wildcard, _) => Ok(()),
        (Pattern::Bind(n), v) => {
            locals.push((n.clone(), v.clone()));
            Ok(())
        }
        (Pattern::Tuple(ps), Value::Tuple(vs)) if ps.len() == vs.len() => {
            ps.iter().zip(vs).try_for_each(|(p, v)| bind(p, v, locals))
        }
        (_, v) => Err(EvalError::Type(format!("pattern does not match {v}"))),
    }
}

impl Evaluator<'_> {
    fn eval(&self, e: &TExpr, locals: &mut Vec<(String, Value)>) -> Result<Value, EvalError> {
        Ok(match e {
            TExpr::Const(v) => v.clone(),
            TExpr::Var(v) => self.binding.get(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone()))?,
            TExpr::Local(v) => locals
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, x)| x.clone())
                .ok_or_else(|| EvalError::Unbound(v.clone()))?,
            TExpr::Deref(inner) => match self.eval(inner, locals)? {
                Value::Pointer(p) => self.store.get(&p).cloned().ok_or(EvalError::Dangling(p))?,
                other => return Err(EvalError::Type(format!("cannot dereference {}", other.kind()))),
            },
            TExpr::Tuple(es) => Value::Tuple(es.iter().map(|e| self.eval(e, locals)).collect::<Result<_, _>>()?),
            TExpr::Set(es) => Value::Set(es.iter().map(|e| self.eval(e, locals)).collect::<Result<_, _>>()?),
            TExpr::List(es) => Value::List(es.iter().map(|e| self.eval(e, locals)).collect::<Result<_, _>>()?),
            TExpr::Record(fs) => Value::Record(
                fs.iter().map(|(k, e)| Ok((k.clone(), self.eval(e, locals)?))).collect::<Result<_, EvalError>>()?,
            ),
            TExpr::Field(inner, f) => match self.eval(inner, locals)? {
                Value::Record(mut fs) => fs.remove(f).ok_or_else(|| EvalError::Type(format!("no field `{f}`")))?,
                other => return Err(EvalError::Type(format!("cannot select `{f}` of {}", other.kind()))),
            },
            TExpr::Index(inner, i) => match self.eval(inner, locals)? {
                Value::Tuple(mut vs) if *i < vs.len() => vs.swap_remove(*i),
                other => return Err(EvalError::Type(format!("cannot take component {i} of {other}"))),
            },
            TExpr::Unary(UnOp::Not, inner) => Value::Bool(!boolean(&self.eval(inner, locals)?)?),
            TExpr::Unary(UnOp::Neg, inner) => {
                Value::Int(int(&self.eval(inner, locals)?)?.checked_neg().ok_or(EvalError::Overflow)?)
            }
            TExpr::Binary(op, l, r) => self.binary(*op, l, r, locals)?,
            TExpr::If(c, a, b) => {
                if boolean(&self.eval(c, locals)?)? {
                    self.eval(a, locals)?
                } else {
                    self.eval(b, locals)?
                }
            }
            TExpr::Len(inner) => {
                let n = match self.eval(inner, locals)? {
                    Value::Set(s) => s.len(),
                    Value::List(l) => l.len(),
                    Value::Str(s) => s.chars().count(),
                    other => return Err(EvalError::Type(format!("cannot take the length of {}", other.kind()))),
                };
                Value::Int(i64::try_from(n).map_err(|_| EvalError::Overflow)?)
            }
            TExpr::Tokens(places) => {
                let marking = self.marking.ok_or(EvalError::NoMarking)?;
                let mut out = Vec::new();
                for &p in places {
                    for (v, n) in marking[p].iter() {
                        for _ in 0..*n {
                            out.push(v.clone());
                        }
                    }
                }
                Value::List(out)
            }
            TExpr::Quant { q, pattern, domain, body } => {
                let dom = self.eval(domain, locals)?;
                let want = *q == Quantifier::Exists;
                for v in items(&dom)? {
                    let mark = locals.len();
                    bind(pattern, v, locals)?;
                    let r = self.eval(body, locals);
                    locals.truncate(mark);
                    if boolean(&r?)? == want {
                        return Ok(Value::Bool(want));
                    }
                }
                Value::Bool(!want)
            }
        })
    }

    fn binary(&self, op: BinOp, l: &TExpr, r: &TExpr, locals: &mut Vec<(String, Value)>) -> Result<Value, EvalError> {
        use BinOp::*;
        if matches!(op, And | Or) {
            let a = boolean(&self.eval(l, locals)?)?;
            if a == (op == Or) {
                return Ok(Value::Bool(a));
            }
            return Ok(Value::Bool(boolean(&self.eval(r, locals)?)?));
        }
        let a = self.eval(l, locals)?;
        let b = self.eval(r, locals)?;
        let arith = |f: fn(i64, i64) -> Option<i64>| -> Result<Value, EvalError> {
            Ok(Value::Int(f(int(&a)?, int(&b)?).ok_or(EvalError::Overflow)?))
        };
        Ok(match op {
            Add => arith(i64::checked_add)?,
            Sub => arith(i64::checked_sub)?,
            Mul => arith(i64::checked_mul)?,
            Div | Mod => {
                let (x, y) = (int(&a)?, int(&b)?);
                if y == 0 {
                    return Err(EvalError::DivisionByZero);
                }
                let r = if op == Div { x.checked_div(y) } else { x.checked_rem(y) };
                Value::Int(r.ok_or(EvalError::Overflow)?)
            }
            Lt => Value::Bool(int(&a)? < int(&b)?),
            Le => Value::Bool(int(&a)? <= int(&b)?),
            Gt => Value::Bool(int(&a)? > int(&b)?),
            Ge => Value::Bool(int(&a)? >= int(&b)?),
            Eq => Value::Bool(a == b),
            Ne => Value::Bool(a != b),
            In => Value::Bool(match &b {
                Value::Set(s) => s.contains(&a),
                Value::List(l) => l.contains(&a),
                other => return Err(EvalError::Type(format!("`in` on {}", other.kind()))),
            }),
            Subset => {
                let whole: BTreeSet<&Value> = items(&b)?.into_iter().collect();
                Value::Bool(items(&a)?.into_iter().all(|v| whole.contains(v)))
            }
            Union => match (a, b) {
                (Value::Set(mut x), Value::Set(y)) => {
                    x.extend(y);
                    Value::Set(x)
                }
                (x, _) => return Err(EvalError::Type(format!("`union` on {}", x.kind()))),
            },
            Concat => match (a, b) {
                (Value::List(mut x), Value::List(y)) => {
                    x.extend(y);
                    Value::List(x)
                }
                (Value::Str(x), Value::Str(y)) => Value::Str(x + &y),
                (x, _) => return Err(EvalError::Type(format!("`++` on {}", x.kind()))),
            },
            And | Or => unreachable!("handled above"),
        })
    }
}
