//! Static checking and lowering of a parsed model into a typed IR.
//!
//! Reference-typed names are implicitly dereferenced wherever a plain value
//! is expected; in a position whose expected type is `Ref T` they denote the
//! pointer itself. `ref(w)` always denotes the pointer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::eval::{eval_expr, eval_with_marking, EvalError};
use super::types::TypeExpr;
use super::value::Value;
use super::{Binding, GlobalStore};
use crate::multiset::Multiset;
use crate::net::NetError;
use crate::{Marking, Net};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TypeError {
    pub pos: Pos,
    /// What was being checked, e.g. "arc `a` -> `t`".
    pub context: String,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.context.is_empty() {
            write!(f, "{}: {}", self.pos, self.message)
        } else {
            write!(f, "{}: in {}: {}", self.pos, self.context, self.message)
        }
    }
}

/// Typed expression. Constants are folded and every dereference is explicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TExpr {
    Const(Value),
    /// Transition variable, looked up in the binding.
    Var(String),
    /// Quantifier variable.
    Local(String),
    /// Store lookup of the pointer the inner expression evaluates to.
    Deref(Box<TExpr>),
    Tuple(Vec<TExpr>),
    Set(Vec<TExpr>),
    List(Vec<TExpr>),
    Record(Vec<(String, TExpr)>),
    Field(Box<TExpr>, String),
    Index(Box<TExpr>, usize),
    Unary(UnOp, Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    If(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Len(Box<TExpr>),
    /// Tokens of the given places (by index), with multiplicity.
    Tokens(Vec<usize>),
    Quant { q: Quantifier, pattern: Pattern, domain: Box<TExpr>, body: Box<TExpr> },
}

impl TExpr {
    /// Transition variables occurring anywhere inside.
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            TExpr::Var(v) => {
                out.insert(v.clone());
            }
            TExpr::Const(_) | TExpr::Local(_) | TExpr::Tokens(_) => {}
            TExpr::Deref(e) | TExpr::Field(e, _) | TExpr::Index(e, _) | TExpr::Unary(_, e) | TExpr::Len(e) => e.vars(out),
            TExpr::Tuple(es) | TExpr::Set(es) | TExpr::List(es) => es.iter().for_each(|e| e.vars(out)),
            TExpr::Record(fs) => fs.iter().for_each(|(_, e)| e.vars(out)),
            TExpr::Binary(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            TExpr::If(a, b, c) => {
                a.vars(out);
                b.vars(out);
                c.vars(out);
            }
            TExpr::Quant { domain, body, .. } => {
                domain.vars(out);
                body.vars(out);
            }
        }
    }

    /// Variables a token match can bind: those reachable from the root
    /// through tuple and record constructors only.
    pub fn pattern_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            TExpr::Var(v) => {
                out.insert(v.clone());
            }
            TExpr::Tuple(es) => es.iter().for_each(|e| e.pattern_vars(out)),
            TExpr::Record(fs) => fs.iter().for_each(|(_, e)| e.pattern_vars(out)),
            _ => {}
        }
    }

    pub fn is_closed(&self) -> bool {
        let mut vs = BTreeSet::new();
        self.vars(&mut vs);
        vs.is_empty()
    }
}

/// Store location written by an action: a reference variable or a declared pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Var(String),
    Pointer(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TAction {
    /// Replace the value at `path`; `ty` is the declared type there.
    Set { target: Target, path: Vec<String>, value: TExpr, ty: TypeExpr },
    Append { target: Target, path: Vec<String>, value: TExpr },
    Insert { target: Target, path: Vec<String>, value: TExpr },
    Alloc { var: String, value: TExpr, ty: TypeExpr },
}

impl TAction {
    pub fn target(&self) -> Option<&Target> {
        match self {
            TAction::Set { target, .. } | TAction::Append { target, .. } | TAction::Insert { target, .. } => Some(target),
            TAction::Alloc { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TArc {
    pub place: usize,
    pub entries: Vec<(u64, TExpr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TTransition {
    pub name: String,
    pub guard: Option<TExpr>,
    /// Empty means `skip`.
    pub ops: Vec<TAction>,
    pub inputs: Vec<TArc>,
    pub outputs: Vec<TArc>,
    /// Variables bound by matching input tokens, with their types.
    pub vars: BTreeMap<String, TypeExpr>,
    /// Reference variables bound by `alloc` during firing.
    pub alloc_vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TPlace {
    pub name: String,
    pub ty: TypeExpr,
    pub initial: Multiset<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TPointer {
    pub name: String,
    /// Type of the value pointed at.
    pub ty: TypeExpr,
    pub init: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TInvariant {
    pub name: String,
    pub expr: TExpr,
}

/// A checked model: places with types, transitions with guards, operators
/// and arc expressions, declared pointers with initial values, invariants.
#[derive(Debug, Clone)]
pub struct TypedModel {
    pub name: Option<String>,
    pub ast: ModelAst,
    pub types: BTreeMap<String, TypeExpr>,
    pub consts: BTreeMap<String, (TypeExpr, Value)>,
    pub vars: BTreeMap<String, TypeExpr>,
    pub pointers: Vec<TPointer>,
    pub places: Vec<TPlace>,
    pub transitions: Vec<TTransition>,
    pub invariants: Vec<TInvariant>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
}

impl TypedModel {
    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.place_index.get(name).copied()
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transition_index.get(name).copied()
    }

    pub fn invariant(&self, name: &str) -> Option<&TInvariant> {
        self.invariants.iter().find(|i| i.name == name)
    }

    pub fn initial_marking(&self) -> Vec<Multiset<Value>> {
        self.places.iter().map(|p| p.initial.clone()).collect()
    }

    pub fn initial_store(&self) -> GlobalStore {
        self.pointers.iter().map(|p| (p.name.clone(), p.init.clone())).collect()
    }

    /// No declared pointers, no reference types in places, no operators.
    pub fn is_pointer_free(&self) -> bool {
        self.pointers.is_empty()
            && self.places.iter().all(|p| !p.ty.contains_ref())
            && self.transitions.iter().all(|t| t.ops.is_empty())
    }

    /// Canonical source text of the model.
    pub fn source(&self) -> String {
        super::printer::print_model(&self.ast)
    }

    /// The underlying place/transition structure; arc weights are the total
    /// multiplicities of the inscriptions.
    pub fn skeleton(&self) -> Result<Net, NetError> {
        let mut b = Net::builder();
        for p in &self.places {
            b = b.place(&p.name);
        }
        for t in &self.transitions {
            b = b.transition(&t.name);
        }
        for t in &self.transitions {
            for arc in &t.inputs {
                let w: u64 = arc.entries.iter().map(|(n, _)| n).sum();
                b = b.weighted_arc(&self.places[arc.place].name, &t.name, w);
            }
            for arc in &t.outputs {
                let w: u64 = arc.entries.iter().map(|(n, _)| n).sum();
                b = b.weighted_arc(&t.name, &self.places[arc.place].name, w);
            }
        }
        b.build()
    }

    /// The classical net this model denotes when every place holds unit
    /// tokens, every inscription is a unit multiset, and there are no guards
    /// or operators.
    pub fn classical(&self) -> Result<(Net, Marking), String> {
        if let Some(p) = self.places.iter().find(|p| p.ty != TypeExpr::Unit) {
            return Err(format!("place `{}` has type {}, not Unit", p.name, p.ty));
        }
        for t in &self.transitions {
            if t.guard.is_some() || !t.ops.is_empty() {
                return Err(format!("transition `{}` has a guard or operator", t.name));
            }
            let constant = t.inputs.iter().chain(&t.outputs).all(|a| a.entries.iter().all(|(_, e)| *e == TExpr::Const(Value::Unit)));
            if !constant {
                return Err(format!("transition `{}` has a non-constant inscription", t.name));
            }
        }
        let net = self.skeleton().map_err(|e| e.to_string())?;
        let marking = net
            .marking(self.places.iter().map(|p| (p.name.as_str(), p.initial.count(&Value::Unit))))
            .map_err(|e| e.to_string())?;
        Ok((net, marking))
    }
}

/// Checks a parsed model, reporting every violation found.
pub fn typecheck(ast: &ModelAst) -> Result<TypedModel, Vec<TypeError>> {
    let mut c = Checker::default();
    c.run(ast);
    if !c.errors.is_empty() {
        return Err(c.errors);
    }
    let place_index = c.places.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
    let transition_index = c.transitions.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect();
    Ok(TypedModel {
        name: ast.name.clone(),
        ast: ast.clone(),
        types: c.types,
        consts: c.consts,
        vars: c.vars,
        pointers: c.pointers,
        places: c.places,
        transitions: c.transitions,
        invariants: c.invariants,
        place_index,
        transition_index,
    })
}

#[derive(Clone, Copy)]
struct Scope {
    vars: bool,
    tokens: bool,
}

const CLOSED: Scope = Scope { vars: false, tokens: false };
const OPEN: Scope = Scope { vars: true, tokens: false };
const STATE: Scope = Scope { vars: false, tokens: true };

#[derive(Default)]
struct Checker {
    types: BTreeMap<String, TypeExpr>,
    consts: BTreeMap<String, (TypeExpr, Value)>,
    vars: BTreeMap<String, TypeExpr>,
    pointers: Vec<TPointer>,
    pointer_types: HashMap<String, TypeExpr>,
    places: Vec<TPlace>,
    place_lookup: HashMap<String, usize>,
    transitions: Vec<TTransition>,
    invariants: Vec<TInvariant>,
    errors: Vec<TypeError>,
    locals: Vec<(String, TypeExpr)>,
}

type Checked = Result<(TExpr, TypeExpr), String>;

fn is_ref(t: &TypeExpr) -> bool {
    t.is_ref()
}

impl Checker {
    fn err(&mut self, pos: Pos, context: impl Into<String>, message: impl Into<String>) {
        self.errors.push(TypeError { pos, context: context.into(), message: message.into() });
    }

    fn resolve(&self, ty: &TypeExpr) -> Result<TypeExpr, String> {
        self.resolve_depth(ty, 0)
    }

    fn resolve_depth(&self, ty: &TypeExpr, depth: usize) -> Result<TypeExpr, String> {
        if depth > 64 {
            return Err("type aliases nest too deeply".into());
        }
        let r = |t: &TypeExpr| self.resolve_depth(t, depth + 1);
        Ok(match ty {
            TypeExpr::Named(n) => self.types.get(n).cloned().ok_or_else(|| format!("unknown type `{n}`"))?,
            TypeExpr::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(r).collect::<Result<_, _>>()?),
            TypeExpr::Set(t) => TypeExpr::set(r(t)?),
            TypeExpr::List(t) => TypeExpr::list(r(t)?),
            TypeExpr::Record(fs) if fs.is_empty() => return Err("record types need at least one field".into()),
            TypeExpr::Record(fs) => {
                TypeExpr::Record(fs.iter().map(|(k, t)| Ok((k.clone(), r(t)?))).collect::<Result<_, String>>()?)
            }
            TypeExpr::Ref(t) => {
                let inner = r(t)?;
                if inner.is_ref() {
                    return Err("pointers to pointers are not allowed".into());
                }
                TypeExpr::reference(inner)
            }
            other => other.clone(),
        })
    }

    fn run(&mut self, ast: &ModelAst) {
        for d in &ast.types {
            match self.resolve(&d.ty) {
                Ok(t) => {
                    self.types.insert(d.name.clone(), t);
                }
                Err(m) => self.err(d.pos, format!("type `{}`", d.name), m),
            }
        }
        let empty_store = GlobalStore::new();
        for d in &ast.consts {
            let ctx = format!("constant `{}`", d.name);
            let ty = match self.resolve(&d.ty) {
                Ok(t) if t.contains_ref() => {
                    self.err(d.pos, ctx, "constants cannot hold pointers");
                    continue;
                }
                Ok(t) => t,
                Err(m) => {
                    self.err(d.pos, ctx, m);
                    continue;
                }
            };
            match self.check_against(&d.value, &ty, CLOSED) {
                Ok(e) => match eval_expr(&e, &Binding::new(), &empty_store) {
                    Ok(v) => {
                        self.consts.insert(d.name.clone(), (ty, v));
                    }
                    Err(err) => self.err(d.pos, ctx, err.to_string()),
                },
                Err(m) => self.err(d.pos, ctx, m),
            }
        }
        for d in &ast.pointers {
            match self.resolve(&d.ty) {
                Ok(t) if t.is_ref() => self.err(d.pos, format!("pointer `{}`", d.name), "pointers to pointers are not allowed"),
                Ok(t) => {
                    self.pointer_types.insert(d.name.clone(), t);
                }
                Err(m) => self.err(d.pos, format!("pointer `{}`", d.name), m),
            }
        }
        let mut store = GlobalStore::new();
        for d in &ast.pointers {
            let Some(ty) = self.pointer_types.get(&d.name).cloned() else { continue };
            let ctx = format!("pointer `{}`", d.name);
            match self.check_against(&d.init, &ty, CLOSED) {
                Ok(e) => match eval_expr(&e, &Binding::new(), &store) {
                    Ok(v) => {
                        store.insert(d.name.clone(), v.clone());
                        self.pointers.push(TPointer { name: d.name.clone(), ty, init: v });
                    }
                    Err(err) => self.err(d.pos, ctx, err.to_string()),
                },
                Err(m) => self.err(d.pos, ctx, m),
            }
        }
        for d in &ast.vars {
            match self.resolve(&d.ty) {
                Ok(t) => {
                    self.vars.insert(d.name.clone(), t);
                }
                Err(m) => self.err(d.pos, format!("variable `{}`", d.name), m),
            }
        }
        for d in &ast.places {
            let ctx = format!("place `{}`", d.name);
            let ty = match d.ty.as_ref().map(|t| self.resolve(t)).unwrap_or(Ok(TypeExpr::Unit)) {
                Ok(t) => t,
                Err(m) => {
                    self.err(d.pos, ctx.clone(), m);
                    TypeExpr::Unknown
                }
            };
            let mut initial = Multiset::new();
            if let (Some(init), false) = (&d.initial, ty == TypeExpr::Unknown) {
                for (n, e) in init.entries() {
                    match self.check_against(e, &ty, CLOSED) {
                        Ok(te) => match eval_expr(&te, &Binding::new(), &store) {
                            Ok(v) => {
                                if initial.insert_n(v, n).is_err() {
                                    self.err(d.pos, ctx.clone(), "initial multiplicity overflows");
                                }
                            }
                            Err(err) => self.err(d.pos, ctx.clone(), err.to_string()),
                        },
                        Err(m) => self.err(d.pos, ctx.clone(), m),
                    }
                }
            }
            self.place_lookup.insert(d.name.clone(), self.places.len());
            self.places.push(TPlace { name: d.name.clone(), ty, initial });
        }
        let transition_names: HashMap<&str, usize> =
            ast.transitions.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
        let mut inputs: Vec<Vec<&ArcDecl>> = vec![Vec::new(); ast.transitions.len()];
        let mut outputs: Vec<Vec<&ArcDecl>> = vec![Vec::new(); ast.transitions.len()];
        for a in &ast.arcs {
            let ctx = format!("arc `{}` -> `{}`", a.from, a.to);
            match (
                self.place_lookup.contains_key(&a.from),
                transition_names.get(a.from.as_str()),
                self.place_lookup.contains_key(&a.to),
                transition_names.get(a.to.as_str()),
            ) {
                (true, _, _, Some(&t)) => inputs[t].push(a),
                (_, Some(&t), true, _) => outputs[t].push(a),
                (false, None, _, _) => self.err(a.pos, ctx, format!("unknown node `{}`", a.from)),
                (_, _, false, None) => self.err(a.pos, ctx, format!("unknown node `{}`", a.to)),
                _ => self.err(a.pos, ctx, "arcs must connect a place and a transition"),
            }
        }
        for (i, d) in ast.transitions.iter().enumerate() {
            let t = self.transition(d, &inputs[i], &outputs[i]);
            self.transitions.push(t);
        }
        for d in &ast.invariants {
            let ctx = format!("invariant `{}`", d.name);
            match self.check_against(&d.expr, &TypeExpr::Bool, STATE) {
                Ok(e) => self.invariants.push(TInvariant { name: d.name.clone(), expr: e }),
                Err(m) => self.err(d.pos, ctx, m),
            }
        }
    }

    fn arc(&mut self, a: &ArcDecl, place: usize, ctx: &str) -> TArc {
        let ty = self.places[place].ty.clone();
        let default = Inscription::Single(Expr::Unit);
        let ins = a.inscription.as_ref().unwrap_or(&default);
        let mut entries = Vec::new();
        for (n, e) in ins.entries() {
            if n == 0 {
                self.err(a.pos, ctx, "multiplicities must be positive");
                continue;
            }
            match self.check_against(e, &ty, OPEN) {
                Ok(te) => entries.push((n, te)),
                Err(m) => self.err(a.pos, ctx, m),
            }
        }
        TArc { place, entries }
    }

    fn unbindable(&mut self, pos: Pos, ctx: &str, used: &BTreeSet<String>, bound: &BTreeSet<String>) {
        for v in used.difference(bound) {
            self.err(pos, ctx, format!("unbindable variable `{v}`: it does not occur in an input pattern"));
        }
    }

    fn transition(&mut self, d: &TransitionDecl, ins: &[&ArcDecl], outs: &[&ArcDecl]) -> TTransition {
        let tctx = format!("transition `{}`", d.name);
        let mut inputs: Vec<TArc> = Vec::new();
        for a in ins {
            let ctx = format!("arc `{}` -> `{}`", a.from, a.to);
            let arc = self.arc(a, self.place_lookup[&a.from], &ctx);
            merge_arc(&mut inputs, arc);
        }
        let mut bound = BTreeSet::new();
        for arc in &inputs {
            for (_, e) in &arc.entries {
                e.pattern_vars(&mut bound);
            }
        }
        for a in ins {
            let pl = self.place_lookup[&a.from];
            let Some(arc) = inputs.iter().find(|x| x.place == pl) else { continue };
            let mut used = BTreeSet::new();
            arc.entries.iter().for_each(|(_, e)| e.vars(&mut used));
            let ctx = format!("arc `{}` -> `{}`", a.from, a.to);
            self.unbindable(a.pos, &ctx, &used, &bound);
        }
        let guard = d.guard.as_ref().and_then(|g| match self.check_against(g, &TypeExpr::Bool, OPEN) {
            Ok(e) => {
                let mut used = BTreeSet::new();
                e.vars(&mut used);
                self.unbindable(d.pos, &format!("guard of {tctx}"), &used, &bound);
                Some(e)
            }
            Err(m) => {
                self.err(d.pos, format!("guard of {tctx}"), m);
                None
            }
        });
        let mut available = bound.clone();
        let mut ops = Vec::new();
        let mut alloc_vars = Vec::new();
        for action in d.op.iter().flatten() {
            match self.action(action, &available) {
                Ok(Some(a)) => {
                    let mut used = BTreeSet::new();
                    match &a {
                        TAction::Set { value, .. } | TAction::Append { value, .. } | TAction::Insert { value, .. } => {
                            value.vars(&mut used)
                        }
                        TAction::Alloc { value, .. } => value.vars(&mut used),
                    }
                    if let Some(Target::Var(v)) = a.target() {
                        used.insert(v.clone());
                    }
                    self.unbindable(d.pos, &format!("operator of {tctx}"), &used, &available);
                    if let TAction::Alloc { var, .. } = &a {
                        if !available.insert(var.clone()) {
                            self.err(d.pos, format!("operator of {tctx}"), format!("`{var}` is already bound"));
                        }
                        alloc_vars.push(var.clone());
                    }
                    ops.push(a);
                }
                Ok(None) => {}
                Err(m) => self.err(d.pos, format!("operator of {tctx}"), m),
            }
        }
        let mut outputs: Vec<TArc> = Vec::new();
        for a in outs {
            let ctx = format!("arc `{}` -> `{}`", a.from, a.to);
            let arc = self.arc(a, self.place_lookup[&a.to], &ctx);
            let mut used = BTreeSet::new();
            arc.entries.iter().for_each(|(_, e)| e.vars(&mut used));
            self.unbindable(a.pos, &ctx, &used, &available);
            merge_arc(&mut outputs, arc);
        }
        let vars = bound.iter().filter_map(|v| self.vars.get(v).map(|t| (v.clone(), t.clone()))).collect();
        TTransition { name: d.name.clone(), guard, ops, inputs, outputs, vars, alloc_vars }
    }

    /// Resolves the target of a store action to its location and the type
    /// found at the end of `path`.
    fn target(&self, target: &str, path: &[String], available: &BTreeSet<String>) -> Result<(Target, TypeExpr), String> {
        let (t, mut ty) = if let Some(ty) = self.vars.get(target) {
            let TypeExpr::Ref(inner) = ty else {
                return Err(format!("`{target}` is not a reference variable"));
            };
            if !available.contains(target) {
                return Err(format!("unbindable variable `{target}`: it does not occur in an input pattern"));
            }
            (Target::Var(target.to_owned()), (**inner).clone())
        } else if let Some(ty) = self.pointer_types.get(target) {
            (Target::Pointer(target.to_owned()), ty.clone())
        } else {
            return Err(format!("unknown pointer `{target}`"));
        };
        for f in path {
            ty = match ty {
                TypeExpr::Record(fs) => fs.get(f).cloned().ok_or_else(|| format!("no field `{f}` in the record"))?,
                other => return Err(format!("cannot select field `{f}` of {other}")),
            };
        }
        Ok((t, ty))
    }

    fn action(&mut self, a: &Action, available: &BTreeSet<String>) -> Result<Option<TAction>, String> {
        Ok(Some(match a {
            Action::Skip => return Ok(None),
            Action::Set { target, path, value } => {
                let (t, ty) = self.target(target, path, available)?;
                let value = self.check_against(value, &ty, OPEN)?;
                TAction::Set { target: t, path: path.clone(), value, ty }
            }
            Action::Append { target, path, value } => {
                let (t, ty) = self.target(target, path, available)?;
                let TypeExpr::List(elem) = ty else {
                    return Err(format!("`append` needs a list, found {ty}"));
                };
                TAction::Append { target: t, path: path.clone(), value: self.check_against(value, &elem, OPEN)? }
            }
            Action::Insert { target, path, value } => {
                let (t, ty) = self.target(target, path, available)?;
                let TypeExpr::Set(elem) = ty else {
                    return Err(format!("`insert` needs a set, found {ty}"));
                };
                TAction::Insert { target: t, path: path.clone(), value: self.check_against(value, &elem, OPEN)? }
            }
            Action::Alloc { var, value } => {
                let Some(TypeExpr::Ref(inner)) = self.vars.get(var).cloned() else {
                    return Err(format!("`alloc` needs a declared reference variable, `{var}` is not one"));
                };
                let value = self.check_against(value, &inner, OPEN)?;
                TAction::Alloc { var: var.clone(), value, ty: *inner }
            }
        }))
    }

    fn check_against(&mut self, e: &Expr, expected: &TypeExpr, scope: Scope) -> Result<TExpr, String> {
        let (te, ty) = self.check(e, Some(expected), scope)?;
        match ty.unify(expected) {
            Some(u) if u == *expected => Ok(te),
            _ => Err(format!("expected {expected}, found {ty} in `{}`", super::printer::print_expr(e))),
        }
    }

    fn name(&self, n: &str, scope: Scope) -> Result<(TExpr, TypeExpr), String> {
        if let Some((_, t)) = self.locals.iter().rev().find(|(l, _)| l == n) {
            return Ok((TExpr::Local(n.to_owned()), t.clone()));
        }
        if let Some(t) = self.vars.get(n) {
            if !scope.vars {
                return Err(format!("variable `{n}` cannot be used here"));
            }
            return Ok((TExpr::Var(n.to_owned()), t.clone()));
        }
        if let Some((t, v)) = self.consts.get(n) {
            return Ok((TExpr::Const(v.clone()), t.clone()));
        }
        if let Some(t) = self.pointer_types.get(n) {
            return Ok((TExpr::Const(Value::Pointer(n.to_owned())), TypeExpr::reference(t.clone())));
        }
        Err(format!("unknown name `{n}`"))
    }

    fn check(&mut self, e: &Expr, expected: Option<&TypeExpr>, scope: Scope) -> Checked {
        let wants_ref = expected.is_some_and(is_ref);
        let auto_deref = |(te, ty): (TExpr, TypeExpr)| match ty {
            TypeExpr::Ref(inner) if !wants_ref => (TExpr::Deref(Box::new(te)), *inner),
            ty => (te, ty),
        };
        Ok(match e {
            Expr::Unit => (TExpr::Const(Value::Unit), TypeExpr::Unit),
            Expr::Bool(b) => (TExpr::Const(Value::Bool(*b)), TypeExpr::Bool),
            Expr::Int(n) => (TExpr::Const(Value::Int(*n)), TypeExpr::Int),
            Expr::Str(s) => (TExpr::Const(Value::Str(s.clone())), TypeExpr::Str),
            Expr::Name(n) => auto_deref(self.name(n, scope)?),
            Expr::PointerLit(p) => {
                let t = self.pointer_types.get(p).ok_or_else(|| format!("unknown pointer `@{p}`"))?;
                auto_deref((TExpr::Const(Value::Pointer(p.clone())), TypeExpr::reference(t.clone())))
            }
            Expr::RefOf(n) => {
                let (te, ty) = self.name(n, scope)?;
                if !ty.is_ref() {
                    return Err(format!("`ref({n})` needs a reference, `{n}` has type {ty}"));
                }
                (te, ty)
            }
            Expr::Tuple(es) => {
                let exp: Vec<Option<&TypeExpr>> = match expected {
                    Some(TypeExpr::Tuple(ts)) if ts.len() == es.len() => ts.iter().map(Some).collect(),
                    _ => vec![None; es.len()],
                };
                let mut tes = Vec::new();
                let mut tys = Vec::new();
                for (e, x) in es.iter().zip(exp) {
                    let (te, ty) = self.check(e, x, scope)?;
                    tes.push(te);
                    tys.push(ty);
                }
                (TExpr::Tuple(tes), TypeExpr::Tuple(tys))
            }
            Expr::Set(es) | Expr::List(es) => {
                let elem_exp = match expected {
                    Some(TypeExpr::Set(t)) | Some(TypeExpr::List(t)) => Some(&**t),
                    _ => None,
                };
                let mut elem = TypeExpr::Unknown;
                let mut tes = Vec::new();
                for x in es {
                    let (te, ty) = self.check(x, elem_exp, scope)?;
                    elem = elem.unify(&ty).ok_or_else(|| format!("collection mixes {elem} and {ty}"))?;
                    tes.push(te);
                }
                if matches!(e, Expr::Set(_)) {
                    (TExpr::Set(tes), TypeExpr::set(elem))
                } else {
                    (TExpr::List(tes), TypeExpr::list(elem))
                }
            }
            Expr::Record(fs) => {
                let mut tes = Vec::new();
                let mut tys = BTreeMap::new();
                for (k, x) in fs {
                    let exp = match expected {
                        Some(TypeExpr::Record(r)) => r.get(k),
                        _ => None,
                    };
                    let (te, ty) = self.check(x, exp, scope)?;
                    tes.push((k.clone(), te));
                    tys.insert(k.clone(), ty);
                }
                (TExpr::Record(tes), TypeExpr::Record(tys))
            }
            Expr::Field(inner, f) => {
                let (te, ty) = self.deref_value(inner, scope)?;
                match ty {
                    TypeExpr::Record(fs) => {
                        let t = fs.get(f).cloned().ok_or_else(|| format!("no field `{f}` in {}", TypeExpr::Record(fs)))?;
                        auto_deref((TExpr::Field(Box::new(te), f.clone()), t))
                    }
                    other => return Err(format!("cannot select field `{f}` of {other}")),
                }
            }
            Expr::Index(inner, i) => {
                let (te, ty) = self.deref_value(inner, scope)?;
                match ty {
                    TypeExpr::Tuple(ts) if *i < ts.len() => auto_deref((TExpr::Index(Box::new(te), *i), ts[*i].clone())),
                    other => return Err(format!("cannot take component {i} of {other}")),
                }
            }
            Expr::Unary(op, inner) => {
                let want = if *op == UnOp::Not { TypeExpr::Bool } else { TypeExpr::Int };
                let (te, ty) = self.check(inner, Some(&want), scope)?;
                if !fits(&ty, &want) {
                    return Err(format!("operator `{}` needs {want}, found {ty}", if *op == UnOp::Not { "!" } else { "-" }));
                }
                (TExpr::Unary(*op, Box::new(te)), want)
            }
            Expr::Binary(op, l, r) => self.binary(*op, l, r, scope)?,
            Expr::If(c, a, b) => {
                let (tc, ct) = self.check(c, Some(&TypeExpr::Bool), scope)?;
                if !fits(&ct, &TypeExpr::Bool) {
                    return Err(format!("condition must be Bool, found {ct}"));
                }
                let (ta, at) = self.check(a, expected, scope)?;
                let (tb, bt) = self.check(b, Some(&at), scope)?;
                let ty = at.unify(&bt).ok_or_else(|| format!("branches have types {at} and {bt}"))?;
                if ty.is_ref() {
                    return Err("conditional pointers are not allowed; pointers cannot be computed".into());
                }
                (TExpr::If(Box::new(tc), Box::new(ta), Box::new(tb)), ty)
            }
            Expr::Len(inner) => {
                let (te, ty) = self.check(inner, None, scope)?;
                if !matches!(ty, TypeExpr::Set(_) | TypeExpr::List(_) | TypeExpr::Str) {
                    return Err(format!("`len` needs a set, list or string, found {ty}"));
                }
                (TExpr::Len(Box::new(te)), TypeExpr::Int)
            }
            Expr::Tokens(places) => {
                if !scope.tokens {
                    return Err("`tokens(...)` may only be used in invariants".into());
                }
                let mut idx = Vec::new();
                let mut ty = TypeExpr::Unknown;
                for p in places {
                    let &i = self.place_lookup.get(p).ok_or_else(|| format!("unknown place `{p}`"))?;
                    let pt = &self.places[i].ty;
                    ty = ty.unify(pt).ok_or_else(|| format!("places in `tokens` have different types {ty} and {pt}"))?;
                    idx.push(i);
                }
                (TExpr::Tokens(idx), TypeExpr::list(ty))
            }
            Expr::Quant(q, pat, dom, body) => {
                let (td, dt) = self.check(dom, None, scope)?;
                let elem = match dt {
                    TypeExpr::Set(t) | TypeExpr::List(t) => *t,
                    other => return Err(format!("quantifier domain must be a set or list, found {other}")),
                };
                let mark = self.locals.len();
                let bound = self.bind_pattern(pat, &elem);
                let result = bound.and_then(|_| self.check(body, Some(&TypeExpr::Bool), scope));
                self.locals.truncate(mark);
                let (tb, bt) = result?;
                if !fits(&bt, &TypeExpr::Bool) {
                    return Err(format!("quantifier body must be Bool, found {bt}"));
                }
                (TExpr::Quant { q: *q, pattern: pat.clone(), domain: Box::new(td), body: Box::new(tb) }, TypeExpr::Bool)
            }
        })
    }

    /// Checks an expression whose value is inspected (field access,
    /// projection); references are followed.
    fn deref_value(&mut self, e: &Expr, scope: Scope) -> Checked {
        let (te, ty) = self.check(e, None, scope)?;
        Ok(match ty {
            TypeExpr::Ref(inner) => (TExpr::Deref(Box::new(te)), *inner),
            ty => (te, ty),
        })
    }

    fn bind_pattern(&mut self, p: &Pattern, ty: &TypeExpr) -> Result<(), String> {
        match (p, ty) {
            (Pattern::Wildcard, _) => Ok(()),
            (Pattern::Bind(n), t) => {
                self.locals.push((n.clone(), t.clone()));
                Ok(())
            }
            (Pattern::Tuple(ps), TypeExpr::Tuple(ts)) if ps.len() == ts.len() => {
                ps.iter().zip(ts).try_for_each(|(p, t)| self.bind_pattern(p, t))
            }
            (_, t) => Err(format!("pattern does not fit elements of type {t}")),
        }
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr, scope: Scope) -> Checked {
        use BinOp::*;
        let no_ptr = |t: &TypeExpr| {
            if t.is_ref() {
                Err(format!("operator `{}` cannot be applied to pointers", op.symbol()))
            } else {
                Ok(())
            }
        };
        let bx = |a: TExpr, b: TExpr| TExpr::Binary(op, Box::new(a), Box::new(b));
        Ok(match op {
            And | Or => {
                let (a, at) = self.check(l, Some(&TypeExpr::Bool), scope)?;
                let (b, bt) = self.check(r, Some(&TypeExpr::Bool), scope)?;
                if !fits(&at, &TypeExpr::Bool) || !fits(&bt, &TypeExpr::Bool) {
                    return Err(format!("operator `{}` needs Bool operands, found {at} and {bt}", op.symbol()));
                }
                (bx(a, b), TypeExpr::Bool)
            }
            Add | Sub | Mul | Div | Mod | Lt | Le | Gt | Ge => {
                let (a, at) = self.check(l, Some(&TypeExpr::Int), scope)?;
                let (b, bt) = self.check(r, Some(&TypeExpr::Int), scope)?;
                no_ptr(&at)?;
                no_ptr(&bt)?;
                if !fits(&at, &TypeExpr::Int) || !fits(&bt, &TypeExpr::Int) {
                    return Err(format!("operator `{}` needs Int operands, found {at} and {bt}", op.symbol()));
                }
                let ty = if matches!(op, Lt | Le | Gt | Ge) { TypeExpr::Bool } else { TypeExpr::Int };
                (bx(a, b), ty)
            }
            Eq | Ne => {
                let (a, at) = self.check(l, None, scope)?;
                let (b, bt) = self.check(r, Some(&at), scope)?;
                if at.unify(&bt).is_none() {
                    return Err(format!("cannot compare {at} with {bt}"));
                }
                (bx(a, b), TypeExpr::Bool)
            }
            In => {
                let (b, bt) = self.check(r, None, scope)?;
                let elem = match &bt {
                    TypeExpr::Set(t) | TypeExpr::List(t) => (**t).clone(),
                    other => return Err(format!("`in` needs a set or list on the right, found {other}")),
                };
                let (a, at) = self.check(l, Some(&elem), scope)?;
                if at.unify(&elem).is_none() {
                    return Err(format!("cannot look for {at} in {bt}"));
                }
                (bx(a, b), TypeExpr::Bool)
            }
            Subset | Union | Concat => {
                let (a, at) = self.check(l, None, scope)?;
                let (b, bt) = self.check(r, Some(&at), scope)?;
                no_ptr(&at)?;
                let ty = at.unify(&bt).ok_or_else(|| format!("operator `{}` mixes {at} and {bt}", op.symbol()))?;
                let ok = match op {
                    Subset => matches!(ty, TypeExpr::Set(_) | TypeExpr::List(_)),
                    Union => matches!(ty, TypeExpr::Set(_)),
                    _ => matches!(ty, TypeExpr::List(_) | TypeExpr::Str),
                };
                if !ok {
                    return Err(format!("operator `{}` cannot be applied to {ty}", op.symbol()));
                }
                (bx(a, b), if op == Subset { TypeExpr::Bool } else { ty })
            }
        })
    }
}

/// `ty` can stand where `want` is expected. Elements of empty literals
/// have unknown type and fit anywhere.
fn fits(ty: &TypeExpr, want: &TypeExpr) -> bool {
    ty.unify(want).as_ref() == Some(want)
}

fn merge_arc(arcs: &mut Vec<TArc>, arc: TArc) {
    match arcs.iter_mut().find(|a| a.place == arc.place) {
        Some(existing) => existing.entries.extend(arc.entries),
        None => arcs.push(arc),
    }
}

/// Evaluates an invariant against a marking and store.
pub fn eval_invariant(
    inv: &TInvariant,
    marking: &[Multiset<Value>],
    store: &GlobalStore,
) -> Result<bool, EvalError> {
    match eval_with_marking(&inv.expr, &Binding::new(), store, Some(marking))? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Type(format!("invariant evaluated to {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::load_model;
    use super::*;

    fn errors(src: &str) -> Vec<String> {
        match load_model(src) {
            Ok(_) => vec![],
            Err(e) => e.messages(),
        }
    }

    #[test]
    fn arc_type_mismatch_names_both() {
        let es = errors("places a : Int; b : Str; transitions t; vars x : Int; arcs a -> t : x; t -> b : x;");
        assert_eq!(es.len(), 1, "{es:?}");
        assert!(es[0].contains("arc `t` -> `b`") && es[0].contains("expected Str, found Int"), "{es:?}");
    }

    #[test]
    fn unbindable_output_variable() {
        let es = errors("places a : Int; transitions t; vars x, y : Int; arcs a -> t : x; t -> a : y;");
        assert!(es.iter().any(|e| e.contains("unbindable variable `y`")), "{es:?}");
        let es = errors("places a : Int; transitions t guard: y > 0; vars x, y : Int; arcs a -> t : x;");
        assert!(es.iter().any(|e| e.contains("guard") && e.contains("unbindable variable `y`")), "{es:?}");
    }

    #[test]
    fn reference_variables_deref_in_value_positions() {
        let src = r#"
            types P = {completed: Set Int};
            pointers pf : P = {completed: {1}};
            vars id, c : Int; p : Ref P;
            places pool : (Int, Ref P) = (1, pf); courses : (Int, Set Int) = (2, {1}); on : (Int, Ref P, Int);
            transitions choose guard: c in p.completed || {} subset p.completed op: { insert c into p.completed };
            arcs pool -> choose : (id, p); courses -> choose : (c, {1}); choose -> on : (id, p, c);
        "#;
        let m = load_model(src).unwrap();
        let t = &m.transitions[0];
        assert_eq!(t.vars.keys().collect::<Vec<_>>(), vec!["c", "id", "p"]);
        let out = &t.outputs[0].entries[0].1;
        assert_eq!(*out, TExpr::Tuple(vec![TExpr::Var("id".into()), TExpr::Var("p".into()), TExpr::Var("c".into())]));
        let Some(TExpr::Binary(BinOp::Or, l, _)) = &t.guard else { panic!() };
        assert!(matches!(&**l, TExpr::Binary(BinOp::In, _, r) if matches!(&**r, TExpr::Field(d, _) if matches!(&**d, TExpr::Deref(_)))));
        assert_eq!(m.places[0].initial.to_string(), "[(1,@pf)]");
    }

    #[test]
    fn pointer_rules() {
        let base = "types P = {n: Int}; pointers a : P = {n: 1}; b : P = {n: 2}; vars p, q : Ref P; \
                    places s : (Ref P, Ref P) = (a, b); transitions t";
        assert!(errors(&format!("{base} guard: ref(p) == ref(q) && p.n < q.n; arcs s -> t : (p, q);")).is_empty());
        let es = errors(&format!("{base} guard: ref(p) + 1 == 2; arcs s -> t : (p, q);"));
        assert!(es.iter().any(|e| e.contains("pointers")), "{es:?}");
        let es = errors(&format!("{base}; arcs s -> t : (p, q); t -> s : (if true then p else q, q);"));
        assert!(es.iter().any(|e| e.contains("conditional pointers")), "{es:?}");
        assert!(!errors("types R = Ref Ref Int;").is_empty());
    }

    #[test]
    fn collects_every_error() {
        let es = errors("places a : Nope; b : Int = \"x\"; transitions t guard: 1; arcs a -> u;");
        assert_eq!(es.len(), 4, "{es:?}");
    }

    #[test]
    fn operators_are_checked() {
        let base = "types P = {done: Set Int, log: List Str}; vars p, q : Ref P; x : Int; \
                    places s : (Ref P, Int); transitions t op: ";
        let ok = format!("{base}{{ insert x into p.done; append \"a\" to p.log; alloc q := {{done: {{}}, log: []}}; set q.done := {{x}} }}; arcs s -> t : (p, x); t -> s : (q, x);");
        assert!(errors(&ok).is_empty(), "{:?}", errors(&ok));
        let bad = format!("{base}{{ append x into p.done }}; arcs s -> t : (p, x);");
        assert!(!errors(&bad).is_empty());
        let bad = format!("{base}{{ insert \"a\" into p.done }}; arcs s -> t : (p, x);");
        assert!(errors(&bad).iter().any(|e| e.contains("expected Int")), "{:?}", errors(&bad));
    }

    #[test]
    fn classical_view_of_unit_models() {
        let m = load_model("places i = [()]; f; transitions t; arcs i -> t; t -> f : [2`()];").unwrap();
        let (net, marking) = m.classical().unwrap();
        assert_eq!(net.weight("t", "f"), 2);
        assert_eq!(marking.to_string(), "{i: 1}");
    }
}
