use std::collections::BTreeMap;
use std::fmt;

/// Token and data types. `Named` only appears before alias resolution;
/// `Unknown` is the element type of an empty collection literal during
/// checking and never escapes the checker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Int,
    Bool,
    Str,
    Unit,
    Tuple(Vec<TypeExpr>),
    Set(Box<TypeExpr>),
    List(Box<TypeExpr>),
    Record(BTreeMap<String, TypeExpr>),
    /// Pointer to a value of the inner type.
    Ref(Box<TypeExpr>),
    Named(String),
    Unknown,
}

impl TypeExpr {
    pub fn set(inner: TypeExpr) -> Self {
        TypeExpr::Set(Box::new(inner))
    }

    pub fn list(inner: TypeExpr) -> Self {
        TypeExpr::List(Box::new(inner))
    }

    pub fn reference(inner: TypeExpr) -> Self {
        TypeExpr::Ref(Box::new(inner))
    }

    pub fn is_ref(&self) -> bool {
        matches!(self, TypeExpr::Ref(_))
    }

    /// Whether a `Ref` occurs anywhere inside.
    pub fn contains_ref(&self) -> bool {
        match self {
            TypeExpr::Ref(_) => true,
            TypeExpr::Tuple(ts) => ts.iter().any(TypeExpr::contains_ref),
            TypeExpr::Set(t) | TypeExpr::List(t) => t.contains_ref(),
            TypeExpr::Record(fs) => fs.values().any(TypeExpr::contains_ref),
            _ => false,
        }
    }

    /// Most specific common type, treating `Unknown` as a wildcard.
    pub fn unify(&self, other: &TypeExpr) -> Option<TypeExpr> {
        use TypeExpr::*;
        match (self, other) {
            (Unknown, t) | (t, Unknown) => Some(t.clone()),
            (Tuple(a), Tuple(b)) if a.len() == b.len() => {
                a.iter().zip(b).map(|(x, y)| x.unify(y)).collect::<Option<Vec<_>>>().map(Tuple)
            }
            (Set(a), Set(b)) => a.unify(b).map(TypeExpr::set),
            (List(a), List(b)) => a.unify(b).map(TypeExpr::list),
            (Ref(a), Ref(b)) => a.unify(b).map(TypeExpr::reference),
            (Record(a), Record(b)) if a.len() == b.len() => a
                .iter()
                .map(|(k, t)| b.get(k).and_then(|u| t.unify(u)).map(|u| (k.clone(), u)))
                .collect::<Option<BTreeMap<_, _>>>()
                .map(Record),
            (a, b) if a == b => Some(a.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Int => f.write_str("Int"),
            TypeExpr::Bool => f.write_str("Bool"),
            TypeExpr::Str => f.write_str("Str"),
            TypeExpr::Unit => f.write_str("Unit"),
            TypeExpr::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                if ts.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            TypeExpr::Set(t) => write!(f, "Set {t}"),
            TypeExpr::List(t) => write!(f, "List {t}"),
            TypeExpr::Ref(t) => write!(f, "Ref {t}"),
            TypeExpr::Record(fields) => {
                f.write_str("{")?;
                for (i, (k, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {t}")?;
                }
                f.write_str("}")
            }
            TypeExpr::Named(n) => f.write_str(n),
            TypeExpr::Unknown => f.write_str("?"),
        }
    }
}
