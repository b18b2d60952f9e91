//! Untyped syntax tree of model files.

use std::fmt;

use super::types::TypeExpr;

/// Source position (1-based). Positions never take part in structural
/// equality, so a re-parsed model compares equal to the original.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::hash::Hash for Pos {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    /// Membership in a set or list.
    In,
    /// Inclusion of one collection's elements in another.
    Subset,
    Union,
    /// List concatenation.
    Concat,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::In => "in",
            BinOp::Subset => "subset",
            BinOp::Union => "union",
            BinOp::Concat => "++",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::In | BinOp::Subset => 3,
            BinOp::Add | BinOp::Sub | BinOp::Union | BinOp::Concat => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// Destructuring pattern of a quantifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Bind(String),
    Wildcard,
    Tuple(Vec<Pattern>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Unit,
    Bool(bool),
    Int(i64),
    Str(String),
    /// Variable, constant or declared pointer.
    Name(String),
    /// `@name`, a pointer literal.
    PointerLit(String),
    Tuple(Vec<Expr>),
    Set(Vec<Expr>),
    List(Vec<Expr>),
    /// Nonempty record literal `{field: e, ...}`.
    Record(Vec<(String, Expr)>),
    Field(Box<Expr>, String),
    /// Tuple projection `e.0`.
    Index(Box<Expr>, usize),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `ref(w)`: the pointer held by a reference variable, not its target.
    RefOf(String),
    Len(Box<Expr>),
    /// `tokens("p", ...)`: all tokens of the named places, as a list.
    /// Only meaningful in invariants.
    Tokens(Vec<String>),
    Quant(Quantifier, Pattern, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn name(n: impl Into<String>) -> Self {
        Expr::Name(n.into())
    }
}

/// An arc inscription or initial marking: a single token expression or a
/// bracketed multiset `[2`e1, e2]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Inscription {
    Single(Expr),
    Multiset(Vec<(u64, Expr)>),
}

impl Inscription {
    pub fn entries(&self) -> Vec<(u64, &Expr)> {
        match self {
            Inscription::Single(e) => vec![(1, e)],
            Inscription::Multiset(es) => es.iter().map(|(n, e)| (*n, e)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Skip,
    /// `set p.f := e`
    Set { target: String, path: Vec<String>, value: Expr },
    /// `append e to p.f`
    Append { target: String, path: Vec<String>, value: Expr },
    /// `insert e into p.f`
    Insert { target: String, path: Vec<String>, value: Expr },
    /// `alloc q := e`
    Alloc { var: String, value: Expr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub value: Expr,
    pub pos: Pos,
}

/// `name : T = initial` declares a pointer of type `Ref T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointerDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub init: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceDecl {
    pub name: String,
    /// Omitted type means `Unit`.
    pub ty: Option<TypeExpr>,
    pub initial: Option<Inscription>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecl {
    pub name: String,
    pub guard: Option<Expr>,
    pub op: Option<Vec<Action>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcDecl {
    pub from: String,
    pub to: String,
    /// Omitted inscription means one unit token.
    pub inscription: Option<Inscription>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantDecl {
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelAst {
    pub name: Option<String>,
    pub types: Vec<TypeDecl>,
    pub consts: Vec<ConstDecl>,
    pub pointers: Vec<PointerDecl>,
    pub vars: Vec<VarDecl>,
    pub places: Vec<PlaceDecl>,
    pub transitions: Vec<TransitionDecl>,
    pub arcs: Vec<ArcDecl>,
    pub invariants: Vec<InvariantDecl>,
}
