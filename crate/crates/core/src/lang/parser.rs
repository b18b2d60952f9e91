use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::types::TypeExpr;
use super::value::Value;
use super::ParseError;

pub(crate) const SECTIONS: &[&str] =
    &["types", "consts", "pointers", "vars", "places", "transitions", "arcs", "invariants"];

pub(crate) const KEYWORDS: &[&str] = &[
    "model", "types", "consts", "pointers", "vars", "places", "transitions", "arcs", "invariants", "guard", "op", "if",
    "then", "else", "forall", "exists", "in", "subset", "union", "true", "false", "ref", "len", "tokens", "skip", "set",
    "append", "insert", "alloc", "to", "into", "Int", "Bool", "Str", "Unit", "Set", "List", "Ref",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses a whole model file.
pub fn parse_model(src: &str) -> Result<ModelAst, ParseError> {
    let mut p = Parser::new(src)?;
    let model = p.model()?;
    check_duplicates(&model)?;
    Ok(model)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a literal value such as `(1,[1,2])` or `{completed:{23}}`.
pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let e = parse_expr(src)?;
    literal_value(&e).ok_or_else(|| ParseError::new(Pos { line: 1, col: 1 }, format!("`{src}` is not a literal value")))
}

/// Evaluates a purely literal expression.
pub fn literal_value(e: &Expr) -> Option<Value> {
    Some(match e {
        Expr::Unit => Value::Unit,
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Int(n) => Value::Int(*n),
        Expr::Str(s) => Value::Str(s.clone()),
        Expr::PointerLit(p) => Value::Pointer(p.clone()),
        Expr::Tuple(es) => Value::Tuple(es.iter().map(literal_value).collect::<Option<_>>()?),
        Expr::Set(es) => Value::Set(es.iter().map(literal_value).collect::<Option<_>>()?),
        Expr::List(es) => Value::List(es.iter().map(literal_value).collect::<Option<_>>()?),
        Expr::Record(fs) => Value::Record(
            fs.iter().map(|(k, e)| literal_value(e).map(|v| (k.clone(), v))).collect::<Option<BTreeMap<_, _>>>()?,
        ),
        Expr::Unary(UnOp::Neg, inner) => match literal_value(inner)? {
            Value::Int(n) => Value::Int(n.checked_neg()?),
            _ => return None,
        },
        _ => return None,
    })
}

fn check_duplicates(m: &ModelAst) -> Result<(), ParseError> {
    fn dup<'a>(items: impl Iterator<Item = (&'a str, Pos)>, what: &str) -> Result<(), ParseError> {
        let mut seen: HashMap<&str, Pos> = HashMap::new();
        for (name, pos) in items {
            if let Some(first) = seen.insert(name, pos) {
                return Err(ParseError::new(pos, format!("duplicate {what} `{name}` (first declared at {first})")));
            }
        }
        Ok(())
    }
    dup(m.types.iter().map(|d| (d.name.as_str(), d.pos)), "type")?;
    dup(
        m.consts
            .iter()
            .map(|d| (d.name.as_str(), d.pos))
            .chain(m.pointers.iter().map(|d| (d.name.as_str(), d.pos)))
            .chain(m.vars.iter().map(|d| (d.name.as_str(), d.pos))),
        "declaration",
    )?;
    dup(
        m.places.iter().map(|d| (d.name.as_str(), d.pos)).chain(m.transitions.iter().map(|d| (d.name.as_str(), d.pos))),
        "node",
    )?;
    dup(m.invariants.iter().map(|d| (d.name.as_str(), d.pos)), "invariant")
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Self { toks: tokenize(src)?, at: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.pos(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    /// Place or transition name: identifier or quoted string.
    fn node_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.ident().or_else(|_| self.unexpected("a place or transition name")),
        }
    }

    fn at_section_end(&self) -> bool {
        match self.peek() {
            Tok::Eof => true,
            Tok::Ident(s) => SECTIONS.contains(&s.as_str()),
            _ => false,
        }
    }

    fn model(&mut self) -> Result<ModelAst, ParseError> {
        let mut m = ModelAst::default();
        if self.eat_kw("model") {
            m.name = Some(self.node_name()?);
            self.expect_punct(";")?;
        }
        loop {
            let section = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if SECTIONS.contains(&s.as_str()) => s.clone(),
                _ => return self.unexpected("a section keyword (types, consts, pointers, vars, places, transitions, arcs, invariants)"),
            };
            self.advance();
            while !self.at_section_end() {
                let pos = self.pos();
                match section.as_str() {
                    "types" => {
                        let name = self.ident()?;
                        self.expect_punct("=")?;
                        let ty = self.ty()?;
                        m.types.push(TypeDecl { name, ty, pos });
                    }
                    "consts" => {
                        let name = self.ident()?;
                        self.expect_punct(":")?;
                        let ty = self.ty()?;
                        self.expect_punct("=")?;
                        let value = self.expr()?;
                        m.consts.push(ConstDecl { name, ty, value, pos });
                    }
                    "pointers" => {
                        let name = self.ident()?;
                        self.expect_punct(":")?;
                        let ty = self.ty()?;
                        self.expect_punct("=")?;
                        let init = self.expr()?;
                        m.pointers.push(PointerDecl { name, ty, init, pos });
                    }
                    "vars" => {
                        let mut names = vec![(self.ident()?, pos)];
                        while self.eat_punct(",") {
                            let pos = self.pos();
                            names.push((self.ident()?, pos));
                        }
                        self.expect_punct(":")?;
                        let ty = self.ty()?;
                        m.vars.extend(names.into_iter().map(|(name, pos)| VarDecl { name, ty: ty.clone(), pos }));
                    }
                    "places" => {
                        let name = self.node_name()?;
                        let ty = if self.eat_punct(":") { Some(self.ty()?) } else { None };
                        let initial = if self.eat_punct("=") { Some(self.inscription()?) } else { None };
                        m.places.push(PlaceDecl { name, ty, initial, pos });
                    }
                    "transitions" => {
                        let name = self.node_name()?;
                        let guard = if self.eat_kw("guard") {
                            self.expect_punct(":")?;
                            Some(self.expr()?)
                        } else {
                            None
                        };
                        let op = if self.eat_kw("op") {
                            self.expect_punct(":")?;
                            Some(self.actions()?)
                        } else {
                            None
                        };
                        m.transitions.push(TransitionDecl { name, guard, op, pos });
                    }
                    "arcs" => {
                        let from = self.node_name()?;
                        self.expect_punct("->")?;
                        let to = self.node_name()?;
                        let inscription = if self.eat_punct(":") {
                            Some(self.inscription().map_err(|e| {
                                ParseError::new(e.pos, format!("in arc `{from}` -> `{to}`: {}", e.message))
                            })?)
                        } else {
                            None
                        };
                        m.arcs.push(ArcDecl { from, to, inscription, pos });
                    }
                    "invariants" => {
                        let name = self.node_name()?;
                        self.expect_punct(":")?;
                        let expr = self.expr()?;
                        m.invariants.push(InvariantDecl { name, expr, pos });
                    }
                    _ => unreachable!("section keywords are matched above"),
                }
                self.expect_punct(";")?;
            }
        }
        Ok(m)
    }

    fn ty(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(match s.as_str() {
                    "Int" => TypeExpr::Int,
                    "Bool" => TypeExpr::Bool,
                    "Str" => TypeExpr::Str,
                    "Unit" => TypeExpr::Unit,
                    "Set" => TypeExpr::set(self.ty()?),
                    "List" => TypeExpr::list(self.ty()?),
                    "Ref" => TypeExpr::reference(self.ty()?),
                    _ if is_keyword(&s) => {
                        self.at -= 1;
                        return self.unexpected("a type");
                    }
                    _ => TypeExpr::Named(s),
                })
            }
            Tok::Punct("(") => {
                self.advance();
                let mut items = vec![self.ty()?];
                let mut trailing = false;
                while self.eat_punct(",") {
                    if self.is_punct(")") {
                        trailing = true;
                        break;
                    }
                    items.push(self.ty()?);
                }
                self.expect_punct(")")?;
                Ok(if items.len() == 1 && !trailing { items.pop().unwrap() } else { TypeExpr::Tuple(items) })
            }
            Tok::Punct("{") => {
                self.advance();
                let mut fields = BTreeMap::new();
                if !self.is_punct("}") {
                    loop {
                        let pos = self.pos();
                        let name = self.ident()?;
                        self.expect_punct(":")?;
                        if fields.insert(name.clone(), self.ty()?).is_some() {
                            return Err(ParseError::new(pos, format!("duplicate record field `{name}`")));
                        }
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("}")?;
                Ok(TypeExpr::Record(fields))
            }
            _ => self.unexpected("a type"),
        }
    }

    fn inscription(&mut self) -> Result<Inscription, ParseError> {
        if !self.eat_punct("[") {
            return Ok(Inscription::Single(self.expr()?));
        }
        let mut entries = Vec::new();
        if !self.is_punct("]") {
            loop {
                let count = match (self.peek().clone(), self.peek_at(1)) {
                    (Tok::Int(n), Tok::Punct("`")) => {
                        self.advance();
                        self.advance();
                        n
                    }
                    _ => 1,
                };
                entries.push((count, self.expr()?));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("]")?;
        Ok(Inscription::Multiset(entries))
    }

    fn actions(&mut self) -> Result<Vec<Action>, ParseError> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            out.push(self.action()?);
            if !self.eat_punct(";") {
                break;
            }
        }
        self.expect_punct("}")?;
        Ok(out)
    }

    fn target_path(&mut self) -> Result<(String, Vec<String>), ParseError> {
        let target = self.ident()?;
        let mut path = Vec::new();
        while self.eat_punct(".") {
            path.push(self.ident()?);
        }
        Ok((target, path))
    }

    fn action(&mut self) -> Result<Action, ParseError> {
        if self.eat_kw("skip") {
            Ok(Action::Skip)
        } else if self.eat_kw("set") {
            let (target, path) = self.target_path()?;
            self.expect_punct(":=")?;
            Ok(Action::Set { target, path, value: self.expr()? })
        } else if self.eat_kw("append") {
            let value = self.expr()?;
            self.expect_kw("to")?;
            let (target, path) = self.target_path()?;
            Ok(Action::Append { target, path, value })
        } else if self.eat_kw("insert") {
            let value = self.expr()?;
            self.expect_kw("into")?;
            let (target, path) = self.target_path()?;
            Ok(Action::Insert { target, path, value })
        } else if self.eat_kw("alloc") {
            let var = self.ident()?;
            self.expect_punct(":=")?;
            Ok(Action::Alloc { var, value: self.expr()? })
        } else {
            self.unexpected("an operator action (skip, set, append, insert, alloc)")
        }
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        let quant = if self.is_kw("forall") {
            Some(Quantifier::Forall)
        } else if self.is_kw("exists") {
            Some(Quantifier::Exists)
        } else {
            None
        };
        if let Some(q) = quant {
            self.advance();
            let pat = self.pattern()?;
            self.expect_kw("in")?;
            let domain = self.binary(BinOp::Add.precedence())?;
            self.expect_punct(":")?;
            let body = self.expr()?;
            return Ok(Expr::Quant(q, pat, Box::new(domain), Box::new(body)));
        }
        self.binary(1)
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        if self.eat_punct("_") {
            return Ok(Pattern::Wildcard);
        }
        if self.eat_punct("(") {
            let mut items = vec![self.pattern()?];
            while self.eat_punct(",") {
                if self.is_punct(")") {
                    break;
                }
                items.push(self.pattern()?);
            }
            self.expect_punct(")")?;
            return Ok(Pattern::Tuple(items));
        }
        Ok(Pattern::Bind(self.ident()?))
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct("+") => BinOp::Add,
            Tok::Punct("-") => BinOp::Sub,
            Tok::Punct("*") => BinOp::Mul,
            Tok::Punct("/") => BinOp::Div,
            Tok::Punct("%") => BinOp::Mod,
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Punct("&&") => BinOp::And,
            Tok::Punct("||") => BinOp::Or,
            Tok::Punct("++") => BinOp::Concat,
            Tok::Ident(s) if s == "in" => BinOp::In,
            Tok::Ident(s) if s == "subset" => BinOp::Subset,
            Tok::Ident(s) if s == "union" => BinOp::Union,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators associate to the left.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.is_punct("-") {
            self.advance();
            if let Tok::Int(n) = *self.peek() {
                let pos = self.pos();
                self.advance();
                let v = 0i64.checked_sub_unsigned(n).ok_or_else(|| ParseError::new(pos, "integer literal out of range"))?;
                return self.postfix(Expr::Int(v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr, ParseError> {
        while self.eat_punct(".") {
            match self.advance() {
                Tok::Ident(f) if !is_keyword(&f) => e = Expr::Field(Box::new(e), f),
                Tok::Int(n) => e = Expr::Index(Box::new(e), n as usize),
                _ => {
                    self.at -= 1;
                    return self.unexpected("a field name or tuple index");
                }
            }
        }
        Ok(e)
    }

    fn comma_list(&mut self, close: &str) -> Result<Vec<Expr>, ParseError> {
        let mut items = Vec::new();
        if !self.is_punct(close) {
            loop {
                items.push(self.expr()?);
                if !self.eat_punct(",") || self.is_punct(close) {
                    break;
                }
            }
        }
        self.expect_punct(close)?;
        Ok(items)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                let v = i64::try_from(n).map_err(|_| ParseError::new(pos, "integer literal out of range"))?;
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::Pointer(p) => {
                self.advance();
                Ok(Expr::PointerLit(p))
            }
            Tok::Punct("(") => {
                self.advance();
                if self.eat_punct(")") {
                    return Ok(Expr::Unit);
                }
                let first = self.expr()?;
                if self.eat_punct(")") {
                    return Ok(first);
                }
                self.expect_punct(",")?;
                let mut items = vec![first];
                items.extend(self.comma_list(")")?);
                Ok(Expr::Tuple(items))
            }
            Tok::Punct("[") => {
                self.advance();
                Ok(Expr::List(self.comma_list("]")?))
            }
            Tok::Punct("{") => {
                self.advance();
                let is_record = matches!(self.peek(), Tok::Ident(s) if !is_keyword(s))
                    && matches!(self.peek_at(1), Tok::Punct(":"));
                if !is_record {
                    return Ok(Expr::Set(self.comma_list("}")?));
                }
                let mut fields: Vec<(String, Expr)> = Vec::new();
                loop {
                    let fpos = self.pos();
                    let name = self.ident()?;
                    if fields.iter().any(|(f, _)| *f == name) {
                        return Err(ParseError::new(fpos, format!("duplicate record field `{name}`")));
                    }
                    self.expect_punct(":")?;
                    fields.push((name, self.expr()?));
                    if !self.eat_punct(",") || self.is_punct("}") {
                        break;
                    }
                }
                self.expect_punct("}")?;
                Ok(Expr::Record(fields))
            }
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.advance();
                    Ok(Expr::Bool(s == "true"))
                }
                "if" | "forall" | "exists" => self.expr(),
                "ref" => {
                    self.advance();
                    self.expect_punct("(")?;
                    let name = self.ident()?;
                    self.expect_punct(")")?;
                    Ok(Expr::RefOf(name))
                }
                "len" => {
                    self.advance();
                    self.expect_punct("(")?;
                    let e = self.expr()?;
                    self.expect_punct(")")?;
                    Ok(Expr::Len(Box::new(e)))
                }
                "tokens" => {
                    self.advance();
                    self.expect_punct("(")?;
                    let mut places = vec![self.node_name()?];
                    while self.eat_punct(",") {
                        places.push(self.node_name()?);
                    }
                    self.expect_punct(")")?;
                    Ok(Expr::Tokens(places))
                }
                _ => Ok(Expr::Name(self.ident()?)),
            },
            _ => self.unexpected("an expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 + 2 * 3 - 4").unwrap();
        assert_eq!(
            e,
            Expr::bin(
                BinOp::Sub,
                Expr::bin(BinOp::Add, Expr::Int(1), Expr::bin(BinOp::Mul, Expr::Int(2), Expr::Int(3))),
                Expr::Int(4)
            )
        );
        let e = parse_expr("23 in r && !(c in p.completed)").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::And, _, _)));
        assert_eq!(parse_expr("-5").unwrap(), Expr::Int(-5));
        assert_eq!(parse_expr("-9223372036854775808").unwrap(), Expr::Int(i64::MIN));
        assert!(parse_expr("9223372036854775808").is_err());
    }

    #[test]
    fn collection_literals() {
        assert_eq!(parse_expr("{}").unwrap(), Expr::Set(vec![]));
        assert_eq!(parse_expr("(1,)").unwrap(), Expr::Tuple(vec![Expr::Int(1)]));
        assert_eq!(parse_expr("(1)").unwrap(), Expr::Int(1));
        assert!(matches!(parse_expr("{a: 1, b: {}}").unwrap(), Expr::Record(f) if f.len() == 2));
        assert_eq!(
            parse_value("(1,[1,2])").unwrap(),
            Value::Tuple(vec![Value::Int(1), Value::int_list([1, 2])])
        );
        assert_eq!(parse_value("@pf1").unwrap(), Value::pointer("pf1"));
        assert!(parse_value("x + 1").is_err());
    }

    #[test]
    fn quantifiers() {
        let e = parse_expr(r#"forall (a, _, r) in tokens("team", pool): r != "x""#).unwrap();
        let Expr::Quant(Quantifier::Forall, Pattern::Tuple(ps), dom, _) = e else { panic!() };
        assert_eq!(ps.len(), 3);
        assert_eq!(*dom, Expr::Tokens(vec!["team".into(), "pool".into()]));
    }

    #[test]
    fn types() {
        assert_eq!(
            parse_type("(Int, List Int)").unwrap(),
            TypeExpr::Tuple(vec![TypeExpr::Int, TypeExpr::list(TypeExpr::Int)])
        );
        assert_eq!(parse_type("Ref Portfolio").unwrap(), TypeExpr::reference(TypeExpr::Named("Portfolio".into())));
        assert!(matches!(parse_type("{completed: Set Int}").unwrap(), TypeExpr::Record(_)));
    }

    const MINIMAL: &str = "places p; transitions t; arcs p -> t; t -> p;";

    #[test]
    fn smallest_model() {
        let m = parse_model(MINIMAL).unwrap();
        assert_eq!((m.places.len(), m.transitions.len(), m.arcs.len()), (1, 1, 2));
        assert!(m.places[0].ty.is_none());
    }

    #[test]
    fn full_model_syntax() {
        let src = r#"
            model demo;
            types Student = (Int, List Int);
            consts prereq : Int = 23;
            vars id, c : Int; r : List Int;
            places "student pool" : Student = [(1,[1,2]), 2`(34,[])];
                   done : Student;
            transitions "register for a course" guard: prereq in r op: { skip };
            arcs "student pool" -> "register for a course" : (id, r);
                 "register for a course" -> done : [(id, r ++ [c])];
            invariants sane: forall (i, _) in tokens(done): i > 0;
        "#;
        let m = parse_model(src).unwrap();
        assert_eq!(m.name.as_deref(), Some("demo"));
        assert_eq!(m.vars.len(), 3);
        let Some(Inscription::Multiset(init)) = &m.places[0].initial else { panic!() };
        assert_eq!(init[1].0, 2);
        assert_eq!(m.transitions[0].op, Some(vec![Action::Skip]));
        assert_eq!(m.invariants.len(), 1);
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_model("places p;\narcs p -> t : (id, ;").unwrap_err();
        assert_eq!(e.pos.line, 2);
        assert!(e.message.contains("arc `p` -> `t`"), "{}", e.message);
        let e = parse_model("places p; p;").unwrap_err();
        assert!(e.message.contains("duplicate node `p`"), "{}", e.message);
        let e = parse_model("bogus").unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (1, 1));
    }

    #[test]
    fn operator_actions() {
        let m = parse_model(
            "transitions t op: { insert c into p.completed; append \"x\" to p.log; set p.n := 1; alloc q := {n: 0} };",
        )
        .unwrap();
        let ops = m.transitions[0].op.as_ref().unwrap();
        assert_eq!(ops.len(), 4);
        assert!(matches!(&ops[0], Action::Insert { target, path, .. } if target == "p" && path == &["completed"]));
        assert!(matches!(&ops[3], Action::Alloc { var, .. } if var == "q"));
    }
}
