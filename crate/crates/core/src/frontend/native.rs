//! Native problem format.
//!
//! ```text
//! data c1 { c1 next; }
//! pred ll(root r, seg F) := emp /\ r=F \/ exists X. r->c1(X) * ll(X,F) /\ r!=F;
//! check ll(x,y) * ll(y,null) |- ll(x,null);
//! expect valid;
//! ```

use super::{Expected, FrontendError, ProblemFile};
use crate::defs::{DataDecl, FieldType, InductiveDef, OrderOp, Param, ParamRole, Registry};
use crate::syntax::{Entailment, Expr, Pure, PureAtom, SpatialAtom, SymbolicHeap, VarSort};
use num_bigint::BigInt;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 22] = [
    ":=", "\\/", "/\\", "->", "|-", "!=", "<=", ">=", "(", ")", "{", "}", ",", ";", ".", "*", "=", "<", ">", "+", "^",
    "-",
];

fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| FrontendError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: tl, col: tc });
            continue;
        }
        let neg = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || neg {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let k: BigInt = s.parse().map_err(|_| err(tl, tc, format!("bad integer `{s}`")))?;
            out.push(Token { tok: Tok::Int(k), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

/// A pure atom before sort resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum RawOp {
    Eq,
    Neq,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct RawPure {
    pub op: RawOp,
    pub a: Expr,
    pub b: Expr,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct RawHeap {
    pub spatial: Vec<SpatialAtom>,
    pub pure: Vec<RawPure>,
    pub falsum: bool,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn err(&self, msg: impl Into<String>) -> FrontendError {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        };
        FrontendError::Syntax { line, col, msg: msg.into() }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s == "null" || s == "nil" => {
                self.pos += 1;
                Ok(Expr::Null)
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(Expr::Var(s))
            }
            Some(Tok::Int(k)) => {
                self.pos += 1;
                Ok(Expr::Int(k))
            }
            _ => Err(self.err("expected expression")),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, FrontendError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    /// One conjunct: spatial atom or pure atom.
    fn item(&mut self, h: &mut RawHeap) -> Result<(), FrontendError> {
        if self.is_kw("emp") {
            self.pos += 1;
            return Ok(());
        }
        if self.is_kw("true") {
            self.pos += 1;
            return Ok(());
        }
        if self.is_kw("false") {
            self.pos += 1;
            h.falsum = true;
            return Ok(());
        }
        if let (Some(Tok::Ident(name)), Some(Tok::Sym("("))) = (self.peek().cloned(), self.peek_at(1)) {
            self.pos += 1;
            let args = self.args()?;
            let mut unfold = 0;
            if self.eat_sym("^") {
                match self.peek().cloned() {
                    Some(Tok::Int(k)) => {
                        self.pos += 1;
                        unfold = u32::try_from(k).map_err(|_| self.err("bad unfolding number"))?;
                    }
                    _ => return Err(self.err("expected unfolding number")),
                }
            }
            h.spatial.push(SpatialAtom::Pred { name, args, unfold });
            return Ok(());
        }
        let a = self.expr()?;
        if self.eat_sym("->") {
            let sort = self.ident()?;
            let fields = self.args()?;
            h.spatial.push(SpatialAtom::PointsTo { root: a, sort, fields });
            return Ok(());
        }
        let op = match self.peek() {
            Some(Tok::Sym("=")) => RawOp::Eq,
            Some(Tok::Sym("!=")) => RawOp::Neq,
            Some(Tok::Sym("<=")) => RawOp::Le,
            Some(Tok::Sym(">=")) => RawOp::Ge,
            Some(Tok::Sym("<")) | Some(Tok::Sym(">")) => {
                return Err(FrontendError::UnsupportedConstruct("strict order atoms (use <= or >=)".into()))
            }
            _ => return Err(self.err("expected `->`, `=`, `!=`, `<=` or `>=`")),
        };
        self.pos += 1;
        let b = self.expr()?;
        if self.is_sym("+")
            || self.is_sym("-")
            || matches!(self.peek(), Some(Tok::Int(k)) if k.sign() == num_bigint::Sign::Minus)
        {
            return Err(FrontendError::UnsupportedConstruct("offset atoms such as `a <= b + k`".into()));
        }
        h.pure.push(RawPure { op, a, b });
        Ok(())
    }

    fn heap(&mut self) -> Result<RawHeap, FrontendError> {
        let mut h = RawHeap::default();
        self.item(&mut h)?;
        while self.eat_sym("*") || self.eat_sym("/\\") {
            self.item(&mut h)?;
        }
        Ok(h)
    }

    fn data(&mut self) -> Result<DataDecl, FrontendError> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut fields = Vec::new();
        while !self.eat_sym("}") {
            let ty = self.ident()?;
            let f = self.ident()?;
            self.expect_sym(";")?;
            let ty = if ty == "int" { FieldType::Int } else { FieldType::Ptr(ty) };
            fields.push((f, ty));
        }
        self.eat_sym(";");
        Ok(DataDecl { name, fields })
    }

    fn pred(&mut self, reg: &Registry) -> Result<InductiveDef, FrontendError> {
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        loop {
            let role_kw = self.ident()?;
            let role = ParamRole::from_keyword(&role_kw)
                .ok_or_else(|| self.err(format!("unknown parameter role `{role_kw}`")))?;
            params.push((self.ident()?, role));
            if self.eat_sym(")") {
                break;
            }
            self.expect_sym(",")?;
        }
        self.expect_sym(":=")?;
        let base = self.heap()?;
        self.expect_sym("\\/")?;
        let mut exists = Vec::new();
        if self.is_kw("exists") {
            self.pos += 1;
            loop {
                exists.push(self.ident()?);
                if self.eat_sym(".") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        let rec = self.heap()?;
        self.expect_sym(";")?;
        build_def(&name, params, &base, exists, &rec, reg)
    }
}

fn sort_of(e: &Expr, sorts: &BTreeMap<String, VarSort>) -> Option<VarSort> {
    match e {
        Expr::Null => Some(VarSort::Ptr),
        Expr::Int(_) => Some(VarSort::Int),
        Expr::Var(v) => sorts.get(v).copied(),
    }
}

fn note(sorts: &mut BTreeMap<String, VarSort>, e: &Expr, s: VarSort) -> Result<bool, FrontendError> {
    match e {
        Expr::Var(v) => match sorts.get(v) {
            Some(old) if *old != s => Err(FrontendError::Sort(format!("variable `{v}` used both as {old} and {s}"))),
            Some(_) => Ok(false),
            None => {
                sorts.insert(v.clone(), s);
                Ok(true)
            }
        },
        Expr::Null if s == VarSort::Int => Err(FrontendError::Sort("null in arithmetic position".into())),
        Expr::Int(_) if s == VarSort::Ptr => Err(FrontendError::Sort("integer literal in pointer position".into())),
        _ => Ok(false),
    }
}

/// Infers variable sorts from spatial usage and pure atoms, to a fixpoint.
/// `own` supplies parameter sorts of a definition under construction.
pub(crate) fn infer(
    spatial: &[&SpatialAtom],
    pure: &[&RawPure],
    reg: &Registry,
    own: Option<(&str, &[(String, ParamRole)])>,
    sorts: &mut BTreeMap<String, VarSort>,
) -> Result<(), FrontendError> {
    loop {
        let mut changed = false;
        for a in spatial {
            match a {
                SpatialAtom::PointsTo { root, sort, fields } => {
                    let d = reg.data(sort).ok_or_else(|| FrontendError::Sort(format!("unknown data sort `{sort}`")))?;
                    if d.fields.len() != fields.len() {
                        return Err(FrontendError::Sort(format!(
                            "`{sort}` has {} fields, got {}",
                            d.fields.len(),
                            fields.len()
                        )));
                    }
                    changed |= note(sorts, root, VarSort::Ptr)?;
                    for (e, (_, t)) in fields.iter().zip(&d.fields) {
                        changed |= note(sorts, e, t.var_sort())?;
                    }
                }
                SpatialAtom::Pred { name, args, .. } => {
                    let psorts: Vec<Option<VarSort>> = match (own, reg.get(name)) {
                        (Some((n, ps)), _) if n == name => ps.iter().map(|(p, _)| sorts.get(p).copied()).collect(),
                        (_, Some(d)) => d.params.iter().map(|p| Some(p.sort)).collect(),
                        _ => {
                            return Err(FrontendError::Definition(crate::defs::DefError::UnknownPredicate(
                                name.clone(),
                            )))
                        }
                    };
                    if psorts.len() != args.len() {
                        return Err(FrontendError::Definition(crate::defs::DefError::Arity {
                            name: name.clone(),
                            expected: psorts.len(),
                            got: args.len(),
                        }));
                    }
                    for (i, (e, s)) in args.iter().zip(psorts).enumerate() {
                        if let Some(s) = s {
                            changed |= note(sorts, e, s)?;
                        } else if let (Some(s), Some((_, ps))) = (sort_of(e, sorts), own) {
                            // Propagate back into an own parameter.
                            changed |= note(sorts, &Expr::var(&ps[i].0), s)?;
                        }
                    }
                }
                SpatialAtom::Emp => {}
            }
        }
        for r in pure {
            match r.op {
                RawOp::Le | RawOp::Ge => {
                    changed |= note(sorts, &r.a, VarSort::Int)?;
                    changed |= note(sorts, &r.b, VarSort::Int)?;
                }
                RawOp::Eq | RawOp::Neq => {
                    if let Some(s) = sort_of(&r.a, sorts).or_else(|| sort_of(&r.b, sorts)) {
                        changed |= note(sorts, &r.a, s)?;
                        changed |= note(sorts, &r.b, s)?;
                    }
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

pub(crate) fn resolve(r: &RawPure, sorts: &BTreeMap<String, VarSort>) -> Result<PureAtom, FrontendError> {
    let s = sort_of(&r.a, sorts).or_else(|| sort_of(&r.b, sorts)).unwrap_or(VarSort::Ptr);
    Ok(match (&r.op, s) {
        (RawOp::Eq, VarSort::Ptr) => PureAtom::ptr_eq(r.a.clone(), r.b.clone()),
        (RawOp::Neq, VarSort::Ptr) => PureAtom::ptr_neq(r.a.clone(), r.b.clone()),
        (RawOp::Eq, VarSort::Int) => PureAtom::arith_eq(r.a.clone(), r.b.clone()),
        (RawOp::Neq, VarSort::Int) => return Err(FrontendError::UnsupportedConstruct("arithmetic disequality".into())),
        (RawOp::Le, _) => PureAtom::arith_leq(r.a.clone(), r.b.clone()),
        (RawOp::Ge, _) => PureAtom::arith_leq(r.b.clone(), r.a.clone()),
    })
}

fn shape_err(pred: &str, msg: &str) -> FrontendError {
    FrontendError::Definition(crate::defs::DefError::Violation {
        pred: pred.to_string(),
        cond: crate::defs::Condition::Shape,
        witness: pred.to_string(),
        detail: msg.to_string(),
    })
}

/// Builds a definition from its parsed branches.
pub(crate) fn build_def(
    name: &str,
    params: Vec<(String, ParamRole)>,
    base: &RawHeap,
    exists: Vec<String>,
    rec: &RawHeap,
    reg: &Registry,
) -> Result<InductiveDef, FrontendError> {
    let mut sorts = BTreeMap::new();
    for (p, role) in &params {
        match role {
            ParamRole::Root | ParamRole::Segment | ParamRole::Border => {
                sorts.insert(p.clone(), VarSort::Ptr);
            }
            ParamRole::OrderSource | ParamRole::OrderTarget => {
                sorts.insert(p.clone(), VarSort::Int);
            }
            ParamRole::Transitivity => {}
        }
    }
    let spatial: Vec<&SpatialAtom> = rec.spatial.iter().collect();
    let pure: Vec<&RawPure> = rec.pure.iter().chain(base.pure.iter()).collect();
    infer(&spatial, &pure, reg, Some((name, &params)), &mut sorts)?;
    let known: Vec<&String> = params.iter().map(|(p, _)| p).chain(exists.iter()).collect();
    for v in known {
        sorts.entry(v.clone()).or_insert(VarSort::Ptr);
    }
    let role_of = |r: ParamRole| params.iter().find(|(_, x)| *x == r).map(|(p, _)| Expr::var(p));
    let (root, seg) = match (role_of(ParamRole::Root), role_of(ParamRole::Segment)) {
        (Some(r), Some(f)) => (r, f),
        _ => return Err(shape_err(name, "a root and a segment parameter are required")),
    };
    let (src, tgt) = (role_of(ParamRole::OrderSource), role_of(ParamRole::OrderTarget));

    // Base branch: emp /\ r=F [/\ sc=tg].
    if !base.spatial.is_empty() || base.falsum {
        return Err(shape_err(name, "the base branch must be `emp` with pure constraints"));
    }
    let mut expected = Pure::new();
    expected.push(PureAtom::ptr_eq(root.clone(), seg.clone()));
    if let (Some(s), Some(t)) = (&src, &tgt) {
        expected.push(PureAtom::arith_eq(s.clone(), t.clone()));
    }
    let got = Pure::from_atoms(base.pure.iter().map(|r| resolve(r, &sorts)).collect::<Result<Vec<_>, _>>()?);
    if !got.same_set(&expected) {
        return Err(shape_err(name, &format!("the base branch must be `emp /\\ {expected}`")));
    }

    // Recursive branch.
    if rec.falsum {
        return Err(shape_err(name, "`false` in the recursive branch"));
    }
    let mut atoms = rec.pure.iter().map(|r| resolve(r, &sorts)).collect::<Result<Vec<_>, _>>()?;
    let guard = PureAtom::ptr_neq(root.clone(), seg.clone());
    let Some(gi) = atoms.iter().position(|a| *a == guard) else {
        return Err(shape_err(name, &format!("the recursive branch must contain `{guard}`")));
    };
    atoms.remove(gi);
    let mut order = None;
    if let Some(sc) = &src {
        let idx = params.iter().position(|(_, r)| *r == ParamRole::OrderSource).unwrap();
        let rec_occ = rec.spatial.iter().rev().find_map(|a| match a {
            SpatialAtom::Pred { name: q, args, .. } if q == name => Some(args.clone()),
            _ => None,
        });
        let succ = rec_occ
            .and_then(|args| args.get(idx).cloned())
            .ok_or_else(|| shape_err(name, "missing recursive occurrence"))?;
        let found = atoms.iter().position(|a| match a {
            PureAtom::ArithLeq(x, y) => (x == sc && *y == succ) || (*x == succ && y == sc),
            PureAtom::ArithEq(x, y) => (x == sc && *y == succ) || (*x == succ && y == sc),
            _ => false,
        });
        let Some(i) = found else {
            return Err(shape_err(name, "missing order atom between source and its successor"));
        };
        let op = match &atoms[i] {
            PureAtom::ArithEq(..) => OrderOp::Eq,
            PureAtom::ArithLeq(x, _) if x == sc => OrderOp::Le,
            _ => OrderOp::Ge,
        };
        atoms.remove(i);
        let Expr::Var(s) = succ else {
            return Err(shape_err(name, "order successor must be a variable"));
        };
        order = Some((op, s));
    }
    if atoms.iter().any(|a| a.is_pointer()) {
        return Err(FrontendError::UnsupportedConstruct(format!("pointer constraints beyond the guard in `{name}`")));
    }
    let params: Vec<Param> = params.into_iter().map(|(n, role)| Param { sort: sorts[&n], name: n, role }).collect();
    let keep: Vec<String> = params.iter().map(|p| p.name.clone()).chain(exists.iter().cloned()).collect();
    sorts.retain(|k, _| keep.contains(k));
    Ok(InductiveDef {
        name: name.to_string(),
        params,
        exists,
        body: rec.spatial.clone(),
        order,
        side: Pure::from_atoms(atoms),
        sorts,
    })
}

/// Resolves the raw pure atoms of a query against inferred sorts.
pub(crate) fn build_query(lhs: &RawHeap, rhs: &RawHeap, reg: &Registry) -> Result<Entailment, FrontendError> {
    build_query_seeded(lhs, rhs, reg, BTreeMap::new())
}

/// As [`build_query`], starting from declared variable sorts.
pub(crate) fn build_query_seeded(
    lhs: &RawHeap,
    rhs: &RawHeap,
    reg: &Registry,
    mut sorts: BTreeMap<String, VarSort>,
) -> Result<Entailment, FrontendError> {
    let spatial: Vec<&SpatialAtom> = lhs.spatial.iter().chain(rhs.spatial.iter()).collect();
    let pure: Vec<&RawPure> = lhs.pure.iter().chain(rhs.pure.iter()).collect();
    infer(&spatial, &pure, reg, None, &mut sorts)?;
    let side = |h: &RawHeap| -> Result<SymbolicHeap, FrontendError> {
        let mut p = Pure::from_atoms(h.pure.iter().map(|r| resolve(r, &sorts)).collect::<Result<Vec<_>, _>>()?);
        if h.falsum {
            p.push(PureAtom::False);
        }
        Ok(SymbolicHeap::new(h.spatial.clone(), p))
    };
    let e = Entailment::new(side(lhs)?, side(rhs)?);
    if !e.rhs_vars_covered() {
        let l = e.lhs.free_vars();
        let extra: Vec<String> = e.rhs.free_vars().into_iter().filter(|v| !l.contains(v)).collect();
        return Err(FrontendError::Query(format!("right-hand side variables not on the left: {}", extra.join(", "))));
    }
    Ok(e)
}

pub fn parse_native(text: &str) -> Result<ProblemFile, FrontendError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut reg = Registry::new();
    let mut query = None;
    let mut expect = None;
    while p.peek().is_some() {
        let kw = p.ident()?;
        match kw.as_str() {
            "data" => {
                let d = p.data()?;
                reg.add_data(d);
            }
            "pred" => {
                let d = p.pred(&reg)?;
                reg.add_pred(d);
            }
            "check" => {
                let lhs = p.heap()?;
                p.expect_sym("|-")?;
                let rhs = p.heap()?;
                p.eat_sym(";");
                if query.is_some() {
                    return Err(p.err("more than one query"));
                }
                query = Some((lhs, rhs));
            }
            "expect" => {
                let v = p.ident()?;
                expect = Some(match v.as_str() {
                    "valid" => Expected::Valid,
                    "invalid" => Expected::Invalid,
                    _ => return Err(p.err("expected `valid` or `invalid`")),
                });
                p.eat_sym(";");
            }
            _ => {
                return Err(FrontendError::Syntax {
                    line: p.toks[p.pos - 1].line,
                    col: p.toks[p.pos - 1].col,
                    msg: format!("unexpected `{kw}`"),
                })
            }
        }
    }
    reg.validate()?;
    let (lhs, rhs) = query.ok_or_else(|| FrontendError::Query("no `check` query".into()))?;
    let query = build_query(&lhs, &rhs, &reg)?;
    Ok(ProblemFile { registry: reg, query, expect })
}

/// Native-syntax text of one definition.
pub fn print_def(d: &InductiveDef) -> String {
    let params: Vec<String> = d.params.iter().map(|p| format!("{} {}", p.role.keyword(), p.name)).collect();
    let root = Expr::var(&d.params[0].name);
    let seg = Expr::var(&d.params[1].name);
    let base = d.base_pure(&d.params.iter().map(|p| Expr::var(&p.name)).collect::<Vec<_>>());
    let mut rec_pure = Pure::new();
    rec_pure.push(PureAtom::ptr_neq(root, seg));
    if let Some((op, succ)) = &d.order {
        let sc = Expr::var(&d.params[d.source_index().unwrap()].name);
        rec_pure.push(op.atom(sc, Expr::var(succ)));
    }
    rec_pure.extend(&d.side);
    let body = SymbolicHeap { spatial: d.body.clone(), pure: rec_pure };
    let ex = if d.exists.is_empty() { String::new() } else { format!("exists {}. ", d.exists.join(",")) };
    format!("pred {}({}) := emp /\\ {} \\/ {}{};", d.name, params.join(", "), base, ex, body)
}

impl fmt::Display for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.registry.data {
            write!(f, "data {} {{", d.name)?;
            for (n, t) in &d.fields {
                match t {
                    FieldType::Int => write!(f, " int {n};")?,
                    FieldType::Ptr(s) => write!(f, " {s} {n};")?,
                }
            }
            writeln!(f, " }}")?;
        }
        for d in &self.registry.preds {
            writeln!(f, "{}", print_def(d))?;
        }
        writeln!(f, "check {};", self.query)?;
        if let Some(e) = self.expect {
            writeln!(f, "expect {};", if e == Expected::Valid { "valid" } else { "invalid" })?;
        }
        Ok(())
    }
}
