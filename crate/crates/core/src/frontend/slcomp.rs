//! SL-COMP style SMT-LIB input.
//!
//! Supported subset: `declare-sort`, `declare-datatype(s)`, `declare-heap`,
//! `define-fun-rec`/`define-funs-rec` whose bodies use `sep`, `pto`, `emp`,
//! `and`, `or`, `exists`, `distinct`, `=`, `<=`, `>=`, `declare-const`/
//! `declare-fun` for free variables, `set-info :status`, and one entailment
//! written either as `(assert (not (=> A C)))` or as `(assert A)` followed
//! by `(assert (not C))`.
//!
//! Parameter roles are not part of SMT-LIB, so each definition needs a
//! comment line such as
//!
//! ```text
//! ;; roles: ls root seg
//! ```

use super::native::{build_def, build_query_seeded, RawHeap, RawOp, RawPure};
use super::{Expected, FrontendError, ProblemFile};
use crate::defs::{DataDecl, FieldType, ParamRole, Registry};
use crate::syntax::{Expr, SpatialAtom, VarSort};
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, ..) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, ..) => Some(v),
            Sexp::Atom(..) => None,
        }
    }

    /// Head symbol of a list.
    fn head(&self) -> Option<&str> {
        self.list().and_then(|v| v.first()).and_then(Sexp::atom)
    }

    fn err(&self, msg: impl Into<String>) -> FrontendError {
        let (line, col) = self.pos();
        FrontendError::Syntax { line, col, msg: msg.into() }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s, ..) => write!(f, "{s}"),
            Sexp::List(v, ..) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn unsupported(s: &Sexp) -> FrontendError {
    FrontendError::UnsupportedConstruct(s.to_string())
}

/// A `;; roles:` comment with its line and column.
type RoleLine = (String, usize, usize);

/// Reads all top-level s-expressions and collects `;; roles:` comments.
fn read(text: &str) -> Result<(Vec<Sexp>, Vec<RoleLine>), FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut roles = Vec::new();
    let err = |line, col, msg: &str| FrontendError::Syntax { line, col, msg: msg.to_string() };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            ';' => {
                let start = i;
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                let body: String = chars[start..i].iter().collect();
                let body = body.trim_start_matches(';').trim();
                if let Some(rest) = body.strip_prefix("roles:") {
                    roles.push((rest.trim().to_string(), tl, tc));
                }
                col += i - start;
            }
            '(' => {
                stack.push((Vec::new(), tl, tc));
                i += 1;
                col += 1;
            }
            ')' => {
                let (items, l, c0) = stack.pop().ok_or_else(|| err(tl, tc, "unbalanced `)`"))?;
                let s = Sexp::List(items, l, c0);
                match stack.last_mut() {
                    Some((v, ..)) => v.push(s),
                    None => top.push(s),
                }
                i += 1;
                col += 1;
            }
            _ => {
                let start = i;
                if c == '|' {
                    i += 1;
                    while i < chars.len() && chars[i] != '|' {
                        i += 1;
                    }
                    if i == chars.len() {
                        return Err(err(tl, tc, "unterminated quoted symbol"));
                    }
                    i += 1;
                } else {
                    while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | ';') {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().filter(|&&ch| ch != '|').collect();
                col += i - start;
                let a = Sexp::Atom(s, tl, tc);
                match stack.last_mut() {
                    Some((v, ..)) => v.push(a),
                    None => top.push(a),
                }
            }
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(err(*l, *c, "unclosed `(`"));
    }
    Ok((top, roles))
}

/// Declared sorts and the heap layout.
#[derive(Default)]
struct Ctx {
    /// Location sort to the datatype of its cells.
    heap: BTreeMap<String, String>,
    loc_sorts: BTreeSet<String>,
    /// Constructor to datatype, with field sorts.
    ctors: BTreeMap<String, (String, Vec<(String, String)>)>,
    preds: BTreeSet<String>,
    consts: BTreeMap<String, VarSort>,
}

impl Ctx {
    fn var_sort(&self, sort: &Sexp) -> Result<VarSort, FrontendError> {
        match sort.atom() {
            Some("Int") => Ok(VarSort::Int),
            Some(s) if self.loc_sorts.contains(s) => Ok(VarSort::Ptr),
            _ => Err(FrontendError::Sort(format!("unknown sort `{sort}`"))),
        }
    }

    fn expr(&self, s: &Sexp) -> Result<Expr, FrontendError> {
        match s {
            Sexp::Atom(a, ..) if a == "nil" => Ok(Expr::Null),
            Sexp::Atom(a, ..) => match a.parse::<BigInt>() {
                Ok(k) => Ok(Expr::Int(k)),
                Err(_) => Ok(Expr::Var(a.clone())),
            },
            Sexp::List(v, ..) => match v.as_slice() {
                [h, n, _] if h.atom() == Some("as") && n.atom() == Some("nil") => Ok(Expr::Null),
                [h, k] if h.atom() == Some("-") => match k.atom().and_then(|a| a.parse::<BigInt>().ok()) {
                    Some(k) => Ok(Expr::Int(-k)),
                    None => Err(unsupported(s)),
                },
                _ => Err(unsupported(s)),
            },
        }
    }

    fn pure(&self, op: RawOp, args: &[Sexp], h: &mut RawHeap, pairwise: bool) -> Result<(), FrontendError> {
        let es = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?;
        for i in 0..es.len() {
            let others: Vec<usize> =
                if pairwise { (i + 1..es.len()).collect() } else { (i + 1..es.len().min(i + 2)).collect() };
            for j in others {
                h.pure.push(RawPure { op: op.clone(), a: es[i].clone(), b: es[j].clone() });
            }
        }
        Ok(())
    }

    /// Adds one conjunct of a symbolic heap to `h`.
    fn heap(&self, s: &Sexp, h: &mut RawHeap) -> Result<(), FrontendError> {
        match s {
            Sexp::Atom(a, ..) => match a.as_str() {
                "true" | "emp" => Ok(()),
                "false" => {
                    h.falsum = true;
                    Ok(())
                }
                _ if self.preds.contains(a) => {
                    h.spatial.push(SpatialAtom::Pred { name: a.clone(), args: Vec::new(), unfold: 0 });
                    Ok(())
                }
                _ => Err(unsupported(s)),
            },
            Sexp::List(v, ..) => {
                let Some(head) = s.head() else { return Err(unsupported(s)) };
                let args = &v[1..];
                match head {
                    "and" | "sep" => args.iter().try_for_each(|a| self.heap(a, h)),
                    "_" if args.first().and_then(Sexp::atom) == Some("emp") => Ok(()),
                    "pto" => {
                        let [root, cell] = args else { return Err(s.err("`pto` takes two arguments")) };
                        let Some(cv) = cell.list() else { return Err(cell.err("expected a constructor application")) };
                        let ctor = cv.first().and_then(Sexp::atom).unwrap_or_default();
                        let (data, _) = self
                            .ctors
                            .get(ctor)
                            .ok_or_else(|| FrontendError::Sort(format!("unknown constructor `{ctor}`")))?;
                        let fields = cv[1..].iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?;
                        h.spatial.push(SpatialAtom::PointsTo { root: self.expr(root)?, sort: data.clone(), fields });
                        Ok(())
                    }
                    "=" => self.pure(RawOp::Eq, args, h, false),
                    "distinct" => self.pure(RawOp::Neq, args, h, true),
                    "<=" => self.pure(RawOp::Le, args, h, false),
                    ">=" => self.pure(RawOp::Ge, args, h, false),
                    "not" => match args {
                        [inner] if inner.head() == Some("=") => {
                            self.pure(RawOp::Neq, &inner.list().unwrap_or_default()[1..], h, true)
                        }
                        _ => Err(unsupported(s)),
                    },
                    p if self.preds.contains(p) => {
                        let args = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?;
                        h.spatial.push(SpatialAtom::Pred { name: p.to_string(), args, unfold: 0 });
                        Ok(())
                    }
                    _ => Err(unsupported(s)),
                }
            }
        }
    }

    fn declare_datatype(&mut self, name: &str, ctors: &Sexp, reg: &mut Registry) -> Result<(), FrontendError> {
        let list = ctors.list().ok_or_else(|| ctors.err("expected constructor list"))?;
        let [ctor] = list else {
            return Err(FrontendError::UnsupportedConstruct(format!(
                "datatype `{name}` must have exactly one constructor"
            )));
        };
        let cv = ctor.list().ok_or_else(|| ctor.err("expected constructor"))?;
        let cname = cv.first().and_then(Sexp::atom).ok_or_else(|| ctor.err("expected constructor name"))?;
        let mut fields = Vec::new();
        for f in &cv[1..] {
            match f.list() {
                Some([n, t]) if n.atom().is_some() && t.atom().is_some() => {
                    fields.push((n.atom().unwrap().to_string(), t.atom().unwrap().to_string()));
                }
                _ => return Err(f.err("expected `(field Sort)`")),
            }
        }
        self.ctors.insert(cname.to_string(), (name.to_string(), fields));
        // Field types are resolved once the heap layout is known.
        reg.add_data(DataDecl { name: name.to_string(), fields: Vec::new() });
        Ok(())
    }

    /// Fills in data field types from `declare-heap`.
    fn resolve_fields(&self, reg: &mut Registry) -> Result<(), FrontendError> {
        for (data, fields) in self.ctors.values() {
            let mut out = Vec::new();
            for (f, t) in fields {
                let ty = if t == "Int" {
                    FieldType::Int
                } else if let Some(target) = self.heap.get(t) {
                    FieldType::Ptr(target.clone())
                } else {
                    return Err(FrontendError::Sort(format!(
                        "field `{f}` of `{data}` has sort `{t}` outside the heap"
                    )));
                };
                out.push((f.clone(), ty));
            }
            if let Some(d) = reg.data.iter_mut().find(|d| d.name == *data) {
                d.fields = out;
            }
        }
        Ok(())
    }
}

struct FunDef<'a> {
    name: String,
    params: Vec<String>,
    body: &'a Sexp,
    at: &'a Sexp,
}

fn fun_header<'a>(
    name: &'a Sexp,
    params: &'a Sexp,
    ret: &Sexp,
    ctx: &Ctx,
) -> Result<(String, Vec<String>), FrontendError> {
    let name = name.atom().ok_or_else(|| name.err("expected predicate name"))?.to_string();
    if ret.atom() != Some("Bool") {
        return Err(ret.err("predicates must return Bool"));
    }
    let mut ps = Vec::new();
    for p in params.list().ok_or_else(|| params.err("expected parameter list"))? {
        match p.list() {
            Some([n, t]) if n.atom().is_some() => {
                ctx.var_sort(t)?;
                ps.push(n.atom().unwrap().to_string());
            }
            _ => return Err(p.err("expected `(name Sort)`")),
        }
    }
    Ok((name, ps))
}

fn parse_roles(lines: &[(String, usize, usize)]) -> Result<BTreeMap<String, Vec<ParamRole>>, FrontendError> {
    let mut out = BTreeMap::new();
    for (text, line, col) in lines {
        let mut words = text.split_whitespace();
        let Some(pred) = words.next() else { continue };
        let roles = words
            .map(|w| {
                ParamRole::from_keyword(w).ok_or_else(|| FrontendError::Syntax {
                    line: *line,
                    col: *col,
                    msg: format!("unknown parameter role `{w}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(pred.to_string(), roles);
    }
    Ok(out)
}

/// Splits a definition body into its base and recursive branches.
fn build(
    f: &FunDef,
    roles: &BTreeMap<String, Vec<ParamRole>>,
    ctx: &Ctx,
    reg: &Registry,
) -> Result<crate::defs::InductiveDef, FrontendError> {
    let rs = roles.get(&f.name).ok_or_else(|| FrontendError::RoleAnnotationMissing(f.name.clone()))?;
    if rs.len() != f.params.len() {
        return Err(f.at.err(format!("`{}` has {} parameters but {} roles", f.name, f.params.len(), rs.len())));
    }
    let params: Vec<(String, ParamRole)> = f.params.iter().cloned().zip(rs.iter().copied()).collect();
    let branches = match f.body.head() {
        Some("or") => &f.body.list().unwrap_or_default()[1..],
        _ => return Err(f.body.err("a definition body must be `(or base recursive)`")),
    };
    let [a, b] = branches else {
        return Err(f.body.err("a definition body must have exactly two branches"));
    };
    let is_rec = |s: &Sexp| s.head() == Some("exists");
    let (base, rec) = match (is_rec(a), is_rec(b)) {
        (false, true) => (a, b),
        (true, false) => (b, a),
        _ => return Err(f.body.err("expected one base branch and one `exists` branch")),
    };
    let mut bh = RawHeap::default();
    ctx.heap(base, &mut bh)?;
    let rv = rec.list().unwrap_or_default();
    let [_, vars, inner] = rv else { return Err(rec.err("malformed `exists`")) };
    let mut exists = Vec::new();
    for v in vars.list().ok_or_else(|| vars.err("expected bound variables"))? {
        match v.list() {
            Some([n, t]) if n.atom().is_some() => {
                ctx.var_sort(t)?;
                exists.push(n.atom().unwrap().to_string());
            }
            _ => return Err(v.err("expected `(name Sort)`")),
        }
    }
    let mut rh = RawHeap::default();
    ctx.heap(inner, &mut rh)?;
    build_def(&f.name, params, &bh, exists, &rh, reg)
}

pub fn parse_slcomp(text: &str) -> Result<ProblemFile, FrontendError> {
    let (cmds, role_lines) = read(text)?;
    let roles = parse_roles(&role_lines)?;
    let mut ctx = Ctx::default();
    let mut reg = Registry::new();
    let mut defs: Vec<FunDef> = Vec::new();
    let mut asserts: Vec<&Sexp> = Vec::new();
    let mut expect = None;
    for c in &cmds {
        let v = c.list().ok_or_else(|| c.err("expected a command"))?;
        let args = &v[1..];
        match c.head().unwrap_or_default() {
            "set-logic" | "set-option" | "check-sat" | "exit" | "get-model" | "check-unsat" => {}
            "set-info" => {
                if let [k, val] = args {
                    if k.atom() == Some(":status") {
                        expect = match val.atom() {
                            Some("unsat") => Some(Expected::Valid),
                            Some("sat") => Some(Expected::Invalid),
                            _ => None,
                        };
                    }
                }
            }
            "declare-sort" => {
                let n = args.first().and_then(Sexp::atom).ok_or_else(|| c.err("expected sort name"))?;
                ctx.loc_sorts.insert(n.to_string());
            }
            "declare-datatypes" => {
                let [names, bodies] = args else { return Err(c.err("malformed `declare-datatypes`")) };
                let names = names.list().ok_or_else(|| names.err("expected datatype names"))?;
                let bodies = bodies.list().ok_or_else(|| bodies.err("expected constructors"))?;
                if names.len() != bodies.len() {
                    return Err(c.err("datatype names and bodies differ in number"));
                }
                for (n, b) in names.iter().zip(bodies) {
                    let name = n.list().and_then(|x| x.first()).and_then(Sexp::atom).or(n.atom());
                    let name = name.ok_or_else(|| n.err("expected `(name 0)`"))?;
                    ctx.declare_datatype(name, b, &mut reg)?;
                }
            }
            "declare-datatype" => {
                let [n, b] = args else { return Err(c.err("malformed `declare-datatype`")) };
                let name = n.atom().ok_or_else(|| n.err("expected datatype name"))?;
                ctx.declare_datatype(name, b, &mut reg)?;
            }
            "declare-heap" => {
                for p in args {
                    match p.list() {
                        Some([l, d]) if l.atom().is_some() && d.atom().is_some() => {
                            ctx.heap.insert(l.atom().unwrap().to_string(), d.atom().unwrap().to_string());
                        }
                        _ => return Err(p.err("expected `(LocSort DataSort)`")),
                    }
                }
                ctx.resolve_fields(&mut reg)?;
            }
            "declare-const" | "declare-fun" => {
                let (n, t) = match args {
                    [n, t] => (n, t),
                    [n, ps, t] if ps.list().is_some_and(|x| x.is_empty()) => (n, t),
                    _ => return Err(unsupported(c)),
                };
                let n = n.atom().ok_or_else(|| n.err("expected constant name"))?;
                ctx.consts.insert(n.to_string(), ctx.var_sort(t)?);
            }
            "define-fun-rec" => {
                let [name, params, ret, body] = args else { return Err(c.err("malformed `define-fun-rec`")) };
                let (name, params) = fun_header(name, params, ret, &ctx)?;
                ctx.preds.insert(name.clone());
                defs.push(FunDef { name, params, body, at: c });
            }
            "define-funs-rec" => {
                let [heads, bodies] = args else { return Err(c.err("malformed `define-funs-rec`")) };
                let heads = heads.list().ok_or_else(|| heads.err("expected declarations"))?;
                let bodies = bodies.list().ok_or_else(|| bodies.err("expected bodies"))?;
                if heads.len() != bodies.len() {
                    return Err(c.err("declarations and bodies differ in number"));
                }
                for (h, body) in heads.iter().zip(bodies) {
                    let [name, params, ret] = h.list().unwrap_or_default() else {
                        return Err(h.err("expected `(name params Bool)`"));
                    };
                    let (name, params) = fun_header(name, params, ret, &ctx)?;
                    ctx.preds.insert(name.clone());
                    defs.push(FunDef { name, params, body, at: h });
                }
            }
            "assert" => {
                let [f] = args else { return Err(c.err("malformed `assert`")) };
                asserts.push(f);
            }
            _ => return Err(unsupported(c)),
        }
    }
    for f in &defs {
        let d = build(f, &roles, &ctx, &reg)?;
        reg.add_pred(d);
    }
    reg.validate()?;

    let (lhs, rhs) =
        match asserts.as_slice() {
            [one] if one.head() == Some("not") => match one.list().unwrap_or_default() {
                [_, imp] if imp.head() == Some("=>") => match imp.list().unwrap_or_default() {
                    [_, a, b] => (a, b),
                    _ => return Err(imp.err("`=>` takes two arguments")),
                },
                _ => return Err(FrontendError::Query(format!("unsupported entailment encoding {one}"))),
            },
            [a, neg] if neg.head() == Some("not") => match neg.list().unwrap_or_default() {
                [_, b] => (*a, b),
                _ => return Err(neg.err("`not` takes one argument")),
            },
            [] => return Err(FrontendError::Query("no entailment query".into())),
            _ => return Err(FrontendError::Query(
                "unsupported entailment encoding: expected `(assert (not (=> A C)))` or `(assert A) (assert (not C))`"
                    .into(),
            )),
        };
    let (mut lh, mut rh) = (RawHeap::default(), RawHeap::default());
    ctx.heap(lhs, &mut lh)?;
    ctx.heap(rhs, &mut rh)?;
    let query = build_query_seeded(&lh, &rh, &reg, ctx.consts.clone())?;
    Ok(ProblemFile { registry: reg, query, expect })
}
