//! Inductive definitions, the definition registry, well-formedness (C1-C3) and unfolding.

use crate::syntax::{Entailment, Expr, Pure, PureAtom, SpatialAtom, Subst, SymbolicHeap, VarSort};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamRole {
    Root,
    Segment,
    Border,
    Transitivity,
    OrderSource,
    OrderTarget,
}

impl ParamRole {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamRole::Root => "root",
            ParamRole::Segment => "seg",
            ParamRole::Border => "border",
            ParamRole::Transitivity => "trans",
            ParamRole::OrderSource => "src",
            ParamRole::OrderTarget => "tgt",
        }
    }

    pub fn from_keyword(s: &str) -> Option<ParamRole> {
        Some(match s {
            "root" => ParamRole::Root,
            "seg" => ParamRole::Segment,
            "border" => ParamRole::Border,
            "trans" => ParamRole::Transitivity,
            "src" => ParamRole::OrderSource,
            "tgt" => ParamRole::OrderTarget,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub role: ParamRole,
    pub sort: VarSort,
}

/// Relation `sc ⋄ sc'` between the order source and its successor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderOp {
    Eq,
    Le,
    Ge,
}

impl OrderOp {
    /// The atom `a ⋄ b`.
    pub fn atom(self, a: Expr, b: Expr) -> PureAtom {
        match self {
            OrderOp::Eq => PureAtom::arith_eq(a, b),
            OrderOp::Le => PureAtom::arith_leq(a, b),
            OrderOp::Ge => PureAtom::arith_leq(b, a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldType {
    Ptr(String),
    Int,
}

impl FieldType {
    pub fn var_sort(&self) -> VarSort {
        match self {
            FieldType::Ptr(_) => VarSort::Ptr,
            FieldType::Int => VarSort::Int,
        }
    }
}

/// `data c { c next; int val; }`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataDecl {
    pub name: String,
    pub fields: Vec<(String, FieldType)>,
}

/// `P(r,F,..) ≡ emp ∧ r=F ∧ sc=tg ∨ ∃ exists. body ∧ r≠F ∧ sc ⋄ sc' ∧ side`.
///
/// The base branch is fixed by the parameter roles; only the recursive
/// branch is stored. `body` keeps the order in which atoms were written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductiveDef {
    pub name: String,
    pub params: Vec<Param>,
    pub exists: Vec<String>,
    pub body: Vec<SpatialAtom>,
    /// `(⋄, sc')`
    pub order: Option<(OrderOp, String)>,
    pub side: Pure,
    /// Sorts of parameters and existentials.
    pub sorts: BTreeMap<String, VarSort>,
}

impl InductiveDef {
    fn param_with(&self, role: ParamRole) -> Option<usize> {
        self.params.iter().position(|p| p.role == role)
    }

    pub fn source_index(&self) -> Option<usize> {
        self.param_with(ParamRole::OrderSource)
    }

    pub fn target_index(&self) -> Option<usize> {
        self.param_with(ParamRole::OrderTarget)
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Base branch pure part `r=F ∧ sc=tg` for the given actual arguments.
    pub fn base_pure(&self, args: &[Expr]) -> Pure {
        let mut p = Pure::new();
        p.push(PureAtom::ptr_eq(args[0].clone(), args[1].clone()));
        if let (Some(s), Some(t)) = (self.source_index(), self.target_index()) {
            p.push(PureAtom::arith_eq(args[s].clone(), args[t].clone()));
        }
        p
    }

    /// `sc ⋄ tg` on actual arguments: every occurrence satisfies it, since
    /// the order relation is reflexive and transitive.
    pub fn order_consequence(&self, args: &[Expr]) -> Option<PureAtom> {
        let (op, _) = self.order.as_ref()?;
        let (sc, tg) = self.source_target(args)?;
        (sc != tg).then(|| op.atom(sc, tg))
    }

    /// `sc ↦ tg` on actual arguments, used by LBase and RBase.
    pub fn source_target(&self, args: &[Expr]) -> Option<(Expr, Expr)> {
        match (self.source_index(), self.target_index()) {
            (Some(s), Some(t)) => Some((args[s].clone(), args[t].clone())),
            _ => None,
        }
    }
}

/// Positions of the head, recursive and matrix atoms inside a validated body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub head: usize,
    pub rec: usize,
    pub matrix: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    C1,
    C2,
    C3,
    Roles,
    Shape,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::Roles => "roles",
            Condition::Shape => "shape",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DefError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown data sort `{0}`")]
    UnknownSort(String),
    #[error("`{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("definition `{pred}` violates {cond} at `{witness}`: {detail}")]
    Violation { pred: String, cond: Condition, witness: String, detail: String },
}

fn violation(pred: &str, cond: Condition, witness: &str, detail: &str) -> DefError {
    DefError::Violation { pred: pred.to_string(), cond, witness: witness.to_string(), detail: detail.to_string() }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    pub data: Vec<DataDecl>,
    pub preds: Vec<InductiveDef>,
    shapes: BTreeMap<String, Shape>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn add_data(&mut self, d: DataDecl) {
        self.data.retain(|x| x.name != d.name);
        self.data.push(d);
    }

    pub fn add_pred(&mut self, d: InductiveDef) {
        self.shapes.remove(&d.name);
        self.preds.retain(|x| x.name != d.name);
        self.preds.push(d);
    }

    pub fn data(&self, name: &str) -> Option<&DataDecl> {
        self.data.iter().find(|d| d.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&InductiveDef> {
        self.preds.iter().find(|d| d.name == name)
    }

    pub fn def(&self, name: &str) -> Result<&InductiveDef, DefError> {
        self.get(name).ok_or_else(|| DefError::UnknownPredicate(name.to_string()))
    }

    /// Checks every definition and caches their shapes.
    pub fn validate(&mut self) -> Result<(), DefError> {
        let mut shapes = BTreeMap::new();
        for d in &self.preds {
            shapes.insert(d.name.clone(), check_wellformed(d, self)?);
        }
        self.shapes = shapes;
        Ok(())
    }

    pub fn is_validated(&self) -> bool {
        self.preds.iter().all(|d| self.shapes.contains_key(&d.name))
    }

    pub fn shape(&self, name: &str) -> Result<&Shape, DefError> {
        self.shapes.get(name).ok_or_else(|| DefError::UnknownPredicate(name.to_string()))
    }

    /// Head sort and field count of a predicate.
    pub fn head_sort(&self, name: &str) -> Result<&str, DefError> {
        let d = self.def(name)?;
        let sh = self.shape(name)?;
        match &d.body[sh.head] {
            SpatialAtom::PointsTo { sort, .. } => Ok(sort),
            _ => unreachable!("validated head is a points-to"),
        }
    }

    /// Sorts of the free variables of an entailment, inferred from usage.
    pub fn infer_sorts(&self, e: &Entailment) -> Result<BTreeMap<String, VarSort>, String> {
        let mut out = BTreeMap::new();
        for h in [&e.lhs, &e.rhs] {
            self.infer_heap_sorts(&h.spatial, &h.pure, &mut out)?;
        }
        self.infer_heap_sorts(&e.frame, &Pure::new(), &mut out)?;
        Ok(out)
    }

    pub fn infer_heap_sorts(
        &self,
        spatial: &[SpatialAtom],
        pure: &Pure,
        out: &mut BTreeMap<String, VarSort>,
    ) -> Result<(), String> {
        let mut note = |e: &Expr, s: VarSort| -> Result<(), String> {
            match e {
                Expr::Var(v) => match out.get(v) {
                    Some(old) if *old != s => Err(format!("variable `{v}` used both as {old} and {s}")),
                    _ => {
                        out.insert(v.clone(), s);
                        Ok(())
                    }
                },
                Expr::Null if s == VarSort::Int => Err("null in arithmetic position".into()),
                Expr::Int(_) if s == VarSort::Ptr => Err("integer literal in pointer position".into()),
                _ => Ok(()),
            }
        };
        for a in spatial {
            match a {
                SpatialAtom::Emp => {}
                SpatialAtom::PointsTo { root, sort, fields } => {
                    let d = self.data(sort).ok_or_else(|| format!("unknown sort `{sort}`"))?;
                    if d.fields.len() != fields.len() {
                        return Err(format!("`{sort}` has {} fields, got {}", d.fields.len(), fields.len()));
                    }
                    note(root, VarSort::Ptr)?;
                    for (e, (_, t)) in fields.iter().zip(&d.fields) {
                        note(e, t.var_sort())?;
                    }
                }
                SpatialAtom::Pred { name, args, .. } => {
                    let d = self.get(name).ok_or_else(|| format!("unknown predicate `{name}`"))?;
                    if d.params.len() != args.len() {
                        return Err(format!("`{name}` expects {} arguments, got {}", d.params.len(), args.len()));
                    }
                    for (e, p) in args.iter().zip(&d.params) {
                        note(e, p.sort)?;
                    }
                }
            }
        }
        for a in pure.atoms() {
            let s = if a.is_pointer() { VarSort::Ptr } else { VarSort::Int };
            for e in a.exprs() {
                note(e, s)?;
            }
        }
        Ok(())
    }
}

/// Checks roles, the recursive-branch shape and conditions C1, C2, C3.
pub fn check_wellformed(def: &InductiveDef, reg: &Registry) -> Result<Shape, DefError> {
    let name = def.name.as_str();
    let count = |r: ParamRole| def.params.iter().filter(|p| p.role == r).count();
    if def.params.first().map(|p| p.role) != Some(ParamRole::Root)
        || def.params.get(1).map(|p| p.role) != Some(ParamRole::Segment)
        || count(ParamRole::Root) != 1
        || count(ParamRole::Segment) != 1
    {
        return Err(violation(
            name,
            Condition::Roles,
            name,
            "the first two parameters must be the root and the segment",
        ));
    }
    if count(ParamRole::Transitivity) > 1 {
        return Err(violation(name, Condition::Roles, name, "at most one transitivity parameter"));
    }
    let (ns, nt) = (count(ParamRole::OrderSource), count(ParamRole::OrderTarget));
    if ns > 1 || ns != nt {
        return Err(violation(name, Condition::Roles, name, "ordering parameters come in one pair"));
    }
    if (ns == 1) != def.order.is_some() {
        return Err(violation(name, Condition::Roles, name, "an ordering pair requires an order atom and vice versa"));
    }

    // Arity and sort references.
    for a in &def.body {
        match a {
            SpatialAtom::PointsTo { sort, fields, .. } => {
                let d = reg.data(sort).ok_or_else(|| DefError::UnknownSort(sort.clone()))?;
                if d.fields.len() != fields.len() {
                    return Err(DefError::Arity { name: sort.clone(), expected: d.fields.len(), got: fields.len() });
                }
            }
            SpatialAtom::Pred { name: q, args, .. } => {
                let d = reg.get(q).ok_or_else(|| DefError::UnknownPredicate(q.clone()))?;
                if d.params.len() != args.len() {
                    return Err(DefError::Arity { name: q.clone(), expected: d.params.len(), got: args.len() });
                }
            }
            SpatialAtom::Emp => {}
        }
    }

    let root = Expr::var(&def.params[0].name);
    let heads: Vec<usize> = def
        .body
        .iter()
        .enumerate()
        .filter(|(_, a)| matches!(a, SpatialAtom::PointsTo { root: r, .. } if *r == root))
        .map(|(i, _)| i)
        .collect();
    let Some(&head) = heads.first() else {
        return Err(violation(name, Condition::Shape, &def.params[0].name, "root is not allocated"));
    };
    let head_fields: BTreeSet<Expr> = match &def.body[head] {
        SpatialAtom::PointsTo { fields, .. } => fields.iter().cloned().collect(),
        _ => unreachable!(),
    };
    let params: BTreeSet<&str> = def.params.iter().map(|p| p.name.as_str()).collect();

    // C1: existentials are fields of the head (the order successor included,
    // since it is carried by the ordering field).
    for x in &def.exists {
        if !head_fields.contains(&Expr::var(x)) {
            return Err(violation(name, Condition::C1, x, "existential is not a field of the root cell"));
        }
    }
    if let Some(a) = def.body.iter().enumerate().find(|(i, a)| *i != head && matches!(a, SpatialAtom::PointsTo { .. }))
    {
        return Err(violation(name, Condition::C1, &a.1.to_string(), "only the root cell may be a points-to atom"));
    }
    for f in &head_fields {
        if let Expr::Var(v) = f {
            if !params.contains(v.as_str()) && !def.exists.contains(v) {
                return Err(violation(name, Condition::C1, v, "field variable is not bound"));
            }
        }
    }

    // Recursive occurrence: the last self occurrence.
    let rec = def
        .body
        .iter()
        .rposition(|a| matches!(a, SpatialAtom::Pred { name: q, .. } if q == name))
        .ok_or_else(|| violation(name, Condition::Shape, name, "no recursive occurrence"))?;
    let rec_args = match &def.body[rec] {
        SpatialAtom::Pred { args, .. } => args.clone(),
        _ => unreachable!(),
    };
    let rec_root = rec_args[0].clone();
    let is_exist_field =
        |e: &Expr| e.as_var().map(|v| def.exists.iter().any(|x| x == v) && head_fields.contains(e)).unwrap_or(false);
    if !is_exist_field(&rec_root) {
        return Err(violation(
            name,
            Condition::Shape,
            &rec_root.to_string(),
            "recursive root must be an existential field",
        ));
    }
    for (i, p) in def.params.iter().enumerate().skip(1) {
        let expected = match p.role {
            ParamRole::OrderSource => match &def.order {
                Some((_, s)) => Expr::var(s),
                None => Expr::var(&p.name),
            },
            _ => Expr::var(&p.name),
        };
        if rec_args[i] != expected {
            return Err(violation(
                name,
                Condition::Shape,
                &rec_args[i].to_string(),
                "recursive occurrence must pass the parameters through",
            ));
        }
    }
    if let Some((_, s)) = &def.order {
        if !def.exists.contains(s) {
            return Err(violation(name, Condition::Shape, s, "order successor must be existential"));
        }
    }

    // C2: matrix roots are distinct existential fields; other arguments are
    // fields, parameters or null.
    let matrix: Vec<usize> = (0..def.body.len()).filter(|&i| i != head && i != rec && def.body[i].is_pred()).collect();
    let mut seen_roots = BTreeSet::new();
    seen_roots.insert(rec_root.clone());
    for &i in &matrix {
        if let SpatialAtom::Pred { args, .. } = &def.body[i] {
            let r = &args[0];
            if !is_exist_field(r) {
                return Err(violation(
                    name,
                    Condition::C2,
                    &r.to_string(),
                    "matrix root is not an existential field of the root cell",
                ));
            }
            if !seen_roots.insert(r.clone()) {
                return Err(violation(name, Condition::C2, &r.to_string(), "matrix roots overlap"));
            }
            for a in &args[1..] {
                let ok = match a {
                    Expr::Var(v) => params.contains(v.as_str()) || head_fields.contains(a),
                    _ => true,
                };
                if !ok {
                    return Err(violation(
                        name,
                        Condition::C2,
                        &a.to_string(),
                        "matrix argument is neither a field nor a parameter",
                    ));
                }
            }
        }
    }

    // C3: no mutual recursion.
    if let Some(w) = dependency_cycle(name, reg) {
        return Err(violation(name, Condition::C3, &w, "mutual recursion"));
    }

    Ok(Shape { head, rec, matrix })
}

/// A predicate on a cycle through `start` in the dependency order (self loops ignored).
fn dependency_cycle(start: &str, reg: &Registry) -> Option<String> {
    let deps = |n: &str| -> Vec<String> {
        reg.get(n)
            .map(|d| {
                d.body
                    .iter()
                    .filter_map(|a| match a {
                        SpatialAtom::Pred { name, .. } if name != n => Some(name.clone()),
                        _ => None,
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut stack: Vec<String> = deps(start);
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == start {
            return Some(start.to_string());
        }
        if seen.insert(n.clone()) {
            stack.extend(deps(&n));
        }
    }
    None
}

/// Session-local fresh-name supply producing `base#n`.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    next: u64,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh { next: 1 }
    }

    /// Counter starting at `n`, for names that must not clash with an ongoing search.
    pub fn starting(n: u64) -> Fresh {
        Fresh { next: n }
    }

    pub fn name(&mut self, base: &str) -> String {
        let stem = base.split('#').next().unwrap_or(base);
        let n = self.next.max(1);
        self.next = n + 1;
        format!("{stem}#{n}")
    }
}

/// Result of unfolding one occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unfolding {
    pub base: SymbolicHeap,
    /// Recursive branch; spatial atoms follow the definition body order.
    pub rec: SymbolicHeap,
    /// Index of the recursive occurrence inside `rec.spatial`.
    pub rec_index: usize,
    /// Indices of the matrix occurrences inside `rec.spatial`.
    pub matrix_indices: Vec<usize>,
    /// Existential to fresh name.
    pub renaming: Subst,
}

/// Unfolds `P(args)^k` into its base and recursive branches.
pub fn unfold(occ: &SpatialAtom, reg: &Registry, fresh: &mut Fresh) -> Result<Unfolding, DefError> {
    let SpatialAtom::Pred { name, args, unfold: k } = occ else {
        panic!("unfold expects a predicate occurrence");
    };
    let def = reg.def(name)?;
    if def.arity() != args.len() {
        return Err(DefError::Arity { name: name.clone(), expected: def.arity(), got: args.len() });
    }
    let shape = reg.shape(name)?.clone();
    let mut s = Subst::new();
    for (p, a) in def.params.iter().zip(args) {
        s.insert(&p.name, a.clone());
    }
    let mut renaming = Subst::new();
    for x in &def.exists {
        let f = Expr::Var(fresh.name(x));
        s.insert(x, f.clone());
        renaming.insert(x, f);
    }
    let base = SymbolicHeap::new(vec![], def.base_pure(args));
    let spatial: Vec<SpatialAtom> = def
        .body
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let a = a.subst(&s);
            if i == shape.rec {
                a.with_unfold(k + 1)
            } else {
                a.with_unfold(0)
            }
        })
        .collect();
    let mut pure = Pure::new();
    pure.push(PureAtom::ptr_neq(args[0].clone(), args[1].clone()));
    if let Some((op, succ)) = &def.order {
        let sc = args[def.source_index().expect("validated")].clone();
        pure.push(op.atom(sc, Expr::var(succ).subst(&s)));
    }
    pure.extend(&def.side.subst(&s));
    Ok(Unfolding {
        base,
        rec: SymbolicHeap::new(spatial, pure),
        rec_index: shape.rec,
        matrix_indices: shape.matrix.clone(),
        renaming,
    })
}
