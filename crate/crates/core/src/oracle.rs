//! Finite-model semantics, bases, bad models and a bounded entailment oracle.

use crate::defs::{unfold, Fresh, Registry};
use crate::pure::{self, PureState};
use crate::syntax::{Entailment, Expr, Pure, PureAtom, SpatialAtom, Subst, SymbolicHeap, VarSort};
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;
use thiserror::Error;

/// A value: `null`, a location, or an integer. Locations and integers are disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Null,
    Loc(u32),
    Int(BigInt),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => write!(f, "null"),
            Value::Loc(l) => write!(f, "ℓ{l}"),
            Value::Int(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub sort: String,
    pub fields: Vec<Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeapModel {
    pub stack: BTreeMap<String, Value>,
    pub heap: BTreeMap<u32, Cell>,
}

impl fmt::Display for HeapModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stack:")?;
        for (k, v) in &self.stack {
            writeln!(f, "  {k} = {v}")?;
        }
        writeln!(f, "heap:")?;
        for (l, c) in &self.heap {
            write!(f, "  ℓ{l} -> {}(", c.sort)?;
            for (i, v) in c.fields.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            writeln!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bound {
    pub max_unfold: u32,
    pub locs: u32,
    pub data_lo: i64,
    pub data_hi: i64,
}

impl Default for Bound {
    fn default() -> Bound {
        Bound { max_unfold: 4, locs: 6, data_lo: -3, data_hi: 6 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("arithmetic part has no model")]
    Unsatisfiable,
    #[error("{0}")]
    Ill(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    BoundedValid,
    Invalid(HeapModel),
}

fn value_of(s: &BTreeMap<String, Value>, e: &Expr) -> Result<Value, OracleError> {
    match e {
        Expr::Null => Ok(Value::Null),
        Expr::Int(k) => Ok(Value::Int(k.clone())),
        Expr::Var(v) => s.get(v).cloned().ok_or_else(|| OracleError::UnboundVariable(v.clone())),
    }
}

fn eval_atom(s: &BTreeMap<String, Value>, a: &PureAtom) -> Result<bool, OracleError> {
    Ok(match a {
        PureAtom::PtrEq(x, y) | PureAtom::ArithEq(x, y) => value_of(s, x)? == value_of(s, y)?,
        PureAtom::PtrNeq(x, y) => value_of(s, x)? != value_of(s, y)?,
        PureAtom::ArithLeq(x, y) => match (value_of(s, x)?, value_of(s, y)?) {
            (Value::Int(a), Value::Int(b)) => a <= b,
            _ => false,
        },
        PureAtom::False => false,
    })
}

pub fn eval_pure(s: &BTreeMap<String, Value>, p: &Pure) -> Result<bool, OracleError> {
    for a in p.atoms() {
        if !eval_atom(s, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

type Key = (String, Vec<Value>, u64, u32);

/// Computes exact footprints of spatial atoms inside a fixed heap.
struct Footprints<'a> {
    reg: &'a Registry,
    heap: &'a BTreeMap<u32, Cell>,
    memo: HashMap<Key, Rc<Vec<u64>>>,
}

fn bit(l: u32) -> u64 {
    1u64 << l
}

impl<'a> Footprints<'a> {
    fn new(reg: &'a Registry, heap: &'a BTreeMap<u32, Cell>) -> Footprints<'a> {
        Footprints { reg, heap, memo: HashMap::new() }
    }

    /// All masks `m ⊆ avail` such that the list of atoms holds exactly on `m`.
    fn list(
        &mut self,
        atoms: &[SpatialAtom],
        s: &BTreeMap<String, Value>,
        avail: u64,
        depth: u32,
    ) -> Result<Vec<u64>, OracleError> {
        let Some((first, rest)) = atoms.split_first() else {
            return Ok(vec![0]);
        };
        let mut out = BTreeSet::new();
        for f in self.atom(first, s, avail, depth)?.iter() {
            for g in self.list(rest, s, avail & !f, depth)? {
                out.insert(f | g);
            }
        }
        Ok(out.into_iter().collect())
    }

    fn atom(
        &mut self,
        a: &SpatialAtom,
        s: &BTreeMap<String, Value>,
        avail: u64,
        depth: u32,
    ) -> Result<Rc<Vec<u64>>, OracleError> {
        match a {
            SpatialAtom::Emp => Ok(Rc::new(vec![0])),
            SpatialAtom::PointsTo { root, sort, fields } => {
                let r = value_of(s, root)?;
                let Value::Loc(l) = r else { return Ok(Rc::new(vec![])) };
                if avail & bit(l) == 0 {
                    return Ok(Rc::new(vec![]));
                }
                let Some(cell) = self.heap.get(&l) else { return Ok(Rc::new(vec![])) };
                if &cell.sort != sort || cell.fields.len() != fields.len() {
                    return Ok(Rc::new(vec![]));
                }
                for (e, v) in fields.iter().zip(&cell.fields) {
                    if value_of(s, e)? != *v {
                        return Ok(Rc::new(vec![]));
                    }
                }
                Ok(Rc::new(vec![bit(l)]))
            }
            SpatialAtom::Pred { name, args, .. } => {
                let vals = args.iter().map(|e| value_of(s, e)).collect::<Result<Vec<_>, _>>()?;
                self.pred(name, vals, avail, depth)
            }
        }
    }

    fn pred(&mut self, name: &str, args: Vec<Value>, avail: u64, depth: u32) -> Result<Rc<Vec<u64>>, OracleError> {
        let key = (name.to_string(), args.clone(), avail, depth);
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let def = self.reg.get(name).ok_or_else(|| OracleError::Ill(format!("unknown predicate `{name}`")))?;
        let shape = self.reg.shape(name).map_err(|e| OracleError::Ill(e.to_string()))?.clone();
        let mut env: BTreeMap<String, Value> = BTreeMap::new();
        for (p, v) in def.params.iter().zip(&args) {
            env.insert(p.name.clone(), v.clone());
        }
        let mut out = BTreeSet::new();
        // Base branch.
        let mut base_ok = args[0] == args[1];
        if let (Some(sc), Some(tg)) = (def.source_index(), def.target_index()) {
            base_ok &= args[sc] == args[tg];
        }
        if base_ok {
            out.insert(0u64);
        }
        // Recursive branch.
        if depth > 0 && args[0] != args[1] {
            if let Value::Loc(l) = args[0] {
                if avail & bit(l) != 0 {
                    if let Some(cell) = self.heap.get(&l) {
                        let SpatialAtom::PointsTo { sort, fields, .. } = &def.body[shape.head] else { unreachable!() };
                        let mut ok = cell.sort == *sort && cell.fields.len() == fields.len();
                        if ok {
                            for (e, v) in fields.iter().zip(&cell.fields) {
                                match e {
                                    Expr::Var(x) => match env.get(x) {
                                        Some(w) => ok &= w == v,
                                        None => {
                                            env.insert(x.clone(), v.clone());
                                        }
                                    },
                                    Expr::Null => ok &= *v == Value::Null,
                                    Expr::Int(k) => ok &= *v == Value::Int(k.clone()),
                                }
                            }
                        }
                        if ok {
                            let mut side = def.side.clone();
                            if let Some((op, succ)) = &def.order {
                                let sc = def.params[def.source_index().unwrap()].name.clone();
                                side.push(op.atom(Expr::var(&sc), Expr::var(succ)));
                            }
                            ok = eval_pure(&env, &side)?;
                        }
                        if ok {
                            let rest: Vec<SpatialAtom> = def
                                .body
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| *i != shape.head)
                                .map(|(_, a)| a.clone())
                                .collect();
                            for m in self.list(&rest, &env, avail & !bit(l), depth - 1)? {
                                out.insert(m | bit(l));
                            }
                        }
                    }
                }
            }
        }
        let r = Rc::new(out.into_iter().collect::<Vec<_>>());
        self.memo.insert(key, r.clone());
        Ok(r)
    }
}

fn full_mask(m: &HeapModel) -> u64 {
    m.heap.keys().fold(0, |acc, l| acc | bit(*l))
}

fn eval_depth(m: &HeapModel, h: &SymbolicHeap, reg: &Registry, depth: u32) -> Result<bool, OracleError> {
    if !eval_pure(&m.stack, &h.pure)? {
        return Ok(false);
    }
    let mask = full_mask(m);
    let mut fp = Footprints::new(reg, &m.heap);
    Ok(fp.list(&h.spatial, &m.stack, mask, depth)?.contains(&mask))
}

/// `m ⊨ h`, with predicates unfolded at most `b.max_unfold` times.
/// Unfolding numbers on occurrences are ignored.
pub fn eval(m: &HeapModel, h: &SymbolicHeap, b: &Bound, reg: &Registry) -> Result<bool, OracleError> {
    eval_depth(m, h, reg, b.max_unfold)
}

/// Exact satisfaction: every unfolding allocates one cell, so the heap size
/// bounds the useful depth.
pub fn eval_exact(m: &HeapModel, h: &SymbolicHeap, reg: &Registry) -> Result<bool, OracleError> {
    eval_depth(m, h, reg, m.heap.len() as u32 + 1)
}

/// One-step materialization of every predicate occurrence. Nested
/// occurrences keep their guards, and every materialized existential root
/// is non-null and distinct from the other roots, so a normal form stays one.
pub fn base_of(k: &[SpatialAtom], reg: &Registry, fresh: &mut Fresh) -> Result<SymbolicHeap, OracleError> {
    let mut out = SymbolicHeap::emp();
    for a in k {
        base_atom(a, reg, fresh, true, &mut out)?;
    }
    let given: BTreeSet<String> =
        k.iter().flat_map(|a| a.exprs()).filter_map(|e| e.as_var().map(str::to_string)).collect();
    let roots: Vec<Expr> = out.spatial.iter().filter_map(|a| a.root().cloned()).collect();
    for (i, r) in roots.iter().enumerate() {
        if r.as_var().is_some_and(|v| given.contains(v)) {
            continue;
        }
        out.pure.push(PureAtom::ptr_neq(r.clone(), Expr::Null));
        for (j, o) in roots.iter().enumerate() {
            if i != j {
                out.pure.push(PureAtom::ptr_neq(r.clone(), o.clone()));
            }
        }
    }
    Ok(out)
}

fn base_atom(
    a: &SpatialAtom,
    reg: &Registry,
    fresh: &mut Fresh,
    top: bool,
    out: &mut SymbolicHeap,
) -> Result<(), OracleError> {
    let SpatialAtom::Pred { name, args, .. } = a else {
        if !matches!(a, SpatialAtom::Emp) {
            out.spatial.push(a.clone());
        }
        return Ok(());
    };
    let def = reg.def(name).map_err(|e| OracleError::Ill(e.to_string()))?;
    let u = unfold(a, reg, fresh).map_err(|e| OracleError::Ill(e.to_string()))?;
    // Close the recursive occurrence: its root becomes the segment and the
    // order successor becomes the target.
    let SpatialAtom::Pred { args: rec_args, .. } = &u.rec.spatial[u.rec_index] else { unreachable!() };
    let mut close = Subst::new();
    if let Some(x) = rec_args[0].as_var() {
        close.insert(x, args[1].clone());
    }
    if let (Some((_, succ)), Some(t)) = (&def.order, def.target_index()) {
        if let Some(Expr::Var(s)) = u.renaming.get(succ) {
            close.insert(s, args[t].clone());
        }
    }
    // Self occurrences in the matrix are taken empty.
    for &i in &u.matrix_indices {
        if let SpatialAtom::Pred { name: q, args: qa, .. } = &u.rec.spatial[i] {
            if q == name {
                if let Some(x) = qa[0].as_var() {
                    close.insert(x, qa[1].subst(&close));
                }
            }
        }
    }
    let guard = PureAtom::ptr_neq(args[0].clone(), args[1].clone());
    for (i, b) in u.rec.spatial.iter().enumerate() {
        if i == u.rec_index {
            continue;
        }
        let b = b.subst(&close);
        if u.matrix_indices.contains(&i) {
            if let SpatialAtom::Pred { name: q, .. } = &b {
                if q == name {
                    continue;
                }
            }
        }
        base_atom(&b, reg, fresh, false, out)?;
    }
    for p in u.rec.pure.subst(&close).atoms() {
        if !top || *p != guard {
            out.pure.push(p.clone());
        }
    }
    Ok(())
}

/// Distinct non-null locations for pointer variables, any satisfying
/// assignment for arithmetic ones. `h` must be a base formula.
pub fn bad_model(h: &SymbolicHeap, reg: &Registry) -> Result<HeapModel, OracleError> {
    let mut sorts = BTreeMap::new();
    reg.infer_heap_sorts(&h.spatial, &h.pure, &mut sorts).map_err(OracleError::Ill)?;
    let arith = PureState::from_pure(&h.pure).arith_model().ok_or(OracleError::Unsatisfiable)?;
    let mut m = HeapModel::default();
    let mut next = 1u32;
    // First-occurrence order: spatial atoms, then pure atoms.
    let mut order: Vec<String> = Vec::new();
    for e in h.spatial.iter().flat_map(|a| a.exprs()).chain(h.pure.atoms().iter().flat_map(|a| a.exprs())) {
        if let Expr::Var(v) = e {
            if !order.contains(v) {
                order.push(v.clone());
            }
        }
    }
    for v in order {
        let val = match sorts.get(&v) {
            Some(VarSort::Int) => Value::Int(arith.get(&v).cloned().unwrap_or_default()),
            _ => {
                let l = next;
                next += 1;
                Value::Loc(l)
            }
        };
        m.stack.insert(v, val);
    }
    for a in &h.spatial {
        if let SpatialAtom::PointsTo { root, sort, fields } = a {
            let Value::Loc(l) = value_of(&m.stack, root)? else {
                return Err(OracleError::Ill("null root".into()));
            };
            let fields = fields.iter().map(|e| value_of(&m.stack, e)).collect::<Result<_, _>>()?;
            m.heap.insert(l, Cell { sort: sort.clone(), fields });
        } else if a.is_pred() {
            return Err(OracleError::Ill("bad model of a non-base formula".into()));
        }
    }
    Ok(m)
}

/// Enumerates the base unfoldings of `k ∧ π` within the bound.
fn lhs_unfoldings(
    h: &SymbolicHeap,
    reg: &Registry,
    b: &Bound,
    fresh: &mut Fresh,
) -> Result<Vec<SymbolicHeap>, OracleError> {
    let mut out = Vec::new();
    let pending: Vec<(SpatialAtom, u32)> =
        h.spatial.iter().map(|a| (a.clone(), if a.is_pred() { b.max_unfold } else { 0 })).collect();
    let mut start = SymbolicHeap::new(vec![], h.pure.clone());
    start.spatial = Vec::new();
    expand(start, pending, reg, b, fresh, &mut out)?;
    Ok(out)
}

fn add_cell(acc: &mut SymbolicHeap, a: SpatialAtom) {
    let r = a.root().unwrap().clone();
    acc.pure.push(PureAtom::ptr_neq(r.clone(), Expr::Null));
    for other in acc.spatial.iter().filter_map(|x| x.root()) {
        acc.pure.push(PureAtom::ptr_neq(r.clone(), other.clone()));
    }
    acc.spatial.push(a);
}

fn expand(
    acc: SymbolicHeap,
    mut pending: Vec<(SpatialAtom, u32)>,
    reg: &Registry,
    b: &Bound,
    fresh: &mut Fresh,
    out: &mut Vec<SymbolicHeap>,
) -> Result<(), OracleError> {
    if acc.spatial.len() > b.locs as usize || !pure::satisfiable(&acc.pure) {
        return Ok(());
    }
    let Some((a, budget)) = pending.pop() else {
        out.push(acc);
        return Ok(());
    };
    match &a {
        SpatialAtom::Emp => expand(acc, pending, reg, b, fresh, out),
        SpatialAtom::PointsTo { .. } => {
            let mut acc = acc;
            add_cell(&mut acc, a);
            expand(acc, pending, reg, b, fresh, out)
        }
        SpatialAtom::Pred { .. } => {
            let u = unfold(&a, reg, fresh).map_err(|e| OracleError::Ill(e.to_string()))?;
            let mut base = acc.clone();
            base.pure.extend(&u.base.pure);
            expand(base, pending.clone(), reg, b, fresh, out)?;
            if budget > 0 {
                let mut rec = acc;
                rec.pure.extend(&u.rec.pure);
                for x in u.rec.spatial {
                    if x.is_pred() {
                        pending.push((x, budget - 1));
                    } else {
                        add_cell(&mut rec, x);
                    }
                }
                expand(rec, pending, reg, b, fresh, out)?;
            }
            Ok(())
        }
    }
}

/// Concrete models of a base formula within the bound, canonical up to
/// renaming of locations. Integers are enumerated by order type: all
/// arithmetic atoms compare values, so each weak order of the integer
/// variables relative to the literals is realized once, by its least
/// assignment inside the data range.
struct Concretizer<'a> {
    ptr_vars: Vec<String>,
    int_vars: Vec<String>,
    /// Atoms to check once the indexed variable is assigned.
    ptr_checks: Vec<Vec<&'a PureAtom>>,
    int_checks: Vec<Vec<&'a PureAtom>>,
    consts: Vec<BigInt>,
    /// Atoms without variables all hold.
    ground_ok: bool,
    b: &'a Bound,
}

/// One equivalence class of a weak order over integer variables.
#[derive(Clone, Debug)]
struct Class {
    konst: Option<BigInt>,
    size: usize,
}

impl<'a> Concretizer<'a> {
    fn new(
        h: &'a SymbolicHeap,
        ptr_vars: Vec<String>,
        int_vars: Vec<String>,
        consts: Vec<BigInt>,
        b: &'a Bound,
    ) -> Self {
        let order: Vec<&String> = ptr_vars.iter().chain(&int_vars).collect();
        let pos = |v: &str| order.iter().position(|w| *w == v);
        let mut checks: Vec<Vec<&PureAtom>> = vec![Vec::new(); order.len()];
        let mut ground_ok = true;
        for a in h.pure.atoms() {
            let last = a.exprs().iter().filter_map(|e| e.as_var()).filter_map(pos).max();
            match last {
                Some(i) => checks[i].push(a),
                None => ground_ok &= eval_atom(&BTreeMap::new(), a).unwrap_or(false),
            }
        }
        let int_checks = checks.split_off(ptr_vars.len());
        Concretizer { ptr_vars, int_vars, ptr_checks: checks, int_checks, consts, ground_ok, b }
    }

    fn run<F: FnMut(&BTreeMap<String, Value>) -> bool>(&self, visit: &mut F) -> bool {
        if !self.ground_ok {
            return true;
        }
        let mut s = BTreeMap::new();
        self.ptr(0, 0, &mut s, visit)
    }

    /// Returns false to stop the enumeration.
    fn ptr<F: FnMut(&BTreeMap<String, Value>) -> bool>(
        &self,
        i: usize,
        used: u32,
        s: &mut BTreeMap<String, Value>,
        visit: &mut F,
    ) -> bool {
        if i == self.ptr_vars.len() {
            let mut classes: Vec<Class> =
                self.consts.iter().map(|k| Class { konst: Some(k.clone()), size: 0 }).collect();
            let mut rank = BTreeMap::new();
            return self.int(0, s, &mut classes, &mut rank, visit);
        }
        let v = &self.ptr_vars[i];
        let mut choices = vec![Value::Null];
        choices.extend((1..=used).map(Value::Loc));
        if used < self.b.locs {
            choices.push(Value::Loc(used + 1));
        }
        for c in choices {
            let nused = match c {
                Value::Loc(l) if l > used => l,
                _ => used,
            };
            s.insert(v.clone(), c);
            let ok = self.ptr_checks[i].iter().all(|a| eval_atom(s, a).unwrap_or(false));
            if ok && !self.ptr(i + 1, nused, s, visit) {
                return false;
            }
        }
        s.remove(v);
        true
    }

    fn const_rank(&self, classes: &[Class], k: &BigInt) -> Option<usize> {
        classes.iter().position(|c| c.konst.as_ref() == Some(k))
    }

    fn rank_of(&self, classes: &[Class], rank: &BTreeMap<String, usize>, e: &Expr) -> Option<usize> {
        match e {
            Expr::Var(v) => rank.get(v).copied(),
            Expr::Int(k) => self.const_rank(classes, k),
            Expr::Null => None,
        }
    }

    fn holds(&self, classes: &[Class], rank: &BTreeMap<String, usize>, a: &PureAtom) -> bool {
        let r = |e: &Expr| self.rank_of(classes, rank, e);
        match a {
            PureAtom::ArithEq(x, y) => matches!((r(x), r(y)), (Some(p), Some(q)) if p == q),
            PureAtom::ArithLeq(x, y) => matches!((r(x), r(y)), (Some(p), Some(q)) if p <= q),
            _ => false,
        }
    }

    /// Least values for the classes inside the data range, if any.
    fn realize(&self, classes: &[Class]) -> Option<Vec<BigInt>> {
        let mut out: Vec<BigInt> = Vec::with_capacity(classes.len());
        let lo = BigInt::from(self.b.data_lo);
        let hi = BigInt::from(self.b.data_hi);
        for c in classes {
            let floor = out.last().map(|p| p + 1).unwrap_or_else(|| lo.clone());
            let v = match &c.konst {
                Some(k) if *k >= floor => k.clone(),
                Some(_) => return None,
                None => {
                    let v = if floor < lo { lo.clone() } else { floor };
                    if v > hi {
                        return None;
                    }
                    v
                }
            };
            out.push(v);
        }
        Some(out)
    }

    fn int<F: FnMut(&BTreeMap<String, Value>) -> bool>(
        &self,
        i: usize,
        s: &mut BTreeMap<String, Value>,
        classes: &mut Vec<Class>,
        rank: &mut BTreeMap<String, usize>,
        visit: &mut F,
    ) -> bool {
        if i == self.int_vars.len() {
            // Literal classes with no variable still bound the realization.
            let Some(vals) = self.realize(classes) else { return true };
            for (v, r) in rank.iter() {
                s.insert(v.clone(), Value::Int(vals[*r].clone()));
            }
            let go_on = visit(s);
            for v in rank.keys() {
                s.remove(v);
            }
            return go_on;
        }
        let v = self.int_vars[i].clone();
        let checks = &self.int_checks[i];
        for k in 0..classes.len() {
            classes[k].size += 1;
            rank.insert(v.clone(), k);
            let ok = checks.iter().all(|a| self.holds(classes, rank, a));
            if ok && !self.int(i + 1, s, classes, rank, visit) {
                return false;
            }
            classes[k].size -= 1;
        }
        for k in 0..=classes.len() {
            classes.insert(k, Class { konst: None, size: 1 });
            for r in rank.values_mut() {
                if *r >= k {
                    *r += 1;
                }
            }
            rank.insert(v.clone(), k);
            let ok = self.realize(classes).is_some() && checks.iter().all(|a| self.holds(classes, rank, a));
            if ok && !self.int(i + 1, s, classes, rank, visit) {
                return false;
            }
            rank.remove(&v);
            classes.remove(k);
            for r in rank.values_mut() {
                if *r > k {
                    *r -= 1;
                }
            }
        }
        rank.remove(&v);
        true
    }
}

fn collect_ints(e: &Expr, out: &mut BTreeSet<BigInt>) {
    if let Expr::Int(k) = e {
        out.insert(k.clone());
    }
}

fn heap_ints(spatial: &[SpatialAtom], pure: &Pure, out: &mut BTreeSet<BigInt>) {
    for a in spatial {
        match a {
            SpatialAtom::PointsTo { root, fields, .. } => {
                collect_ints(root, out);
                fields.iter().for_each(|f| collect_ints(f, out));
            }
            SpatialAtom::Pred { args, .. } => args.iter().for_each(|x| collect_ints(x, out)),
            SpatialAtom::Emp => {}
        }
    }
    for a in pure.atoms() {
        a.exprs().into_iter().for_each(|x| collect_ints(x, out));
    }
}

/// Integer literals that may be compared against during evaluation.
fn literals(e: &Entailment, reg: &Registry) -> Vec<BigInt> {
    let mut out = BTreeSet::new();
    heap_ints(&e.lhs.spatial, &e.lhs.pure, &mut out);
    heap_ints(&e.rhs.spatial, &e.rhs.pure, &mut out);
    for d in &reg.preds {
        heap_ints(&d.body, &d.side, &mut out);
    }
    out.into_iter().collect()
}

/// Builds the heap of a base formula under a full stack.
fn materialize(h: &SymbolicHeap, s: &BTreeMap<String, Value>) -> Option<BTreeMap<u32, Cell>> {
    let mut heap = BTreeMap::new();
    for a in &h.spatial {
        if let SpatialAtom::PointsTo { root, sort, fields } = a {
            let Value::Loc(l) = value_of(s, root).ok()? else { return None };
            let fields = fields.iter().map(|e| value_of(s, e)).collect::<Result<Vec<_>, _>>().ok()?;
            if heap.insert(l, Cell { sort: sort.clone(), fields }).is_some() {
                return None;
            }
        }
    }
    Some(heap)
}

/// First fresh-name index that cannot clash with names in `vars`.
fn fresh_after<'a, I: IntoIterator<Item = &'a String>>(vars: I) -> u64 {
    vars.into_iter()
        .filter_map(|v| v.rsplit_once('#').and_then(|(_, n)| n.parse::<u64>().ok()))
        .max()
        .map_or(1, |n| n + 1)
}

/// Enumerates the models of `h` within `b`, canonical up to renaming of
/// locations, until `visit` returns false. The stack covers the free
/// variables of `h` and every variable in `hint`, whose sorts are taken
/// from `hint` when given there. Each model's heap is exactly the footprint
/// of `h`.
pub fn models<F: FnMut(&HeapModel) -> bool>(
    h: &SymbolicHeap,
    hint: &BTreeMap<String, VarSort>,
    consts: &[BigInt],
    reg: &Registry,
    b: &Bound,
    mut visit: F,
) -> Result<(), OracleError> {
    let mut free: BTreeSet<String> = h.free_vars();
    free.extend(hint.keys().cloned());
    let mut fresh = Fresh::starting(fresh_after(&free));
    let mut consts: Vec<BigInt> = consts.to_vec();
    let mut lits = BTreeSet::new();
    heap_ints(&h.spatial, &h.pure, &mut lits);
    for d in &reg.preds {
        heap_ints(&d.body, &d.side, &mut lits);
    }
    consts.extend(lits);
    consts.sort();
    consts.dedup();
    for base in lhs_unfoldings(h, reg, b, &mut fresh)? {
        let mut local = BTreeMap::new();
        reg.infer_heap_sorts(&base.spatial, &base.pure, &mut local).map_err(OracleError::Ill)?;
        reg.infer_heap_sorts(&h.spatial, &h.pure, &mut local).map_err(OracleError::Ill)?;
        for (k, v) in hint {
            local.insert(k.clone(), *v);
        }
        // Free variables first (sorted), then unfolding witnesses.
        let mut ptr_vars: Vec<String> = Vec::new();
        let mut int_vars: Vec<String> = Vec::new();
        let mut all: Vec<String> = free.iter().cloned().collect();
        all.extend(base.free_vars().into_iter().filter(|v| !free.contains(v)));
        for v in all {
            match local.get(&v) {
                Some(VarSort::Int) => int_vars.push(v),
                _ => ptr_vars.push(v),
            }
        }
        let c = Concretizer::new(&base, ptr_vars, int_vars, consts.clone(), b);
        let go_on = c.run(&mut |s| {
            let Some(heap) = materialize(&base, s) else { return true };
            let m = HeapModel {
                stack: s.iter().filter(|(k, _)| free.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
                heap,
            };
            visit(&m)
        });
        if !go_on {
            break;
        }
    }
    Ok(())
}

/// Enumerates models of `e.lhs` within `b` and looks for one that falsifies
/// `e.rhs`. `BoundedValid` is not a proof of validity.
pub fn oracle_entails(e: &Entailment, reg: &Registry, b: &Bound) -> Result<OracleVerdict, OracleError> {
    let sorts = reg.infer_sorts(e).map_err(OracleError::Ill)?;
    let mut hint: BTreeMap<String, VarSort> = BTreeMap::new();
    for v in e.free_vars() {
        hint.insert(v.clone(), sorts.get(&v).copied().unwrap_or(VarSort::Ptr));
    }
    let mut found: Option<HeapModel> = None;
    let mut failure: Option<OracleError> = None;
    models(&e.lhs, &hint, &literals(e, reg), reg, b, |m| match eval_exact(m, &e.rhs, reg) {
        Ok(true) => true,
        Ok(false) => {
            found = Some(m.clone());
            false
        }
        Err(err) => {
            failure = Some(err);
            false
        }
    })?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(match found {
        Some(m) => OracleVerdict::Invalid(m),
        None => OracleVerdict::BoundedValid,
    })
}
