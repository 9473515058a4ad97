//! Formulas: expressions, pure atoms, spatial atoms, symbolic heaps and entailments.

use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A term. Pointer positions hold `Var` or `Null`; arithmetic positions hold `Var` or `Int`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Null,
    Int(BigInt),
    Var(String),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn int(k: i64) -> Expr {
        Expr::Int(BigInt::from(k))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Expr::Null)
    }

    pub fn subst(&self, s: &Subst) -> Expr {
        match self {
            Expr::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Null => write!(f, "null"),
            Expr::Int(k) => write!(f, "{k}"),
            Expr::Var(v) => write!(f, "{v}"),
        }
    }
}

/// Value sort of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarSort {
    Ptr,
    Int,
}

impl fmt::Display for VarSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarSort::Ptr => write!(f, "ptr"),
            VarSort::Int => write!(f, "int"),
        }
    }
}

/// A pure atom. Symmetric atoms are stored with ordered arguments so that
/// syntactic membership tests are insensitive to orientation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PureAtom {
    PtrEq(Expr, Expr),
    PtrNeq(Expr, Expr),
    ArithEq(Expr, Expr),
    ArithLeq(Expr, Expr),
    False,
}

fn ordered(a: Expr, b: Expr) -> (Expr, Expr) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl PureAtom {
    pub fn ptr_eq(a: Expr, b: Expr) -> PureAtom {
        let (a, b) = ordered(a, b);
        PureAtom::PtrEq(a, b)
    }

    pub fn ptr_neq(a: Expr, b: Expr) -> PureAtom {
        let (a, b) = ordered(a, b);
        PureAtom::PtrNeq(a, b)
    }

    pub fn arith_eq(a: Expr, b: Expr) -> PureAtom {
        let (a, b) = ordered(a, b);
        PureAtom::ArithEq(a, b)
    }

    pub fn arith_leq(a: Expr, b: Expr) -> PureAtom {
        PureAtom::ArithLeq(a, b)
    }

    pub fn subst(&self, s: &Subst) -> PureAtom {
        match self {
            PureAtom::PtrEq(a, b) => PureAtom::ptr_eq(a.subst(s), b.subst(s)),
            PureAtom::PtrNeq(a, b) => PureAtom::ptr_neq(a.subst(s), b.subst(s)),
            PureAtom::ArithEq(a, b) => PureAtom::arith_eq(a.subst(s), b.subst(s)),
            PureAtom::ArithLeq(a, b) => PureAtom::arith_leq(a.subst(s), b.subst(s)),
            PureAtom::False => PureAtom::False,
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            PureAtom::PtrEq(a, b) | PureAtom::PtrNeq(a, b) | PureAtom::ArithEq(a, b) | PureAtom::ArithLeq(a, b) => {
                vec![a, b]
            }
            PureAtom::False => vec![],
        }
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, PureAtom::PtrEq(..) | PureAtom::PtrNeq(..))
    }

    /// `E = E` for either sort.
    pub fn is_trivial_eq(&self) -> bool {
        match self {
            PureAtom::PtrEq(a, b) | PureAtom::ArithEq(a, b) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for PureAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Keep `x != null` rather than `null != x`.
        let show = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| {
            if a.is_null() && !b.is_null() {
                write!(f, "{b}{op}{a}")
            } else {
                write!(f, "{a}{op}{b}")
            }
        };
        match self {
            PureAtom::PtrEq(a, b) | PureAtom::ArithEq(a, b) => show(f, a, "=", b),
            PureAtom::PtrNeq(a, b) => show(f, a, "!=", b),
            PureAtom::ArithLeq(a, b) => write!(f, "{a}<={b}"),
            PureAtom::False => write!(f, "false"),
        }
    }
}

/// Conjunction of pure atoms; the empty conjunction is `true`.
/// Insertion order is kept (deterministic printing), duplicates are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Pure {
    atoms: Vec<PureAtom>,
}

impl Pure {
    pub fn new() -> Pure {
        Pure { atoms: Vec::new() }
    }

    pub fn from_atoms<I: IntoIterator<Item = PureAtom>>(it: I) -> Pure {
        let mut p = Pure::new();
        for a in it {
            p.push(a);
        }
        p
    }

    pub fn push(&mut self, a: PureAtom) {
        if !self.atoms.contains(&a) {
            self.atoms.push(a);
        }
    }

    pub fn extend(&mut self, other: &Pure) {
        for a in &other.atoms {
            self.push(a.clone());
        }
    }

    pub fn contains(&self, a: &PureAtom) -> bool {
        self.atoms.contains(a)
    }

    pub fn remove(&mut self, a: &PureAtom) {
        self.atoms.retain(|b| b != a);
    }

    pub fn atoms(&self) -> &[PureAtom] {
        &self.atoms
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn subst(&self, s: &Subst) -> Pure {
        Pure::from_atoms(self.atoms.iter().map(|a| a.subst(s)))
    }

    /// Same atoms regardless of order.
    pub fn same_set(&self, other: &Pure) -> bool {
        let a: BTreeSet<_> = self.atoms.iter().collect();
        let b: BTreeSet<_> = other.atoms.iter().collect();
        a == b
    }
}

impl fmt::Display for Pure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " /\\ ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A spatial atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpatialAtom {
    Emp,
    PointsTo { root: Expr, sort: String, fields: Vec<Expr> },
    Pred { name: String, args: Vec<Expr>, unfold: u32 },
}

impl SpatialAtom {
    pub fn pto(root: Expr, sort: &str, fields: Vec<Expr>) -> SpatialAtom {
        SpatialAtom::PointsTo { root, sort: sort.to_string(), fields }
    }

    pub fn pred(name: &str, args: Vec<Expr>, unfold: u32) -> SpatialAtom {
        SpatialAtom::Pred { name: name.to_string(), args, unfold }
    }

    /// Root expression; `None` for `emp`.
    pub fn root(&self) -> Option<&Expr> {
        match self {
            SpatialAtom::Emp => None,
            SpatialAtom::PointsTo { root, .. } => Some(root),
            SpatialAtom::Pred { args, .. } => args.first(),
        }
    }

    /// Segment argument of a predicate occurrence.
    pub fn segment(&self) -> Option<&Expr> {
        match self {
            SpatialAtom::Pred { args, .. } => args.get(1),
            _ => None,
        }
    }

    pub fn is_pred(&self) -> bool {
        matches!(self, SpatialAtom::Pred { .. })
    }

    pub fn unfold_number(&self) -> Option<u32> {
        match self {
            SpatialAtom::Pred { unfold, .. } => Some(*unfold),
            _ => None,
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            SpatialAtom::Emp => vec![],
            SpatialAtom::PointsTo { root, fields, .. } => std::iter::once(root).chain(fields.iter()).collect(),
            SpatialAtom::Pred { args, .. } => args.iter().collect(),
        }
    }

    /// Unfold numbers are preserved.
    pub fn subst(&self, s: &Subst) -> SpatialAtom {
        match self {
            SpatialAtom::Emp => SpatialAtom::Emp,
            SpatialAtom::PointsTo { root, sort, fields } => SpatialAtom::PointsTo {
                root: root.subst(s),
                sort: sort.clone(),
                fields: fields.iter().map(|e| e.subst(s)).collect(),
            },
            SpatialAtom::Pred { name, args, unfold } => SpatialAtom::Pred {
                name: name.clone(),
                args: args.iter().map(|e| e.subst(s)).collect(),
                unfold: *unfold,
            },
        }
    }

    /// Equality ignoring unfold numbers.
    pub fn same_shape(&self, other: &SpatialAtom) -> bool {
        match (self, other) {
            (SpatialAtom::Pred { name: a, args: x, .. }, SpatialAtom::Pred { name: b, args: y, .. }) => {
                a == b && x == y
            }
            _ => self == other,
        }
    }

    pub fn with_unfold(&self, k: u32) -> SpatialAtom {
        match self {
            SpatialAtom::Pred { name, args, .. } => {
                SpatialAtom::Pred { name: name.clone(), args: args.clone(), unfold: k }
            }
            _ => self.clone(),
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Expr]) -> fmt::Result {
    write!(f, "(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, ")")
}

impl fmt::Display for SpatialAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialAtom::Emp => write!(f, "emp"),
            SpatialAtom::PointsTo { root, sort, fields } => {
                write!(f, "{root}->{sort}")?;
                write_args(f, fields)
            }
            SpatialAtom::Pred { name, args, unfold } => {
                write!(f, "{name}")?;
                write_args(f, args)?;
                if *unfold > 0 {
                    write!(f, "^{unfold}")?;
                }
                Ok(())
            }
        }
    }
}

/// `κ ∧ π`. The spatial list never stores `Emp`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymbolicHeap {
    pub spatial: Vec<SpatialAtom>,
    pub pure: Pure,
}

impl SymbolicHeap {
    pub fn new(spatial: Vec<SpatialAtom>, pure: Pure) -> SymbolicHeap {
        SymbolicHeap { spatial: spatial.into_iter().filter(|a| !matches!(a, SpatialAtom::Emp)).collect(), pure }
    }

    pub fn emp() -> SymbolicHeap {
        SymbolicHeap::default()
    }

    pub fn subst(&self, s: &Subst) -> SymbolicHeap {
        SymbolicHeap { spatial: self.spatial.iter().map(|a| a.subst(s)).collect(), pure: self.pure.subst(s) }
    }

    pub fn is_base(&self) -> bool {
        self.spatial.iter().all(|a| !a.is_pred())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_vars(self.spatial.iter().flat_map(|a| a.exprs()), &mut out);
        collect_vars(self.pure.atoms().iter().flat_map(|a| a.exprs()), &mut out);
        out
    }

    pub fn spatial_vars(&self) -> BTreeSet<String> {
        spatial_vars(&self.spatial)
    }

    /// Spatial multisets equal, unfold numbers ignored.
    pub fn same_spatial(&self, other: &SymbolicHeap) -> bool {
        same_spatial(&self.spatial, &other.spatial)
    }
}

pub fn spatial_vars(k: &[SpatialAtom]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_vars(k.iter().flat_map(|a| a.exprs()), &mut out);
    out
}

pub fn same_spatial(a: &[SpatialAtom], b: &[SpatialAtom]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for x in a {
        for (j, y) in b.iter().enumerate() {
            if !used[j] && x.same_shape(y) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn collect_vars<'a, I: Iterator<Item = &'a Expr>>(it: I, out: &mut BTreeSet<String>) {
    for e in it {
        if let Expr::Var(v) = e {
            out.insert(v.clone());
        }
    }
}

impl fmt::Display for SymbolicHeap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spatial.is_empty() {
            write!(f, "emp")?;
        }
        for (i, a) in self.spatial.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            write!(f, "{a}")?;
        }
        if !self.pure.is_true() {
            write!(f, " /\\ {}", self.pure)?;
        }
        Ok(())
    }
}

/// `lhs ⊢_frame rhs`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Entailment {
    pub lhs: SymbolicHeap,
    pub rhs: SymbolicHeap,
    pub frame: Vec<SpatialAtom>,
}

impl Entailment {
    pub fn new(lhs: SymbolicHeap, rhs: SymbolicHeap) -> Entailment {
        Entailment { lhs, rhs, frame: Vec::new() }
    }

    /// Substitution is applied to both sides and the frame.
    pub fn subst(&self, s: &Subst) -> Entailment {
        Entailment {
            lhs: self.lhs.subst(s),
            rhs: self.rhs.subst(s),
            frame: self.frame.iter().map(|a| a.subst(s)).collect(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.free_vars();
        v.extend(self.rhs.free_vars());
        v
    }

    /// `FV(rhs) ⊆ FV(lhs) ∪ {null}`.
    pub fn rhs_vars_covered(&self) -> bool {
        let l = self.lhs.free_vars();
        self.rhs.free_vars().iter().all(|v| l.contains(v))
    }

    /// Every LHS predicate occurrence gets unfold number 0.
    pub fn reset_unfold(&self) -> Entailment {
        let mut e = self.clone();
        for a in e.lhs.spatial.iter_mut().chain(e.rhs.spatial.iter_mut()) {
            *a = a.with_unfold(0);
        }
        e
    }
}

impl fmt::Display for Entailment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.lhs, self.rhs)
    }
}

/// Simultaneous substitution from variable names to expressions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Subst {
    map: BTreeMap<String, Expr>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn single(v: &str, e: Expr) -> Subst {
        let mut s = Subst::new();
        s.insert(v, e);
        s
    }

    pub fn insert(&mut self, v: &str, e: Expr) {
        self.map.insert(v.to_string(), e);
    }

    pub fn get(&self, v: &str) -> Option<&Expr> {
        self.map.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.map.iter()
    }

    /// `self` followed by `next`: images are rewritten by `next`, and the
    /// bindings of `next` are added where `self` has none.
    pub fn then(&self, next: &Subst) -> Subst {
        let mut out = Subst::new();
        for (v, e) in self.iter() {
            out.insert(v, e.subst(next));
        }
        for (v, e) in next.iter() {
            if out.get(v).is_none() {
                out.insert(v, e.clone());
            }
        }
        out
    }

    /// Non-identity bindings only.
    pub fn nontrivial(&self) -> Subst {
        Subst {
            map: self
                .map
                .iter()
                .filter(|(k, v)| v.as_var() != Some(k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Subst {
    /// Printed as `[new/old, ...]`, i.e. the image first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}/{k}")?;
        }
        write!(f, "]")
    }
}

/// `roots(κ)`: union of the root expressions of the atoms.
pub fn roots(k: &[SpatialAtom]) -> BTreeSet<Expr> {
    k.iter().filter_map(|a| a.root().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Expr {
        Expr::var(s)
    }

    #[test]
    fn substitute_pointsto_and_neq() {
        let h = SymbolicHeap::new(
            vec![SpatialAtom::pto(v("x"), "c", vec![v("y")])],
            Pure::from_atoms([PureAtom::ptr_neq(v("x"), v("z"))]),
        );
        let out = h.subst(&Subst::single("x", v("z")));
        assert_eq!(out.to_string(), "z->c(y) /\\ z!=z");
    }

    #[test]
    fn substitute_emp_is_identity() {
        let h = SymbolicHeap::emp();
        assert_eq!(h.subst(&Subst::single("a", v("b"))), h);
        assert_eq!(h.to_string(), "emp");
    }

    #[test]
    fn substitute_keeps_unfold_number() {
        let a = SpatialAtom::pred("lls", vec![v("X"), Expr::Null, v("m'"), v("ma")], 1);
        let mut s = Subst::new();
        s.insert("X", v("x"));
        s.insert("m'", v("mi"));
        assert_eq!(a.subst(&s).to_string(), "lls(x,null,mi,ma)^1");
    }

    #[test]
    fn substitution_is_simultaneous() {
        let a = SpatialAtom::pto(v("x"), "c", vec![v("y")]);
        let mut s = Subst::new();
        s.insert("x", v("y"));
        s.insert("y", v("x"));
        assert_eq!(a.subst(&s).to_string(), "y->c(x)");
    }

    #[test]
    fn roots_examples() {
        assert!(roots(&[]).is_empty());
        let k = vec![SpatialAtom::pto(v("x"), "c", vec![v("y")]), SpatialAtom::pred("P", vec![v("z"), v("F")], 0)];
        assert_eq!(roots(&k), [v("x"), v("z")].into_iter().collect());
        let k2 = vec![SpatialAtom::pred("P", vec![v("x"), v("F")], 0), SpatialAtom::pred("Q", vec![v("x"), v("G")], 0)];
        assert_eq!(roots(&k2), [v("x")].into_iter().collect());
    }

    #[test]
    fn symmetric_atoms_are_oriented() {
        assert_eq!(PureAtom::ptr_neq(v("x"), Expr::Null), PureAtom::ptr_neq(Expr::Null, v("x")));
        assert_eq!(PureAtom::ptr_neq(Expr::Null, v("x")).to_string(), "x!=null");
    }
}
