//! Quantifier-free multi-sorted terms: integers, booleans, locations
//! (block-id/offset pairs), and integer-indexed arrays of integers or
//! locations. Comes with SMT-LIB 2 emission and a ground-term evaluator
//! used by the translation-validation harness.
//!
//! Construction folds literals and read-over-write; everything else is the
//! solver's job. Sort mismatches in constructors are programming errors and
//! panic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sort {
    Int,
    Bool,
    Loc,
    ArrInt,
    ArrLoc,
}

impl Sort {
    pub fn smt(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
            Sort::Loc => "Loc",
            Sort::ArrInt => "(Array Int Int)",
            Sort::ArrLoc => "(Array Int Loc)",
        }
    }

    fn elem(self) -> Sort {
        match self {
            Sort::ArrInt => Sort::Int,
            Sort::ArrLoc => Sort::Loc,
            _ => panic!("element sort of non-array {self:?}"),
        }
    }
}

#[derive(PartialEq, Debug)]
enum TNode {
    Var(String, Sort),
    IntLit(i128),
    BoolLit(bool),
    Add(Term, Term),
    Sub(Term, Term),
    Mul(Term, Term),
    EDiv(Term, i128),
    EMod(Term, i128),
    Le(Term, Term),
    Lt(Term, Term),
    Eq(Term, Term),
    Not(Term),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Term, Term),
    Ite(Term, Term, Term),
    Read(Term, Term),
    Store(Term, Term, Term),
    MkLoc(Term, Term),
    Fst(Term),
    Snd(Term),
}

#[derive(Clone, Debug)]
pub struct Term {
    node: Arc<TNode>,
    sort: Sort,
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.node, &other.node) || self.node == other.node
    }
}

fn mk(node: TNode, sort: Sort) -> Term {
    Term { node: Arc::new(node), sort }
}

impl Term {
    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn lit(v: i128) -> Term {
        mk(TNode::IntLit(v), Sort::Int)
    }

    pub fn bool_lit(v: bool) -> Term {
        mk(TNode::BoolLit(v), Sort::Bool)
    }

    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        mk(TNode::Var(name.into(), sort), sort)
    }

    pub fn as_int_lit(&self) -> Option<i128> {
        match &*self.node {
            TNode::IntLit(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool_lit(&self) -> Option<bool> {
        match &*self.node {
            TNode::BoolLit(v) => Some(*v),
            _ => None,
        }
    }

    fn expect(&self, sort: Sort, ctx: &str) {
        assert!(self.sort == sort, "{ctx}: expected {sort:?}, got {:?}", self.sort);
    }

    pub fn add(a: Term, b: Term) -> Term {
        a.expect(Sort::Int, "add");
        b.expect(Sort::Int, "add");
        match (a.as_int_lit(), b.as_int_lit()) {
            (Some(x), Some(y)) => Term::lit(x + y),
            (Some(0), None) => b,
            (None, Some(0)) => a,
            _ => mk(TNode::Add(a, b), Sort::Int),
        }
    }

    pub fn sub(a: Term, b: Term) -> Term {
        a.expect(Sort::Int, "sub");
        b.expect(Sort::Int, "sub");
        match (a.as_int_lit(), b.as_int_lit()) {
            (Some(x), Some(y)) => Term::lit(x - y),
            (None, Some(0)) => a,
            _ => mk(TNode::Sub(a, b), Sort::Int),
        }
    }

    pub fn mul(a: Term, b: Term) -> Term {
        a.expect(Sort::Int, "mul");
        b.expect(Sort::Int, "mul");
        match (a.as_int_lit(), b.as_int_lit()) {
            (Some(x), Some(y)) => Term::lit(x * y),
            (Some(1), None) => b,
            (None, Some(1)) => a,
            (Some(0), _) | (_, Some(0)) => Term::lit(0),
            _ => mk(TNode::Mul(a, b), Sort::Int),
        }
    }

    /// Euclidean division by a nonzero constant.
    pub fn ediv(a: Term, c: i128) -> Term {
        a.expect(Sort::Int, "ediv");
        assert!(c != 0, "division by zero constant");
        match a.as_int_lit() {
            Some(x) => Term::lit(x.div_euclid(c)),
            None => mk(TNode::EDiv(a, c), Sort::Int),
        }
    }

    pub fn emod(a: Term, c: i128) -> Term {
        a.expect(Sort::Int, "emod");
        assert!(c != 0, "modulo by zero constant");
        match a.as_int_lit() {
            Some(x) => Term::lit(x.rem_euclid(c)),
            None => mk(TNode::EMod(a, c), Sort::Int),
        }
    }

    pub fn le(a: Term, b: Term) -> Term {
        a.expect(Sort::Int, "le");
        b.expect(Sort::Int, "le");
        match (a.as_int_lit(), b.as_int_lit()) {
            (Some(x), Some(y)) => Term::bool_lit(x <= y),
            _ => mk(TNode::Le(a, b), Sort::Bool),
        }
    }

    pub fn lt(a: Term, b: Term) -> Term {
        a.expect(Sort::Int, "lt");
        b.expect(Sort::Int, "lt");
        match (a.as_int_lit(), b.as_int_lit()) {
            (Some(x), Some(y)) => Term::bool_lit(x < y),
            _ => mk(TNode::Lt(a, b), Sort::Bool),
        }
    }

    /// Equality at any matching sort.
    pub fn eq(a: Term, b: Term) -> Term {
        assert!(a.sort == b.sort, "eq: sort mismatch {:?} vs {:?}", a.sort, b.sort);
        if a == b {
            return Term::bool_lit(true);
        }
        match (&*a.node, &*b.node) {
            (TNode::IntLit(x), TNode::IntLit(y)) => Term::bool_lit(x == y),
            (TNode::BoolLit(x), TNode::BoolLit(y)) => Term::bool_lit(x == y),
            (TNode::MkLoc(a1, a2), TNode::MkLoc(b1, b2)) => {
                match (a1.as_int_lit(), a2.as_int_lit(), b1.as_int_lit(), b2.as_int_lit()) {
                    (Some(x1), Some(x2), Some(y1), Some(y2)) => {
                        Term::bool_lit(x1 == y1 && x2 == y2)
                    }
                    _ => mk(TNode::Eq(a, b), Sort::Bool),
                }
            }
            _ => mk(TNode::Eq(a, b), Sort::Bool),
        }
    }

    pub fn not(a: Term) -> Term {
        a.expect(Sort::Bool, "not");
        match &*a.node {
            TNode::BoolLit(v) => Term::bool_lit(!v),
            TNode::Not(inner) => inner.clone(),
            _ => mk(TNode::Not(a), Sort::Bool),
        }
    }

    pub fn and(conjuncts: Vec<Term>) -> Term {
        let mut out = vec![];
        for c in conjuncts {
            c.expect(Sort::Bool, "and");
            match c.as_bool_lit() {
                Some(true) => {}
                Some(false) => return Term::bool_lit(false),
                None => out.push(c),
            }
        }
        match out.len() {
            0 => Term::bool_lit(true),
            1 => out.pop().unwrap(),
            _ => mk(TNode::And(out), Sort::Bool),
        }
    }

    pub fn or(disjuncts: Vec<Term>) -> Term {
        let mut out = vec![];
        for d in disjuncts {
            d.expect(Sort::Bool, "or");
            match d.as_bool_lit() {
                Some(false) => {}
                Some(true) => return Term::bool_lit(true),
                None => out.push(d),
            }
        }
        match out.len() {
            0 => Term::bool_lit(false),
            1 => out.pop().unwrap(),
            _ => mk(TNode::Or(out), Sort::Bool),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        a.expect(Sort::Bool, "implies");
        b.expect(Sort::Bool, "implies");
        match (a.as_bool_lit(), b.as_bool_lit()) {
            (Some(true), _) => b,
            (Some(false), _) => Term::bool_lit(true),
            (_, Some(true)) => Term::bool_lit(true),
            _ => mk(TNode::Implies(a, b), Sort::Bool),
        }
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        c.expect(Sort::Bool, "ite");
        assert!(t.sort == e.sort, "ite: branch sorts differ");
        match c.as_bool_lit() {
            Some(true) => t,
            Some(false) => e,
            None => {
                if t == e {
                    t
                } else {
                    let sort = t.sort;
                    mk(TNode::Ite(c, t, e), sort)
                }
            }
        }
    }

    /// Array read, folding read-over-write.
    pub fn read(arr: Term, idx: Term) -> Term {
        assert!(matches!(arr.sort, Sort::ArrInt | Sort::ArrLoc), "read of non-array");
        idx.expect(Sort::Int, "read index");
        if let TNode::Store(inner, i, v) = &*arr.node {
            if *i == idx {
                return v.clone();
            }
            if let (Some(a), Some(b)) = (i.as_int_lit(), idx.as_int_lit()) {
                if a != b {
                    return Term::read(inner.clone(), idx);
                }
            }
        }
        let sort = arr.sort.elem();
        mk(TNode::Read(arr, idx), sort)
    }

    pub fn store(arr: Term, idx: Term, val: Term) -> Term {
        assert!(matches!(arr.sort, Sort::ArrInt | Sort::ArrLoc), "store to non-array");
        idx.expect(Sort::Int, "store index");
        val.expect(arr.sort.elem(), "store value");
        let sort = arr.sort;
        mk(TNode::Store(arr, idx, val), sort)
    }

    pub fn mk_loc(base: Term, off: Term) -> Term {
        base.expect(Sort::Int, "mk_loc base");
        off.expect(Sort::Int, "mk_loc offset");
        mk(TNode::MkLoc(base, off), Sort::Loc)
    }

    pub fn fst(l: Term) -> Term {
        l.expect(Sort::Loc, "fst");
        if let TNode::MkLoc(b, _) = &*l.node {
            return b.clone();
        }
        mk(TNode::Fst(l), Sort::Int)
    }

    pub fn snd(l: Term) -> Term {
        l.expect(Sort::Loc, "snd");
        if let TNode::MkLoc(_, o) = &*l.node {
            return o.clone();
        }
        mk(TNode::Snd(l), Sort::Int)
    }

    /// Collects free variables with their sorts.
    pub fn free_vars(&self, out: &mut BTreeSet<(String, Sort)>) {
        match &*self.node {
            TNode::Var(name, sort) => {
                out.insert((name.clone(), *sort));
            }
            TNode::IntLit(_) | TNode::BoolLit(_) => {}
            TNode::Add(a, b)
            | TNode::Sub(a, b)
            | TNode::Mul(a, b)
            | TNode::Le(a, b)
            | TNode::Lt(a, b)
            | TNode::Eq(a, b)
            | TNode::Implies(a, b)
            | TNode::Read(a, b)
            | TNode::MkLoc(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            TNode::EDiv(a, _) | TNode::EMod(a, _) | TNode::Not(a) | TNode::Fst(a)
            | TNode::Snd(a) => a.free_vars(out),
            TNode::And(xs) | TNode::Or(xs) => {
                for x in xs {
                    x.free_vars(out);
                }
            }
            TNode::Ite(c, t, e) => {
                c.free_vars(out);
                t.free_vars(out);
                e.free_vars(out);
            }
            TNode::Store(a, i, v) => {
                a.free_vars(out);
                i.free_vars(out);
                v.free_vars(out);
            }
        }
    }

    /// Counts `ite` nodes (used by formula-shape tests).
    pub fn count_ites(&self) -> usize {
        let own = matches!(&*self.node, TNode::Ite(..)) as usize;
        own + match &*self.node {
            TNode::Add(a, b)
            | TNode::Sub(a, b)
            | TNode::Mul(a, b)
            | TNode::Le(a, b)
            | TNode::Lt(a, b)
            | TNode::Eq(a, b)
            | TNode::Implies(a, b)
            | TNode::Read(a, b)
            | TNode::MkLoc(a, b) => a.count_ites() + b.count_ites(),
            TNode::EDiv(a, _) | TNode::EMod(a, _) | TNode::Not(a) | TNode::Fst(a)
            | TNode::Snd(a) => a.count_ites(),
            TNode::And(xs) | TNode::Or(xs) => xs.iter().map(Term::count_ites).sum(),
            TNode::Ite(c, t, e) => c.count_ites() + t.count_ites() + e.count_ites(),
            TNode::Store(a, i, v) => a.count_ites() + i.count_ites() + v.count_ites(),
            _ => 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Symbol table and fresh names.

#[derive(Clone, Debug, Default)]
pub struct SymTab {
    sorts: BTreeMap<String, Sort>,
    counters: HashMap<String, u32>,
}

impl SymTab {
    pub fn new() -> Self {
        SymTab::default()
    }

    pub fn declare(&mut self, name: &str, sort: Sort) -> Term {
        match self.sorts.get(name) {
            Some(s) => assert!(*s == sort, "symbol {name} redeclared at a different sort"),
            None => {
                self.sorts.insert(name.to_string(), sort);
            }
        }
        Term::var(name, sort)
    }

    /// Next unused `prefix_<k>`; deterministic, skips manual clashes.
    pub fn fresh(&mut self, prefix: &str, sort: Sort) -> Term {
        loop {
            let k = self.counters.entry(prefix.to_string()).or_insert(0);
            let name = format!("{prefix}_{k}");
            *k += 1;
            if !self.sorts.contains_key(&name) {
                self.sorts.insert(name.clone(), sort);
                return Term::var(name, sort);
            }
        }
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.sorts.get(name).copied()
    }
}

// ---------------------------------------------------------------------------
// SMT-LIB 2 emission.

fn smt_term(t: &Term, out: &mut String) {
    match &*t.node {
        TNode::Var(name, _) => out.push_str(name),
        TNode::IntLit(v) => {
            if *v < 0 {
                out.push_str(&format!("(- {})", -v));
            } else {
                out.push_str(&v.to_string());
            }
        }
        TNode::BoolLit(v) => out.push_str(if *v { "true" } else { "false" }),
        TNode::Add(a, b) => smt_app("+", &[a, b], out),
        TNode::Sub(a, b) => smt_app("-", &[a, b], out),
        TNode::Mul(a, b) => smt_app("*", &[a, b], out),
        TNode::EDiv(a, c) => {
            out.push_str("(div ");
            smt_term(a, out);
            out.push_str(&format!(" {c})"));
        }
        TNode::EMod(a, c) => {
            out.push_str("(mod ");
            smt_term(a, out);
            out.push_str(&format!(" {c})"));
        }
        TNode::Le(a, b) => smt_app("<=", &[a, b], out),
        TNode::Lt(a, b) => smt_app("<", &[a, b], out),
        TNode::Eq(a, b) => smt_app("=", &[a, b], out),
        TNode::Not(a) => smt_app("not", &[a], out),
        TNode::And(xs) => smt_app_vec("and", xs, out),
        TNode::Or(xs) => smt_app_vec("or", xs, out),
        TNode::Implies(a, b) => smt_app("=>", &[a, b], out),
        TNode::Ite(c, t, e) => smt_app("ite", &[c, t, e], out),
        TNode::Read(a, i) => smt_app("select", &[a, i], out),
        TNode::Store(a, i, v) => smt_app("store", &[a, i, v], out),
        TNode::MkLoc(b, o) => smt_app("mk-loc", &[b, o], out),
        TNode::Fst(l) => smt_app("loc-base", &[l], out),
        TNode::Snd(l) => smt_app("loc-off", &[l], out),
    }
}

fn smt_app(head: &str, args: &[&Term], out: &mut String) {
    out.push('(');
    out.push_str(head);
    for a in args {
        out.push(' ');
        smt_term(a, out);
    }
    out.push(')');
}

fn smt_app_vec(head: &str, args: &[Term], out: &mut String) {
    out.push('(');
    out.push_str(head);
    for a in args {
        out.push(' ');
        smt_term(a, out);
    }
    out.push(')');
}

/// A self-contained script whose `unsat` answer means the goal is valid.
pub fn emit_smtlib(goal: &Term) -> String {
    goal.expect(Sort::Bool, "emit_smtlib goal");
    let mut vars = BTreeSet::new();
    goal.free_vars(&mut vars);
    let mut out = String::new();
    out.push_str("(set-logic ALL)\n");
    out.push_str("(declare-datatype Loc ((mk-loc (loc-base Int) (loc-off Int))))\n");
    for (name, sort) in &vars {
        out.push_str(&format!("(declare-const {name} {})\n", sort.smt()));
    }
    out.push_str("(assert (not ");
    smt_term(goal, &mut out);
    out.push_str("))\n(check-sat)\n");
    out
}

// ---------------------------------------------------------------------------
// Ground evaluation.

/// Finite-map array value with a default for unwritten indices.
#[derive(Clone, PartialEq, Debug)]
pub struct ArrVal<T: Clone + PartialEq> {
    pub map: BTreeMap<i128, T>,
    pub default: T,
}

impl<T: Clone + PartialEq> ArrVal<T> {
    pub fn new(default: T) -> Self {
        ArrVal { map: BTreeMap::new(), default }
    }

    pub fn get(&self, i: i128) -> T {
        self.map.get(&i).cloned().unwrap_or_else(|| self.default.clone())
    }

    /// Insert, keeping the map normalized (no entries equal to the default).
    pub fn set(&mut self, i: i128, v: T) {
        if v == self.default {
            self.map.remove(&i);
        } else {
            self.map.insert(i, v);
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum GroundVal {
    Int(i128),
    Bool(bool),
    Loc(i128, i128),
    ArrInt(ArrVal<i128>),
    ArrLoc(ArrVal<(i128, i128)>),
}

#[derive(Clone, Debug, Default)]
pub struct Binding {
    map: HashMap<String, GroundVal>,
}

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, v: GroundVal) {
        self.map.insert(name.into(), v);
    }

    pub fn get(&self, name: &str) -> Option<&GroundVal> {
        self.map.get(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol {0}")]
    Unbound(String),
    #[error("division by zero")]
    DivZero,
    #[error("sort confusion at {0}")]
    SortConfusion(&'static str),
}

pub fn eval_ground(t: &Term, b: &Binding) -> Result<GroundVal, EvalError> {
    use GroundVal::*;
    let int = |v: GroundVal| match v {
        Int(x) => Ok(x),
        _ => Err(EvalError::SortConfusion("int")),
    };
    let boolean = |v: GroundVal| match v {
        Bool(x) => Ok(x),
        _ => Err(EvalError::SortConfusion("bool")),
    };
    Ok(match &*t.node {
        TNode::Var(name, _) => {
            b.get(name).cloned().ok_or_else(|| EvalError::Unbound(name.clone()))?
        }
        TNode::IntLit(v) => Int(*v),
        TNode::BoolLit(v) => Bool(*v),
        TNode::Add(x, y) => Int(int(eval_ground(x, b)?)? + int(eval_ground(y, b)?)?),
        TNode::Sub(x, y) => Int(int(eval_ground(x, b)?)? - int(eval_ground(y, b)?)?),
        TNode::Mul(x, y) => Int(int(eval_ground(x, b)?)? * int(eval_ground(y, b)?)?),
        TNode::EDiv(x, c) => {
            if *c == 0 {
                return Err(EvalError::DivZero);
            }
            Int(int(eval_ground(x, b)?)?.div_euclid(*c))
        }
        TNode::EMod(x, c) => {
            if *c == 0 {
                return Err(EvalError::DivZero);
            }
            Int(int(eval_ground(x, b)?)?.rem_euclid(*c))
        }
        TNode::Le(x, y) => Bool(int(eval_ground(x, b)?)? <= int(eval_ground(y, b)?)?),
        TNode::Lt(x, y) => Bool(int(eval_ground(x, b)?)? < int(eval_ground(y, b)?)?),
        TNode::Eq(x, y) => Bool(eval_ground(x, b)? == eval_ground(y, b)?),
        TNode::Not(x) => Bool(!boolean(eval_ground(x, b)?)?),
        TNode::And(xs) => {
            let mut acc = true;
            for x in xs {
                acc &= boolean(eval_ground(x, b)?)?;
            }
            Bool(acc)
        }
        TNode::Or(xs) => {
            let mut acc = false;
            for x in xs {
                acc |= boolean(eval_ground(x, b)?)?;
            }
            Bool(acc)
        }
        TNode::Implies(x, y) => {
            Bool(!boolean(eval_ground(x, b)?)? || boolean(eval_ground(y, b)?)?)
        }
        TNode::Ite(c, th, el) => {
            if boolean(eval_ground(c, b)?)? {
                eval_ground(th, b)?
            } else {
                eval_ground(el, b)?
            }
        }
        TNode::Read(a, i) => {
            let idx = int(eval_ground(i, b)?)?;
            match eval_ground(a, b)? {
                ArrInt(m) => Int(m.get(idx)),
                ArrLoc(m) => {
                    let (base, off) = m.get(idx);
                    Loc(base, off)
                }
                _ => return Err(EvalError::SortConfusion("read")),
            }
        }
        TNode::Store(a, i, v) => {
            let idx = int(eval_ground(i, b)?)?;
            match (eval_ground(a, b)?, eval_ground(v, b)?) {
                (ArrInt(mut m), Int(x)) => {
                    m.set(idx, x);
                    ArrInt(m)
                }
                (ArrLoc(mut m), Loc(p, q)) => {
                    m.set(idx, (p, q));
                    ArrLoc(m)
                }
                _ => return Err(EvalError::SortConfusion("store")),
            }
        }
        TNode::MkLoc(p, q) => Loc(int(eval_ground(p, b)?)?, int(eval_ground(q, b)?)?),
        TNode::Fst(l) => match eval_ground(l, b)? {
            Loc(p, _) => Int(p),
            _ => return Err(EvalError::SortConfusion("fst")),
        },
        TNode::Snd(l) => match eval_ground(l, b)? {
            Loc(_, q) => Int(q),
            _ => return Err(EvalError::SortConfusion("snd")),
        },
    })
}

// ---------------------------------------------------------------------------
// Infix display (dumps and debugging).

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            TNode::Var(name, _) => write!(f, "{name}"),
            TNode::IntLit(v) => write!(f, "{v}"),
            TNode::BoolLit(v) => write!(f, "{v}"),
            TNode::Add(a, b) => write!(f, "({a} + {b})"),
            TNode::Sub(a, b) => write!(f, "({a} - {b})"),
            TNode::Mul(a, b) => write!(f, "({a} * {b})"),
            TNode::EDiv(a, c) => write!(f, "({a} div {c})"),
            TNode::EMod(a, c) => write!(f, "({a} mod {c})"),
            TNode::Le(a, b) => write!(f, "({a} <= {b})"),
            TNode::Lt(a, b) => write!(f, "({a} < {b})"),
            TNode::Eq(a, b) => write!(f, "({a} = {b})"),
            TNode::Not(a) => write!(f, "!{a}"),
            TNode::And(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " && ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            TNode::Or(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " || ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            TNode::Implies(a, b) => write!(f, "({a} ==> {b})"),
            TNode::Ite(c, t, e) => write!(f, "({c} ? {t} : {e})"),
            TNode::Read(a, i) => write!(f, "{a}[{i}]"),
            TNode::Store(a, i, v) => write!(f, "{a}[{i} <- {v}]"),
            TNode::MkLoc(b, o) => write!(f, "loc({b}, {o})"),
            TNode::Fst(l) => write!(f, "base({l})"),
            TNode::Snd(l) => write!(f, "off({l})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Random terms for the simplifier-equivalence suite. Raw construction
// bypasses the folding constructors; `resimplify` rebuilds through them.

pub mod arb {
    use super::*;
    use crate::prng::SplitMix64;

    fn raw(node: TNode, sort: Sort) -> Term {
        Term { node: Arc::new(node), sort }
    }

    fn gen_term(g: &mut SplitMix64, sort: Sort, depth: u32, vars: &mut Vec<(String, Sort)>) -> Term {
        let var_of = |g: &mut SplitMix64, s: Sort, vars: &mut Vec<(String, Sort)>| {
            let existing: Vec<String> = vars
                .iter()
                .filter(|(_, vs)| *vs == s)
                .map(|(n, _)| n.clone())
                .collect();
            if !existing.is_empty() && g.below(2) == 0 {
                let n = existing[g.below(existing.len() as u64) as usize].clone();
                Term::var(n, s)
            } else {
                let name = format!("{}{}", sort_prefix(s), vars.len());
                vars.push((name.clone(), s));
                Term::var(name, s)
            }
        };
        if depth == 0 {
            return match sort {
                Sort::Int => match g.below(3) {
                    0 => Term::lit(g.below(7) as i128 - 3),
                    _ => var_of(g, Sort::Int, vars),
                },
                Sort::Bool => match g.below(3) {
                    0 => Term::bool_lit(g.below(2) == 0),
                    _ => var_of(g, Sort::Bool, vars),
                },
                _ => var_of(g, sort, vars),
            };
        }
        let d = depth - 1;
        match sort {
            Sort::Int => match g.below(9) {
                0 => raw(
                    TNode::Add(gen_term(g, Sort::Int, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Int,
                ),
                1 => raw(
                    TNode::Sub(gen_term(g, Sort::Int, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Int,
                ),
                2 => raw(
                    TNode::Mul(gen_term(g, Sort::Int, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Int,
                ),
                3 => raw(TNode::EDiv(gen_term(g, Sort::Int, d, vars), 1 + g.below(5) as i128), Sort::Int),
                4 => raw(TNode::EMod(gen_term(g, Sort::Int, d, vars), 1 + g.below(5) as i128), Sort::Int),
                5 => raw(
                    TNode::Ite(
                        gen_term(g, Sort::Bool, d, vars),
                        gen_term(g, Sort::Int, d, vars),
                        gen_term(g, Sort::Int, d, vars),
                    ),
                    Sort::Int,
                ),
                6 => raw(
                    TNode::Read(gen_term(g, Sort::ArrInt, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Int,
                ),
                7 => raw(TNode::Snd(gen_term(g, Sort::Loc, d, vars)), Sort::Int),
                _ => gen_term(g, Sort::Int, 0, vars),
            },
            Sort::Bool => match g.below(7) {
                0 => raw(
                    TNode::Le(gen_term(g, Sort::Int, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Bool,
                ),
                1 => raw(
                    TNode::Lt(gen_term(g, Sort::Int, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Bool,
                ),
                2 => {
                    let s = [Sort::Int, Sort::Bool, Sort::Loc][g.below(3) as usize];
                    raw(
                        TNode::Eq(gen_term(g, s, d, vars), gen_term(g, s, d, vars)),
                        Sort::Bool,
                    )
                }
                3 => raw(TNode::Not(gen_term(g, Sort::Bool, d, vars)), Sort::Bool),
                4 => raw(
                    TNode::And(vec![
                        gen_term(g, Sort::Bool, d, vars),
                        gen_term(g, Sort::Bool, d, vars),
                    ]),
                    Sort::Bool,
                ),
                5 => raw(
                    TNode::Or(vec![
                        gen_term(g, Sort::Bool, d, vars),
                        gen_term(g, Sort::Bool, d, vars),
                    ]),
                    Sort::Bool,
                ),
                _ => gen_term(g, Sort::Bool, 0, vars),
            },
            Sort::Loc => match g.below(4) {
                0 => raw(
                    TNode::MkLoc(gen_term(g, Sort::Int, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Loc,
                ),
                1 => raw(
                    TNode::Read(gen_term(g, Sort::ArrLoc, d, vars), gen_term(g, Sort::Int, d, vars)),
                    Sort::Loc,
                ),
                _ => gen_term(g, Sort::Loc, 0, vars),
            },
            Sort::ArrInt | Sort::ArrLoc => match g.below(3) {
                0 => {
                    let v = gen_term(g, sort.elem(), d, vars);
                    raw(
                        TNode::Store(gen_term(g, sort, d, vars), gen_term(g, Sort::Int, d, vars), v),
                        sort,
                    )
                }
                _ => gen_term(g, sort, 0, vars),
            },
        }
    }

    fn sort_prefix(s: Sort) -> &'static str {
        match s {
            Sort::Int => "xi",
            Sort::Bool => "xb",
            Sort::Loc => "xl",
            Sort::ArrInt => "xa",
            Sort::ArrLoc => "xp",
        }
    }

    /// Rebuilds a term through the folding constructors.
    pub fn resimplify(t: &Term) -> Term {
        match &*t.node {
            TNode::Var(..) | TNode::IntLit(_) | TNode::BoolLit(_) => t.clone(),
            TNode::Add(a, b) => Term::add(resimplify(a), resimplify(b)),
            TNode::Sub(a, b) => Term::sub(resimplify(a), resimplify(b)),
            TNode::Mul(a, b) => Term::mul(resimplify(a), resimplify(b)),
            TNode::EDiv(a, c) => Term::ediv(resimplify(a), *c),
            TNode::EMod(a, c) => Term::emod(resimplify(a), *c),
            TNode::Le(a, b) => Term::le(resimplify(a), resimplify(b)),
            TNode::Lt(a, b) => Term::lt(resimplify(a), resimplify(b)),
            TNode::Eq(a, b) => Term::eq(resimplify(a), resimplify(b)),
            TNode::Not(a) => Term::not(resimplify(a)),
            TNode::And(xs) => Term::and(xs.iter().map(resimplify).collect()),
            TNode::Or(xs) => Term::or(xs.iter().map(resimplify).collect()),
            TNode::Implies(a, b) => Term::implies(resimplify(a), resimplify(b)),
            TNode::Ite(c, a, b) => Term::ite(resimplify(c), resimplify(a), resimplify(b)),
            TNode::Read(a, i) => Term::read(resimplify(a), resimplify(i)),
            TNode::Store(a, i, v) => Term::store(resimplify(a), resimplify(i), resimplify(v)),
            TNode::MkLoc(b, o) => Term::mk_loc(resimplify(b), resimplify(o)),
            TNode::Fst(l) => Term::fst(resimplify(l)),
            TNode::Snd(l) => Term::snd(resimplify(l)),
        }
    }

    /// A random raw boolean term plus a total binding for its free variables.
    pub fn term_and_binding(seed: u64) -> (Term, Binding) {
        let mut g = SplitMix64::new(seed);
        let mut vars = vec![];
        let t = gen_term(&mut g, Sort::Bool, 4, &mut vars);
        let mut b = Binding::new();
        for (name, sort) in vars {
            let v = match sort {
                Sort::Int => GroundVal::Int(g.below(15) as i128 - 7),
                Sort::Bool => GroundVal::Bool(g.below(2) == 0),
                Sort::Loc => GroundVal::Loc(g.below(4) as i128, g.below(6) as i128),
                Sort::ArrInt => {
                    let mut m = ArrVal::new(0);
                    for _ in 0..g.below(4) {
                        m.set(g.below(6) as i128, g.below(15) as i128 - 7);
                    }
                    GroundVal::ArrInt(m)
                }
                Sort::ArrLoc => {
                    let mut m = ArrVal::new((0, 0));
                    for _ in 0..g.below(4) {
                        m.set(g.below(6) as i128, (g.below(4) as i128, g.below(6) as i128));
                    }
                    GroundVal::ArrLoc(m)
                }
            };
            b.bind(name, v);
        }
        (t, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_folding() {
        let a = Term::var("a", Sort::ArrInt);
        let i = Term::var("i", Sort::Int);
        let v = Term::lit(7);
        // read-over-write at the same index
        let t = Term::read(Term::store(a.clone(), i.clone(), v.clone()), i.clone());
        assert_eq!(t, v);
        // read past a store at a different literal index
        let t = Term::read(
            Term::store(a.clone(), Term::lit(3), v.clone()),
            Term::lit(4),
        );
        assert_eq!(t, Term::read(a.clone(), Term::lit(4)));
        // ite folding
        assert_eq!(
            Term::ite(Term::bool_lit(true), Term::lit(1), Term::lit(2)),
            Term::lit(1)
        );
        assert_eq!(Term::add(Term::lit(4), Term::lit(12)), Term::lit(16));
        assert_eq!(
            Term::eq(Term::var("x", Sort::Int), Term::var("x", Sort::Int)),
            Term::bool_lit(true)
        );
        assert_eq!(Term::fst(Term::mk_loc(Term::lit(2), i.clone())), Term::lit(2));
    }

    #[test]
    #[should_panic(expected = "sort mismatch")]
    fn sort_mismatch_is_a_construction_error() {
        let _ = Term::eq(Term::lit(1), Term::bool_lit(true));
    }

    #[test]
    fn eval_examples() {
        let b = Binding::new();
        let a = {
            let mut m = ArrVal::new(0);
            m.set(1, 5);
            m
        };
        let mut bb = Binding::new();
        bb.bind("a", GroundVal::ArrInt(a));
        let t = Term::read(
            Term::store(Term::var("a", Sort::ArrInt), Term::lit(3), Term::lit(7)),
            Term::lit(3),
        );
        assert_eq!(eval_ground(&t, &bb).unwrap(), GroundVal::Int(7));

        let t = Term::ite(
            Term::lt(Term::lit(2), Term::lit(3)),
            Term::lit(10),
            Term::lit(20),
        );
        assert_eq!(eval_ground(&t, &b).unwrap(), GroundVal::Int(10));

        // SMT-LIB euclidean semantics for division by positive constants
        let t = Term::ediv(Term::var("x", Sort::Int), 2);
        let mut bx = Binding::new();
        bx.bind("x", GroundVal::Int(-7));
        assert_eq!(eval_ground(&t, &bx).unwrap(), GroundVal::Int(-4));
        let t = Term::emod(Term::var("x", Sort::Int), 2);
        assert_eq!(eval_ground(&t, &bx).unwrap(), GroundVal::Int(1));

        // missing binding
        let t = Term::var("zz", Sort::Int);
        assert!(matches!(eval_ground(&t, &b), Err(EvalError::Unbound(_))));
    }

    #[test]
    fn fresh_names() {
        let mut syms = SymTab::new();
        let a = syms.fresh("df", Sort::ArrInt);
        let b = syms.fresh("df", Sort::ArrInt);
        assert_eq!(a.to_string(), "df_0");
        assert_eq!(b.to_string(), "df_1");
        // a manual clash is skipped
        syms.declare("pf_0", Sort::ArrInt);
        let c = syms.fresh("pf", Sort::ArrInt);
        assert_eq!(c.to_string(), "pf_1");
    }

    #[test]
    fn emission_shape_and_determinism() {
        let x = Term::var("x", Sort::Int);
        let goal = Term::eq(x.clone(), x.clone());
        let s = emit_smtlib(&goal);
        assert_eq!(
            s,
            "(set-logic ALL)\n\
             (declare-datatype Loc ((mk-loc (loc-base Int) (loc-off Int))))\n\
             (assert (not true))\n(check-sat)\n"
        );
        let goal2 = Term::eq(x, Term::lit(0));
        let s1 = emit_smtlib(&goal2);
        let s2 = emit_smtlib(&goal2);
        assert_eq!(s1, s2);
        assert!(s1.contains("(declare-const x Int)"));
        assert!(s1.contains("(assert (not (= x 0)))"));
    }

    #[test]
    fn simplifier_equivalence_random() {
        let mut checked = 0;
        for seed in 0..400u64 {
            let (raw, binding) = arb::term_and_binding(seed);
            let simp = arb::resimplify(&raw);
            let a = eval_ground(&raw, &binding);
            let c = eval_ground(&simp, &binding);
            match (a, c) {
                (Ok(x), Ok(y)) => {
                    assert_eq!(x, y, "seed {seed}: {raw} vs {simp}");
                    checked += 1;
                }
                (Err(_), Err(_)) => {}
                (a, c) => panic!("seed {seed}: eval disagreement {a:?} vs {c:?}"),
            }
        }
        assert!(checked > 300, "only {checked} seeds produced evaluable terms");
    }
}
