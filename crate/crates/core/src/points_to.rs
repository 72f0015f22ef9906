//! Forward abstract interpreter over the fragment: per-statement abstract
//! states mapping scalar cells to abstract values, and abstract locations
//! (per-variable offset sets) for address expressions.
//!
//! Two modes share the code: `B` is field-sensitive; `BTop` forces every
//! shifted location and stored pointer offset to `top`, which collapses a
//! variable's cells into one summarized region.
//!
//! Null is not tracked as a target: an abstract location lists only
//! dereferenceable candidates plus a `may_null` flag (dereferencing null is
//! undefined behavior, so it never contributes defined runs).

use crate::ast::*;
use crate::machine::{Base, ConcLoc, ConcState, ConcVal};
use crate::offsets::{self, AbsOffsets};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    B,
    BTop,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::B => "B",
            Mode::BTop => "Btop",
        }
    }
}

/// Abstract location: a finite map from variables to abstract offset sets.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct AbsLoc {
    pub vars: BTreeMap<VarId, AbsOffsets>,
    pub may_null: bool,
}

impl AbsLoc {
    pub fn empty() -> Self {
        AbsLoc::default()
    }

    pub fn null() -> Self {
        AbsLoc { vars: BTreeMap::new(), may_null: true }
    }

    pub fn var(v: VarId, offs: AbsOffsets) -> Self {
        AbsLoc { vars: [(v, offs)].into(), may_null: false }
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// The unique concrete location, when that is statically known.
    pub fn singleton(&self) -> Option<(VarId, i128)> {
        if self.vars.len() != 1 {
            return None;
        }
        let (v, offs) = self.vars.iter().next().unwrap();
        offs.is_singleton().map(|o| (*v, o))
    }

    /// Membership over the raw (unclamped) offset sets.
    pub fn contains(&self, v: VarId, off: i128) -> bool {
        self.vars.get(&v).is_some_and(|i| i.contains(off))
    }
}

impl fmt::Display for AbsLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for (v, offs) in &self.vars {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "v{} -> {offs}", v.0)?;
        }
        if self.may_null {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "null")?;
        }
        write!(f, "}}")
    }
}

pub fn join_loc(a: &AbsLoc, b: &AbsLoc, ilvl: u32) -> AbsLoc {
    let mut vars = a.vars.clone();
    for (v, i) in &b.vars {
        vars.entry(*v)
            .and_modify(|x| *x = offsets::join(x, i, ilvl))
            .or_insert_with(|| i.clone());
    }
    AbsLoc { vars, may_null: a.may_null || b.may_null }
}

/// Abstract value of one scalar cell.
#[derive(Clone, PartialEq, Debug)]
pub enum AbsVal {
    /// No defined value (only ever undefined).
    Uninit,
    Int(AbsOffsets),
    Ptr(AbsLoc),
    Any,
}

/// Cell abstraction: a defined-value abstraction plus whether the cell may
/// still be undefined.
#[derive(Clone, PartialEq, Debug)]
pub struct CellAbs {
    pub may_undef: bool,
    pub val: AbsVal,
}

impl CellAbs {
    fn undef() -> Self {
        CellAbs { may_undef: true, val: AbsVal::Uninit }
    }
}

pub fn join_val(a: &AbsVal, b: &AbsVal, ilvl: u32) -> AbsVal {
    match (a, b) {
        (AbsVal::Uninit, x) | (x, AbsVal::Uninit) => x.clone(),
        (AbsVal::Any, _) | (_, AbsVal::Any) => AbsVal::Any,
        (AbsVal::Int(x), AbsVal::Int(y)) => AbsVal::Int(offsets::join(x, y, ilvl)),
        (AbsVal::Ptr(x), AbsVal::Ptr(y)) => AbsVal::Ptr(join_loc(x, y, ilvl)),
        _ => AbsVal::Any,
    }
}

/// Abstract state: one entry per scalar cell, plus reachability.
#[derive(Clone, PartialEq, Debug)]
pub struct AbsState {
    pub reachable: bool,
    pub cells: BTreeMap<(VarId, i128), CellAbs>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AccessKind {
    Load,
    Store,
    Addr,
}

/// One lval occurrence that touches memory (or is address-taken), with the
/// abstract location of its address at that statement. Joined across loop
/// iterations.
#[derive(Clone, Debug)]
pub struct AccessRec {
    pub stmt: StmtId,
    pub tag: String,
    pub path: u32,
    pub kind: AccessKind,
    pub lv_text: String,
    pub addr: AbsLoc,
    pub size: i128,
    pub is_ptr_cell: bool,
}

#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub mode: Mode,
    pub ilvl: u32,
    /// Abstract state before each statement (joined over loop iterations).
    pub pre: BTreeMap<StmtId, AbsState>,
    /// Abstract state after each statement.
    pub post: BTreeMap<StmtId, AbsState>,
    pub final_state: AbsState,
    pub accesses: Vec<AccessRec>,
}

impl AnalysisResult {
    pub fn accesses_at(&self, stmt: StmtId) -> impl Iterator<Item = &AccessRec> {
        self.accesses.iter().filter(move |r| r.stmt == stmt)
    }
}

pub struct Analyzer<'p> {
    pub prog: &'p Program,
    pub mode: Mode,
    pub ilvl: u32,
    cell_types: Vec<BTreeMap<i128, CType>>,
}

/// `base(v)`: program variables sit at offset zero of their own block.
pub fn pa_base(v: VarId) -> AbsLoc {
    AbsLoc::var(v, AbsOffsets::singleton(0))
}

impl<'p> Analyzer<'p> {
    pub fn new(prog: &'p Program, mode: Mode, ilvl: u32) -> Self {
        let cell_types = prog
            .vars
            .iter()
            .map(|d| {
                prog.types
                    .scalar_cells(&d.ty)
                    .into_iter()
                    .map(|c| (c.start, c.ty))
                    .collect()
            })
            .collect();
        Analyzer { prog, mode, ilvl, cell_types }
    }

    pub fn empty_state(&self) -> AbsState {
        let mut cells = BTreeMap::new();
        for (i, per_var) in self.cell_types.iter().enumerate() {
            for &start in per_var.keys() {
                cells.insert((VarId(i as u32), start), CellAbs::undef());
            }
        }
        AbsState { reachable: true, cells }
    }

    fn force(&self, l: AbsLoc) -> AbsLoc {
        match self.mode {
            Mode::B => l,
            Mode::BTop => AbsLoc {
                vars: l.vars.into_keys().map(|v| (v, AbsOffsets::Top)).collect(),
                may_null: l.may_null,
            },
        }
    }

    /// `shift`: per-variable abstract addition of an already-scaled amount.
    pub fn pa_shift(&self, l: &AbsLoc, amount: &AbsOffsets) -> AbsLoc {
        let shifted = AbsLoc {
            vars: l
                .vars
                .iter()
                .map(|(v, i)| (*v, offsets::add(i, amount, self.ilvl)))
                .collect(),
            may_null: l.may_null,
        };
        self.force(shifted)
    }

    /// Cell start offsets of `v` hit by the raw offset set, with their types.
    fn hit_cells(&self, v: VarId, offs: &AbsOffsets) -> Vec<(i128, &CType)> {
        let size = self.prog.sizeof_var(v);
        let per_var = &self.cell_types[v.0 as usize];
        offs.gamma_bounded(0, size - 1)
            .into_iter()
            .filter_map(|o| per_var.get(&o).map(|t| (o, t)))
            .collect()
    }

    /// `load` for pointer contents: joins the pointer abstractions of every
    /// cell the location may denote. An unconstrained cell falls back to the
    /// top location over all variables.
    pub fn pa_load_ptr(&self, st: &AbsState, l: &AbsLoc) -> AbsLoc {
        let mut out = AbsLoc::empty();
        for (v, offs) in &l.vars {
            for (o, ty) in self.hit_cells(*v, offs) {
                if !ty.is_ptr() {
                    continue; // kind mismatch would be UB
                }
                match &st.cells[&(*v, o)].val {
                    AbsVal::Ptr(p) => out = join_loc(&out, p, self.ilvl),
                    AbsVal::Any => return self.top_location(),
                    AbsVal::Int(_) | AbsVal::Uninit => {}
                }
            }
        }
        out
    }

    /// Sound fallback: every variable at every offset, possibly null.
    pub fn top_location(&self) -> AbsLoc {
        AbsLoc {
            vars: (0..self.prog.vars.len())
                .map(|i| (VarId(i as u32), AbsOffsets::Top))
                .collect(),
            may_null: true,
        }
    }

    /// Integer-value abstraction of the contents at `l` for an access kind.
    fn load_int(&self, st: &AbsState, l: &AbsLoc, kind: ArithKind) -> AbsOffsets {
        let mut out: Option<AbsOffsets> = None;
        for (v, offs) in &l.vars {
            for (o, ty) in self.hit_cells(*v, offs) {
                if ty.is_ptr() || self.prog.types.sizeof(ty) != kind.size() {
                    continue;
                }
                let contrib = match &st.cells[&(*v, o)].val {
                    AbsVal::Int(i) => i.clone(),
                    AbsVal::Any => AbsOffsets::Top,
                    AbsVal::Ptr(_) | AbsVal::Uninit => continue,
                };
                out = Some(match out {
                    None => contrib,
                    Some(acc) => offsets::join(&acc, &contrib, self.ilvl),
                });
            }
        }
        // A read with no defined candidate is undefined behavior on every
        // run, so any abstraction is sound.
        out.unwrap_or(AbsOffsets::Top)
    }

    fn wrap_kind(&self, x: &AbsOffsets, kind: ArithKind) -> AbsOffsets {
        offsets::wrap_range(x, kind.min_value(), kind.max_value(), self.ilvl)
    }

    pub fn eval_int(&self, st: &AbsState, e: &IntExpr, rec: &mut Recs) -> AbsOffsets {
        match e {
            IntExpr::Const(k, _) => AbsOffsets::singleton(*k),
            IntExpr::Read(lv, kind) => {
                let l = self.eval_lval(st, lv, rec);
                rec.push(self.prog, AccessKind::Load, lv, &l, kind.size(), false);
                self.load_int(st, &l, *kind)
            }
            IntExpr::Nondet(kind) => {
                AbsOffsets::full_range(kind.min_value(), kind.max_value())
            }
            IntExpr::Unop(op, a, kind) => {
                let x = self.eval_int(st, a, rec);
                match op {
                    UnOp::Neg => self.wrap_kind(&offsets::neg(&x, self.ilvl), *kind),
                    UnOp::Not => match x.is_singleton() {
                        Some(k) => AbsOffsets::singleton((k == 0) as i128),
                        None => AbsOffsets::from_set(vec![0, 1], self.ilvl),
                    },
                }
            }
            IntExpr::Binop(op, a, b, kind) => {
                let x = self.eval_int(st, a, rec);
                let y = self.eval_int(st, b, rec);
                let bool01 = || match (x.is_singleton(), y.is_singleton()) {
                    (Some(p), Some(q)) => {
                        let r = match op {
                            BinOp::Eq => p == q,
                            BinOp::Ne => p != q,
                            BinOp::Lt => p < q,
                            BinOp::Le => p <= q,
                            BinOp::Gt => p > q,
                            BinOp::Ge => p >= q,
                            BinOp::And => p != 0 && q != 0,
                            BinOp::Or => p != 0 || q != 0,
                            _ => unreachable!(),
                        };
                        AbsOffsets::singleton(r as i128)
                    }
                    _ => AbsOffsets::from_set(vec![0, 1], self.ilvl),
                };
                match op {
                    BinOp::Add => self.wrap_kind(&offsets::add(&x, &y, self.ilvl), *kind),
                    BinOp::Sub => self.wrap_kind(&offsets::sub(&x, &y, self.ilvl), *kind),
                    BinOp::Mul => self.wrap_kind(&offsets::mul(&x, &y, self.ilvl), *kind),
                    BinOp::Div | BinOp::Rem => match (x.is_singleton(), y.is_singleton()) {
                        (Some(p), Some(q)) if q != 0 => {
                            let r = if *op == BinOp::Div { p / q } else { p % q };
                            AbsOffsets::singleton(kind.wrap(r))
                        }
                        _ => AbsOffsets::full_range(kind.min_value(), kind.max_value()),
                    },
                    _ => bool01(),
                }
            }
            IntExpr::PtrCmp(eq, a, b) => {
                let la = self.eval_addr(st, a, rec);
                let lb = self.eval_addr(st, b, rec);
                match (la.singleton(), lb.singleton()) {
                    (Some(p), Some(q)) if !la.may_null && !lb.may_null => {
                        AbsOffsets::singleton(((p == q) == *eq) as i128)
                    }
                    _ => AbsOffsets::from_set(vec![0, 1], self.ilvl),
                }
            }
        }
    }

    pub fn eval_lval(&self, st: &AbsState, lv: &LVal, rec: &mut Recs) -> AbsLoc {
        match lv {
            LVal::Var(v) => pa_base(*v),
            LVal::Field(base, rid, idx) => {
                let l = self.eval_lval(st, base, rec);
                let off = self.prog.types.field(*rid, *idx).offset;
                self.pa_shift(&l, &AbsOffsets::singleton(off))
            }
            LVal::Deref(a) => self.eval_addr(st, a, rec),
        }
    }

    pub fn eval_addr(&self, st: &AbsState, a: &AddrExpr, rec: &mut Recs) -> AbsLoc {
        match a {
            AddrExpr::Null(_) => AbsLoc::null(),
            AddrExpr::LValArr(lv, _) => self.eval_lval(st, lv, rec),
            AddrExpr::LValPtr(lv, _) => {
                let l = self.eval_lval(st, lv, rec);
                rec.push(self.prog, AccessKind::Load, lv, &l, PTR_SIZE, true);
                self.force(self.pa_load_ptr(st, &l))
            }
            AddrExpr::AddrOf(lv, _) => {
                let l = self.eval_lval(st, lv, rec);
                let size = self.prog.types.sizeof(&self.prog.lval_ty(lv));
                rec.push(self.prog, AccessKind::Addr, lv, &l, size, false);
                l
            }
            AddrExpr::Shift(base, ie) => {
                let l = self.eval_addr(st, base, rec);
                let idx = self.eval_int(st, ie, rec);
                let idx = offsets::wrap_range(&idx, 0, (1 << 32) - 1, self.ilvl);
                let elem = self.prog.types.sizeof(base.pointee());
                self.pa_shift(&l, &offsets::mul_const(&idx, elem, self.ilvl))
            }
        }
    }

    /// The abstract value stored by an assignment right-hand side, wrapped
    /// into the target kind like the concrete store.
    fn eval_rhs(&self, st: &AbsState, e: &Expr, target: &CType, rec: &mut Recs) -> AbsVal {
        match e {
            Expr::Int(ie) => {
                let kind = target.arith_kind().expect("checked assignment");
                AbsVal::Int(self.wrap_kind(&self.eval_int(st, ie, rec), kind))
            }
            Expr::Addr(a) => AbsVal::Ptr(self.force(self.eval_addr(st, a, rec))),
        }
    }

    fn write(&self, st: &mut AbsState, wloc: &AbsLoc, size: i128, val: AbsVal) {
        // Strong update when the target is statically a single cell.
        if let Some((v, o)) = wloc.singleton() {
            if let Some(ty) = self.cell_types[v.0 as usize].get(&o) {
                if self.prog.types.sizeof(ty) == size {
                    st.cells.insert((v, o), CellAbs { may_undef: false, val });
                    return;
                }
            }
            // A statically misaligned single target is undefined behavior on
            // every run; the state is unchanged for the (empty) rest.
            return;
        }
        for (v, offs) in &wloc.vars {
            for (o, ty) in self.hit_cells(*v, offs) {
                if self.prog.types.sizeof(ty) != size || ty.is_ptr() != matches!(val, AbsVal::Ptr(_)) {
                    continue;
                }
                let cell = st.cells.get_mut(&(*v, o)).unwrap();
                cell.val = join_val(&cell.val, &val, self.ilvl);
            }
        }
    }

    fn transfer(&self, mut st: AbsState, s: &Stmt, out: &mut RunAcc) -> AbsState {
        let mut rec = Recs { stmt: s.id, tag: s.tag.clone(), path: 0, list: vec![] };
        out.note_pre(s.id, &st, self.ilvl);
        let post = match &s.kind {
            StmtKind::Assign(lv, e) => {
                let wloc = self.eval_lval(&st, lv, &mut rec);
                let ty = self.prog.lval_ty(lv);
                let val = self.eval_rhs(&st, e, &ty, &mut rec);
                rec.push(
                    self.prog,
                    AccessKind::Store,
                    lv,
                    &wloc,
                    self.prog.types.sizeof(&ty),
                    ty.is_ptr(),
                );
                self.write(&mut st, &wloc, self.prog.types.sizeof(&ty), val);
                st
            }
            StmtKind::Assert(c) | StmtKind::Assume(c) => {
                // Guard conditions refine nothing.
                self.eval_int(&st, c, &mut rec);
                st
            }
            StmtKind::If(c, then, els) => {
                self.eval_int(&st, c, &mut rec);
                let st_t = self.transfer_seq(st.clone(), then, out);
                let st_e = self.transfer_seq(st, els, out);
                self.join_state(&st_t, &st_e)
            }
            StmtKind::For { var, lo, hi, body } => {
                if lo >= hi {
                    st
                } else {
                    let range = if hi - lo == 1 {
                        AbsOffsets::singleton(*lo)
                    } else {
                        AbsOffsets::full_range(*lo, *hi - 1)
                    };
                    let vcell = (*var, 0i128);
                    let mut head = st;
                    for round in 0.. {
                        assert!(round < 64, "loop analysis failed to stabilize");
                        let mut body_in = head.clone();
                        body_in
                            .cells
                            .insert(vcell, CellAbs { may_undef: false, val: AbsVal::Int(range.clone()) });
                        let body_out = self.transfer_seq(body_in, body, out);
                        let joined = self.join_state(&head, &body_out);
                        if joined == head {
                            break;
                        }
                        head = self.widen_state(&head, &joined);
                    }
                    head.cells.insert(
                        vcell,
                        CellAbs { may_undef: false, val: AbsVal::Int(AbsOffsets::singleton(*hi - 1)) },
                    );
                    head
                }
            }
        };
        out.note_recs(rec, self.ilvl);
        out.note_post(s.id, &post, self.ilvl);
        post
    }

    fn transfer_seq(&self, mut st: AbsState, stmts: &[Stmt], out: &mut RunAcc) -> AbsState {
        for s in stmts {
            st = self.transfer(st, s, out);
        }
        st
    }

    pub fn join_state(&self, a: &AbsState, b: &AbsState) -> AbsState {
        let cells = a
            .cells
            .iter()
            .map(|(k, ca)| {
                let cb = &b.cells[k];
                (
                    *k,
                    CellAbs {
                        may_undef: ca.may_undef || cb.may_undef,
                        val: join_val(&ca.val, &cb.val, self.ilvl),
                    },
                )
            })
            .collect();
        AbsState { reachable: a.reachable || b.reachable, cells }
    }

    fn widen_state(&self, old: &AbsState, new: &AbsState) -> AbsState {
        let cells = old
            .cells
            .iter()
            .map(|(k, co)| {
                let cn = &new.cells[k];
                let val = match (&co.val, &cn.val) {
                    (AbsVal::Int(x), AbsVal::Int(y)) => AbsVal::Int(offsets::widen(x, y)),
                    (AbsVal::Ptr(x), AbsVal::Ptr(y)) => {
                        let vars = y
                            .vars
                            .iter()
                            .map(|(v, iy)| match x.vars.get(v) {
                                Some(ix) => (*v, offsets::widen(ix, iy)),
                                None => (*v, iy.clone()),
                            })
                            .collect();
                        AbsVal::Ptr(AbsLoc { vars, may_null: x.may_null || y.may_null })
                    }
                    _ => cn.val.clone(),
                };
                (*k, CellAbs { may_undef: cn.may_undef, val })
            })
            .collect();
        AbsState { reachable: new.reachable, cells }
    }
}

/// Per-statement access recorder.
pub struct Recs {
    stmt: StmtId,
    tag: String,
    path: u32,
    list: Vec<AccessRec>,
}

impl Recs {
    /// Recorder whose records are discarded (re-evaluation outside the
    /// analysis run, e.g. by the VC compiler).
    pub fn throwaway(stmt: StmtId) -> Recs {
        Recs { stmt, tag: String::new(), path: 0, list: vec![] }
    }

    fn push(
        &mut self,
        prog: &Program,
        kind: AccessKind,
        lv: &LVal,
        addr: &AbsLoc,
        size: i128,
        is_ptr_cell: bool,
    ) {
        self.list.push(AccessRec {
            stmt: self.stmt,
            tag: self.tag.clone(),
            path: self.path,
            kind,
            lv_text: DisplayLVal(prog, lv).to_string(),
            addr: addr.clone(),
            size,
            is_ptr_cell,
        });
        self.path += 1;
    }
}

/// Accumulates pre/post states and access records, joining across loop
/// iterations.
struct RunAcc {
    pre: BTreeMap<StmtId, AbsState>,
    post: BTreeMap<StmtId, AbsState>,
    recs: BTreeMap<(StmtId, u32), AccessRec>,
}

impl RunAcc {
    fn note_pre(&mut self, id: StmtId, st: &AbsState, ilvl: u32) {
        join_into(&mut self.pre, id, st, ilvl);
    }

    fn note_post(&mut self, id: StmtId, st: &AbsState, ilvl: u32) {
        join_into(&mut self.post, id, st, ilvl);
    }

    fn note_recs(&mut self, rec: Recs, ilvl: u32) {
        for r in rec.list {
            match self.recs.entry((r.stmt, r.path)) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(r);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let cur = e.get_mut();
                    cur.addr = join_loc(&cur.addr, &r.addr, ilvl);
                }
            }
        }
    }
}

fn join_into(map: &mut BTreeMap<StmtId, AbsState>, id: StmtId, st: &AbsState, ilvl: u32) {
    match map.entry(id) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(st.clone());
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let cells = e
                .get()
                .cells
                .iter()
                .map(|(k, ca)| {
                    let cb = &st.cells[k];
                    (
                        *k,
                        CellAbs {
                            may_undef: ca.may_undef || cb.may_undef,
                            val: join_val(&ca.val, &cb.val, ilvl),
                        },
                    )
                })
                .collect();
            let reachable = e.get().reachable || st.reachable;
            e.insert(AbsState { reachable, cells });
        }
    }
}

pub fn analyze(prog: &Program, mode: Mode, ilvl: u32) -> AnalysisResult {
    let analyzer = Analyzer::new(prog, mode, ilvl);
    let mut acc = RunAcc { pre: BTreeMap::new(), post: BTreeMap::new(), recs: BTreeMap::new() };
    let final_state = analyzer.transfer_seq(analyzer.empty_state(), &prog.stmts, &mut acc);
    AnalysisResult {
        mode,
        ilvl,
        pre: acc.pre,
        post: acc.post,
        final_state,
        accesses: acc.recs.into_values().collect(),
    }
}

// ---------------------------------------------------------------------------
// Soundness checking against the concrete machine.

/// Is the concrete value admitted by the cell abstraction?
pub fn value_included(conc: &ConcVal, abs: &CellAbs) -> bool {
    match conc {
        ConcVal::Undef => abs.may_undef,
        ConcVal::Int(k) => match &abs.val {
            AbsVal::Any => true,
            AbsVal::Int(i) => i.contains(*k),
            _ => false,
        },
        ConcVal::Ptr(l) => match &abs.val {
            AbsVal::Any => true,
            // Null targets are always admissible; the abstraction only
            // tracks dereferenceable candidates.
            AbsVal::Ptr(al) => match l.base {
                Base::Null => true,
                Base::Var(v) => al.contains(v, l.offset),
            },
            _ => false,
        },
    }
}

/// Every cell of the concrete state is admitted by the abstract state.
pub fn state_includes(abs: &AbsState, conc: &ConcState) -> Result<(), String> {
    for (key, cv) in &conc.cells {
        let ca = abs
            .cells
            .get(key)
            .ok_or_else(|| format!("abstract state missing cell {key:?}"))?;
        if !value_included(cv, ca) {
            return Err(format!(
                "cell (v{}, {}) holds {cv:?}, not admitted by {ca:?}",
                key.0 .0, key.1
            ));
        }
    }
    Ok(())
}

/// Raw concretization membership for locations, treating null separately.
pub fn loc_included(conc: ConcLoc, abs: &AbsLoc) -> bool {
    match conc.base {
        Base::Null => true,
        Base::Var(v) => abs.contains(v, conc.offset),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::run_program;
    use crate::parser::parse_program;

    fn offs(s: &str) -> AbsOffsets {
        s.parse().unwrap()
    }

    fn analyze_src(src: &str, mode: Mode, ilvl: u32) -> (Program, AnalysisResult) {
        let prog = parse_program(src).expect("parses");
        let res = analyze(&prog, mode, ilvl);
        (prog, res)
    }

    #[test]
    fn pa_base_and_shift() {
        let prog = parse_program("typedef struct { int32_t v; } d_t; d_t d; int32_t x;").unwrap();
        let an = Analyzer::new(&prog, Mode::B, 8);
        let d = prog.var_id("d").unwrap();
        assert_eq!(pa_base(d), AbsLoc::var(d, offs("{0}")));

        let shifted = an.pa_shift(&pa_base(d), &offs("{16}"));
        assert_eq!(shifted, AbsLoc::var(d, offs("{16}")));
        // identity shift
        assert_eq!(an.pa_shift(&pa_base(d), &offs("{0}")), pa_base(d));
        // joined shift stays sound under enumeration
        let l = AbsLoc::var(d, offs("{16,20,24,28}"));
        let s = an.pa_shift(&l, &offs("[0..12] 0%4"));
        for base in [16, 20, 24, 28] {
            for add in [0, 4, 8, 12] {
                assert!(s.contains(d, base + add), "missing {}", base + add);
            }
        }
    }

    #[test]
    fn straight_line_values() {
        let (prog, res) = analyze_src("int32_t x; int32_t y; x = 5; y = x + 2;", Mode::B, 8);
        let y = prog.var_id("y").unwrap();
        match &res.final_state.cells[&(y, 0)].val {
            AbsVal::Int(i) => assert_eq!(i, &offs("{7}")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn branch_join_and_strong_update() {
        let src = "int32_t c; int32_t x; c = nondet(); x = 0; \
                   if (c > 0) { x = 10; } else { x = 20; }";
        let (prog, res) = analyze_src(src, Mode::B, 8);
        let x = prog.var_id("x").unwrap();
        match &res.final_state.cells[&(x, 0)].val {
            AbsVal::Int(i) => assert_eq!(i, &offs("{10,20}")),
            other => panic!("unexpected {other:?}"),
        }
        // strong updates leave no may-undef
        assert!(!res.final_state.cells[&(x, 0)].may_undef);
    }

    #[test]
    fn weak_update_through_unknown_pointer() {
        let src = "int32_t a[4]; int32_t c; int32_t* p; \
                   c = nondet(); a[0] = 1; a[1] = 1; a[2] = 1; a[3] = 1; \
                   if (c) { p = &a[0]; } else { p = &a[2]; } \
                   *p = 9;";
        let (prog, res) = analyze_src(src, Mode::B, 8);
        let a = prog.var_id("a").unwrap();
        // cells 0 and 8 may be 1 or 9; cells 4 and 12 stay exactly 1
        match &res.final_state.cells[&(a, 0)].val {
            AbsVal::Int(i) => assert_eq!(i, &offs("{1,9}")),
            other => panic!("unexpected {other:?}"),
        }
        match &res.final_state.cells[&(a, 4)].val {
            AbsVal::Int(i) => assert_eq!(i, &offs("{1}")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn btop_forces_offsets() {
        let src = "typedef struct { int32_t f0; int32_t f1; } s_t; \
                   s_t s; int32_t* p = &s.f1; int32_t x; s.f0 = 3; s.f1 = 4; x = *p;";
        let (prog, res) = analyze_src(src, Mode::BTop, 8);
        let s = prog.var_id("s").unwrap();
        let p = prog.var_id("p").unwrap();
        match &res.final_state.cells[&(p, 0)].val {
            AbsVal::Ptr(l) => assert_eq!(l.vars[&s], AbsOffsets::Top),
            other => panic!("unexpected {other:?}"),
        }
        // field writes are weak: both cells saw both values
        for off in [0, 4] {
            match &res.final_state.cells[&(s, off)].val {
                AbsVal::Int(i) => {
                    assert!(i.contains(3) && i.contains(4), "cell {off}: {i}")
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn loop_widening_stabilizes() {
        let src = "int32_t i; int32_t s; s = 0; for (i = 0; i < 4; i = i + 1) { s = s + 2; }";
        let (prog, res) = analyze_src(src, Mode::B, 8);
        let s = prog.var_id("s").unwrap();
        match &res.final_state.cells[&(s, 0)].val {
            AbsVal::Int(i) => {
                for k in [0, 2, 4, 6, 8] {
                    assert!(i.contains(k), "missing {k} in {i}");
                }
            }
            other => panic!("unexpected {other:?}"),
        }
        let i = prog.var_id("i").unwrap();
        match &res.final_state.cells[&(i, 0)].val {
            AbsVal::Int(v) => assert_eq!(v, &offs("{3}")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trace_inclusion_on_hand_programs() {
        let sources = [
            "int32_t x; int32_t y; x = nondet(); if (x > 0) { y = 1; } else { y = 0 - 1; } assert(y != 0);",
            "typedef struct { int32_t v; } d_t; d_t d1; d_t d2; d_t* p = &d1; \
             d1.v = nondet(); d2.v = 7; p = &d2; d2.v = (*p).v + 1;",
            "int32_t a[4]; int32_t i; for (i = 0; i < 4; i = i + 1) { a[i] = i * 2; } assert(a[3] == 6);",
            "uint8_t c; int32_t x; c = 300; x = c - 1;",
        ];
        for src in sources {
            let prog = parse_program(src).unwrap();
            for mode in [Mode::B, Mode::BTop] {
                let res = analyze(&prog, mode, 8);
                for seed in [1u64, 99, 12345] {
                    let trace = run_program(&prog, seed);
                    for step in &trace.steps {
                        let abs = res
                            .pre
                            .get(&step.stmt)
                            .unwrap_or_else(|| panic!("no pre-state for {}", step.tag));
                        if let Err(e) = state_includes(abs, &step.pre) {
                            panic!("unsound at {} (mode {mode:?}, seed {seed}, {src}): {e}", step.tag);
                        }
                    }
                    if let Err(e) = state_includes(
                        res.pre
                            .get(&StmtId(0))
                            .map(|_| &res.final_state)
                            .unwrap_or(&res.final_state),
                        &trace.final_state,
                    ) {
                        if trace.outcome == crate::machine::Outcome::Ok {
                            panic!("unsound final state (mode {mode:?}, seed {seed}): {e}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn btop_refined_by_b() {
        // gamma_B <= gamma_BTop cellwise on a mixed program
        let src = "typedef struct { int32_t f0; int32_t f1; } s_t; \
                   s_t s; s.f0 = 1; s.f1 = 2;";
        let prog = parse_program(src).unwrap();
        let rb = analyze(&prog, Mode::B, 8);
        let rt = analyze(&prog, Mode::BTop, 8);
        let s = prog.var_id("s").unwrap();
        for off in [0i128, 4] {
            let b = &rb.final_state.cells[&(s, off)];
            let t = &rt.final_state.cells[&(s, off)];
            // every concrete value admitted by B is admitted by BTop
            for k in -5..=5 {
                let cv = ConcVal::Int(k);
                if value_included(&cv, b) {
                    assert!(value_included(&cv, t), "BTop must be coarser at {off}");
                }
            }
            assert!(!b.may_undef || t.may_undef);
        }
    }

    #[test]
    fn analysis_is_deterministic_and_idempotent() {
        let src = "int32_t i; int32_t s; s = 0; for (i = 0; i < 8; i = i + 1) { s = s + 1; }";
        let prog = parse_program(src).unwrap();
        let r1 = analyze(&prog, Mode::B, 4);
        let r2 = analyze(&prog, Mode::B, 4);
        assert_eq!(r1.final_state, r2.final_state);
        assert_eq!(r1.accesses.len(), r2.accesses.len());
        // fixpoint: transferring the whole program from its own final
        // pre-states changes nothing (single extra sweep)
        let an = Analyzer::new(&prog, Mode::B, 4);
        let mut acc = RunAcc {
            pre: r1.pre.clone(),
            post: r1.post.clone(),
            recs: BTreeMap::new(),
        };
        let _ = an.transfer_seq(an.empty_state(), &prog.stmts, &mut acc);
        for (id, st) in &acc.pre {
            assert_eq!(st, &r1.pre[id], "pre-state changed at {id:?}");
        }
    }

    #[test]
    fn access_records_have_stable_paths() {
        let src = "int32_t x; int32_t* p = &x; x = 1; *p = *p + 1;";
        let (_, res) = analyze_src(src, Mode::B, 8);
        let last_stmt = res.accesses.iter().map(|r| r.stmt).max().unwrap();
        let recs: Vec<_> = res.accesses_at(last_stmt).collect();
        // loads: p (target address), p (rhs address), x (rhs value); store: *p
        assert_eq!(recs.len(), 4);
        assert!(matches!(recs[0].kind, AccessKind::Load));
        assert!(matches!(recs[3].kind, AccessKind::Store));
        assert_eq!(recs[3].lv_text, "(*p)");
    }
}
