//! Reference interpreter: concrete memory model and statement semantics.
//!
//! Locations are (symbolic block, byte offset) pairs; blocks are labeled by
//! program variables plus a reserved zero-sized null block. States map each
//! scalar cell of each variable to a value or `Undef`. All partiality is
//! undefined behavior and stops the run.
//!
//! Evaluation order is pinned (and shared with the abstract interpreter and
//! the VC compiler): for an assignment, the target location first, then the
//! right-hand side; binary operands left to right; `&&`/`||` evaluate both
//! operands.

use crate::ast::*;
use crate::prng::SplitMix64;
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Base {
    Null,
    Var(VarId),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ConcLoc {
    pub base: Base,
    pub offset: i128,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConcVal {
    Undef,
    Int(i128),
    Ptr(ConcLoc),
}

/// Per-variable cell maps keyed by cell start offset; every scalar cell of
/// every variable is present, `Undef` until written.
#[derive(Clone, PartialEq, Debug)]
pub struct ConcState {
    pub cells: BTreeMap<(VarId, i128), ConcVal>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UbKind {
    NullAccess,
    OutOfBounds,
    Misaligned,
    Uninitialized,
    KindMismatch,
}

impl UbKind {
    pub fn describe(self) -> &'static str {
        match self {
            UbKind::NullAccess => "access through null",
            UbKind::OutOfBounds => "out-of-bounds access",
            UbKind::Misaligned => "misaligned access",
            UbKind::Uninitialized => "uninitialized read",
            UbKind::KindMismatch => "value kind mismatch",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Outcome {
    Ok,
    AssertFail { stmt: StmtId, tag: String },
    Ub { stmt: StmtId, tag: String, kind: UbKind },
    AssumeStop { stmt: StmtId, tag: String },
}

/// Everything observed while executing one statement; consumed by the
/// translation-validation harness.
#[derive(Clone, PartialEq, Debug)]
pub struct Step {
    pub stmt: StmtId,
    pub tag: String,
    pub pre: ConcState,
    /// Values produced by every memory load, in evaluation order.
    pub loads: Vec<ConcVal>,
    pub nondet: Option<i128>,
    /// assert/assume/if condition value.
    pub cond: Option<i128>,
    pub stored: Option<(ConcLoc, ConcVal)>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub final_state: ConcState,
}

struct Ub(UbKind);

enum Stop {
    AssertFail(StmtId, String),
    AssumeStop(StmtId, String),
    Ub(StmtId, String, UbKind),
}

pub struct Machine<'p> {
    pub prog: &'p Program,
    /// start offset -> scalar type, per variable
    cell_types: Vec<BTreeMap<i128, CType>>,
}

impl<'p> Machine<'p> {
    pub fn new(prog: &'p Program) -> Self {
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
        Machine { prog, cell_types }
    }

    pub fn empty_state(&self) -> ConcState {
        let mut cells = BTreeMap::new();
        for (i, per_var) in self.cell_types.iter().enumerate() {
            for &start in per_var.keys() {
                cells.insert((VarId(i as u32), start), ConcVal::Undef);
            }
        }
        ConcState { cells }
    }

    pub fn base(&self, v: VarId) -> ConcLoc {
        ConcLoc { base: Base::Var(v), offset: 0 }
    }

    pub fn base_null(&self) -> ConcLoc {
        ConcLoc { base: Base::Null, offset: 0 }
    }

    pub fn shift(&self, l: ConcLoc, n: i128) -> ConcLoc {
        ConcLoc { base: l.base, offset: l.offset + n }
    }

    /// Locates the cell for an access of type `u` at `l`, or the reason it
    /// is undefined behavior.
    fn check_cell(&self, u: &CType, l: ConcLoc) -> Result<(VarId, i128), Ub> {
        let v = match l.base {
            Base::Null => return Err(Ub(UbKind::NullAccess)),
            Base::Var(v) => v,
        };
        let size = self.prog.sizeof_var(v);
        if l.offset < 0 || l.offset >= size {
            return Err(Ub(UbKind::OutOfBounds));
        }
        let ty = self
            .cell_types[v.0 as usize]
            .get(&l.offset)
            .ok_or(Ub(UbKind::Misaligned))?;
        if self.prog.types.sizeof(ty) != self.prog.types.sizeof(u) {
            return Err(Ub(UbKind::Misaligned));
        }
        if ty.is_ptr() != u.is_ptr() {
            return Err(Ub(UbKind::KindMismatch));
        }
        Ok((v, l.offset))
    }

    pub fn load(&self, m: &ConcState, u: &CType, l: ConcLoc) -> Result<ConcVal, UbKind> {
        self.load_inner(m, u, l).map_err(|Ub(k)| k)
    }

    fn load_inner(&self, m: &ConcState, u: &CType, l: ConcLoc) -> Result<ConcVal, Ub> {
        let key = self.check_cell(u, l)?;
        match m.cells[&key] {
            ConcVal::Undef => Err(Ub(UbKind::Uninitialized)),
            v @ ConcVal::Int(_) if !u.is_ptr() => Ok(v),
            v @ ConcVal::Ptr(_) if u.is_ptr() => Ok(v),
            _ => Err(Ub(UbKind::KindMismatch)),
        }
    }

    pub fn store(
        &self,
        m: &ConcState,
        u: &CType,
        l: ConcLoc,
        v: ConcVal,
    ) -> Result<ConcState, UbKind> {
        self.store_inner(m, u, l, v).map_err(|Ub(k)| k)
    }

    fn store_inner(
        &self,
        m: &ConcState,
        u: &CType,
        l: ConcLoc,
        v: ConcVal,
    ) -> Result<ConcState, Ub> {
        let key = self.check_cell(u, l)?;
        let stored = match (u, v) {
            (CType::Arith(k), ConcVal::Int(i)) => ConcVal::Int(k.wrap(i)),
            (CType::Ptr(_), p @ ConcVal::Ptr(_)) => p,
            _ => return Err(Ub(UbKind::KindMismatch)),
        };
        let mut next = m.clone();
        next.cells.insert(key, stored);
        Ok(next)
    }

    fn eval_lval(
        &self,
        m: &ConcState,
        lv: &LVal,
        rec: &mut Step,
    ) -> Result<ConcLoc, Ub> {
        match lv {
            LVal::Var(v) => Ok(self.base(*v)),
            LVal::Field(base, rid, idx) => {
                let l = self.eval_lval(m, base, rec)?;
                Ok(self.shift(l, self.prog.types.field(*rid, *idx).offset))
            }
            LVal::Deref(a) => self.eval_addr(m, a, rec),
        }
    }

    fn eval_addr(
        &self,
        m: &ConcState,
        a: &AddrExpr,
        rec: &mut Step,
    ) -> Result<ConcLoc, Ub> {
        match a {
            AddrExpr::Null(_) => Ok(self.base_null()),
            AddrExpr::LValArr(lv, _) => self.eval_lval(m, lv, rec),
            AddrExpr::LValPtr(lv, ty) => {
                let l = self.eval_lval(m, lv, rec)?;
                let v = self.load_inner(m, ty, l)?;
                rec.loads.push(v);
                match v {
                    ConcVal::Ptr(p) => Ok(p),
                    _ => Err(Ub(UbKind::KindMismatch)),
                }
            }
            AddrExpr::AddrOf(lv, _) => self.eval_lval(m, lv, rec),
            AddrExpr::Shift(base, ie) => {
                let l = self.eval_addr(m, base, rec)?;
                let i = self.eval_int(m, ie, rec)?;
                let elem = self.prog.types.sizeof(base.pointee());
                Ok(self.shift(l, elem * ArithKind::U32.wrap(i)))
            }
        }
    }

    fn eval_int(
        &self,
        m: &ConcState,
        e: &IntExpr,
        rec: &mut Step,
    ) -> Result<i128, Ub> {
        match e {
            IntExpr::Const(k, _) => Ok(*k),
            IntExpr::Read(lv, kind) => {
                let l = self.eval_lval(m, lv, rec)?;
                let v = self.load_inner(m, &CType::Arith(*kind), l)?;
                rec.loads.push(v);
                match v {
                    ConcVal::Int(i) => Ok(i),
                    _ => Err(Ub(UbKind::KindMismatch)),
                }
            }
            IntExpr::Nondet(_) => unreachable!("nondet is drawn by exec_assign"),
            IntExpr::Unop(op, a, kind) => {
                let x = self.eval_int(m, a, rec)?;
                Ok(match op {
                    UnOp::Neg => kind.wrap(-x),
                    UnOp::Not => (x == 0) as i128,
                })
            }
            IntExpr::Binop(op, a, b, kind) => {
                let x = self.eval_int(m, a, rec)?;
                let y = self.eval_int(m, b, rec)?;
                Ok(match op {
                    BinOp::Add => kind.wrap(x + y),
                    BinOp::Sub => kind.wrap(x - y),
                    BinOp::Mul => kind.wrap(x * y),
                    BinOp::Div => kind.wrap(x / y), // divisor is a nonzero literal
                    BinOp::Rem => kind.wrap(x % y),
                    BinOp::Eq => (x == y) as i128,
                    BinOp::Ne => (x != y) as i128,
                    BinOp::Lt => (x < y) as i128,
                    BinOp::Le => (x <= y) as i128,
                    BinOp::Gt => (x > y) as i128,
                    BinOp::Ge => (x >= y) as i128,
                    BinOp::And => (x != 0 && y != 0) as i128,
                    BinOp::Or => (x != 0 || y != 0) as i128,
                })
            }
            IntExpr::PtrCmp(eq, a, b) => {
                let la = self.eval_addr(m, a, rec)?;
                let lb = self.eval_addr(m, b, rec)?;
                Ok(((la == lb) == *eq) as i128)
            }
        }
    }

    fn exec_stmts(
        &self,
        mut m: ConcState,
        stmts: &[Stmt],
        rng: &mut SplitMix64,
        steps: &mut Vec<Step>,
    ) -> Result<ConcState, Stop> {
        for s in stmts {
            m = self.exec_stmt(m, s, rng, steps)?;
        }
        Ok(m)
    }

    fn exec_stmt(
        &self,
        m: ConcState,
        s: &Stmt,
        rng: &mut SplitMix64,
        steps: &mut Vec<Step>,
    ) -> Result<ConcState, Stop> {
        let mut rec = Step {
            stmt: s.id,
            tag: s.tag.clone(),
            pre: m.clone(),
            loads: vec![],
            nondet: None,
            cond: None,
            stored: None,
        };
        let stop_ub =
            |rec: Step, steps: &mut Vec<Step>, Ub(kind): Ub| -> Stop {
                let (id, tag) = (rec.stmt, rec.tag.clone());
                steps.push(rec);
                Stop::Ub(id, tag, kind)
            };
        match &s.kind {
            StmtKind::Assign(lv, e) => {
                let loc = match self.eval_lval(&m, lv, &mut rec) {
                    Ok(l) => l,
                    Err(u) => return Err(stop_ub(rec, steps, u)),
                };
                let ty = self.prog.lval_ty(lv);
                let val = match e {
                    Expr::Int(IntExpr::Nondet(kind)) => {
                        let raw = kind.wrap(rng.next_u64() as i128);
                        rec.nondet = Some(raw);
                        ConcVal::Int(raw)
                    }
                    Expr::Int(ie) => match self.eval_int(&m, ie, &mut rec) {
                        Ok(i) => ConcVal::Int(i),
                        Err(u) => return Err(stop_ub(rec, steps, u)),
                    },
                    Expr::Addr(a) => match self.eval_addr(&m, a, &mut rec) {
                        Ok(l) => ConcVal::Ptr(l),
                        Err(u) => return Err(stop_ub(rec, steps, u)),
                    },
                };
                let next = match self.store_inner(&m, &ty, loc, val) {
                    Ok(n) => n,
                    Err(u) => return Err(stop_ub(rec, steps, u)),
                };
                rec.stored = Some((loc, next.cells[&(match loc.base {
                    Base::Var(v) => (v, loc.offset),
                    Base::Null => unreachable!("store through null is UB"),
                })]));
                steps.push(rec);
                Ok(next)
            }
            StmtKind::Assert(c) | StmtKind::Assume(c) => {
                let x = match self.eval_int(&m, c, &mut rec) {
                    Ok(x) => x,
                    Err(u) => return Err(stop_ub(rec, steps, u)),
                };
                rec.cond = Some(x);
                let (id, tag) = (rec.stmt, rec.tag.clone());
                steps.push(rec);
                if x == 0 {
                    if matches!(s.kind, StmtKind::Assert(_)) {
                        return Err(Stop::AssertFail(id, tag));
                    }
                    return Err(Stop::AssumeStop(id, tag));
                }
                Ok(m)
            }
            StmtKind::If(c, then, els) => {
                let x = match self.eval_int(&m, c, &mut rec) {
                    Ok(x) => x,
                    Err(u) => return Err(stop_ub(rec, steps, u)),
                };
                rec.cond = Some(x);
                steps.push(rec);
                if x != 0 {
                    self.exec_stmts(m, then, rng, steps)
                } else {
                    self.exec_stmts(m, els, rng, steps)
                }
            }
            StmtKind::For { var, lo, hi, body } => {
                // Executed directly so the oracle also covers non-unrolled
                // input; the loop variable update is not a recorded step.
                let mut cur = m;
                let ty = self.prog.var(*var).ty.clone();
                for k in *lo..*hi {
                    cur = self
                        .store_inner(&cur, &ty, self.base(*var), ConcVal::Int(k))
                        .map_err(|Ub(kind)| Stop::Ub(s.id, s.tag.clone(), kind))?;
                    cur = self.exec_stmts(cur, body, rng, steps)?;
                }
                Ok(cur)
            }
        }
    }
}

/// Runs a program on inputs drawn from the seed; deterministic per seed.
pub fn run_program(prog: &Program, seed: u64) -> Trace {
    let machine = Machine::new(prog);
    let mut rng = SplitMix64::new(seed);
    let mut steps = vec![];
    let init = machine.empty_state();
    match machine.exec_stmts(init, &prog.stmts, &mut rng, &mut steps) {
        Ok(final_state) => Trace { steps, outcome: Outcome::Ok, final_state },
        Err(stop) => {
            let final_state = steps.last().map(|s| s.pre.clone()).unwrap_or_else(|| machine.empty_state());
            let outcome = match stop {
                Stop::AssertFail(stmt, tag) => Outcome::AssertFail { stmt, tag },
                Stop::AssumeStop(stmt, tag) => Outcome::AssumeStop { stmt, tag },
                Stop::Ub(stmt, tag, kind) => Outcome::Ub { stmt, tag, kind },
            };
            Trace { steps, outcome, final_state }
        }
    }
}

/// One JSON object per executed statement, then the outcome record.
pub fn trace_to_jsonl(prog: &Program, trace: &Trace) -> String {
    use serde_json::{json, Map, Value};
    fn num(v: i128) -> Value {
        if let Ok(x) = i64::try_from(v) {
            json!(x)
        } else {
            json!(u64::try_from(v).expect("values fit in 64 bits"))
        }
    }
    fn state_json(prog: &Program, st: &ConcState) -> Value {
        let mut vars: Map<String, Value> = Map::new();
        for ((v, off), val) in &st.cells {
            let entry = vars
                .entry(prog.var(*v).name.clone())
                .or_insert_with(|| Value::Object(Map::new()));
            let obj = entry.as_object_mut().unwrap();
            let val_json = match val {
                ConcVal::Undef => continue,
                ConcVal::Int(i) => num(*i),
                ConcVal::Ptr(l) => {
                    let base = match l.base {
                        Base::Null => "null".to_string(),
                        Base::Var(v) => prog.var(v).name.clone(),
                    };
                    json!({ "ptr": [base, num(l.offset)] })
                }
            };
            obj.insert(off.to_string(), val_json);
        }
        Value::Object(vars)
    }
    let mut out = String::new();
    for step in &trace.steps {
        let line = json!({ "stmt": step.tag, "state": state_json(prog, &step.pre) });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    let outcome = match &trace.outcome {
        Outcome::Ok => json!({ "outcome": "ok" }),
        Outcome::AssertFail { tag, .. } => json!({ "outcome": "assert-fail", "stmt": tag }),
        Outcome::Ub { tag, kind, .. } => {
            json!({ "outcome": "ub", "stmt": tag, "kind": kind.describe() })
        }
        Outcome::AssumeStop { tag, .. } => json!({ "outcome": "assume-stop", "stmt": tag }),
    };
    out.push_str(&outcome.to_string());
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn run_src(src: &str, seed: u64) -> (Program, Trace) {
        let prog = parse_program(src).expect("test program parses");
        let trace = run_program(&prog, seed);
        (prog, trace)
    }

    fn cell(prog: &Program, trace: &Trace, var: &str, off: i128) -> ConcVal {
        let v = prog.var_id(var).unwrap();
        trace.final_state.cells[&(v, off)]
    }

    #[test]
    fn amm_ops() {
        let prog = parse_program("int32_t x;").unwrap();
        let m = Machine::new(&prog);
        let x = prog.var_id("x").unwrap();
        assert_eq!(m.base(x), ConcLoc { base: Base::Var(x), offset: 0 });
        assert_eq!(m.shift(m.base(x), 0), m.base(x));
        assert_eq!(m.shift(ConcLoc { base: Base::Var(x), offset: 4 }, 12).offset, 16);

        let st = m.empty_state();
        let i32t = CType::Arith(ArithKind::I32);
        // uninitialized read
        assert_eq!(m.load(&st, &i32t, m.base(x)), Err(UbKind::Uninitialized));
        // store then load
        let st2 = m.store(&st, &i32t, m.base(x), ConcVal::Int(5)).unwrap();
        assert_eq!(m.load(&st2, &i32t, m.base(x)), Ok(ConcVal::Int(5)));
        // misaligned
        assert_eq!(
            m.load(&st2, &i32t, ConcLoc { base: Base::Var(x), offset: 1 }),
            Err(UbKind::Misaligned)
        );
        // wrap on store
        let u8t = CType::Arith(ArithKind::U8);
        let prog8 = parse_program("uint8_t c;").unwrap();
        let m8 = Machine::new(&prog8);
        let c = prog8.var_id("c").unwrap();
        let st = m8.store(&m8.empty_state(), &u8t, m8.base(c), ConcVal::Int(300)).unwrap();
        assert_eq!(m8.load(&st, &u8t, m8.base(c)), Ok(ConcVal::Int(44)));
        // null block has no cells
        assert_eq!(
            m.store(&m.empty_state(), &i32t, m.base_null(), ConcVal::Int(1)),
            Err(UbKind::NullAccess)
        );
    }

    #[test]
    fn frame_property() {
        let src = "typedef struct { int32_t a; int32_t b; } r_t;\n\
                   r_t r; int32_t x; int64_t big[3];";
        let prog = parse_program(src).unwrap();
        let m = Machine::new(&prog);
        let mut st = m.empty_state();
        // populate everything
        let keys: Vec<(VarId, i128)> = st.cells.keys().copied().collect();
        for (i, &(v, off)) in keys.iter().enumerate() {
            let ty = prog
                .types
                .scalar_cells(&prog.var(v).ty)
                .into_iter()
                .find(|c| c.start == off)
                .unwrap()
                .ty;
            st = m
                .store(&st, &ty, ConcLoc { base: Base::Var(v), offset: off }, ConcVal::Int(i as i128))
                .unwrap();
        }
        // store to one cell; every other cell unchanged
        let target = keys[2];
        let ty = prog
            .types
            .scalar_cells(&prog.var(target.0).ty)
            .into_iter()
            .find(|c| c.start == target.1)
            .unwrap()
            .ty;
        let st2 = m
            .store(&st, &ty, ConcLoc { base: Base::Var(target.0), offset: target.1 }, ConcVal::Int(999))
            .unwrap();
        for &k in &keys {
            if k == target {
                assert_eq!(st2.cells[&k], ConcVal::Int(999));
            } else {
                assert_eq!(st2.cells[&k], st.cells[&k], "frame violated at {k:?}");
            }
        }
    }

    /// Hand-simulated expected final states for the semantics rules.
    #[test]
    fn conformance_table() {
        let table: Vec<(&str, &str, i128, i128)> = vec![
            ("int32_t x; x = 5;", "x", 0, 5),
            ("int32_t x; x = 2 + 3 * 4;", "x", 0, 14),
            ("uint8_t c; c = 300;", "c", 0, 44),
            ("int8_t c; c = 130;", "c", 0, -126),
            ("int32_t x; x = (0 - 7) / 2;", "x", 0, -3),
            ("int32_t x; x = (0 - 7) % 2;", "x", 0, -1),
            ("int32_t x; x = 3 < 4;", "x", 0, 1),
            ("int32_t x; x = (3 > 4) || (2 == 2);", "x", 0, 1),
            ("int32_t x; x = !7;", "x", 0, 0),
            ("int32_t x; int32_t y; y = 9; x = -y;", "x", 0, -9),
            // record field write lands at the field offset
            (
                "typedef struct { int32_t a; int32_t b; } r_t; r_t r; r.b = 3;",
                "r",
                4,
                3,
            ),
            // array element write
            ("int32_t a[4]; a[2] = 7;", "a", 8, 7),
            // through-pointer write
            ("int32_t x; int32_t* p = &x; *p = 11;", "x", 0, 11),
            // pointer shift via index sugar
            ("int32_t a[4]; int32_t* p = &a[1]; p[1] = 21;", "a", 8, 21),
            // record/array duality: shifting a field pointer reaches the next field
            (
                "typedef struct { int32_t f0; int32_t f1; } s_t; s_t s; \
                 s.f1 = 0; *(&s.f0 + 1) = 8;",
                "s",
                4,
                8,
            ),
            // if/else both ways
            ("int32_t x; int32_t y; x = 1; if (x) { y = 10; } else { y = 20; }", "y", 0, 10),
            ("int32_t x; int32_t y; x = 0; if (x) { y = 10; } else { y = 20; }", "y", 0, 20),
            // loops execute concretely
            ("int32_t i; int32_t s; s = 0; for (i = 0; i < 4; i = i + 1) { s = s + 2; }", "s", 0, 8),
            // stored pointers compare by location
            ("int32_t x; int32_t* p = &x; int32_t* q = &x; int32_t e; e = p == q;", "e", 0, 1),
            ("int32_t x; int32_t y; int32_t* p = &x; int32_t* q = &y; int32_t e; e = p == q;", "e", 0, 0),
        ];
        for (src, var, off, want) in table {
            let (prog, trace) = run_src(src, 7);
            assert_eq!(trace.outcome, Outcome::Ok, "outcome for {src}");
            assert_eq!(cell(&prog, &trace, var, off), ConcVal::Int(want), "for {src}");
        }
    }

    #[test]
    fn outcomes() {
        let (_, t) = run_src("assert(1 == 2);", 0);
        assert!(matches!(t.outcome, Outcome::AssertFail { .. }));

        let (_, t) = run_src("int32_t x; int32_t* p; x = *p;", 0);
        match t.outcome {
            Outcome::Ub { kind, .. } => assert_eq!(kind, UbKind::Uninitialized),
            other => panic!("expected UB, got {other:?}"),
        }

        let (_, t) = run_src(
            "typedef struct { int32_t v; } d_t; d_t d; d_t* p = null; d.v = (*p).v;",
            0,
        );
        match t.outcome {
            Outcome::Ub { kind, .. } => assert_eq!(kind, UbKind::NullAccess),
            other => panic!("expected UB, got {other:?}"),
        }

        let (_, t) = run_src("int32_t a[2]; int32_t x; x = a[5];", 0);
        match t.outcome {
            Outcome::Ub { kind, .. } => assert_eq!(kind, UbKind::OutOfBounds),
            other => panic!("expected UB, got {other:?}"),
        }

        let (_, t) = run_src("int32_t x; x = 1; assume(x == 2); assert(0);", 0);
        assert!(matches!(t.outcome, Outcome::AssumeStop { .. }));

        // negative index wraps through u32 conversion and lands out of bounds
        let (_, t) = run_src("int32_t a[4]; int32_t x; x = a[0 - 1];", 0);
        assert!(matches!(t.outcome, Outcome::Ub { kind: UbKind::OutOfBounds, .. }));
    }

    #[test]
    fn determinism_and_nondet() {
        let src = "int32_t x; int32_t y; x = nondet(); y = nondet(); assert(x == x);";
        let (_, t1) = run_src(src, 42);
        let (_, t2) = run_src(src, 42);
        assert_eq!(t1, t2);
        let (_, t3) = run_src(src, 43);
        assert_ne!(
            t1.steps[0].nondet, t3.steps[0].nondet,
            "different seeds should draw different inputs"
        );
        assert_eq!(t1.outcome, Outcome::Ok);
    }

    #[test]
    fn trace_jsonl_format() {
        let (prog, t) = run_src("int32_t x; int32_t* p = &x; x = 3;", 0);
        let dump = trace_to_jsonl(&prog, &t);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), t.steps.len() + 1);
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["stmt"], "s0");
        let second: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(second["state"]["p"]["0"]["ptr"][0], "x");
        let last: serde_json::Value = serde_json::from_str(lines.last().unwrap()).unwrap();
        assert_eq!(last["outcome"], "ok");
    }
}
