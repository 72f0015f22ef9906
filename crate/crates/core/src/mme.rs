//! Memory model environments: the compilation-time objects that turn loads,
//! stores and pointer arithmetic into logic terms and formulas.
//!
//! Two implementations share one interface:
//!
//!   - the functor model, built from any pointer-analysis instance: each
//!     abstract block maps to a logic array variable, locations are
//!     (block-id term, byte-offset term) pairs carrying the analysis's
//!     abstract location, and loads/stores dispatch over the blocks the
//!     location may denote;
//!   - the typed baseline: one array per scalar type indexed by a flat
//!     `addr_v + offset` term, where each `addr_v` is an uninterpreted
//!     constant (so distinct variables of one type are not separated by
//!     construction).
//!
//! Fresh array generations are named `<variable>_<blockid>_<generation>`.

use crate::ast::*;
use crate::logic::{Sort, SymTab, Term};
use crate::offsets::AbsOffsets;
use crate::partition::{Analysis, BlockKind, PaInstance};
use crate::points_to::{AbsLoc, AbsState};
use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum ArrKind {
    IntArr,
    PtrArr,
}

impl ArrKind {
    fn sort(self) -> Sort {
        match self {
            ArrKind::IntArr => Sort::ArrInt,
            ArrKind::PtrArr => Sort::ArrLoc,
        }
    }
}

/// Key of one logic array: a block id (functor) or scalar-type slot (typed),
/// plus which component it is.
pub type ArrKey = (u32, ArrKind);

/// Which abstract state the environment currently reads from.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum StateRef {
    Entry,
    Pre(StmtId),
    Post(StmtId),
}

/// The compilation environment: current array variable per block, plus the
/// abstract-state accessor.
#[derive(Clone, Debug)]
pub struct MEnv {
    pub arrays: BTreeMap<ArrKey, Term>,
    pub state: StateRef,
}

impl MEnv {
    pub fn at(&self, state: StateRef) -> MEnv {
        MEnv { arrays: self.arrays.clone(), state }
    }
}

/// A compiled location: logic pair plus the analysis's abstract location.
#[derive(Clone, Debug)]
pub struct MLoc {
    pub eb: Term,
    pub eo: Term,
    pub aloc: AbsLoc,
}

impl MLoc {
    pub fn pair(&self) -> Term {
        Term::mk_loc(self.eb.clone(), self.eo.clone())
    }
}

#[derive(Clone, Debug)]
pub enum MVal {
    Int(Term),
    Ptr(MLoc),
}

impl MVal {
    pub fn term(&self) -> Term {
        match self {
            MVal::Int(t) => t.clone(),
            MVal::Ptr(l) => l.pair(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MmeError {
    #[error("load from provably invalid location ({0})")]
    InvalidLoad(String),
    #[error("store to provably invalid location ({0})")]
    InvalidStore(String),
    #[error("variable base resolves to {0} blocks, expected exactly one")]
    NonSingletonBase(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct MmeOptions {
    /// Drop dispatch cases whose slice is statically false.
    pub prune: bool,
    /// Guard shift dispatch with base-compatibility (`fits`). Disabling it
    /// exists for differential testing only.
    pub fits_guard: bool,
}

impl Default for MmeOptions {
    fn default() -> Self {
        MmeOptions { prune: true, fits_guard: true }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ModelChoice {
    Typed,
    Analysis(Analysis),
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Typed => "typed",
            ModelChoice::Analysis(a) => a.name(),
        }
    }

    pub fn from_name(s: &str) -> Option<ModelChoice> {
        if s == "typed" {
            return Some(ModelChoice::Typed);
        }
        Analysis::from_name(s).map(ModelChoice::Analysis)
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

// ---------------------------------------------------------------------------
// Functor model.

pub struct FunctorMme<'p> {
    pub pa: PaInstance<'p>,
    pub opts: MmeOptions,
    /// Dispatch conditionals built so far; stays zero while every domain
    /// met during compilation is a singleton.
    pub dispatch_ites: Cell<usize>,
}

impl<'p> FunctorMme<'p> {
    pub fn new(pa: PaInstance<'p>, opts: MmeOptions) -> Self {
        FunctorMme { pa, opts, dispatch_ites: Cell::new(0) }
    }

    fn prog(&self) -> &'p Program {
        self.pa.prog
    }

    fn arr_prefix(&self, block_id: u32, kind: ArrKind) -> String {
        let b = self.pa.partition.block(block_id);
        let base = &self.prog().var(b.var).name;
        match b.kind {
            BlockKind::Mixed => match kind {
                ArrKind::IntArr => format!("{base}_{}_int", b.id),
                ArrKind::PtrArr => format!("{base}_{}_ptr", b.id),
            },
            _ => format!("{base}_{}", b.id),
        }
    }

    fn state(&self, env: &MEnv) -> &AbsState {
        match env.state {
            StateRef::Entry => self
                .pa
                .result
                .pre
                .values()
                .next()
                .unwrap_or(&self.pa.result.final_state),
            StateRef::Pre(s) => &self.pa.result.pre[&s],
            StateRef::Post(s) => &self.pa.result.post[&s],
        }
    }

    /// Blocks an access of this kind at `l` may touch, slice-pruned unless
    /// disabled.
    fn access_domain(&self, l: &AbsLoc, want_ptr: bool) -> Vec<u32> {
        let prog = self.prog();
        self.pa
            .partition
            .domain(prog, l)
            .into_iter()
            .filter(|b| match b.kind {
                BlockKind::Int => !want_ptr,
                BlockKind::Ptr => want_ptr,
                BlockKind::Mixed => true,
            })
            .filter(|b| {
                if !self.opts.prune {
                    return true;
                }
                // statically-false slice: the offsets for this variable
                // never intersect the block
                let size = prog.sizeof_var(b.var);
                l.vars
                    .get(&b.var)
                    .map(|offs| {
                        offs.gamma_bounded(0, size - 1)
                            .into_iter()
                            .any(|o| b.bytes.contains(o))
                    })
                    .unwrap_or(false)
            })
            .map(|b| b.id)
            .collect()
    }

    fn fits(&self, eb: &Term, aloc: &AbsLoc, target_block: u32) -> Term {
        if !self.opts.fits_guard {
            return Term::bool_lit(true);
        }
        let base = self.pa.partition.block(target_block).var;
        let cases = self
            .pa
            .partition
            .domain(self.prog(), aloc)
            .into_iter()
            .filter(|b| b.var == base)
            .map(|b| Term::eq(eb.clone(), Term::lit(b.id as i128)))
            .collect();
        Term::or(cases)
    }

    /// Nested conditional over `ids`, with per-branch guards from `guard`.
    fn dispatch(
        &self,
        ids: &[u32],
        guard: impl Fn(u32) -> Term,
        value: impl Fn(u32) -> Term,
    ) -> Term {
        let mut out = value(*ids.last().expect("nonempty dispatch"));
        for &id in ids[..ids.len() - 1].iter().rev() {
            let g = guard(id);
            if g.as_bool_lit() != Some(true) && g.as_bool_lit() != Some(false) {
                self.dispatch_ites.set(self.dispatch_ites.get() + 1);
            }
            out = Term::ite(g, value(id), out);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Typed baseline.

pub struct TypedMme<'p> {
    pub prog: &'p Program,
    /// scalar type per slot, in first-seen declaration order
    pub slots: Vec<(String, CType)>,
}

impl<'p> TypedMme<'p> {
    pub fn new(prog: &'p Program) -> Self {
        let mut slots: Vec<(String, CType)> = vec![];
        for d in &prog.vars {
            for c in prog.types.scalar_cells(&d.ty) {
                let key = type_key(prog, &c.ty);
                if !slots.iter().any(|(k, _)| *k == key) {
                    slots.push((key, c.ty.clone()));
                }
            }
        }
        TypedMme { prog, slots }
    }

    pub fn slot_of(&self, ty: &CType) -> Option<u32> {
        let key = type_key(self.prog, ty);
        self.slots.iter().position(|(k, _)| *k == key).map(|i| i as u32)
    }

    /// The uninterpreted base constant of a variable.
    pub fn addr_term(&self, v: VarId) -> Term {
        Term::var(format!("addr_{}", self.prog.var(v).name), Sort::Int)
    }

    /// The concrete value the validation harness assigns to `addr_v`:
    /// widely-spaced so distinct variables never collide in a binding.
    pub fn addr_value(&self, v: VarId) -> i128 {
        (v.0 as i128 + 1) * 1_000_000
    }
}

/// A stable name for a scalar type (array-per-type keys).
pub fn type_key(prog: &Program, ty: &CType) -> String {
    match ty {
        CType::Arith(k) => k.name().trim_end_matches("_t").to_string(),
        CType::Ptr(t) => format!("{}_ref", type_key(prog, t)),
        CType::Record(id) => prog.types.record(*id).name.trim_end_matches("_t").to_string(),
        CType::Array(t, n) => format!("{}x{n}", type_key(prog, t)),
    }
}

// ---------------------------------------------------------------------------
// The shared model interface.

pub enum Model<'p> {
    Functor(FunctorMme<'p>),
    Typed(TypedMme<'p>),
}

impl<'p> Model<'p> {
    pub fn build(
        prog: &'p Program,
        choice: ModelChoice,
        ilvl: u32,
        opts: MmeOptions,
    ) -> Model<'p> {
        match choice {
            ModelChoice::Typed => Model::Typed(TypedMme::new(prog)),
            ModelChoice::Analysis(a) => {
                Model::Functor(FunctorMme::new(crate::partition::pa_instance(prog, a, ilvl), opts))
            }
        }
    }

    pub fn prog(&self) -> &'p Program {
        match self {
            Model::Functor(m) => m.pa.prog,
            Model::Typed(m) => m.prog,
        }
    }

    pub fn choice(&self) -> ModelChoice {
        match self {
            Model::Functor(m) => ModelChoice::Analysis(m.pa.analysis),
            Model::Typed(_) => ModelChoice::Typed,
        }
    }

    /// Number of memory partitions (blocks, or typed arrays).
    pub fn partition_count(&self) -> usize {
        match self {
            Model::Functor(m) => m.pa.partition.blocks.len(),
            Model::Typed(m) => m.slots.len(),
        }
    }

    /// Fresh array variables for every block (or type slot), plus the
    /// typed model's base constants.
    pub fn emp(&self, syms: &mut SymTab) -> MEnv {
        let mut arrays = BTreeMap::new();
        match self {
            Model::Functor(m) => {
                for b in &m.pa.partition.blocks {
                    let kinds: &[ArrKind] = match b.kind {
                        BlockKind::Int => &[ArrKind::IntArr],
                        BlockKind::Ptr => &[ArrKind::PtrArr],
                        BlockKind::Mixed => &[ArrKind::IntArr, ArrKind::PtrArr],
                    };
                    for &k in kinds {
                        let var = syms.fresh(&m.arr_prefix(b.id, k), k.sort());
                        arrays.insert((b.id, k), var);
                    }
                }
            }
            Model::Typed(m) => {
                for (i, (key, ty)) in m.slots.iter().enumerate() {
                    let kind = if ty.is_ptr() { ArrKind::PtrArr } else { ArrKind::IntArr };
                    let var = syms.fresh(&format!("M_{key}"), kind.sort());
                    arrays.insert((i as u32, kind), var);
                }
                for i in 0..m.prog.vars.len() {
                    syms.declare(&format!("addr_{}", m.prog.var(VarId(i as u32)).name), Sort::Int);
                }
            }
        }
        MEnv { arrays, state: StateRef::Entry }
    }

    pub fn base(&self, v: VarId) -> Result<MLoc, MmeError> {
        match self {
            Model::Functor(m) => {
                let aloc = crate::points_to::pa_base(v);
                let dom = m.pa.partition.domain(m.prog(), &aloc);
                if dom.len() != 1 {
                    return Err(MmeError::NonSingletonBase(dom.len()));
                }
                Ok(MLoc { eb: Term::lit(dom[0].id as i128), eo: Term::lit(0), aloc })
            }
            Model::Typed(m) => Ok(MLoc {
                eb: m.addr_term(v),
                eo: Term::lit(0),
                aloc: AbsLoc::empty(),
            }),
        }
    }

    pub fn null_loc(&self) -> MLoc {
        MLoc { eb: Term::lit(0), eo: Term::lit(0), aloc: AbsLoc::null() }
    }

    /// Shift by an already-scaled byte amount (term plus its abstraction).
    pub fn shift(
        &self,
        env: &MEnv,
        l: &MLoc,
        e: &Term,
        e_abs: &AbsOffsets,
        warnings: &mut Vec<String>,
    ) -> MLoc {
        let eo = Term::add(l.eo.clone(), e.clone());
        match self {
            Model::Typed(_) => MLoc { eb: l.eb.clone(), eo, aloc: AbsLoc::empty() },
            Model::Functor(m) => {
                let shifted = m.pa.analyzer.pa_shift(&l.aloc, e_abs);
                let dom: Vec<u32> =
                    m.pa.partition.domain(m.prog(), &shifted).iter().map(|b| b.id).collect();
                let eb = match dom.len() {
                    0 => {
                        if !shifted.may_null {
                            warnings.push(format!(
                                "shift lands in no block (statically invalid): {shifted}"
                            ));
                        }
                        Term::lit(0)
                    }
                    1 => Term::lit(dom[0] as i128),
                    _ => m.dispatch(
                        &dom,
                        |id| {
                            Term::and(vec![
                                m.fits(&l.eb, &l.aloc, id),
                                m.pa.partition.slice_term(
                                    m.prog(),
                                    m.pa.partition.block(id),
                                    &eo,
                                ),
                            ])
                        },
                        |id| Term::lit(id as i128),
                    ),
                };
                MLoc { eb, eo, aloc: shifted }
            }
        }
    }

    /// Whether every cell this location can denote has exactly this
    /// arithmetic kind (lets the compiler skip wrapping loaded values).
    pub fn load_kind_exact(&self, l: &MLoc, kind: ArithKind) -> bool {
        match self {
            // one array per type: values in it were stored wrapped
            Model::Typed(_) => true,
            Model::Functor(m) => {
                let prog = m.prog();
                l.aloc.vars.iter().all(|(v, offs)| {
                    let size = prog.sizeof_var(*v);
                    let cells = prog.types.scalar_cells(&prog.var(*v).ty);
                    offs.gamma_bounded(0, size - 1).into_iter().all(|o| {
                        cells
                            .iter()
                            .find(|c| c.start == o)
                            .is_some_and(|c| c.ty == CType::Arith(kind))
                    })
                })
            }
        }
    }

    pub fn load(&self, env: &MEnv, u: &CType, l: &MLoc) -> Result<MVal, MmeError> {
        match self {
            Model::Typed(m) => {
                let slot = m
                    .slot_of(u)
                    .ok_or_else(|| MmeError::InvalidLoad("type has no array".into()))?;
                let kind = if u.is_ptr() { ArrKind::PtrArr } else { ArrKind::IntArr };
                let arr = env.arrays[&(slot, kind)].clone();
                let idx = Term::add(l.eb.clone(), l.eo.clone());
                let e = Term::read(arr, idx);
                Ok(if u.is_ptr() {
                    MVal::Ptr(MLoc {
                        eb: Term::fst(e.clone()),
                        eo: Term::snd(e),
                        aloc: AbsLoc::empty(),
                    })
                } else {
                    MVal::Int(e)
                })
            }
            Model::Functor(m) => {
                let want_ptr = u.is_ptr();
                let dom = m.access_domain(&l.aloc, want_ptr);
                if dom.is_empty() {
                    return Err(MmeError::InvalidLoad(format!("{}", l.aloc)));
                }
                let kind = if want_ptr { ArrKind::PtrArr } else { ArrKind::IntArr };
                let e = m.dispatch(
                    &dom,
                    |id| Term::eq(l.eb.clone(), Term::lit(id as i128)),
                    |id| Term::read(env.arrays[&(id, kind)].clone(), l.eo.clone()),
                );
                Ok(if want_ptr {
                    let aloc = m.pa.analyzer.pa_load_ptr(m.state(env), &l.aloc);
                    MVal::Ptr(MLoc { eb: Term::fst(e.clone()), eo: Term::snd(e), aloc })
                } else {
                    MVal::Int(e)
                })
            }
        }
    }

    /// Produces the new environment and the formula relating old and new
    /// arrays.
    pub fn store(
        &self,
        env: &MEnv,
        u: &CType,
        l: &MLoc,
        v: &MVal,
        syms: &mut SymTab,
    ) -> Result<(MEnv, Term), MmeError> {
        let val = v.term();
        match self {
            Model::Typed(m) => {
                let slot = m
                    .slot_of(u)
                    .ok_or_else(|| MmeError::InvalidStore("type has no array".into()))?;
                let kind = if u.is_ptr() { ArrKind::PtrArr } else { ArrKind::IntArr };
                let key = (slot, kind);
                let old = env.arrays[&key].clone();
                let alpha = syms.fresh(&format!("M_{}", m.slots[slot as usize].0), kind.sort());
                let idx = Term::add(l.eb.clone(), l.eo.clone());
                let formula = Term::eq(alpha.clone(), Term::store(old, idx, val));
                let mut next = env.clone();
                next.arrays.insert(key, alpha);
                Ok((next, formula))
            }
            Model::Functor(m) => {
                let want_ptr = u.is_ptr();
                let dom = m.access_domain(&l.aloc, want_ptr);
                if dom.is_empty() {
                    return Err(MmeError::InvalidStore(format!("{}", l.aloc)));
                }
                let kind = if want_ptr { ArrKind::PtrArr } else { ArrKind::IntArr };
                let mut next = env.clone();
                let mut conjuncts = vec![];
                for id in dom {
                    let key = (id, kind);
                    let old = env.arrays[&key].clone();
                    let alpha = syms.fresh(&m.arr_prefix(id, kind), kind.sort());
                    let updated = Term::store(old.clone(), l.eo.clone(), val.clone());
                    let guard = Term::eq(l.eb.clone(), Term::lit(id as i128));
                    if guard.as_bool_lit().is_none() {
                        m.dispatch_ites.set(m.dispatch_ites.get() + 1);
                    }
                    conjuncts.push(Term::ite(
                        guard,
                        Term::eq(alpha.clone(), updated),
                        Term::eq(alpha.clone(), old),
                    ));
                    next.arrays.insert(key, alpha);
                }
                Ok((next, Term::and(conjuncts)))
            }
        }
    }

    /// Joins two environments: blocks whose arrays differ get a fresh
    /// variable, with per-branch equalities.
    pub fn join(
        &self,
        m1: &MEnv,
        m2: &MEnv,
        syms: &mut SymTab,
    ) -> (MEnv, Vec<Term>, Vec<Term>) {
        assert_eq!(
            m1.arrays.len(),
            m2.arrays.len(),
            "environments from the same model"
        );
        let mut arrays = BTreeMap::new();
        let mut eqs1 = vec![];
        let mut eqs2 = vec![];
        for (key, a1) in &m1.arrays {
            let a2 = &m2.arrays[key];
            if a1 == a2 {
                arrays.insert(*key, a1.clone());
            } else {
                let prefix = match self {
                    Model::Functor(m) => m.arr_prefix(key.0, key.1),
                    Model::Typed(m) => format!("M_{}", m.slots[key.0 as usize].0),
                };
                let alpha = syms.fresh(&prefix, key.1.sort());
                eqs1.push(Term::eq(alpha.clone(), a1.clone()));
                eqs2.push(Term::eq(alpha.clone(), a2.clone()));
                arrays.insert(*key, alpha);
            }
        }
        (MEnv { arrays, state: m1.state }, eqs1, eqs2)
    }

    /// Abstract value of an integer expression at the environment's current
    /// state (`top` under the typed baseline, which has no analysis).
    pub fn eval_int_abs(&self, env: &MEnv, e: &IntExpr) -> AbsOffsets {
        match self {
            Model::Typed(_) => AbsOffsets::Top,
            Model::Functor(m) => {
                let mut recs = crate::points_to::Recs::throwaway(StmtId(u32::MAX));
                m.pa.analyzer.eval_int(m.state(env), e, &mut recs)
            }
        }
    }

    /// Logic pair denoted by a concrete location (validation bindings).
    pub fn loc_value(&self, conc: crate::machine::ConcLoc) -> (i128, i128) {
        use crate::machine::Base;
        match conc.base {
            Base::Null => (0, conc.offset),
            Base::Var(v) => match self {
                Model::Functor(m) => {
                    let id = m
                        .pa
                        .partition
                        .containing(v, conc.offset)
                        .map(|b| b.id as i128)
                        .unwrap_or(0);
                    (id, conc.offset)
                }
                Model::Typed(m) => (m.addr_value(v), conc.offset),
            },
        }
    }

    /// Ground array value for one array key under a concrete state.
    pub fn arr_value(
        &self,
        key: ArrKey,
        conc: &crate::machine::ConcState,
    ) -> crate::logic::GroundVal {
        use crate::logic::{ArrVal, GroundVal};
        use crate::machine::ConcVal;
        let prog = self.prog();
        let mut ints = ArrVal::new(0i128);
        let mut locs = ArrVal::new((0i128, 0i128));
        match self {
            Model::Functor(m) => {
                let block = m.pa.partition.block(key.0);
                for c in prog.types.scalar_cells(&prog.var(block.var).ty) {
                    if !block.bytes.contains(c.start) {
                        continue;
                    }
                    match conc.cells[&(block.var, c.start)] {
                        ConcVal::Undef => {}
                        ConcVal::Int(k) => ints.set(c.start, k),
                        ConcVal::Ptr(p) => locs.set(c.start, self.loc_value(p)),
                    }
                }
            }
            Model::Typed(m) => {
                let want = &m.slots[key.0 as usize].1;
                for i in 0..prog.vars.len() {
                    let v = VarId(i as u32);
                    for c in prog.types.scalar_cells(&prog.var(v).ty) {
                        if &c.ty != want {
                            continue;
                        }
                        let idx = m.addr_value(v) + c.start;
                        match conc.cells[&(v, c.start)] {
                            ConcVal::Undef => {}
                            ConcVal::Int(k) => ints.set(idx, k),
                            ConcVal::Ptr(p) => locs.set(idx, self.loc_value(p)),
                        }
                    }
                }
            }
        }
        match key.1 {
            ArrKind::IntArr => GroundVal::ArrInt(ints),
            ArrKind::PtrArr => GroundVal::ArrLoc(locs),
        }
    }

    /// Dispatch conditionals built so far (singleton-collapse checks).
    pub fn dispatch_ites(&self) -> usize {
        match self {
            Model::Functor(m) => m.dispatch_ites.get(),
            Model::Typed(_) => 0,
        }
    }
}
