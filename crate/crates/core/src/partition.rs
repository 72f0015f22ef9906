//! Memory partitions: refine each variable's symbolic block into abstract
//! blocks, per analysis:
//!
//!   - `B` / `Btop`: one block per variable;
//!   - `C`: one block per scalar cell;
//!   - `P`: blocks from equivalence classes of memory accesses whose
//!     footprints overlap, transitively closed, plus one residual block per
//!     variable for bytes no class touches.
//!
//! Every partition satisfies: blocks pairwise disjoint, jointly covering all
//! bytes of all variables, each with a unique base variable. Block ids are
//! assigned by sorting on (variable name, lowest offset); id 0 is reserved
//! for null.

use crate::ast::*;
use crate::logic::Term;
use crate::offsets::AbsOffsets;
use crate::points_to::{self, AbsLoc, AnalysisResult, Mode};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Analysis {
    B,
    BTop,
    C,
    P,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::B => "B",
            Analysis::BTop => "Btop",
            Analysis::C => "C",
            Analysis::P => "P",
        }
    }

    pub fn from_name(s: &str) -> Option<Analysis> {
        match s {
            "B" => Some(Analysis::B),
            "Btop" => Some(Analysis::BTop),
            "C" => Some(Analysis::C),
            "P" => Some(Analysis::P),
            _ => None,
        }
    }

    /// The state analysis backing this partition.
    pub fn mode(self) -> Mode {
        match self {
            Analysis::BTop => Mode::BTop,
            _ => Mode::B,
        }
    }
}

/// Sorted, disjoint, inclusive byte ranges.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ByteSet {
    pub ranges: Vec<(i128, i128)>,
}

impl ByteSet {
    pub fn from_range(lo: i128, hi: i128) -> Self {
        ByteSet { ranges: vec![(lo, hi)] }
    }

    pub fn from_sorted_bytes(bytes: impl IntoIterator<Item = i128>) -> Self {
        let mut ranges: Vec<(i128, i128)> = vec![];
        for b in bytes {
            match ranges.last_mut() {
                Some((_, hi)) if *hi + 1 == b => *hi = b,
                Some((_, hi)) if *hi >= b => {}
                _ => ranges.push((b, b)),
            }
        }
        ByteSet { ranges }
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> i128 {
        self.ranges.iter().map(|(l, h)| h - l + 1).sum()
    }

    pub fn min(&self) -> i128 {
        self.ranges.first().expect("nonempty byte set").0
    }

    pub fn contains(&self, b: i128) -> bool {
        self.ranges.iter().any(|&(l, h)| l <= b && b <= h)
    }

    pub fn intersects(&self, lo: i128, hi: i128) -> bool {
        self.ranges.iter().any(|&(l, h)| l <= hi && lo <= h)
    }

    pub fn union(&self, other: &ByteSet) -> ByteSet {
        let mut all: Vec<(i128, i128)> = self
            .ranges
            .iter()
            .chain(other.ranges.iter())
            .copied()
            .collect();
        all.sort_unstable();
        let mut out: Vec<(i128, i128)> = vec![];
        for (l, h) in all {
            match out.last_mut() {
                Some((_, ph)) if *ph + 1 >= l => *ph = (*ph).max(h),
                _ => out.push((l, h)),
            }
        }
        ByteSet { ranges: out }
    }

    pub fn iter_bytes(&self) -> impl Iterator<Item = i128> + '_ {
        self.ranges.iter().flat_map(|&(l, h)| l..=h)
    }
}

impl std::fmt::Display for ByteSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (l, h)) in self.ranges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if l == h {
                write!(f, "{l}")?;
            } else {
                write!(f, "{l}-{h}")?;
            }
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BlockKind {
    Int,
    Ptr,
    Mixed,
}

#[derive(Clone, Debug)]
pub struct AbsBlock {
    /// Logic identifier; 1-based, 0 is the null block.
    pub id: u32,
    pub var: VarId,
    pub bytes: ByteSet,
    pub kind: BlockKind,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub analysis: Analysis,
    pub blocks: Vec<AbsBlock>,
    by_var: BTreeMap<VarId, Vec<usize>>,
}

impl Partition {
    fn from_blocks(prog: &Program, analysis: Analysis, mut raw: Vec<(VarId, ByteSet, String)>) -> Partition {
        raw.sort_by(|a, b| {
            (&prog.var(a.0).name, a.1.min()).cmp(&(&prog.var(b.0).name, b.1.min()))
        });
        let mut blocks = vec![];
        let mut by_var: BTreeMap<VarId, Vec<usize>> = BTreeMap::new();
        for (i, (var, bytes, label)) in raw.into_iter().enumerate() {
            let kind = block_kind(prog, var, &bytes);
            by_var.entry(var).or_default().push(i);
            blocks.push(AbsBlock { id: i as u32 + 1, var, bytes, kind, label });
        }
        Partition { analysis, blocks, by_var }
    }

    pub fn block(&self, id: u32) -> &AbsBlock {
        &self.blocks[id as usize - 1]
    }

    pub fn blocks_of(&self, v: VarId) -> impl Iterator<Item = &AbsBlock> {
        self.by_var.get(&v).into_iter().flatten().map(move |&i| &self.blocks[i])
    }

    /// The block containing a concrete location, if any.
    pub fn containing(&self, v: VarId, off: i128) -> Option<&AbsBlock> {
        self.blocks_of(v).find(|b| b.bytes.contains(off))
    }

    /// `domain`: blocks an abstract location may denote. For the
    /// per-variable analyses this is every variable of the location; for the
    /// finer ones, the blocks whose byte set intersects the clamped offsets.
    pub fn domain(&self, prog: &Program, l: &AbsLoc) -> Vec<&AbsBlock> {
        let mut out = vec![];
        for (v, offs) in &l.vars {
            let size = prog.sizeof_var(*v);
            match self.analysis {
                Analysis::B | Analysis::BTop => out.extend(self.blocks_of(*v)),
                Analysis::C | Analysis::P => {
                    for b in self.blocks_of(*v) {
                        let hit = offs
                            .gamma_bounded(0, size - 1)
                            .into_iter()
                            .any(|o| b.bytes.contains(o));
                        if hit {
                            out.push(b);
                        }
                    }
                }
            }
        }
        out.sort_by_key(|b| b.id);
        out.dedup_by_key(|b| b.id);
        out
    }

    /// `slice`: the formula constraining `e` to this block's byte set.
    pub fn slice_term(&self, prog: &Program, block: &AbsBlock, e: &Term) -> Term {
        let size = prog.sizeof_var(block.var);
        let full = block.bytes.ranges == [(0, size - 1)];
        if full {
            // 0 <= e < sizeof(cty(v))
            return Term::and(vec![
                Term::le(Term::lit(0), e.clone()),
                Term::lt(e.clone(), Term::lit(size)),
            ]);
        }
        Term::or(
            block
                .bytes
                .ranges
                .iter()
                .map(|&(l, h)| {
                    Term::and(vec![
                        Term::le(Term::lit(l), e.clone()),
                        Term::le(e.clone(), Term::lit(h)),
                    ])
                })
                .collect(),
        )
    }

    /// Ground truth of the slice formula (law 4 checks).
    pub fn slice_holds(&self, block: &AbsBlock, off: i128) -> bool {
        block.bytes.contains(off)
    }
}

fn block_kind(prog: &Program, var: VarId, bytes: &ByteSet) -> BlockKind {
    let mut int = false;
    let mut ptr = false;
    for c in prog.types.scalar_cells(&prog.var(var).ty) {
        if bytes.intersects(c.start, c.start + c.size - 1) {
            if c.ty.is_ptr() {
                ptr = true;
            } else {
                int = true;
            }
        }
    }
    match (int, ptr) {
        (true, false) => BlockKind::Int,
        (false, true) => BlockKind::Ptr,
        _ => BlockKind::Int.max_mixed(ptr),
    }
}

impl BlockKind {
    fn max_mixed(self, ptr: bool) -> BlockKind {
        if ptr {
            BlockKind::Mixed
        } else {
            // a block covering only padding bytes defaults to Int
            BlockKind::Int
        }
    }
}

/// One block per variable (analyses B and Btop).
pub fn var_partition(prog: &Program, analysis: Analysis) -> Partition {
    let raw = (0..prog.vars.len())
        .map(|i| {
            let v = VarId(i as u32);
            let size = prog.sizeof_var(v);
            (v, ByteSet::from_range(0, size - 1), prog.var(v).name.clone())
        })
        .collect();
    Partition::from_blocks(prog, analysis, raw)
}

/// One block per scalar cell (analysis C).
pub fn cells_partition(prog: &Program) -> Partition {
    let mut raw = vec![];
    for i in 0..prog.vars.len() {
        let v = VarId(i as u32);
        let name = &prog.var(v).name;
        for c in prog.types.scalar_cells(&prog.var(v).ty) {
            raw.push((
                v,
                ByteSet::from_range(c.start, c.start + c.size - 1),
                format!("{name}{}", c.path),
            ));
        }
        // padding bytes of records still need covering (completeness)
        let covered: i128 = prog
            .types
            .scalar_cells(&prog.var(v).ty)
            .iter()
            .map(|c| c.size)
            .sum();
        let size = prog.sizeof_var(v);
        if covered < size {
            let cells = prog.types.scalar_cells(&prog.var(v).ty);
            let mut bytes: Vec<i128> = (0..size).collect();
            bytes.retain(|b| {
                !cells.iter().any(|c| c.start <= *b && *b < c.start + c.size)
            });
            raw.push((v, ByteSet::from_sorted_bytes(bytes), format!("{name}.padding")));
        }
    }
    Partition::from_blocks(prog, Analysis::C, raw)
}

/// The footprint of an `n`-byte access at `l`: per variable, every byte any
/// start offset may cover, clamped to the block.
pub fn footprint(prog: &Program, l: &AbsLoc, n: i128) -> BTreeMap<VarId, ByteSet> {
    let mut out = BTreeMap::new();
    for (v, offs) in &l.vars {
        let size = prog.sizeof_var(*v);
        let mut bytes = BTreeSet::new();
        for start in offs.gamma_bounded(-(n - 1), size - 1) {
            for b in start.max(0)..=(start + n - 1).min(size - 1) {
                bytes.insert(b);
            }
        }
        if !bytes.is_empty() {
            out.insert(*v, ByteSet::from_sorted_bytes(bytes));
        }
    }
    out
}

/// An equivalence class of memory accesses plus its concrete footprint.
#[derive(Clone, Debug)]
pub struct UseClass {
    /// (source statement tag, path) of each member access.
    pub members: Vec<(String, u32, String)>,
    pub footprint: BTreeMap<VarId, ByteSet>,
}

#[derive(Clone, Debug)]
pub struct UsePartition {
    pub classes: Vec<UseClass>,
}

/// The source statement an access came from, before unrolling.
fn origin_tag(tag: &str) -> &str {
    tag.split('#').next().unwrap_or(tag)
}

/// Rounds a footprint outward to whole scalar cells so slice formulas never
/// split a scalar.
fn round_to_cells(prog: &Program, v: VarId, bytes: &ByteSet) -> ByteSet {
    let mut out = BTreeSet::new();
    let cells = prog.types.scalar_cells(&prog.var(v).ty);
    for c in &cells {
        if bytes.intersects(c.start, c.start + c.size - 1) {
            out.extend(c.start..c.start + c.size);
        }
    }
    // bytes outside every cell (padding) stay as they are
    for b in bytes.iter_bytes() {
        if !cells.iter().any(|c| c.start <= b && b < c.start + c.size) {
            out.insert(b);
        }
    }
    ByteSet::from_sorted_bytes(out)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut cur = x;
        while self.parent[cur] != r {
            let next = self.parent[cur];
            self.parent[cur] = r;
            cur = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // the smaller index is the canonical representative
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Groups the program's memory accesses into equivalence classes: accesses
/// whose (cell-rounded) footprints overlap are related, transitively closed.
/// Copies of one source statement produced by unrolling count as a single
/// access whose location is the join over all copies.
pub fn sim_closure(prog: &Program, bres: &AnalysisResult) -> UsePartition {
    // collapse unroll copies by (origin statement, path)
    let mut collapsed: BTreeMap<(String, u32), (AbsLoc, i128, String)> = BTreeMap::new();
    for rec in &bres.accesses {
        if !matches!(rec.kind, points_to::AccessKind::Load | points_to::AccessKind::Store) {
            continue;
        }
        let key = (origin_tag(&rec.tag).to_string(), rec.path);
        match collapsed.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert((rec.addr.clone(), rec.size, rec.lv_text.clone()));
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let (addr, size, _) = e.get_mut();
                debug_assert_eq!(*size, rec.size);
                *addr = points_to::join_loc(addr, &rec.addr, bres.ilvl);
            }
        }
    }
    let occs: Vec<((String, u32), BTreeMap<VarId, ByteSet>, String)> = collapsed
        .into_iter()
        .map(|((tag, path), (addr, size, text))| {
            let fp: BTreeMap<VarId, ByteSet> = footprint(prog, &addr, size)
                .into_iter()
                .map(|(v, bs)| (v, round_to_cells(prog, v, &bs)))
                .collect();
            ((tag, path), fp, text)
        })
        .collect();

    let mut uf = UnionFind::new(occs.len());
    // per variable, sweep ranges in order and union overlapping occurrences
    let mut per_var: BTreeMap<VarId, Vec<(i128, i128, usize)>> = BTreeMap::new();
    for (i, (_, fp, _)) in occs.iter().enumerate() {
        for (v, bs) in fp {
            for &(l, h) in &bs.ranges {
                per_var.entry(*v).or_default().push((l, h, i));
            }
        }
    }
    for ranges in per_var.values_mut() {
        ranges.sort_unstable();
        let mut cur_end = i128::MIN;
        let mut rep = usize::MAX;
        for &(l, h, i) in ranges.iter() {
            if rep != usize::MAX && l <= cur_end {
                uf.union(rep, i);
                cur_end = cur_end.max(h);
            } else {
                rep = i;
                cur_end = h;
            }
        }
    }

    let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..occs.len() {
        grouped.entry(uf.find(i)).or_default().push(i);
    }
    let classes = grouped
        .into_values()
        .map(|members| {
            let mut fp: BTreeMap<VarId, ByteSet> = BTreeMap::new();
            let mut ms = vec![];
            for &i in &members {
                let ((tag, path), ofp, text) = &occs[i];
                ms.push((tag.clone(), *path, text.clone()));
                for (v, bs) in ofp {
                    fp.entry(*v)
                        .and_modify(|cur| *cur = cur.union(bs))
                        .or_insert_with(|| bs.clone());
                }
            }
            UseClass { members: ms, footprint: fp }
        })
        .collect();
    UsePartition { classes }
}

/// Builds the dereference partition from class footprints, completed with
/// one residual block per variable for untouched bytes.
pub fn deref_partition(prog: &Program, usep: &UsePartition) -> Partition {
    let mut raw: Vec<(VarId, ByteSet, String)> = vec![];
    let mut covered: BTreeMap<VarId, ByteSet> = BTreeMap::new();
    for (ci, class) in usep.classes.iter().enumerate() {
        for (v, bs) in &class.footprint {
            raw.push((*v, bs.clone(), format!("{}.p{ci}", prog.var(*v).name)));
            covered
                .entry(*v)
                .and_modify(|cur| *cur = cur.union(bs))
                .or_insert_with(|| bs.clone());
        }
    }
    for i in 0..prog.vars.len() {
        let v = VarId(i as u32);
        let size = prog.sizeof_var(v);
        let cov = covered.get(&v);
        let rest: Vec<i128> =
            (0..size).filter(|b| cov.map_or(true, |c| !c.contains(*b))).collect();
        if !rest.is_empty() {
            raw.push((
                v,
                ByteSet::from_sorted_bytes(rest),
                format!("{}.rest", prog.var(v).name),
            ));
        }
    }
    Partition::from_blocks(prog, Analysis::P, raw)
}

/// A complete pointer-analysis instance: the partition plus the state
/// analysis backing it.
pub struct PaInstance<'p> {
    pub prog: &'p Program,
    pub analysis: Analysis,
    pub analyzer: points_to::Analyzer<'p>,
    pub result: AnalysisResult,
    pub partition: Partition,
}

pub fn pa_instance(prog: &Program, analysis: Analysis, ilvl: u32) -> PaInstance<'_> {
    let result = points_to::analyze(prog, analysis.mode(), ilvl);
    let partition = match analysis {
        Analysis::B => var_partition(prog, Analysis::B),
        Analysis::BTop => var_partition(prog, Analysis::BTop),
        Analysis::C => cells_partition(prog),
        Analysis::P => deref_partition(prog, &sim_closure(prog, &result)),
    };
    PaInstance {
        prog,
        analysis,
        analyzer: points_to::Analyzer::new(prog, analysis.mode(), ilvl),
        result,
        partition,
    }
}

/// `--dump-partitions` text: one deterministic line per block.
pub fn dump_partitions(prog: &Program, part: &Partition) -> String {
    let mut out = String::new();
    let e = Term::var("e", crate::logic::Sort::Int);
    for b in &part.blocks {
        out.push_str(&format!(
            "block {} base={} bytes={} slice={}\n",
            b.id,
            prog.var(b.var).name,
            b.bytes,
            part.slice_term(prog, b, &e),
        ));
    }
    out
}

/// Partition laws: disjointness, completeness, unique base, slice/gamma
/// agreement. Returns a description of the first violation.
pub fn check_partition_laws(prog: &Program, part: &Partition) -> Result<(), String> {
    for i in 0..prog.vars.len() {
        let v = VarId(i as u32);
        let size = prog.sizeof_var(v);
        for byte in 0..size {
            let holders: Vec<u32> = part
                .blocks_of(v)
                .filter(|b| b.bytes.contains(byte))
                .map(|b| b.id)
                .collect();
            if holders.len() != 1 {
                return Err(format!(
                    "byte ({}, {byte}) covered by {} blocks: {holders:?}",
                    prog.var(v).name,
                    holders.len()
                ));
            }
        }
    }
    for b in &part.blocks {
        // unique base is structural (one `var` field); slice agreement:
        let size = prog.sizeof_var(b.var);
        for byte in 0..size {
            if part.slice_holds(b, byte) != b.bytes.contains(byte) {
                return Err(format!("slice/gamma disagreement on block {}", b.id));
            }
        }
        if b.bytes.min() < 0 || b.bytes.ranges.last().unwrap().1 >= size {
            return Err(format!("block {} exceeds its variable", b.id));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offsets::AbsOffsets;
    use crate::parser::parse_program;

    fn offs(s: &str) -> AbsOffsets {
        s.parse().unwrap()
    }

    #[test]
    fn cells_partition_examples() {
        let prog = parse_program(
            "typedef struct { int32_t v; } data_t;\n\
             typedef struct { data_t* in1; data_t* in2; data_t* out1; data_t* out2; } intf_t;\n\
             data_t df[8]; int32_t x; intf_t s;",
        )
        .unwrap();
        let part = cells_partition(&prog);
        let df = prog.var_id("df").unwrap();
        let x = prog.var_id("x").unwrap();
        let s = prog.var_id("s").unwrap();
        let df_blocks: Vec<_> = part.blocks_of(df).collect();
        assert_eq!(df_blocks.len(), 8);
        let ranges: Vec<(i128, i128)> = df_blocks.iter().map(|b| b.bytes.ranges[0]).collect();
        assert_eq!(ranges, (0..8).map(|i| (4 * i, 4 * i + 3)).collect::<Vec<_>>());
        assert_eq!(part.blocks_of(x).count(), 1);
        let s_blocks: Vec<_> = part.blocks_of(s).collect();
        assert_eq!(s_blocks.len(), 4);
        assert!(s_blocks.iter().all(|b| b.kind == BlockKind::Ptr));
        check_partition_laws(&prog, &part).unwrap();
    }

    #[test]
    fn footprint_examples() {
        let prog = parse_program(
            "typedef struct { int32_t v; } data_t;\n\
             typedef struct { data_t* f1; data_t* f2; data_t* f3; data_t* f4;\n\
                              data_t* f5; data_t* f6; data_t* f7; data_t* f8;\n\
                              data_t* f9; data_t* f10; data_t* f11; data_t* f12; } intf_t;\n\
             intf_t SORT; int32_t x;",
        )
        .unwrap();
        let sort = prog.var_id("SORT").unwrap();
        let x = prog.var_id("x").unwrap();

        let l = AbsLoc::var(sort, offs("{16,20,24,28}"));
        let fp = footprint(&prog, &l, 4);
        assert_eq!(fp[&sort], ByteSet::from_range(16, 31));

        let l = AbsLoc::var(x, offs("{0}"));
        let fp = footprint(&prog, &l, 4);
        assert_eq!(fp[&x], ByteSet::from_range(0, 3));

        assert!(footprint(&prog, &AbsLoc::empty(), 4).is_empty());
    }

    #[test]
    fn var_partition_counts() {
        let prog = parse_program("int32_t a; int64_t b[2]; uint8_t c;").unwrap();
        let part = var_partition(&prog, Analysis::B);
        assert_eq!(part.blocks.len(), prog.vars.len());
        check_partition_laws(&prog, &part).unwrap();
        // ids deterministic by variable name
        let names: Vec<&str> = part.blocks.iter().map(|b| prog.var(b.var).name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
    }

    #[test]
    fn closure_merges_and_residuals() {
        // two pointers into disjoint variables: two classes
        let src = "int32_t x; int32_t y; int32_t* p = &x; int32_t* q = &y; \
                   int32_t t; t = *p; t = *q;";
        let prog = parse_program(src).unwrap();
        let res = points_to::analyze(&prog, Mode::B, 8);
        let usep = sim_closure(&prog, &res);
        let x = prog.var_id("x").unwrap();
        let y = prog.var_id("y").unwrap();
        let classes_x: Vec<_> =
            usep.classes.iter().filter(|c| c.footprint.contains_key(&x)).collect();
        let classes_y: Vec<_> =
            usep.classes.iter().filter(|c| c.footprint.contains_key(&y)).collect();
        assert_eq!(classes_x.len(), 1);
        assert_eq!(classes_y.len(), 1);
        assert!(!std::ptr::eq(classes_x[0], classes_y[0]));

        let part = deref_partition(&prog, &usep);
        check_partition_laws(&prog, &part).unwrap();

        // a program with no pointer use: one residual block per variable
        let prog2 = parse_program("int32_t a; int32_t b; a = 1; b = 2;").unwrap();
        let res2 = points_to::analyze(&prog2, Mode::B, 8);
        let part2 = deref_partition(&prog2, &sim_closure(&prog2, &res2));
        assert_eq!(part2.blocks.len(), 2);
        check_partition_laws(&prog2, &part2).unwrap();
    }

    #[test]
    fn closure_joins_unrolled_copies() {
        // identical source statement unrolled: the copies form one access
        // whose location joins all iterations, so the touched cells group
        // into a single class
        let src = "int32_t a[4]; int32_t i; int32_t t; \
                   for (i = 0; i < 4; i = i + 1) { a[i] = i; } \
                   t = a[0];";
        let prog = parse_program(src).unwrap();
        let unrolled = crate::vcgen::unroll(&prog, 8).unwrap();
        let res = points_to::analyze(&unrolled, Mode::B, 8);
        let usep = sim_closure(&unrolled, &res);
        let a = unrolled.var_id("a").unwrap();
        let touching: Vec<_> =
            usep.classes.iter().filter(|c| c.footprint.contains_key(&a)).collect();
        assert_eq!(touching.len(), 1, "copies of a[i] should form one class");
        assert_eq!(touching[0].footprint[&a], ByteSet::from_range(0, 15));
    }

    #[test]
    fn domain_per_analysis() {
        let prog = parse_program(
            "typedef struct { int32_t v; } data_t;\n data_t df[8]; int32_t x;",
        )
        .unwrap();
        let df = prog.var_id("df").unwrap();
        let l = AbsLoc::var(df, offs("{4,8}"));

        let b = var_partition(&prog, Analysis::B);
        let dom = b.domain(&prog, &l);
        assert_eq!(dom.len(), 1);
        assert_eq!(dom[0].var, df);

        let c = cells_partition(&prog);
        let dom = c.domain(&prog, &l);
        assert_eq!(dom.len(), 2);
        assert_eq!(dom[0].bytes, ByteSet::from_range(4, 7));
        assert_eq!(dom[1].bytes, ByteSet::from_range(8, 11));

        // fully out-of-bounds offsets: per-variable analyses still list the
        // variable, cellwise analyses find nothing
        let oob = AbsLoc::var(df, offs("{100}"));
        assert_eq!(b.domain(&prog, &oob).len(), 1);
        assert_eq!(c.domain(&prog, &oob).len(), 0);
    }

    #[test]
    fn slice_terms() {
        let prog = parse_program("typedef struct { int32_t v; } data_t; data_t df[8];").unwrap();
        let df = prog.var_id("df").unwrap();
        let part = var_partition(&prog, Analysis::B);
        let blk = part.blocks_of(df).next().unwrap();
        let e = Term::var("e", crate::logic::Sort::Int);
        assert_eq!(
            part.slice_term(&prog, blk, &e).to_string(),
            "((0 <= e) && (e < 32))"
        );

        let cp = cells_partition(&prog);
        let blk = cp.blocks_of(df).nth(1).unwrap();
        assert_eq!(
            cp.slice_term(&prog, blk, &e).to_string(),
            "((4 <= e) && (e <= 7))"
        );
    }

    #[test]
    fn padding_bytes_are_covered() {
        let prog =
            parse_program("typedef struct { uint8_t a; int32_t b; } m_t; m_t m;").unwrap();
        for part in [
            var_partition(&prog, Analysis::B),
            cells_partition(&prog),
            {
                let res = points_to::analyze(&prog, Mode::B, 8);
                deref_partition(&prog, &sim_closure(&prog, &res))
            },
        ] {
            check_partition_laws(&prog, &part).unwrap();
        }
    }
}
