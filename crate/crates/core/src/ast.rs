//! Typed AST for the C-like fragment, plus the fixed ILP32 ABI: sizes,
//! field offsets, and enumeration of the scalar cells of a type.

use std::fmt;

/// Pointers are 4 bytes (ILP32), which makes the benchmark byte offsets
/// concrete and reproducible.
pub const PTR_SIZE: i128 = 4;
pub const PTR_ALIGN: i128 = 4;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ArithKind {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    I64,
    U64,
}

impl ArithKind {
    pub const ALL: [ArithKind; 8] = [
        ArithKind::I8,
        ArithKind::U8,
        ArithKind::I16,
        ArithKind::U16,
        ArithKind::I32,
        ArithKind::U32,
        ArithKind::I64,
        ArithKind::U64,
    ];

    pub fn size(self) -> i128 {
        match self {
            ArithKind::I8 | ArithKind::U8 => 1,
            ArithKind::I16 | ArithKind::U16 => 2,
            ArithKind::I32 | ArithKind::U32 => 4,
            ArithKind::I64 | ArithKind::U64 => 8,
        }
    }

    pub fn align(self) -> i128 {
        self.size()
    }

    pub fn signed(self) -> bool {
        matches!(self, ArithKind::I8 | ArithKind::I16 | ArithKind::I32 | ArithKind::I64)
    }

    pub fn min_value(self) -> i128 {
        if self.signed() {
            -(1i128 << (self.size() * 8 - 1))
        } else {
            0
        }
    }

    pub fn max_value(self) -> i128 {
        if self.signed() {
            (1i128 << (self.size() * 8 - 1)) - 1
        } else {
            (1i128 << (self.size() * 8)) - 1
        }
    }

    /// Wrap-around conversion into this kind's range (two's complement).
    pub fn wrap(self, v: i128) -> i128 {
        let width = 1i128 << (self.size() * 8);
        let m = v.rem_euclid(width);
        if self.signed() && m > self.max_value() {
            m - width
        } else {
            m
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArithKind::I8 => "int8_t",
            ArithKind::U8 => "uint8_t",
            ArithKind::I16 => "int16_t",
            ArithKind::U16 => "uint16_t",
            ArithKind::I32 => "int32_t",
            ArithKind::U32 => "uint32_t",
            ArithKind::I64 => "int64_t",
            ArithKind::U64 => "uint64_t",
        }
    }

    pub fn from_name(s: &str) -> Option<ArithKind> {
        ArithKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Conversion rank order used when typing binary operators.
    pub fn rank(self) -> u8 {
        self.size() as u8
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RecordId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u32);

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum CType {
    Arith(ArithKind),
    Ptr(Box<CType>),
    Record(RecordId),
    /// Fixed-length array; elements are scalar or record (no nesting).
    Array(Box<CType>, u32),
}

impl CType {
    pub fn is_scalar(&self) -> bool {
        matches!(self, CType::Arith(_) | CType::Ptr(_))
    }

    pub fn is_ptr(&self) -> bool {
        matches!(self, CType::Ptr(_))
    }

    pub fn arith_kind(&self) -> Option<ArithKind> {
        match self {
            CType::Arith(k) => Some(*k),
            _ => None,
        }
    }

    pub fn pointee(&self) -> Option<&CType> {
        match self {
            CType::Ptr(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FieldDef {
    pub name: String,
    pub ty: CType,
    pub offset: i128,
}

#[derive(Clone, Debug)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
    pub size: i128,
    pub align: i128,
}

/// The program's type table; owns record layouts and answers ABI queries.
#[derive(Clone, Debug, Default)]
pub struct Types {
    pub records: Vec<RecordDef>,
}

/// One scalar cell of a type: its path, byte range start, and scalar type.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub path: String,
    pub start: i128,
    pub size: i128,
    pub ty: CType,
}

impl Types {
    pub fn record(&self, id: RecordId) -> &RecordDef {
        &self.records[id.0 as usize]
    }

    /// Registers a record, laying out fields in declaration order with
    /// natural alignment padding; total size rounds up to the max alignment.
    pub fn add_record(&mut self, name: String, fields: Vec<(String, CType)>) -> RecordId {
        let mut laid = Vec::with_capacity(fields.len());
        let mut offset = 0i128;
        let mut align = 1i128;
        for (fname, fty) in fields {
            let fa = self.align_of(&fty);
            let fs = self.sizeof(&fty);
            offset = round_up(offset, fa);
            laid.push(FieldDef { name: fname, ty: fty, offset });
            offset += fs;
            align = align.max(fa);
        }
        let size = round_up(offset, align).max(1);
        self.records.push(RecordDef { name, fields: laid, size, align });
        RecordId(self.records.len() as u32 - 1)
    }

    pub fn sizeof(&self, ty: &CType) -> i128 {
        match ty {
            CType::Arith(k) => k.size(),
            CType::Ptr(_) => PTR_SIZE,
            CType::Record(id) => self.record(*id).size,
            CType::Array(elem, n) => self.sizeof(elem) * *n as i128,
        }
    }

    pub fn align_of(&self, ty: &CType) -> i128 {
        match ty {
            CType::Arith(k) => k.align(),
            CType::Ptr(_) => PTR_ALIGN,
            CType::Record(id) => self.record(*id).align,
            CType::Array(elem, _) => self.align_of(elem),
        }
    }

    pub fn field(&self, rec: RecordId, idx: u32) -> &FieldDef {
        &self.record(rec).fields[idx as usize]
    }

    pub fn offsetof(&self, rec: RecordId, field: &str) -> Option<i128> {
        self.record(rec).fields.iter().find(|f| f.name == field).map(|f| f.offset)
    }

    /// The ordered scalar cells of `ty`: the inductive cells-paths with
    /// byte ranges from the ABI. Ranges of distinct cells are disjoint and
    /// cover every non-padding byte.
    pub fn scalar_cells(&self, ty: &CType) -> Vec<Cell> {
        let mut out = vec![];
        self.cells_rec(ty, String::new(), 0, &mut out);
        out
    }

    fn cells_rec(&self, ty: &CType, path: String, start: i128, out: &mut Vec<Cell>) {
        match ty {
            CType::Arith(_) | CType::Ptr(_) => out.push(Cell {
                path,
                start,
                size: self.sizeof(ty),
                ty: ty.clone(),
            }),
            CType::Record(id) => {
                for f in &self.record(*id).fields {
                    self.cells_rec(&f.ty, format!("{path}.{}", f.name), start + f.offset, out);
                }
            }
            CType::Array(elem, n) => {
                let es = self.sizeof(elem);
                for i in 0..*n {
                    self.cells_rec(
                        elem,
                        format!("{path}[{i}]"),
                        start + es * i as i128,
                        out,
                    );
                }
            }
        }
    }
}

fn round_up(v: i128, align: i128) -> i128 {
    (v + align - 1) / align * align
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: String,
    pub ty: CType,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StmtId(pub u32);

#[derive(Clone, Debug)]
pub struct Stmt {
    pub id: StmtId,
    /// Source label; unrolling suffixes `#<iteration>`.
    pub tag: String,
    pub kind: StmtKind,
}

#[derive(Clone, Debug)]
pub enum StmtKind {
    Assign(LVal, Expr),
    Assert(IntExpr),
    Assume(IntExpr),
    If(IntExpr, Vec<Stmt>, Vec<Stmt>),
    /// Counted loop `for (v = lo; v < hi; v = v + 1)`; removed by unrolling.
    For { var: VarId, lo: i128, hi: i128, body: Vec<Stmt> },
}

#[derive(Clone, Debug)]
pub enum Expr {
    Int(IntExpr),
    Addr(AddrExpr),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Clone, Debug)]
pub enum IntExpr {
    Const(i128, ArithKind),
    /// Read of an arithmetic-typed lval.
    Read(Box<LVal>, ArithKind),
    /// Seeded nondeterministic input; only legal as a whole assignment RHS.
    Nondet(ArithKind),
    Unop(UnOp, Box<IntExpr>, ArithKind),
    Binop(BinOp, Box<IntExpr>, Box<IntExpr>, ArithKind),
    /// Pointer equality / disequality; result is int32.
    PtrCmp(bool, Box<AddrExpr>, Box<AddrExpr>),
}

impl IntExpr {
    pub fn kind(&self) -> ArithKind {
        match self {
            IntExpr::Const(_, k)
            | IntExpr::Read(_, k)
            | IntExpr::Nondet(k)
            | IntExpr::Unop(_, _, k)
            | IntExpr::Binop(_, _, _, k) => *k,
            IntExpr::PtrCmp(..) => ArithKind::I32,
        }
    }
}

#[derive(Clone, Debug)]
pub enum AddrExpr {
    /// The reserved null location, carrying its pointer type (from context).
    Null(CType),
    /// Array-typed lval used as an address (decay).
    LValArr(Box<LVal>, CType),
    /// Pointer-typed lval whose stored value is the address.
    LValPtr(Box<LVal>, CType),
    AddrOf(Box<LVal>, CType),
    /// `a + ie`, scaled by the pointee size.
    Shift(Box<AddrExpr>, Box<IntExpr>),
}

impl AddrExpr {
    /// The pointer type of this address expression.
    pub fn ty(&self) -> &CType {
        match self {
            AddrExpr::Null(t) | AddrExpr::LValArr(_, t) | AddrExpr::LValPtr(_, t)
            | AddrExpr::AddrOf(_, t) => t,
            AddrExpr::Shift(a, _) => a.ty(),
        }
    }

    pub fn pointee(&self) -> &CType {
        self.ty().pointee().expect("address expressions have pointer type")
    }
}

#[derive(Clone, Debug)]
pub enum LVal {
    Var(VarId),
    Field(Box<LVal>, RecordId, u32),
    Deref(Box<AddrExpr>),
}

/// A parsed, checked, laid-out program.
#[derive(Clone, Debug)]
pub struct Program {
    pub types: Types,
    pub vars: Vec<VarDecl>,
    pub stmts: Vec<Stmt>,
}

impl Program {
    pub fn var(&self, v: VarId) -> &VarDecl {
        &self.vars[v.0 as usize]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|d| d.name == name).map(|i| VarId(i as u32))
    }

    pub fn sizeof_var(&self, v: VarId) -> i128 {
        self.types.sizeof(&self.var(v).ty)
    }

    pub fn lval_ty(&self, lv: &LVal) -> CType {
        match lv {
            LVal::Var(v) => self.var(*v).ty.clone(),
            LVal::Field(_, rec, idx) => self.types.field(*rec, *idx).ty.clone(),
            LVal::Deref(a) => a.pointee().clone(),
        }
    }

    /// Total statement count, including nested ones.
    pub fn stmt_count(&self) -> usize {
        fn walk(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match &s.kind {
                    StmtKind::If(_, t, e) => 1 + walk(t) + walk(e),
                    StmtKind::For { body, .. } => 1 + walk(body),
                    _ => 1,
                })
                .sum()
        }
        walk(&self.stmts)
    }

    /// All statements in execution order (loop bodies once).
    pub fn for_each_stmt<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
            for s in stmts {
                f(s);
                match &s.kind {
                    StmtKind::If(_, t, e) => {
                        walk(t, f);
                        walk(e, f);
                    }
                    StmtKind::For { body, .. } => walk(body, f),
                    _ => {}
                }
            }
        }
        walk(&self.stmts, f);
    }
}

// ---------------------------------------------------------------------------
// Pretty-printing. Fully parenthesized so that printing and reparsing yield
// structurally equal trees.

pub struct DisplayLVal<'a>(pub &'a Program, pub &'a LVal);
pub struct DisplayInt<'a>(pub &'a Program, pub &'a IntExpr);
pub struct DisplayAddr<'a>(pub &'a Program, pub &'a AddrExpr);

impl fmt::Display for DisplayLVal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let DisplayLVal(p, lv) = self;
        match lv {
            LVal::Var(v) => write!(f, "{}", p.var(*v).name),
            LVal::Field(base, rec, idx) => {
                write!(f, "{}.{}", DisplayLVal(p, base), p.types.field(*rec, *idx).name)
            }
            LVal::Deref(a) => write!(f, "(*{})", DisplayAddr(p, a)),
        }
    }
}

impl fmt::Display for DisplayAddr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let DisplayAddr(p, a) = self;
        match a {
            AddrExpr::Null(_) => write!(f, "null"),
            AddrExpr::LValArr(lv, _) | AddrExpr::LValPtr(lv, _) => {
                write!(f, "{}", DisplayLVal(p, lv))
            }
            AddrExpr::AddrOf(lv, _) => write!(f, "&{}", DisplayLVal(p, lv)),
            AddrExpr::Shift(a, ie) => {
                write!(f, "({} + {})", DisplayAddr(p, a), DisplayInt(p, ie))
            }
        }
    }
}

impl fmt::Display for DisplayInt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let DisplayInt(p, e) = self;
        match e {
            IntExpr::Const(k, _) => write!(f, "{k}"),
            IntExpr::Read(lv, _) => write!(f, "{}", DisplayLVal(p, lv)),
            IntExpr::Nondet(_) => write!(f, "nondet()"),
            IntExpr::Unop(op, a, _) => {
                let sym = match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "!",
                };
                write!(f, "({sym}{})", DisplayInt(p, a))
            }
            IntExpr::Binop(op, a, b, _) => {
                write!(f, "({} {} {})", DisplayInt(p, a), op.symbol(), DisplayInt(p, b))
            }
            IntExpr::PtrCmp(eq, a, b) => {
                let sym = if *eq { "==" } else { "!=" };
                write!(f, "({} {sym} {})", DisplayAddr(p, a), DisplayAddr(p, b))
            }
        }
    }
}

fn fmt_type_prefix(p: &Program, ty: &CType) -> (String, String) {
    // (base-and-stars, array-suffix)
    match ty {
        CType::Arith(k) => (k.name().to_string(), String::new()),
        CType::Ptr(t) => {
            let (b, s) = fmt_type_prefix(p, t);
            debug_assert!(s.is_empty(), "no pointers to arrays in the fragment");
            (format!("{b}*"), String::new())
        }
        CType::Record(id) => (p.types.record(*id).name.clone(), String::new()),
        CType::Array(elem, n) => {
            let (b, _) = fmt_type_prefix(p, elem);
            (b, format!("[{n}]"))
        }
    }
}

fn fmt_stmts(p: &Program, stmts: &[Stmt], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for s in stmts {
        match &s.kind {
            StmtKind::Assign(lv, e) => {
                let rhs = match e {
                    Expr::Int(ie) => DisplayInt(p, ie).to_string(),
                    Expr::Addr(a) => DisplayAddr(p, a).to_string(),
                };
                out.push_str(&format!("{pad}{} = {};\n", DisplayLVal(p, lv), rhs));
            }
            StmtKind::Assert(c) => {
                out.push_str(&format!("{pad}assert({});\n", DisplayInt(p, c)));
            }
            StmtKind::Assume(c) => {
                out.push_str(&format!("{pad}assume({});\n", DisplayInt(p, c)));
            }
            StmtKind::If(c, t, e) => {
                out.push_str(&format!("{pad}if ({}) {{\n", DisplayInt(p, c)));
                fmt_stmts(p, t, indent + 1, out);
                if e.is_empty() {
                    out.push_str(&format!("{pad}}}\n"));
                } else {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    fmt_stmts(p, e, indent + 1, out);
                    out.push_str(&format!("{pad}}}\n"));
                }
            }
            StmtKind::For { var, lo, hi, body } => {
                let v = &p.var(*var).name;
                out.push_str(&format!(
                    "{pad}for ({v} = {lo}; {v} < {hi}; {v} = {v} + 1) {{\n"
                ));
                fmt_stmts(p, body, indent + 1, out);
                out.push_str(&format!("{pad}}}\n"));
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rec in &self.types.records {
            write!(f, "typedef struct {{ ")?;
            for fd in &rec.fields {
                let (base, suffix) = fmt_type_prefix(self, &fd.ty);
                write!(f, "{base} {}{suffix}; ", fd.name)?;
            }
            writeln!(f, "}} {};", rec.name)?;
        }
        for d in &self.vars {
            let (base, suffix) = fmt_type_prefix(self, &d.ty);
            writeln!(f, "{base} {}{suffix};", d.name)?;
        }
        let mut body = String::new();
        fmt_stmts(self, &self.stmts, 0, &mut body);
        write!(f, "{body}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sort4_types() -> (Types, RecordId, RecordId, RecordId) {
        let mut t = Types::default();
        let data = t.add_record("data_t".into(), vec![("v".into(), CType::Arith(ArithKind::I32))]);
        let pos = t.add_record("pos_t".into(), vec![("p".into(), CType::Arith(ArithKind::U32))]);
        let mut fields = vec![];
        for group in ["in", "out", "pos"] {
            for i in 1..=4 {
                let ty = if group == "pos" {
                    CType::Ptr(Box::new(CType::Record(pos)))
                } else {
                    CType::Ptr(Box::new(CType::Record(data)))
                };
                fields.push((format!("{group}{i}"), ty));
            }
        }
        let intf = t.add_record("intf4_t".into(), fields);
        (t, data, pos, intf)
    }

    #[test]
    fn layout_examples() {
        let (t, data, _, intf) = sort4_types();
        assert_eq!(t.sizeof(&CType::Record(data)), 4);
        assert_eq!(t.offsetof(intf, "out1"), Some(16));
        assert_eq!(t.sizeof(&CType::Array(Box::new(CType::Record(data)), 8)), 32);
        assert_eq!(t.sizeof(&CType::Record(intf)), 48);
    }

    #[test]
    fn layout_padding() {
        let mut t = Types::default();
        // u8 then i32: field offset 4 after padding, size 8.
        let r = t.add_record(
            "m_t".into(),
            vec![
                ("a".into(), CType::Arith(ArithKind::U8)),
                ("b".into(), CType::Arith(ArithKind::I32)),
            ],
        );
        assert_eq!(t.offsetof(r, "a"), Some(0));
        assert_eq!(t.offsetof(r, "b"), Some(4));
        assert_eq!(t.record(r).size, 8);
        // offsets monotone in declaration order
        let offs: Vec<i128> = t.record(r).fields.iter().map(|f| f.offset).collect();
        assert!(offs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cells_examples() {
        let (t, data, _, intf) = sort4_types();
        let df = CType::Array(Box::new(CType::Record(data)), 8);
        let cells = t.scalar_cells(&df);
        assert_eq!(cells.len(), 8);
        let ranges: Vec<(i128, i128)> = cells.iter().map(|c| (c.start, c.start + c.size - 1)).collect();
        assert_eq!(ranges, (0..8).map(|i| (4 * i, 4 * i + 3)).collect::<Vec<_>>());
        assert_eq!(cells[0].path, "[0].v");

        let x = CType::Arith(ArithKind::I32);
        let cells = t.scalar_cells(&x);
        assert_eq!(cells.len(), 1);
        assert_eq!((cells[0].start, cells[0].size), (0, 4));
        assert_eq!(cells[0].path, "");

        let cells = t.scalar_cells(&CType::Record(intf));
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().all(|c| c.ty.is_ptr()));
        assert_eq!(cells[0].start, 0);
        assert_eq!(cells[11].start, 44);
    }

    #[test]
    fn cells_disjoint_and_cover() {
        let (t, _, _, intf) = sort4_types();
        let mut padded = Types::default();
        let m = padded.add_record(
            "m_t".into(),
            vec![
                ("a".into(), CType::Arith(ArithKind::U8)),
                ("b".into(), CType::Arith(ArithKind::I32)),
            ],
        );
        for (types, ty, padding_free) in [
            (&t, CType::Record(intf), true),
            (&t, CType::Array(Box::new(CType::Arith(ArithKind::I64)), 3), true),
            (&padded, CType::Record(m), false),
        ] {
            let size = types.sizeof(&ty);
            let cells = types.scalar_cells(&ty);
            let mut covered = vec![false; size as usize];
            for c in &cells {
                for b in c.start..c.start + c.size {
                    assert!(!covered[b as usize], "cell overlap at byte {b}");
                    covered[b as usize] = true;
                }
            }
            if padding_free {
                assert!(covered.iter().all(|&b| b), "byte not covered in {ty:?}");
            }
        }
    }

    #[test]
    fn wrap_semantics() {
        assert_eq!(ArithKind::U8.wrap(300), 44);
        assert_eq!(ArithKind::I8.wrap(130), -126);
        assert_eq!(ArithKind::I32.wrap(i128::from(i32::MAX) + 1), i128::from(i32::MIN));
        assert_eq!(ArithKind::U64.wrap(-1), u64::MAX as i128);
    }
}
