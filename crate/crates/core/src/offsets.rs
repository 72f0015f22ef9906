//! Abstract integer sets: `top`, interval-with-congruence, or small explicit set.
//!
//! The domain abstracts both byte offsets inside symbolic blocks and integer
//! program values. Explicit sets are kept up to a cardinality bound `ilvl`;
//! above it they degenerate into the tightest interval-with-congruence
//! (bounds envelope, modulus = gcd of pairwise differences).

use std::fmt;
use std::str::FromStr;

/// Default small-set bound, overridable from the CLI.
pub const DEFAULT_ILVL: u32 = 8;

/// An abstract set of integers in canonical form.
///
/// Canonical means: sets are sorted, duplicate-free, nonempty and no larger
/// than the `ilvl` they were built with; interval bounds are tightened onto
/// the congruence class; finite intervals with few enough members are
/// represented as sets; the all-integers interval is represented as `Top`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum AbsOffsets {
    Top,
    /// `{ k in [lo, hi] | k mod n = r }`; `None` bounds are -inf / +inf.
    Interval {
        lo: Option<i128>,
        hi: Option<i128>,
        r: i128,
        n: i128,
    },
    Set(Vec<i128>),
}

use AbsOffsets::*;

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Interval view used when combining values: `(lo, hi, r, n)` with `n = 0`
/// encoding a singleton (gcd identity).
#[derive(Clone, Copy)]
struct Iv {
    lo: Option<i128>,
    hi: Option<i128>,
    r: i128,
    n: i128,
}

impl AbsOffsets {
    pub fn singleton(k: i128) -> Self {
        Set(vec![k])
    }

    /// Builds from an arbitrary finite set, applying the `ilvl` rule.
    pub fn from_set(mut elems: Vec<i128>, ilvl: u32) -> Self {
        assert!(!elems.is_empty(), "abstract offset sets are never empty");
        elems.sort_unstable();
        elems.dedup();
        if elems.len() <= ilvl.max(1) as usize {
            return Set(elems);
        }
        let lo = elems[0];
        let hi = *elems.last().unwrap();
        let mut n = 0;
        for w in elems.windows(2) {
            n = gcd(n, w[1] - w[0]);
        }
        normalize(Some(lo), Some(hi), lo.rem_euclid(n), n, ilvl)
            .expect("nonempty by construction")
    }

    pub fn full_range(lo: i128, hi: i128) -> Self {
        Interval { lo: Some(lo), hi: Some(hi), r: 0, n: 1 }
    }

    fn iv(&self) -> Iv {
        match self {
            Top => Iv { lo: None, hi: None, r: 0, n: 1 },
            Interval { lo, hi, r, n } => Iv { lo: *lo, hi: *hi, r: *r, n: *n },
            Set(s) => {
                let lo = s[0];
                let hi = *s.last().unwrap();
                let mut n = 0;
                for w in s.windows(2) {
                    n = gcd(n, w[1] - w[0]);
                }
                let r = if n == 0 { lo } else { lo.rem_euclid(n) };
                Iv { lo: Some(lo), hi: Some(hi), r, n }
            }
        }
    }

    /// `k in gamma(self)`.
    pub fn contains(&self, k: i128) -> bool {
        match self {
            Top => true,
            Set(s) => s.binary_search(&k).is_ok(),
            Interval { lo, hi, r, n } => {
                lo.map_or(true, |l| k >= l)
                    && hi.map_or(true, |h| k <= h)
                    && k.rem_euclid(*n) == *r
            }
        }
    }

    /// The unique member, when there is exactly one.
    pub fn is_singleton(&self) -> Option<i128> {
        match self {
            Set(s) if s.len() == 1 => Some(s[0]),
            Interval { lo: Some(l), hi: Some(h), .. } if l == h => Some(*l),
            _ => None,
        }
    }

    /// Enumerates `gamma(self)` clipped to `[lo, hi]`.
    pub fn gamma_bounded(&self, lo: i128, hi: i128) -> Vec<i128> {
        match self {
            Top => (lo..=hi).collect(),
            Set(s) => s.iter().copied().filter(|&k| k >= lo && k <= hi).collect(),
            Interval { lo: ilo, hi: ihi, r, n } => {
                let start = ilo.map_or(lo, |l| l.max(lo));
                let end = ihi.map_or(hi, |h| h.min(hi));
                if start > end {
                    return vec![];
                }
                let first = start + (r - start).rem_euclid(*n);
                let mut out = vec![];
                let mut k = first;
                while k <= end {
                    out.push(k);
                    k += n;
                }
                out
            }
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Top)
    }

    /// Whether every member lies in `[lo, hi]`.
    pub fn within(&self, lo: i128, hi: i128) -> bool {
        match self.iv() {
            Iv { lo: Some(l), hi: Some(h), .. } => l >= lo && h <= hi,
            _ => false,
        }
    }

    /// `gamma(self)` is a subset of `gamma(other)`.
    pub fn subset_of(&self, other: &AbsOffsets) -> bool {
        match (self, other) {
            (_, Top) => true,
            (Top, _) => false,
            (Set(s), _) => s.iter().all(|&k| other.contains(k)),
            (Interval { lo, hi, r: _, n }, Set(s)) => match (lo, hi) {
                (Some(l), Some(h)) => {
                    let count = (h - l) / n + 1;
                    count <= s.len() as i128
                        && (0..count).all(|i| other.contains(l + i * n))
                }
                _ => false,
            },
            (Interval { lo, hi, r, n }, Interval { lo: olo, hi: ohi, r: or, n: on }) => {
                n % on == 0
                    && r.rem_euclid(*on) == *or
                    && match (lo, olo) {
                        (None, Some(_)) => false,
                        (Some(l), Some(ol)) => l >= ol,
                        _ => true,
                    }
                    && match (hi, ohi) {
                        (None, Some(_)) => false,
                        (Some(h), Some(oh)) => h <= oh,
                        _ => true,
                    }
            }
        }
    }
}

/// Canonicalizes an interval; `None` when empty.
fn normalize(lo: Option<i128>, hi: Option<i128>, r: i128, n: i128, ilvl: u32) -> Option<AbsOffsets> {
    if n == 0 {
        return Some(AbsOffsets::singleton(r));
    }
    let n = n.abs();
    let r = r.rem_euclid(n);
    let lo = lo.map(|l| l + (r - l).rem_euclid(n));
    let hi = hi.map(|h| h - (h - r).rem_euclid(n));
    match (lo, hi) {
        (Some(l), Some(h)) => {
            if l > h {
                return None;
            }
            let count = (h - l) / n + 1;
            if count <= ilvl.max(1) as i128 {
                return Some(Set((0..count).map(|i| l + i * n).collect()));
            }
            Some(Interval { lo: Some(l), hi: Some(h), r, n })
        }
        (None, None) if n == 1 => Some(Top),
        _ => Some(Interval { lo, hi, r, n }),
    }
}

fn combine_congruence(a: Iv, b: Iv) -> i128 {
    gcd(gcd(a.n, b.n), a.r - b.r)
}

/// Least upper bound under the `ilvl` rule: small unions stay explicit,
/// larger ones degenerate into a congruence interval.
pub fn join(x: &AbsOffsets, y: &AbsOffsets, ilvl: u32) -> AbsOffsets {
    if y.subset_of(x) {
        return x.clone();
    }
    if x.subset_of(y) {
        return y.clone();
    }
    match (x, y) {
        (Top, _) | (_, Top) => Top,
        (Set(a), Set(b)) => {
            let mut u = a.clone();
            u.extend_from_slice(b);
            AbsOffsets::from_set(u, ilvl)
        }
        _ => {
            let (a, b) = (x.iv(), y.iv());
            let n = combine_congruence(a, b);
            let lo = match (a.lo, b.lo) {
                (Some(l1), Some(l2)) => Some(l1.min(l2)),
                _ => None,
            };
            let hi = match (a.hi, b.hi) {
                (Some(h1), Some(h2)) => Some(h1.max(h2)),
                _ => None,
            };
            let r = if n == 0 { a.r } else { a.r.rem_euclid(n) };
            normalize(lo, hi, r, n, ilvl).expect("join of nonempty is nonempty")
        }
    }
}

/// Abstract addition (`+#`).
pub fn add(x: &AbsOffsets, y: &AbsOffsets, ilvl: u32) -> AbsOffsets {
    match (x, y) {
        (Top, _) | (_, Top) => Top,
        (Set(a), Set(b)) => {
            let mut sums = Vec::with_capacity(a.len() * b.len());
            for &p in a {
                for &q in b {
                    match p.checked_add(q) {
                        Some(s) => sums.push(s),
                        None => return Top,
                    }
                }
            }
            AbsOffsets::from_set(sums, ilvl)
        }
        (Set(s), i) | (i, Set(s)) => {
            // Adding each explicit element keeps constant shifts exact.
            let mut acc: Option<AbsOffsets> = None;
            for &k in s {
                let shifted = add_const(i, k, ilvl);
                acc = Some(match acc {
                    None => shifted,
                    Some(a) => join(&a, &shifted, ilvl),
                });
            }
            acc.unwrap()
        }
        _ => {
            let (a, b) = (x.iv(), y.iv());
            let n = gcd(a.n, b.n);
            let lo = match (a.lo, b.lo) {
                (Some(l1), Some(l2)) => Some(l1 + l2),
                _ => None,
            };
            let hi = match (a.hi, b.hi) {
                (Some(h1), Some(h2)) => Some(h1 + h2),
                _ => None,
            };
            normalize(lo, hi, a.r + b.r, n, ilvl).expect("sum of nonempty is nonempty")
        }
    }
}

fn add_const(x: &AbsOffsets, k: i128, ilvl: u32) -> AbsOffsets {
    match x {
        Top => Top,
        Set(s) => Set(s.iter().map(|&v| v + k).collect()),
        Interval { lo, hi, r, n } => {
            normalize(lo.map(|l| l + k), hi.map(|h| h + k), r + k, *n, ilvl).unwrap()
        }
    }
}

pub fn neg(x: &AbsOffsets, ilvl: u32) -> AbsOffsets {
    match x {
        Top => Top,
        Set(s) => {
            let mut out: Vec<i128> = s.iter().map(|&v| -v).collect();
            out.reverse();
            Set(out)
        }
        Interval { lo, hi, r, n } => {
            normalize(hi.map(|h| -h), lo.map(|l| -l), -r, *n, ilvl).unwrap()
        }
    }
}

pub fn sub(x: &AbsOffsets, y: &AbsOffsets, ilvl: u32) -> AbsOffsets {
    add(x, &neg(y, ilvl), ilvl)
}

pub fn mul_const(x: &AbsOffsets, c: i128, ilvl: u32) -> AbsOffsets {
    if c == 0 {
        return AbsOffsets::singleton(0);
    }
    match x {
        Top => Top,
        Set(s) => {
            let mut out = Vec::with_capacity(s.len());
            for &v in s {
                match v.checked_mul(c) {
                    Some(p) => out.push(p),
                    None => return Top,
                }
            }
            AbsOffsets::from_set(out, ilvl)
        }
        Interval { lo, hi, r, n } => {
            let (lo, hi) = (lo.map(|l| l * c), hi.map(|h| h * c));
            let (lo, hi) = if c > 0 { (lo, hi) } else { (hi, lo) };
            normalize(lo, hi, r * c, n * c.abs(), ilvl).unwrap()
        }
    }
}

pub fn mul(x: &AbsOffsets, y: &AbsOffsets, ilvl: u32) -> AbsOffsets {
    if let Some(c) = y.is_singleton() {
        return mul_const(x, c, ilvl);
    }
    if let Some(c) = x.is_singleton() {
        return mul_const(y, c, ilvl);
    }
    match (x, y) {
        (Set(a), Set(b)) => {
            let mut prods = Vec::with_capacity(a.len() * b.len());
            for &p in a {
                for &q in b {
                    match p.checked_mul(q) {
                        Some(v) => prods.push(v),
                        None => return Top,
                    }
                }
            }
            AbsOffsets::from_set(prods, ilvl)
        }
        _ => Top,
    }
}

/// Widening: the first step on an explicit set establishes an interval with
/// congruence; after that an unstable bound escapes to infinity while the
/// opposite bound is finite, and any further instability (a second escaping
/// bound, or a broken congruence) goes straight to `top`. Chains therefore
/// stabilize within three strict growths from any start.
pub fn widen(x: &AbsOffsets, y: &AbsOffsets) -> AbsOffsets {
    if y.subset_of(x) {
        return x.clone();
    }
    if matches!(x, Top) || matches!(y, Top) {
        return Top;
    }
    let (a, b) = (x.iv(), y.iv());
    let n = combine_congruence(a, b);
    let jlo = match (a.lo, b.lo) {
        (Some(l1), Some(l2)) => Some(l1.min(l2)),
        _ => None,
    };
    let jhi = match (a.hi, b.hi) {
        (Some(h1), Some(h2)) => Some(h1.max(h2)),
        _ => None,
    };
    let lo = match (a.lo, jlo) {
        (Some(xl), Some(jl)) if jl >= xl => Some(jl),
        _ => None,
    };
    let hi = match (a.hi, jhi) {
        (Some(xh), Some(jh)) if jh <= xh => Some(jh),
        _ => None,
    };
    if matches!(x, Set(_)) {
        let r = if n == 0 { a.r } else { a.r.rem_euclid(n) };
        return normalize(lo, hi, r, n, 1).expect("widening of nonempty is nonempty");
    }
    if n != a.n {
        return Top;
    }
    let lo_escaped = lo.is_none() && a.lo.is_some();
    let hi_escaped = hi.is_none() && a.hi.is_some();
    let escapes = lo_escaped as u8 + hi_escaped as u8;
    let other_finite = (lo_escaped && a.hi.is_some()) || (hi_escaped && a.lo.is_some());
    if escapes > 1 || (escapes == 1 && !other_finite) {
        return Top;
    }
    normalize(lo, hi, a.r, n, 1).expect("widening of nonempty is nonempty")
}

/// Wraps values into `[lo, hi]` (a power-of-two sized machine-integer range):
/// exact on explicit sets, collapses to the full range otherwise.
pub fn wrap_range(x: &AbsOffsets, lo: i128, hi: i128, ilvl: u32) -> AbsOffsets {
    let width = hi - lo + 1;
    if x.within(lo, hi) {
        return x.clone();
    }
    match x {
        Set(s) => {
            AbsOffsets::from_set(s.iter().map(|&v| (v - lo).rem_euclid(width) + lo).collect(), ilvl)
        }
        _ => AbsOffsets::full_range(lo, hi),
    }
}

impl fmt::Display for AbsOffsets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Top => write!(f, "top"),
            Set(s) => {
                write!(f, "{{")?;
                for (i, k) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}")?;
                }
                write!(f, "}}")
            }
            Interval { lo, hi, r, n } => {
                match lo {
                    Some(l) => write!(f, "[{l}..")?,
                    None => write!(f, "[-inf..")?,
                }
                match hi {
                    Some(h) => write!(f, "{h}]")?,
                    None => write!(f, "+inf]")?,
                }
                write!(f, " {r}%{n}")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("malformed abstract offset set: {0}")]
pub struct ParseOffsetsError(String);

impl FromStr for AbsOffsets {
    type Err = ParseOffsetsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ParseOffsetsError(s.to_string());
        if s == "top" {
            return Ok(Top);
        }
        if let Some(body) = s.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
            let elems: Result<Vec<i128>, _> =
                body.split(',').map(|t| t.trim().parse::<i128>()).collect();
            let elems = elems.map_err(|_| bad())?;
            if elems.is_empty() {
                return Err(bad());
            }
            return Ok(Set(elems));
        }
        if let Some(rest) = s.strip_prefix('[') {
            let (range, tail) = rest.split_once(']').ok_or_else(bad)?;
            let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
            let lo = match lo.trim() {
                "-inf" => None,
                t => Some(t.parse::<i128>().map_err(|_| bad())?),
            };
            let hi = match hi.trim() {
                "+inf" => None,
                t => Some(t.parse::<i128>().map_err(|_| bad())?),
            };
            let (r, n) = tail.trim().split_once('%').ok_or_else(bad)?;
            let r = r.trim().parse::<i128>().map_err(|_| bad())?;
            let n = n.trim().parse::<i128>().map_err(|_| bad())?;
            if n < 1 {
                return Err(bad());
            }
            return Ok(Interval { lo, hi, r, n });
        }
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oset(s: &str) -> AbsOffsets {
        s.parse().unwrap()
    }

    /// Enumeration oracle: gamma within a window, straight from the definition.
    fn gamma_oracle(x: &AbsOffsets, lo: i128, hi: i128) -> Vec<i128> {
        (lo..=hi).filter(|&k| x.contains(k)).collect()
    }

    #[test]
    fn gamma_bounded_examples() {
        assert_eq!(
            oset("[16..28] 0%4").gamma_bounded(0, 47),
            vec![16, 20, 24, 28]
        );
        assert_eq!(oset("{0}").gamma_bounded(-10, 10), vec![0]);
        assert_eq!(AbsOffsets::Top.gamma_bounded(0, 7), (0..=7).collect::<Vec<_>>());
    }

    #[test]
    fn join_examples() {
        let j = join(&oset("{4}"), &oset("{8}"), 4);
        assert_eq!(j, oset("{4,8}"));

        let j = join(&oset("{0,4,8,12}"), &oset("{16}"), 4);
        assert_eq!(j.to_string(), "[0..16] 0%4");
        // Brute-force soundness of the degenerated result.
        for k in [0, 4, 8, 12, 16] {
            assert!(j.contains(k));
        }

        let j = join(&oset("[0..8] 0%4"), &oset("[2..10] 0%2"), 2);
        assert_eq!(j.to_string(), "[0..10] 0%2");
        let want: Vec<i128> = (0..=10).filter(|k| k % 2 == 0).collect();
        assert_eq!(j.gamma_bounded(0, 10), want);
    }

    #[test]
    fn add_examples() {
        let a = add(&oset("{0}"), &oset("{16,20,24,28}"), 8);
        assert_eq!(a, oset("{16,20,24,28}"));

        let a = add(&oset("[0..12] 0%4"), &oset("{4}"), 2);
        assert_eq!(a.to_string(), "[4..16] 0%4");
        // Enumeration equality at desk scale.
        assert_eq!(a.gamma_bounded(-100, 100), vec![4, 8, 12, 16]);

        assert_eq!(add(&Top, &oset("{1}"), 8), Top);
    }

    #[test]
    fn widen_examples() {
        let w = widen(&oset("{4}"), &oset("{4,8}"));
        assert_eq!(w.to_string(), "[4..+inf] 0%4");

        let x = oset("{3,5,9}");
        assert_eq!(widen(&x, &x), x);

        let w = widen(&oset("[0..4] 0%4"), &oset("[0..8] 0%4"));
        assert_eq!(w.to_string(), "[0..+inf] 0%4");
    }

    #[test]
    fn contains_examples() {
        assert!(oset("[16..28] 0%4").contains(20));
        assert!(!oset("[16..28] 0%4").contains(18));
        assert_eq!(oset("{0}").is_singleton(), Some(0));
        assert_eq!(oset("{0,1}").is_singleton(), None);
    }

    #[test]
    fn wrap_range_behaviour() {
        // u8 wrap: exact on small sets.
        assert_eq!(wrap_range(&oset("{300}"), 0, 255, 8), oset("{44}"));
        assert_eq!(wrap_range(&oset("{5,10}"), 0, 255, 8), oset("{5,10}"));
        // i8 wrap of an interval that does not fit collapses to the range.
        let w = wrap_range(&oset("[0..300] 0%1"), -128, 127, 8);
        assert_eq!(w, AbsOffsets::full_range(-128, 127));
    }

    #[test]
    fn display_parse_roundtrip_fixed() {
        for s in ["top", "{4,8,12}", "[0..16] 0%4", "[4..+inf] 0%4", "[-inf..-3] 1%2"] {
            assert_eq!(oset(s).to_string(), s);
        }
    }

    #[test]
    fn normalization_canonicalizes() {
        // A finite interval with few members becomes a set.
        let j = join(&oset("{0}"), &oset("{8}"), 8);
        assert_eq!(j, oset("{0,8}"));
        // Bounds tighten onto the congruence class.
        let x: AbsOffsets = normalize(Some(1), Some(19), 0, 4, 2).unwrap();
        assert_eq!(x.to_string(), "[4..16] 0%4");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_small() -> impl Strategy<Value = AbsOffsets> {
            prop_oneof![
                // explicit sets within [-64, 64]
                proptest::collection::btree_set(-64i128..=64, 1..6)
                    .prop_map(|s| AbsOffsets::from_set(s.into_iter().collect(), 8)),
                // finite intervals with congruence
                (-64i128..=0, 0i128..=64, 1i128..=8, 0i128..=7).prop_filter_map(
                    "nonempty",
                    |(lo, hi, n, r)| normalize(Some(lo), Some(hi), r % n, n, 3),
                ),
            ]
        }

        fn arb_any() -> impl Strategy<Value = AbsOffsets> {
            prop_oneof![
                arb_small(),
                Just(AbsOffsets::Top),
                (1i128..=8, 0i128..=7, -32i128..=32).prop_filter_map(
                    "wf",
                    |(n, r, lo)| normalize(Some(lo), None, r % n, n, 1)
                ),
            ]
        }

        proptest! {
            #[test]
            fn join_is_upper_bound(x in arb_any(), y in arb_any()) {
                for ilvl in [1u32, 4, 8] {
                    let j = join(&x, &y, ilvl);
                    for k in gamma_oracle(&x, -80, 80) {
                        prop_assert!(j.contains(k));
                    }
                    for k in gamma_oracle(&y, -80, 80) {
                        prop_assert!(j.contains(k));
                    }
                    // commutativity on gamma
                    let j2 = join(&y, &x, ilvl);
                    prop_assert_eq!(j.gamma_bounded(-200, 200), j2.gamma_bounded(-200, 200));
                    // idempotence
                    prop_assert_eq!(join(&x, &x, ilvl).gamma_bounded(-200, 200),
                                    x.gamma_bounded(-200, 200));
                }
            }

            #[test]
            fn add_sub_mul_sound(x in arb_small(), y in arb_small()) {
                for ilvl in [1u32, 4, 8] {
                    let s = add(&x, &y, ilvl);
                    let d = sub(&x, &y, ilvl);
                    let m = mul(&x, &y, ilvl);
                    for a in gamma_oracle(&x, -64, 64) {
                        for b in gamma_oracle(&y, -64, 64) {
                            prop_assert!(s.contains(a + b), "add {x} {y} missing {}", a + b);
                            prop_assert!(d.contains(a - b), "sub {x} {y} missing {}", a - b);
                            prop_assert!(m.contains(a * b), "mul {x} {y} missing {}", a * b);
                        }
                    }
                }
            }

            #[test]
            fn smallset_ops_exact_while_fitting(
                a in proptest::collection::btree_set(-30i128..=30, 1..4),
                b in proptest::collection::btree_set(-30i128..=30, 1..4),
            ) {
                let ilvl = 16u32;
                let x = AbsOffsets::from_set(a.iter().copied().collect(), ilvl);
                let y = AbsOffsets::from_set(b.iter().copied().collect(), ilvl);
                // unions/sums of fewer than ilvl elements: gamma equality, not
                // just inclusion
                let j = join(&x, &y, ilvl);
                let mut union: Vec<i128> = a.union(&b).copied().collect();
                union.sort_unstable();
                prop_assert_eq!(j.gamma_bounded(-200, 200), union);

                let s = add(&x, &y, ilvl);
                let mut sums: Vec<i128> =
                    a.iter().flat_map(|p| b.iter().map(move |q| p + q)).collect();
                sums.sort_unstable();
                sums.dedup();
                if sums.len() <= ilvl as usize {
                    prop_assert_eq!(s.gamma_bounded(-200, 200), sums);
                }
            }

            #[test]
            fn widen_terminates_within_three_steps(
                start in arb_small(),
                feeds in proptest::collection::vec(arb_small(), 10),
            ) {
                let mut cur = start;
                let mut strict_growth = 0;
                for f in &feeds {
                    let next = widen(&cur, &join(&cur, f, 8));
                    if next != cur {
                        strict_growth += 1;
                        cur = next;
                    }
                }
                prop_assert!(strict_growth <= 3, "chain grew {strict_growth} times");
                // stability at the fixpoint
                prop_assert_eq!(widen(&cur, &cur.clone()), cur);
            }

            #[test]
            fn parse_print_identity(x in arb_any()) {
                let printed = x.to_string();
                let back: AbsOffsets = printed.parse().unwrap();
                prop_assert_eq!(back.gamma_bounded(-200, 200), x.gamma_bounded(-200, 200));
                prop_assert_eq!(back.to_string(), printed);
            }

            #[test]
            fn widen_is_upper_bound(x in arb_small(), y in arb_small()) {
                let w = widen(&x, &join(&x, &y, 8));
                for k in gamma_oracle(&x, -64, 64) {
                    prop_assert!(w.contains(k));
                }
                for k in gamma_oracle(&y, -64, 64) {
                    prop_assert!(w.contains(k));
                }
            }
        }
    }
}
