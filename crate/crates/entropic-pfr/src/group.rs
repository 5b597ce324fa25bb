//! Finite abelian groups `Z/m1 x ... x Z/mk`, their elements, subgroups,
//! cosets, homomorphisms, and exact sumset arithmetic.
//!
//! Groups are always explicit products of cyclic groups; elements are
//! reduced residue vectors. The canonical element order is lexicographic on
//! residues, which coincides with the order of the mixed-radix index used
//! internally (first residue most significant). All set-valued results are
//! sorted, so outputs are deterministic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard cap on |G|; far above anything the exact machinery can handle,
/// present only to keep index arithmetic inside u64.
const GROUP_SIZE_CAP: u64 = 1 << 40;

/// A finite abelian group presented as a product of cyclic groups.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "GroupSpecDto", into = "GroupSpecDto")]
pub struct GroupSpec {
    orders: Vec<u64>,
    size: u64,
    torsion: u64,
}

#[derive(Serialize, Deserialize, Clone)]
struct GroupSpecDto {
    orders: Vec<u64>,
}

impl TryFrom<GroupSpecDto> for GroupSpec {
    type Error = Error;
    fn try_from(dto: GroupSpecDto) -> Result<Self> {
        GroupSpec::new(dto.orders)
    }
}

impl From<GroupSpec> for GroupSpecDto {
    fn from(g: GroupSpec) -> Self {
        GroupSpecDto { orders: g.orders }
    }
}

impl std::fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.orders.is_empty() {
            return write!(f, "Z/1");
        }
        let parts: Vec<String> = self.orders.iter().map(|m| format!("Z/{m}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl GroupSpec {
    /// Builds a group from its cyclic orders. Each order must be at least 2;
    /// an empty list gives the trivial group.
    pub fn new(orders: Vec<u64>) -> Result<Self> {
        let mut size: u64 = 1;
        let mut torsion: u64 = 1;
        for &m in &orders {
            if m < 2 {
                return Err(Error::Format(format!("cyclic order {m} < 2")));
            }
            size =
                size.checked_mul(m)
                    .filter(|&s| s <= GROUP_SIZE_CAP)
                    .ok_or(Error::CapExceeded {
                        cap: "group size",
                        detail: format!("product of orders exceeds {GROUP_SIZE_CAP}"),
                    })?;
            torsion = lcm(torsion, m);
        }
        Ok(GroupSpec {
            orders,
            size,
            torsion,
        })
    }

    /// The trivial group `{0}`.
    pub fn trivial() -> Self {
        GroupSpec {
            orders: Vec::new(),
            size: 1,
            torsion: 1,
        }
    }

    /// `G^k` as an explicit product.
    pub fn power(&self, k: usize) -> Result<Self> {
        let mut orders = Vec::with_capacity(self.orders.len() * k);
        for _ in 0..k {
            orders.extend_from_slice(&self.orders);
        }
        GroupSpec::new(orders)
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// Least `m` with `m * g = 0` for all `g` (the lcm of the orders).
    pub fn torsion(&self) -> u64 {
        self.torsion
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn zero(&self) -> Element {
        Element(vec![0; self.orders.len()])
    }

    pub fn contains(&self, e: &Element) -> bool {
        e.0.len() == self.orders.len() && e.0.iter().zip(&self.orders).all(|(&r, &m)| r < m)
    }

    fn check(&self, e: &Element) -> Result<()> {
        if e.0.len() != self.orders.len() {
            return Err(Error::DimensionMismatch {
                expected: self.orders.len(),
                got: e.0.len(),
            });
        }
        if !self.contains(e) {
            return Err(Error::Format(format!(
                "element {e:?} not reduced for {self:?}"
            )));
        }
        Ok(())
    }

    // --- element arithmetic ---

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(Element(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.orders)
                .map(|((&x, &y), &m)| (x + y) % m)
                .collect(),
        ))
    }

    pub fn neg(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(Element(
            a.0.iter()
                .zip(&self.orders)
                .map(|(&x, &m)| (m - x) % m)
                .collect(),
        ))
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element> {
        let nb = self.neg(b)?;
        self.add(a, &nb)
    }

    /// Scalar action of `Z` (equivalently `Z` mod torsion) on the group.
    pub fn scalar_mul(&self, c: i64, a: &Element) -> Result<Element> {
        self.check(a)?;
        let c = c.rem_euclid(self.torsion as i64) as u64;
        Ok(Element(
            a.0.iter()
                .zip(&self.orders)
                .map(|(&x, &m)| (((c % m) as u128 * x as u128) % m as u128) as u64)
                .collect(),
        ))
    }

    // --- index encoding (big-endian mixed radix; index order = lex order) ---

    pub fn index(&self, e: &Element) -> Result<u64> {
        self.check(e)?;
        Ok(self.index_unchecked(e))
    }

    pub(crate) fn index_unchecked(&self, e: &Element) -> u64 {
        let mut idx = 0u64;
        for (&r, &m) in e.0.iter().zip(&self.orders) {
            idx = idx * m + r;
        }
        idx
    }

    pub fn element(&self, mut idx: u64) -> Element {
        debug_assert!(idx < self.size);
        let mut residues = vec![0u64; self.orders.len()];
        for i in (0..self.orders.len()).rev() {
            let m = self.orders[i];
            residues[i] = idx % m;
            idx /= m;
        }
        Element(residues)
    }

    pub(crate) fn add_idx(&self, a: u64, b: u64) -> u64 {
        let (mut a, mut b) = (a, b);
        let mut idx = 0u64;
        let mut stride = 1u64;
        // Accumulate digits from the least significant end.
        for i in (0..self.orders.len()).rev() {
            let m = self.orders[i];
            let d = (a % m + b % m) % m;
            idx += d * stride;
            stride *= m;
            a /= m;
            b /= m;
        }
        idx
    }

    pub(crate) fn neg_idx(&self, a: u64) -> u64 {
        let mut a = a;
        let mut idx = 0u64;
        let mut stride = 1u64;
        for i in (0..self.orders.len()).rev() {
            let m = self.orders[i];
            let d = (m - a % m) % m;
            idx += d * stride;
            stride *= m;
            a /= m;
        }
        idx
    }

    pub(crate) fn scalar_idx(&self, c: i64, a: u64) -> u64 {
        let c = c.rem_euclid(self.torsion as i64) as u64;
        let mut a = a;
        let mut idx = 0u64;
        let mut stride = 1u64;
        for i in (0..self.orders.len()).rev() {
            let m = self.orders[i];
            let d = ((c % m) as u128 * (a % m) as u128 % m as u128) as u64;
            idx += d * stride;
            stride *= m;
            a /= m;
        }
        idx
    }

    /// Additive order of an element.
    pub fn order_of(&self, e: &Element) -> Result<u64> {
        self.check(e)?;
        let idx = self.index_unchecked(e);
        let mut acc = idx;
        let mut n = 1u64;
        let zero = 0u64;
        while acc != zero {
            acc = self.add_idx(acc, idx);
            n += 1;
        }
        Ok(n)
    }

    /// All elements in canonical (lexicographic) order.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.size).map(|i| self.element(i))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// An element of a [`GroupSpec`], stored as a reduced residue vector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Element(pub Vec<u64>);

impl std::fmt::Debug for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(
                f,
                "({})",
                self.0
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        }
    }
}

impl Element {
    pub fn residues(&self) -> &[u64] {
        &self.0
    }
}

/// A homomorphism between finite abelian groups, given by an integer matrix
/// acting coordinate-wise modulo the target orders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LinearMapDto", into = "LinearMapDto")]
pub struct LinearMap {
    source: GroupSpec,
    target: GroupSpec,
    /// `matrix[j][i]`: coefficient of source residue `i` in target residue `j`,
    /// reduced modulo the j-th target order.
    matrix: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct LinearMapDto {
    source: GroupSpec,
    target: GroupSpec,
    matrix: Vec<Vec<u64>>,
}

impl TryFrom<LinearMapDto> for LinearMap {
    type Error = Error;
    fn try_from(dto: LinearMapDto) -> Result<Self> {
        let matrix = dto
            .matrix
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as i64).collect())
            .collect();
        LinearMap::new(dto.source, dto.target, matrix)
    }
}

impl From<LinearMap> for LinearMapDto {
    fn from(m: LinearMap) -> Self {
        LinearMapDto {
            source: m.source,
            target: m.target,
            matrix: m.matrix,
        }
    }
}

impl LinearMap {
    /// Builds a map and checks well-definedness: for each source generator of
    /// order `m_i`, the image must have order dividing `m_i`.
    pub fn new(source: GroupSpec, target: GroupSpec, matrix: Vec<Vec<i64>>) -> Result<Self> {
        if matrix.len() != target.rank() {
            return Err(Error::InvalidHomomorphism(format!(
                "matrix has {} rows, target rank is {}",
                matrix.len(),
                target.rank()
            )));
        }
        let mut reduced = Vec::with_capacity(matrix.len());
        for (j, row) in matrix.iter().enumerate() {
            if row.len() != source.rank() {
                return Err(Error::InvalidHomomorphism(format!(
                    "row {j} has {} columns, source rank is {}",
                    row.len(),
                    source.rank()
                )));
            }
            let n_j = target.orders[j];
            let mut red = Vec::with_capacity(row.len());
            for (i, &c) in row.iter().enumerate() {
                let c = c.rem_euclid(n_j as i64) as u64;
                let m_i = source.orders[i];
                if !(c as u128 * m_i as u128).is_multiple_of(n_j as u128) {
                    return Err(Error::InvalidHomomorphism(format!(
                        "coefficient {c} at ({j},{i}) not killed by source order {m_i} mod {n_j}"
                    )));
                }
                red.push(c);
            }
            reduced.push(red);
        }
        Ok(LinearMap {
            source,
            target,
            matrix: reduced,
        })
    }

    pub fn identity(g: &GroupSpec) -> Self {
        let n = g.rank();
        let mut matrix = vec![vec![0u64; n]; n];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = 1 % g.orders[i];
        }
        LinearMap {
            source: g.clone(),
            target: g.clone(),
            matrix,
        }
    }

    pub fn zero(source: &GroupSpec, target: &GroupSpec) -> Self {
        LinearMap {
            source: source.clone(),
            target: target.clone(),
            matrix: vec![vec![0u64; source.rank()]; target.rank()],
        }
    }

    /// Multiplication by the integer `c` on `g` (well-defined on any group).
    pub fn scalar(g: &GroupSpec, c: i64) -> Self {
        let n = g.rank();
        let mut matrix = vec![vec![0u64; n]; n];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = (c.rem_euclid(g.orders[i] as i64)) as u64;
        }
        LinearMap {
            source: g.clone(),
            target: g.clone(),
            matrix,
        }
    }

    /// Map `G^n -> G^m` whose j-th output is `sum_i coeffs[j][i] * x_i`,
    /// with each `x_i` a `G`-coordinate block.
    pub fn block_scalar(g: &GroupSpec, coeffs: &[Vec<i64>]) -> Result<Self> {
        let n = coeffs.first().map(|r| r.len()).unwrap_or(0);
        if coeffs.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidHomomorphism(
                "ragged block coefficients".into(),
            ));
        }
        let m = coeffs.len();
        let source = g.power(n)?;
        let target = g.power(m)?;
        let r = g.rank();
        let mut matrix = vec![vec![0i64; source.rank()]; target.rank()];
        for (jb, row) in coeffs.iter().enumerate() {
            for (ib, &c) in row.iter().enumerate() {
                for k in 0..r {
                    matrix[jb * r + k][ib * r + k] = c;
                }
            }
        }
        LinearMap::new(
            source,
            target,
            matrix
                .into_iter()
                .map(|r| r.into_iter().collect())
                .collect(),
        )
    }

    /// Composition `self . inner` (apply `inner` first).
    pub fn after(&self, inner: &LinearMap) -> Result<LinearMap> {
        if inner.target != self.source {
            return Err(Error::InvalidHomomorphism(
                "composition: inner target differs from outer source".into(),
            ));
        }
        let mut matrix = vec![vec![0i64; inner.source.rank()]; self.target.rank()];
        for (j, mrow) in matrix.iter_mut().enumerate() {
            for (i, cell) in mrow.iter_mut().enumerate() {
                let mut acc: u128 = 0;
                for k in 0..self.source.rank() {
                    acc += self.matrix[j][k] as u128 * inner.matrix[k][i] as u128;
                }
                *cell = (acc % self.target.orders[j] as u128) as i64;
            }
        }
        LinearMap::new(inner.source.clone(), self.target.clone(), matrix)
    }

    pub fn source(&self) -> &GroupSpec {
        &self.source
    }

    pub fn target(&self) -> &GroupSpec {
        &self.target
    }

    pub fn apply(&self, e: &Element) -> Result<Element> {
        self.source.check(e)?;
        let mut out = Vec::with_capacity(self.target.rank());
        for (j, row) in self.matrix.iter().enumerate() {
            let n_j = self.target.orders[j];
            let mut acc: u128 = 0;
            for (i, &c) in row.iter().enumerate() {
                acc += c as u128 * e.0[i] as u128;
            }
            out.push((acc % n_j as u128) as u64);
        }
        Ok(Element(out))
    }

    pub(crate) fn apply_idx(&self, idx: u64) -> u64 {
        let e = self.source.element(idx);
        let img = self.apply(&e).expect("index arithmetic is in range");
        self.target.index_unchecked(&img)
    }

    /// Precomputed image table over the whole source group.
    pub(crate) fn table(&self) -> Vec<u64> {
        (0..self.source.size()).map(|i| self.apply_idx(i)).collect()
    }
}

/// An enumerated subgroup: the identity-containing, closed element list.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Subgroup {
    parent: GroupSpec,
    /// Sorted, deduplicated element indices.
    elems: Vec<u64>,
}

impl std::fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Subgroup{:?}", self.elements().collect::<Vec<_>>())
    }
}

impl Subgroup {
    /// Validates closure under addition and negation, plus identity.
    pub fn new(parent: GroupSpec, elements: &[Element]) -> Result<Self> {
        let mut idx: BTreeSet<u64> = BTreeSet::new();
        for e in elements {
            idx.insert(parent.index(e)?);
        }
        let elems: Vec<u64> = idx.iter().copied().collect();
        let sub = Subgroup { parent, elems };
        sub.validate()?;
        Ok(sub)
    }

    pub(crate) fn from_indices(parent: GroupSpec, mut elems: Vec<u64>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        Subgroup { parent, elems }
    }

    pub fn validate(&self) -> Result<()> {
        let set: BTreeSet<u64> = self.elems.iter().copied().collect();
        if !set.contains(&0) {
            return Err(Error::Format("subgroup misses the identity".into()));
        }
        for &a in &self.elems {
            if !set.contains(&self.parent.neg_idx(a)) {
                return Err(Error::Format("subgroup not closed under negation".into()));
            }
            for &b in &self.elems {
                if !set.contains(&self.parent.add_idx(a, b)) {
                    return Err(Error::Format("subgroup not closed under addition".into()));
                }
            }
        }
        Ok(())
    }

    pub fn parent(&self) -> &GroupSpec {
        &self.parent
    }

    pub fn len(&self) -> u64 {
        self.elems.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.elems.iter().map(|&i| self.parent.element(i))
    }

    pub(crate) fn indices(&self) -> &[u64] {
        &self.elems
    }

    pub fn contains(&self, e: &Element) -> bool {
        match self.parent.index(e) {
            Ok(i) => self.elems.binary_search(&i).is_ok(),
            Err(_) => false,
        }
    }

    pub(crate) fn contains_idx(&self, i: u64) -> bool {
        self.elems.binary_search(&i).is_ok()
    }

    /// Is `self` a subgroup of `other` (same parent, element containment)?
    pub fn is_contained_in(&self, other: &Subgroup) -> bool {
        self.parent == other.parent && self.elems.iter().all(|i| other.contains_idx(*i))
    }

    /// Largest order among the subgroup's elements.
    pub fn exponent(&self) -> u64 {
        self.elems
            .iter()
            .map(|&i| {
                self.parent
                    .order_of(&self.parent.element(i))
                    .expect("element in range")
            })
            .max()
            .unwrap_or(1)
    }
}

/// A coset `rep + H`, with the lexicographically least member as the
/// canonical representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coset {
    subgroup: Subgroup,
    rep: Element,
}

impl Coset {
    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn representative(&self) -> &Element {
        &self.rep
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        let g = self.subgroup.parent();
        let rep_idx = g.index_unchecked(&self.rep);
        self.subgroup
            .indices()
            .iter()
            .map(move |&h| g.element(g.add_idx(rep_idx, h)))
    }
}

/// Closure of a generating set under addition and negation.
pub fn generated_subgroup(g: &GroupSpec, gens: &[Element]) -> Result<Subgroup> {
    let mut gen_idx = Vec::with_capacity(gens.len());
    for e in gens {
        gen_idx.push(g.index(e)?);
    }
    Ok(Subgroup::from_indices(g.clone(), closure(g, &gen_idx)))
}

/// Closure under addition (negation follows since the group is finite).
fn closure(g: &GroupSpec, gens: &[u64]) -> Vec<u64> {
    let mut set: BTreeSet<u64> = BTreeSet::new();
    set.insert(0);
    let mut work: Vec<u64> = vec![0];
    for &gen in gens {
        if set.insert(gen) {
            work.push(gen);
        }
    }
    while let Some(a) = work.pop() {
        let mut new = Vec::new();
        for &b in set.iter() {
            let c = g.add_idx(a, b);
            if !set.contains(&c) {
                new.push(c);
            }
        }
        for c in new {
            if set.insert(c) {
                work.push(c);
            }
        }
    }
    set.into_iter().collect()
}

/// All subgroups of `g`, each exactly once, sorted by size then element list.
///
/// Exhaustive closure search; refuses groups above `cap` since the subgroup
/// lattice explodes (for instance for vector spaces over F2).
pub fn enumerate_subgroups(g: &GroupSpec, cap: u64) -> Result<Vec<Subgroup>> {
    if g.size() > cap {
        return Err(Error::CapExceeded {
            cap: "subgroup enumeration",
            detail: format!(
                "group of size {} too large for exhaustive subgroup search (cap {cap})",
                g.size()
            ),
        });
    }
    subgroups_within(g, &(0..g.size()).collect::<Vec<_>>())
}

/// All subgroups of the subgroup given by `ground` (which must be closed).
pub(crate) fn subgroups_within(g: &GroupSpec, ground: &[u64]) -> Result<Vec<Subgroup>> {
    let mut found: BTreeSet<Vec<u64>> = BTreeSet::new();
    found.insert(vec![0]);
    let mut frontier: Vec<Vec<u64>> = vec![vec![0]];
    while let Some(h) = frontier.pop() {
        for &x in ground {
            if h.binary_search(&x).is_ok() {
                continue;
            }
            let mut gens = h.clone();
            gens.push(x);
            let closed = closure(g, &gens);
            if found.insert(closed.clone()) {
                frontier.push(closed);
            }
        }
    }
    let mut subs: Vec<Subgroup> = found
        .into_iter()
        .map(|elems| Subgroup {
            parent: g.clone(),
            elems,
        })
        .collect();
    subs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.elems.cmp(&b.elems)));
    Ok(subs)
}

/// Exact sumset `A + B` or `A - B`.
pub fn sumset(
    g: &GroupSpec,
    a: &BTreeSet<Element>,
    b: &BTreeSet<Element>,
    sign: Sign,
) -> Result<BTreeSet<Element>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("sumset of an empty set"));
    }
    let ai = index_set(g, a)?;
    let bi = index_set(g, b)?;
    Ok(sumset_idx(g, &ai, &bi, sign)
        .into_iter()
        .map(|i| g.element(i))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

pub(crate) fn index_set(g: &GroupSpec, s: &BTreeSet<Element>) -> Result<BTreeSet<u64>> {
    s.iter().map(|e| g.index(e)).collect()
}

pub(crate) fn sumset_idx(
    g: &GroupSpec,
    a: &BTreeSet<u64>,
    b: &BTreeSet<u64>,
    sign: Sign,
) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for &x in a {
        for &y in b {
            let y = match sign {
                Sign::Plus => y,
                Sign::Minus => g.neg_idx(y),
            };
            out.insert(g.add_idx(x, y));
        }
    }
    out
}

/// The `ell`-fold sumset `A + ... + A`; `dilate(A, 1) = A`.
///
/// Iterated sumsets over a finite group stabilize, so once `kA = (k+1)A`
/// the remaining folds are free.
pub fn dilate(g: &GroupSpec, a: &BTreeSet<Element>, ell: u64) -> Result<BTreeSet<Element>> {
    if a.is_empty() {
        return Err(Error::EmptyInput("dilate of an empty set"));
    }
    if ell == 0 {
        return Err(Error::Format(
            "dilate requires a positive fold count".into(),
        ));
    }
    let ai = index_set(g, a)?;
    Ok(dilate_idx(g, &ai, ell)
        .into_iter()
        .map(|i| g.element(i))
        .collect())
}

pub(crate) fn dilate_idx(g: &GroupSpec, a: &BTreeSet<u64>, ell: u64) -> BTreeSet<u64> {
    let mut acc = a.clone();
    for _ in 1..ell {
        let next = sumset_idx(g, &acc, a, Sign::Plus);
        if next == acc {
            break;
        }
        acc = next;
    }
    acc
}

/// The |G|/|H| disjoint cosets of `H`, sorted by representative.
pub fn cosets_of(g: &GroupSpec, h: &Subgroup) -> Result<Vec<Coset>> {
    if h.parent() != g {
        return Err(Error::GroupMismatch(
            "subgroup belongs to a different group".into(),
        ));
    }
    let mut seen = vec![false; g.size() as usize];
    let mut cosets = Vec::new();
    for rep in 0..g.size() {
        if seen[rep as usize] {
            continue;
        }
        for &x in h.indices() {
            seen[g.add_idx(rep, x) as usize] = true;
        }
        // rep is the least unvisited index, hence lexicographically least in
        // its coset.
        cosets.push(Coset {
            subgroup: h.clone(),
            rep: g.element(rep),
        });
    }
    Ok(cosets)
}
