//! Exact-rational probability distributions over group elements.
//!
//! A law stores strictly positive atom numerators over a common denominator,
//! always reduced to lowest terms, so convolution, pushforward and
//! conditioning are lossless. Joint laws of linear images of independent
//! variables are built by sequential lifted convolution: the state space is
//! the target product group, never the product sample space.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::group::{GroupSpec, LinearMap, Sign};
use crate::numeric::{fraction_string, parse_fraction};
use crate::{Element, Error, Result, DEFAULT_ATOM_CAP};

/// Mixed-radix key arithmetic for a product of groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Space {
    /// Flattened cyclic orders across all coordinates.
    radix: Vec<u64>,
    /// Digit range of each coordinate within `radix`.
    coord_ranges: Vec<(usize, usize)>,
    size: u64,
}

impl Space {
    pub fn new(coords: &[GroupSpec], cap: u64) -> Result<Self> {
        let mut radix = Vec::new();
        let mut coord_ranges = Vec::new();
        let mut size: u64 = 1;
        for g in coords {
            let start = radix.len();
            radix.extend_from_slice(g.orders());
            coord_ranges.push((start, g.orders().len()));
            size = size.checked_mul(g.size()).ok_or(Error::CapExceeded {
                cap: "atom",
                detail: "product state space overflows u64".into(),
            })?;
        }
        if size > cap {
            return Err(Error::CapExceeded {
                cap: "atom",
                detail: format!("product state space has {size} atoms, cap {cap}"),
            });
        }
        Ok(Space {
            radix,
            coord_ranges,
            size,
        })
    }

    fn digits(&self, mut key: u64) -> Vec<u64> {
        let mut out = vec![0u64; self.radix.len()];
        for i in (0..self.radix.len()).rev() {
            out[i] = key % self.radix[i];
            key /= self.radix[i];
        }
        out
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let (mut a, mut b) = (a, b);
        let mut key = 0u64;
        let mut stride = 1u64;
        for i in (0..self.radix.len()).rev() {
            let m = self.radix[i];
            key += (a % m + b % m) % m * stride;
            stride *= m;
            a /= m;
            b /= m;
        }
        key
    }

    /// Key of coordinate `c` inside its own group's index space.
    pub fn coord_key(&self, key: u64, c: usize) -> u64 {
        let digits = self.digits(key);
        let (start, len) = self.coord_ranges[c];
        let mut k = 0u64;
        for (&m, &d) in self.radix[start..start + len]
            .iter()
            .zip(&digits[start..start + len])
        {
            k = k * m + d;
        }
        k
    }

    /// Key of an ordered subset of coordinates in the corresponding subspace.
    pub fn subset_key(&self, key: u64, coords: &[usize]) -> u64 {
        let digits = self.digits(key);
        let mut k = 0u64;
        for &c in coords {
            let (start, len) = self.coord_ranges[c];
            for (&m, &d) in self.radix[start..start + len]
                .iter()
                .zip(&digits[start..start + len])
            {
                k = k * m + d;
            }
        }
        k
    }

    /// Assembles a space key from per-coordinate keys.
    pub fn assemble(&self, coord_keys: &[u64]) -> u64 {
        debug_assert_eq!(coord_keys.len(), self.coord_ranges.len());
        let mut key = 0u64;
        for (c, &(start, len)) in self.coord_ranges.iter().enumerate() {
            let mut ck = coord_keys[c];
            let mut part = 0u64;
            let mut stride = 1u64;
            for i in (start..start + len).rev() {
                part += ck % self.radix[i] * stride;
                stride *= self.radix[i];
                ck /= self.radix[i];
            }
            key = key * stride + part;
        }
        key
    }
}

fn reduce(den: &mut BigUint, atoms: &mut BTreeMap<u64, BigUint>) {
    let mut g = den.clone();
    for n in atoms.values() {
        if g.is_one() {
            return;
        }
        g = g.gcd(n);
    }
    if !g.is_one() && !g.is_zero() {
        *den /= &g;
        for n in atoms.values_mut() {
            *n /= &g;
        }
    }
}

fn check_normalized(den: &BigUint, atoms: &BTreeMap<u64, BigUint>) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::EmptyInput("distribution with empty support"));
    }
    let mut sum = BigUint::zero();
    for n in atoms.values() {
        if n.is_zero() {
            return Err(Error::Format("zero-probability atom stored".into()));
        }
        sum += n;
    }
    if &sum != den {
        return Err(Error::Format("probabilities do not sum to one".into()));
    }
    Ok(())
}

/// An exact-rational probability mass function over a group.
#[derive(Clone, PartialEq, Eq)]
pub struct Dist {
    group: GroupSpec,
    den: BigUint,
    /// Atom numerators keyed by element index; all strictly positive.
    atoms: BTreeMap<u64, BigUint>,
}

impl std::fmt::Debug for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dist{{")?;
        for (i, (k, n)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "{:?}: {}",
                self.group.element(*k),
                fraction_string(n, &self.den)
            )?;
        }
        write!(f, "}}")
    }
}

impl Dist {
    pub(crate) fn from_raw(
        group: GroupSpec,
        mut den: BigUint,
        mut atoms: BTreeMap<u64, BigUint>,
    ) -> Result<Self> {
        atoms.retain(|_, n| !n.is_zero());
        reduce(&mut den, &mut atoms);
        check_normalized(&den, &atoms)?;
        Ok(Dist { group, den, atoms })
    }

    /// Uniform distribution on a nonempty set.
    pub fn uniform_on(group: &GroupSpec, support: &BTreeSet<Element>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyInput("uniform distribution on the empty set"));
        }
        let mut atoms = BTreeMap::new();
        for e in support {
            atoms.insert(group.index(e)?, BigUint::one());
        }
        Dist::from_raw(group.clone(), BigUint::from(atoms.len() as u64), atoms)
    }

    /// Uniform distribution given by element indices.
    pub fn uniform_on_indices(group: &GroupSpec, support: &[u64]) -> Result<Self> {
        let set: BTreeSet<Element> = support.iter().map(|&i| group.element(i)).collect();
        Dist::uniform_on(group, &set)
    }

    /// Uniform distribution on a whole subgroup.
    pub fn uniform_on_subgroup(h: &crate::Subgroup) -> Self {
        let atoms = h.indices().iter().map(|&i| (i, BigUint::one())).collect();
        Dist {
            group: h.parent().clone(),
            den: BigUint::from(h.len()),
            atoms,
        }
    }

    pub fn point_mass(group: &GroupSpec, x: &Element) -> Result<Self> {
        let mut atoms = BTreeMap::new();
        atoms.insert(group.index(x)?, BigUint::one());
        Ok(Dist {
            group: group.clone(),
            den: BigUint::one(),
            atoms,
        })
    }

    /// Constructor from exact weights, which are divided by their sum.
    pub fn from_weights(group: &GroupSpec, weights: &[(Element, u64)]) -> Result<Self> {
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        let mut total = 0u64;
        for (e, w) in weights {
            if *w == 0 {
                continue;
            }
            total += *w;
            *atoms.entry(group.index(e)?).or_default() += BigUint::from(*w);
        }
        Dist::from_raw(group.clone(), BigUint::from(total), atoms)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn support(&self) -> impl Iterator<Item = Element> + '_ {
        self.atoms.keys().map(|&k| self.group.element(k))
    }

    /// Exact probability of an element as a reduced `(numerator, denominator)`.
    pub fn prob(&self, x: &Element) -> Result<(BigUint, BigUint)> {
        let k = self.group.index(x)?;
        Ok(match self.atoms.get(&k) {
            Some(n) => {
                let g = n.gcd(&self.den);
                (n / &g, &self.den / &g)
            }
            None => (BigUint::zero(), BigUint::one()),
        })
    }

    pub(crate) fn raw(&self) -> (&BigUint, &BTreeMap<u64, BigUint>) {
        (&self.den, &self.atoms)
    }

    /// Atom probabilities as `f64`, sorted by element index.
    pub(crate) fn to_f64(&self) -> Vec<(u64, f64)> {
        self.atoms
            .iter()
            .map(|(&k, n)| (k, crate::numeric::ratio_f64(n, &self.den)))
            .collect()
    }

    /// Law of independent `X + Y` or `X - Y`.
    pub fn convolve(&self, other: &Dist, sign: Sign) -> Result<Dist> {
        if self.group != other.group {
            return Err(Error::GroupMismatch(
                "convolution of laws on different groups".into(),
            ));
        }
        let g = &self.group;
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&a, na) in &self.atoms {
            for (&b, nb) in &other.atoms {
                let b = match sign {
                    Sign::Plus => b,
                    Sign::Minus => g.neg_idx(b),
                };
                *atoms.entry(g.add_idx(a, b)).or_default() += na * nb;
            }
        }
        Dist::from_raw(g.clone(), &self.den * &other.den, atoms)
    }

    /// Law of `L(X)`.
    pub fn pushforward(&self, map: &LinearMap) -> Result<Dist> {
        if map.source() != &self.group {
            return Err(Error::GroupMismatch(
                "pushforward along a map with a different source".into(),
            ));
        }
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &self.atoms {
            *atoms.entry(map.apply_idx(k)).or_default() += n;
        }
        Dist::from_raw(map.target().clone(), self.den.clone(), atoms)
    }

    /// Law of `-X`.
    pub fn neg(&self) -> Dist {
        let atoms = self
            .atoms
            .iter()
            .map(|(&k, n)| (self.group.neg_idx(k), n.clone()))
            .collect();
        Dist {
            group: self.group.clone(),
            den: self.den.clone(),
            atoms,
        }
    }

    /// Law of `c * X`.
    pub fn dilate(&self, c: i64) -> Dist {
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &self.atoms {
            *atoms.entry(self.group.scalar_idx(c, k)).or_default() += n;
        }
        let mut den = self.den.clone();
        reduce(&mut den, &mut atoms);
        Dist {
            group: self.group.clone(),
            den,
            atoms,
        }
    }

    /// `n`-fold convolution of the law with itself; `n = 0` is the identity
    /// point mass.
    pub fn convolution_power(&self, n: u64) -> Result<Dist> {
        let mut acc = Dist::point_mass(&self.group, &self.group.zero())?;
        for _ in 0..n {
            acc = acc.convolve(self, Sign::Plus)?;
        }
        Ok(acc)
    }
}

/// A nonempty tuple of laws over a common group, understood as jointly
/// independent random variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RVTuple {
    group: GroupSpec,
    members: Vec<Dist>,
}

impl RVTuple {
    pub fn new(members: Vec<Dist>) -> Result<Self> {
        let first = members
            .first()
            .ok_or(Error::EmptyInput("empty random-variable tuple"))?;
        let group = first.group().clone();
        if members.iter().any(|m| m.group() != &group) {
            return Err(Error::GroupMismatch(
                "tuple members on different groups".into(),
            ));
        }
        Ok(RVTuple { group, members })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn members(&self) -> &[Dist] {
        &self.members
    }

    /// Law of the sum of the independent members.
    pub fn sum_law(&self) -> Result<Dist> {
        let mut acc = Dist::point_mass(&self.group, &self.group.zero())?;
        for m in &self.members {
            acc = acc.convolve(m, Sign::Plus)?;
        }
        Ok(acc)
    }
}

/// An exact-rational joint law over group-valued coordinates.
#[derive(Clone, PartialEq, Eq)]
pub struct JointDist {
    coords: Vec<GroupSpec>,
    space: Space,
    den: BigUint,
    atoms: BTreeMap<u64, BigUint>,
}

impl std::fmt::Debug for JointDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "JointDist{{coords={:?}, atoms={}}}",
            self.coords,
            self.atoms.len()
        )
    }
}

impl JointDist {
    pub(crate) fn from_raw(
        coords: Vec<GroupSpec>,
        mut den: BigUint,
        mut atoms: BTreeMap<u64, BigUint>,
        cap: u64,
    ) -> Result<Self> {
        let space = Space::new(&coords, cap)?;
        atoms.retain(|_, n| !n.is_zero());
        reduce(&mut den, &mut atoms);
        check_normalized(&den, &atoms)?;
        Ok(JointDist {
            coords,
            space,
            den,
            atoms,
        })
    }

    /// Joint law from per-coordinate element tuples and exact weights
    /// (normalized by their sum).
    pub fn from_weights(coords: Vec<GroupSpec>, entries: &[(Vec<Element>, u64)]) -> Result<Self> {
        let space = Space::new(&coords, DEFAULT_ATOM_CAP)?;
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        let mut total = 0u64;
        for (xs, w) in entries {
            if *w == 0 {
                continue;
            }
            if xs.len() != coords.len() {
                return Err(Error::Shape(format!(
                    "joint atom has {} coordinates, expected {}",
                    xs.len(),
                    coords.len()
                )));
            }
            let mut keys = Vec::with_capacity(xs.len());
            for (x, g) in xs.iter().zip(&coords) {
                keys.push(g.index(x)?);
            }
            total += *w;
            *atoms.entry(space.assemble(&keys)).or_default() += BigUint::from(*w);
        }
        JointDist::from_raw(coords, BigUint::from(total), atoms, DEFAULT_ATOM_CAP)
    }

    /// The one-coordinate joint carrying a single law.
    pub fn from_dist(d: &Dist) -> Self {
        let coords = vec![d.group().clone()];
        let space = Space::new(&coords, u64::MAX).expect("single coordinate fits");
        JointDist {
            coords,
            space,
            den: d.den.clone(),
            atoms: d.atoms.clone(),
        }
    }

    /// Product law of independent components.
    pub fn product(dists: &[Dist]) -> Result<Self> {
        let coords: Vec<GroupSpec> = dists.iter().map(|d| d.group().clone()).collect();
        let members: Vec<LiftMember> = dists
            .iter()
            .enumerate()
            .map(|(i, d)| LiftMember::new(d, &coords, &[(i, LinearMap::identity(d.group()))]))
            .collect::<Result<_>>()?;
        lift(coords, members, DEFAULT_ATOM_CAP)
    }

    pub fn coords(&self) -> &[GroupSpec] {
        &self.coords
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub(crate) fn raw(&self) -> (&BigUint, &BTreeMap<u64, BigUint>) {
        (&self.den, &self.atoms)
    }

    pub(crate) fn space(&self) -> &Space {
        &self.space
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    /// Iterates atoms as (per-coordinate elements, numerator), sorted.
    pub fn atoms(&self) -> impl Iterator<Item = (Vec<Element>, &BigUint)> + '_ {
        self.atoms.iter().map(move |(&k, n)| {
            let es = (0..self.coords.len())
                .map(|c| self.coords[c].element(self.space.coord_key(k, c)))
                .collect();
            (es, n)
        })
    }

    /// Marginal joint over an ordered subset of coordinates.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDist> {
        for &c in keep {
            if c >= self.coords.len() {
                return Err(Error::Shape(format!("coordinate {c} out of range")));
            }
        }
        let coords: Vec<GroupSpec> = keep.iter().map(|&c| self.coords[c].clone()).collect();
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &self.atoms {
            *atoms.entry(self.space.subset_key(k, keep)).or_default() += n;
        }
        JointDist::from_raw(coords, self.den.clone(), atoms, u64::MAX)
    }

    /// Marginal law of a single coordinate.
    pub fn marginal_dist(&self, coord: usize) -> Result<Dist> {
        if coord >= self.coords.len() {
            return Err(Error::Shape(format!("coordinate {coord} out of range")));
        }
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &self.atoms {
            *atoms.entry(self.space.coord_key(k, coord)).or_default() += n;
        }
        Dist::from_raw(self.coords[coord].clone(), self.den.clone(), atoms)
    }

    /// Conditions on `coord = value` and drops that coordinate.
    pub fn condition(&self, coord: usize, value: &Element) -> Result<JointDist> {
        if coord >= self.coords.len() {
            return Err(Error::Shape(format!("coordinate {coord} out of range")));
        }
        let v = self.coords[coord].index(value)?;
        let keep: Vec<usize> = (0..self.coords.len()).filter(|&c| c != coord).collect();
        let coords: Vec<GroupSpec> = keep.iter().map(|&c| self.coords[c].clone()).collect();
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        let mut mass = BigUint::zero();
        for (&k, n) in &self.atoms {
            if self.space.coord_key(k, coord) == v {
                mass += n;
                *atoms.entry(self.space.subset_key(k, &keep)).or_default() += n;
            }
        }
        if mass.is_zero() {
            return Err(Error::NullEvent);
        }
        JointDist::from_raw(coords, mass, atoms, u64::MAX)
    }

    /// Law of the pointwise combination `sum_c coeffs[c] * X_c`; all
    /// coordinates must share one group.
    pub fn combine_coords(&self, coeffs: &[i64]) -> Result<Dist> {
        if coeffs.len() != self.coords.len() {
            return Err(Error::Shape(
                "one coefficient per coordinate required".into(),
            ));
        }
        let g = self.coords[0].clone();
        if self.coords.iter().any(|c| c != &g) {
            return Err(Error::GroupMismatch(
                "combine_coords needs a common group".into(),
            ));
        }
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &self.atoms {
            let mut acc = 0u64;
            for (c, &co) in coeffs.iter().enumerate() {
                acc = g.add_idx(acc, g.scalar_idx(co, self.space.coord_key(k, c)));
            }
            *atoms.entry(acc).or_default() += n;
        }
        Dist::from_raw(g, self.den.clone(), atoms)
    }

    /// Appends the derived coordinate `sum_c coeffs[c] * X_c`.
    pub fn adjoin_combo(&self, coeffs: &[i64]) -> Result<JointDist> {
        if coeffs.len() != self.coords.len() {
            return Err(Error::Shape(
                "one coefficient per coordinate required".into(),
            ));
        }
        let g = self.coords[0].clone();
        if self.coords.iter().any(|c| c != &g) {
            return Err(Error::GroupMismatch(
                "adjoin_combo needs a common group".into(),
            ));
        }
        let mut coords = self.coords.clone();
        coords.push(g.clone());
        let space = Space::new(&coords, u64::MAX)?;
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &self.atoms {
            let mut keys: Vec<u64> = (0..self.coords.len())
                .map(|c| self.space.coord_key(k, c))
                .collect();
            let mut acc = 0u64;
            for (c, &co) in coeffs.iter().enumerate() {
                acc = g.add_idx(acc, g.scalar_idx(co, keys[c]));
            }
            keys.push(acc);
            *atoms.entry(space.assemble(&keys)).or_default() += n;
        }
        JointDist::from_raw(coords, self.den.clone(), atoms, u64::MAX)
    }

    /// Positive-probability values of a coordinate, in canonical order, with
    /// exact weight numerators relative to the marginal's denominator.
    pub fn coord_support(&self, coord: usize) -> Result<Vec<(Element, BigUint, BigUint)>> {
        let m = self.marginal_dist(coord)?;
        let (den, atoms) = m.raw();
        Ok(atoms
            .iter()
            .map(|(&k, n)| (m.group.element(k), n.clone(), den.clone()))
            .collect())
    }
}

/// One independent member of a lifted joint: denominator plus, per atom, the
/// target-space key shift it contributes and the numerator.
pub(crate) struct LiftMember {
    den: BigUint,
    atoms: Vec<(u64, BigUint)>,
}

impl LiftMember {
    /// Member from a law and contribution maps `(target coordinate, map)`.
    /// Coordinates not listed receive zero; repeated coordinates add.
    pub fn new(d: &Dist, coords: &[GroupSpec], maps: &[(usize, LinearMap)]) -> Result<Self> {
        let space = Space::new(coords, u64::MAX)?;
        for (c, map) in maps {
            if *c >= coords.len() {
                return Err(Error::Shape(format!("target coordinate {c} out of range")));
            }
            if map.source() != d.group() {
                return Err(Error::GroupMismatch(
                    "lift map source differs from member group".into(),
                ));
            }
            if map.target() != &coords[*c] {
                return Err(Error::GroupMismatch(
                    "lift map target differs from coordinate group".into(),
                ));
            }
        }
        let tables: Vec<(usize, Vec<u64>)> = maps.iter().map(|(c, m)| (*c, m.table())).collect();
        let mut atoms = Vec::with_capacity(d.atoms.len());
        for (&k, n) in &d.atoms {
            let mut keys = vec![0u64; coords.len()];
            for (c, table) in &tables {
                keys[*c] = coords[*c].add_idx(keys[*c], table[k as usize]);
            }
            atoms.push((space.assemble(&keys), n.clone()));
        }
        Ok(LiftMember {
            den: d.den.clone(),
            atoms,
        })
    }

    /// Member from a dependent pair `(X, Y)`: `X` contributes through `xmap`
    /// to coordinate `xcoord`, `Y` is copied to coordinate `ycoord`.
    pub fn from_pair(
        pair: &JointDist,
        coords: &[GroupSpec],
        xmap: &LinearMap,
        xcoord: usize,
        ycoord: usize,
    ) -> Result<Self> {
        if pair.arity() != 2 {
            return Err(Error::Shape(
                "pair member must have exactly two coordinates".into(),
            ));
        }
        if xmap.source() != &pair.coords[0] || xmap.target() != &coords[xcoord] {
            return Err(Error::GroupMismatch("pair lift map mismatch".into()));
        }
        if coords[ycoord] != pair.coords[1] {
            return Err(Error::GroupMismatch("pair aux coordinate mismatch".into()));
        }
        let space = Space::new(coords, u64::MAX)?;
        let table = xmap.table();
        let mut atoms = Vec::with_capacity(pair.atoms.len());
        for (&k, n) in &pair.atoms {
            let xk = pair.space.coord_key(k, 0);
            let yk = pair.space.coord_key(k, 1);
            let mut keys = vec![0u64; coords.len()];
            keys[xcoord] = table[xk as usize];
            keys[ycoord] = yk;
            atoms.push((space.assemble(&keys), n.clone()));
        }
        Ok(LiftMember {
            den: pair.den.clone(),
            atoms,
        })
    }
}

/// Sequentially convolves member contributions into a joint law.
pub(crate) fn lift(
    coords: Vec<GroupSpec>,
    members: Vec<LiftMember>,
    cap: u64,
) -> Result<JointDist> {
    let space = Space::new(&coords, cap)?;
    let mut den = BigUint::one();
    let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
    atoms.insert(0, BigUint::one());
    for m in members {
        den *= &m.den;
        let mut next: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&k, n) in &atoms {
            for (dk, dn) in &m.atoms {
                *next.entry(space.add(k, *dk)).or_default() += n * dn;
            }
        }
        atoms = next;
    }
    JointDist::from_raw(coords, den, atoms, cap)
}

/// Exact joint law of linear images of independent variables: coordinate `r`
/// carries `sum_k maps[k][r](Y_k)`.
pub fn lifted_joint(rvs: &RVTuple, maps: &[Vec<LinearMap>], cap: u64) -> Result<JointDist> {
    if maps.len() != rvs.len() {
        return Err(Error::Shape(
            "one map list per tuple member required".into(),
        ));
    }
    let arity = maps.first().map(|m| m.len()).unwrap_or(0);
    if arity == 0 || maps.iter().any(|m| m.len() != arity) {
        return Err(Error::Shape(
            "every member needs one map per output coordinate".into(),
        ));
    }
    let coords: Vec<GroupSpec> = (0..arity).map(|r| maps[0][r].target().clone()).collect();
    for mlist in maps {
        for (r, m) in mlist.iter().enumerate() {
            if m.target() != &coords[r] {
                return Err(Error::GroupMismatch(
                    "lift maps disagree on a target coordinate".into(),
                ));
            }
        }
    }
    let members: Vec<LiftMember> = rvs
        .members()
        .iter()
        .zip(maps)
        .map(|(d, mlist)| {
            let pairs: Vec<(usize, LinearMap)> = mlist.iter().cloned().enumerate().collect();
            LiftMember::new(d, &coords, &pairs)
        })
        .collect::<Result<_>>()?;
    lift(coords, members, cap)
}

/// A joint pair `(X, Y)` with `X` group-valued and `Y` an auxiliary
/// group-valued conditioning variable; the two may be dependent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CondPair {
    joint: JointDist,
}

impl CondPair {
    pub fn new(joint: JointDist) -> Result<Self> {
        if joint.arity() != 2 {
            return Err(Error::Shape(
                "a conditioning pair needs exactly two coordinates".into(),
            ));
        }
        Ok(CondPair { joint })
    }

    /// Pair with a constant (trivial) conditioning variable.
    pub fn unconditioned(x: &Dist) -> Result<Self> {
        let aux = GroupSpec::trivial();
        let coords = vec![x.group().clone(), aux];
        let members = vec![LiftMember::new(
            x,
            &coords,
            &[(0, LinearMap::identity(x.group()))],
        )?];
        Ok(CondPair {
            joint: lift(coords, members, DEFAULT_ATOM_CAP)?,
        })
    }

    /// Pair `(X, Y)` from independent laws (conditioning is uninformative).
    pub fn independent(x: &Dist, y: &Dist) -> Result<Self> {
        Ok(CondPair {
            joint: JointDist::product(&[x.clone(), y.clone()])?,
        })
    }

    pub fn joint(&self) -> &JointDist {
        &self.joint
    }

    pub fn main_group(&self) -> &GroupSpec {
        &self.joint.coords[0]
    }

    pub fn aux_group(&self) -> &GroupSpec {
        &self.joint.coords[1]
    }

    /// Conditioned laws `(y, weight numerator, law of X given Y = y)` over
    /// the support of `Y`, in canonical order; weights share `weight_den()`.
    pub fn slices(&self) -> Result<Vec<(Element, BigUint, Dist)>> {
        let marg = self.joint.marginal_dist(1)?;
        let (_, watoms) = marg.raw();
        let mut out = Vec::new();
        for (&yk, w) in watoms {
            let y = marg.group().element(yk);
            let slice = self.joint.condition(1, &y)?;
            out.push((y, w.clone(), slice.marginal_dist(0)?));
        }
        Ok(out)
    }

    /// Denominator shared by slice weights.
    pub fn weight_den(&self) -> Result<BigUint> {
        Ok(self.joint.marginal_dist(1)?.raw().0.clone())
    }

    pub fn main_marginal(&self) -> Result<Dist> {
        self.joint.marginal_dist(0)
    }

    pub fn aux_marginal(&self) -> Result<Dist> {
        self.joint.marginal_dist(1)
    }
}

// --- serde representations matching the external JSON schemas ---

#[derive(Serialize, Deserialize)]
struct PmfEntry {
    x: Vec<u64>,
    p: String,
}

#[derive(Serialize, Deserialize)]
struct DistDto {
    group: GroupSpec,
    pmf: Vec<PmfEntry>,
}

impl Serialize for Dist {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pmf = self
            .atoms
            .iter()
            .map(|(&k, n)| PmfEntry {
                x: self.group.element(k).residues().to_vec(),
                p: fraction_string(n, &self.den),
            })
            .collect();
        DistDto {
            group: self.group.clone(),
            pmf,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let dto = DistDto::deserialize(d)?;
        let mut den = BigUint::one();
        let mut parsed = Vec::with_capacity(dto.pmf.len());
        for e in &dto.pmf {
            let (n, dd) = parse_fraction(&e.p).map_err(D::Error::custom)?;
            den = den.lcm(&dd);
            parsed.push((Element(e.x.clone()), n, dd));
        }
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (x, n, dd) in parsed {
            let k = dto.group.index(&x).map_err(D::Error::custom)?;
            *atoms.entry(k).or_default() += n * (&den / &dd);
        }
        Dist::from_raw(dto.group, den, atoms).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RVTupleDto {
    members: Vec<Dist>,
}

impl Serialize for RVTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RVTupleDto {
            members: self.members.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RVTuple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let dto = RVTupleDto::deserialize(d)?;
        RVTuple::new(dto.members).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct JointEntry {
    x: Vec<Vec<u64>>,
    p: String,
}

#[derive(Serialize, Deserialize)]
struct JointDto {
    coords: Vec<GroupSpec>,
    pmf: Vec<JointEntry>,
}

impl Serialize for JointDist {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pmf = self
            .atoms
            .iter()
            .map(|(&k, n)| JointEntry {
                x: (0..self.coords.len())
                    .map(|c| {
                        self.coords[c]
                            .element(self.space.coord_key(k, c))
                            .residues()
                            .to_vec()
                    })
                    .collect(),
                p: fraction_string(n, &self.den),
            })
            .collect();
        JointDto {
            coords: self.coords.clone(),
            pmf,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let dto = JointDto::deserialize(d)?;
        let space = Space::new(&dto.coords, DEFAULT_ATOM_CAP).map_err(D::Error::custom)?;
        let mut den = BigUint::one();
        let mut parsed = Vec::with_capacity(dto.pmf.len());
        for e in &dto.pmf {
            let (n, dd) = parse_fraction(&e.p).map_err(D::Error::custom)?;
            den = den.lcm(&dd);
            if e.x.len() != dto.coords.len() {
                return Err(D::Error::custom("joint atom arity mismatch"));
            }
            let mut keys = Vec::with_capacity(e.x.len());
            for (res, g) in e.x.iter().zip(&dto.coords) {
                keys.push(g.index(&Element(res.clone())).map_err(D::Error::custom)?);
            }
            parsed.push((space.assemble(&keys), n, dd));
        }
        let mut atoms: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (k, n, dd) in parsed {
            *atoms.entry(k).or_default() += n * (&den / &dd);
        }
        JointDist::from_raw(dto.coords, den, atoms, DEFAULT_ATOM_CAP).map_err(D::Error::custom)
    }
}
