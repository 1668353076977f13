//! Discrete groups with a left-invariant metric, their balls, shells and
//! Følner windows.
//!
//! Three families are supported:
//!
//! * `grid(r)`: `(ℤʳ, +)` with the sup metric, balls `{-t..t}ʳ`;
//! * `fin_gen`: a subgroup of `ℤʳ` given by a named generating set, with the
//!   word metric of its Cayley graph (computed by breadth-first search);
//! * `sym(n_max)`: finitely supported permutations restricted to
//!   `{1..n_max}`, with the inverse-prefix metric in its left-invariant form
//!   `d(φ, ψ) = max{m : φ(m) ≠ ψ(m)}` (zero when equal). Its balls are the
//!   subgroups `𝕊_t`.
//!
//! Haar measure is counting measure throughout, so window sizes are element
//! counts.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, Error, Result};

/// Default node budget for breadth-first enumeration.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Largest supported `n_max` for the symmetric family (8! = 40320 elements).
pub const SYM_MAX: usize = 8;

/// A group element in canonical form.
///
/// `Vector` is used by `grid` and `fin_gen` groups; `Perm` stores the
/// zero-based images `p[i] = φ(i+1) - 1` of a permutation of `{1..n_max}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    Vector(Vec<i64>),
    Perm(Vec<u16>),
}

impl GroupElement {
    pub fn vector(coords: impl Into<Vec<i64>>) -> Self {
        GroupElement::Vector(coords.into())
    }

    /// Builds a permutation from one-based images `[φ(1), φ(2), …]`.
    pub fn perm_one_based(images: &[usize]) -> Self {
        GroupElement::Perm(images.iter().map(|&i| (i - 1) as u16).collect())
    }

    pub fn as_vector(&self) -> Option<&[i64]> {
        match self {
            GroupElement::Vector(v) => Some(v),
            GroupElement::Perm(_) => None,
        }
    }

    pub fn as_perm(&self) -> Option<&[u16]> {
        match self {
            GroupElement::Perm(p) => Some(p),
            GroupElement::Vector(_) => None,
        }
    }
}

/// Serializable group descriptor, the `group` object of a scenario config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    Grid {
        r: usize,
    },
    FinGen {
        rank: usize,
        generators: BTreeMap<String, Vec<i64>>,
    },
    Sym {
        n_max: usize,
    },
}

impl GroupSpec {
    pub fn validate(&self, path: &str, errors: &mut Vec<String>) {
        match self {
            GroupSpec::Grid { r } => {
                if *r == 0 || *r > 4 {
                    errors.push(format!("{path}.r: rank must be in 1..=4, got {r}"));
                }
            }
            GroupSpec::FinGen { rank, generators } => {
                if *rank == 0 {
                    errors.push(format!("{path}.rank: must be positive"));
                }
                if generators.is_empty() {
                    errors.push(format!("{path}.generators: at least one generator required"));
                }
                for (name, v) in generators {
                    if v.len() != *rank {
                        errors.push(format!(
                            "{path}.generators.{name}: expected {rank} coordinates, got {}",
                            v.len()
                        ));
                    } else if v.iter().all(|&c| c == 0) {
                        errors.push(format!("{path}.generators.{name}: identity is not allowed"));
                    }
                }
            }
            GroupSpec::Sym { n_max } => {
                if *n_max == 0 || *n_max > SYM_MAX {
                    errors.push(format!("{path}.n_max: must be in 1..={SYM_MAX}, got {n_max}"));
                }
            }
        }
    }
}

/// The metric attached to a group family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sup,
    Word,
    InversePrefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub vector: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Grid { rank: usize },
    FinGen { rank: usize, generators: Vec<Generator>, lattice: Vec<Vec<i64>> },
    Sym { n_max: usize },
}

/// A discrete group with a left-invariant metric. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGroup {
    kind: Kind,
    budget: usize,
}

/// Cumulative ball sizes `|B_i|` and shell sizes `|B_{i+1} \ B_i|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellTable {
    pub r_max: usize,
    /// `|B_i|` for `i = 0..=r_max`.
    pub ball_sizes: Vec<u64>,
    /// `|B_{i+1} \ B_i|` for `i = 0..r_max`.
    pub shell_sizes: Vec<u64>,
}

impl ShellTable {
    fn from_ball_sizes(ball_sizes: Vec<u64>) -> Self {
        let shell_sizes = ball_sizes.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            r_max: ball_sizes.len() - 1,
            ball_sizes,
            shell_sizes,
        }
    }

    /// `|B_i|`; panics when `i > r_max`.
    pub fn ball(&self, i: usize) -> u64 {
        self.ball_sizes[i]
    }

    pub fn try_ball(&self, i: usize) -> Result<u64> {
        self.ball_sizes.get(i).copied().ok_or_else(|| {
            Error::Domain(format!("shell table has radius {} < {i}", self.r_max))
        })
    }

    /// `|B_outer \ B_inner|` for `inner <= outer`.
    pub fn annulus(&self, inner: usize, outer: usize) -> Result<u64> {
        if inner > outer {
            return domain(format!("annulus with inner radius {inner} > outer {outer}"));
        }
        Ok(self.try_ball(outer)? - self.try_ball(inner)?)
    }
}

/// One window `A_n` of a Følner sequence.
#[derive(Debug, Clone)]
pub struct FolnerWindow {
    pub index: usize,
    pub elements: Vec<GroupElement>,
    members: HashSet<GroupElement>,
}

impl FolnerWindow {
    pub fn new(index: usize, elements: Vec<GroupElement>) -> Self {
        let members = elements.iter().cloned().collect();
        Self {
            index,
            elements,
            members,
        }
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.members.contains(g)
    }
}

impl MetricGroup {
    /// `(ℤʳ, +)` with the sup metric.
    pub fn grid(rank: usize) -> Result<Self> {
        if rank == 0 {
            return domain("grid rank must be positive");
        }
        Ok(Self {
            kind: Kind::Grid { rank },
            budget: DEFAULT_BUDGET,
        })
    }

    /// The subgroup of `ℤ^rank` generated by `generators`, with the word
    /// metric. Inverses are added automatically under the name `name^-1`.
    pub fn fin_gen<S: Into<String>>(
        rank: usize,
        generators: impl IntoIterator<Item = (S, Vec<i64>)>,
    ) -> Result<Self> {
        if rank == 0 {
            return domain("fin_gen rank must be positive");
        }
        let mut gens: Vec<Generator> = Vec::new();
        for (name, vector) in generators {
            let name = name.into();
            if vector.len() != rank {
                return domain(format!("generator {name} has {} coordinates, expected {rank}", vector.len()));
            }
            if vector.iter().all(|&c| c == 0) {
                return domain(format!("generator {name} is the identity"));
            }
            if gens.iter().any(|g| g.vector == vector) {
                continue;
            }
            gens.push(Generator { name, vector });
        }
        if gens.is_empty() {
            return domain("fin_gen needs at least one generator");
        }
        let mut closed = gens.clone();
        for g in &gens {
            let inv: Vec<i64> = g.vector.iter().map(|c| -c).collect();
            if !closed.iter().any(|h| h.vector == inv) {
                closed.push(Generator {
                    name: format!("{}^-1", g.name),
                    vector: inv,
                });
            }
        }
        let mut lattice = Vec::new();
        for g in &closed {
            lattice_insert(&mut lattice, g.vector.clone());
        }
        Ok(Self {
            kind: Kind::FinGen {
                rank,
                generators: closed,
                lattice,
            },
            budget: DEFAULT_BUDGET,
        })
    }

    /// `ℤʳ` with generators `±e_1, …, ±e_r` (word metric = L1 distance).
    pub fn standard_lattice(rank: usize) -> Result<Self> {
        Self::fin_gen(
            rank,
            (0..rank).map(|i| {
                let mut v = vec![0; rank];
                v[i] = 1;
                (format!("e{}", i + 1), v)
            }),
        )
    }

    /// Permutations of `{1..n_max}` with the inverse-prefix metric.
    pub fn sym(n_max: usize) -> Result<Self> {
        if n_max == 0 || n_max > SYM_MAX {
            return domain(format!("sym supports 1 <= n_max <= {SYM_MAX}, got {n_max}"));
        }
        Ok(Self {
            kind: Kind::Sym { n_max },
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn from_spec(spec: &GroupSpec) -> Result<Self> {
        match spec {
            GroupSpec::Grid { r } => Self::grid(*r),
            GroupSpec::FinGen { rank, generators } => {
                Self::fin_gen(*rank, generators.iter().map(|(k, v)| (k.clone(), v.clone())))
            }
            GroupSpec::Sym { n_max } => Self::sym(*n_max),
        }
    }

    /// Replaces the enumeration budget (maximum number of visited nodes).
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn metric(&self) -> Metric {
        match self.kind {
            Kind::Grid { .. } => Metric::Sup,
            Kind::FinGen { .. } => Metric::Word,
            Kind::Sym { .. } => Metric::InversePrefix,
        }
    }

    /// Ambient dimension for vector groups, `None` for permutations.
    pub fn rank(&self) -> Option<usize> {
        match &self.kind {
            Kind::Grid { rank } | Kind::FinGen { rank, .. } => Some(*rank),
            Kind::Sym { .. } => None,
        }
    }

    /// The symmetric generating set (fin_gen only).
    pub fn generators(&self) -> Option<&[Generator]> {
        match &self.kind {
            Kind::FinGen { generators, .. } => Some(generators),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            Kind::Grid { rank } | Kind::FinGen { rank, .. } => GroupElement::Vector(vec![0; *rank]),
            Kind::Sym { n_max } => GroupElement::Perm((0..*n_max as u16).collect()),
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        match (&self.kind, g) {
            (Kind::Grid { rank }, GroupElement::Vector(v)) => v.len() == *rank,
            (Kind::FinGen { rank, lattice, .. }, GroupElement::Vector(v)) => {
                v.len() == *rank && lattice_contains(lattice, v)
            }
            (Kind::Sym { n_max }, GroupElement::Perm(p)) => {
                if p.len() != *n_max {
                    return false;
                }
                let mut seen = vec![false; *n_max];
                p.iter().all(|&i| {
                    let i = i as usize;
                    i < *n_max && !std::mem::replace(&mut seen[i], true)
                })
            }
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            domain(format!("{g:?} is not an element of this group"))
        }
    }

    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(compose_unchecked(g, h))
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(inverse_unchecked(g))
    }

    /// Parses a word such as `"e1 e2 e1^-1"` into its canonical element.
    /// Tokens are generator names, optionally suffixed `^-1` or `⁻¹`;
    /// the empty word and `e` denote the identity.
    pub fn element_from_word(&self, word: &str) -> Result<GroupElement> {
        let Kind::FinGen { rank, generators, .. } = &self.kind else {
            return domain("words are only defined for fin_gen groups");
        };
        let mut acc = vec![0i64; *rank];
        for token in word.split(|c: char| c.is_whitespace() || c == '·' || c == '*').filter(|t| !t.is_empty()) {
            if token == "e" {
                continue;
            }
            let lookup = |name: &str| generators.iter().find(|g| g.name == name);
            let (gen, sign) = match lookup(token) {
                Some(g) => (g, 1),
                None => {
                    let base = token
                        .strip_suffix("^-1")
                        .or_else(|| token.strip_suffix("⁻¹"))
                        .ok_or_else(|| Error::Domain(format!("unknown generator `{token}`")))?;
                    let g = lookup(base).ok_or_else(|| Error::Domain(format!("unknown generator `{token}`")))?;
                    (g, -1)
                }
            };
            for (a, c) in acc.iter_mut().zip(&gen.vector) {
                *a += sign * c;
            }
        }
        Ok(GroupElement::Vector(acc))
    }

    /// `d(g, h)`; integral for every supported family.
    pub fn distance(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        self.check(g)?;
        self.check(h)?;
        Ok(match (&self.kind, g, h) {
            (Kind::Grid { .. }, GroupElement::Vector(a), GroupElement::Vector(b)) => {
                sup_distance(a, b) as f64
            }
            (Kind::FinGen { .. }, GroupElement::Vector(a), GroupElement::Vector(b)) => {
                let diff: Vec<i64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                self.word_length(&diff)? as f64
            }
            (Kind::Sym { .. }, GroupElement::Perm(a), GroupElement::Perm(b)) => {
                prefix_distance(a, b) as f64
            }
            _ => unreachable!("membership checked"),
        })
    }

    /// Word length of `v` by breadth-first search from the identity.
    fn word_length(&self, v: &[i64]) -> Result<u64> {
        let Kind::FinGen { generators, .. } = &self.kind else {
            unreachable!()
        };
        if v.iter().all(|&c| c == 0) {
            return Ok(0);
        }
        let start = vec![0i64; v.len()];
        let mut seen: HashSet<Vec<i64>> = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start, 0u64)]);
        while let Some((node, depth)) = queue.pop_front() {
            for g in generators {
                let next: Vec<i64> = node.iter().zip(&g.vector).map(|(a, b)| a + b).collect();
                if next == v {
                    return Ok(depth + 1);
                }
                if seen.insert(next.clone()) {
                    if seen.len() > self.budget {
                        return resource(format!(
                            "word-metric search exceeded the node budget of {}",
                            self.budget
                        ));
                    }
                    queue.push_back((next, depth + 1));
                }
            }
        }
        unreachable!("lattice membership guarantees the target is reachable")
    }

    /// Breadth-first layers `B_0, B_1∖B_0, …` up to radius `r` (fin_gen).
    fn word_layers(&self, r: usize) -> Result<Vec<Vec<Vec<i64>>>> {
        let Kind::FinGen { rank, generators, .. } = &self.kind else {
            unreachable!()
        };
        let origin = vec![0i64; *rank];
        let mut seen: HashSet<Vec<i64>> = HashSet::from([origin.clone()]);
        let mut layers = vec![vec![origin]];
        for _ in 0..r {
            let mut next_layer = Vec::new();
            for node in layers.last().unwrap() {
                for g in generators {
                    let next: Vec<i64> = node.iter().zip(&g.vector).map(|(a, b)| a + b).collect();
                    if seen.insert(next.clone()) {
                        next_layer.push(next);
                    }
                }
            }
            if seen.len() > self.budget {
                return resource(format!(
                    "ball enumeration exceeded the node budget of {}",
                    self.budget
                ));
            }
            layers.push(next_layer);
        }
        Ok(layers)
    }

    fn radius_index(t: f64) -> Result<usize> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("radius must be a finite non-negative number, got {t}"));
        }
        Ok(t.floor() as usize)
    }

    /// `|B_t|` without enumerating when a closed form exists.
    pub fn ball_size(&self, t: f64) -> Result<u64> {
        let r = Self::radius_index(t)?;
        match &self.kind {
            Kind::Grid { rank } => checked_pow(2 * r as u64 + 1, *rank),
            Kind::FinGen { .. } => Ok(self.word_layers(r)?.iter().map(|l| l.len() as u64).sum()),
            Kind::Sym { .. } => factorial(r),
        }
    }

    /// The closed ball `B_t(center)` in sorted canonical order.
    pub fn ball(&self, center: &GroupElement, t: f64) -> Result<Vec<GroupElement>> {
        self.check(center)?;
        let r = Self::radius_index(t)?;
        let at_identity = self.ball_at_identity(r)?;
        let mut out: Vec<GroupElement> = at_identity.iter().map(|g| compose_unchecked(center, g)).collect();
        out.sort();
        Ok(out)
    }

    fn ball_at_identity(&self, r: usize) -> Result<Vec<GroupElement>> {
        match &self.kind {
            Kind::Grid { rank } => {
                let size = checked_pow(2 * r as u64 + 1, *rank)?;
                if size as usize > self.budget {
                    return resource(format!("ball of {size} elements exceeds the budget of {}", self.budget));
                }
                Ok(box_points(*rank, r as i64).into_iter().map(GroupElement::Vector).collect())
            }
            Kind::FinGen { .. } => Ok(self
                .word_layers(r)?
                .into_iter()
                .flatten()
                .map(GroupElement::Vector)
                .collect()),
            Kind::Sym { n_max } => {
                if r > *n_max {
                    return resource(format!(
                        "ball of radius {r} leaves the truncation 𝕊_{n_max}"
                    ));
                }
                Ok(permutations_of_prefix(r, *n_max).into_iter().map(GroupElement::Perm).collect())
            }
        }
    }

    pub fn shell_table(&self, r_max: usize) -> Result<ShellTable> {
        if r_max < 1 {
            return domain("shell table needs r_max >= 1");
        }
        let balls = match &self.kind {
            Kind::Grid { rank } => (0..=r_max)
                .map(|i| checked_pow(2 * i as u64 + 1, *rank))
                .collect::<Result<Vec<_>>>()?,
            Kind::FinGen { .. } => {
                let layers = self.word_layers(r_max)?;
                layers
                    .iter()
                    .scan(0u64, |acc, l| {
                        *acc += l.len() as u64;
                        Some(*acc)
                    })
                    .collect()
            }
            Kind::Sym { .. } => (0..=r_max).map(factorial).collect::<Result<Vec<_>>>()?,
        };
        Ok(ShellTable::from_ball_sizes(balls))
    }

    /// `A_n`: `B_n` for vector groups and `𝕊_n` for the symmetric family.
    pub fn folner_set(&self, n: usize) -> Result<FolnerWindow> {
        if n < 1 {
            return domain("Følner index must be >= 1");
        }
        let elements = self.ball(&self.identity(), n as f64)?;
        Ok(FolnerWindow::new(n, elements))
    }

    /// `|A_n B_b △ A_n| / |A_n|` by explicit set arithmetic.
    pub fn boundary_defect(&self, n: usize, b: usize) -> Result<f64> {
        let window = self.folner_set(n)?;
        let ball = self.ball(&self.identity(), b as f64)?;
        let product_size = window.size().saturating_mul(ball.len());
        if product_size > self.budget.saturating_mul(8) {
            return resource(format!("A_n·B_b enumeration of {product_size} products exceeds budget"));
        }
        let mut product: HashSet<GroupElement> = HashSet::with_capacity(window.size());
        for a in &window.elements {
            for g in &ball {
                product.insert(compose_unchecked(a, g));
            }
        }
        let outside = product.iter().filter(|g| !window.contains(g)).count();
        let missing = window.elements.iter().filter(|g| !product.contains(g)).count();
        Ok((outside + missing) as f64 / window.size() as f64)
    }
}

pub(crate) fn compose_unchecked(g: &GroupElement, h: &GroupElement) -> GroupElement {
    match (g, h) {
        (GroupElement::Vector(a), GroupElement::Vector(b)) => {
            GroupElement::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
        }
        (GroupElement::Perm(a), GroupElement::Perm(b)) => {
            GroupElement::Perm(b.iter().map(|&i| a[i as usize]).collect())
        }
        _ => panic!("mixed element kinds"),
    }
}

pub(crate) fn inverse_unchecked(g: &GroupElement) -> GroupElement {
    match g {
        GroupElement::Vector(a) => GroupElement::Vector(a.iter().map(|x| -x).collect()),
        GroupElement::Perm(p) => {
            let mut inv = vec![0u16; p.len()];
            for (i, &j) in p.iter().enumerate() {
                inv[j as usize] = i as u16;
            }
            GroupElement::Perm(inv)
        }
    }
}

pub(crate) fn sup_distance(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

fn prefix_distance(a: &[u16], b: &[u16]) -> u64 {
    a.iter()
        .zip(b)
        .enumerate()
        .rev()
        .find(|(_, (x, y))| x != y)
        .map_or(0, |(i, _)| i as u64 + 1)
}

/// All points of `{-r..r}^rank` in lexicographic order.
pub(crate) fn box_points(rank: usize, r: i64) -> Vec<Vec<i64>> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(rank as u32);
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![-r; rank];
    for _ in 0..total {
        out.push(cur.clone());
        for c in cur.iter_mut().rev() {
            if *c < r {
                *c += 1;
                break;
            }
            *c = -r;
        }
    }
    out
}

/// Permutations of `{0..r}` extended by the identity on `{r..n_max}`.
fn permutations_of_prefix(r: usize, n_max: usize) -> Vec<Vec<u16>> {
    let mut prefix: Vec<u16> = (0..r as u16).collect();
    let tail: Vec<u16> = (r as u16..n_max as u16).collect();
    let mut out = Vec::new();
    loop {
        let mut p = prefix.clone();
        p.extend_from_slice(&tail);
        out.push(p);
        if !next_permutation(&mut prefix) {
            break;
        }
    }
    out
}

fn next_permutation(v: &mut [u16]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

fn checked_pow(base: u64, exp: usize) -> Result<u64> {
    base.checked_pow(exp as u32)
        .ok_or_else(|| Error::Resource(format!("{base}^{exp} overflows")))
}

fn factorial(n: usize) -> Result<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k)).ok_or_else(|| {
        Error::Resource(format!("{n}! overflows"))
    })
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn first_nonzero(v: &[i64]) -> Option<usize> {
    v.iter().position(|&c| c != 0)
}

/// Adds `v` to an integer row-echelon basis (rows sorted by pivot column).
fn lattice_insert(basis: &mut Vec<Vec<i64>>, mut v: Vec<i64>) {
    while let Some(col) = first_nonzero(&v) {
        match basis.iter().position(|row| first_nonzero(row) == Some(col)) {
            None => {
                if v[col] < 0 {
                    v.iter_mut().for_each(|c| *c = -*c);
                }
                let at = basis
                    .iter()
                    .position(|row| first_nonzero(row).is_some_and(|p| p > col))
                    .unwrap_or(basis.len());
                basis.insert(at, v);
                return;
            }
            Some(i) => {
                let row = basis[i].clone();
                let (g, x, y) = ext_gcd(row[col], v[col]);
                let (ra, va) = (row[col] / g, v[col] / g);
                let combined: Vec<i64> = row.iter().zip(&v).map(|(r, w)| x * r + y * w).collect();
                let reduced: Vec<i64> = row.iter().zip(&v).map(|(r, w)| ra * w - va * r).collect();
                basis[i] = combined;
                v = reduced;
            }
        }
    }
}

fn lattice_contains(basis: &[Vec<i64>], v: &[i64]) -> bool {
    let mut v = v.to_vec();
    while let Some(col) = first_nonzero(&v) {
        let Some(row) = basis.iter().find(|row| first_nonzero(row) == Some(col)) else {
            return false;
        };
        if v[col] % row[col] != 0 {
            return false;
        }
        let q = v[col] / row[col];
        v.iter_mut().zip(row).for_each(|(a, b)| *a -= q * b);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[i64]) -> GroupElement {
        GroupElement::vector(c.to_vec())
    }

    #[test]
    fn grid_composition_and_identity() {
        let g = MetricGroup::grid(2).unwrap();
        assert_eq!(g.compose(&v(&[1, 0]), &v(&[0, 1])).unwrap(), v(&[1, 1]));
        assert_eq!(g.compose(&v(&[4, -2]), &g.identity()).unwrap(), v(&[4, -2]));
    }

    #[test]
    fn word_reduction_by_cancellation() {
        let z2 = MetricGroup::standard_lattice(2).unwrap();
        let a = z2.element_from_word("e1 e2").unwrap();
        let b = z2.element_from_word("e1^-1").unwrap();
        // brute-force cancellation of the concatenated word e1 e2 e1^-1
        assert_eq!(z2.compose(&a, &b).unwrap(), v(&[0, 1]));
        assert_eq!(z2.element_from_word("e1 e1⁻¹ e").unwrap(), z2.identity());
    }

    #[test]
    fn non_members_are_domain_errors() {
        let g = MetricGroup::grid(2).unwrap();
        assert!(matches!(g.compose(&v(&[1]), &v(&[0, 0])), Err(Error::Domain(_))));
        let even = MetricGroup::fin_gen(1, [("a", vec![2])]).unwrap();
        assert!(even.contains(&v(&[-4])));
        assert!(matches!(even.distance(&v(&[0]), &v(&[3])), Err(Error::Domain(_))));
        let s = MetricGroup::sym(3).unwrap();
        assert!(!s.contains(&GroupElement::Perm(vec![0, 0, 1])));
        assert!(matches!(s.compose(&v(&[1]), &s.identity()), Err(Error::Domain(_))));
    }

    #[test]
    fn lattice_membership_for_skew_generators() {
        let g = MetricGroup::fin_gen(2, [("a", vec![2, 1]), ("b", vec![0, 3])]).unwrap();
        assert!(g.contains(&v(&[2, 4])));
        assert!(g.contains(&v(&[4, 2])));
        assert!(!g.contains(&v(&[1, 0])));
        assert!(!g.contains(&v(&[2, 0])));
    }

    #[test]
    fn distances() {
        let g = MetricGroup::grid(2).unwrap();
        assert_eq!(g.distance(&v(&[0, 0]), &v(&[3, -2])).unwrap(), 3.0);
        assert_eq!(g.distance(&v(&[5, 1]), &v(&[5, 1])).unwrap(), 0.0);
        let z2 = MetricGroup::standard_lattice(2).unwrap();
        assert_eq!(z2.distance(&z2.identity(), &v(&[2, 1])).unwrap(), 3.0);
        let s = MetricGroup::sym(4).unwrap();
        let swap12 = GroupElement::perm_one_based(&[2, 1, 3, 4]);
        let swap34 = GroupElement::perm_one_based(&[1, 2, 4, 3]);
        assert_eq!(s.distance(&s.identity(), &swap12).unwrap(), 2.0);
        assert_eq!(s.distance(&swap12, &swap34).unwrap(), 4.0);
    }

    #[test]
    fn ball_sizes() {
        let g2 = MetricGroup::grid(2).unwrap();
        assert_eq!(g2.ball(&g2.identity(), 1.0).unwrap().len(), 9);
        assert_eq!(g2.ball(&v(&[3, 3]), 0.0).unwrap(), vec![v(&[3, 3])]);
        let z2 = MetricGroup::standard_lattice(2).unwrap();
        assert_eq!(z2.ball(&z2.identity(), 2.0).unwrap().len(), 13);
        assert_eq!(z2.ball(&z2.identity(), 2.7).unwrap().len(), 13);
        let s = MetricGroup::sym(5).unwrap();
        assert_eq!(s.ball(&s.identity(), 3.0).unwrap().len(), 6);
        assert!(matches!(s.ball(&s.identity(), 6.0), Err(Error::Resource(_))));
    }

    #[test]
    fn budget_is_enforced() {
        let z2 = MetricGroup::standard_lattice(2).unwrap().with_budget(100);
        assert!(matches!(z2.ball(&z2.identity(), 20.0), Err(Error::Resource(_))));
        assert!(matches!(z2.shell_table(20), Err(Error::Resource(_))));
        assert!(matches!(z2.distance(&z2.identity(), &v(&[30, 30])), Err(Error::Resource(_))));
    }

    #[test]
    fn shell_tables() {
        let g1 = MetricGroup::grid(1).unwrap().shell_table(5).unwrap();
        assert_eq!(g1.ball_sizes, vec![1, 3, 5, 7, 9, 11]);
        assert!(g1.shell_sizes.iter().all(|&s| s == 2));

        let g2 = MetricGroup::grid(2).unwrap();
        let t2 = g2.shell_table(6).unwrap();
        for i in 0..6 {
            let expected = (2 * i as u64 + 3).pow(2) - (2 * i as u64 + 1).pow(2);
            assert_eq!(t2.shell_sizes[i], expected);
            let enumerated = g2.ball(&g2.identity(), (i + 1) as f64).unwrap().len() as u64
                - g2.ball(&g2.identity(), i as f64).unwrap().len() as u64;
            assert_eq!(enumerated, expected);
        }

        let z2 = MetricGroup::standard_lattice(2).unwrap();
        let tz = z2.shell_table(8).unwrap();
        for k in 0..=8u64 {
            assert_eq!(tz.ball_sizes[k as usize], 2 * k * k + 2 * k + 1);
        }

        let s = MetricGroup::sym(4).unwrap().shell_table(5).unwrap();
        assert_eq!(s.ball_sizes, vec![1, 1, 2, 6, 24, 120]);
    }

    #[test]
    fn folner_sets() {
        let g1 = MetricGroup::grid(1).unwrap();
        let w = g1.folner_set(2).unwrap();
        assert_eq!(w.size(), 5);
        assert_eq!(w.elements, (-2..=2).map(|i| v(&[i])).collect::<Vec<_>>());
        assert!(w.contains(&g1.identity()));
        assert_eq!(MetricGroup::grid(2).unwrap().folner_set(1).unwrap().size(), 9);
        let s = MetricGroup::sym(5).unwrap();
        let w3 = s.folner_set(3).unwrap();
        assert_eq!(w3.size(), 6);
        assert!(w3.contains(&s.identity()));
    }

    #[test]
    fn boundary_defects() {
        let g1 = MetricGroup::grid(1).unwrap();
        assert!((g1.boundary_defect(2, 1).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(g1.boundary_defect(7, 0).unwrap(), 0.0);
        let g2 = MetricGroup::grid(2).unwrap();
        assert!((g2.boundary_defect(10, 1).unwrap() - 88.0 / 441.0).abs() < 1e-15);
        let s = MetricGroup::sym(5).unwrap();
        // 𝕊_3·𝕊_4 = 𝕊_4
        assert!((s.boundary_defect(3, 4).unwrap() - 18.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn folner_trend_on_the_line() {
        let g1 = MetricGroup::grid(1).unwrap();
        for b in 1..=3usize {
            let mut prev = f64::INFINITY;
            for n in (b..=40 * b).step_by(b) {
                let d = g1.boundary_defect(n, b).unwrap();
                assert!(d <= prev);
                prev = d;
            }
            assert!(g1.boundary_defect(40 * b, b).unwrap() < 0.05);
        }
    }

    #[test]
    fn shells_add_up() {
        let z3 = MetricGroup::standard_lattice(3).unwrap().shell_table(6).unwrap();
        for i in 0..=6 {
            let s: u64 = z3.shell_sizes[..i].iter().sum::<u64>() + z3.ball_sizes[0];
            assert_eq!(s, z3.ball_sizes[i]);
        }
    }

    fn arb_vec(rank: usize) -> impl Strategy<Value = GroupElement> {
        proptest::collection::vec(-4i64..=4, rank).prop_map(GroupElement::Vector)
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = GroupElement> {
        Just((0..n as u16).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(GroupElement::Perm)
    }

    fn check_left_invariance(group: &MetricGroup, f: &GroupElement, g: &GroupElement, h: &GroupElement) {
        let fg = group.compose(f, g).unwrap();
        let fh = group.compose(f, h).unwrap();
        assert_eq!(group.distance(&fg, &fh).unwrap(), group.distance(g, h).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn left_invariance_grid(f in arb_vec(2), g in arb_vec(2), h in arb_vec(2)) {
            check_left_invariance(&MetricGroup::grid(2).unwrap(), &f, &g, &h);
        }

        #[test]
        fn left_invariance_sym(f in arb_perm(6), g in arb_perm(6), h in arb_perm(6)) {
            let s = MetricGroup::sym(6).unwrap();
            check_left_invariance(&s, &f, &g, &h);
            prop_assert_eq!(s.compose(&g, &s.inverse(&g).unwrap()).unwrap(), s.identity());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn left_invariance_word_metric(f in arb_vec(2), g in arb_vec(2), h in arb_vec(2)) {
            check_left_invariance(&MetricGroup::standard_lattice(2).unwrap(), &f, &g, &h);
        }

        #[test]
        fn associativity(f in arb_perm(5), g in arb_perm(5), h in arb_perm(5)) {
            let s = MetricGroup::sym(5).unwrap();
            let left = s.compose(&s.compose(&f, &g).unwrap(), &h).unwrap();
            let right = s.compose(&f, &s.compose(&g, &h).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn balls_are_translates(phi in arb_vec(2), t in 0usize..=3) {
            for group in [MetricGroup::grid(2).unwrap(), MetricGroup::standard_lattice(2).unwrap()] {
                let direct = group.ball(&phi, t as f64).unwrap();
                let mut translated: Vec<_> = group
                    .ball(&group.identity(), t as f64)
                    .unwrap()
                    .iter()
                    .map(|g| group.compose(&phi, g).unwrap())
                    .collect();
                translated.sort();
                prop_assert_eq!(&direct, &translated);
                for psi in &direct {
                    prop_assert!(group.distance(&phi, psi).unwrap() <= t as f64);
                }
            }
        }

        #[test]
        fn sym_balls_are_translates(phi in arb_perm(5), t in 0usize..=3) {
            let s = MetricGroup::sym(5).unwrap();
            let ball = s.ball(&phi, t as f64).unwrap();
            let everything = s.ball(&s.identity(), 5.0).unwrap();
            let brute: Vec<_> = everything
                .into_iter()
                .filter(|psi| s.distance(&phi, psi).unwrap() <= t as f64)
                .collect();
            let mut brute = brute;
            brute.sort();
            prop_assert_eq!(ball, brute);
        }
    }
}
