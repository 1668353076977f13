//! Bond percolation on the Cayley graph of a finitely generated subgroup of
//! `ℤʳ`, restricted to a word ball `A_n = B_R`.

use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{bernoulli, bernoulli_threshold};
use crate::error::{domain, Error, Result};
use crate::group::{GroupElement, GroupSpec, MetricGroup};

/// The induced subgraph `𝒢 = 𝒞|_{B_d}`: its vertices and its edges, each
/// edge stored once as `(u, j)` meaning `{u, u + g_j}` for a positive
/// generator `g_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueTemplate {
    pub d: usize,
    pub vertices: Vec<Vec<i64>>,
    pub edges: Vec<(Vec<i64>, usize)>,
    pub generators: Vec<Vec<i64>>,
}

impl CliqueTemplate {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// One generator out of each `{g, g⁻¹}` pair, in declaration order.
fn positive_generators(group: &MetricGroup) -> Result<Vec<Vec<i64>>> {
    let gens = group
        .generators()
        .ok_or_else(|| Error::Domain("Cayley graphs need a fin_gen group".into()))?;
    let mut out: Vec<Vec<i64>> = Vec::new();
    for g in gens {
        let inv: Vec<i64> = g.vector.iter().map(|c| -c).collect();
        if !out.contains(&inv) && !out.contains(&g.vector) {
            out.push(g.vector.clone());
        }
    }
    Ok(out)
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn vectors(elements: Vec<GroupElement>) -> Vec<Vec<i64>> {
    elements
        .into_iter()
        .map(|g| match g {
            GroupElement::Vector(v) => v,
            GroupElement::Perm(_) => unreachable!("fin_gen groups have vector elements"),
        })
        .collect()
}

pub fn cayley_clique(group: &MetricGroup, d: usize) -> Result<CliqueTemplate> {
    let generators = positive_generators(group)?;
    let vertices = vectors(group.ball(&group.identity(), d as f64)?);
    let members: std::collections::HashSet<&Vec<i64>> = vertices.iter().collect();
    let mut edges = Vec::new();
    for u in &vertices {
        for (j, g) in generators.iter().enumerate() {
            if members.contains(&add(u, g)) {
                edges.push((u.clone(), j));
            }
        }
    }
    Ok(CliqueTemplate {
        d,
        vertices,
        edges,
        generators,
    })
}

/// `|𝒢_d|`, the number of Cayley edges with both endpoints in `B_d`.
pub fn induced_subgraph_edges(group: &MetricGroup, d: usize) -> Result<usize> {
    Ok(cayley_clique(group, d)?.edge_count())
}

/// Region-dependent lookup tables, shared by all replicates of one window.
#[derive(Debug, PartialEq)]
pub struct PercolationGeometry {
    pub radius: usize,
    pub template: CliqueTemplate,
    index: HashMap<Vec<i64>, u32>,
    /// `neighbor[v * G + j]`: index of `v + g_j`, or `u32::MAX` outside.
    neighbor: Vec<u32>,
    /// Edge slots of the translated template for vertices with
    /// `B(φ, d) ⊆ A_n`; `None` for the others.
    translated: Vec<Option<Vec<u32>>>,
}

impl PercolationGeometry {
    pub fn new(group: &MetricGroup, d: usize, radius: usize) -> Result<Self> {
        let template = cayley_clique(group, d)?;
        let vertices = vectors(group.ball(&group.identity(), radius as f64)?);
        let index: HashMap<Vec<i64>, u32> = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect();
        let gcount = template.generators.len();
        let mut neighbor = vec![u32::MAX; vertices.len() * gcount];
        for (i, v) in vertices.iter().enumerate() {
            for (j, g) in template.generators.iter().enumerate() {
                if let Some(&k) = index.get(&add(v, g)) {
                    neighbor[i * gcount + j] = k;
                }
            }
        }
        let translated = vertices
            .iter()
            .map(|phi| {
                if !template.vertices.iter().all(|u| index.contains_key(&add(phi, u))) {
                    return None;
                }
                Some(
                    template
                        .edges
                        .iter()
                        .map(|(u, j)| index[&add(phi, u)] * gcount as u32 + *j as u32)
                        .collect(),
                )
            })
            .collect();
        Ok(Self {
            radius,
            template,
            index,
            neighbor,
            translated,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.translated.len()
    }

    /// Number of `φ ∈ A_n` with `B(φ, d) ⊆ A_n`.
    pub fn interior_count(&self) -> usize {
        self.translated.iter().filter(|t| t.is_some()).count()
    }
}

/// Edge states over `A_n = B_R`: `1` open, `0` closed, `2` leaving the region.
#[derive(Debug, Clone)]
pub struct PercolationSample {
    geometry: Arc<PercolationGeometry>,
    edges: Vec<u8>,
}

impl PartialEq for PercolationSample {
    fn eq(&self, other: &Self) -> bool {
        self.edges == other.edges && *self.geometry == *other.geometry
    }
}

impl PercolationSample {
    pub fn sample(group: &GroupSpec, p: f64, d: usize, radius: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let group = MetricGroup::from_spec(group)?;
        let geometry = Arc::new(PercolationGeometry::new(&group, d, radius)?);
        Ok(Self::sample_with(geometry, p, rng))
    }

    pub fn sample_with(geometry: Arc<PercolationGeometry>, p: f64, rng: &mut ChaCha8Rng) -> Self {
        let t = bernoulli_threshold(p);
        let edges = geometry
            .neighbor
            .iter()
            .map(|&k| if k == u32::MAX { 2 } else { bernoulli(rng, t) })
            .collect();
        Self { geometry, edges }
    }

    pub fn geometry(&self) -> &PercolationGeometry {
        &self.geometry
    }

    /// `Y_φ` by vertex index.
    pub fn eval_index(&self, i: usize) -> u8 {
        match &self.geometry.translated[i] {
            None => 0,
            Some(slots) => slots.iter().all(|&s| self.edges[s as usize] == 1) as u8,
        }
    }

    /// `W_n = Σ_{φ ∈ A_n} Y_φ`.
    pub fn w_sum(&self) -> u64 {
        (0..self.geometry.vertex_count()).map(|i| self.eval_index(i) as u64).sum()
    }

    pub fn eval(&self, c: &[i64]) -> Result<u8> {
        match self.geometry.index.get(c) {
            Some(&i) => Ok(self.eval_index(i as usize)),
            None if c.len() == self.geometry.template.generators[0].len() => Err(Error::Region(format!(
                "{c:?} lies outside the sampled ball of radius {}",
                self.geometry.radius
            ))),
            None => domain(format!("{c:?} has the wrong rank")),
        }
    }

    /// Whether the edge `{v, v + g_j}` is open.
    pub fn edge_open(&self, v: &[i64], j: usize) -> Result<bool> {
        let i = *self
            .geometry
            .index
            .get(v)
            .ok_or_else(|| Error::Region(format!("{v:?} outside the sampled ball")))?;
        let g = self.geometry.template.generators.len();
        match self.edges[i as usize * g + j] {
            2 => Err(Error::Region(format!("edge from {v:?} leaves the sampled ball"))),
            s => Ok(s == 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn induced_edges() {
        let z2 = MetricGroup::standard_lattice(2).unwrap();
        assert_eq!(induced_subgraph_edges(&z2, 0).unwrap(), 0);
        assert_eq!(induced_subgraph_edges(&z2, 1).unwrap(), 4);
        // B_2: 13 vertices; horizontal and vertical unit pairs, 8 each
        assert_eq!(induced_subgraph_edges(&z2, 2).unwrap(), 16);
        let z1 = MetricGroup::standard_lattice(1).unwrap();
        assert_eq!(induced_subgraph_edges(&z1, 1).unwrap(), 2);
        let both = MetricGroup::fin_gen(1, [("a", vec![1]), ("b", vec![-1])]).unwrap();
        assert_eq!(induced_subgraph_edges(&both, 3).unwrap(), 6);
    }

    #[test]
    fn brute_force_edge_count() {
        let g = MetricGroup::fin_gen(2, [("a", vec![1, 0]), ("b", vec![0, 1]), ("c", vec![1, 1])]).unwrap();
        for d in 0..=3 {
            let ball = vectors(g.ball(&g.identity(), d as f64).unwrap());
            let mut count = 0;
            for (i, u) in ball.iter().enumerate() {
                for v in &ball[i + 1..] {
                    let diff: Vec<i64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
                    if g.generators().unwrap().iter().any(|gen| gen.vector == diff) {
                        count += 1;
                    }
                }
            }
            assert_eq!(induced_subgraph_edges(&g, d).unwrap(), count);
        }
    }

    #[test]
    fn extreme_probabilities() {
        let spec = GroupSpec::FinGen {
            rank: 2,
            generators: [("e1".to_string(), vec![1, 0]), ("e2".to_string(), vec![0, 1])].into(),
        };
        let group = MetricGroup::from_spec(&spec).unwrap();
        let all_open = PercolationSample::sample(&spec, 1.0, 1, 4, &mut substream(1, 1, 0)).unwrap();
        for phi in vectors(group.ball(&group.identity(), 4.0).unwrap()) {
            let inside = phi.iter().map(|c| c.abs()).sum::<i64>() + 1 <= 4;
            assert_eq!(all_open.eval(&phi).unwrap(), inside as u8);
        }
        let closed = PercolationSample::sample(&spec, 0.0, 1, 4, &mut substream(1, 1, 0)).unwrap();
        assert_eq!(closed.w_sum(), 0);
        assert!(matches!(closed.eval(&[5, 0]), Err(Error::Region(_))));
    }

    #[test]
    fn y_detects_open_translate() {
        let spec = GroupSpec::FinGen {
            rank: 2,
            generators: [("e1".to_string(), vec![1, 0]), ("e2".to_string(), vec![0, 1])].into(),
        };
        for i in 0..50 {
            let s = PercolationSample::sample(&spec, 0.7, 1, 3, &mut substream(2, 1, i)).unwrap();
            let phi = [1i64, 0];
            let star = [[0i64, 0], [-1, 0], [0, 0], [0, -1]];
            let gens = [0usize, 0, 1, 1];
            let expect = star
                .iter()
                .zip(gens)
                .all(|(u, j)| s.edge_open(&add(&phi, u), j).unwrap());
            assert_eq!(s.eval(&phi).unwrap(), expect as u8);
        }
    }
}
