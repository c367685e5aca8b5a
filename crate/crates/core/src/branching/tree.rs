//! Flat genealogical trees and their simulation.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;

use super::spec::{division_time_sample, BranchingSpec, DivisionSampler, TraitFlow};
use crate::error::{Error, Result};
use crate::rng::{RngStream, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    /// Division (or death) time; `None` when alive at the horizon.
    pub death: Option<f64>,
    pub trait_at_birth: Vec<f64>,
    pub generation: u32,
}

impl Individual {
    pub fn is_alive_at(&self, t: f64) -> bool {
        self.birth <= t && self.death.is_none_or(|d| t < d)
    }
}

/// A forest stored as an id-indexed vector; ids equal positions.
#[derive(Debug, Clone)]
pub struct BranchingTree {
    pub individuals: Vec<Individual>,
    pub roots: Vec<usize>,
    pub horizon: f64,
    pub flow: TraitFlow,
}

impl BranchingTree {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn alive_at(&self, t: f64) -> Vec<usize> {
        self.individuals.iter().filter(|i| i.is_alive_at(t)).map(|i| i.id).collect()
    }

    pub fn children_of(&self, id: usize) -> Vec<usize> {
        self.individuals.iter().filter(|i| i.parent == Some(id)).map(|i| i.id).collect()
    }

    /// Trait of individual `id` at time `t` (t within its lifetime).
    pub fn trait_at(&self, id: usize, t: f64) -> Vec<f64> {
        let ind = &self.individuals[id];
        self.flow.at(&ind.trait_at_birth, t - ind.birth)
    }

    /// Check parent links, birth/division consistency and ordering.
    pub fn validate(&self) -> Result<()> {
        for (k, ind) in self.individuals.iter().enumerate() {
            if ind.id != k {
                return Err(Error::ModelViolation(format!("individual at position {k} has id {}", ind.id)));
            }
            if let Some(d) = ind.death {
                if !(d > ind.birth) {
                    return Err(Error::ModelViolation(format!(
                        "individual {k} dies at {d} before birth {}",
                        ind.birth
                    )));
                }
            }
            match ind.parent {
                None => {
                    if !self.roots.contains(&k) {
                        return Err(Error::ModelViolation(format!("individual {k} has no parent and is not a root")));
                    }
                }
                Some(p) => {
                    if p >= k {
                        return Err(Error::ModelViolation(format!("parent {p} of {k} is not older")));
                    }
                    let par = &self.individuals[p];
                    if par.death != Some(ind.birth) {
                        return Err(Error::ModelViolation(format!("{k} is not born at its parent's division")));
                    }
                    if ind.generation != par.generation + 1 {
                        return Err(Error::ModelViolation(format!("generation of {k} is inconsistent")));
                    }
                }
            }
        }
        Ok(())
    }

    /// CSV export: id, parent, birth, death, trait_at_birth.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,parent,birth,death,trait_at_birth")?;
        for ind in &self.individuals {
            let parent = ind.parent.map(|p| p.to_string()).unwrap_or_default();
            let death = ind.death.map(|d| d.to_string()).unwrap_or_default();
            let tr: Vec<String> = ind.trait_at_birth.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{},{},{},{}", ind.id, parent, ind.birth, death, tr.join(";"))?;
        }
        Ok(())
    }
}

/// Grow a forest from the given root traits without checking assumptions.
pub(crate) fn grow(spec: &BranchingSpec, roots: &[Vec<f64>], horizon: f64, rng: &mut SimRng) -> Result<BranchingTree> {
    let mut inds: Vec<Individual> = Vec::new();
    let mut queue = VecDeque::new();
    for x in roots {
        let id = inds.len();
        inds.push(Individual { id, parent: None, birth: 0.0, death: None, trait_at_birth: x.clone(), generation: 0 });
        queue.push_back(id);
    }
    let root_ids = (0..roots.len()).collect();
    while let Some(id) = queue.pop_front() {
        let (birth, x) = (inds[id].birth, inds[id].trait_at_birth.clone());
        let tau = division_time_sample(&x, &spec.flow, &spec.rate, DivisionSampler::Auto, horizon - birth, rng)?;
        let t = birth + tau;
        if !(t <= horizon) {
            continue;
        }
        inds[id].death = Some(t);
        let k = spec.offspring.sample(rng);
        if k == 0 {
            continue;
        }
        if inds.len() + k > spec.population_cap {
            return Err(Error::PopulationOverflow { cap: spec.population_cap });
        }
        let xt = spec.flow.at(&x, tau);
        let gen = inds[id].generation + 1;
        for c in spec.kernel.children(&xt, k, rng) {
            let cid = inds.len();
            inds.push(Individual {
                id: cid,
                parent: Some(id),
                birth: t,
                death: None,
                trait_at_birth: c,
                generation: gen,
            });
            queue.push_back(cid);
        }
    }
    Ok(BranchingTree { individuals: inds, roots: root_ids, horizon, flow: spec.flow.clone() })
}

fn default_check_grid(x0: &[f64]) -> Vec<Vec<f64>> {
    (-10..=10).map(|k| x0.iter().map(|v| v * 2f64.powi(k)).collect()).collect()
}

/// Simulate the population started from one individual with trait `x0`.
pub fn simulate_tree(spec: &BranchingSpec, x0: &[f64], horizon: f64, stream: &RngStream) -> Result<BranchingTree> {
    simulate_forest(spec, &[x0.to_vec()], horizon, stream)
}

/// Simulate independent trees from several initial individuals.
pub fn simulate_forest(
    spec: &BranchingSpec,
    roots: &[Vec<f64>],
    horizon: f64,
    stream: &RngStream,
) -> Result<BranchingTree> {
    spec.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if roots.is_empty() {
        return Err(Error::Domain("at least one initial individual is required".into()));
    }
    let mut check_rng = stream.child(9).rng();
    let violations = spec.check_assumptions(&default_check_grid(&roots[0]), &mut check_rng);
    if !violations.is_empty() {
        return Err(Error::Precondition(violations.join("; ")));
    }
    grow(spec, roots, horizon, &mut stream.rng())
}

/// Σ_{u ∈ V_t} f(X_t^u).
pub fn population_functional(tree: &BranchingTree, f: &dyn Fn(&[f64]) -> f64, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= tree.horizon) {
        return Err(Error::Domain(format!("t = {t} is outside [0, {}]", tree.horizon)));
    }
    let vals: Vec<f64> = tree.alive_at(t).into_iter().map(|id| f(&tree.trait_at(id, t))).collect();
    Ok(crate::stats::pairwise_sum(&vals))
}

/// Piecewise-deterministic trait path: `traits[k]` is the trait at
/// `starts[k]`, followed along `flow` until the next start.
#[derive(Debug, Clone)]
pub struct TraitPath {
    pub starts: Vec<f64>,
    pub traits: Vec<Vec<f64>>,
    pub end: f64,
    pub flow: TraitFlow,
}

impl TraitPath {
    pub fn trait_at(&self, t: f64) -> Vec<f64> {
        let k = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        self.flow.at(&self.traits[k], t - self.starts[k])
    }

    /// Number of jumps (divisions) in `(0, t]`.
    pub fn jumps_until(&self, t: f64) -> usize {
        self.starts.iter().skip(1).filter(|&&s| s <= t).count()
    }

    pub fn final_trait(&self) -> Vec<f64> {
        self.trait_at(self.end)
    }
}

/// Ancestral lineage of individual `id`, read on `[0, t]`.
pub fn lineage(tree: &BranchingTree, id: usize, t: f64) -> TraitPath {
    let mut chain = vec![id];
    while let Some(p) = tree.individuals[*chain.last().expect("non-empty")].parent {
        chain.push(p);
    }
    chain.reverse();
    let starts = chain.iter().map(|&i| tree.individuals[i].birth).collect();
    let traits = chain.iter().map(|&i| tree.individuals[i].trait_at_birth.clone()).collect();
    TraitPath { starts, traits, end: t, flow: tree.flow.clone() }
}

/// Pick an individual uniformly from V_t and return its id and lineage.
pub fn uniform_sample_lineage(tree: &BranchingTree, t: f64, rng: &mut SimRng) -> Result<(usize, TraitPath)> {
    if !(t >= 0.0 && t <= tree.horizon) {
        return Err(Error::Domain(format!("t = {t} is outside [0, {}]", tree.horizon)));
    }
    let alive = tree.alive_at(t);
    if alive.is_empty() {
        return Err(Error::Extinct(t));
    }
    let id = alive[rng.random_range(0..alive.len())];
    Ok((id, lineage(tree, id, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::spec::DivisionRate;

    #[test]
    fn no_division_single_individual() {
        let spec = BranchingSpec::binary(0.1, DivisionRate::Constant(0.0));
        let tree = simulate_tree(&spec, &[1.0], 5.0, &RngStream::new(0, 0)).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(population_functional(&tree, &|_| 1.0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn structure_and_mass() {
        let spec = BranchingSpec::binary(0.3, DivisionRate::Constant(1.0));
        for rep in 0..50 {
            let tree = simulate_tree(&spec, &[2.0], 3.0, &RngStream::new(1, rep)).unwrap();
            tree.validate().unwrap();
            for t in [0.0, 1.0, 2.5, 3.0] {
                let mass = population_functional(&tree, &|x| x[0], t).unwrap();
                assert!((mass - 2.0 * (0.3 * t).exp()).abs() < 1e-9 * mass);
            }
            let n: Vec<usize> = (0..=30).map(|k| tree.alive_at(0.1 * k as f64).len()).collect();
            assert!(n.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn overflow_is_reported() {
        let mut spec = BranchingSpec::binary(0.0, DivisionRate::Constant(5.0));
        spec.population_cap = 100;
        let r = simulate_tree(&spec, &[1.0], 10.0, &RngStream::new(0, 0));
        assert!(matches!(r, Err(Error::PopulationOverflow { cap: 100 })));
    }

    #[test]
    fn extinct_population_has_no_lineage() {
        let mut spec = BranchingSpec::binary(0.0, DivisionRate::Constant(10.0));
        spec.offspring = crate::branching::OffspringLaw::new(vec![1.0]).unwrap();
        let tree = simulate_tree(&spec, &[1.0], 5.0, &RngStream::new(0, 0)).unwrap();
        let mut rng = RngStream::new(0, 1).rng();
        assert!(matches!(uniform_sample_lineage(&tree, 5.0, &mut rng), Err(Error::Extinct(_))));
    }

    #[test]
    fn lineage_reconstruction() {
        let spec = BranchingSpec::binary(0.2, DivisionRate::Constant(1.0));
        let tree = simulate_tree(&spec, &[1.0], 3.0, &RngStream::new(5, 0)).unwrap();
        let mut rng = RngStream::new(5, 1).rng();
        let (id, path) = uniform_sample_lineage(&tree, 3.0, &mut rng).unwrap();
        assert_eq!(path.jumps_until(3.0), tree.individuals[id].generation as usize);
        let x = path.final_trait()[0];
        let expect = (0.2f64 * 3.0).exp() * 0.5f64.powi(tree.individuals[id].generation as i32);
        assert!((x - expect).abs() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let spec = BranchingSpec::binary(0.0, DivisionRate::Constant(1.0));
        let tree = simulate_tree(&spec, &[1.0], 1.0, &RngStream::new(2, 0)).unwrap();
        let mut buf = Vec::new();
        tree.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("id,parent,birth,death,trait_at_birth\n0,,0,"));
    }
}
