use proptest::prelude::*;

use pdmplab::branching::*;
use pdmplab::rng::RngStream;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tree_is_consistent(seed in any::<u64>(), r in -0.5f64..0.5, b in 0.1f64..2.0, t in 0.1f64..3.0) {
        let spec = BranchingSpec::binary(r, DivisionRate::Constant(b));
        let tree = simulate_tree(&spec, &[1.0], t, &RngStream::new(seed, 0)).unwrap();
        tree.validate().unwrap();
        for ind in &tree.individuals {
            if let Some(p) = ind.parent {
                let parent = &tree.individuals[p];
                prop_assert_eq!(parent.death, Some(ind.birth));
                prop_assert_eq!(ind.generation, parent.generation + 1);
            }
            let kids = tree.children_of(ind.id);
            prop_assert!(kids.is_empty() || kids.len() == 2);
            prop_assert_eq!(kids.is_empty(), ind.death.is_none());
        }
    }

    #[test]
    fn equal_split_conserves_mass(seed in any::<u64>(), r in -0.5f64..0.5, t in 0.1f64..3.0) {
        let spec = BranchingSpec::binary(r, DivisionRate::Constant(1.0));
        let tree = simulate_tree(&spec, &[2.0], t, &RngStream::new(seed, 1)).unwrap();
        let mass = population_functional(&tree, &|x| x[0], t).unwrap();
        prop_assert!((mass / (2.0 * (r * t).exp()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_sample_is_alive(seed in any::<u64>()) {
        let spec = BranchingSpec::binary(0.1, DivisionRate::Constant(1.5));
        let tree = simulate_tree(&spec, &[1.0], 2.0, &RngStream::new(seed, 2)).unwrap();
        let (id, path) = uniform_sample_lineage(&tree, 2.0, &mut RngStream::new(seed, 3).rng()).unwrap();
        prop_assert!(tree.individuals[id].is_alive_at(2.0));
        prop_assert_eq!(path.final_trait(), tree.trait_at(id, 2.0));
        prop_assert_eq!(path.jumps_until(2.0) as u32, tree.individuals[id].generation);
    }
}

#[test]
fn population_size_mean_is_exponential() {
    let (b, t) = (1.0, 2.0);
    let spec = BranchingSpec::binary(0.0, DivisionRate::Constant(b));
    let m = many_to_one_check(&spec, &[1.0], &|_| 1.0, t, 20_000, &RngStream::new(9, 0)).unwrap();
    assert!(pdmplab::stats::z_against(&m.lhs, (b * t).exp()).abs() < 4.0, "{m:?}");
    assert!((m.rhs.mean - (b * t).exp()).abs() < 1e-9);
}

#[test]
fn many_to_one_with_general_offspring() {
    let mut spec = BranchingSpec::binary(0.3, DivisionRate::Constant(1.0));
    spec.offspring = OffspringLaw::new(vec![0.2, 0.0, 0.5, 0.3]).unwrap();
    spec.kernel = OffspringKernel::Clone;
    let m = many_to_one_check(&spec, &[1.0], &|x| x[0].sqrt(), 1.5, 10_000, &RngStream::new(10, 0)).unwrap();
    assert!(m.z.abs() < 4.0, "{m:?}");
}

#[test]
fn spine_needs_constant_rate() {
    let spec = BranchingSpec::binary(0.5, DivisionRate::Linear { coef: 1.0 });
    let e = many_to_one_check(&spec, &[1.0], &|x| x[0], 1.0, 10, &RngStream::new(10, 0)).unwrap_err();
    assert!(matches!(e, pdmplab::error::Error::Precondition(_)));
}

#[test]
fn sampling_discrepancy_shrinks_with_initial_population() {
    let spec = BranchingSpec::binary(0.0, DivisionRate::Constant(1.0));
    let f = |p: &TraitPath| p.jumps_until(2.0) as f64;
    let s = RngStream::new(12, 0);
    let small = sampling_limit_check(&spec, &[1.0], &f, 2.0, 1, 4000, &s.child(0)).unwrap();
    let large = sampling_limit_check(&spec, &[1.0], &f, 2.0, 32, 4000, &s.child(1)).unwrap();
    assert!(small.discrepancy() > large.discrepancy() + 3.0 * large.discrepancy_se());
    assert!(large.z.abs() < 4.0);
}

#[test]
fn population_cap_is_enforced() {
    let mut spec = BranchingSpec::binary(0.0, DivisionRate::Constant(3.0));
    spec.population_cap = 100;
    assert!(simulate_tree(&spec, &[1.0], 10.0, &RngStream::new(1, 0)).is_err());
}

#[test]
fn tree_csv_has_one_row_per_individual() {
    let spec = BranchingSpec::binary(0.2, DivisionRate::Constant(1.0));
    let tree = simulate_tree(&spec, &[1.0], 2.0, &RngStream::new(4, 0)).unwrap();
    let mut buf = Vec::new();
    tree.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), tree.len() + 1);
}
