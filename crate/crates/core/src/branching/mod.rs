//! Structured branching populations, uniform sampling and the spine.

pub mod spec;
pub mod spine;
pub mod tree;

pub use spec::{
    division_time_sample, BranchingSpec, DivisionRate, DivisionSampler, OffspringKernel, OffspringLaw, RateBound,
    TraitFlow, DEFAULT_POPULATION_CAP,
};
pub use spine::{
    many_to_one_check, sampling_limit_check, sampling_trend, simulate_spine, simulate_spine_general, ConstantMean,
    ManyToOne, MeanPopulation, SamplingLimit, SpineSpec, TrendReport,
};
pub use tree::{
    lineage, population_functional, simulate_forest, simulate_tree, uniform_sample_lineage, BranchingTree, Individual,
    TraitPath,
};
