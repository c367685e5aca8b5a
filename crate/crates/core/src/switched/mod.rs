//! Switched ODE systems: Malthus moments, planar flows and their critical
//! switching rate, contraction criteria and the random product chain.

pub mod contraction;
pub mod lyapunov;
pub mod moments;
pub mod product;

pub use contraction::{
    average_criterion, averaged_field, averaged_ode_limit, contraction_coefficient, lotka_volterra_pair,
    two_point_coupling, ContractionEstimate, ContractionMode, ContractionReport, CouplingPath,
};
pub use lyapunov::{
    critical_rate, lyapunov_exponent, lyapunov_scan, planar_closed_form, write_scan_csv, CriticalRate,
    CriticalRateOptions, LinearSwitched, LyapunovEstimate, PlanarSwitched, ScanPoint,
};
pub use moments::{
    derivative_check, growth_rate_curve, growth_rate_derivative, mean_rate, moment_dichotomy, moment_feynman_kac,
    moment_growth_rate, moment_monte_carlo, DichotomyReport, GrowthRateCurve, MalthusModel, Regime,
};
pub use product::{product_chain, ProductChain, ProductVerdict, ThetaLaw};
