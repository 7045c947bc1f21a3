//! Truncated Wiener chaos (Fock space) of the white-noise measure: chaos
//! vectors, the generator pieces `L₀`, `G^m_±`, cylinder functions and the
//! controlled fixed point.

mod control;
mod cylinder;
mod ops;
mod vector;

pub use control::{
    apriori_ratio_report, dissipativity_form, find_l0, solve_k_fixed_point, AprioriReport,
    Dissipativity, FixedPoint,
};
pub use cylinder::{
    chaos_to_pointwise_oracle, energy_mc_check, energy_norm_check, energy_operator, wick_monomial,
    CylinderFunction, EnergyMc, OracleValue,
};
pub use ops::{
    adjoint_check, apply_gm, apply_gm_minus, apply_gm_plus, beta, cutoff_split, dense_gm_minus,
    dense_gm_plus, AdjointReport, CutoffSpec,
};
pub use vector::{orbit_size, tuples, ChaosEntry, ChaosVector, WeightSpec};
