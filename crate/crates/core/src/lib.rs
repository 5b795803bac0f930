//! Numerical laboratory for SU(n) character varieties of closed surface
//! groups: Haar-rejection sampling of the symplectic measure, the center
//! twist action, trace-function observables, mapping class group actions,
//! and the cup-product symplectic form on first cohomology.

pub mod cohomology;
pub mod observables;
pub mod rep;
pub mod unitary;
pub mod words;

pub use cohomology::{
    coboundary_space, cocycle_space, cup_symplectic, h1_representatives, symplectic_matrix,
    CohomError, SymplecticMatrix, TangentCocycle,
};
pub use observables::{
    inner_product, mc_mean, normalized_trace, trace_function, twist_averaged_mean, variance,
    Estimate, Estimator, LoopTuple, ObsError,
};
pub use rep::{
    cocycle_extension, commutant_dimension, mcg_act, polish, sample_free, sample_representation,
    twist, Polished, RepError, Representation, SampleBatch, SampleDraw, COMMUTANT_TOL,
};
pub use unitary::CMatrix;
pub use words::{
    free_reduce, mcg_generators, nielsen_generators, pair_character, surface_relator,
    total_homology_class, verify_automorphism, Automorphism, AutomorphismReport, CenterCharacter,
    HomologyClass, Letter, Presentation, Word, WordError,
};
