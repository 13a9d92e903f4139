//! Tangent frames, pairing polynomials and the linear-algebraic checks built on them.

pub mod bl;
pub mod exact;
pub mod frame;
pub mod lemma;
pub mod nu;
pub mod poly;
pub mod search;
pub mod zeroset;

pub use bl::{bl_dimension_check, BlCheck, SubspaceBasis, RANK_TOLERANCE};
pub use frame::{pairing_forms, q_coefficients_exact, q_polynomial, tangent_frame, PairingForm, TangentFrame};
pub use lemma::{verify_lemma_kernels, LemmaReport};
pub use nu::{nu_estimate, nu_estimate_with, NuEstimate, NuOptions, Square};
pub use poly::{monomials, BivariatePolynomial};
pub use search::{isotropic_search, isotropic_search_with, SearchOptions, SearchReport};
pub use zeroset::{zero_set_square_count, zero_set_square_count_with};
