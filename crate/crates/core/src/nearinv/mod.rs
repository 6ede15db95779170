//! Nearly T⁻¹-invariant subspaces for a shift-like operator T.

pub mod approx;
pub mod dalpha;
pub mod detect;
pub mod shift;
pub mod transfer;
pub mod ts_star;

pub use approx::{approx_expand, factorization, pointwise_check, rqs_operators, ApproxOperators, FactorizationRecord};
pub use dalpha::{dalpha_decompose, DAlphaDecomposition, DAlphaModel};
pub use detect::{check_nearly_invariant, detect, similarity_transport, NearInvReport};
pub use shift::{Frame, Multiplier, ShiftModel, Tolerances};
pub use transfer::{build_unitary_u, calc_h_t_g, recover_scalar_inner, transfer_decompose, TransferCase, TransferDecomposition};
pub use ts_star::{ts_star_intertwining, ts_star_matrix, us_matrix};
