//! Numerical tools for free Banach lattices over finite-dimensional normed
//! spaces: truncated free norms with certificates, Nakano upper bounds,
//! maximal majorants on `ℓ_1^n`, and finite witnesses for `L_1` and `c_0`.

pub mod error;
pub mod fblnorm;
mod lp;
pub mod homfun;
pub mod nakano;
pub mod sampling;
pub mod spaces;
pub mod witnesses;

pub use error::{Error, Result};
pub use fblnorm::{
    fbl_norm, fbl_norm_k, lambda_probe, oracle_norm_net, sparsify_certificate, Budget,
    Certificate, NormEstimate, ProbeRow, SparsifiedCertificate,
};
pub use homfun::{
    directify, eval, parse_expr, pointwise_sup, DirectedFamily, FnRef, HomFn, LatticeExpr,
};
pub use nakano::{
    bump, cover_upper_bound, g_phi, g_phi_norm, maximal_majorant, strong_nakano_report,
    truncate_g_phi, Method, NakanoReport, PhiVector,
};
pub use spaces::{Space, SpaceDescriptor};
pub use witnesses::{c0_summing_demo, l1_dyadic_family, l1_limit_check, DyadicModel};
