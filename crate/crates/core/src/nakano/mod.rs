//! Upper bounds for increasing families of lattice homomorphism candidates:
//! `g_φ` functions, net covers and maximal majorants on `ℓ_1`-type spaces.

mod cover;
mod gphi;
mod majorant;
mod report;

pub use cover::{bump, cover_upper_bound, Bump, CoverBound, CoverReport};
pub use gphi::{g_phi, g_phi_norm, truncate_g_phi, Coefficients, GPhi, PhiVector};
pub use majorant::{maximal_majorant, MajorantReport, DEFAULT_SAMPLES};
pub use report::{coordinatewise_report, strong_nakano_report, Method, NakanoReport};
