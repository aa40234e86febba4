//! Separability and entanglement diagnostics for pure bipartite states.
//!
//! A pure state of an `n`-level and an `m`-level system is stored as its
//! `n × m` coefficient matrix ([`StateMatrix`]). The state is a product state
//! exactly when every 2×2 minor of that matrix vanishes, and the squared
//! moduli of those minors measure how far from a product it is.
//!
//! ```
//! use bipartite::{is_separable, normalize, StateMatrix, DEFAULT_ZERO_TOL};
//!
//! let bell = normalize(&StateMatrix::from_real_rows(&[[1.0, 0.0], [0.0, 1.0]])?)?;
//! let verdict = is_separable(&bell, DEFAULT_ZERO_TOL);
//! assert!(!verdict.separable);
//! assert_eq!(verdict.witness.unwrap().to_string(), "1,2,1,2");
//! # Ok::<(), bipartite::Error>(())
//! ```

pub mod chsh;
pub mod criteria;
pub mod cubic;
pub mod entanglement;
pub mod error;
pub mod linalg;
#[doc(hidden)]
pub mod oracle;
pub mod ppt;
pub mod state;

pub use chsh::{
    chsh_expectation, chsh_max_closed, chsh_optimize, submatrix_chsh, Budget, ChshResult,
    MeasurementSetting,
};
pub use criteria::{
    chi, factorize, is_separable, q_sum, reduced_criterion, s_sum, submatrix_g, submatrix_q,
    submatrix_s, Block2, Factorization, QuadSelector, SeparabilityVerdict,
};
pub use entanglement::{
    e_param, e_total, e_upper_bound, generate_maxent, maxent_check, EntanglementReport, MaxentCheck,
};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use ppt::{density_matrix, partial_transpose, ppt_spectrum, Side, DEFAULT_PPT_TOL};
pub use state::{
    normalize, parse_state, random_product_state, random_state, reduce, zero_flag, StateFormat,
    StateMatrix, DEFAULT_ZERO_TOL,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/separability.md")]
    mod separability {}
    #[doc = include_str!("../../../book/src/entanglement.md")]
    mod entanglement {}
    #[doc = include_str!("../../../book/src/partial_transpose.md")]
    mod partial_transpose {}
    #[doc = include_str!("../../../book/src/chsh.md")]
    mod chsh {}
    #[doc = include_str!("../../../book/src/maxent.md")]
    mod maxent {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
