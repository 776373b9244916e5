//! Model-robust evaluation and construction of two-level designs.
//!
//! Designs are scored by weighted averages, over every heredity submodel of a
//! maximal model, of estimation variance (A), prediction variance (I) and
//! their blend (P). Exact values invert each submodel's information matrix;
//! the approximate values need only the maximal model's Gram matrix and tie
//! back to the generalized wordlength pattern.

pub mod approx;
pub mod bridge;
pub mod design;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod linalg;
pub mod model;
pub mod numeric;
pub mod rank;
pub mod reproduce;
pub mod search;
pub mod timing;

pub use approx::{projection_average_tilde, r_table, tilde_criteria, AlphaWeights, RTable, TildeValues};
pub use bridge::{
    averaged_tilde_from_gwlp, bridge_first_order, bridge_second_order, verify_bridge, xi_from_weights, BridgeValue, XiSet,
};
pub use design::{
    e_s2, gma_compare, gwlp, gwlp_up_to, j_characteristic, model_matrix, parse_design, project, Design, Effect,
    GmaOrdering, Gwlp,
};
pub use error::{Error, Result};
pub use exact::{exact_criteria, projection_average_exact, ExactReport, HarmonicPooling, ProjectionExact};
pub use model::{
    enumerate_submodels, model_prior, weight_table, weight_table_enumerated, weight_table_exchangeable,
    MaximalModel, PriorSpec, Submodel, WeightTable,
};
pub use rank::RankReport;
pub use search::{cpw_search, ModelOrder, SearchConfig, SearchOutcome, SearchTrace};
