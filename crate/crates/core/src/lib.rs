//! Multivariate information measures for discrete tables.
//!
//! * [`measures`]: entropy, transmission and signed co-information (μ*, Q)
//! * [`ipf`]: maximum-entropy fitting by iterative proportional fitting, the
//!   interaction information I it yields and the redundancy `R = I - μ*`
//! * [`factor`]: Pearson correlation, principal components, varimax and the
//!   binning of three-factor loadings into a joint table
//! * [`biblio`]: tagged bibliographic records to incidence matrices
//! * [`pipeline`]: records → factors → binned table → measure reports
//! * [`dynamics`]: recursive, incursive and hyper-incursive logistic maps

pub mod biblio;
pub mod dynamics;
pub mod error;
pub mod factor;
pub mod ipf;
pub mod measures;
pub mod pipeline;
pub mod table;

pub use error::{Error, Result};
pub use ipf::{
    full_report, interaction_information, ipf_fit, redundancy, IpfOptions, IpfResult, MarginSet,
    MeasureReport,
};
pub use measures::{co_information, entropy, q_measure, transmission};
pub use table::{Axis, JointTable, VariableSubset};
