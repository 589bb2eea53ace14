//! Maximum-entropy estimation of quantum states from expectation values,
//! asymptotic likelihoods of tomographic data, and selection of the
//! observables relevant to an ensemble of samples.
//!
//! Numerical types are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for everyday use.
//!
//! ```
//! use gibbsfit::{fit_gibbs, DensityMatrixF64, ObservableSetF64};
//!
//! let z = ObservableSetF64::paulis(&["Z"]).unwrap();
//! let mixed = DensityMatrixF64::maximally_mixed(2).unwrap();
//! let report = fit_gibbs(&z, &[0.5], &mixed).unwrap();
//! assert!((report.model.kappa[0] + 0.5f64.atanh()).abs() < 1e-10);
//! ```

pub mod error;
pub mod gibbs;
pub mod io;
pub mod likelihood;
pub mod measurement;
pub mod observables;
pub mod operators;
pub mod posterior;
pub mod random;
pub mod scalar;
pub mod selection;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
pub use gibbs::{
    dual_gradient, dual_objective, fit_gibbs, fit_gibbs_with, gibbs_state, kubo_mori_hessian, log_partition,
    log_partition_gradient, pythagoras_residual, FitOptions, FitReport, GibbsModel,
};
pub use likelihood::{
    combine_images, is_compatible, measured_log_likelihood, sanov_exponent, sanov_log_likelihood,
    stein_log_likelihood, LogLikelihood, SampleMeans,
};
pub use observables::ObservableSet;
pub use operators::{hermitian_function, matrix_exp, matrix_log, HermitianOperator, Spectrum};
pub use posterior::{qubit_posterior, qubit_posterior_with, GridPosterior, PosteriorLikelihood, SupportMode};
pub use scalar::Scalar;
pub use selection::{
    enumerate_hypotheses, occam_penalty, project_to_hypothesis, rank_hypotheses, score_hypothesis,
    HypothesisScore, RankedHypothesis, RelevanceHypothesis,
};
pub use state::{expectation, relative_entropy, von_neumann_entropy, DensityMatrix, Divergence};
pub use tomography::{
    generate_ensemble, reconstruct_image, simulate_sample, EnsembleSpec, Reconstruction, SampleRecord,
};

pub type HermitianOperatorF64 = HermitianOperator<f64>;
pub type DensityMatrixF64 = DensityMatrix<f64>;
pub type ObservableSetF64 = ObservableSet<f64>;
pub type GibbsModelF64 = GibbsModel<f64>;
pub type FitReportF64 = FitReport<f64>;
pub type SampleMeansF64 = SampleMeans<f64>;
pub type SampleRecordF64 = SampleRecord<f64>;
pub type EnsembleSpecF64 = EnsembleSpec<f64>;
pub type HypothesisScoreF64 = HypothesisScore<f64>;

pub type HermitianOperatorF32 = HermitianOperator<f32>;
pub type DensityMatrixF32 = DensityMatrix<f32>;
pub type ObservableSetF32 = ObservableSet<f32>;
pub type GibbsModelF32 = GibbsModel<f32>;
pub type FitReportF32 = FitReport<f32>;
pub type SampleMeansF32 = SampleMeans<f32>;
pub type SampleRecordF32 = SampleRecord<f32>;
pub type EnsembleSpecF32 = EnsembleSpec<f32>;
pub type HypothesisScoreF32 = HypothesisScore<f32>;
