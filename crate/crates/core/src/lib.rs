//! Clustering-based anomaly detection for multivariate time series.
//!
//! A series is z-score normalized and cut into overlapping windows. The
//! windows (raw values for amplitude anomalies, autocorrelation coefficients
//! for shape anomalies) are clustered with a fuzzy C-means whose distance
//! weights each variable; the weights are chosen by particle swarm
//! optimization so that the clusters reconstruct the windows as well as
//! possible. Each window's reconstruction error is its anomaly score.
//!
//! ```no_run
//! use mts_anomaly::{detect, gen_pseudo_ecg, DetectorConfig, Mode, WindowSpec};
//!
//! let series = gen_pseudo_ecg(500, &[60.0, 80.0, 90.0], 1).unwrap();
//! let config = DetectorConfig::new(Mode::Amplitude, 2, WindowSpec::new(5, 1));
//! let scores = detect(&series, &config).unwrap();
//! println!("weights {:?}", scores.weights_used);
//! ```

pub mod autocorr;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod fcm;
pub mod io;
pub mod pso;
pub mod reconstruction;
pub mod series;
pub mod synthetic;

pub use detector::{
    confidence_index, detect, tune_parameters, AnomalyScores, DetectorConfig, Mode, WeightStrategy,
};
pub use error::{Error, Result};
pub use fcm::{fit_fcm, FcmParams, FuzzyModel, WeightVector};
pub use pso::{optimize_weights, PsoConfig, PsoResult};
pub use series::{slide_windows, zscore_normalize, MultiSeries, SubsequenceSet, WindowSpec};
pub use synthetic::gen_pseudo_ecg;
