//! JSON and CSV interchange formats.
//!
//! Numbers are written with the shortest decimal that parses back to the
//! same double, so every file round-trips bit-identically.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::GibbsModel;
use crate::likelihood::SampleMeans;
use crate::observables::ObservableSet;
use crate::operators::{CMatrix, HermitianOperator};
use crate::scalar::Scalar;
use crate::selection::RankedHypothesis;
use crate::state::DensityMatrix;
use crate::tomography::{EnsembleSpec, SampleRecord};

/// `{"dim": d, "entries": [[[re, im], …], …]}`, row-major; states carry
/// `"type": "state"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl OperatorJson {
    pub fn from_operator<S: Scalar>(op: &HermitianOperator<S>) -> Self {
        let m = op.matrix();
        Self {
            kind: None,
            dim: op.dim(),
            entries: (0..op.dim())
                .map(|r| (0..op.dim()).map(|c| [m[(r, c)].re.as_f64(), m[(r, c)].im.as_f64()]).collect())
                .collect(),
        }
    }

    pub fn from_state<S: Scalar>(rho: &DensityMatrix<S>) -> Self {
        Self {
            kind: Some("state".into()),
            ..Self::from_operator(rho.operator())
        }
    }

    /// Rejects non-Hermitian input beyond an absolute deviation of 1e-9.
    pub fn to_operator<S: Scalar>(&self) -> Result<HermitianOperator<S>> {
        if self.entries.len() != self.dim || self.entries.iter().any(|row| row.len() != self.dim) {
            return Err(Error::InvalidInput(format!(
                "operator entries do not form a {0}x{0} matrix",
                self.dim
            )));
        }
        let m = CMatrix::from_fn(self.dim, self.dim, |r, c| {
            let [re, im] = self.entries[r][c];
            Complex::new(S::lit(re), S::lit(im))
        });
        HermitianOperator::with_tolerance(m, S::parse_hermiticity_tolerance())
    }

    pub fn to_state<S: Scalar>(&self) -> Result<DensityMatrix<S>> {
        match self.kind.as_deref() {
            None | Some("state") => DensityMatrix::new(self.to_operator()?),
            Some(other) => Err(Error::InvalidInput(format!("expected a state, found type `{other}`"))),
        }
    }
}

/// One observable: a Pauli string or an explicit matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableJson {
    Pauli { pauli: String },
    Matrix(OperatorJson),
}

/// `{"labels": […], "observables": […]}`, or `{"pauli_basis": n}` for all
/// non-identity Pauli strings on `n` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSetJson {
    Listed {
        labels: Vec<String>,
        observables: Vec<ObservableJson>,
    },
    PauliBasis {
        pauli_basis: usize,
    },
}

impl ObservableSetJson {
    /// Explicit matrices for every observable.
    pub fn from_set<S: Scalar>(set: &ObservableSet<S>) -> Self {
        ObservableSetJson::Listed {
            labels: set.labels().to_vec(),
            observables: set
                .observables()
                .iter()
                .map(|o| ObservableJson::Matrix(OperatorJson::from_operator(o)))
                .collect(),
        }
    }

    /// Empty sets need a dimension that the listing cannot carry.
    pub fn to_set<S: Scalar>(&self, empty_dim: Option<usize>) -> Result<ObservableSet<S>> {
        match self {
            ObservableSetJson::PauliBasis { pauli_basis } => ObservableSet::pauli_basis(*pauli_basis),
            ObservableSetJson::Listed { labels, observables } if observables.is_empty() => {
                if !labels.is_empty() {
                    return Err(Error::LengthMismatch { expected: 0, found: labels.len() });
                }
                let dim = empty_dim.ok_or_else(|| Error::InvalidInput("empty observable set without a dimension".into()))?;
                ObservableSet::empty(dim)
            }
            ObservableSetJson::Listed { labels, observables } => {
                let ops = observables
                    .iter()
                    .map(|o| match o {
                        ObservableJson::Pauli { pauli } => HermitianOperator::pauli_string(pauli),
                        ObservableJson::Matrix(m) => m.to_operator(),
                    })
                    .collect::<Result<Vec<_>>>()?;
                ObservableSet::new(labels.clone(), ops)
            }
        }
    }
}

/// `{"labels": […], "values": […], "N": n}`; labels refer to the
/// measurement set stored alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeansJson {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    #[serde(rename = "N")]
    pub n: u64,
}

impl SampleMeansJson {
    pub fn from_means<S: Scalar>(means: &SampleMeans<S>) -> Self {
        Self {
            labels: means.observables().labels().to_vec(),
            values: means.values().iter().map(|v| v.as_f64()).collect(),
            n: means.sample_size(),
        }
    }

    pub fn to_means<S: Scalar>(&self, measurement_set: &ObservableSet<S>) -> Result<SampleMeans<S>> {
        let labels: Vec<&str> = self.labels.iter().map(String::as_str).collect();
        let set = measurement_set.select(&labels)?;
        SampleMeans::new(set, self.values.iter().map(|&v| S::lit(v)).collect(), self.n)
    }
}

/// `{"sigma", "labels", "kappa", "log_partition"}` plus the observables
/// themselves so the file is self-contained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsModelJson {
    pub sigma: OperatorJson,
    pub labels: Vec<String>,
    pub kappa: Vec<f64>,
    pub log_partition: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<ObservableSetJson>,
}

impl GibbsModelJson {
    pub fn from_model<S: Scalar>(model: &GibbsModel<S>) -> Self {
        Self {
            sigma: OperatorJson::from_state(&model.sigma),
            labels: model.observables.labels().to_vec(),
            kappa: model.kappa.iter().map(|k| k.as_f64()).collect(),
            log_partition: model.log_partition.as_f64(),
            observables: Some(ObservableSetJson::from_set(&model.observables)),
        }
    }

    /// Rebuilds the model, taking observables from the file or, failing
    /// that, from `pool` by label.
    pub fn to_model<S: Scalar>(&self, pool: Option<&ObservableSet<S>>) -> Result<GibbsModel<S>> {
        let sigma = self.sigma.to_state::<S>()?;
        let observables = match (&self.observables, pool) {
            (Some(set), _) => set.to_set(Some(sigma.dim()))?,
            (None, Some(pool)) => {
                let labels: Vec<&str> = self.labels.iter().map(String::as_str).collect();
                pool.select(&labels)?
            }
            (None, None) => return Err(Error::InvalidInput("model file lists no observables".into())),
        };
        if observables.labels() != self.labels.as_slice() {
            return Err(Error::InvalidInput("model labels disagree with its observables".into()));
        }
        GibbsModel::new(self.kappa.iter().map(|&k| S::lit(k)).collect(), observables, sigma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecordJson {
    pub id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub means: SampleMeansJson,
    pub image: OperatorJson,
    pub true_state: Option<OperatorJson>,
    pub shrink_factor: f64,
    pub residual: f64,
}

impl SampleRecordJson {
    pub fn from_record<S: Scalar>(r: &SampleRecord<S>) -> Self {
        Self {
            id: r.id.clone(),
            n: r.size,
            means: SampleMeansJson::from_means(&r.means),
            image: OperatorJson::from_state(&r.image),
            true_state: r.true_state.as_ref().map(OperatorJson::from_state),
            shrink_factor: r.shrink_factor.as_f64(),
            residual: r.residual.as_f64(),
        }
    }

    pub fn to_record<S: Scalar>(&self, measurement_set: &ObservableSet<S>) -> Result<SampleRecord<S>> {
        Ok(SampleRecord {
            id: self.id.clone(),
            size: self.n,
            means: self.means.to_means(measurement_set)?,
            image: self.image.to_state()?,
            true_state: self.true_state.as_ref().map(|s| s.to_state()).transpose()?,
            shrink_factor: S::lit(self.shrink_factor),
            residual: S::lit(self.residual),
        })
    }
}

/// Ensemble description. `sigma` defaults to the maximally mixed state and
/// `measurement_set` to the full Pauli basis; the seed comes from the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<OperatorJson>,
    pub family: ObservableSetJson,
    pub parameter_draws: Vec<Vec<f64>>,
    pub sizes: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_set: Option<ObservableSetJson>,
}

impl EnsembleSpecJson {
    pub fn to_spec<S: Scalar>(&self, seed: u64) -> Result<EnsembleSpec<S>> {
        let family = self.family.to_set::<S>(self.sigma.as_ref().map(|s| s.dim))?;
        let dim = family.dim();
        let sigma = match &self.sigma {
            Some(s) => s.to_state()?,
            None => DensityMatrix::maximally_mixed(dim)?,
        };
        let measurement_set = match &self.measurement_set {
            Some(m) => m.to_set(Some(dim))?,
            None => {
                let qubits = dim.trailing_zeros() as usize;
                if dim != 1 << qubits {
                    return Err(Error::InvalidInput(format!(
                        "dimension {dim} is not a qubit register; give a measurement_set"
                    )));
                }
                ObservableSet::pauli_basis(qubits)?
            }
        };
        let spec = EnsembleSpec {
            sigma,
            family,
            parameter_draws: self
                .parameter_draws
                .iter()
                .map(|k| k.iter().map(|&v| S::lit(v)).collect())
                .collect(),
            sizes: self.sizes.clone(),
            measurement_set,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// What `gen` leaves next to the sample files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestJson {
    pub seed: u64,
    pub sigma: OperatorJson,
    pub family: ObservableSetJson,
    pub measurement_set: ObservableSetJson,
    pub samples: Vec<String>,
}

impl ManifestJson {
    pub fn new<S: Scalar>(spec: &EnsembleSpec<S>, sample_files: Vec<String>) -> Self {
        Self {
            seed: spec.seed,
            sigma: OperatorJson::from_state(&spec.sigma),
            family: ObservableSetJson::from_set(&spec.family),
            measurement_set: ObservableSetJson::from_set(&spec.measurement_set),
            samples: sample_files,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingRowJson {
    pub label: String,
    pub fit_term: f64,
    pub penalty_term: f64,
    pub total: f64,
    pub posterior_weight: f64,
}

pub fn ranking_rows<S: Scalar>(ranked: &[RankedHypothesis<S>]) -> Vec<RankingRowJson> {
    ranked
        .iter()
        .map(|r| RankingRowJson {
            label: r.hypothesis.label.clone(),
            fit_term: r.score.fit_term.as_f64(),
            penalty_term: r.score.penalty_term.as_f64(),
            total: r.score.total.as_f64(),
            posterior_weight: r.posterior_weight.as_f64(),
        })
        .collect()
}

/// Ranking table with 17 significant digits per number.
pub fn ranking_csv(rows: &[RankingRowJson]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(["label", "fit_term", "penalty_term", "total", "posterior_weight"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            format!("{:.16e}", r.fit_term),
            format!("{:.16e}", r.penalty_term),
            format!("{:.16e}", r.total),
            format!("{:.16e}", r.posterior_weight),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::fit_gibbs;
    use crate::random::{random_density_matrix, seeded};
    use crate::selection::{rank_hypotheses, RelevanceHypothesis};
    use crate::tomography::generate_ensemble;

    #[test]
    fn state_round_trip_is_bit_exact() {
        let mut rng = seeded(1);
        let rho = random_density_matrix::<f64>(3, &mut rng);
        let text = to_json_string(&OperatorJson::from_state(&rho)).unwrap();
        assert!(text.contains("\"type\": \"state\""));
        let back: DensityMatrix<f64> = from_json_str::<OperatorJson>(&text).unwrap().to_state().unwrap();
        assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn parser_rejects_non_hermitian() {
        let bad = r#"{"dim": 2, "entries": [[[1,0],[0.5,0]],[[0.4,0],[0,0]]]}"#;
        let op = from_json_str::<OperatorJson>(bad).unwrap();
        assert!(matches!(op.to_operator::<f64>(), Err(Error::NotHermitian { .. })));
        let slight = r#"{"dim": 2, "entries": [[[1,0],[0.5,0]],[[0.5000000000001,0],[0,0]]]}"#;
        assert!(from_json_str::<OperatorJson>(slight).unwrap().to_operator::<f64>().is_ok());
        let ragged = r#"{"dim": 2, "entries": [[[1,0]],[[0,0],[0,0]]]}"#;
        assert!(from_json_str::<OperatorJson>(ragged).unwrap().to_operator::<f64>().is_err());
    }

    #[test]
    fn observable_sets_parse_in_all_forms() {
        let text = r#"{"labels": ["Z", "h"], "observables": [{"pauli": "Z"}, {"dim": 2, "entries": [[[0,0],[1,0]],[[1,0],[0,0]]]}]}"#;
        let set: ObservableSet<f64> = from_json_str::<ObservableSetJson>(text).unwrap().to_set(None).unwrap();
        assert_eq!(set.labels(), &["Z".to_string(), "h".to_string()]);
        let basis: ObservableSet<f64> = from_json_str::<ObservableSetJson>(r#"{"pauli_basis": 2}"#).unwrap().to_set(None).unwrap();
        assert_eq!(basis.len(), 15);
        let round: ObservableSet<f64> = ObservableSetJson::from_set(&set).to_set(None).unwrap();
        assert_eq!(round, set);
    }

    #[test]
    fn gibbs_model_round_trip() {
        let set = ObservableSet::<f64>::paulis(&["ZI", "XX"]).unwrap();
        let model = fit_gibbs(&set, &[0.3, -0.2], &DensityMatrix::maximally_mixed(4).unwrap()).unwrap().model;
        let text = to_json_string(&GibbsModelJson::from_model(&model)).unwrap();
        let parsed = from_json_str::<GibbsModelJson>(&text).unwrap();
        let back = parsed.to_model::<f64>(None).unwrap();
        assert_eq!(back.kappa, model.kappa);
        assert_eq!(parsed.log_partition.to_bits(), model.log_partition.to_bits());
        assert_eq!(to_json_string(&GibbsModelJson::from_model(&back)).unwrap(), text);
    }

    #[test]
    fn records_and_manifest_round_trip() {
        let spec = EnsembleSpecJson {
            sigma: None,
            family: ObservableSetJson::Listed {
                labels: vec!["ZZ".into()],
                observables: vec![ObservableJson::Pauli { pauli: "ZZ".into() }],
            },
            parameter_draws: vec![vec![0.5], vec![1.0]],
            sizes: vec![100, 200],
            measurement_set: None,
        }
        .to_spec::<f64>(9)
        .unwrap();
        assert_eq!(spec.measurement_set.len(), 15);
        let records = generate_ensemble(&spec).unwrap();
        for r in &records {
            let text = to_json_string(&SampleRecordJson::from_record(r)).unwrap();
            let back = from_json_str::<SampleRecordJson>(&text).unwrap().to_record(&spec.measurement_set).unwrap();
            assert_eq!(&back, r);
        }
        let manifest = ManifestJson::new(&spec, vec!["a.json".into()]);
        let text = to_json_string(&manifest).unwrap();
        assert_eq!(from_json_str::<ManifestJson>(&text).unwrap(), manifest);
    }

    #[test]
    fn ranking_csv_quotes_labels() {
        let pool = ObservableSet::<f64>::paulis(&["X", "Z"]).unwrap();
        let mut rng = seeded(3);
        let image = random_density_matrix::<f64>(2, &mut rng);
        let values = pool.observables().iter().map(|o| image.expectation(o).unwrap()).collect();
        let rec = SampleRecord {
            id: "s".into(),
            size: 100,
            means: SampleMeans::new(pool.clone(), values, 100).unwrap(),
            image,
            true_state: None,
            shrink_factor: 1.0,
            residual: 0.0,
        };
        let hs = vec![RelevanceHypothesis::full(&pool), RelevanceHypothesis::new(&[], &pool).unwrap()];
        let ranked = rank_hypotheses(&[rec], &hs, &pool, &DensityMatrix::maximally_mixed(2).unwrap()).unwrap();
        let rows = ranking_rows(&ranked);
        let csv = ranking_csv(&rows).unwrap();
        assert!(csv.contains("\"{X,Z}\""));
        assert_eq!(csv.lines().count(), 3);
        let text = to_json_string(&rows).unwrap();
        assert_eq!(from_json_str::<Vec<RankingRowJson>>(&text).unwrap(), rows);
    }
}
