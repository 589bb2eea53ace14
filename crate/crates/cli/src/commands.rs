use std::path::Path;

use anyhow::{bail, Context, Result};
use gibbsfit::io::{
    ranking_csv, ranking_rows, to_json_string, EnsembleSpecJson, GibbsModelJson, ManifestJson, ObservableSetJson,
    OperatorJson, SampleRecordJson,
};
use gibbsfit::{
    enumerate_hypotheses, fit_gibbs_with, generate_ensemble, qubit_posterior_with, rank_hypotheses,
    relative_entropy, simulate_sample, von_neumann_entropy, DensityMatrixF64, Divergence, FitOptions,
    ObservableSetF64, PosteriorLikelihood, RankedHypothesis, RelevanceHypothesis, SampleRecordF64, SupportMode,
};

use crate::output::{ensure_distinct, read_json, write_all, write_text, DirLock};
use crate::{DemoArgs, EnsembleArgs, EntropyArgs, FitArgs, GenArgs, ScoreArgs, SelectArgs};

pub const MANIFEST: &str = "manifest.json";

fn sample_file(id: &str) -> String {
    format!("{id}.json")
}

fn read_state(path: &Path) -> Result<DensityMatrixF64> {
    let json: OperatorJson = read_json(path)?;
    json.to_state().with_context(|| format!("{} is not a density matrix", path.display()))
}

pub fn gen(a: GenArgs) -> Result<()> {
    ensure_distinct(&[&a.spec], &[&a.out])?;
    let spec_json: EnsembleSpecJson = read_json(&a.spec)?;
    let spec = spec_json.to_spec::<f64>(a.seed).context("invalid ensemble spec")?;
    let records = generate_ensemble(&spec)?;
    let _lock = DirLock::acquire(&a.out)?;
    let mut files = Vec::with_capacity(records.len() + 1);
    for r in &records {
        files.push((sample_file(&r.id), to_json_string(&SampleRecordJson::from_record(r))?));
    }
    let names = files.iter().map(|(n, _)| n.clone()).collect();
    files.push((MANIFEST.to_string(), to_json_string(&ManifestJson::new(&spec, names))?));
    write_all(&a.out, &files)?;
    eprintln!("wrote {} samples to {}", records.len(), a.out.display());
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let mut inputs = vec![a.observables.as_path()];
    if let Some(s) = &a.sigma {
        inputs.push(s);
    }
    if let Some(out) = &a.out {
        ensure_distinct(&inputs, &[out])?;
    }
    let set_json: ObservableSetJson = read_json(&a.observables)?;
    let sigma = a.sigma.as_deref().map(read_state).transpose()?;
    let set: ObservableSetF64 = set_json.to_set(sigma.as_ref().map(DensityMatrixF64::dim))?;
    let sigma = match sigma {
        Some(s) => s,
        None => DensityMatrixF64::maximally_mixed(set.dim())?,
    };
    let mut options = FitOptions::default();
    if let Some(t) = a.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tolerance must be positive, got {t}");
        }
        options.tolerance = t;
    }
    let report = fit_gibbs_with(&set, &a.targets, &sigma, &options)?;
    eprintln!(
        "converged in {} iterations, residual {:e}",
        report.iterations, report.residual
    );
    let text = to_json_string(&GibbsModelJson::from_model(&report.model))?;
    match &a.out {
        Some(out) => {
            let _lock = DirLock::for_file(out)?;
            write_text(out, &text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Loaded {
    records: Vec<SampleRecordF64>,
    pool: ObservableSetF64,
    sigma: DensityMatrixF64,
}

fn load(a: &EnsembleArgs) -> Result<Loaded> {
    let mut inputs = vec![a.ensemble.as_path(), a.pool.as_path()];
    if let Some(s) = &a.sigma {
        inputs.push(s);
    }
    if let Some(out) = &a.out {
        ensure_distinct(&inputs, &[out])?;
    }
    let manifest: ManifestJson = read_json(&a.ensemble.join(MANIFEST))?;
    let ensemble_sigma = manifest.sigma.to_state::<f64>().context("manifest reference state")?;
    let dim = ensemble_sigma.dim();
    let measurement_set: ObservableSetF64 = manifest.measurement_set.to_set(Some(dim))?;
    let records = manifest
        .samples
        .iter()
        .map(|name| {
            let path = a.ensemble.join(name);
            let json: SampleRecordJson = read_json(&path)?;
            json.to_record(&measurement_set)
                .with_context(|| format!("invalid sample {}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    if records.is_empty() {
        bail!("ensemble {} lists no samples", a.ensemble.display());
    }
    let pool_json: ObservableSetJson = read_json(&a.pool)?;
    let pool: ObservableSetF64 = pool_json.to_set(Some(dim)).context("invalid pool")?;
    let sigma = match &a.sigma {
        Some(p) => read_state(p)?,
        None => ensemble_sigma,
    };
    Ok(Loaded { records, pool, sigma })
}

fn write_ranking(out: &Path, ranked: &[RankedHypothesis<f64>]) -> Result<()> {
    let rows = ranking_rows(ranked);
    let _lock = DirLock::acquire(out)?;
    write_all(
        out,
        &[
            ("ranking.json".to_string(), to_json_string(&rows)?),
            ("ranking.csv".to_string(), ranking_csv(&rows)?),
        ],
    )
}

/// `"A,B"`, `"{A,B}"` or `""` for the empty set.
fn parse_hypothesis(spec: &str, pool: &ObservableSetF64) -> Result<RelevanceHypothesis> {
    let inner = spec.trim().trim_start_matches('{').trim_end_matches('}');
    let labels: Vec<&str> = inner.split(',').map(str::trim).filter(|l| !l.is_empty()).collect();
    RelevanceHypothesis::from_labels(&labels, pool).with_context(|| format!("hypothesis `{spec}`"))
}

pub fn score(a: ScoreArgs) -> Result<()> {
    let data = load(&a.common)?;
    let hypotheses = a
        .hypotheses
        .iter()
        .map(|h| parse_hypothesis(h, &data.pool))
        .collect::<Result<Vec<_>>>()?;
    let ranked = rank_hypotheses(&data.records, &hypotheses, &data.pool, &data.sigma)?;
    match &a.common.out {
        Some(out) => write_ranking(out, &ranked),
        None => {
            print!("{}", to_json_string(&ranking_rows(&ranked))?);
            Ok(())
        }
    }
}

pub fn select(a: SelectArgs) -> Result<()> {
    let data = load(&a.common)?;
    let hypotheses = enumerate_hypotheses(&data.pool, a.max_size)?;
    let ranked = rank_hypotheses(&data.records, &hypotheses, &data.pool, &data.sigma)?;
    if let Some(out) = &a.common.out {
        write_ranking(out, &ranked)?;
    }
    println!("{}", ranked[0].hypothesis.label);
    Ok(())
}

pub fn entropy(a: EntropyArgs) -> Result<()> {
    let state = read_state(&a.state)?;
    println!("entropy\t{:.16e}", von_neumann_entropy(&state));
    if let Some(r) = &a.reference {
        let reference = read_state(r)?;
        match relative_entropy(&state, &reference)? {
            Divergence::Finite(d) => println!("relative_entropy\t{d:.16e}"),
            Divergence::Infinite => println!("relative_entropy\tinf"),
        }
    }
    Ok(())
}

pub fn demo_bloch(a: DemoArgs) -> Result<()> {
    let mode = SupportMode::parse(&a.support)?;
    let likelihood = match a.likelihood.as_str() {
        "measured" => PosteriorLikelihood::Measured,
        "sanov" => PosteriorLikelihood::Sanov,
        other => bail!("unknown likelihood `{other}` (expected measured or sanov)"),
    };
    let xbar = match (a.xbar, a.true_x) {
        (Some(x), _) => x,
        (None, Some(t)) => {
            let truth = DensityMatrixF64::from_bloch(t, 0.0, 0.0)?;
            let set = ObservableSetF64::paulis(&["X"])?;
            simulate_sample(&truth, &set, a.n, a.seed)?.values()[0]
        }
        (None, None) => bail!("give either --xbar or --true-x"),
    };
    let post = qubit_posterior_with(mode, a.prior_width, xbar, a.n, a.resolution, likelihood)?;
    let _lock = DirLock::for_file(&a.out)?;
    write_text(&a.out, &post.to_csv())?;
    let m = post.mode();
    println!("xbar\t{xbar:.16e}");
    println!("mode\t{:.16e}\t{:.16e}\t{:.16e}", m[0], m[1], m[2]);
    Ok(())
}
