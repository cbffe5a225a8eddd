//! Monte Carlo harness: replicate a scenario, run each method, and
//! aggregate coverage, error, size and timing.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{full_mf, oracle, zz_debiased};
use crate::data::{generate_with_design, Dataset, DesignSource, Scenario};
use crate::error::{invalid, Error, Result};
use crate::inference::CredibleRegion;
use crate::model::{estimate_noise_level, fit_with_noise, IsvbConfig, IsvbModel, NoiseEstimate, DEFAULT_SAMPLES};
use crate::rng::{rep_stream, Purpose};

pub const THREADS_ENV: &str = "ISVB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Isvb,
    /// I-SVB with the nuisance block fixed at its variational mean.
    IsvbVbMean,
    Mf,
    Zz,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Isvb, Method::IsvbVbMean, Method::Mf, Method::Zz, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Isvb => "isvb",
            Method::IsvbVbMean => "isvb_vb_mean",
            Method::Mf => "mf",
            Method::Zz => "zz",
            Method::Oracle => "oracle",
        }
    }

    fn uses_noise(self) -> bool {
        self != Method::Oracle
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "isvb" | "i_svb" => Ok(Method::Isvb),
            "isvb_vb_mean" | "vb_mean" => Ok(Method::IsvbVbMean),
            "mf" => Ok(Method::Mf),
            "zz" => Ok(Method::Zz),
            "oracle" => Ok(Method::Oracle),
            _ => Err(invalid(format!("unknown method '{s}' (expected one of isvb, isvb_vb_mean, mf, zz, oracle)"))),
        }
    }
}

/// Parses a comma-separated method list, dropping duplicates.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(invalid("method list is empty"));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub n_reps: usize,
    pub n_samples: usize,
    pub level: f64,
    pub seed: u64,
    /// Worker threads; `None` falls back to `ISVB_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
    pub isvb: IsvbConfig,
    /// When false, time columns are written as zero so output is byte-stable.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(scenario: Scenario, methods: Vec<Method>, n_reps: usize, seed: u64) -> Self {
        Self {
            scenario,
            methods,
            n_reps,
            n_samples: DEFAULT_SAMPLES,
            level: 0.95,
            seed,
            threads: None,
            isvb: IsvbConfig::default(),
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.n_reps == 0 {
            return Err(invalid("n_reps must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods selected"));
        }
        if self.n_samples <= self.scenario.k {
            return Err(invalid(format!("n_samples must exceed k = {}", self.scenario.k)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.methods.contains(&Method::Zz) && self.scenario.k != 1 {
            return Err(Error::Unsupported("the ZZ baseline handles k = 1 only".into()));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        Ok(())
    }
}

/// `flag`, else a positive integer in `ISVB_THREADS`, else `None`.
pub fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|t| *t > 0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub covered: bool,
    /// `|center − truth|` for `k = 1`, Euclidean distance otherwise.
    pub error: f64,
    /// Interval length or ellipsoid volume proxy.
    pub size: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RepRecord {
    pub rep: usize,
    pub outcomes: Vec<(Method, std::result::Result<MethodOutcome, String>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepFailure {
    pub rep: usize,
    pub method: Method,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario_id: String,
    pub method: String,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mae_mean: f64,
    pub mae_sd: f64,
    pub size_mean: f64,
    pub size_sd: f64,
    pub rel_volume_mean: f64,
    pub rel_volume_sd: f64,
    pub time_mean: f64,
    pub time_sd: f64,
    pub n_reps_ok: usize,
}

#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<RepFailure>,
    pub records: Vec<RepRecord>,
}

impl ScenarioReport {
    pub fn row(&self, method: Method) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method.name())
    }
}

fn outcome(region: &CredibleRegion, truth: &DVector<f64>, seconds: f64) -> MethodOutcome {
    let center = region.center();
    MethodOutcome {
        covered: region.contains(truth.as_slice()),
        error: (center - truth).norm(),
        size: region.size(),
        seconds,
    }
}

struct RepContext<'a> {
    cfg: &'a RunConfig,
    rep: usize,
    d: Dataset,
    targets: Vec<usize>,
    truth: DVector<f64>,
    noise: Option<std::result::Result<(NoiseEstimate, f64), String>>,
    isvb: Option<std::result::Result<(IsvbModel, f64), String>>,
}

impl RepContext<'_> {
    fn stream(&self, purpose: Purpose) -> crate::rng::StreamRng {
        rep_stream(self.cfg.seed, self.rep as u64, purpose)
    }

    fn noise(&mut self) -> std::result::Result<(NoiseEstimate, f64), String> {
        if self.noise.is_none() {
            let start = Instant::now();
            let mut rng = self.stream(Purpose::NoiseLasso);
            let r = estimate_noise_level(&self.d, self.cfg.isvb.noise, &self.cfg.isvb.lasso, &mut rng)
                .map(|n| (n, start.elapsed().as_secs_f64()))
                .map_err(|e| e.to_string());
            self.noise = Some(r);
        }
        self.noise.clone().expect("set above")
    }

    fn isvb_model(&mut self) -> std::result::Result<(IsvbModel, f64), String> {
        if self.isvb.is_none() {
            let r = self.noise().and_then(|(noise, noise_secs)| {
                let start = Instant::now();
                let mut rng = self.stream(Purpose::Isvb);
                fit_with_noise(&self.d, &self.targets, &self.cfg.isvb, noise, &mut rng)
                    .map(|m| (m, noise_secs + start.elapsed().as_secs_f64()))
                    .map_err(|e| e.to_string())
            });
            self.isvb = Some(r);
        }
        self.isvb.clone().expect("set above")
    }

    fn run(&mut self, method: Method) -> std::result::Result<MethodOutcome, String> {
        let (n_s, level) = (self.cfg.n_samples, self.cfg.level);
        let wrap = |e: Error| e.to_string();
        match method {
            Method::Isvb | Method::IsvbVbMean => {
                let (mut model, fit_secs) = self.isvb_model()?;
                let vb_mean = method == Method::IsvbVbMean;
                model.sampler.use_vb_mean = vb_mean;
                let start = Instant::now();
                let mut rng = self.stream(if vb_mean { Purpose::VbMeanDraws } else { Purpose::Draws });
                let draws = model.draw(n_s, &mut rng).map_err(wrap)?;
                let region = CredibleRegion::from_samples(&draws, level).map_err(wrap)?;
                Ok(outcome(&region, &self.truth, fit_secs + start.elapsed().as_secs_f64()))
            }
            Method::Mf => {
                let (noise, noise_secs) = self.noise()?;
                let start = Instant::now();
                let mut rng = self.stream(Purpose::MeanField);
                let mf = full_mf(&self.d, &self.targets, &self.cfg.isvb, &noise, &mut rng).map_err(wrap)?;
                let draws = mf.draw(n_s, &mut rng);
                let region = CredibleRegion::from_samples(&draws, level).map_err(wrap)?;
                Ok(outcome(&region, &self.truth, noise_secs + start.elapsed().as_secs_f64()))
            }
            Method::Zz => {
                let (noise, noise_secs) = self.noise()?;
                let start = Instant::now();
                let mut rng = self.stream(Purpose::Zz);
                let zz = zz_debiased(&self.d, self.targets[0], level, noise.sigma(), &self.cfg.isvb.lasso, noise.lasso.as_ref(), &mut rng)
                    .map_err(wrap)?;
                let region = CredibleRegion::Interval(zz.interval);
                Ok(outcome(&region, &self.truth, noise_secs + start.elapsed().as_secs_f64()))
            }
            Method::Oracle => {
                let start = Instant::now();
                let region = oracle(&self.d, &self.targets, level, None).map_err(wrap)?;
                Ok(outcome(&region, &self.truth, start.elapsed().as_secs_f64()))
            }
        }
    }
}

/// Runs every method on replicate `rep`; results depend only on `(seed, rep)`.
pub fn run_rep(cfg: &RunConfig, source: &DesignSource, rep: usize) -> RepRecord {
    let mut rng = rep_stream(cfg.seed, rep as u64, Purpose::Data);
    let d = match generate_with_design(&cfg.scenario, source, &mut rng) {
        Ok(d) => d,
        Err(e) => {
            let msg = format!("data generation: {e}");
            return RepRecord { rep, outcomes: cfg.methods.iter().map(|m| (*m, Err(msg.clone()))).collect() };
        }
    };
    let k = cfg.scenario.k;
    let truth = DVector::from_fn(k, |i, _| d.truth.as_ref().expect("generated data has truth").beta[i]);
    let mut ctx = RepContext { cfg, rep, d, targets: (0..k).collect(), truth, noise: None, isvb: None };
    if !cfg.methods.iter().any(|m| m.uses_noise()) {
        ctx.noise = Some(Err("unused".into()));
    }
    let outcomes = cfg
        .methods
        .iter()
        .map(|&m| {
            let mut r = ctx.run(m);
            if let (Ok(o), false) = (&mut r, cfg.timing) {
                o.seconds = 0.0;
            }
            (m, r)
        })
        .collect();
    RepRecord { rep, outcomes }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn successes(records: &[RepRecord], method: Method) -> Vec<&MethodOutcome> {
    records
        .iter()
        .filter_map(|r| r.outcomes.iter().find(|(m, _)| *m == method).and_then(|(_, o)| o.as_ref().ok()))
        .collect()
}

/// Mean size used as the denominator of the relative volume: the oracle's
/// when positive, else I-SVB's.
fn reference_size(records: &[RepRecord], methods: &[Method]) -> Option<f64> {
    [Method::Oracle, Method::Isvb].into_iter().filter(|m| methods.contains(m)).find_map(|m| {
        let sizes: Vec<f64> = successes(records, m).iter().map(|o| o.size).collect();
        let (mean, _) = mean_sd(&sizes);
        (mean > 0.0).then_some(mean)
    })
}

pub fn aggregate(scenario_id: &str, methods: &[Method], records: &[RepRecord], level: f64) -> Vec<MetricsRow> {
    let reference = reference_size(records, methods);
    methods
        .iter()
        .map(|&m| {
            let ok = successes(records, m);
            let n_ok = ok.len();
            let coverage = if n_ok == 0 { f64::NAN } else { ok.iter().filter(|o| o.covered).count() as f64 / n_ok as f64 };
            let errors: Vec<f64> = ok.iter().map(|o| o.error).collect();
            let sizes: Vec<f64> = ok.iter().map(|o| o.size).collect();
            let rel: Vec<f64> = match reference {
                Some(r) => sizes.iter().map(|s| s / r).collect(),
                None => vec![],
            };
            let times: Vec<f64> = ok.iter().map(|o| o.seconds).collect();
            let (mae_mean, mae_sd) = mean_sd(&errors);
            let (size_mean, size_sd) = mean_sd(&sizes);
            let (rel_volume_mean, rel_volume_sd) = mean_sd(&rel);
            let (time_mean, time_sd) = mean_sd(&times);
            MetricsRow {
                scenario_id: scenario_id.to_string(),
                method: m.name().to_string(),
                coverage,
                coverage_se: if n_ok == 0 { f64::NAN } else { (level * (1.0 - level) / n_ok as f64).sqrt() },
                mae_mean,
                mae_sd,
                size_mean,
                size_sd,
                rel_volume_mean,
                rel_volume_sd,
                time_mean,
                time_sd,
                n_reps_ok: n_ok,
            }
        })
        .collect()
}

pub fn run_scenario(cfg: &RunConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let source = cfg.scenario.design_source()?;
    let work = || (0..cfg.n_reps).into_par_iter().map(|rep| run_rep(cfg, &source, rep)).collect::<Vec<_>>();
    let records = match resolve_threads(cfg.threads) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let failures = records
        .iter()
        .flat_map(|r| {
            r.outcomes.iter().filter_map(move |(m, o)| {
                o.as_ref().err().map(|msg| RepFailure { rep: r.rep, method: *m, message: msg.clone() })
            })
        })
        .collect();
    let id = cfg.scenario.id_or("scenario");
    let rows = aggregate(&id, &cfg.methods, &records, cfg.level);
    Ok(ScenarioReport { rows, failures, records })
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DesignKind, SparsityConvention, SupportPlacement, ValueSpec};

    fn tiny(k: usize) -> Scenario {
        Scenario {
            id: Some("tiny".into()),
            n: 40,
            p: 30,
            s0: 3,
            k,
            target_values: ValueSpec::LogN(1.0),
            other_values: ValueSpec::LogN(1.0),
            rho: 0.3,
            sigma2: 1.0,
            design_kind: DesignKind::Autoregressive,
            support: SupportPlacement::Random,
            sparsity: SparsityConvention::TotalNonzeros,
        }
    }

    fn config(k: usize, methods: Vec<Method>, reps: usize) -> RunConfig {
        let mut c = RunConfig::new(tiny(k), methods, reps, 11);
        c.n_samples = 200;
        c.timing = false;
        c
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(parse_methods("isvb, MF,isvb,zz").unwrap(), vec![Method::Isvb, Method::Mf, Method::Zz]);
        assert!(parse_methods("bogus").is_err());
        assert!(parse_methods(",").is_err());
    }

    #[test]
    fn smoke_run_emits_one_finite_row_per_method() {
        let cfg = config(1, Method::ALL.to_vec(), 1);
        let report = run_scenario(&cfg).unwrap();
        assert_eq!(report.rows.len(), 5);
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        for r in &report.rows {
            assert_eq!(r.n_reps_ok, 1);
            assert!(r.coverage == 0.0 || r.coverage == 1.0);
            assert!(r.mae_mean.is_finite() && r.size_mean.is_finite() && r.rel_volume_mean.is_finite());
        }
        assert_eq!(report.row(Method::Oracle).unwrap().rel_volume_mean, 1.0);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let mut a = config(2, vec![Method::Isvb, Method::Mf, Method::Oracle], 4);
        a.threads = Some(1);
        let mut b = a.clone();
        b.threads = Some(3);
        let (ra, rb) = (run_scenario(&a).unwrap(), run_scenario(&b).unwrap());
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_metrics_csv(&ra.rows, &mut ca).unwrap();
        write_metrics_csv(&rb.rows, &mut cb).unwrap();
        assert_eq!(ca, cb);
        let text = String::from_utf8(ca).unwrap();
        assert!(text.starts_with(
            "scenario_id,method,coverage,coverage_se,mae_mean,mae_sd,size_mean,size_sd,rel_volume_mean,rel_volume_sd,time_mean,time_sd,n_reps_ok\n"
        ));
    }

    #[test]
    fn vb_mean_variant_is_narrower() {
        let mut cfg = config(1, vec![Method::Isvb, Method::IsvbVbMean], 3);
        cfg.n_samples = 20_000;
        let report = run_scenario(&cfg).unwrap();
        for rec in &report.records {
            let a = rec.outcomes[0].1.as_ref().unwrap();
            let b = rec.outcomes[1].1.as_ref().unwrap();
            assert!(b.size <= a.size * 1.02, "{} {}", a.size, b.size);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(run_scenario(&config(2, vec![Method::Zz], 1)).is_err());
        assert!(run_scenario(&config(1, vec![Method::Isvb], 0)).is_err());
        let mut c = config(1, vec![Method::Isvb], 1);
        c.n_samples = 1;
        assert!(run_scenario(&c).is_err());
    }

    #[test]
    fn aggregate_statistics() {
        let rec = |rep, covered, size| RepRecord {
            rep,
            outcomes: vec![
                (Method::Isvb, Ok(MethodOutcome { covered, error: 1.0, size, seconds: 0.0 })),
                (Method::Oracle, Ok(MethodOutcome { covered: true, error: 0.0, size: 2.0, seconds: 0.0 })),
                (Method::Mf, Err("boom".into())),
            ],
        };
        let rows = aggregate("s", &[Method::Isvb, Method::Oracle, Method::Mf], &[rec(0, true, 1.0), rec(1, false, 3.0)], 0.95);
        assert_eq!(rows[0].coverage, 0.5);
        assert_eq!(rows[0].size_mean, 2.0);
        assert!((rows[0].size_sd - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rows[0].rel_volume_mean, 1.0);
        assert!((rows[0].coverage_se - (0.95 * 0.05 / 2.0f64).sqrt()).abs() < 1e-15);
        assert_eq!(rows[2].n_reps_ok, 0);
        assert!(rows[2].coverage.is_nan());
    }
}
