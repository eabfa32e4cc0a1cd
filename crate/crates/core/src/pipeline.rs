//! Run configuration and the predicted-versus-observed pipeline.

use crate::arch::{Arch, BoxRegion, DensityEstimate, IntegralEstimate, IntegralMethod, QuadSpec};
use crate::count::{count_prime_solutions, Strategy, DEFAULT_MAX_COST};
use crate::error::{Error, Result};
use crate::local::{Budget, HenselOutcome, Local, SeriesMethod, SeriesTruncation};
use crate::numeric::primes_up_to;
use crate::poly::{decompose, top_block_rank, PolySystem, VarPartition};
use crate::profile::{
    degree_profile, estimate_birch_dim, power_saving_profile, sample_nonsingularity,
    threshold_report, BirchEstimate, PowerSavingReport, ProfileReport, SingularitySample,
    ThresholdJson,
};
use crate::report::{Provenance, Quantity, SCHEMA};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Everything a run needs. Missing fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<PathBuf>,
    #[serde(rename = "box")]
    pub region: Option<BoxRegion>,
    pub p_list: Vec<u64>,
    /// Cutoff `H` of the singular series.
    pub h: u64,
    /// Cutoff `H'` of the singular integral.
    pub theta_cutoff: f64,
    pub p_max: u64,
    pub k_max: u32,
    pub quad_nodes: usize,
    pub mc_samples: u64,
    /// Slab half-width parameter of the real-density cross-check.
    pub epsilon: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: OutputFormat,
    pub strategy: Strategy,
    pub max_cost: u128,
    pub series_method: SeriesMethod,
    pub partition: Option<VarPartition>,
    pub codim_f: Option<usize>,
    pub codim_g: Option<usize>,
    pub birch_primes: Vec<u64>,
    pub nonsingular_primes: Vec<u64>,
    pub nonsingular_samples: u64,
    pub real_restarts: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: None,
            region: None,
            p_list: Vec::new(),
            h: 100,
            theta_cutoff: 200.0,
            p_max: 50,
            k_max: 6,
            quad_nodes: 16,
            mc_samples: 1_000_000,
            epsilon: 1e-2,
            seed: 1,
            threads: None,
            format: OutputFormat::Json,
            strategy: Strategy::Auto,
            max_cost: DEFAULT_MAX_COST,
            series_method: SeriesMethod::Auto,
            partition: None,
            codim_f: None,
            codim_g: None,
            birch_primes: vec![3, 5, 7],
            nonsingular_primes: vec![101, 103, 107],
            nonsingular_samples: 1000,
            real_restarts: 64,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("config: {what}")));
        if self.h == 0 || self.p_max < 2 || self.k_max == 0 || self.quad_nodes == 0 {
            return bad("h, k_max and quad_nodes must be positive and p_max at least 2");
        }
        if !(self.theta_cutoff > 0.0 && self.theta_cutoff.is_finite()) {
            return bad("theta_cutoff must be positive");
        }
        if !(self.epsilon > 0.0) || self.mc_samples < 10_000 {
            return bad("epsilon must be positive and mc_samples at least 10000");
        }
        if self.max_cost == 0 || self.nonsingular_samples == 0 || self.real_restarts == 0 {
            return bad("budgets must be positive");
        }
        if self.birch_primes.is_empty() {
            return bad("birch_primes is empty");
        }
        if self.p_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("p_list must be strictly ascending");
        }
        if let Some(b) = &self.region {
            BoxRegion::new(b.lo.clone(), b.hi.clone())?;
        }
        Ok(())
    }

    /// The configured box, or `(0.1, 0.9)^n`.
    pub fn region_for(&self, n: usize) -> Result<BoxRegion> {
        match &self.region {
            Some(b) if b.dim() != n => Err(Error::invalid(format!(
                "config: box has {} coordinates, the system has {n} variables",
                b.dim()
            ))),
            Some(b) => Ok(b.clone()),
            None => Ok(BoxRegion::default_for(n)),
        }
    }

    pub fn quad_spec(&self) -> QuadSpec {
        QuadSpec {
            nodes: self.quad_nodes,
            ..QuadSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalObstruction {
    pub p: u64,
    pub level: u32,
}

/// The factors of the main term, computed once per system and box.
#[derive(Debug, Clone, Serialize)]
pub struct Factors {
    pub n: usize,
    pub cal_d: u64,
    /// `n - D`, the exponent of `P`.
    pub exponent: i64,
    pub obstructions: Vec<LocalObstruction>,
    pub series: Option<SeriesSummary>,
    pub integral: Option<IntegralSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSummary {
    pub h: u64,
    pub value: Quantity,
    pub fitted_exponent: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralSummary {
    pub h: f64,
    pub value: Quantity,
    pub undersampled: bool,
    pub slab: Quantity,
    /// The two estimates differ by more than three combined error bars
    /// plus five percent.
    pub disagree: bool,
    pub note: String,
}

impl From<&SeriesTruncation> for SeriesSummary {
    fn from(s: &SeriesTruncation) -> Self {
        SeriesSummary {
            h: s.h,
            value: s.partial.clone(),
            fitted_exponent: s.fitted_exponent,
            note: s.tail_exponent_note.clone(),
        }
    }
}

fn integral_summary(i: &IntegralEstimate, d: &DensityEstimate) -> IntegralSummary {
    let provenance = match i.method {
        IntegralMethod::TensorQuadrature => Provenance::Quadrature,
        IntegralMethod::MonteCarlo => Provenance::MonteCarlo,
    };
    let spread = 3.0 * i.error.hypot(d.std_error) + 0.05 * i.value.abs().max(d.value.abs());
    IntegralSummary {
        h: i.h,
        value: Quantity::estimate(i.value, provenance, Some(i.error)),
        undersampled: i.undersampled,
        slab: Quantity::estimate(d.value, Provenance::MonteCarlo, Some(d.std_error)),
        disagree: (i.value - d.value).abs() > spread,
        note: i.tail_note.clone(),
    }
}

/// Computes the factors of `S_F(H) I_F(H') P^{n - D}`. When some prime
/// `p <= p_max` has no unit zero at some level the series is zero and the
/// remaining factors are skipped.
pub struct Predictor {
    pub factors: Factors,
}

impl Predictor {
    pub fn new(sys: &PolySystem, region: &BoxRegion, cfg: &RunConfig) -> Result<Self> {
        let n = sys.n();
        let cal_d = degree_profile(sys).cal_d();
        let local = Local::new(sys, Budget::default());
        let mut obstructions = Vec::new();
        for p in primes_up_to(cfg.p_max) {
            let w = local.hensel_check(p, cfg.k_max, cfg.seed)?;
            if let HenselOutcome::Obstruction { level } = w.outcome {
                obstructions.push(LocalObstruction { p, level });
            }
        }
        let mut factors = Factors {
            n,
            cal_d,
            exponent: n as i64 - cal_d as i64,
            obstructions,
            series: None,
            integral: None,
        };
        if factors.obstructions.is_empty() {
            let series = local.singular_series(cfg.h, cfg.series_method)?;
            let arch = Arch::new(sys, region, cfg.quad_spec())?;
            let integral = arch.singular_integral(cfg.theta_cutoff, cfg.mc_samples, cfg.seed)?;
            let slab = arch.real_density(cfg.epsilon, cfg.mc_samples, cfg.seed)?;
            factors.series = Some(SeriesSummary::from(&series));
            factors.integral = Some(integral_summary(&integral, &slab));
        }
        Ok(Predictor { factors })
    }

    /// The main term at `P`. The product of the cached factors is formed
    /// before scaling so that doubling `P` scales the value by exactly
    /// `2^{n - D}`.
    pub fn at(&self, p: u64) -> Prediction {
        let f = &self.factors;
        let scale = (p as f64).powi(f.exponent as i32);
        if !f.obstructions.is_empty() {
            let names: Vec<String> = f
                .obstructions
                .iter()
                .map(|o| {
                    format!(
                        "p={} obstruction (no unit zeros mod {}^{})",
                        o.p, o.p, o.level
                    )
                })
                .collect();
            return Prediction {
                p,
                value: Quantity::int(0),
                scale,
                reason: Some(names.join("; ")),
            };
        }
        let s = f.series.as_ref().expect("series computed");
        let i = f.integral.as_ref().expect("integral computed");
        let base = s.value.value * i.value.value;
        let value = base * scale;
        let provenance = match i.value.provenance {
            Provenance::MonteCarlo => Provenance::MonteCarlo,
            _ => Provenance::Truncation,
        };
        let error = i.value.error.map(|e| (s.value.value * e * scale).abs());
        Prediction {
            p,
            value: Quantity::estimate(value, provenance, error),
            scale,
            reason: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub p: u64,
    pub value: Quantity,
    /// `P^{n - D}`.
    pub scale: f64,
    pub reason: Option<String>,
}

pub fn predict(
    sys: &PolySystem,
    region: &BoxRegion,
    p: u64,
    cfg: &RunConfig,
) -> Result<Prediction> {
    Ok(Predictor::new(sys, region, cfg)?.at(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

/// Hypotheses of the asymptotic formula, as far as a desk-scale run can check them.
pub fn checklist(
    sys: &PolySystem,
    region: &BoxRegion,
    cfg: &RunConfig,
    factors: &Factors,
) -> Result<Vec<CheckItem>> {
    let n = sys.n();
    let profile = degree_profile(sys);
    let thr = threshold_report(&profile, cfg.codim_f, cfg.codim_g);
    let mut out = Vec::new();
    let big_n = BigInt::from(n);
    out.push(CheckItem {
        name: "n >= D^2 4^(D+6) R^5".into(),
        status: if big_n >= thr.n_min {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!("n = {n}, variable-count threshold {}", thr.n_min),
    });

    let samples = sample_nonsingularity(
        sys,
        &cfg.nonsingular_primes,
        cfg.nonsingular_samples,
        cfg.seed,
    )?;
    let singular: Vec<&SingularitySample> =
        samples.iter().filter(|s| s.singular_zeros > 0).collect();
    out.push(if let Some(s) = singular.first() {
        CheckItem {
            name: "nonsingularity".into(),
            status: CheckStatus::Fail,
            detail: format!("singular zero mod {}: {:?}", s.p, s.example),
        }
    } else {
        let tested: u64 = samples.iter().map(|s| s.zeros_tested).sum();
        CheckItem {
            name: "nonsingularity".into(),
            status: CheckStatus::NotVerified,
            detail: format!(
                "no singularity found (sampled {tested} zeros mod {:?})",
                cfg.nonsingular_primes
            ),
        }
    });

    let (birch, _) = birch_estimates(sys, cfg)?;
    let map: BTreeMap<u32, usize> = birch.iter().map(|b| (b.d, b.b_d)).collect();
    out.push(match power_saving_profile(n, &profile, &map, None) {
        Ok(psp) => CheckItem {
            name: "admissibility".into(),
            status: if psp.admissible {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!(
                "failing degrees {:?}; B_d from {}",
                psp.failing,
                birch
                    .iter()
                    .map(|b| format!("{:?}", b.method))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        },
        Err(e) => CheckItem {
            name: "admissibility".into(),
            status: CheckStatus::Fail,
            detail: e.to_string(),
        },
    });

    out.push(if factors.obstructions.is_empty() {
        CheckItem {
            name: format!("local witnesses for p <= {}", cfg.p_max),
            status: CheckStatus::Pass,
            detail: format!("primes above {} not checked", cfg.p_max),
        }
    } else {
        CheckItem {
            name: format!("local witnesses for p <= {}", cfg.p_max),
            status: CheckStatus::Fail,
            detail: format!(
                "obstructed at {:?}",
                factors.obstructions.iter().map(|o| o.p).collect::<Vec<_>>()
            ),
        }
    });

    let arch = Arch::new(sys, region, cfg.quad_spec())?;
    out.push(
        match arch.find_real_point(sys, cfg.real_restarts, cfg.seed) {
            Some(w) => CheckItem {
                name: "real nonsingular witness in the box".into(),
                status: CheckStatus::Pass,
                detail: format!(
                    "x = {:?}, residual {:e}, smallest singular value {:e}",
                    w.x, w.residual, w.min_singular_value
                ),
            },
            None => CheckItem {
                name: "real nonsingular witness in the box".into(),
                status: CheckStatus::NotVerified,
                detail: format!("none found in {} restarts", cfg.real_restarts),
            },
        },
    );
    Ok(out)
}

fn birch_estimates(sys: &PolySystem, cfg: &RunConfig) -> Result<(Vec<BirchEstimate>, Vec<u32>)> {
    let delta = degree_profile(sys).delta();
    let mut out = Vec::new();
    for &d in &delta {
        out.push(estimate_birch_dim(
            sys,
            d,
            &cfg.birch_primes,
            2_000_000,
            20_000,
            cfg.seed,
        )?);
    }
    Ok((out, delta))
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub p: u64,
    pub observed: Option<Quantity>,
    pub prime_tuples: Option<u128>,
    pub strategy: Option<&'static str>,
    pub predicted: Option<Quantity>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub schema: u32,
    pub system: String,
    #[serde(rename = "box")]
    pub region: BoxRegion,
    pub factors: Option<Factors>,
    pub prediction_error: Option<String>,
    pub rows: Vec<ComparisonRow>,
    pub checklist: Vec<CheckItem>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("P,observed,predicted,ratio\n");
        for r in &self.rows {
            let f =
                |q: &Option<Quantity>| q.as_ref().map(|q| q.value.to_string()).unwrap_or_default();
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.p,
                f(&r.observed),
                f(&r.predicted),
                ratio
            ));
        }
        s
    }

    /// `(P, ratio)` pairs for plotting.
    pub fn plot_data(&self) -> String {
        let mut s = String::from("P,ratio\n");
        for r in &self.rows {
            if let Some(v) = r.ratio {
                s.push_str(&format!("{},{}\n", r.p, v));
            }
        }
        s
    }
}

/// Counts and predicts at every `P` of the config. Stage failures are
/// recorded in the row (or report) and the run continues.
pub fn compare(sys: &PolySystem, cfg: &RunConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let region = cfg.region_for(sys.n())?;
    let compiled = sys.compile();
    let (predictor, prediction_error) = match Predictor::new(sys, &region, cfg) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut rows = Vec::new();
    for &p in &cfg.p_list {
        let mut row = ComparisonRow {
            p,
            observed: None,
            prime_tuples: None,
            strategy: None,
            predicted: predictor.as_ref().map(|pr| pr.at(p).value),
            ratio: None,
            error: None,
        };
        match count_prime_solutions(&compiled, &region, p, cfg.strategy, cfg.max_cost) {
            Ok(c) => {
                row.observed = Some(Quantity::float_exact(c.weighted));
                row.prime_tuples = Some(c.unweighted);
                row.strategy = Some(c.strategy);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        if let (Some(o), Some(pr)) = (&row.observed, &row.predicted) {
            if o.value > 0.0 && pr.value > 0.0 {
                row.ratio = Some(o.value / pr.value);
            }
        }
        rows.push(row);
    }
    let factors = predictor.map(|p| p.factors);
    let empty = Factors {
        n: sys.n(),
        cal_d: degree_profile(sys).cal_d(),
        exponent: 0,
        obstructions: Vec::new(),
        series: None,
        integral: None,
    };
    let checklist = checklist(sys, &region, cfg, factors.as_ref().unwrap_or(&empty))?;
    Ok(ComparisonReport {
        schema: SCHEMA,
        system: sys.to_text(),
        region,
        factors,
        prediction_error,
        rows,
        checklist,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema: u32,
    pub system: String,
    pub n: Quantity,
    pub profile: ProfileReport,
    pub birch: Vec<BirchEstimate>,
    pub power_saving: Option<PowerSavingReport>,
    pub power_saving_error: Option<String>,
    pub threshold: ThresholdJson,
    pub partition: VarPartition,
    pub top_block_rank: Quantity,
    pub nonsingularity: Vec<SingularitySample>,
    pub nonsingularity_summary: String,
}

/// Static report: profiles, Birch estimates, thresholds, block rank and
/// sampled nonsingularity.
pub fn analyze(sys: &PolySystem, cfg: &RunConfig) -> Result<AnalyzeReport> {
    cfg.validate()?;
    let n = sys.n();
    let profile = degree_profile(sys);
    let (birch, _) = birch_estimates(sys, cfg)?;
    let map: BTreeMap<u32, usize> = birch.iter().map(|b| (b.d, b.b_d)).collect();
    let (power_saving, power_saving_error) = match power_saving_profile(n, &profile, &map, None) {
        Ok(p) => (Some(PowerSavingReport::from(&p)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let threshold = ThresholdJson::from(&threshold_report(&profile, cfg.codim_f, cfg.codim_g));
    let partition = match &cfg.partition {
        Some(p) => VarPartition::new(n, p.y.clone(), p.z.clone(), p.w.clone())?,
        None => VarPartition::identity(n),
    };
    let rank = top_block_rank(&decompose(sys, &partition));
    let nonsingularity = sample_nonsingularity(
        sys,
        &cfg.nonsingular_primes,
        cfg.nonsingular_samples,
        cfg.seed,
    )?;
    let nonsingularity_summary = match nonsingularity.iter().find(|s| s.singular_zeros > 0) {
        Some(s) => format!("singular zero found mod {}", s.p),
        None => "no singularity found (sampled)".into(),
    };
    Ok(AnalyzeReport {
        schema: SCHEMA,
        system: sys.to_text(),
        n: Quantity::int(n as u64),
        profile: ProfileReport::from(&profile),
        birch,
        power_saving,
        power_saving_error,
        threshold,
        partition,
        top_block_rank: Quantity::int(rank as u64),
        nonsingularity,
        nonsingularity_summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    #[test]
    fn config_defaults_and_validation() {
        let cfg = RunConfig::from_json(r#"{"p_list": [100, 200], "seed": 9}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.h, 100);
        assert!(RunConfig::from_json(r#"{"p_list": [200, 100]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"h": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"box": {"lo": [0.5], "hi": [0.4]}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"unknown": 1}"#).is_err());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn obstructed_system_predicts_zero() {
        let sys = parse_system("vars 2\nx1^2 + x2^2").unwrap();
        let cfg = RunConfig {
            p_max: 5,
            ..RunConfig::default()
        };
        let pred = predict(&sys, &BoxRegion::default_for(2), 100, &cfg).unwrap();
        assert_eq!(pred.value.value, 0.0);
        let reason = pred.reason.unwrap();
        assert!(reason.contains("p=3 obstruction"), "{reason}");
    }

    #[test]
    fn doubling_p_scales_exactly() {
        let sys = parse_system("vars 3\nx1^2 + x2^2 - 2*x3^2").unwrap();
        let cfg = RunConfig {
            h: 20,
            p_max: 7,
            mc_samples: 20_000,
            ..RunConfig::default()
        };
        let pr = Predictor::new(&sys, &BoxRegion::default_for(3), &cfg).unwrap();
        let a = pr.at(100).value.value;
        let b = pr.at(200).value.value;
        assert!(a > 0.0);
        assert_eq!(b, a * 2.0);
    }
}
