//! Monte Carlo scenarios: planted sparse factors, correlated design and
//! noise, SNR calibration and the evaluation metrics.

use nalgebra::{Cholesky, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_factorize, Mat};
use crate::par::Execution;
use crate::solver::{FactorTriple, Problem, SolverConfig};
use crate::tuning::{grid_search, TuningGrid};

const U_PATTERN: [f64; 8] = [1.0, -1.0, 1.0, -1.0, 0.5, -0.5, 0.5, -0.5];
const V_PATTERN: [f64; 4] = [1.0, -1.0, 0.5, -0.5];

/// Generator stream for the design matrix; noise uses [`NOISE_STREAM`].
const DESIGN_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Matrix norm used on both sides of the SNR ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnrNorm {
    /// Operator 2-norm.
    Spectral,
    #[default]
    Frobenius,
}

impl SnrNorm {
    pub fn norm(self, m: &Mat) -> f64 {
        match self {
            SnrNorm::Frobenius => m.norm(),
            SnrNorm::Spectral => m
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    /// `δᵢⱼ = ρ^|i−j|` for the noise covariance.
    pub rho_noise: f64,
    /// `f64::INFINITY` gives noiseless data.
    #[serde(with = "finite_or_inf")]
    pub snr: f64,
    pub snr_norm: SnrNorm,
    pub seed: u64,
}

/// JSON has no infinity; write it as the string `"inf"`.
mod finite_or_inf {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() && *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

impl ScenarioSpec {
    /// Preset cases 1–4 at the given true rank.
    pub fn case(case: u8, r: usize, seed: u64) -> Result<Self> {
        let (p, q, rho) = match case {
            1 => (80, 50, 0.3),
            2 => (80, 50, 0.5),
            3 => (120, 60, 0.3),
            4 => (120, 60, 0.5),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "case must be 1, 2, 3 or 4, got {case}"
                )))
            }
        };
        Ok(Self {
            n: 400,
            p,
            q,
            r,
            rho_noise: rho,
            snr: 0.5,
            snr_norm: SnrNorm::default(),
            seed,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// A validated scenario with its planted truth and design covariance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub truth: FactorTriple,
    /// `Γ` with `γᵢⱼ = 0.5^|i−j|`.
    pub gamma_x: Mat,
    gamma_half: Mat,
    gamma_chol: Mat,
    delta_chol: Mat,
}

fn toeplitz_power(dim: usize, base: f64) -> Mat {
    Mat::from_fn(dim, dim, |i, j| base.powi(i.abs_diff(j) as i32))
}

fn cholesky_factor(m: Mat, what: &str) -> Result<Mat> {
    Cholesky::new(m)
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidArgument(format!("{what} covariance is not positive definite")))
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::InvalidArgument(format!("n must be >= 2, got {}", spec.n)));
        }
        if !(0.0..1.0).contains(&spec.rho_noise) {
            return Err(Error::InvalidArgument(format!(
                "rho_noise must lie in [0, 1), got {}",
                spec.rho_noise
            )));
        }
        if !(spec.snr > 0.0) {
            return Err(Error::InvalidArgument(format!("snr must be positive, got {}", spec.snr)));
        }
        let truth = make_truth(spec.p, spec.q, spec.r)?;
        let gamma_x = toeplitz_power(spec.p, 0.5);
        let gamma_half = spd_factorize(&gamma_x, 0.0)?.sqrt().clone();
        let gamma_chol = cholesky_factor(gamma_x.clone(), "design")?;
        let delta_chol = cholesky_factor(toeplitz_power(spec.q, spec.rho_noise), "noise")?;
        Ok(Self {
            spec,
            truth,
            gamma_x,
            gamma_half,
            gamma_chol,
            delta_chol,
        })
    }

    /// Same design, another seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            spec: self.spec.with_seed(seed),
            ..self.clone()
        }
    }

    /// `Γ^{1/2}`.
    pub fn gamma_half(&self) -> &Mat {
        &self.gamma_half
    }

    /// [`er_xc`] with the cached `Γ^{1/2}`.
    pub fn er_xc(&self, c_hat: &Mat) -> f64 {
        er_xc_with_half(c_hat, &self.truth.coefficient(), &self.gamma_half, self.spec.n, self.spec.q)
    }
}

/// Planted factors: shifted copies of the fixed `u` and `v` patterns
/// (strides 5 and 4), unit-normalised, with `d_k = 5 + 0.1(k−1)`.
pub fn make_truth(p: usize, q: usize, r: usize) -> Result<FactorTriple> {
    if r == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    let need_p = 5 * (r - 1) + 8;
    if p < need_p {
        return Err(Error::InvalidArgument(format!(
            "rank {r} needs p >= 5(r-1)+8 = {need_p}, got p = {p}"
        )));
    }
    if q < 4 * r {
        return Err(Error::InvalidArgument(format!(
            "rank {r} needs q >= 4r = {}, got q = {q}",
            4 * r
        )));
    }
    let u_norm = U_PATTERN.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v_norm = V_PATTERN.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut u = Mat::zeros(p, r);
    let mut v = Mat::zeros(q, r);
    for k in 0..r {
        for (i, x) in U_PATTERN.iter().enumerate() {
            u[(5 * k + i, k)] = x / u_norm;
        }
        for (i, x) in V_PATTERN.iter().enumerate() {
            v[(4 * k + i, k)] = x / v_norm;
        }
    }
    let d = DVector::from_fn(r, |k, _| 5.0 + 0.1 * k as f64);
    FactorTriple::new(u, d, v)
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `rows × chol.nrows()` matrix whose rows are `N(0, chol·cholᵀ)`.
fn correlated_rows(rng: &mut ChaCha8Rng, rows: usize, chol: &Mat) -> Mat {
    let dim = chol.nrows();
    let mut z = Mat::zeros(rows, dim);
    for i in 0..rows {
        for j in 0..dim {
            z[(i, j)] = StandardNormal.sample(rng);
        }
    }
    z * chol.transpose()
}

/// Noise scaled so that `‖d_r X u_r v_rᵀ‖ / ‖E‖ = snr` in the chosen norm.
///
/// Rows of the unit-scale draw are `N(0, Δ)`. An infinite `snr` returns
/// `σ = 0` and `E = 0`.
pub fn calibrate_sigma(
    x: &Mat,
    truth: &FactorTriple,
    rho_noise: f64,
    snr: f64,
    norm: SnrNorm,
    seed: u64,
) -> Result<(f64, Mat)> {
    let r = truth.rank();
    if r == 0 {
        return Err(Error::InvalidArgument("truth must have rank >= 1".into()));
    }
    if x.ncols() != truth.u.nrows() {
        return Err(Error::dim(
            "calibrate_sigma",
            format!("X has {} cols, U has {} rows", x.ncols(), truth.u.nrows()),
        ));
    }
    let (n, q) = (x.nrows(), truth.v.nrows());
    if snr.is_infinite() {
        return Ok((0.0, Mat::zeros(n, q)));
    }
    let delta_chol = cholesky_factor(toeplitz_power(q, rho_noise), "noise")?;
    Ok(scaled_noise(x, truth, &delta_chol, snr, norm, seed))
}

fn scaled_noise(x: &Mat, truth: &FactorTriple, delta_chol: &Mat, snr: f64, norm: SnrNorm, seed: u64) -> (f64, Mat) {
    let r = truth.rank();
    let e0 = correlated_rows(&mut seeded(seed, NOISE_STREAM), x.nrows(), delta_chol);
    let signal = (x * truth.u.column(r - 1)) * (truth.v.column(r - 1).transpose() * truth.d[r - 1]);
    let sigma = norm.norm(&signal) / (snr * norm.norm(&e0));
    (sigma, e0 * sigma)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Mat,
    pub y: Mat,
    pub e: Mat,
    pub sigma: f64,
    pub seed: u64,
}

/// Draw `X` with rows `N(0, Γ)` and `Y = XC + E`.
pub fn generate(scenario: &Scenario) -> Result<Dataset> {
    let spec = &scenario.spec;
    let x = correlated_rows(&mut seeded(spec.seed, DESIGN_STREAM), spec.n, &scenario.gamma_chol);
    let (sigma, e) = if spec.snr.is_infinite() {
        (0.0, Mat::zeros(spec.n, spec.q))
    } else {
        scaled_noise(&x, &scenario.truth, &scenario.delta_chol, spec.snr, spec.snr_norm, spec.seed)
    };
    let y = &x * scenario.truth.coefficient() + &e;
    Ok(Dataset {
        x,
        y,
        e,
        sigma,
        seed: spec.seed,
    })
}

/// `‖Γ^{1/2}(Ĉ − C)‖_F² / (nq)`.
pub fn er_xc(c_hat: &Mat, c_true: &Mat, gamma_x: &Mat, n: usize, q: usize) -> Result<f64> {
    if c_hat.shape() != c_true.shape() || gamma_x.shape() != (c_true.nrows(), c_true.nrows()) {
        return Err(Error::dim(
            "er_xc",
            format!(
                "C_hat {:?}, C {:?}, Gamma {:?}",
                c_hat.shape(),
                c_true.shape(),
                gamma_x.shape()
            ),
        ));
    }
    let half = spd_factorize(gamma_x, 0.0)?;
    Ok(er_xc_with_half(c_hat, c_true, half.sqrt(), n, q))
}

fn er_xc_with_half(c_hat: &Mat, c_true: &Mat, half: &Mat, n: usize, q: usize) -> f64 {
    (half * (c_hat - c_true)).norm_squared() / (n * q) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    /// Sum of the `U` and `V` recall fractions (perfect recovery gives 2).
    pub recall: f64,
    /// Sum of the `U` and `V` precision fractions.
    pub precision: f64,
    /// `2·recall·precision/(recall + precision)` on the summed fractions.
    pub f_measure: f64,
    /// Same formula with each sum halved, so perfect recovery gives 1.
    pub f_measure_halved: f64,
}

fn aligned_nonzero(est: &Mat, i: usize, j: usize) -> bool {
    j < est.ncols() && est[(i, j)] != 0.0
}

/// Support recall/precision with estimated columns matched to true columns
/// by position; missing estimated columns count as zero and surplus ones
/// are ignored.
pub fn support_metrics(u_hat: &Mat, v_hat: &Mat, u_true: &Mat, v_true: &Mat) -> Result<SupportMetrics> {
    if u_hat.nrows() != u_true.nrows() || v_hat.nrows() != v_true.nrows() || u_true.ncols() != v_true.ncols()
    {
        return Err(Error::dim(
            "support_metrics",
            format!(
                "U_hat {:?}, V_hat {:?}, U {:?}, V {:?}",
                u_hat.shape(),
                v_hat.shape(),
                u_true.shape(),
                v_true.shape()
            ),
        ));
    }
    // (true support, estimated support, overlap)
    let count = |est: &Mat, truth: &Mat| {
        let mut c = (0usize, 0usize, 0usize);
        for j in 0..truth.ncols() {
            for i in 0..truth.nrows() {
                let t = truth[(i, j)] != 0.0;
                let e = aligned_nonzero(est, i, j);
                c.0 += t as usize;
                c.1 += e as usize;
                c.2 += (t && e) as usize;
            }
        }
        c
    };
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let (ut, ue, uo) = count(u_hat, u_true);
    let (vt, ve, vo) = count(v_hat, v_true);
    let recall = ratio(uo, ut) + ratio(vo, vt);
    let precision = ratio(uo, ue) + ratio(vo, ve);
    let f = |r: f64, p: f64| if r + p == 0.0 { 0.0 } else { 2.0 * r * p / (r + p) };
    let precision_defined = ue > 0 && ve > 0;
    let f_measure = if precision_defined { f(recall, precision) } else { 0.0 };
    Ok(SupportMetrics {
        recall,
        precision,
        f_measure,
        f_measure_halved: f_measure / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSettings {
    pub grid: TuningGrid,
    pub solver: SolverConfig,
    /// Rank passed to the solver; defaults to the scenario's true rank.
    pub fit_rank: Option<usize>,
    pub execution: Execution,
}

impl Default for ReplicateSettings {
    fn default() -> Self {
        Self {
            grid: TuningGrid::default(),
            solver: SolverConfig::default(),
            fit_rank: None,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub selected_rank: Option<usize>,
    pub rank_error: Option<usize>,
    pub er_xc: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
    pub f_measure_halved: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub bic: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub er_xc: f64,
    /// Sample standard deviation (zero for a single replicate).
    pub er_xc_sd: f64,
    pub f_measure: f64,
    pub f_measure_halved: f64,
    pub recall: f64,
    pub precision: f64,
    pub er_rank: f64,
    /// Replicates that produced a fit.
    pub replicates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub summary: MetricsSummary,
    pub rows: Vec<ReplicateRow>,
}

fn run_one(template: &Scenario, i: usize, settings: &ReplicateSettings) -> ReplicateRow {
    let seed = template.spec.seed.wrapping_add(i as u64);
    let mut row = ReplicateRow {
        replicate: i,
        seed,
        sigma: None,
        selected_rank: None,
        rank_error: None,
        er_xc: None,
        recall: None,
        precision: None,
        f_measure: None,
        f_measure_halved: None,
        lambda1: None,
        lambda2: None,
        bic: None,
        converged: None,
        error: None,
    };
    let scenario = template.reseeded(seed);
    let result = generate(&scenario).and_then(|data| {
        row.sigma = Some(data.sigma);
        let problem = Problem::new(data.x, data.y)?;
        let rank = settings.fit_rank.unwrap_or(scenario.spec.r);
        grid_search(&problem, rank, &settings.grid, &settings.solver, settings.execution)
    });
    match result {
        Ok(report) => {
            let fit = &report.best_fit;
            let rank = fit.factors.rank();
            let support = support_metrics(&fit.factors.u, &fit.factors.v, &scenario.truth.u, &scenario.truth.v)
                .expect("shapes agree by construction");
            row.selected_rank = Some(rank);
            row.rank_error = Some(rank.abs_diff(scenario.spec.r));
            row.er_xc = Some(scenario.er_xc(&fit.factors.coefficient()));
            row.recall = Some(support.recall);
            row.precision = Some(support.precision);
            row.f_measure = Some(support.f_measure);
            row.f_measure_halved = Some(support.f_measure_halved);
            row.lambda1 = Some(report.best_cell().lambda1);
            row.lambda2 = Some(report.best_cell().lambda2);
            row.bic = Some(fit.bic);
            row.converged = Some(fit.converged);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Replicate `i` uses seed `base + i`; each is generated, tuned over the
/// grid and scored. Failed replicates are counted, not averaged.
pub fn run_replicates(template: &Scenario, k: usize, settings: &ReplicateSettings) -> Result<ReplicateReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    settings.grid.validate()?;
    settings.solver.validate()?;
    let idx: Vec<usize> = (0..k).collect();
    let rows = settings.execution.map(&idx, |_, &i| run_one(template, i, settings));
    let ok: Vec<&ReplicateRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    if ok.is_empty() {
        return Err(Error::AllReplicatesFailed {
            replicates: k,
            first: rows[0].error.clone().unwrap_or_default(),
        });
    }
    let pick = |f: fn(&ReplicateRow) -> Option<f64>| ok.iter().map(|r| f(r).expect("successful row")).collect::<Vec<_>>();
    let er = pick(|r| r.er_xc);
    let er_mean = mean(&er);
    let er_sd = if er.len() > 1 {
        (er.iter().map(|x| (x - er_mean).powi(2)).sum::<f64>() / (er.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let summary = MetricsSummary {
        er_xc: er_mean,
        er_xc_sd: er_sd,
        f_measure: mean(&pick(|r| r.f_measure)),
        f_measure_halved: mean(&pick(|r| r.f_measure_halved)),
        recall: mean(&pick(|r| r.recall)),
        precision: mean(&pick(|r| r.precision)),
        er_rank: mean(&pick(|r| r.rank_error.map(|e| e as f64))),
        replicates: ok.len(),
        failures: k - ok.len(),
    };
    Ok(ReplicateReport { summary, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_rank_one_normalisation() {
        let t = make_truth(8, 4, 1).unwrap();
        let want: Vec<f64> = U_PATTERN.iter().map(|x| x / 5f64.sqrt()).collect();
        assert_eq!(t.u.column(0).as_slice(), want.as_slice());
        assert_eq!(t.d[0], 5.0);
    }

    #[test]
    fn truth_v_blocks_are_disjoint() {
        let t = make_truth(18, 12, 3).unwrap();
        for k in 0..3 {
            for i in 0..12 {
                assert_eq!(t.v[(i, k)] != 0.0, i / 4 == k, "row {i} col {k}");
            }
        }
        assert!((t.d[2] - 5.2).abs() < 1e-15);
    }

    #[test]
    fn truth_u_gram_matches_direct_overlaps() {
        let t = make_truth(30, 20, 4).unwrap();
        let gram = t.u.transpose() * &t.u;
        // u_k and u_{k+1} overlap on 3 entries: pattern[5..8] · pattern[0..3]
        let overlap: f64 = (0..3).map(|i| U_PATTERN[5 + i] * U_PATTERN[i]).sum::<f64>() / 5.0;
        for k in 0..4 {
            assert!((gram[(k, k)] - 1.0).abs() < 1e-15);
            if k + 1 < 4 {
                assert!((gram[(k, k + 1)] - overlap).abs() < 1e-15);
                assert!(gram[(k, k + 1)] != 0.0);
            }
            if k + 2 < 4 {
                assert_eq!(gram[(k, k + 2)], 0.0);
            }
        }
    }

    #[test]
    fn truth_rejects_small_dimensions() {
        assert!(make_truth(17, 12, 3).is_err());
        assert!(make_truth(18, 11, 3).is_err());
        assert!(make_truth(18, 12, 0).is_err());
    }

    fn small(snr: f64, norm: SnrNorm, seed: u64) -> Scenario {
        Scenario::new(ScenarioSpec {
            n: 60,
            p: 18,
            q: 12,
            r: 3,
            rho_noise: 0.3,
            snr,
            snr_norm: norm,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let s = small(0.5, SnrNorm::Frobenius, 3);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        let c = generate(&s.reseeded(4)).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn achieved_snr_is_exact() {
        for norm in [SnrNorm::Spectral, SnrNorm::Frobenius] {
            for seed in 0..20 {
                let s = small(0.5, norm, seed);
                let d = generate(&s).unwrap();
                let t = &s.truth;
                let signal = (&d.x * t.u.column(2)) * (t.v.column(2).transpose() * t.d[2]);
                let achieved = norm.norm(&signal) / norm.norm(&d.e);
                assert!((achieved - 0.5).abs() < 1e-12, "{norm:?} seed {seed}: {achieved}");
            }
        }
    }

    #[test]
    fn calibrate_sigma_matches_generate_and_scales() {
        let s = small(0.5, SnrNorm::Spectral, 9);
        let d = generate(&s).unwrap();
        let (sigma, e) = calibrate_sigma(&d.x, &s.truth, 0.3, 0.5, SnrNorm::Spectral, 9).unwrap();
        assert!((sigma - d.sigma).abs() <= 1e-12 * sigma);
        assert!((&e - &d.e).norm() <= 1e-12 * e.norm());
        let (sigma2, _) = calibrate_sigma(&d.x, &s.truth, 0.3, 1.0, SnrNorm::Spectral, 9).unwrap();
        assert!((sigma2 - sigma / 2.0).abs() <= 1e-12 * sigma);
    }

    #[test]
    fn rank_one_spectral_signal_norm() {
        let s = small(0.5, SnrNorm::Spectral, 10);
        let d = generate(&s).unwrap();
        let t = &s.truth;
        let xu = &d.x * t.u.column(2);
        let signal = &xu * (t.v.column(2).transpose() * t.d[2]);
        assert!((SnrNorm::Spectral.norm(&signal) - t.d[2] * xu.norm()).abs() < 1e-9);
    }

    #[test]
    fn infinite_snr_is_noiseless() {
        let s = small(f64::INFINITY, SnrNorm::Spectral, 5);
        let d = generate(&s).unwrap();
        assert_eq!(d.sigma, 0.0);
        assert_eq!(d.y, &d.x * s.truth.coefficient());
    }

    #[test]
    fn design_covariance_converges() {
        let s = Scenario::new(ScenarioSpec {
            n: 10_000,
            p: 8,
            q: 4,
            r: 1,
            rho_noise: 0.0,
            snr: f64::INFINITY,
            snr_norm: SnrNorm::Spectral,
            seed: 77,
        })
        .unwrap();
        let d = generate(&s).unwrap();
        let cov = d.x.transpose() * &d.x / 10_000.0;
        assert!((cov - &s.gamma_x).amax() < 0.05);
    }

    #[test]
    fn er_xc_examples() {
        let c = Mat::from_fn(4, 3, |i, j| (i + 2 * j) as f64);
        let g = toeplitz_power(4, 0.5);
        assert_eq!(er_xc(&c, &c, &g, 10, 3).unwrap(), 0.0);
        let ones = &c + Mat::from_element(4, 3, 1.0);
        let v = er_xc(&ones, &c, &Mat::identity(4, 4), 10, 3).unwrap();
        assert!((v - 4.0 / 10.0).abs() < 1e-14);
        assert!(er_xc(&ones, &c, &g, 10, 3).unwrap() > 0.0);
        assert!(er_xc(&Mat::zeros(3, 3), &c, &g, 10, 3).is_err());
    }

    #[test]
    fn support_metric_conventions() {
        let t = make_truth(18, 12, 3).unwrap();
        let perfect = support_metrics(&t.u, &t.v, &t.u, &t.v).unwrap();
        assert_eq!((perfect.recall, perfect.precision, perfect.f_measure), (2.0, 2.0, 2.0));
        assert_eq!(perfect.f_measure_halved, 1.0);
        let zero = support_metrics(&Mat::zeros(18, 3), &Mat::zeros(12, 3), &t.u, &t.v).unwrap();
        assert_eq!(zero.f_measure, 0.0);
        // rank-deficient estimate: missing third column counts as zero
        let partial = support_metrics(&t.u.columns(0, 2).into_owned(), &t.v.columns(0, 2).into_owned(), &t.u, &t.v)
            .unwrap();
        assert!((partial.recall - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(partial.precision, 2.0);
    }

    #[test]
    fn noiseless_single_replicate_is_exact() {
        let s = Scenario::new(ScenarioSpec {
            n: 100,
            p: 18,
            q: 12,
            r: 3,
            rho_noise: 0.3,
            snr: f64::INFINITY,
            snr_norm: SnrNorm::Spectral,
            seed: 1,
        })
        .unwrap();
        let settings = ReplicateSettings {
            grid: TuningGrid {
                lambda_min: 1e-15,
                lambda_max: 1e-9,
                points_per_axis: 2,
            },
            execution: Execution::Sequential,
            ..ReplicateSettings::default()
        };
        let report = run_replicates(&s, 1, &settings).unwrap();
        assert_eq!(report.summary.er_rank, 0.0);
        assert!(report.summary.er_xc <= 1e-6, "{}", report.summary.er_xc);
        assert_eq!(report.summary.failures, 0);
    }
}
