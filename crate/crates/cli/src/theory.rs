//! Monte-Carlo suites behind `verify-theory`.

use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;

use smotelab::density::{
    boundary_check, boundary_coefficient, characteristic_distance_check, density_agreement, regeneration_distance,
    tail_bound_check, BinSpec, DensitySpec, UniformBall, UniformBox,
};
use smotelab::rng::{tag, Seed};
use smotelab::samplers::KRule;
use smotelab::specfun::binom_cdf;
use smotelab::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    #[value(name = "lemma3")]
    #[serde(rename = "lemma3")]
    ConditionalDensity,
    Tail,
    #[value(name = "corollary1")]
    #[serde(rename = "corollary1")]
    CharacteristicDistance,
    Boundary,
    Regeneration,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::ConditionalDensity, Suite::Tail, Suite::CharacteristicDistance, Suite::Boundary, Suite::Regeneration];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ConditionalDensity => "lemma3",
            Suite::Tail => "tail",
            Suite::CharacteristicDistance => "corollary1",
            Suite::Boundary => "boundary",
            Suite::Regeneration => "regeneration",
            Suite::All => "all",
        }
    }
}

/// Optional overrides shared by every suite.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Overrides {
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub draws: Option<usize>,
    pub trials: Option<usize>,
}

pub struct SuiteOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub details: Value,
    /// Rows of `suite,series,n,k,x,value,bound,standard_error`.
    pub curve_rows: Vec<String>,
}

fn row(suite: &str, series: &str, n: usize, k: usize, x: f64, value: f64, bound: f64, se: f64) -> String {
    let mut s = String::new();
    write!(s, "{suite},{series},{n},{k},{x:e},{value:.17e},{bound:.17e},{se:.17e}").expect("write to string");
    s
}

pub const CURVE_HEADER: &str = "suite,series,n,k,x,value,bound,standard_error";

pub fn run(suite: Suite, o: &Overrides, seed: Seed) -> Result<SuiteOutcome> {
    let seed = seed.derive(tag(suite.name()));
    match suite {
        Suite::ConditionalDensity => density_suite(o, seed),
        Suite::Tail => tail(o, seed),
        Suite::CharacteristicDistance => characteristic_suite(o, seed),
        Suite::Boundary => boundary(o, seed),
        Suite::Regeneration => regeneration(o, seed),
        Suite::All => unreachable!("expanded by the caller"),
    }
}

/// Quadrature density against literal conditional draws on `U([0,1]^d)`.
fn density_suite(o: &Overrides, seed: Seed) -> Result<SuiteOutcome> {
    let d = o.d.unwrap_or(1);
    let n = o.n.unwrap_or(50);
    let k = o.k.unwrap_or(5);
    let draws = o.draws.unwrap_or(1_000_000);
    let spec = UniformBox::cube(d, 0.0, 1.0)?;
    let bins = match d {
        1 => 50,
        2 => 16,
        _ => 6,
    };
    let grid = BinSpec::uniform(d, 0.0, 1.0, bins);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    for (i, c) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let x_c = vec![c; d];
        let a = density_agreement(&spec, &x_c, k, n, &grid, draws, true, seed.derive(i as u64))?;
        let mass_ok = a.quadrature_mass.map_or(true, |m| (m - 1.0).abs() <= 1e-3);
        let ok = a.fraction_within >= 0.95 && mass_ok;
        pass &= ok;
        for cell in 0..grid.cell_count() {
            if a.expected[cell].is_nan() {
                continue;
            }
            let (lo, hi) = grid.cell_bounds(cell);
            let mid = 0.5 * (lo[0] + hi[0]);
            rows.push(row("lemma3", &format!("observed x_c={c}"), n, k, mid, a.observed[cell], a.expected[cell], a.standard_error[cell]));
        }
        parts.push(json!({
            "x_c": x_c,
            "fraction_within": a.fraction_within,
            "compared": a.compared,
            "within": a.within,
            "quadrature_mass": a.quadrature_mass,
            "draws": a.draws,
            "pass": ok,
            "expected": a.expected,
            "observed": a.observed,
            "standard_error": a.standard_error,
        }));
    }
    Ok(SuiteOutcome {
        name: "lemma3",
        pass,
        details: json!({ "d": d, "n": n, "k": k, "bins_per_axis": bins, "agreements": parts }),
        curve_rows: rows,
    })
}

fn square_law(d: usize) -> Result<UniformBox> {
    UniformBox::cube(d, -3.0, 3.0)
}

/// Tail of `‖Z - X_c‖` at the centre of `U([-3,3]^d)`.
fn tail(o: &Overrides, seed: Seed) -> Result<SuiteOutcome> {
    let d = o.d.unwrap_or(2);
    let n = o.n.unwrap_or(10_000);
    let k = o.k.unwrap_or(5);
    let draws = o.draws.unwrap_or(100_000);
    let spec = square_law(d)?;
    let x_c = vec![0.0; d];
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (i, alpha) in [0.5, 1.0].into_iter().enumerate() {
        let r = tail_bound_check(alpha, &x_c, k, n, &spec, draws, seed.derive(i as u64))?;
        rows.push(row("tail", "exceedance", n, k, alpha, r.empirical, r.bound, r.standard_error));
        reports.push(r);
    }
    Ok(SuiteOutcome {
        name: "tail",
        pass: reports.iter().all(|r| r.pass),
        details: json!({ "d": d, "n": n, "k": k, "reports": reports }),
        curve_rows: rows,
    })
}

/// Characteristic-distance frequency on `U([-3,3]^d)` with γ = 1/4.
fn characteristic_suite(o: &Overrides, seed: Seed) -> Result<SuiteOutcome> {
    let d = o.d.unwrap_or(2);
    let n = o.n.unwrap_or(10_000);
    let ks = o.k.map_or(vec![5, 50], |k| vec![k]);
    let draws = o.draws.unwrap_or(100_000);
    let gamma = 0.25;
    let spec = square_law(d)?;
    let mut pass = true;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &k in &ks {
        let [plain, squared] = characteristic_distance_check(&spec, k, n, gamma, draws, seed.derive(k as u64))?;
        // only the distance form decides; the squared form is informational
        pass &= plain.pass;
        rows.push(row("corollary1", "distance", n, k, gamma, plain.empirical, plain.bound, plain.standard_error));
        rows.push(row("corollary1", "squared", n, k, gamma, squared.empirical, squared.bound, squared.standard_error));
        reports.push(json!({ "k": k, "distance": plain, "squared_distance": squared }));
    }
    Ok(SuiteOutcome {
        name: "corollary1",
        pass,
        details: json!({ "d": d, "n": n, "gamma": gamma, "reports": reports }),
        curve_rows: rows,
    })
}

/// Shell density near the boundary of the unit ball.
fn boundary(o: &Overrides, seed: Seed) -> Result<SuiteOutcome> {
    let d = o.d.unwrap_or(2);
    let n = o.n.unwrap_or(2000);
    let k = o.k.unwrap_or(200);
    let per_dataset = o.draws.unwrap_or(100_000);
    let datasets = o.trials.unwrap_or(20);
    let spec = UniformBall::new(d, 1.0)?;
    let eps = [1e-2, 1e-3, 1e-4];
    let reports = boundary_check(&spec, &eps, k, n, datasets, per_dataset, seed)?;
    let bounds_ok = reports.iter().all(|r| r.pass);
    let monotone = reports.windows(2).all(|w| w[1].empirical < w[0].empirical);
    let ball3 = UniformBall::new(3, 1.0)?;
    let coefficient = boundary_coefficient(3, ball3.density_bounds().1, 5);
    let coefficient_ok = (coefficient - 0.89).abs() <= 0.01;
    let rows = reports
        .iter()
        .zip(eps)
        .map(|(r, e)| row("boundary", "shell density", n, k, e, r.empirical, r.bound, r.standard_error))
        .collect();
    Ok(SuiteOutcome {
        name: "boundary",
        pass: bounds_ok && monotone && coefficient_ok,
        details: json!({
            "d": d,
            "n": n,
            "k": k,
            "datasets": datasets,
            "points_per_dataset": per_dataset,
            "reports": reports,
            "bounds_pass": bounds_ok,
            "decreasing_in_eps": monotone,
            "coefficient_d3_k5": coefficient,
            "coefficient_pass": coefficient_ok,
        }),
        curve_rows: rows,
    })
}

/// One-sided sign test: `P(S >= wins)` for `S ~ Bin(trials, 1/2)`.
pub fn sign_test(wins: usize, trials: usize) -> Result<f64> {
    if wins == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - binom_cdf(wins as u64 - 1, trials as u64, 0.5)?)
}

/// Energy distance between SMOTE output and the base law as `n` grows,
/// for a fixed K and for K = n/2.
fn regeneration(o: &Overrides, seed: Seed) -> Result<SuiteOutcome> {
    let d = o.d.unwrap_or(2);
    let k = o.k.unwrap_or(5);
    let trials = o.trials.unwrap_or(30);
    let n_list: Vec<usize> = match o.n {
        Some(n) => vec![n / 50, n / 5, n].into_iter().map(|v| v.max(2 * k + 2)).collect(),
        None => vec![100, 1000, 5000],
    };
    let spec = square_law(d)?;
    let fixed = regeneration_distance(&n_list, KRule::Fixed(k), &spec, trials, seed.derive(0))?;
    let half = regeneration_distance(&n_list, KRule::Fraction(0.5), &spec, trials, seed.derive(1))?;
    let (first, last) = (&fixed[0], &fixed[fixed.len() - 1]);
    let wins = first.per_trial.iter().zip(&last.per_trial).filter(|(a, b)| a > b).count();
    let p_value = sign_test(wins, trials)?;
    let decreasing = fixed.windows(2).all(|w| w[1].mean < w[0].mean) && p_value < 0.05;
    let separated = half[half.len() - 1].mean > last.mean;
    let mut rows = Vec::new();
    for (series, curve) in [("fixed", &fixed), ("half", &half)] {
        for p in curve.iter() {
            rows.push(row("regeneration", series, p.n, p.k, p.n as f64, p.mean, f64::NAN, p.standard_error));
        }
    }
    let summary = |c: &[smotelab::density::RegenerationPoint]| -> Vec<Value> {
        c.iter().map(|p| json!({ "n": p.n, "k": p.k, "mean": p.mean, "standard_error": p.standard_error })).collect()
    };
    Ok(SuiteOutcome {
        name: "regeneration",
        pass: decreasing && separated,
        details: json!({
            "d": d,
            "trials": trials,
            "fixed_k": summary(&fixed),
            "half_n": summary(&half),
            "sign_test_wins": wins,
            "sign_test_p": p_value,
            "fixed_k_decreasing": decreasing,
            "half_above_fixed": separated,
        }),
        curve_rows: rows,
    })
}
