//! Subcommand implementations. Each returns `Ok(())` or a [`CliError`] whose
//! variant fixes the exit code.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use serde::Serialize;

use mrokit::json::to_pretty_string;
use mrokit::oracles::{erm, DirectOracle, ErmOracle, ErmRequest, PrecomputedOracle};
use mrokit::risk::{empirical_regret_report, empirical_risk, RegretReport};
use mrokit::scenarios::bandit::BanditScenario;
use mrokit::scenarios::example2::{Example2, DEFAULT_EPSILON};
use mrokit::scenarios::prop1::Prop1;
use mrokit::scenarios::rates::write_records;
use mrokit::scenarios::{rate_sweep, Instance, RateSweepResult, Scenario};
use mrokit::solver::{Game, GameSolution, Mode, Objective, DEFAULT_ROUNDS};
use mrokit::{validate_dataset, Dataset, Hypothesis};

use crate::config::{self, BanditConfig, OracleKind, RatesConfig, SolveConfig};
use crate::error::CliError;

/// Tolerance of the self-checking reproduce command.
pub const REPRODUCE_TOLERANCE: f64 = 1e-9;

fn out_dir(flag: Option<PathBuf>, config: Option<PathBuf>) -> PathBuf {
    flag.or(config).unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)?;
    debug!("wrote {}", path.display());
    Ok(())
}

fn write_csv_report(path: &Path, report: &RegretReport) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    report.write_csv(&mut w).map_err(CliError::solver)?;
    w.flush()?;
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    to_pretty_string(value).map_err(CliError::solver)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    seed: u64,
    /// How the payoff range `B` behind the default step size was formed.
    payoff_range_rule: &'static str,
    renormalized: bool,
    column_means: &'a [f64],
    #[serde(flatten)]
    solution: &'a GameSolution,
}

pub fn solve(config_path: &Path, data_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: SolveConfig = config::load(config_path)?;
    cfg.class.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.rounds == 0 {
        return Err(CliError::Config("T must be at least 1".into()));
    }
    if let Some(eta) = cfg.eta {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(CliError::Config(format!("eta must be finite and >= 0, got {eta}")));
        }
    }
    let seed = seed.unwrap_or(cfg.seed);
    let dir = out_dir(out, cfg.out.clone());
    config::ensure_writable(&dir, &["solution.json", "report.csv"])?;

    let file =
        File::open(data_path).map_err(|e| CliError::Dataset(format!("cannot open {}: {e}", data_path.display())))?;
    let raw = Dataset::read_jsonl(BufReader::new(file), &cfg.family).map_err(|e| CliError::Dataset(e.to_string()))?;
    let validated =
        validate_dataset(&raw, &cfg.family, cfg.renormalize).map_err(|e| CliError::Dataset(e.to_string()))?;
    cfg.class
        .check_compatible(&validated.dataset)
        .map_err(|e| CliError::Dataset(e.to_string()))?;
    info!(
        "loaded {} samples, {} weights from {}",
        validated.dataset.len(),
        validated.family.len(),
        data_path.display()
    );

    let dataset = &validated.dataset;
    let oracle: Box<dyn ErmOracle + '_> = match cfg.oracle {
        OracleKind::Precomputed => Box::new(
            PrecomputedOracle::new(dataset, cfg.loss, cfg.class.clone())
                .map_err(|e| CliError::Config(e.to_string()))?,
        ),
        OracleKind::Direct => Box::new(
            DirectOracle::new(dataset, cfg.loss, cfg.class.clone()).map_err(|e| CliError::Config(e.to_string()))?,
        ),
    };
    let objective = Objective {
        mode: cfg.objective,
        scaling: cfg.scaling.clone(),
    };
    let game =
        Game::new(dataset, &validated.family, oracle.as_ref(), &cfg.loss, objective).map_err(CliError::solver)?;
    let solution = game.solve(cfg.rounds, cfg.eta).map_err(CliError::solver)?;
    let report = empirical_regret_report(
        &solution.best_iterate_hypothesis,
        dataset,
        &cfg.loss,
        &solution.per_weight_baselines,
    )
    .map_err(CliError::solver)?;
    info!(
        "best iterate {} with worst-case payoff {:e}, gap certificate {:e}",
        solution.best_iterate, solution.best_iterate_value, solution.gap_certificate
    );

    let output = SolveOutput {
        seed,
        payoff_range_rule: "loss.bound * max_w B_w / c_w",
        renormalized: validated.report.renormalized,
        column_means: &validated.report.column_means,
        solution: &solution,
    };
    write_file(&dir.join("solution.json"), &json(&output)?)?;
    write_csv_report(&dir.join("report.csv"), &report)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    expected: f64,
    got: f64,
    ok: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn value(&mut self, name: impl Into<String>, expected: f64, got: f64) {
        let ok = (expected - got).abs() <= REPRODUCE_TOLERANCE;
        self.0.push(Check {
            name: name.into(),
            expected,
            got,
            ok,
        });
    }

    fn finish(self, path: &Path) -> (Vec<Check>, Result<(), CliError>) {
        let failed: Vec<&Check> = self.0.iter().filter(|c| !c.ok).collect();
        for c in &self.0 {
            info!(
                "{} expected {} got {} {}",
                c.name,
                c.expected,
                c.got,
                if c.ok { "ok" } else { "MISMATCH" }
            );
        }
        let outcome = if failed.is_empty() {
            Ok(())
        } else {
            let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
            Err(CliError::Mismatch(format!(
                "{} of {} checks failed ({}); see {}",
                failed.len(),
                self.0.len(),
                names.join(", "),
                path.display()
            )))
        };
        (self.0, outcome)
    }
}

#[derive(Serialize)]
struct Selection {
    /// Exact minimizer over the finite class.
    selection: String,
    value: f64,
    /// Exact pure minimax reported by the game solver.
    game_pure_minimax: String,
    /// Best iterate of the game dynamics; may differ from the pure minimax
    /// when the optimal mixture avoids it.
    game_best_iterate: String,
    game_gap_certificate: f64,
}

#[derive(Serialize)]
struct Reproduction {
    fixture: &'static str,
    hypotheses: Vec<String>,
    weights: Vec<String>,
    /// `risk[f][w]`.
    risk: Vec<Vec<f64>>,
    regret: Vec<Vec<f64>>,
    mro: Selection,
    dro: Selection,
    checks: Vec<Check>,
    passed: bool,
}

fn risk_table(instance: &Instance) -> Result<Vec<Vec<f64>>, CliError> {
    let members = instance.class.members().map_err(CliError::solver)?;
    members
        .iter()
        .map(|h| {
            (0..instance.dataset.num_weights())
                .map(|w| empirical_risk(h, w, &instance.dataset, &instance.loss))
                .collect::<mrokit::Result<Vec<f64>>>()
        })
        .collect::<mrokit::Result<Vec<_>>>()
        .map_err(CliError::solver)
}

fn regret_table(risk: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = risk[0].len();
    let mins: Vec<f64> = (0..m)
        .map(|w| risk.iter().map(|r| r[w]).fold(f64::INFINITY, f64::min))
        .collect();
    risk.iter()
        .map(|r| r.iter().zip(&mins).map(|(v, lo)| v - lo).collect())
        .collect()
}

fn game_selection(instance: &Instance, mode: Mode) -> Result<GameSolution, CliError> {
    let oracle =
        PrecomputedOracle::new(&instance.dataset, instance.loss, instance.class.clone()).map_err(CliError::solver)?;
    let objective = match mode {
        Mode::Dro => Objective::dro(),
        _ => Objective::mro(),
    };
    Game::new(&instance.dataset, &instance.family, &oracle, &instance.loss, objective)
        .and_then(|g| g.solve(DEFAULT_ROUNDS, None))
        .map_err(CliError::solver)
}

fn pure_selection(table: &[Vec<f64>]) -> (usize, f64) {
    let worst: Vec<f64> = table
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut best = 0;
    for i in 1..worst.len() {
        if worst[i] < worst[best] {
            best = i;
        }
    }
    (best, worst[best])
}

pub fn reproduce(fixture: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let dir = out_dir(out, None);
    let file_name = format!("{fixture}.json");
    let (instance, names, golden_risk, golden_mro, golden_dro) = match fixture {
        "prop1" => (
            Prop1::exact_twin(),
            vec!["0.3".to_string(), "0.6".to_string()],
            vec![vec![0.04, 0.29], vec![0.25, 0.26]],
            (0usize, 0.03),
            (1usize, 0.26),
        ),
        "example2" => {
            let e = Example2::new(DEFAULT_EPSILON).map_err(CliError::solver)?;
            (
                e.twin().map_err(CliError::solver)?,
                vec!["f_1".to_string(), "f_2".to_string(), "f_3".to_string()],
                vec![vec![0.0, 1.0], vec![0.5, 0.9], vec![0.5 + DEFAULT_EPSILON, 0.4]],
                (1usize, 0.5),
                (2usize, 0.5 + DEFAULT_EPSILON),
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown fixture `{other}` (expected prop1 or example2)"
            )))
        }
    };
    config::ensure_writable(&dir, &[&file_name])?;
    let path = dir.join(&file_name);

    let risk = risk_table(&instance)?;
    let regret = regret_table(&risk);
    let mut checks = Checks::default();
    for (f, row) in golden_risk.iter().enumerate() {
        for (w, &expected) in row.iter().enumerate() {
            checks.value(
                format!("risk[{}][{}]", names[f], instance.dataset.weight_names()[w]),
                expected,
                risk[f][w],
            );
        }
    }
    if fixture == "example2" {
        for (f, expected) in [0.0, 0.5, 0.5 + DEFAULT_EPSILON].into_iter().enumerate() {
            checks.value(format!("regret[{}][p1]", names[f]), expected, regret[f][0]);
        }
        for (f, expected) in [0.6, 0.5, 0.0].into_iter().enumerate() {
            checks.value(format!("regret[{}][p2]", names[f]), expected, regret[f][1]);
        }
    }

    let (mro_index, mro_value) = pure_selection(&regret);
    let (dro_index, dro_value) = pure_selection(&risk);
    checks.value("mro_selection", golden_mro.0 as f64, mro_index as f64);
    checks.value("mro_worst_case_regret", golden_mro.1, mro_value);
    checks.value("dro_selection", golden_dro.0 as f64, dro_index as f64);
    checks.value("dro_worst_case_risk", golden_dro.1, dro_value);

    let mro_game = game_selection(&instance, Mode::Mro)?;
    let dro_game = game_selection(&instance, Mode::Dro)?;
    let index_of = |h: &Hypothesis| h.index().unwrap_or(usize::MAX);
    let pure_of = |s: &GameSolution| s.pure_minimax.map_or(usize::MAX, |p| p.index);
    checks.value("mro_game_pure_minimax", golden_mro.0 as f64, pure_of(&mro_game) as f64);
    checks.value("dro_game_pure_minimax", golden_dro.0 as f64, pure_of(&dro_game) as f64);

    let label = |i: usize| names.get(i).cloned().unwrap_or_else(|| "?".into());
    let weights = instance.dataset.weight_names().to_vec();
    let (checks, result) = checks.finish(&path);
    let passed = result.is_ok();
    let reproduction = Reproduction {
        fixture: if fixture == "prop1" { "prop1" } else { "example2" },
        hypotheses: names.clone(),
        weights,
        risk,
        regret,
        mro: Selection {
            selection: label(mro_index),
            value: mro_value,
            game_pure_minimax: label(pure_of(&mro_game)),
            game_best_iterate: label(index_of(&mro_game.best_iterate_hypothesis)),
            game_gap_certificate: mro_game.gap_certificate,
        },
        dro: Selection {
            selection: label(dro_index),
            value: dro_value,
            game_pure_minimax: label(pure_of(&dro_game)),
            game_best_iterate: label(index_of(&dro_game.best_iterate_hypothesis)),
            game_gap_certificate: dro_game.gap_certificate,
        },
        checks,
        passed,
    };
    write_file(&path, &json(&reproduction)?)?;
    println!(
        "{fixture}: MRO selects {}, DRO selects {}",
        reproduction.mro.selection, reproduction.dro.selection
    );
    result
}

#[derive(Serialize)]
struct RatesSummary<'a> {
    #[serde(flatten)]
    result: &'a RateSweepResult,
    #[serde(rename = "T")]
    rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    in_target: Option<bool>,
}

pub fn rates(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: RatesConfig = config::load(config_path)?;
    let plan = cfg.plan(seed.unwrap_or(cfg.seed));
    plan.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if let Some([lo, hi]) = cfg.target_interval {
        if !(lo <= hi) {
            return Err(CliError::Config(format!("target interval [{lo}, {hi}] is empty")));
        }
    }
    let scenario = cfg
        .scenario
        .instantiate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out_dir(out, cfg.out.clone());
    config::ensure_writable(&dir, &["rates.csv", "rates_summary.json", "rates_partial.csv"])?;
    info!(
        "sweeping {} over n = {:?} with {} replicates",
        scenario.name(),
        plan.n_grid,
        plan.replicates
    );

    let result = match rate_sweep(scenario.as_ref(), &plan) {
        Ok(r) => r,
        Err(failure) => {
            let mut w = BufWriter::new(File::create(dir.join("rates_partial.csv"))?);
            write_records(&failure.completed, &mut w).map_err(CliError::solver)?;
            w.flush()?;
            return Err(CliError::solver(failure));
        }
    };
    let mut w = BufWriter::new(File::create(dir.join("rates.csv"))?);
    result.write_csv(&mut w).map_err(CliError::solver)?;
    w.flush()?;

    let in_target = cfg
        .target_interval
        .map(|[lo, hi]| (lo..=hi).contains(&result.fitted_slope));
    let summary = RatesSummary {
        result: &result,
        rounds: plan.rounds,
        target_interval: cfg.target_interval,
        in_target,
    };
    write_file(&dir.join("rates_summary.json"), &json(&summary)?)?;
    match cfg.target_interval {
        Some([lo, hi]) => println!(
            "fitted slope {:.4} (target [{lo}, {hi}]: {})",
            result.fitted_slope,
            if in_target == Some(true) { "inside" } else { "outside" }
        ),
        None => println!("fitted slope {:.4}", result.fitted_slope),
    }
    Ok(())
}

#[derive(Serialize)]
struct MethodResult {
    hypothesis: Hypothesis,
    report: RegretReport,
}

#[derive(Serialize)]
struct Comparison {
    mro_worst_case_regret: f64,
    erm_worst_case_regret: f64,
    gap_certificate: f64,
    /// `mro ≤ erm + gap_certificate`.
    holds: bool,
}

#[derive(Serialize)]
struct BanditOutput {
    n: usize,
    seed: u64,
    #[serde(rename = "T")]
    rounds: usize,
    eta: f64,
    weight_bounds: Vec<f64>,
    erm: MethodResult,
    mro: MethodResult,
    mixture_value: f64,
    gap_certificate: f64,
    comparison: Comparison,
}

pub fn bandit(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let cfg: BanditConfig = config::load(config_path)?;
    let seed = seed.unwrap_or(cfg.seed);
    if cfg.n == 0 || cfg.rounds == 0 {
        return Err(CliError::Config("n and T must be at least 1".into()));
    }
    let scenario = BanditScenario::new(cfg.scenario.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out_dir(out, cfg.out.clone());
    config::ensure_writable(&dir, &["bandit.json", "bandit_erm.csv", "bandit_mro.csv"])?;
    let instance = scenario
        .build(cfg.n, seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (dataset, loss) = (&instance.dataset, &instance.loss);

    let oracle = PrecomputedOracle::new(dataset, *loss, instance.class.clone()).map_err(CliError::solver)?;
    let game = Game::new(dataset, &instance.family, &oracle, loss, Objective::mro()).map_err(CliError::solver)?;
    let solution = game.solve(cfg.rounds, cfg.eta).map_err(CliError::solver)?;
    let baselines = &solution.per_weight_baselines;

    let ones = vec![1.0; dataset.len()];
    let erm_h = erm(&ErmRequest::new(&ones, dataset, loss, &instance.class)).map_err(CliError::solver)?;
    let erm_report = empirical_regret_report(&erm_h, dataset, loss, baselines).map_err(CliError::solver)?;
    let mro_h = solution.best_iterate_hypothesis.clone();
    let mro_report = empirical_regret_report(&mro_h, dataset, loss, baselines).map_err(CliError::solver)?;

    let holds = mro_report.worst_case_regret <= erm_report.worst_case_regret + solution.gap_certificate;
    println!(
        "worst-case policy regret: ERM {:.6e}, MRO {:.6e} (gap certificate {:.3e})",
        erm_report.worst_case_regret, mro_report.worst_case_regret, solution.gap_certificate
    );
    write_csv_report(&dir.join("bandit_erm.csv"), &erm_report)?;
    write_csv_report(&dir.join("bandit_mro.csv"), &mro_report)?;
    let output = BanditOutput {
        n: cfg.n,
        seed,
        rounds: cfg.rounds,
        eta: solution.eta,
        weight_bounds: instance.family.bounds().to_vec(),
        comparison: Comparison {
            mro_worst_case_regret: mro_report.worst_case_regret,
            erm_worst_case_regret: erm_report.worst_case_regret,
            gap_certificate: solution.gap_certificate,
            holds,
        },
        erm: MethodResult {
            hypothesis: erm_h,
            report: erm_report,
        },
        mro: MethodResult {
            hypothesis: mro_h,
            report: mro_report,
        },
        mixture_value: solution.mixture_value,
        gap_certificate: solution.gap_certificate,
    };
    write_file(&dir.join("bandit.json"), &json(&output)?)?;
    Ok(())
}
