use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use entangle_coord::adversary::{self, AttackReport};
use entangle_coord::analysis::{self, BoundRow, LengthBound, ReconcileReport};
use entangle_coord::protocol::{self, BatchSummary, NoiseModel, MAX_ACTION_BITS};
use entangle_coord::seed::derive_seed;
use entangle_coord::VERSION;

use crate::args::{AttackArgs, AttackName, BoundArgs, Cli, Command, NicdArgs, ReconcileArgs, RunArgs};
use crate::report::{Report, ReportEnvelope, Table, SCHEMA_ID};
use crate::{internal, CliError};

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Run(args) => run(args),
        Command::Attack(args) => attack(args),
        Command::Bound(args) => bound(args),
        Command::Nicd(args) => nicd(args),
        Command::Reconcile(args) => reconcile(args),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(internal)
}

fn envelope(command: &str, parameters: Value, seed: u64, results: Value) -> ReportEnvelope {
    let Value::Object(parameters) = parameters else { unreachable!("parameters are built as objects") };
    ReportEnvelope { schema: SCHEMA_ID, command: command.to_string(), parameters, seed, results, version: VERSION }
}

fn check_bits(bits: usize) -> Result<()> {
    if bits == 0 || bits > MAX_ACTION_BITS {
        return Err(usage(format!("--bits must be in 1..={MAX_ACTION_BITS}, got {bits}")));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<Report> {
    check_bits(args.bits)?;
    check_trials(args.trials)?;
    if args.agents < 2 {
        return Err(usage(format!("--agents must be at least 2, got {}", args.agents)));
    }
    let noise = NoiseModel { flip_prob: args.eps, misalign_alice: args.theta_a, misalign_bob: args.theta_b, ..NoiseModel::noiseless() };
    noise.validate().map_err(|e| usage(e.to_string()))?;
    let seed = args.seed.seed;

    let parameters = json!({
        "bits": args.bits,
        "eps": args.eps,
        "theta_a": args.theta_a,
        "theta_b": args.theta_b,
        "trials": args.trials,
        "agents": args.agents,
        "records": args.records,
        "noise_carrier": noise.carrier,
    });

    let mut results = Map::new();
    let summary = if args.agents == 2 {
        let runs = protocol::run_batch(args.bits, &noise, seed, args.trials).map_err(internal)?;
        let mut table = Table::new(&[
            "trial",
            "seed",
            "alice_bits",
            "bob_bits",
            "alice_action_number",
            "bob_action_number",
            "agree",
            "strike",
        ]);
        for (t, r) in runs.iter().enumerate() {
            table.push([
                t.to_string(),
                r.seed.to_string(),
                r.alice_bits.to_string(),
                r.bob_bits.to_string(),
                r.alice_action_number.to_string(),
                r.bob_action_number.to_string(),
                r.agree.to_string(),
                r.strike.clone(),
            ]);
        }
        if args.records {
            results.insert("records".into(), to_value(&runs)?);
        }
        (BatchSummary::from_runs(args.bits, &runs), table)
    } else {
        let runs = protocol::run_multiagent_batch(args.agents, args.bits, &noise, seed, args.trials).map_err(internal)?;
        let mut table = Table::new(&["trial", "seed", "agent_bits", "action_numbers", "all_agree", "strike"]);
        for (t, r) in runs.iter().enumerate() {
            let bits: Vec<String> = r.agent_bits.iter().map(ToString::to_string).collect();
            let numbers: Vec<String> = r.action_numbers.iter().map(ToString::to_string).collect();
            table.push([
                t.to_string(),
                r.seed.to_string(),
                bits.join(";"),
                numbers.join(";"),
                r.all_agree.to_string(),
                r.strike.clone(),
            ]);
        }
        if args.records {
            results.insert("records".into(), to_value(&runs)?);
        }
        (BatchSummary::from_multi_runs(args.bits, args.agents, &runs), table)
    };
    let (summary, table) = summary;

    let noiseless = args.eps == 0.0 && args.theta_a == args.theta_b;
    if noiseless && summary.agreement_rate != 1.0 {
        return Err(CliError::Internal(format!("noiseless agreement rate {}", summary.agreement_rate)));
    }

    let mut ordered = Map::new();
    ordered.insert("summary".into(), to_value(&summary)?);
    ordered.extend(results);
    Ok(Report { envelope: envelope("run", parameters, seed, Value::Object(ordered)), table })
}

fn attack(args: &AttackArgs) -> Result<Report> {
    check_bits(args.bits)?;
    check_trials(args.trials)?;
    if args.eve_first && args.kind != AttackName::Ghz {
        return Err(usage("--eve-first only applies to the ghz attack"));
    }
    if args.target_bit.is_some() && args.kind != AttackName::Wolf {
        return Err(usage("--target-bit only applies to the wolf attack"));
    }
    let target_bit = args.target_bit.unwrap_or(0);
    if target_bit > 1 {
        return Err(usage(format!("--target-bit must be 0 or 1, got {target_bit}")));
    }
    let seed = args.seed.seed;
    let name = name_of(args.kind);
    let report: AttackReport = match args.kind {
        AttackName::Ghz => adversary::eve_ghz_attack(args.bits, args.trials, args.eve_first, seed),
        AttackName::W => adversary::eve_w_attack(args.bits, args.trials, seed),
        AttackName::Biseparable => adversary::biseparable_attack(args.bits, args.trials, seed),
        AttackName::Wolf => adversary::wolf_cnot_attack(args.bits, args.trials, target_bit, seed),
    }
    .map_err(internal)?;

    match args.kind {
        AttackName::Ghz if report.eavesdrop_success_rate != 1.0 => {
            return Err(CliError::Internal("GHZ eavesdropping fell short of certainty".into()));
        }
        AttackName::Wolf if target_bit == 0 && report.fidelity.is_none_or(|f| (f - 1.0).abs() > 1e-12) => {
            return Err(CliError::Internal("Wolf's copy is not a GHZ triple".into()));
        }
        _ => {}
    }

    let mut parameters = json!({ "kind": name, "bits": args.bits, "trials": args.trials });
    if args.kind == AttackName::Ghz {
        parameters["eve_first"] = json!(args.eve_first);
    }
    if args.kind == AttackName::Wolf {
        parameters["target_bit"] = json!(target_bit);
    }

    let mut table = Table::new(&["trial", "attacker_bits", "alice_bits", "bob_bits"]);
    for (t, ((x, a), b)) in report.attacker_bits().iter().zip(&report.alice_bits).zip(&report.bob_bits).enumerate() {
        table.push([t.to_string(), x.to_string(), a.to_string(), b.to_string()]);
    }
    Ok(Report { envelope: envelope("attack", parameters, seed, to_value(&report)?), table })
}

fn name_of(kind: AttackName) -> &'static str {
    match kind {
        AttackName::Ghz => "ghz",
        AttackName::W => "w",
        AttackName::Biseparable => "biseparable",
        AttackName::Wolf => "wolf",
    }
}

fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = grid.split(':').collect();
    let bad = || usage(format!("--grid expects LO:HI:STEPS, got {grid:?}"));
    let [lo, hi, steps] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let steps: usize = steps.parse().map_err(|_| bad())?;
    match steps {
        0 => Err(bad()),
        1 => Ok(vec![lo]),
        n => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn bound(args: &BoundArgs) -> Result<Report> {
    let eps_values = match &args.source.grid {
        Some(grid) => parse_grid(grid)?,
        None => args.source.eps.clone(),
    };
    let mut rows: Vec<BoundRow> = Vec::with_capacity(eps_values.len());
    for &eps in &eps_values {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(usage(format!("every eps must lie in (0, 0.5], got {eps}")));
        }
        let row = match analysis::shannon_length_bound(eps).map_err(internal)? {
            LengthBound::Finite(row) => row,
            LengthBound::Unbounded => return Err(CliError::Internal(format!("eps {eps} reported unbounded"))),
        };
        let n = row.max_error_free_length as f64;
        if !(n < row.raw_bound && row.raw_bound <= n + 1.0) {
            return Err(CliError::Internal(format!("bound row {row:?} violates its bracket")));
        }
        rows.push(row);
    }
    let mut table = Table::new(&["eps", "entropy", "raw_bound", "max_error_free_length"]);
    for r in &rows {
        table.push([r.eps.to_string(), r.entropy.to_string(), r.raw_bound.to_string(), r.max_error_free_length.to_string()]);
    }
    let parameters = match &args.source.grid {
        Some(grid) => json!({ "grid": grid, "eps": eps_values }),
        None => json!({ "eps": eps_values }),
    };
    Ok(Report { envelope: envelope("bound", parameters, 0, to_value(&rows)?), table })
}

fn nicd(args: &NicdArgs) -> Result<Report> {
    if args.m == 0 || args.m > analysis::NICD_MAX_M {
        return Err(usage(format!("--m must be in 1..={}, got {}", analysis::NICD_MAX_M, args.m)));
    }
    if let Some(eps) = args.eps.iter().find(|e| !(0.0..=0.5).contains(*e)) {
        return Err(usage(format!("every eps must lie in [0, 0.5], got {eps}")));
    }
    let certify = args.certify || args.eps.len() > 1;
    if certify && args.m > 3 {
        return Err(usage("certificates need exhaustive search, m ≤ 3"));
    }
    let parameters = json!({ "m": args.m, "eps": args.eps, "certify": certify });

    if certify {
        let cert = analysis::nicd_no_improvement_certificate(args.m, &args.eps).map_err(internal)?;
        if !cert.all_pass {
            return Err(CliError::Internal("a distillation pair exceeded 1 − 2ε".into()));
        }
        let mut table =
            Table::new(&["m", "eps", "max_correlation", "bound", "passes", "dictator_attains", "search_size", "achiever"]);
        for r in &cert.rows {
            table.push([
                r.m.to_string(),
                r.eps.to_string(),
                r.max_correlation.to_string(),
                r.bound.to_string(),
                r.passes.to_string(),
                r.dictator_attains.to_string(),
                r.search_size.to_string(),
                r.achiever.clone(),
            ]);
        }
        return Ok(Report { envelope: envelope("nicd", parameters, 0, to_value(&cert)?), table });
    }

    let result = analysis::nicd_max_correlation(args.m, args.eps[0]).map_err(internal)?;
    if result.max_correlation > 1.0 - 2.0 * result.eps + 1e-9 {
        return Err(CliError::Internal(format!("correlation {} exceeds 1 − 2ε", result.max_correlation)));
    }
    let mut table = Table::new(&[
        "m",
        "eps",
        "max_agreement",
        "max_correlation",
        "search_size",
        "dictator_attains",
        "achiever_f",
        "achiever_g",
        "achiever",
    ]);
    table.push([
        result.m.to_string(),
        result.eps.to_string(),
        result.max_agreement.to_string(),
        result.max_correlation.to_string(),
        result.search_size.to_string(),
        result.dictator_attains.to_string(),
        result.achiever.f.clone(),
        result.achiever.g.clone(),
        result.achiever.description.clone(),
    ]);
    Ok(Report { envelope: envelope("nicd", parameters, 0, to_value(&result)?), table })
}

#[derive(Debug, Serialize)]
struct ReconcileAggregate {
    trials: u64,
    n: usize,
    eps: f64,
    success_rate: f64,
    mean_errors_before: f64,
    mean_errors_after: f64,
    mean_disclosed_bits: f64,
    /// Mean `disclosed_bits / n`.
    mean_disclosed_fraction: f64,
    /// `H(ε)`, the least leakage per bit any reconciliation can achieve.
    shannon_fraction: f64,
    block_sizes: Vec<usize>,
}

fn reconcile(args: &ReconcileArgs) -> Result<Report> {
    check_bits(args.bits)?;
    check_trials(args.trials)?;
    if !(args.eps > 0.0 && args.eps <= 0.5) {
        return Err(usage(format!("--eps must lie in (0, 0.5], got {}", args.eps)));
    }
    let seed = args.seed.seed;
    let noise = NoiseModel::flips(args.eps);
    let reports: Vec<(u64, ReconcileReport)> = (0..args.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, t);
            let run = protocol::run_protocol(args.bits, &noise, trial_seed).map_err(internal)?;
            let out = analysis::reconcile(&run.alice_bits, &run.bob_bits, args.eps, trial_seed).map_err(internal)?;
            if out.report.success != (out.alice == out.bob) || out.report.errors_after > out.report.errors_before {
                return Err(CliError::Internal(format!("reconciliation report inconsistent on trial {t}")));
            }
            Ok((trial_seed, out.report))
        })
        .collect::<Result<_>>()?;

    let count = reports.len() as f64;
    let mean = |f: fn(&ReconcileReport) -> usize| reports.iter().map(|(_, r)| f(r) as f64).sum::<f64>() / count;
    let mean_disclosed_bits = mean(|r| r.disclosed_bits);
    let aggregate = ReconcileAggregate {
        trials: args.trials,
        n: args.bits,
        eps: args.eps,
        success_rate: mean(|r| r.success as usize),
        mean_errors_before: mean(|r| r.errors_before),
        mean_errors_after: mean(|r| r.errors_after),
        mean_disclosed_bits,
        mean_disclosed_fraction: mean_disclosed_bits / args.bits as f64,
        shannon_fraction: analysis::binary_entropy(args.eps).map_err(internal)?,
        block_sizes: reports[0].1.block_sizes.clone(),
    };

    let mut table = Table::new(&[
        "trial",
        "seed",
        "n",
        "errors_before",
        "errors_after",
        "disclosed_bits",
        "passes",
        "success",
    ]);
    for (t, (s, r)) in reports.iter().enumerate() {
        table.push([
            t.to_string(),
            s.to_string(),
            r.n.to_string(),
            r.errors_before.to_string(),
            r.errors_after.to_string(),
            r.disclosed_bits.to_string(),
            r.passes.to_string(),
            r.success.to_string(),
        ]);
    }

    let mut results = Map::new();
    results.insert("aggregate".into(), to_value(&aggregate)?);
    if args.records {
        let records: Vec<&ReconcileReport> = reports.iter().map(|(_, r)| r).collect();
        results.insert("records".into(), to_value(&records)?);
    }
    let parameters = json!({ "bits": args.bits, "eps": args.eps, "trials": args.trials, "records": args.records });
    Ok(Report { envelope: envelope("reconcile", parameters, seed, Value::Object(results)), table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:0.5:5").unwrap(), vec![0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        assert_eq!(parse_grid("0.2:0.4:1").unwrap(), vec![0.2]);
        assert!(parse_grid("0.1:0.5").is_err());
        assert!(parse_grid("0.1:0.5:0").is_err());
        assert!(parse_grid("a:0.5:3").is_err());
    }
}
