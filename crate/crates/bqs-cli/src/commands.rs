//! The six subcommands: protocol runs and CSV sweeps.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use bqs_core::{
    bell_measure_fock, bqs_success_probability, eta1_analytic, eta3_analytic, herald_bqs,
    lossy_herald_fidelity, make_input, project_readout, run_protocol, run_protocol_lossy,
    w_success_distribution, HeraldPattern, InputSpec, LossConfig, ProtocolConfig,
};

use crate::config::{parse_grid, ConfigFile};
use crate::{CliError, InputArgs, InputKindArg, OutArgs};

fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get::<T>(key)?.unwrap_or(default)),
    }
}

fn resolve_input(args: &InputArgs, file: &ConfigFile) -> Result<InputSpec, CliError> {
    let kind = match args.input {
        Some(k) => k,
        None => match file.get::<String>("input")?.as_deref() {
            None => InputKindArg::Coherent,
            Some("coherent") => InputKindArg::Coherent,
            Some("fock") => InputKindArg::Fock,
            Some("custom") => InputKindArg::Custom,
            Some(other) => return Err(CliError::Config(format!("unknown input kind {other:?}"))),
        },
    };
    let mut spec = match kind {
        InputKindArg::Coherent => {
            let alpha_sq = resolve(args.alpha_sq, file, "alpha-sq", 1.0)?;
            if alpha_sq < 0.0 {
                return Err(CliError::Config(format!(
                    "alpha-sq must be non-negative, got {alpha_sq}"
                )));
            }
            InputSpec::coherent_mean(alpha_sq)
        }
        InputKindArg::Fock => InputSpec::fock(resolve(args.n, file, "n", 1)?),
        InputKindArg::Custom => {
            let coeffs = match &args.coeffs {
                Some(c) => c.clone(),
                None => file
                    .get_list::<f64>("coeffs")?
                    .ok_or_else(|| CliError::Config("custom input needs --coeffs".into()))?,
            };
            InputSpec::custom_real(&coeffs)
        }
    };
    let n_max = match args.n_max {
        Some(v) => Some(v),
        None => file.get::<u32>("n-max")?,
    };
    if let Some(n_max) = n_max {
        spec = spec.with_n_max(n_max);
    }
    Ok(spec)
}

fn write_output(out: &OutArgs, text: &str) -> Result<(), CliError> {
    match &out.out {
        Some(path) if path.as_os_str() != "-" => {
            std::fs::write(path, text)?;
            Ok(())
        }
        _ => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_csv(
    out: &OutArgs,
    timestamp: bool,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<(), CliError> {
    let mut text = String::new();
    if timestamp {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        text.push_str(&format!("# generated-at {stamp}\n"));
    }
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_output(out, &text)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn warn_on_tail(input: &InputSpec) -> Result<(), CliError> {
    let (_, tail) = input.coefficients().map_err(CliError::Core)?;
    if tail > input.tail_threshold() {
        eprintln!(
            "warning: truncation at n_max = {} discards weight {tail:.3e}",
            input.n_max()
        );
    }
    Ok(())
}

pub fn simulate(
    input_args: &InputArgs,
    iterations: Option<u32>,
    loss: Option<f64>,
    max_loss_events: Option<u32>,
    out: &OutArgs,
    file: &ConfigFile,
) -> Result<(), CliError> {
    let input = resolve_input(input_args, file)?;
    let iterations = resolve(iterations, file, "iterations", 2)?;
    let loss = match loss {
        Some(l) => l,
        None => file.get::<f64>("loss")?.unwrap_or(0.0),
    };
    if !(0.0..1.0).contains(&loss) {
        return Err(CliError::Config(format!(
            "loss probability {loss} outside [0, 1)"
        )));
    }
    warn_on_tail(&input)?;
    let config = ProtocolConfig::for_input(&input, iterations)?;
    let mut text = String::new();
    if loss > 0.0 {
        let cap = resolve(max_loss_events, file, "max-loss-events", 3)?;
        let loss_config = LossConfig::new(loss)?.with_max_loss_events(cap);
        let ensemble = run_protocol_lossy(&input, &config, &loss_config)?;
        for branch in &ensemble.branches {
            text.push_str(&format!(
                "# branch weight={} events={:?}\n",
                branch.weight, branch.events
            ));
            text.push_str(&branch.state.to_text());
        }
        text.push_str(&format!(
            "# truncated_weight={}\n",
            ensemble.truncated_weight
        ));
    } else {
        let state = run_protocol(&input, &config)?;
        text.push_str(&format!(
            "# n_max={} iterations={} norm={}\n",
            state.n_max(),
            iterations,
            state.norm()
        ));
        text.push_str(&state.to_text());
    }
    write_output(out, &text)
}

pub fn sweep_eta1(
    grid: Option<String>,
    out: &OutArgs,
    file: &ConfigFile,
    timestamp: bool,
) -> Result<(), CliError> {
    let grid = parse_grid(&resolve(grid, file, "grid", "0.1:10:0.1".into())?)?;
    let mut rows = Vec::with_capacity(grid.len());
    for alpha_sq in grid {
        if alpha_sq <= 0.0 {
            return Err(CliError::Config("alpha-sq grid values must be > 0".into()));
        }
        let input = InputSpec::coherent_mean(alpha_sq);
        let (coeffs, _) = input.coefficients().map_err(CliError::Core)?;
        let analytic = eta1_analytic(&coeffs);
        let state = run_protocol(&input, &ProtocolConfig::for_input(&input, 1)?)?;
        let simulated = project_readout(&state, HeraldPattern::ReadoutVAt(1))?.probability;
        rows.push(vec![
            fmt(alpha_sq),
            fmt(analytic),
            fmt(simulated),
            fmt((analytic - simulated).abs()),
        ]);
    }
    write_csv(
        out,
        timestamp,
        &["alpha_sq", "eta1_analytic", "eta1_simulated", "abs_diff"],
        rows,
    )
}

pub fn sweep_bqs(
    k_list: Option<Vec<u32>>,
    grid: Option<String>,
    out: &OutArgs,
    file: &ConfigFile,
    timestamp: bool,
) -> Result<(), CliError> {
    let k_list = match k_list {
        Some(k) => k,
        None => file.get_list::<u32>("k")?.unwrap_or_else(|| vec![1, 2, 3]),
    };
    let grid = parse_grid(&resolve(grid, file, "grid", "0.25:6:0.25".into())?)?;
    let mut rows = Vec::new();
    for &k in &k_list {
        for &alpha_sq in &grid {
            let input = InputSpec::coherent_mean(alpha_sq);
            let config = ProtocolConfig::for_input(&input, k + 1)?;
            let outcome = herald_bqs(&input, &config, k)?;
            let success = bqs_success_probability(&input, &config)?;
            let target = make_input(&InputSpec::fock(k))?;
            let fidelity = if outcome.probability > 0.0 {
                outcome.post_state.fidelity(&target)?
            } else {
                0.0
            };
            rows.push(vec![
                k.to_string(),
                fmt(alpha_sq),
                fmt(outcome.probability),
                fmt(success.probability),
                fmt(fidelity),
            ]);
        }
    }
    write_csv(
        out,
        timestamp,
        &["k", "alpha_sq", "eta2", "bqs_success", "fidelity_to_fock_k"],
        rows,
    )
}

pub fn fock_gen(
    k_list: Option<Vec<u32>>,
    grid: Option<String>,
    out: &OutArgs,
    file: &ConfigFile,
    timestamp: bool,
) -> Result<(), CliError> {
    let k_list = match k_list {
        Some(k) => k,
        None => file
            .get_list::<u32>("k")?
            .unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
    };
    let grid = parse_grid(&resolve(grid, file, "grid", "0:6:0.25".into())?)?;
    let mut rows = Vec::new();
    for &k in &k_list {
        if k == 0 {
            return Err(CliError::Config("fock-gen needs k >= 1".into()));
        }
        // The closed form |C_{k−1}|²/(2k) is cheap, so search it over the
        // whole grid and simulate only the winner.
        let mut best = (0.0f64, f64::NAN);
        for &alpha_sq in &grid {
            let input = InputSpec::coherent_mean(alpha_sq);
            let (coeffs, _) = input.coefficients().map_err(CliError::Core)?;
            let eta = eta3_analytic(&coeffs, k);
            if best.1.is_nan() || eta > best.0 {
                best = (eta, alpha_sq);
            }
        }
        let (eta3, alpha_opt) = best;
        let input = InputSpec::coherent_mean(alpha_opt);
        let outcome = bell_measure_fock(&input, &ProtocolConfig::for_input(&input, k + 1)?, k)?;
        let target = make_input(&InputSpec::fock(k))?;
        let fidelity = outcome.post_state.fidelity(&target)?;
        rows.push(vec![
            k.to_string(),
            fmt(alpha_opt),
            fmt(eta3),
            fmt(outcome.probability),
            fmt(fidelity),
        ]);
    }
    write_csv(
        out,
        timestamp,
        &[
            "k",
            "alpha_sq_opt",
            "eta3_analytic",
            "eta3_simulated",
            "fidelity",
        ],
        rows,
    )
}

pub fn w_dist(
    input_args: &InputArgs,
    iterations: Option<u32>,
    out: &OutArgs,
    file: &ConfigFile,
    timestamp: bool,
) -> Result<(), CliError> {
    let input = if input_args.input.is_none()
        && input_args.alpha_sq.is_none()
        && input_args.n.is_none()
        && input_args.coeffs.is_none()
    {
        let mut defaulted = input_args.clone();
        defaulted.alpha_sq = Some(resolve(None, file, "alpha-sq", 5.0)?);
        resolve_input(&defaulted, file)?
    } else {
        resolve_input(input_args, file)?
    };
    let iterations = resolve(iterations, file, "iterations", 10)?;
    warn_on_tail(&input)?;
    let config = ProtocolConfig::for_input(&input, iterations)?;
    let dist = w_success_distribution(&input, &config)?;
    let top = iterations.min(input.n_max() + 1);
    let mut rows = Vec::new();
    let mut cumulative = 0.0;
    for size in 3..=top.max(3) {
        let p = dist.probabilities.get(&size).copied().unwrap_or(0.0);
        cumulative += p;
        rows.push(vec![size.to_string(), fmt(p), fmt(cumulative)]);
    }
    write_csv(out, timestamp, &["M", "probability", "cumulative"], rows)
}

#[allow(clippy::too_many_arguments)]
pub fn loss_scan(
    input_args: &InputArgs,
    iterations: Option<u32>,
    k: Option<u32>,
    grid: Option<String>,
    max_loss_events: Option<u32>,
    out: &OutArgs,
    file: &ConfigFile,
    timestamp: bool,
) -> Result<(), CliError> {
    let input = if input_args.input.is_none()
        && input_args.alpha_sq.is_none()
        && input_args.n.is_none()
        && input_args.coeffs.is_none()
    {
        let mut defaulted = input_args.clone();
        defaulted.alpha_sq = Some(resolve(None, file, "alpha-sq", 0.02)?);
        resolve_input(&defaulted, file)?
    } else {
        resolve_input(input_args, file)?
    };
    let iterations = resolve(iterations, file, "iterations", 3)?;
    let k = resolve(k, file, "k", 3)?;
    if k == 0 || k > iterations {
        return Err(CliError::Config(format!(
            "herald position k = {k} outside 1..={iterations}"
        )));
    }
    let cap = resolve(max_loss_events, file, "max-loss-events", 3)?;
    let grid = parse_grid(&resolve(grid, file, "grid", "0:0.05:0.01".into())?)?;
    let config = ProtocolConfig::for_input(&input, iterations)?;
    let target = make_input(&InputSpec::fock(k))?;
    // Dominant low-mean path: k pulse photons in each repetition after
    // the first, so k(k−1) loss-sensitive passes.
    let exponent = i32::try_from(k * (k - 1)).expect("small exponent");
    let mut rows = Vec::with_capacity(grid.len());
    for &l in &grid {
        let loss = LossConfig::new(l)?.with_max_loss_events(cap);
        let (herald_prob, fidelity) = lossy_herald_fidelity(
            &input,
            &config,
            &loss,
            HeraldPattern::ReadoutVAt(k),
            &target,
        )?;
        let law = (1.0 - l).powi(exponent);
        rows.push(vec![
            fmt(l),
            fmt(herald_prob),
            fmt(fidelity),
            fmt(law),
            fmt((fidelity - law).abs() / law),
        ]);
    }
    write_csv(
        out,
        timestamp,
        &[
            "L",
            "herald_prob",
            "fidelity",
            "power_law_prediction",
            "rel_err",
        ],
        rows,
    )
}
