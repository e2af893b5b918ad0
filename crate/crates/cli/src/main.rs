//! Command-line front end: subcommand dispatch, JSON-config merging, and
//! deterministic CSV/JSON emission for the library's outputs.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numerical contract
//! violation (the violated invariant is named in a machine-readable JSON
//! record on stderr). Numbers in CSV are printed with 17 significant digits
//! so they round-trip f64 exactly; repeated runs with the same
//! configuration and seed are byte-identical.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qeom_core::amp_mod::{eom_apply, eom_one_photon, preset, EomPreset};
use qeom_core::mode_space::{make_lattice, ModeOcc, OccKey, Port, TwoPortState};
use qeom_core::phase_mod::{carson_band, SidebandSpectrum, ToneConfig};
use qeom_core::qkd::{run_session, SessionConfig};
use qeom_core::quantum_channel::block_decompose;
use qeom_core::wavepacket::{
    g1_correlation, hom_coincidences, modulate_wavepacket, DriveSignal, TimeGrid, Wavepacket,
};

#[derive(Parser)]
#[command(
    name = "qeom",
    about = "Quantum scattering models of electro-optic modulators",
    version
)]
struct Cli {
    /// JSON configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output path ("-" for stdout).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Single-tone classical sideband spectrum C_n.
    Sidebands(SidebandsArgs),
    /// Port-resolved sideband powers of a preset amplitude modulator.
    Eom(EomArgs),
    /// Hong-Ou-Mandel coincidence densities with a step-modulated photon.
    Hom(HomArgs),
    /// Monte Carlo frequency-coded QKD session.
    Qkd(QkdArgs),
    /// Photon-number block weights and eigenvalue summaries of the
    /// modulation channel.
    Kraus(KrausArgs),
    /// First-order coherence between modulator output ports.
    Correlate(CorrelateArgs),
    /// Amplitude-modulate a wavepacket; emits output and radiated envelopes.
    Wavepacket(WavepacketArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sidebands(_) => "sidebands",
            Command::Eom(_) => "eom",
            Command::Hom(_) => "hom",
            Command::Qkd(_) => "qkd",
            Command::Kraus(_) => "kraus",
            Command::Correlate(_) => "correlate",
            Command::Wavepacket(_) => "wavepacket",
        }
    }
}

macro_rules! merge_opt {
    ($cli:expr, $file:expr, $($field:ident),+ $(,)?) => {
        $( if $cli.$field.is_none() { $cli.$field = $file.$field.clone(); } )+
    };
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct SidebandsArgs {
    /// Modulation index m.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    /// RF phase theta (rad).
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Bias phase phi_B (rad).
    #[arg(long, allow_negative_numbers = true)]
    phi_b: Option<f64>,
    /// Largest |offset| to emit; defaults to Carson's band plus 2.
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct EomArgs {
    /// Preset: dsb_quadrature | ssb_lower_suppressed | ssb_upper_suppressed.
    #[arg(long)]
    preset: Option<String>,
    /// Modulation index m of both arms.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Largest |offset| to emit; defaults to Carson's band plus 2.
    #[arg(long)]
    offset_max: Option<usize>,
    /// Emit the classical modulation matrix m_ab(t) over one RF period
    /// instead of the quantum sideband table.
    #[arg(long)]
    classical: Option<bool>,
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct HomArgs {
    /// Gaussian packet rms width (s).
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Phase step height (rad) applied to the trailing edge.
    #[arg(long, allow_negative_numbers = true)]
    alpha_step: Option<f64>,
    /// Time of the phase step (s).
    #[arg(long, allow_negative_numbers = true)]
    step_time: Option<f64>,
    /// First detection time t1 (s); t2 sweeps the grid.
    #[arg(long, allow_negative_numbers = true)]
    t1: Option<f64>,
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct QkdArgs {
    /// Number of trials.
    #[arg(long)]
    trials: Option<u64>,
    /// RNG seed (mandatory: stochastic runs never use wall-clock seeds).
    #[arg(long)]
    seed: Option<u64>,
    /// Send rates for (+1, -1, +2, -2), comma separated; default uniform.
    #[arg(long)]
    rates: Option<String>,
    /// Force Bob's basis to 1 or 2 instead of sampling it.
    #[arg(long)]
    force_basis: Option<u8>,
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct KrausArgs {
    /// Preset: dsb_quadrature | ssb_lower_suppressed | ssb_upper_suppressed.
    #[arg(long)]
    preset: Option<String>,
    /// Modulation index m of both arms.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Photons in the carrier-mode input (1 or 2).
    #[arg(long)]
    photons: Option<u32>,
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct CorrelateArgs {
    /// Preset: dsb_quadrature | ssb_lower_suppressed | ssb_upper_suppressed.
    #[arg(long)]
    preset: Option<String>,
    /// Modulation index m of both arms.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Gaussian packet rms width (s).
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// First sample time (s).
    #[arg(long, allow_negative_numbers = true)]
    t1: Option<f64>,
    /// Second sample time (s).
    #[arg(long, allow_negative_numbers = true)]
    t2: Option<f64>,
    /// First output port (1 or 2).
    #[arg(long)]
    port_a: Option<u8>,
    /// Second output port (1 or 2).
    #[arg(long)]
    port_b: Option<u8>,
}

#[derive(Args, Deserialize, Serialize, Clone, Default)]
#[serde(deny_unknown_fields)]
struct WavepacketArgs {
    /// Input packet file (.csv or .json); omit to use a Gaussian.
    #[arg(long)]
    input: Option<String>,
    /// Gaussian packet rms width (s), used when no input file is given.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Preset: dsb_quadrature | ssb_lower_suppressed | ssb_upper_suppressed.
    #[arg(long)]
    preset: Option<String>,
    /// Modulation index m of both arms.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Drive tone in spectral bins of the packet grid.
    #[arg(long)]
    tone_bins: Option<usize>,
}

/// On-disk configuration mirror of the command line.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<String>,
    out: Option<String>,
    format: Option<String>,
    #[serde(default)]
    params: serde_json::Value,
}

enum CliError {
    Config(String),
    Contract(qeom_core::Error),
}

impl From<qeom_core::Error> for CliError {
    fn from(e: qeom_core::Error) -> Self {
        CliError::Contract(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn parse_preset(name: &str) -> CliResult<EomPreset> {
    match name {
        "dsb_quadrature" => Ok(EomPreset::DsbQuadrature),
        "ssb_lower_suppressed" => Ok(EomPreset::SsbLowerSuppressed),
        "ssb_upper_suppressed" => Ok(EomPreset::SsbUpperSuppressed),
        other => config_err(format!(
            "unknown preset `{other}` (expected dsb_quadrature, ssb_lower_suppressed \
             or ssb_upper_suppressed)"
        )),
    }
}

fn parse_port(p: u8) -> CliResult<Port> {
    Port::from_index(p).map_or_else(|| config_err(format!("port must be 1 or 2, got {p}")), Ok)
}

fn require<T: Clone>(v: &Option<T>, name: &str) -> CliResult<T> {
    v.clone()
        .map_or_else(|| config_err(format!("missing required parameter `{name}`")), Ok)
}

/// 17 significant digits: round-trips any f64.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            let record = serde_json::json!({ "kind": "config", "error": msg });
            eprintln!("{record}");
            ExitCode::from(2)
        }
        Err(CliError::Contract(err)) => {
            let record = serde_json::json!({ "kind": "contract", "error": err.to_string() });
            eprintln!("{record}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config `{path}`: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config `{path}`: {e}")))?
        }
        None => FileConfig::default(),
    };

    let params = if file.params.is_null() {
        serde_json::json!({})
    } else {
        file.params.clone()
    };
    let bad = |e: serde_json::Error| CliError::Config(format!("bad params: {e}"));

    // Resolve the subcommand: a config file may supply it, the command line
    // wins, and a mismatch between the two is rejected.
    let command = match (cli.command, &file.subcommand) {
        (Some(cmd), Some(name)) if cmd.name() != name => {
            return config_err(format!(
                "config file selects `{name}` but the command line says `{}`",
                cmd.name()
            ));
        }
        (Some(cmd), _) => cmd,
        (None, Some(name)) => match name.as_str() {
            "sidebands" => Command::Sidebands(SidebandsArgs::default()),
            "eom" => Command::Eom(EomArgs::default()),
            "hom" => Command::Hom(HomArgs::default()),
            "qkd" => Command::Qkd(QkdArgs::default()),
            "kraus" => Command::Kraus(KrausArgs::default()),
            "correlate" => Command::Correlate(CorrelateArgs::default()),
            "wavepacket" => Command::Wavepacket(WavepacketArgs::default()),
            other => return config_err(format!("unknown subcommand `{other}` in config")),
        },
        (None, None) => {
            return config_err("no subcommand given (command line or config file)");
        }
    };

    // Fill unset flags from the file parameters (strict: unknown keys fail).
    let command = if cli.config.is_some() {
        match command {
            Command::Sidebands(mut a) => {
                let f: SidebandsArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, m, theta, phi_b, n_max);
                Command::Sidebands(a)
            }
            Command::Eom(mut a) => {
                let f: EomArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, preset, m, offset_max, classical);
                Command::Eom(a)
            }
            Command::Hom(mut a) => {
                let f: HomArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, sigma, alpha_step, step_time, t1);
                Command::Hom(a)
            }
            Command::Qkd(mut a) => {
                let f: QkdArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, trials, seed, rates, force_basis);
                Command::Qkd(a)
            }
            Command::Kraus(mut a) => {
                let f: KrausArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, preset, m, photons);
                Command::Kraus(a)
            }
            Command::Correlate(mut a) => {
                let f: CorrelateArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, preset, m, sigma, t1, t2, port_a, port_b);
                Command::Correlate(a)
            }
            Command::Wavepacket(mut a) => {
                let f: WavepacketArgs = serde_json::from_value(params).map_err(bad)?;
                merge_opt!(a, f, input, sigma, preset, m, tone_bins);
                Command::Wavepacket(a)
            }
        }
    } else {
        command
    };

    let format = cli
        .format
        .or(file.format)
        .unwrap_or_else(|| "csv".to_string());
    if !["csv", "json"].contains(&format.as_str()) {
        return config_err(format!("unknown format `{format}`"));
    }
    let out_path = cli.out.or(file.out).unwrap_or_else(|| "-".to_string());

    let output = match command {
        Command::Sidebands(a) => cmd_sidebands(&a, &format)?,
        Command::Eom(a) => cmd_eom(&a, &format)?,
        Command::Hom(a) => cmd_hom(&a, &format)?,
        Command::Qkd(a) => cmd_qkd(&a, &format)?,
        Command::Kraus(a) => cmd_kraus(&a, &format)?,
        Command::Correlate(a) => cmd_correlate(&a, &format)?,
        Command::Wavepacket(a) => cmd_wavepacket(&a, &format)?,
    };

    if out_path == "-" {
        print!("{output}");
        std::io::stdout().flush().ok();
    } else {
        fs::write(&out_path, output)
            .map_err(|e| CliError::Config(format!("cannot write `{out_path}`: {e}")))?;
    }
    Ok(())
}

fn cmd_sidebands(a: &SidebandsArgs, format: &str) -> CliResult<String> {
    let m = require(&a.m, "m")?;
    let cfg = ToneConfig::new(m, a.theta.unwrap_or(0.0), a.phi_b.unwrap_or(0.0))?;
    let n_max = a.n_max.unwrap_or(carson_band(m) + 2);
    let spec = SidebandSpectrum::single_tone(&cfg, n_max);
    // Rows with exactly zero power (J_n(0) for n != 0, or underflow) are
    // omitted.
    if format == "json" {
        let rows: Vec<_> = spec
            .offsets
            .iter()
            .zip(&spec.coeffs)
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(n, c)| {
                serde_json::json!({ "offset": n, "re": c.re, "im": c.im, "power": c.norm_sqr() })
            })
            .collect();
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&rows).expect("json")
        ))
    } else {
        let mut out = String::from("offset_n,re_c,im_c,power\n");
        for (n, c) in spec.offsets.iter().zip(&spec.coeffs) {
            if c.norm_sqr() > 0.0 {
                out.push_str(&format!(
                    "{n},{},{},{}\n",
                    fmt(c.re),
                    fmt(c.im),
                    fmt(c.norm_sqr())
                ));
            }
        }
        Ok(out)
    }
}

fn cmd_eom(a: &EomArgs, format: &str) -> CliResult<String> {
    let m = require(&a.m, "m")?;
    let kind = parse_preset(&require(&a.preset, "preset")?)?;
    let cfg = preset(kind, m)?;
    if a.classical == Some(true) {
        return cmd_eom_classical(&cfg, format);
    }
    let offset_max = a.offset_max.unwrap_or(carson_band(m) + 2);
    let half = cfg.guard_band() + offset_max + 1;
    let lattice = make_lattice(4.0 * half as f64, 1.0, half)?;
    let q0 = lattice.q0();
    let out = eom_one_photon(&cfg, Port::One, q0, &lattice)?;
    let mut rows: Vec<(u8, i64, f64)> = Vec::new();
    for port in [Port::One, Port::Two] {
        for s in -(offset_max as i64)..=offset_max as i64 {
            let key = OccKey::canonical(vec![ModeOcc {
                port,
                mode: (q0 as i64 + s) as usize,
                n: 1,
            }]);
            rows.push((port.index(), s, out.amplitude(&key).norm_sqr()));
        }
    }
    if format == "json" {
        let rows: Vec<_> = rows
            .iter()
            .map(|(p, s, w)| serde_json::json!({ "port": p, "offset": s, "power": w }))
            .collect();
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&rows).expect("json")
        ))
    } else {
        let mut out = String::from("port,offset_n,power\n");
        for (p, s, w) in rows {
            out.push_str(&format!("{p},{s},{}\n", fmt(w)));
        }
        Ok(out)
    }
}

/// The sampled classical modulation matrix over one RF period.
fn cmd_eom_classical(cfg: &qeom_core::amp_mod::EomConfig, format: &str) -> CliResult<String> {
    let n = 256usize;
    let grid = TimeGrid::new(0.0, 1.0 / n as f64, n)?;
    let omega = grid.omega_bin();
    let d1 = DriveSignal::single_tone(grid, omega, cfg.arm1.theta)?;
    let d2 = DriveSignal::single_tone(grid, omega, cfg.arm2.theta)?;
    let m = qeom_core::amp_mod::classical_matrix(cfg, &d1, &d2)?;
    if format == "json" {
        let rows: Vec<_> = (0..n)
            .map(|j| {
                serde_json::json!({
                    "t": grid.t(j),
                    "m11": [m.m11[j].re, m.m11[j].im],
                    "m12": [m.m12[j].re, m.m12[j].im],
                    "m21": [m.m21[j].re, m.m21[j].im],
                    "m22": [m.m22[j].re, m.m22[j].im],
                })
            })
            .collect();
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&rows).expect("json")
        ))
    } else {
        let mut out = String::from(
            "t_s,re_m11,im_m11,re_m12,im_m12,re_m21,im_m21,re_m22,im_m22\n",
        );
        for j in 0..n {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt(grid.t(j)),
                fmt(m.m11[j].re),
                fmt(m.m11[j].im),
                fmt(m.m12[j].re),
                fmt(m.m12[j].im),
                fmt(m.m21[j].re),
                fmt(m.m21[j].im),
                fmt(m.m22[j].re),
                fmt(m.m22[j].im)
            ));
        }
        Ok(out)
    }
}

fn gaussian_packet(sigma: f64) -> CliResult<(TimeGrid, Wavepacket)> {
    let n = 256usize;
    let span = 16.0 * sigma;
    let grid = TimeGrid::new(-span / 2.0, span / n as f64, n)?;
    let packet = Wavepacket::gaussian(grid, 0.0, sigma, 0.0)?;
    Ok((grid, packet))
}

fn cmd_hom(a: &HomArgs, format: &str) -> CliResult<String> {
    let sigma = a.sigma.unwrap_or(1.0);
    let step = a.alpha_step.unwrap_or(std::f64::consts::PI);
    let step_time = a.step_time.unwrap_or(0.0);
    let (grid, packet) = gaussian_packet(sigma)?;
    let t1 = match a.t1 {
        Some(t) => grid.t(grid.index_of(t)?),
        None => grid.t(grid.len() / 4),
    };
    let alpha: Vec<f64> = grid
        .times()
        .map(|t| if t < step_time { 0.0 } else { step })
        .collect();
    let mut rows = Vec::new();
    for j in 0..grid.len() {
        let t2 = grid.t(j);
        let p = hom_coincidences(&packet, &alpha, t1, t2)?;
        rows.push((t2, p.same_port_1, p.same_port_2, p.cross_port));
    }
    if format == "json" {
        let rows: Vec<_> = rows
            .iter()
            .map(|(t2, p11, p22, p12)| {
                serde_json::json!({
                    "t1": t1, "t2": t2,
                    "same_port_1": p11, "same_port_2": p22, "cross_port": p12,
                })
            })
            .collect();
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&rows).expect("json")
        ))
    } else {
        let mut out = String::from("t2_s,p_same_1,p_same_2,p_cross\n");
        for (t2, p11, p22, p12) in rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt(t2),
                fmt(p11),
                fmt(p22),
                fmt(p12)
            ));
        }
        Ok(out)
    }
}

fn cmd_qkd(a: &QkdArgs, format: &str) -> CliResult<String> {
    let trials = require(&a.trials, "trials")?;
    let seed = require(&a.seed, "seed")?;
    let rates = match &a.rates {
        None => [0.25; 4],
        Some(text) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 4 {
                return config_err("rates must be four comma-separated numbers");
            }
            let mut r = [0.0; 4];
            for (i, p) in parts.iter().enumerate() {
                r[i] = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Config(format!("bad rate `{p}`: {e}")))?;
            }
            r
        }
    };
    let cfg = SessionConfig {
        trials,
        rates,
        seed,
        forced_bob_basis: a.force_basis,
    };
    let stats = run_session(&cfg)?;
    if format == "json" {
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&stats).expect("json")
        ))
    } else {
        let mut out =
            String::from("label,d1_counts,d2_counts,trials,sifted,errors,sift_rate,qber,seed\n");
        for (i, name) in ["+1", "-1", "+2", "-2"].iter().enumerate() {
            out.push_str(&format!(
                "{name},{},{},{},{},{},{},{},{}\n",
                stats.counts[i][0],
                stats.counts[i][1],
                stats.trials,
                stats.sifted,
                stats.errors,
                fmt(stats.sift_rate),
                fmt(stats.qber),
                stats.seed
            ));
        }
        Ok(out)
    }
}

fn cmd_kraus(a: &KrausArgs, format: &str) -> CliResult<String> {
    let m = require(&a.m, "m")?;
    let kind = parse_preset(&require(&a.preset, "preset")?)?;
    let photons = a.photons.unwrap_or(1);
    if !(1..=2).contains(&photons) {
        return config_err("photons must be 1 or 2");
    }
    let cfg = preset(kind, m)?;
    let half = 2 * cfg.guard_band() + 4;
    let lattice = make_lattice(4.0 * half as f64, 1.0, half)?;
    let q0 = lattice.q0();
    let input = TwoPortState::from_terms(vec![(
        vec![ModeOcc {
            port: Port::One,
            mode: q0,
            n: photons,
        }],
        Complex64::new(1.0, 0.0),
    )])?;
    let out = eom_apply(&cfg, &input, &lattice)?;
    let decomp = block_decompose(&[(1.0, out)], Port::One, photons)?;
    if format == "csv" {
        let mut out = String::from("photons,weight,dim,min_eigenvalue\n");
        for b in &decomp.blocks {
            out.push_str(&format!(
                "{},{},{},{}\n",
                b.photons,
                fmt(b.weight),
                b.keys.len(),
                fmt(b.min_eigenvalue)
            ));
        }
        Ok(out)
    } else {
        let blocks: Vec<_> = decomp
            .blocks
            .iter()
            .map(|b| {
                serde_json::json!({
                    "photons": b.photons,
                    "weight": b.weight,
                    "dim": b.keys.len(),
                    "min_eigenvalue": b.min_eigenvalue,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "input_photons": photons,
            "weights": decomp.blocks.iter().map(|b| b.weight).collect::<Vec<_>>(),
            "commutator_defect": decomp.commutator_defect,
            "blocks": blocks,
        });
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("json")
        ))
    }
}

fn cmd_correlate(a: &CorrelateArgs, format: &str) -> CliResult<String> {
    let m = require(&a.m, "m")?;
    let kind = parse_preset(&require(&a.preset, "preset")?)?;
    let sigma = a.sigma.unwrap_or(1.0);
    let port_a = parse_port(a.port_a.unwrap_or(1))?;
    let port_b = parse_port(a.port_b.unwrap_or(2))?;
    let cfg = preset(kind, m)?;
    let (grid, packet) = gaussian_packet(sigma)?;
    let omega = 8.0 * grid.omega_bin();
    let d1 = DriveSignal::single_tone(grid, omega, cfg.arm1.theta)?;
    let d2 = DriveSignal::single_tone(grid, omega, cfg.arm2.theta)?;
    let t1 = match a.t1 {
        Some(t) => t,
        None => grid.t(grid.len() / 4),
    };
    let t2 = match a.t2 {
        Some(t) => t,
        None => grid.t(3 * grid.len() / 4),
    };
    let g1 = g1_correlation(&cfg, &d1, &d2, &packet, port_a, port_b, t1, t2)?;
    if format == "json" {
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({
                "t1": t1, "t2": t2,
                "port_a": port_a.index(), "port_b": port_b.index(),
                "re": g1.re, "im": g1.im, "modulus": g1.norm(),
            }))
            .expect("json")
        ))
    } else {
        Ok(format!(
            "t1_s,t2_s,port_a,port_b,re_g1,im_g1,modulus\n{},{},{},{},{},{},{}\n",
            fmt(t1),
            fmt(t2),
            port_a.index(),
            port_b.index(),
            fmt(g1.re),
            fmt(g1.im),
            fmt(g1.norm())
        ))
    }
}

fn cmd_wavepacket(a: &WavepacketArgs, format: &str) -> CliResult<String> {
    let m = require(&a.m, "m")?;
    let kind = parse_preset(&require(&a.preset, "preset")?)?;
    let cfg = preset(kind, m)?;
    let packet = match &a.input {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read `{path}`: {e}")))?;
            if path.ends_with(".json") {
                Wavepacket::from_json(&text)?
            } else {
                Wavepacket::from_csv(&text, 0.0)?
            }
        }
        None => gaussian_packet(a.sigma.unwrap_or(1.0))?.1,
    };
    let grid = packet.grid;
    let tone_bins = a.tone_bins.unwrap_or(8);
    let omega = tone_bins as f64 * grid.omega_bin();
    let d1 = DriveSignal::single_tone(grid, omega, cfg.arm1.theta)?;
    let d2 = DriveSignal::single_tone(grid, omega, cfg.arm2.theta)?;
    let (out, rad) = modulate_wavepacket(&cfg, &packet, &d1, &d2)?;
    if format == "json" {
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({
                "output_norm_sq": out.norm_sq(),
                "radiated_norm_sq": rad.norm_sq(),
                "output": serde_json::from_str::<serde_json::Value>(&out.to_json()).unwrap(),
                "radiated": serde_json::from_str::<serde_json::Value>(&rad.to_json()).unwrap(),
            }))
            .expect("json")
        ))
    } else {
        let mut text = String::from("t_s,re_phi_out,im_phi_out,re_phi_rad,im_phi_rad\n");
        for (j, t) in grid.times().enumerate() {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(t),
                fmt(out.samples[j].re),
                fmt(out.samples[j].im),
                fmt(rad.samples[j].re),
                fmt(rad.samples[j].im)
            ));
        }
        Ok(text)
    }
}
