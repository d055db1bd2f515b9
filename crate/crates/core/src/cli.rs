//! Command-line front end.
//!
//! Precedence for every setting: command-line flag, then config file, then
//! the built-in reference setup.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::attack::{analytic_bit_success_prob, analytic_exceed_prob, gamma, guess, threshold};
use crate::circuit::{ac_wire_rms, dc_wire_voltage, BitSituation, SystemParams};
use crate::config::ConfigFile;
use crate::defense::{evaluate_defense, DefenseKind, DefenseSpec, DEFAULT_WAVE_LIMIT_HZ};
use crate::error::{Error, Result};
use crate::protocol::{run_bit_exchange, run_bit_exchange_in, ExchangeConfig};
use crate::rng::{domain, substream};
use crate::sweep::{emit_csv, run_temperature_sweep, write_csv, SweepConfig};

const DEFAULT_SINGLE_TEMPERATURE: f64 = 1e12;

#[derive(Debug, Parser)]
#[command(
    name = "kljn",
    version,
    about = "Ground-loop DC attack on KLJN key exchange: simulation and analytic model"
)]
struct Cli {
    /// Master seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eve's success probability over a temperature × samples-per-bit grid (CSV).
    Sweep(SweepArgs),
    /// One bit exchange with trace statistics.
    Single(SingleArgs),
    /// Attack success before and after a defense.
    Defense(DefenseArgs),
    /// Closed-form predictions without simulation.
    Analytic(AnalyticArgs),
}

#[derive(Debug, Args)]
struct CircuitArgs {
    #[arg(long, value_name = "OHM")]
    r_low: Option<f64>,
    #[arg(long, value_name = "OHM")]
    r_high: Option<f64>,
    #[arg(long, value_name = "VOLT", allow_negative_numbers = true)]
    u_dc: Option<f64>,
    #[arg(long, value_name = "HZ")]
    bandwidth: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Comma-separated temperatures (K).
    #[arg(long, value_delimiter = ',')]
    temperatures: Option<Vec<f64>>,
    /// Comma-separated samples-per-bit counts.
    #[arg(long, value_delimiter = ',')]
    samples_per_bit: Option<Vec<usize>>,
    #[arg(long)]
    key_length: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Debug, Args)]
struct SingleArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    #[arg(long, value_name = "K")]
    temperature: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Force LL, LH, HL or HH instead of a random pick.
    #[arg(long)]
    situation: Option<BitSituation>,
}

#[derive(Debug, Args)]
struct DefenseArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// dc-compensation, temperature-scale or bandwidth-scale.
    #[arg(long)]
    kind: DefenseKind,
    /// Compensation voltage (V) or scale factor.
    #[arg(long, allow_negative_numbers = true)]
    magnitude: f64,
    #[arg(long, value_name = "HZ", default_value_t = DEFAULT_WAVE_LIMIT_HZ)]
    wave_limit: f64,
    #[arg(long, value_name = "K")]
    temperature: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    key_length: Option<usize>,
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Comma-separated temperatures (K).
    #[arg(long, value_delimiter = ',')]
    temperature: Option<Vec<f64>>,
    /// Comma-separated samples-per-bit counts.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
}

struct Context {
    file: ConfigFile,
    seed: u64,
    out: Option<PathBuf>,
}

impl Context {
    fn params(&self, c: &CircuitArgs, temperature: f64) -> Result<SystemParams> {
        let reference = SystemParams::reference(temperature)?;
        SystemParams::new(
            c.r_low.or(self.file.r_low_ohm).unwrap_or(reference.r_low),
            c.r_high
                .or(self.file.r_high_ohm)
                .unwrap_or(reference.r_high),
            temperature,
            c.bandwidth
                .or(self.file.bandwidth_hz)
                .unwrap_or(reference.bandwidth),
            c.u_dc.or(self.file.u_dc_volt).unwrap_or(reference.u_dc),
        )
    }

    fn first_temperature(&self, flag: Option<f64>) -> f64 {
        flag.or_else(|| {
            self.file
                .temperatures
                .as_ref()
                .and_then(|t| t.first().copied())
        })
        .unwrap_or(DEFAULT_SINGLE_TEMPERATURE)
    }

    fn first_samples(&self, flag: Option<usize>, fallback: usize) -> usize {
        flag.or_else(|| {
            self.file
                .samples_per_bit
                .as_ref()
                .and_then(|n| n.first().copied())
        })
        .unwrap_or(fallback)
    }

    /// Runs `f` against the chosen output sink.
    fn with_output(
        &self,
        stdout: &mut (dyn Write + Send),
        f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<()> {
        match &self.out {
            Some(path) => {
                let io_err = |source| Error::Io {
                    path: path.clone(),
                    source,
                };
                let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
                f(&mut w).and_then(|_| w.flush()).map_err(io_err)
            }
            None => f(stdout).map_err(|source| Error::Io {
                path: Path::new("<stdout>").to_path_buf(),
                source,
            }),
        }
    }
}

/// Parses `argv` and runs the chosen subcommand. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{}", first.trim());
            return 2;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn execute(cli: Cli, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        file,
        out: cli.out,
    };
    let threads = cli.threads;
    let command = cli.command;
    let go = move || match command {
        Command::Sweep(a) => sweep(&ctx, a, stdout),
        Command::Single(a) => single(&ctx, a, stdout),
        Command::Defense(a) => defense(&ctx, a, stdout),
        Command::Analytic(a) => analytic(&ctx, a, stdout),
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParams(format!("cannot build thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn sweep(ctx: &Context, a: SweepArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let defaults = SweepConfig::default();
    let temperatures = a
        .temperatures
        .or_else(|| ctx.file.temperatures.clone())
        .unwrap_or(defaults.temperatures);
    let first_t = temperatures.first().copied().unwrap_or(1.0);
    let config = SweepConfig {
        params: ctx.params(&a.circuit, first_t)?,
        temperatures,
        samples_per_bit: a
            .samples_per_bit
            .or_else(|| ctx.file.samples_per_bit.clone())
            .unwrap_or(defaults.samples_per_bit),
        key_length: a
            .key_length
            .or(ctx.file.key_length)
            .unwrap_or(defaults.key_length),
        master_seed: ctx.seed,
        replicates: a
            .replicates
            .or(ctx.file.replicates)
            .unwrap_or(defaults.replicates),
    };
    let result = run_temperature_sweep(&config)?;
    match &ctx.out {
        Some(path) => emit_csv(&result, path),
        None => write_csv(&result, stdout).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn single(ctx: &Context, a: SingleArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let params = ctx.params(&a.circuit, ctx.first_temperature(a.temperature))?;
    let mut rng = substream(&[domain::SINGLE, ctx.seed]);
    let rec = match a.situation {
        Some(sit) => run_bit_exchange_in(&params, sit, a.samples, &mut rng)?,
        None => run_bit_exchange(&params, a.samples, &mut rng)?,
    };
    let sit = rec.situation;
    let u_th = threshold(&params);
    let g = gamma(&rec.trace, u_th);
    ctx.with_output(stdout, |w| {
        writeln!(w, "situation          {sit} (secure: {})", sit.is_secure())?;
        writeln!(w, "samples            {}", rec.trace.len())?;
        writeln!(w, "temperature_K      {:e}", params.temperature)?;
        writeln!(
            w,
            "voltage_mean_V     {:e}  (dc model {:e})",
            rec.trace.voltage_mean(),
            dc_wire_voltage(&params, sit)
        )?;
        writeln!(
            w,
            "voltage_rms_V      {:e}  (ac model {:e})",
            rec.trace.voltage_variance().sqrt(),
            ac_wire_rms(&params, sit)
        )?;
        writeln!(w, "current_mean_A     {:e}", rec.trace.current_mean())?;
        writeln!(w, "current_var_A2     {:e}", rec.trace.current_variance())?;
        writeln!(
            w,
            "alice_estimate_ohm {:.6e} -> {:?}",
            rec.alice_estimate, rec.alice_inferred
        )?;
        writeln!(
            w,
            "bob_estimate_ohm   {:.6e} -> {:?}",
            rec.bob_estimate, rec.bob_inferred
        )?;
        writeln!(w, "retained           {}", rec.retained)?;
        writeln!(w, "threshold_V        {:e}", u_th)?;
        writeln!(w, "gamma              {g}")?;
        writeln!(w, "eve_decision       {:?}", guess(g))
    })
}

fn defense(ctx: &Context, a: DefenseArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let params = ctx.params(&a.circuit, ctx.first_temperature(a.temperature))?;
    let spec = DefenseSpec::new(a.kind, a.magnitude).with_wave_limit(a.wave_limit);
    let exchange = ExchangeConfig::new(
        a.key_length.or(ctx.file.key_length).unwrap_or(700),
        ctx.first_samples(a.samples, 200),
    );
    let out = evaluate_defense(&params, &spec, &exchange, ctx.seed)?;
    let n = exchange.samples_per_bit;
    ctx.with_output(stdout, |w| {
        writeln!(w, "stage,temperature_K,bandwidth_hz,u_dc_volt,bits_attacked,p_estimate,std_error,ci3_low,ci3_high,analytic_p")?;
        for (stage, p, s) in [("before", &params, &out.before), ("after", &out.defended, &out.after)] {
            let half = 3.0 * (0.25 / s.n_tot as f64).sqrt();
            writeln!(
                w,
                "{stage},{:?},{:?},{:?},{},{:?},{:?},{:?},{:?},{:?}",
                p.temperature,
                p.bandwidth,
                p.u_dc,
                s.n_tot,
                s.p_estimate,
                s.std_error,
                0.5 - half,
                0.5 + half,
                analytic_bit_success_prob(p, n)
            )?;
        }
        let half = 3.0 * (0.25 / out.after.n_tot as f64).sqrt();
        let verdict = if (out.after.p_estimate - 0.5).abs() <= half {
            "within"
        } else {
            "outside"
        };
        writeln!(w, "# after-defense p is {verdict} the 3-sigma band around 0.5")
    })
}

fn analytic(ctx: &Context, a: AnalyticArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let temperatures = a
        .temperature
        .or_else(|| ctx.file.temperatures.clone())
        .unwrap_or_else(|| SweepConfig::default().temperatures);
    let samples = a
        .samples
        .or_else(|| ctx.file.samples_per_bit.clone())
        .unwrap_or_else(|| SweepConfig::default().samples_per_bit);
    if let Some(&bad) = samples.iter().find(|&&n| n == 0) {
        return Err(Error::TooFewSamples { min: 1, got: bad });
    }
    let mut rows = Vec::new();
    for &t in &temperatures {
        let p = ctx.params(&a.circuit, t)?;
        let q_lh = analytic_exceed_prob(&p, BitSituation::LH);
        let q_hl = analytic_exceed_prob(&p, BitSituation::HL);
        for &n in &samples {
            rows.push((t, n, q_lh, q_hl, analytic_bit_success_prob(&p, n)));
        }
    }
    ctx.with_output(stdout, |w| {
        writeln!(
            w,
            "temperature_K,samples_per_bit,exceed_prob_LH,exceed_prob_HL,analytic_p"
        )?;
        for (t, n, lh, hl, p) in rows {
            writeln!(w, "{t:?},{n},{lh:?},{hl:?},{p:?}")?;
        }
        Ok(())
    })
}
