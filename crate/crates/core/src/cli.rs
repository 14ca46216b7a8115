//! Command-line front end: builds the requested PLD, composes, evaluates,
//! and emits CSV or JSON records with the fixed schema
//! `eps,delta,n_c,mechanism,adversary,direction`.
//!
//! Exit codes: 0 success, 2 parameter validation failure, 3 accountant
//! range errors (unreachable target delta). The wrap-around warning and the
//! effective grid resolution go to stderr.

use crate::accountant::{
    compose, epsilon_for_delta_composed, AccountantConfig, ComposedDensity, CompositionSpec,
    IntegralForm,
};
use crate::clones::{build_clones_plds, ClonesDirection, ClonesParams, SubsampleRounding};
use crate::error::Error;
use crate::krr::{build_krr_pld, Adversary, JointModel, KrrParams};
use crate::oracles::gaussian_shuffle_mc;
use crate::pld::DiscretePld;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "shuffle-acct",
    version,
    about = "delta(eps)/eps(delta) bounds for shuffle-model DP mechanisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// General shuffled eps0-LDP mechanism (clones dominating pair).
    Clones(ClonesCmd),
    /// Subsampled shuffled eps0-LDP mechanism.
    ClonesSubsampled(ClonesSubsampledCmd),
    /// Shuffled k-randomised response (tail-form accounting).
    Krr(KrrCmd),
    /// Monte-Carlo hockey-stick estimate for shuffled Gaussian outputs.
    GaussianMc(GaussianMcCmd),
    /// delta(eps) curve over an evenly spaced eps range.
    Sweep(SweepCmd),
    /// Export a mechanism PLD as loss,mass CSV.
    ExportPld(ExportPldCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum DirectionArg {
    NumOverDen,
    DenOverNum,
    MaxBoth,
}

impl From<DirectionArg> for ClonesDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::NumOverDen => ClonesDirection::NumOverDen,
            DirectionArg::DenOverNum => ClonesDirection::DenOverNum,
            DirectionArg::MaxBoth => ClonesDirection::MaxBoth,
        }
    }
}

impl DirectionArg {
    fn as_str(self) -> &'static str {
        match self {
            DirectionArg::NumOverDen => "num-over-den",
            DirectionArg::DenOverNum => "den-over-num",
            DirectionArg::MaxBoth => "max-both",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormArg {
    HockeyStick,
    Tail,
}

impl From<FormArg> for IntegralForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::HockeyStick => IntegralForm::HockeyStick,
            FormArg::Tail => IntegralForm::TailProbability,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AdversaryArg {
    Strong,
    Weak,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum JointModelArg {
    ViewJoint,
    IndependentMarginals,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RoundingArg {
    Nearest,
    Floor,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct AccountantOpts {
    /// Grid half-width L in nats.
    #[arg(long = "L", default_value_t = 20.0)]
    pub half_width: f64,
    /// Grid size; rounded up to the next power of two.
    #[arg(long = "m", default_value_t = 10_000_000)]
    pub grid_size: u64,
    /// Number of adaptive compositions.
    #[arg(long = "nc", default_value_t = 1)]
    pub nc: u32,
}

impl AccountantOpts {
    fn config(&self) -> Result<AccountantConfig, Error> {
        if self.grid_size < 2 {
            return Err(Error::invalid(format!(
                "grid size m must be >= 2 (got {})",
                self.grid_size
            )));
        }
        let m = (self.grid_size as usize).next_power_of_two();
        let cfg = AccountantConfig::new(self.half_width, m)?;
        eprintln!(
            "grid: m = {} (requested {}), dx = {:.6e}",
            m,
            self.grid_size,
            cfg.dx()
        );
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
pub struct QueryOpts {
    /// Epsilon value(s) to evaluate, comma separated.
    #[arg(long = "eps", value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    /// Target delta: report the smallest achievable epsilon instead.
    #[arg(long = "target-delta", conflicts_with = "eps")]
    pub target_delta: Option<f64>,
}

impl QueryOpts {
    fn validate(&self) -> Result<(), Error> {
        match (&self.eps, &self.target_delta) {
            (Some(e), None) if !e.is_empty() => Ok(()),
            (None, Some(_)) => Ok(()),
            _ => Err(Error::invalid(
                "exactly one of --eps and --target-delta must be given",
            )),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputOpts {
    #[arg(long = "format", value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Output path; stdout when omitted.
    #[arg(long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ClonesOpts {
    /// Number of users.
    #[arg(long = "n")]
    pub n: u64,
    /// Local DP parameter eps0.
    #[arg(long = "eps0")]
    pub eps0: f64,
    /// Hoeffding truncation tolerance; 0 builds the exact O(n^2) PLD.
    #[arg(long = "tau", default_value_t = 1e-12)]
    pub tau: f64,
    #[arg(long = "direction", value_enum, default_value_t = DirectionArg::MaxBoth)]
    pub direction: DirectionArg,
}

impl ClonesOpts {
    fn params(&self) -> ClonesParams {
        ClonesParams::new(self.n, self.eps0)
            .with_tau(self.tau)
            .with_direction(self.direction.into())
    }
}

#[derive(Args, Debug, Clone)]
pub struct SubsampleOpts {
    /// Subsampling ratio gamma in (0, 1].
    #[arg(long = "subsample-ratio")]
    pub subsample_ratio: f64,
    #[arg(long = "subsample-rounding", value_enum, default_value_t = RoundingArg::Nearest)]
    pub subsample_rounding: RoundingArg,
}

#[derive(Args, Debug, Clone)]
pub struct KrrOpts {
    /// Number of users.
    #[arg(long = "n")]
    pub n: u64,
    /// Alphabet size.
    #[arg(long = "k")]
    pub k: u64,
    /// Probability that a user answers randomly.
    #[arg(long = "gamma")]
    pub gamma: f64,
    /// Hoeffding truncation tolerance.
    #[arg(long = "tau", default_value_t = 1e-12)]
    pub tau: f64,
    #[arg(long = "adversary", value_enum, default_value_t = AdversaryArg::Strong)]
    pub adversary: AdversaryArg,
    #[arg(long = "joint-model", value_enum, default_value_t = JointModelArg::ViewJoint)]
    pub joint_model: JointModelArg,
}

impl KrrOpts {
    fn params(&self) -> KrrParams {
        KrrParams::new(self.n, self.k, self.gamma)
            .with_tau(self.tau)
            .with_adversary(match self.adversary {
                AdversaryArg::Strong => Adversary::Strong,
                AdversaryArg::Weak => Adversary::Weak,
            })
            .with_joint_model(match self.joint_model {
                JointModelArg::ViewJoint => JointModel::ViewJoint,
                JointModelArg::IndependentMarginals => JointModel::IndependentMarginals,
            })
    }
}

#[derive(Args, Debug)]
pub struct ClonesCmd {
    #[command(flatten)]
    pub clones: ClonesOpts,
    /// Integral form for delta queries.
    #[arg(long = "form", value_enum, default_value_t = FormArg::HockeyStick)]
    pub form: FormArg,
    #[command(flatten)]
    pub acct: AccountantOpts,
    #[command(flatten)]
    pub query: QueryOpts,
    #[command(flatten)]
    pub out: OutputOpts,
}

#[derive(Args, Debug)]
pub struct ClonesSubsampledCmd {
    #[command(flatten)]
    pub clones: ClonesOpts,
    #[command(flatten)]
    pub subsample: SubsampleOpts,
    #[arg(long = "form", value_enum, default_value_t = FormArg::HockeyStick)]
    pub form: FormArg,
    #[command(flatten)]
    pub acct: AccountantOpts,
    #[command(flatten)]
    pub query: QueryOpts,
    #[command(flatten)]
    pub out: OutputOpts,
}

#[derive(Args, Debug)]
pub struct KrrCmd {
    #[command(flatten)]
    pub krr: KrrOpts,
    #[command(flatten)]
    pub acct: AccountantOpts,
    #[command(flatten)]
    pub query: QueryOpts,
    #[command(flatten)]
    pub out: OutputOpts,
}

#[derive(Args, Debug)]
pub struct GaussianMcCmd {
    /// Number of shuffled users (1..=8).
    #[arg(long = "n")]
    pub n: u64,
    /// Gaussian noise scale.
    #[arg(long = "sigma")]
    pub sigma: f64,
    #[arg(long = "samples", default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long = "seed", default_value_t = 0)]
    pub seed: u64,
    /// Epsilon value(s), comma separated.
    #[arg(long = "eps", value_delimiter = ',', num_args = 1.., required = true)]
    pub eps: Vec<f64>,
    #[command(flatten)]
    pub out: OutputOpts,
}

#[derive(Args, Debug, Clone)]
pub struct SweepRange {
    #[arg(long = "eps-min", default_value_t = 0.0)]
    pub eps_min: f64,
    #[arg(long = "eps-max")]
    pub eps_max: f64,
    /// Number of evenly spaced points, endpoints included.
    #[arg(long = "steps", default_value_t = 51)]
    pub steps: u32,
}

impl SweepRange {
    fn eps_list(&self) -> Result<Vec<f64>, Error> {
        if self.steps < 2 {
            return Err(Error::invalid("sweep needs --steps >= 2"));
        }
        if !(self.eps_max > self.eps_min) {
            return Err(Error::invalid("sweep needs eps-max > eps-min"));
        }
        let h = (self.eps_max - self.eps_min) / (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| self.eps_min + i as f64 * h)
            .collect())
    }
}

#[derive(Args, Debug)]
pub struct SweepCmd {
    #[command(subcommand)]
    pub mechanism: SweepMechanism,
}

#[derive(Subcommand, Debug)]
pub enum SweepMechanism {
    Clones {
        #[command(flatten)]
        clones: ClonesOpts,
        #[arg(long = "form", value_enum, default_value_t = FormArg::HockeyStick)]
        form: FormArg,
        #[command(flatten)]
        acct: AccountantOpts,
        #[command(flatten)]
        range: SweepRange,
        #[command(flatten)]
        out: OutputOpts,
    },
    Krr {
        #[command(flatten)]
        krr: KrrOpts,
        #[command(flatten)]
        acct: AccountantOpts,
        #[command(flatten)]
        range: SweepRange,
        #[command(flatten)]
        out: OutputOpts,
    },
}

#[derive(Args, Debug)]
pub struct ExportPldCmd {
    #[command(subcommand)]
    pub mechanism: ExportMechanism,
}

#[derive(Subcommand, Debug)]
pub enum ExportMechanism {
    Clones {
        #[command(flatten)]
        clones: ClonesOpts,
        #[command(flatten)]
        out: OutputOpts,
    },
    ClonesSubsampled {
        #[command(flatten)]
        clones: ClonesOpts,
        #[command(flatten)]
        subsample: SubsampleOpts,
        #[command(flatten)]
        out: OutputOpts,
    },
    Krr {
        #[command(flatten)]
        krr: KrrOpts,
        #[command(flatten)]
        out: OutputOpts,
    },
}

/// One emitted result row.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub eps: f64,
    pub delta: f64,
    pub n_c: u32,
    pub mechanism: String,
    pub adversary: String,
    pub direction: String,
}

fn emit(records: &[Record], out: &OutputOpts) -> Result<(), Error> {
    let body = match out.format {
        FormatArg::Csv => {
            let mut s = String::from("eps,delta,n_c,mechanism,adversary,direction\n");
            for r in records {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.eps, r.delta, r.n_c, r.mechanism, r.adversary, r.direction
                ));
            }
            s
        }
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(records)
                .map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_out(&body, &out.output)
}

fn write_out(body: &str, path: &Option<PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, body)
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| Error::invalid(format!("cannot write stdout: {e}")))
        }
    }
}

fn warn_wraparound(composed: &ComposedDensity) {
    if composed.wraparound_warning() {
        eprintln!(
            "warning: composed mass {:.3e} lies within 10 grid cells of +-L; increase --L",
            composed.boundary_mass()
        );
    }
}

/// Composes each PLD and answers the query, taking the worst direction when
/// several PLDs are given (MaxBoth).
fn run_accounting(
    plds: Vec<DiscretePld>,
    nc: u32,
    cfg: &AccountantConfig,
    form: IntegralForm,
    query: &QueryOpts,
    mechanism: &str,
    adversary: &str,
    direction: &str,
) -> Result<Vec<Record>, Error> {
    query.validate()?;
    let composed: Vec<ComposedDensity> = plds
        .into_iter()
        .map(|pld| {
            let spec = CompositionSpec::homogeneous(pld, nc)?;
            let c = compose(&spec, cfg)?;
            warn_wraparound(&c);
            Ok(c)
        })
        .collect::<Result<_, Error>>()?;
    let mut records = Vec::new();
    if let Some(eps_list) = &query.eps {
        for &eps in eps_list {
            let delta = composed
                .iter()
                .map(|c| c.delta_at(eps, form))
                .fold(0.0f64, f64::max);
            records.push(Record {
                eps,
                delta,
                n_c: nc,
                mechanism: mechanism.into(),
                adversary: adversary.into(),
                direction: direction.into(),
            });
        }
    } else if let Some(target) = query.target_delta {
        let mut eps = f64::NEG_INFINITY;
        for c in &composed {
            eps = eps.max(epsilon_for_delta_composed(c, target, form)?);
        }
        records.push(Record {
            eps,
            delta: target,
            n_c: nc,
            mechanism: mechanism.into(),
            adversary: adversary.into(),
            direction: direction.into(),
        });
    }
    Ok(records)
}

/// Runs a parsed invocation. Errors map to process exit codes in [`main`].
pub fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Clones(cmd) => {
            let cfg = cmd.acct.config()?;
            let plds = build_clones_plds(&cmd.clones.params())?;
            let records = run_accounting(
                plds,
                cmd.acct.nc,
                &cfg,
                cmd.form.into(),
                &cmd.query,
                "clones",
                "",
                cmd.clones.direction.as_str(),
            )?;
            emit(&records, &cmd.out)
        }
        Command::ClonesSubsampled(cmd) => {
            let cfg = cmd.acct.config()?;
            let params = cmd
                .clones
                .params()
                .with_subsample_ratio(cmd.subsample.subsample_ratio)
                .with_rounding(match cmd.subsample.subsample_rounding {
                    RoundingArg::Nearest => SubsampleRounding::Nearest,
                    RoundingArg::Floor => SubsampleRounding::Floor,
                });
            let plds = build_clones_plds(&params)?;
            let records = run_accounting(
                plds,
                cmd.acct.nc,
                &cfg,
                cmd.form.into(),
                &cmd.query,
                "clones-subsampled",
                "",
                cmd.clones.direction.as_str(),
            )?;
            emit(&records, &cmd.out)
        }
        Command::Krr(cmd) => {
            let cfg = cmd.acct.config()?;
            let params = cmd.krr.params();
            let pld = build_krr_pld(&params)?;
            // k-RR deltas are tail probabilities of the composed loss.
            let records = run_accounting(
                vec![pld],
                cmd.acct.nc,
                &cfg,
                IntegralForm::TailProbability,
                &cmd.query,
                "krr",
                params.adversary.as_str(),
                "num-over-den",
            )?;
            emit(&records, &cmd.out)
        }
        Command::GaussianMc(cmd) => {
            let mut records = Vec::new();
            for &eps in &cmd.eps {
                let est = gaussian_shuffle_mc(cmd.n, cmd.sigma, eps, cmd.samples, cmd.seed)?;
                eprintln!(
                    "gaussian-mc: eps = {eps}, estimate = {:.6e}, std_error = {:.3e}, samples = {}",
                    est.estimate, est.std_error, est.samples
                );
                records.push(Record {
                    eps,
                    delta: est.estimate,
                    n_c: 1,
                    mechanism: "gaussian-mc".into(),
                    adversary: "".into(),
                    direction: "".into(),
                });
            }
            emit(&records, &cmd.out)
        }
        Command::Sweep(cmd) => match cmd.mechanism {
            SweepMechanism::Clones {
                clones,
                form,
                acct,
                range,
                out,
            } => {
                let cfg = acct.config()?;
                let plds = build_clones_plds(&clones.params())?;
                let query = QueryOpts {
                    eps: Some(range.eps_list()?),
                    target_delta: None,
                };
                let records = run_accounting(
                    plds,
                    acct.nc,
                    &cfg,
                    form.into(),
                    &query,
                    "clones",
                    "",
                    clones.direction.as_str(),
                )?;
                emit(&records, &out)
            }
            SweepMechanism::Krr {
                krr,
                acct,
                range,
                out,
            } => {
                let cfg = acct.config()?;
                let params = krr.params();
                let pld = build_krr_pld(&params)?;
                let query = QueryOpts {
                    eps: Some(range.eps_list()?),
                    target_delta: None,
                };
                let records = run_accounting(
                    vec![pld],
                    acct.nc,
                    &cfg,
                    IntegralForm::TailProbability,
                    &query,
                    "krr",
                    params.adversary.as_str(),
                    "num-over-den",
                )?;
                emit(&records, &out)
            }
        },
        Command::ExportPld(cmd) => match cmd.mechanism {
            ExportMechanism::Clones { clones, out } => {
                let params = clones.params();
                export_single_pld(&build_clones_plds(&params)?, clones.direction, &out)
            }
            ExportMechanism::ClonesSubsampled {
                clones,
                subsample,
                out,
            } => {
                let params = clones
                    .params()
                    .with_subsample_ratio(subsample.subsample_ratio)
                    .with_rounding(match subsample.subsample_rounding {
                        RoundingArg::Nearest => SubsampleRounding::Nearest,
                        RoundingArg::Floor => SubsampleRounding::Floor,
                    });
                export_single_pld(&build_clones_plds(&params)?, clones.direction, &out)
            }
            ExportMechanism::Krr { krr, out } => {
                let pld = build_krr_pld(&krr.params())?;
                write_out(&pld.to_csv_string(), &out.output)
            }
        },
    }
}

fn export_single_pld(
    plds: &[DiscretePld],
    direction: DirectionArg,
    out: &OutputOpts,
) -> Result<(), Error> {
    if plds.len() != 1 {
        return Err(Error::invalid(format!(
            "export-pld needs a concrete direction, not {}",
            direction.as_str()
        )));
    }
    write_out(&plds[0].to_csv_string(), &out.output)
}

/// Entry point used by the `shuffle-acct` binary.
pub fn main() -> i32 {
    if let Ok(threads) = std::env::var("SHUFFLE_ACCT_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::DeltaOutOfRange { .. } => 3,
                _ => 2,
            }
        }
    }
}
