//! `dnf`: simulate, filter and analyse two-channel EEG recordings.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dnf_core::analysis::FilterId;
use dnf_core::io::{ingest, write_signals_table, write_sim_session, write_weights_table};
use dnf_core::pipeline::{
    evaluate_recording, run_filter, EvokedWindow, FilterKind, Measured, RecordingEvaluation,
};
use dnf_core::report::{subject_name, write_report, write_tables, ReportData, Showcase};
use dnf_core::simulator::{
    emg_levels, evaluate_with_truth, run_cohort, simulate, subject_seed, CohortConfig,
    CohortResult, EmgSpread, SimConfig,
};
use dnf_core::stats::PairedTest;
use dnf_core::{ErrorKind, FilterConfig, RecordingSession, WeightInit};

const EXIT_OTHER: u8 = 1;
const EXIT_INGEST: u8 = 3;
const EXIT_DIVERGENCE: u8 = 4;
const EXIT_ANALYSIS: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "dnf",
    version,
    about = "Deep neural filter for two-channel EEG noise removal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate simulated sessions as session CSV files.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run the selected filters over one recording.
    Filter {
        /// Session CSV (`t,inner_uV,outer_uV[,trigger]...`).
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compute SNR and PSD tables (simulated cohort when no inputs are given).
    Analyze {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        evoked: EvokedArgs,
    },
    /// Write all tables and figures (simulated cohort when no inputs are given).
    Report {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        evoked: EvokedArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    PaperDefaults,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Task {
    Jaw,
    P300,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Init {
    Unit,
    Symmetric,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Test {
    Wilcoxon,
    TTest,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Parameter preset; explicit flags override it.
    #[arg(long, value_enum, default_value = "paper-defaults", env = "DNF_PRESET")]
    preset: Preset,
    /// Task whose learning rate the preset uses.
    #[arg(long, value_enum, default_value = "jaw", env = "DNF_TASK")]
    task: Task,
    /// Sampling rate of the recordings, Hz.
    #[arg(long, env = "DNF_FS")]
    fs: Option<f64>,
    /// DNF learning rate.
    #[arg(long, env = "DNF_ETA")]
    eta: Option<f64>,
    /// Conditioning gain.
    #[arg(long, env = "DNF_GAMMA")]
    gamma: Option<f64>,
    /// Tap count (default: fs / outer high-pass cutoff).
    #[arg(long, env = "DNF_TAPS")]
    taps: Option<usize>,
    #[arg(long, env = "DNF_LAYERS")]
    layers: Option<usize>,
    /// LMS step size (default: eta / taps).
    #[arg(long, env = "DNF_LMS_MU")]
    lms_mu: Option<f64>,
    #[arg(long, value_enum, env = "DNF_INIT")]
    init: Option<Init>,
    /// Filters to run, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "dnf,lms,laplace",
        env = "DNF_FILTER"
    )]
    filter: Vec<FilterKind>,
    #[arg(long, default_value_t = 42, env = "DNF_SEED")]
    seed: u64,
    #[arg(long, default_value = "out", env = "DNF_OUT")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long, default_value_t = 20, env = "DNF_SUBJECTS")]
    subjects: usize,
    /// Session length, seconds.
    #[arg(long, default_value_t = 120.0, env = "DNF_DURATION")]
    duration: f64,
    /// EEG crosstalk into the outer ring.
    #[arg(long, default_value_t = 0.4, env = "DNF_ALPHA")]
    alpha: f64,
    /// Base EMG level, microvolts.
    #[arg(long, default_value_t = 15.0, env = "DNF_EMG_UV")]
    emg_uv: f64,
    /// Spread of the EMG level across subjects, microvolts.
    #[arg(long, default_value_t = 5.0, env = "DNF_EMG_SPREAD_UV")]
    emg_spread_uv: f64,
    /// Draw EMG levels from a Gaussian instead of a uniform interval.
    #[arg(long, env = "DNF_EMG_GAUSSIAN")]
    emg_gaussian: bool,
    #[arg(long, value_enum, default_value = "wilcoxon", env = "DNF_TEST")]
    test: Test,
}

#[derive(Args, Debug, Clone)]
struct EvokedArgs {
    /// Start of the evoked-response interval, ms after the trigger.
    #[arg(long, default_value_t = 300.0)]
    p300_from_ms: f64,
    #[arg(long, default_value_t = 500.0)]
    p300_to_ms: f64,
    /// Event window length after the trigger, ms.
    #[arg(long, default_value_t = 1000.0)]
    window_ms: f64,
}

impl Common {
    fn sample_rate(&self, default: f64) -> f64 {
        self.fs.unwrap_or(default)
    }

    fn filter_config(&self) -> FilterConfig {
        let Preset::PaperDefaults = self.preset;
        let mut cfg = match self.task {
            Task::Jaw => FilterConfig::jaw_clench(),
            Task::P300 => FilterConfig::p300(),
        };
        if let Some(v) = self.eta {
            cfg.learning_rate_eta = v;
        }
        if let Some(v) = self.gamma {
            cfg.gain_gamma = v;
        }
        if let Some(v) = self.layers {
            cfg.num_layers = v;
        }
        cfg.num_taps_override = self.taps;
        cfg.lms_mu = self.lms_mu;
        if let Some(init) = self.init {
            cfg.weight_init = match init {
                Init::Unit => WeightInit::UnitInterval,
                Init::Symmetric => WeightInit::Symmetric,
            };
        }
        cfg.rng_seed = self.seed;
        cfg
    }
}

impl SimArgs {
    fn sim_config(&self, common: &Common) -> SimConfig {
        SimConfig {
            sample_rate_hz: common.sample_rate(250.0),
            duration_s: self.duration,
            alpha: self.alpha,
            emg_sigma: self.emg_uv * 1e-6,
            seed: common.seed,
            ..SimConfig::default()
        }
    }

    fn cohort_config(&self, common: &Common, keep_runs: bool) -> CohortConfig {
        let spread = if self.emg_gaussian {
            EmgSpread::Gaussian {
                sigma: self.emg_spread_uv * 1e-6,
            }
        } else {
            EmgSpread::Uniform {
                half_width: self.emg_spread_uv * 1e-6,
            }
        };
        CohortConfig {
            num_subjects: self.subjects,
            sim: self.sim_config(common),
            filter: common.filter_config(),
            spread,
            test: match self.test {
                Test::Wilcoxon => PairedTest::Wilcoxon,
                Test::TTest => PairedTest::TTest,
            },
            keep_runs,
        }
    }
}

impl EvokedArgs {
    fn window(&self) -> EvokedWindow {
        EvokedWindow {
            pre_ms: 0.0,
            post_ms: self.window_ms,
            lo_ms: self.p300_from_ms,
            hi_ms: self.p300_to_ms,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err
        .downcast_ref::<dnf_core::Error>()
        .map(dnf_core::Error::kind)
    {
        Some(ErrorKind::Ingestion) => EXIT_INGEST,
        Some(ErrorKind::Divergence) => EXIT_DIVERGENCE,
        Some(ErrorKind::Analysis) => EXIT_ANALYSIS,
        _ => EXIT_OTHER,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, sim } => cmd_simulate(&common, &sim),
        Command::Filter { input, common } => cmd_filter(&input, &common),
        Command::Analyze {
            inputs,
            common,
            sim,
            evoked,
        } => {
            let data = collect(&inputs, &common, &sim, &evoked, false)?;
            let files = write_tables(&common.out, &data)?;
            print_written(&files);
            Ok(())
        }
        Command::Report {
            inputs,
            common,
            sim,
            evoked,
        } => {
            let data = collect(&inputs, &common, &sim, &evoked, true)?;
            let files = write_report(&common.out, &data)?;
            print_written(&files);
            Ok(())
        }
    }
}

fn print_written(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn cmd_simulate(common: &Common, args: &SimArgs) -> Result<()> {
    create_out(&common.out)?;
    let cohort = args.cohort_config(common, false);
    // the same per-subject parameters a simulated report would use
    let levels = emg_levels(&cohort);
    for (k, emg_sigma) in levels.into_iter().enumerate() {
        let sim = simulate(&SimConfig {
            emg_sigma,
            seed: subject_seed(cohort.sim.seed, k),
            ..cohort.sim.clone()
        })?;
        let path = common.out.join(format!("sim_{}.csv", subject_name(k)));
        write_sim_session(&path, &sim)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_filter(input: &Path, common: &Common) -> Result<()> {
    let fs = common.sample_rate(250.0);
    let ingested = ingest(input, fs)?;
    let session = ingested.session;
    let cfg = common.filter_config();
    create_out(&common.out)?;
    let mut runs = Vec::new();
    for &kind in &common.filter {
        let run = run_filter(&session, &cfg, kind)?;
        eprintln!(
            "{kind}: {} samples, taps {}, saturation {:.3}",
            run.output.len(),
            run.diagnostics.num_taps,
            run.diagnostics.saturation_fraction
        );
        runs.push(run);
    }
    let mut columns: Vec<(String, &[f64])> = vec![
        ("inner_V".into(), &session.inner),
        ("outer_V".into(), &session.outer),
    ];
    for run in &runs {
        columns.push((format!("{}_V", run.kind), &run.output));
        if !run.remover.is_empty() {
            columns.push((format!("{}_remover_V", run.kind), &run.remover));
        }
    }
    let named: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let signals = common.out.join("signals.csv");
    write_signals_table(File::create(&signals)?, fs, &named)?;
    let weights = common.out.join("weights.csv");
    let rows: Vec<(String, FilterKind, &[_])> = runs
        .iter()
        .filter(|r| r.kind != FilterKind::Laplace)
        .map(|r| (session.label.clone(), r.kind, r.weight_trace.as_slice()))
        .collect();
    write_weights_table(File::create(&weights)?, &rows)?;
    print_written(&[signals, weights]);
    Ok(())
}

fn keep(id: FilterId, selected: &[FilterKind]) -> bool {
    match id {
        FilterId::Inner => true,
        FilterId::Dnf => selected.contains(&FilterKind::Dnf),
        FilterId::Lms => selected.contains(&FilterKind::Lms),
        FilterId::Laplace => selected.contains(&FilterKind::Laplace),
    }
}

fn collect(
    inputs: &[PathBuf],
    common: &Common,
    sim: &SimArgs,
    evoked: &EvokedArgs,
    showcase: bool,
) -> Result<ReportData> {
    if inputs.is_empty() {
        let cohort = run_cohort(&sim.cohort_config(common, showcase))?;
        print_cohort_summary(&cohort);
        let mut data = ReportData::from_cohort(&cohort);
        for s in &mut data.subjects {
            s.rows.retain(|r| keep(r.report.filter_id, &common.filter));
            s.psds.retain(|(id, _)| keep(*id, &common.filter));
            s.traces.retain(|(k, _)| common.filter.contains(k));
        }
        if let Some(Showcase { runs, .. }) = data.showcase.as_mut() {
            runs.retain(|r| common.filter.contains(&r.kind));
        }
        return Ok(data);
    }
    let fs = common.sample_rate(250.0);
    let cfg = common.filter_config();
    let mut data = ReportData::default();
    for path in inputs {
        let ingested = ingest(path, fs)?;
        // simulated sessions carry the pure EEG, which replaces the evoked response
        let eval = match &ingested.c {
            Some(c) => truth_evaluation(&ingested.session, c, &cfg, &common.filter),
            None => evaluate_recording(&ingested.session, &cfg, &common.filter, &evoked.window()),
        };
        let eval = eval.with_context(|| format!("analysing {}", path.display()))?;
        let label = ingested.session.label.clone();
        data.push_recording(&label, &ingested.session, eval);
    }
    Ok(data)
}

fn truth_evaluation(
    session: &RecordingSession,
    c: &[f64],
    cfg: &FilterConfig,
    filters: &[FilterKind],
) -> dnf_core::Result<RecordingEvaluation> {
    let (measures, runs) = evaluate_with_truth(session, c, cfg, filters)?;
    let measures = measures
        .into_iter()
        .map(|m| Measured {
            report: m.report,
            delta_db: m.delta_db,
            psd: m.psd,
        })
        .collect();
    Ok(RecordingEvaluation { measures, runs })
}

fn print_cohort_summary(cohort: &CohortResult) {
    for id in [FilterId::Dnf, FilterId::Lms, FilterId::Laplace] {
        let p = cohort
            .significance(id, FilterId::Inner)
            .map_or_else(|_| "n/a".to_string(), |p| format!("{p:.2e}"));
        eprintln!(
            "mean delta SNR {id}: {:+.2} dB (p vs inner {p})",
            cohort.mean_delta(id)
        );
    }
    if let Ok(p) = cohort.significance(FilterId::Dnf, FilterId::Lms) {
        eprintln!("dnf vs lms: p {p:.2e}");
    }
}
