use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use neurotheremin::aer::{annotate_frame, bitflip_fuzz, safe_encode, ChannelConfig, SafeFrame, SafeRecord};
use neurotheremin::event::{inject_noise, read_evt, synth_hand_events, waving_hands, write_evt, Resolution, SynthParams};
use neurotheremin::harness::{
    metrics_report, power_ratio, protocol_bench, report_kv, run_show, RunReport, SimConfig, TrafficSpec,
};
use neurotheremin::tracker::{Tracker, TrackerConfig};
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "neurotheremin", version, about = "Event-camera theremin toolkit and show simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an EVT1 event file of two waving hands.
    Synth(SynthArgs),
    /// Track hands in an EVT1 file and print one record per hand per window.
    Track(TrackArgs),
    /// Run a show scenario on the virtual clock and print its report.
    Show(ShowArgs),
    /// Measure, fuzz or inspect the SAFE link protocol.
    Proto {
        #[command(subcommand)]
        command: ProtoCommand,
    },
    /// Cluster-to-board power ratio.
    Power(PowerArgs),
    /// Render a saved run report.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    duration_ms: u64,
    /// Waving amplitude, px.
    #[arg(long, default_value_t = 30.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 500)]
    period_ms: u64,
    #[arg(long, default_value_t = 8.0)]
    radius: f64,
    /// Distractor events as a fraction of hand events.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 240)]
    width: u16,
    #[arg(long, default_value_t = 180)]
    height: u16,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    input: PathBuf,
    /// Tracker config (JSON); missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Records file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a PGM overlay of the final window here.
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Args)]
struct ShowArgs {
    #[arg(long)]
    seed: u64,
    /// Simulation config (JSON); `seed` comes from the command line.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    score: Option<PathBuf>,
    #[arg(long)]
    threaded: bool,
    /// Save the full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print key=value lines instead of the summary.
    #[arg(long)]
    kv: bool,
}

#[derive(Subcommand)]
enum ProtoCommand {
    /// Bytes per event for RAW and SAFE, plus link counters.
    Bench(BenchArgs),
    /// Flip every bit of a SAFE frame and count detections.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        records: u16,
        /// Also write the clean frame here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Annotated hex listing of a SAFE frame file.
    Dump { file: PathBuf },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    events: usize,
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Per-byte bit-flip probability.
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    #[arg(long, default_value_t = 0)]
    delay_us: u64,
    #[arg(long, default_value_t = 0)]
    jitter_us: u64,
    #[arg(long, default_value_t = 0)]
    reorder: usize,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, default_value_t = 6.5)]
    cluster_kw: f64,
    #[arg(long, default_value_t = 120.0)]
    board_w: f64,
    #[arg(long, default_value_t = 10.0)]
    boards: f64,
}

#[derive(Args)]
struct ReportArgs {
    file: PathBuf,
    #[arg(long)]
    kv: bool,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let res = Resolution::new(a.width, a.height);
    if a.period_ms == 0 {
        bail!("period must be positive");
    }
    let traj = waving_hands(res, a.duration_ms * 1000, a.amplitude, a.period_ms * 1000);
    let stream = synth_hand_events(&traj, &SynthParams::new(res, a.radius, a.seed))?;
    let stream = inject_noise(&stream, a.noise, a.seed.wrapping_add(1));
    write_evt(&a.out, &stream)?;
    println!("{} events, {} us -> {}", stream.len(), stream.duration_us(), a.out.display());
    Ok(())
}

fn track(a: TrackArgs) -> Result<()> {
    let cfg: TrackerConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => TrackerConfig::default(),
    };
    let stream = read_evt(&a.input)?;
    let mut tracker = Tracker::new(cfg)?;
    let (t0, t1) = match (stream.events.first(), stream.events.last()) {
        (Some(f), Some(l)) => (f.t, l.t + 1),
        _ => (0, 0),
    };
    let estimates = tracker.track_stream(&stream, t0, t1)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for e in &estimates {
        e.write_records(&mut out)?;
    }
    out.flush()?;
    if let Some(p) = &a.overlay {
        fs::write(p, tracker.overlay_pgm()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn show(a: ShowArgs) -> Result<()> {
    let mut value = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => serde_json::json!({}),
    };
    let Some(obj) = value.as_object_mut() else {
        bail!("config must be a JSON object");
    };
    obj.insert("seed".into(), a.seed.into());
    let mut cfg = SimConfig::from_json(&value.to_string())?;
    if a.scenario.is_some() {
        cfg.scenario = a.scenario;
    }
    if a.score.is_some() {
        cfg.score = a.score;
    }
    cfg.threaded |= a.threaded;
    let report = run_show(&cfg)?;
    if let Some(p) = &a.report {
        fs::write(p, report.to_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{}", if a.kv { report_kv(&report) } else { metrics_report(&report) });
    Ok(())
}

fn proto(c: ProtoCommand) -> Result<()> {
    match c {
        ProtoCommand::Bench(b) => {
            let cfg = ChannelConfig {
                loss_p: b.loss,
                bitflip_p: b.flip,
                delay_base_us: b.delay_us,
                delay_jitter_us: b.jitter_us,
                reorder_window: b.reorder,
                seed: b.seed,
            };
            let traffic = TrafficSpec {
                events: b.events,
                batch: b.batch,
                seed: b.seed,
                ..TrafficSpec::default()
            };
            print!("{}", protocol_bench(&traffic, &cfg)?.table());
        }
        ProtoCommand::Fuzz { records, write } => {
            let frame = SafeFrame {
                seq: 1,
                timestamp: 1_000_000,
                records: (0..records)
                    .map(|i| SafeRecord {
                        address: i as u32 * 97,
                        value: (i as i16).wrapping_mul(37) - 500,
                        dt_offset: i * 10,
                    })
                    .collect(),
            };
            let bytes = safe_encode(&frame)?;
            if let Some(p) = write {
                fs::write(&p, &bytes).with_context(|| format!("writing {}", p.display()))?;
            }
            let r = bitflip_fuzz(&bytes);
            println!(
                "flips {} detected {} accepted {} (magic {} version {} crc {} truncated {} malformed {})",
                r.flips,
                r.detected(),
                r.accepted,
                r.bad_magic,
                r.bad_version,
                r.bad_crc,
                r.truncated,
                r.malformed
            );
            if r.accepted > 0 {
                bail!("{} corrupted frames were accepted", r.accepted);
            }
        }
        ProtoCommand::Dump { file } => {
            let bytes = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            print!("{}", annotate_frame(&bytes));
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match run(Cli::parse()) {
        // a closed pipe (e.g. `| head`) is not a failure
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => Ok(()),
        r => r,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Track(a) => track(a),
        Command::Show(a) => show(a),
        Command::Proto { command } => proto(command),
        Command::Power(p) => {
            println!("power ratio: {:.2}", power_ratio(p.cluster_kw, p.board_w, p.boards)?);
            Ok(())
        }
        Command::Report(r) => {
            let report = RunReport::from_json(&read(&r.file)?)?;
            print!("{}", if r.kv { report_kv(&report) } else { metrics_report(&report) });
            Ok(())
        }
    }
}
