use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use rfsme::bench::{run_benchmark, RunConfig};
use rfsme::subpel::{GateParams, Ratio, Strategy};
use rfsme::video_io::{is_y4m, load_sequence, probe_frame_count, SequenceConfig, Source};

/// Compare sub-pel motion search strategies on a luma sequence.
#[derive(Debug, Parser)]
#[command(name = "rfsme", version)]
struct Args {
    /// Raw I420 / Y4M file, or synth:static | synth:global-shift[:DX,DY] | synth:textured-drift
    #[arg(long, default_value = "synth:textured-drift")]
    input: String,

    /// Frame width; raw and synthetic input default to 176, Y4M reads its header
    #[arg(long)]
    width: Option<usize>,

    /// Frame height; raw and synthetic input default to 144
    #[arg(long)]
    height: Option<usize>,

    /// Frames to process (files default to min(100, available))
    #[arg(long)]
    frames: Option<usize>,

    #[arg(long, default_value_t = 28)]
    qp: i32,

    /// Integer search range in pixels (default 16 up to 176 wide, else 32)
    #[arg(long)]
    range: Option<i32>,

    #[arg(long, default_value_t = 1)]
    refs: usize,

    /// Comma-separated: full,cbfps,fpme,ie_sme,rfsme
    #[arg(long, default_value = "full,cbfps,fpme,ie_sme,rfsme", value_delimiter = ',')]
    methods: Vec<Strategy>,

    /// Also measure the step-2 prediction distance to the exhaustive sub-pel best
    #[arg(long)]
    audit: bool,

    /// Report path stem; writes STEM.csv and STEM.md
    #[arg(long, default_value = "rfsme_report")]
    out: PathBuf,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, default_value_t = 10)]
    th1: u32,

    #[arg(long, default_value_t = 20)]
    th2: u32,

    /// Flatness ratio NUM/DEN
    #[arg(long, default_value = "5/4")]
    rf: Ratio,

    /// D-gate ratio NUM/DEN
    #[arg(long, default_value = "3/2")]
    rd: Ratio,

    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn stem_paths(out: &Path) -> (PathBuf, PathBuf) {
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("md") => (out.with_extension("csv"), out.with_extension("md")),
        _ => {
            let s = out.as_os_str().to_owned();
            let mut csv = s.clone();
            csv.push(".csv");
            let mut md = s;
            md.push(".md");
            (PathBuf::from(csv), PathBuf::from(md))
        }
    }
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let source: Source = args.input.parse()?;
    let (default_w, default_h) = match &source {
        Source::File(path) if is_y4m(path)? => (0, 0),
        _ => (176, 144),
    };
    let (width, height) = (args.width.unwrap_or(default_w), args.height.unwrap_or(default_h));
    let frame_count = match (&source, args.frames) {
        (_, Some(n)) => n,
        (Source::Synthetic(_), None) => 100,
        (Source::File(path), None) => probe_frame_count(path, width, height)?.min(100),
    };
    let frames = load_sequence(&SequenceConfig {
        source,
        frame_count,
        width,
        height,
        seed: args.seed,
    })?;

    let cfg = RunConfig {
        qp: args.qp,
        range: args.range,
        refs: args.refs,
        params: GateParams {
            th1: args.th1,
            th2: args.th2,
            r_f: args.rf,
            r_d: args.rd,
        },
        audit: args.audit,
        jobs: args.jobs,
    };
    let report = run_benchmark(&frames, &args.methods, &cfg)?;

    let (csv, md) = stem_paths(&args.out);
    std::fs::write(&csv, report.to_csv())?;
    std::fs::write(&md, report.to_markdown())?;
    print!("{}", report.to_markdown());
    eprintln!("wrote {} and {}", csv.display(), md.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
