use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use ocrdir::emit::{emit, per_step_csv, InputSpec, Method, RunManifest};
use ocrdir::engine::{register, register_demons, Config, DemonsParams};
use ocrdir::synth::{gen_pair_with, PairKind, SynthParams};
use ocrdir::{io, CompositeKind, Error, Image};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CORRECTION: u8 = 4;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ocrdir,
    Demons,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenArg {
    CircleSquare,
    TranslatedBlob,
    CShape,
    BrainBlob,
}

impl From<GenArg> for PairKind {
    fn from(g: GenArg) -> Self {
        match g {
            GenArg::CircleSquare => PairKind::CircleSquare,
            GenArg::TranslatedBlob => PairKind::TranslatedBlob,
            GenArg::CShape => PairKind::CShape,
            GenArg::BrainBlob => PairKind::BrainBlob,
        }
    }
}

/// Register a template image onto a reference image.
#[derive(Debug, Parser)]
#[command(name = "ocrdir", version, about)]
#[command(group(ArgGroup::new("source").required(true).args(["reference", "gen"])))]
struct Args {
    /// Reference image (8/16-bit PGM or PNG).
    #[arg(long, requires = "template")]
    reference: Option<PathBuf>,
    /// Template image to be deformed.
    #[arg(long, requires = "reference")]
    template: Option<PathBuf>,
    /// Generate a synthetic pair instead of reading files.
    #[arg(long, value_enum, conflicts_with_all = ["reference", "template"])]
    gen: Option<GenArg>,
    /// Grid size of the generated pair, as MxN.
    #[arg(long, default_value = "128x128", value_parser = parse_size)]
    size: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Translation of the generated blob pair, in pixels.
    #[arg(long, default_value_t = 2.0)]
    shift: f64,

    #[arg(long, value_enum, default_value = "ocrdir")]
    method: MethodArg,
    #[arg(long, default_value_t = 5.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    #[arg(long = "N", default_value_t = 40)]
    n_steps: usize,
    #[arg(long, default_value_t = 5)]
    max_inner: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0.01)]
    rho: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    sigma_eps: f64,
    #[arg(long, default_value = "P1")]
    composite: CompositeKind,
    /// Largest time step the correction may grow to [default: 4/N].
    #[arg(long)]
    dt_cap: Option<f64>,

    /// Gaussian smoothing width of the demons baseline, in pixels.
    #[arg(long, default_value_t = 10f64.sqrt())]
    demons_sigma: f64,
    #[arg(long, default_value_t = 0.8)]
    demons_tau: f64,
    #[arg(long, default_value_t = 200)]
    demons_iters: usize,

    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write per_step.csv and print one line per time step.
    #[arg(long)]
    dump_per_step: bool,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected MxN, got {s:?}"))?;
    let m = a
        .trim()
        .parse()
        .map_err(|e| format!("bad width {a:?}: {e}"))?;
    let n = b
        .trim()
        .parse()
        .map_err(|e| format!("bad height {b:?}: {e}"))?;
    Ok((m, n))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SolverFailure { .. }
        | Error::DegenerateHomotopy { .. }
        | Error::NonFinite { .. } => EXIT_SOLVER,
        Error::CorrectionFailure(_) => EXIT_CORRECTION,
        _ => EXIT_INPUT,
    }
}

fn load(args: &Args) -> Result<(Image, Image, InputSpec), Error> {
    if let Some(kind) = args.gen {
        let (m, n) = args.size;
        let kind = PairKind::from(kind);
        let p = SynthParams {
            shift_px: args.shift,
            ..Default::default()
        };
        let (t, r) = gen_pair_with(kind, m, n, args.seed, &p)?;
        return Ok((
            t,
            r,
            InputSpec::Generated {
                kind,
                m,
                n,
                seed: args.seed,
            },
        ));
    }
    let (rp, tp) = (
        args.reference.clone().unwrap(),
        args.template.clone().unwrap(),
    );
    let r = io::load_image(&rp)?;
    let t = io::load_image(&tp)?;
    Ok((
        t,
        r,
        InputSpec::Files {
            reference: rp,
            template: tp,
        },
    ))
}

fn run(args: Args) -> Result<(), (u8, String)> {
    let fail = |e: Error| (exit_code(&e), e.to_string());
    let (t, r, input) = load(&args).map_err(fail)?;
    let cfg = Config {
        tau: args.tau,
        beta: args.beta,
        gamma: args.gamma,
        n_steps: args.n_steps,
        max_inner: args.max_inner,
        tol: args.tol,
        rho: args.rho,
        eps: args.eps,
        sigma_eps: args.sigma_eps,
        composite: args.composite,
        dt_cap: args.dt_cap,
        ..Default::default()
    };
    cfg.validate().map_err(fail)?;
    let (method, demons) = match args.method {
        MethodArg::Ocrdir => (Method::Ocrdir, None),
        MethodArg::Demons => (
            Method::Demons,
            Some(DemonsParams {
                sigma: args.demons_sigma,
                tau_norm: args.demons_tau,
                iters: args.demons_iters,
            }),
        ),
    };
    let mut manifest = RunManifest {
        input,
        method,
        config: cfg.clone(),
        demons,
        out_dir: args.out.clone(),
        aborted: None,
    };
    let (result, failure) = match demons {
        None => match register(&t, &r, &cfg) {
            Ok(res) => (res, None),
            Err(ab) => {
                let code = exit_code(&ab.error);
                manifest.aborted = Some(ab.error.to_string());
                let msg = ab.to_string();
                (ab.partial, Some((code, msg)))
            }
        },
        Some(p) => (register_demons(&t, &r, &p, cfg.eps).map_err(fail)?, None),
    };
    emit(&result, &manifest).map_err(fail)?;
    if args.dump_per_step {
        let csv = per_step_csv(&result.per_step);
        let path = args.out.join("per_step.csv");
        std::fs::write(&path, &csv)
            .map_err(|e| (EXIT_INPUT, format!("{}: {e}", path.display())))?;
        print!("{csv}");
    }
    let m = &result.metrics;
    eprintln!(
        "re_ssd={} ssim={:.6} psnr={:.3} r_min={:.6} det=[{:.4}, {:.4}] mean={:.6} steps={} time={:.2}s",
        m.re_ssd.map_or("undefined".to_string(), |v| format!("{v:.6e}")),
        m.ssim,
        m.psnr,
        m.r_min,
        m.det_min,
        m.det_max,
        m.det_mean,
        result.per_step.len(),
        m.runtime_s
    );
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
