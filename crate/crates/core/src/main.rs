use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pgb::compression::{
    dft_topk, error_vs_k_sweep, fmt_sig9, porat_correct, reconstruct_dft, reconstruct_sparse,
    retained_energy, top_k, unitary_dft, write_sweep_csv, ErrorMetrics, Layout, SweepRow,
};
use pgb::image2d::{
    build_plan_2d, compress_2d_with_tol, dft_topk_2d, forward_2d, image_metrics,
    reconstruct_sparse_2d, reconstruct_dft_2d, Compressed2D, Image, Plan2D, CG_TOL,
};
use pgb::signalio::{
    default_chirp, default_pulse, read_coeffs, read_csv_signal, read_pgm, read_wav,
    synthetic_splat, write_coeffs, write_csv_signal, write_pgm, write_wav, CoefficientFile,
    WavEncoding,
};
use pgb::transform::{forward_pg, forward_pgb, REAL_TOL};
use pgb::{build_config, build_plan, Error, Mode, Result, Signal1D, TransformPlan};

mod selftest;

#[derive(Parser)]
#[command(name = "pgb", version, about = "Periodic Gabor transform coding with biorthogonal exchange")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Keep the K largest coefficients and write them as a PGBC1 file.
    Compress(CompressArgs),
    /// Synthesize a signal or image from a PGBC1 file.
    Reconstruct(ReconstructArgs),
    /// Error against K for every mode, as CSV.
    Compare(CompareArgs),
    /// Dump the dense coefficient magnitude grid as CSV.
    Analyze(AnalyzeArgs),
    /// Run the built-in oracle and regression checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Clone)]
struct LatticeArgs {
    /// Time cells (first axis for images).
    #[arg(long)]
    nt: Option<usize>,
    /// Frequency cells (first axis for images).
    #[arg(long)]
    nw: Option<usize>,
    /// Time cells along the second image axis; defaults to --nt.
    #[arg(long)]
    nt2: Option<usize>,
    /// Frequency cells along the second image axis; defaults to --nw.
    #[arg(long)]
    nw2: Option<usize>,
}

#[derive(Args)]
struct InputArgs {
    /// WAV, PGM or CSV file, or one of gen:pulse, gen:chirp, gen:splat.
    #[arg(long = "in")]
    input: String,
    /// Seed for gen:splat.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct CompressArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "pgb")]
    mode: Mode,
    #[arg(long)]
    k: usize,
    /// Refine the kept coefficients by least squares.
    #[arg(long)]
    porat: bool,
    /// Relative residual for the iterative 2-D refinement.
    #[arg(long, default_value_t = CG_TOL)]
    tol: f64,
}

#[derive(Args)]
struct ReconstructArgs {
    /// PGBC1 coefficient file.
    #[arg(long = "in")]
    input: PathBuf,
    /// WAV or CSV for signals, PGM for images.
    #[arg(long)]
    out: PathBuf,
    /// Original input; metrics are printed when given.
    #[arg(long = "ref")]
    reference: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long = "k-list", value_delimiter = ',', num_args = 0..)]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = CG_TOL)]
    tol: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long, default_value = "pgb")]
    mode: Mode,
}

#[derive(Args)]
struct SelftestArgs {
    /// Perturb one entry of G before building the plan.
    #[arg(long, hide = true)]
    corrupt: bool,
}

enum Input {
    Signal(Signal1D),
    Image(Image),
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn load_input(spec: &str, lattice: &LatticeArgs, seed: u64) -> Result<Input> {
    match spec {
        "gen:pulse" => return Ok(Input::Signal(default_pulse())),
        "gen:chirp" => return Ok(Input::Signal(default_chirp())),
        "gen:splat" => {
            let n = match (lattice.nt, lattice.nw) {
                (Some(a), Some(b)) => a * b,
                _ => 10_000,
            };
            return Ok(Input::Signal(synthetic_splat(n, seed)?));
        }
        _ => {}
    }
    let path = Path::new(spec);
    match extension(path).as_str() {
        "wav" => Ok(Input::Signal(read_wav(path)?)),
        "csv" | "txt" => Ok(Input::Signal(read_csv_signal(path)?)),
        "pgm" => Ok(Input::Image(read_pgm(path)?)),
        other => Err(Error::InvalidArgument(format!(
            "{spec}: unsupported input type `.{other}` (expected .wav, .csv or .pgm)"
        ))),
    }
}

fn explicit(v: Option<usize>, flag: &str) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

fn plan_1d(lattice: &LatticeArgs, n: usize) -> Result<TransformPlan> {
    let nt = explicit(lattice.nt, "nt")?;
    let nw = explicit(lattice.nw, "nw")?;
    if nt * nw != n {
        return Err(Error::Shape(format!("lattice --nt {nt} × --nw {nw} = {} does not match {n} samples", nt * nw)));
    }
    let plan = build_plan(&build_config(nt, nw)?)?;
    if let Some(w) = plan.warning() {
        log::warn!("{w}");
    }
    Ok(plan)
}

fn plan_2d(lattice: &LatticeArgs, img: &Image) -> Result<Plan2D> {
    let nt = explicit(lattice.nt, "nt")?;
    let nw = explicit(lattice.nw, "nw")?;
    let nt2 = lattice.nt2.unwrap_or(nt);
    let nw2 = lattice.nw2.unwrap_or(nw);
    if nt * nw != img.rows || nt2 * nw2 != img.cols {
        return Err(Error::Shape(format!(
            "lattice {nt}×{nw} by {nt2}×{nw2} covers {}×{} pixels, image is {}×{}",
            nt * nw,
            nt2 * nw2,
            img.rows,
            img.cols
        )));
    }
    build_plan_2d(&build_config(nt, nw)?, &build_config(nt2, nw2)?)
}

fn metrics_row(m: &ErrorMetrics) -> String {
    format!("{},{},{}", fmt_sig9(m.l2_error), fmt_sig9(m.mse), fmt_sig9(m.psnr))
}

struct Compressed1D {
    file: CoefficientFile,
    retained: f64,
    metrics: ErrorMetrics,
}

fn compress_signal(
    x: &Signal1D,
    lattice: &LatticeArgs,
    mode: Mode,
    k: usize,
    porat: bool,
) -> Result<Compressed1D> {
    if k > x.len() {
        return Err(Error::InvalidArgument(format!("--k {k} exceeds N = {}", x.len())));
    }
    let (sparse, recon, retained) = match mode {
        Mode::Dft => {
            if porat {
                log::warn!("--porat has no effect in dft mode");
            }
            let (sparse, recon) = dft_topk(x, k)?;
            let retained = retained_energy(&unitary_dft(&x.samples, false), &sparse);
            (sparse, recon, retained)
        }
        _ => {
            let plan = plan_1d(lattice, x.len())?;
            let coeffs = if mode == Mode::Pgb { forward_pgb(&plan, x)? } else { forward_pg(&plan, x)? };
            let mut sparse = top_k(&coeffs, k)?;
            let retained = retained_energy(&coeffs.values, &sparse);
            if porat {
                sparse = porat_correct(&plan, &sparse, x)?;
            }
            let recon = reconstruct_sparse(&plan, &sparse)?;
            (sparse, recon, retained)
        }
    };
    let metrics = pgb::compression::compute_metrics(&x.samples, &recon.samples)?;
    Ok(Compressed1D {
        file: CoefficientFile { sparse, real: x.real, sample_rate: x.sample_rate },
        retained,
        metrics,
    })
}

fn compress_image(
    img: &Image,
    lattice: &LatticeArgs,
    mode: Mode,
    k: usize,
    porat: bool,
    tol: f64,
) -> Result<Compressed2D> {
    if k > img.rows * img.cols {
        return Err(Error::InvalidArgument(format!("--k {k} exceeds N = {}", img.rows * img.cols)));
    }
    match mode {
        Mode::Dft => dft_topk_2d(img, k),
        _ => compress_2d_with_tol(&plan_2d(lattice, img)?, mode, img, k, porat, tol),
    }
}

fn cmd_compress(a: &CompressArgs) -> Result<()> {
    let (file, retained, metrics) = match load_input(&a.input.input, &a.lattice, a.input.seed)? {
        Input::Signal(x) => {
            let c = compress_signal(&x, &a.lattice, a.mode, a.k, a.porat)?;
            (c.file, c.retained, c.metrics)
        }
        Input::Image(img) => {
            let c = compress_image(&img, &a.lattice, a.mode, a.k, a.porat, a.tol)?;
            (CoefficientFile { sparse: c.sparse, real: true, sample_rate: None }, c.retained_energy, c.metrics)
        }
    };
    write_coeffs(&a.out, &file)?;
    println!(
        "{},{},{},{},{}",
        file.sparse.len(),
        file.sparse.mode,
        u8::from(file.sparse.porat),
        fmt_sig9(retained),
        metrics_row(&metrics)
    );
    Ok(())
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let file = read_coeffs(&a.input)?;
    let s = &file.sparse;
    let out_ext = extension(&a.out);
    let recon = match s.layout {
        Layout::Lattice1(cfg) => {
            let plan = build_plan(&cfg)?;
            Input::Signal(reconstruct_sparse(&plan, s)?)
        }
        Layout::Dft1 { .. } => Input::Signal(reconstruct_dft(s)?),
        Layout::Lattice2 { rows, cols } => {
            Input::Image(reconstruct_sparse_2d(&build_plan_2d(&rows, &cols)?, s)?)
        }
        Layout::Dft2 { .. } => Input::Image(reconstruct_dft_2d(s)?),
    };
    let recon = match recon {
        Input::Signal(mut x) => {
            if file.real && x.imag_residual() <= REAL_TOL {
                x = Signal1D::from_real(&x.real_parts());
            }
            x.sample_rate = file.sample_rate;
            match out_ext.as_str() {
                "wav" => {
                    if !x.real {
                        log::warn!("writing the real part; imaginary residual {:.3e}", x.imag_residual());
                    }
                    write_wav(&a.out, &x, WavEncoding::Pcm16)?
                }
                "csv" | "txt" => write_csv_signal(&a.out, &x)?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "{}: cannot write a signal as `.{other}` (use .wav or .csv)",
                        a.out.display()
                    )))
                }
            }
            Input::Signal(x)
        }
        Input::Image(img) => {
            if out_ext != "pgm" {
                return Err(Error::InvalidArgument(format!(
                    "{}: images are written as .pgm",
                    a.out.display()
                )));
            }
            write_pgm(&a.out, &img)?;
            Input::Image(img)
        }
    };
    if let Some(r) = &a.reference {
        let lattice = match s.layout {
            Layout::Lattice1(c) => LatticeArgs { nt: Some(c.n_time), nw: Some(c.n_freq), nt2: None, nw2: None },
            _ => LatticeArgs { nt: None, nw: None, nt2: None, nw2: None },
        };
        let metrics = match (load_input(r, &lattice, a.seed)?, recon) {
            (Input::Signal(x), Input::Signal(y)) => {
                if x.len() != y.len() {
                    return Err(Error::Shape(format!("reference has {} samples, reconstruction {}", x.len(), y.len())));
                }
                pgb::compression::compute_metrics(&x.samples, &y.samples)?
            }
            (Input::Image(x), Input::Image(y)) => {
                if (x.rows, x.cols) != (y.rows, y.cols) {
                    return Err(Error::Shape(format!(
                        "reference is {}×{}, reconstruction {}×{}",
                        x.rows, x.cols, y.rows, y.cols
                    )));
                }
                image_metrics(&x, &y)?
            }
            _ => return Err(Error::Shape("reference and reconstruction differ in dimensionality".into())),
        };
        println!("{}", metrics_row(&metrics));
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if a.k_list.is_empty() {
        return Err(Error::InvalidArgument("--k-list is empty".into()));
    }
    let modes = [Mode::Pgb, Mode::Pg, Mode::Dft];
    let rows = match load_input(&a.input.input, &a.lattice, a.input.seed)? {
        Input::Signal(x) => {
            let plan = plan_1d(&a.lattice, x.len())?;
            error_vs_k_sweep(&plan, &x, &a.k_list, &modes, true)?
        }
        Input::Image(img) => {
            let plan = plan_2d(&a.lattice, &img)?;
            let mut rows = Vec::new();
            for &k in &a.k_list {
                if k > img.rows * img.cols {
                    return Err(Error::InvalidArgument(format!("k = {k} exceeds N = {}", img.rows * img.cols)));
                }
                for mode in modes {
                    let variants: &[bool] = if mode == Mode::Dft { &[false] } else { &[false, true] };
                    for &porat in variants {
                        let c = match mode {
                            Mode::Dft => dft_topk_2d(&img, k)?,
                            _ => compress_2d_with_tol(&plan, mode, &img, k, porat, a.tol)?,
                        };
                        rows.push(SweepRow { k, mode, porat, metrics: c.metrics });
                    }
                }
            }
            rows
        }
    };
    let stdout = std::io::stdout();
    write_sweep_csv(&rows, stdout.lock())?;
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let mut out = String::new();
    let row = |vals: &mut dyn Iterator<Item = f64>| vals.map(fmt_sig9).collect::<Vec<_>>().join(",");
    match load_input(&a.input.input, &a.lattice, a.input.seed)? {
        Input::Signal(x) => match a.mode {
            Mode::Dft => {
                for v in unitary_dft(&x.samples, false) {
                    out.push_str(&fmt_sig9(v.norm()));
                    out.push('\n');
                }
            }
            mode => {
                let plan = plan_1d(&a.lattice, x.len())?;
                let c = if mode == Mode::Pgb { forward_pgb(&plan, &x)? } else { forward_pg(&plan, &x)? };
                let cfg = plan.config();
                // one row per frequency cell, one column per time cell
                for l in 0..cfg.n_freq {
                    let mut it = (0..cfg.n_time).map(|n| c.values[n * cfg.n_freq + l].norm());
                    out.push_str(&row(&mut it));
                    out.push('\n');
                }
            }
        },
        Input::Image(img) => {
            let values: Vec<f64> = match a.mode {
                Mode::Dft => pgb::image2d::unitary_dft_2d(
                    &img.pixels.iter().map(|&p| pgb::Complex64::new(p, 0.0)).collect::<Vec<_>>(),
                    img.rows,
                    img.cols,
                    false,
                )
                .iter()
                .map(|v| v.norm())
                .collect(),
                mode => forward_2d(&plan_2d(&a.lattice, &img)?, mode, &img)?.values.iter().map(|v| v.norm()).collect(),
            };
            for r in 0..img.rows {
                let mut it = values[r * img.cols..(r + 1) * img.cols].iter().copied();
                out.push_str(&row(&mut it));
                out.push('\n');
            }
        }
    }
    print!("{out}");
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io(_) | Error::Binary { .. } | Error::Text { .. } => 2,
        Error::IllConditioned { .. } | Error::NoConvergence { .. } => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Compress(a) => cmd_compress(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Selftest(a) => {
            return if selftest::run(a.corrupt) { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
