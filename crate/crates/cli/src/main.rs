//! `kdpp`: exact DPP / k-DPP analysis from the command line.
//!
//! Exit codes: 0 ok, 2 input error, 3 degenerate stratum, 4 singular kernel,
//! 5 boundary MLE, 6 capacity exceeded, 7 not a projection.

mod data_file;
mod kernel_file;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use kdpp_core::exterior::MAX_COMPOUND_DIM;
use kdpp_core::linalg::DEFAULT_CLUSTER_TOL;
use kdpp_core::{
    apply_invariance, binomial, check_kdpp_invariance, compound, enumerate_subsets,
    fisher_information, from_minimal, identifiability_report, marginal_kernel, plucker_check,
    principal_minor, projection_frame, sample_commuting_rotation, DppDistribution, DppError,
    FitConfig, Init, InvarianceTransform, KDppDistribution, StepRule, SubsetIndex,
};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use data_file::{format_subset, load_data, parse_subset};
use kernel_file::{load_kernel, KernelFile};

#[derive(Parser, Debug)]
#[command(name = "kdpp", version, about = "Exact DPP and k-DPP analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Subset probabilities under the k-DPP (--k) or the full DPP (--full)
    Prob {
        kernel: PathBuf,
        #[arg(long, required_unless_present = "full", conflicts_with = "full")]
        k: Option<usize>,
        #[arg(long)]
        full: bool,
        /// Comma-separated 1-based elements, e.g. "2,3"
        #[arg(long, required_unless_present = "table", conflicts_with = "table")]
        subset: Option<String>,
        /// Every subset in canonical order
        #[arg(long)]
        table: bool,
        #[arg(long)]
        json: bool,
    },
    /// Mean parameter and Fisher information of the diagonal k-DPP
    Fisher {
        /// Kernel file; its eigenvalues give θ = log λ
        #[arg(required_unless_present = "theta", conflicts_with = "theta")]
        kernel: Option<PathBuf>,
        /// Natural parameter, comma-separated
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long)]
        k: usize,
    },
    /// Dimension of the space of first-order invisible kernel perturbations
    Identifiability {
        kernel: PathBuf,
        #[arg(long)]
        k: usize,
        /// Write the basis directions as a JSON array of kernel files
        #[arg(long)]
        emit_basis: Option<PathBuf>,
    },
    /// Compare the k-DPP of L with that of a transformed or supplied kernel
    Invariance {
        kernel: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Sign vector, comma-separated ±1
        #[arg(long, allow_hyphen_values = true)]
        flip: Option<String>,
        /// Seed for a random rotation inside each eigenspace
        #[arg(long)]
        rotate_seed: Option<u64>,
        /// Compare against this kernel file instead of a transform
        #[arg(long, conflicts_with_all = ["scale", "flip", "rotate_seed"])]
        against: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Maximum likelihood fit of the diagonal k-DPP
    Fit {
        data: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        grad_tol: f64,
        #[arg(long, value_enum, default_value_t = StepArg::Backtracking)]
        step: StepArg,
        /// Step size for --step fixed
        #[arg(long, default_value_t = 1.0)]
        step_size: f64,
        #[arg(long, value_enum, default_value_t = InitArg::Zeros)]
        init: InitArg,
    },
    /// Inclusion probabilities through the exterior power of K
    Exterior {
        kernel: PathBuf,
        #[arg(long, required_unless_present = "plucker")]
        k: Option<usize>,
        /// Treat the file as a rank-2 projection K on 4 items and check the Plücker relation
        #[arg(long)]
        plucker: bool,
    },
    /// Seeded exact draws from the k-DPP, one subset per line
    Sample {
        kernel: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StepArg {
    Fixed,
    Backtracking,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum InitArg {
    Zeros,
    MomentMatch,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<DppError>() {
        Some(DppError::DegenerateStratum { .. }) => 3,
        Some(DppError::SingularKernel { .. }) => 4,
        Some(DppError::BoundaryMle { .. }) => 5,
        Some(DppError::Capacity { .. }) => 6,
        Some(DppError::NotProjection { .. }) => 7,
        _ => 2,
    }
}

/// 12 significant digits.
fn fmt_prob(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..12).contains(&mag) {
        return format!("{x:.11e}");
    }
    format!("{:.*}", (11 - mag).max(0) as usize, x)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .map(|s| {
            let v: f64 = s
                .parse()
                .with_context(|| format!("`{s}` is not a number"))?;
            if !v.is_finite() {
                bail!("`{s}` is not finite");
            }
            Ok(v)
        })
        .collect()
}

fn cmd_prob(kernel: PathBuf, k: Option<usize>, subset: Option<String>, json: bool) -> Result<()> {
    let l = load_kernel(&kernel)?.kernel;
    let n = l.n();
    let records: Vec<(SubsetIndex, f64)> = match k {
        Some(k) => {
            let dist = KDppDistribution::new(&l, k)?;
            match &subset {
                Some(text) => {
                    let a = parse_subset(n, text)?;
                    let p = dist.probability(&a)?;
                    vec![(a, p)]
                }
                None => dist.table().map(|(a, p)| (a.clone(), p)).collect(),
            }
        }
        None => {
            let dist = DppDistribution::new(l)?;
            match &subset {
                Some(text) => {
                    let a = parse_subset(n, text)?;
                    let p = dist.probability(&a)?;
                    vec![(a, p)]
                }
                None => dist.table()?,
            }
        }
    };
    if json {
        let out: Vec<_> = records
            .iter()
            .map(|(a, p)| json!({ "subset": a.one_based(), "prob": p }))
            .collect();
        if subset.is_some() {
            print_json(&out[0])
        } else {
            print_json(&out)
        }
    } else {
        for (a, p) in &records {
            println!("{a}\t{}", fmt_prob(*p));
        }
        Ok(())
    }
}

fn cmd_fisher(kernel: Option<PathBuf>, theta: Option<String>, k: usize) -> Result<()> {
    let theta = match (kernel, theta) {
        (_, Some(text)) => parse_floats(&text)?,
        (Some(path), None) => {
            let l = load_kernel(&path)?.kernel;
            let m = l.matrix();
            let off_diagonal = (m - DMatrix::from_diagonal(&m.diagonal())).amax();
            let lambdas: Vec<f64> = if off_diagonal == 0.0 {
                m.diagonal().iter().copied().collect()
            } else {
                eprintln!("warning: eigenvectors are not the identity; using the eigenvalues only");
                l.psd_spectrum()?.lambdas
            };
            if let Some(&bad) = lambdas.iter().find(|&&x| x <= 0.0) {
                return Err(DppError::SingularKernel {
                    min_eigenvalue: bad,
                    max_eigenvalue: lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
                .into());
            }
            lambdas.iter().map(|x| x.ln()).collect()
        }
        (None, None) => bail!("need a kernel file or --theta"),
    };
    let f = fisher_information(&theta, k)?;
    print_json(&json!({
        "theta": theta,
        "k": k,
        "eta": f.eta,
        "G": rows(&f.g),
        "eigvals_G": f.eigenvalues(),
        "rank": f.rank(),
    }))
}

fn cmd_identifiability(kernel: PathBuf, k: usize, emit_basis: Option<PathBuf>) -> Result<()> {
    let l = load_kernel(&kernel)?.kernel;
    let r = identifiability_report(&l, k)?;
    if let Some(path) = &emit_basis {
        let files: Vec<KernelFile> = r
            .basis_v
            .iter()
            .enumerate()
            .map(|(i, h)| {
                KernelFile::from_matrix(Some(format!("basis direction {}", i + 1)), h.matrix())
            })
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&files)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    print_json(&json!({
        "n": r.n,
        "k": r.k,
        "m": r.m,
        "binom_n_k": r.num_subsets,
        "rank_phi": r.phi_rank,
        "dim_v": r.dim_v,
        "lower_bound": r.lower_bound,
        "exceeds_scale_cone": r.exceeds_scale_cone,
        "phi_singular_values": r.phi_singular_values,
        "rank_tolerance": r.rank_tolerance,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_invariance(
    kernel: PathBuf,
    k: usize,
    scale: f64,
    flip: Option<String>,
    rotate_seed: Option<u64>,
    against: Option<PathBuf>,
    json: bool,
) -> Result<()> {
    let l = load_kernel(&kernel)?.kernel;
    let n = l.n();
    let (m, description) = match against {
        Some(path) => {
            let m = load_kernel(&path)?.kernel;
            (m, format!("against {}", path.display()))
        }
        None => {
            let spec = l.psd_spectrum()?;
            let signs = match &flip {
                Some(text) => parse_floats(text)?,
                None => vec![1.0; n],
            };
            let q = match rotate_seed {
                Some(seed) => sample_commuting_rotation(&spec.lambdas, seed, DEFAULT_CLUSTER_TOL),
                None => DMatrix::identity(n, n),
            };
            let t = InvarianceTransform::new(scale, signs, q)?;
            let m = apply_invariance(&spec, &t)?.m;
            let mut parts = vec![format!("scale {scale}")];
            if let Some(text) = &flip {
                parts.push(format!("flip {text}"));
            }
            if let Some(seed) = rotate_seed {
                parts.push(format!("rotation seed {seed}"));
            }
            (m, parts.join(", "))
        }
    };
    let check = check_kdpp_invariance(&l, &m, k)?;
    if json {
        print_json(&json!({
            "k": k,
            "transform": description,
            "total_variation": check.total_variation,
            "tolerance": 1e-10,
            "passed": check.passed,
        }))
    } else {
        println!("transform: {description}");
        println!("total variation: {:.3e}", check.total_variation);
        println!("{}", if check.passed { "PASS" } else { "FAIL" });
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    data: PathBuf,
    n: usize,
    k: usize,
    max_iters: usize,
    grad_tol: f64,
    step: StepArg,
    step_size: f64,
    init: InitArg,
) -> Result<()> {
    let observations = load_data(&data, n)?;
    let config = FitConfig {
        max_iters,
        grad_tol,
        step_rule: match step {
            StepArg::Fixed => StepRule::Fixed(step_size),
            StepArg::Backtracking => StepRule::default(),
        },
        init: match init {
            InitArg::Zeros => Init::Zeros,
            InitArg::MomentMatch => Init::MomentMatch,
        },
    };
    let r = kdpp_core::fit(&observations, k, &config)?;
    print_json(&json!({
        "n": n,
        "k": k,
        "observations": observations.len(),
        "theta_tilde_hat": r.theta_tilde_hat.theta_tilde,
        "theta_hat": from_minimal(&r.theta_tilde_hat, 0.0),
        "log_likelihood": r.log_likelihood,
        "grad_norm": r.grad_norm,
        "iters": r.iters,
        "converged": r.converged,
        "fitted_eta": r.fitted_eta,
        "empirical_frequencies": r.empirical_frequencies,
    }))
}

fn cmd_exterior(kernel: PathBuf, k: Option<usize>, plucker: bool) -> Result<()> {
    let l = load_kernel(&kernel)?.kernel;
    if plucker {
        if l.n() != 4 {
            return Err(DppError::NotProjection {
                rank: 2,
                reason: format!("the Plücker check needs n = 4, got n = {}", l.n()),
            }
            .into());
        }
        let frame = projection_frame(&l, 2)?;
        let r = plucker_check(&frame)?;
        let coords: Vec<_> = r
            .coords
            .iter()
            .map(|((i, j), p)| json!({ "pair": [i, j], "p": p }))
            .collect();
        let rho: Vec<_> = enumerate_subsets(4, 2)?
            .iter()
            .map(|s| Ok(json!({ "pair": s.one_based(), "rho": principal_minor(&l, s)? })))
            .collect::<Result<_>>()?;
        return print_json(&json!({
            "plucker_coordinates": coords,
            "inclusion_probabilities": rho,
            "relation_residual": r.relation_residual,
            "sqrt_residual": r.sqrt_residual,
            "passed": r.passed,
        }));
    }
    let k = k.context("--k is required")?;
    let n = l.n();
    if k == 0 || k > n {
        bail!("--k must satisfy 1 <= k <= n = {n}");
    }
    let dim = binomial(n, k);
    if dim > MAX_COMPOUND_DIM {
        return Err(DppError::Capacity {
            what: "compound matrix dimension",
            size: dim,
            limit: MAX_COMPOUND_DIM,
        }
        .into());
    }
    let marginal = marginal_kernel(&l)?;
    let c = compound(marginal.matrix(), k)?;
    let mut max_deviation: f64 = 0.0;
    let mut records = Vec::new();
    for s in enumerate_subsets(n, k)? {
        let via_exterior = c.entry(&s, &s);
        let via_minor = principal_minor(&marginal, &s)?;
        max_deviation = max_deviation.max((via_exterior - via_minor).abs());
        records.push(json!({
            "subset": s.one_based(),
            "via_exterior": via_exterior,
            "via_minor": via_minor,
        }));
    }
    print_json(&json!({
        "n": n,
        "k": k,
        "inclusion": records,
        "max_deviation": max_deviation,
    }))
}

fn cmd_sample(kernel: PathBuf, k: usize, count: usize, seed: u64) -> Result<()> {
    let loaded = load_kernel(&kernel)?;
    let dist = KDppDistribution::new(&loaded.kernel, k)?;
    let label = loaded.name.unwrap_or_else(|| kernel.display().to_string());
    println!("# {count} draws from the {k}-DPP of {label}, seed {seed}");
    for a in dist.sample(count, seed) {
        println!("{}", format_subset(&a));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prob {
            kernel,
            k,
            full: _,
            subset,
            table: _,
            json,
        } => cmd_prob(kernel, k, subset, json),
        Command::Fisher { kernel, theta, k } => cmd_fisher(kernel, theta, k),
        Command::Identifiability {
            kernel,
            k,
            emit_basis,
        } => cmd_identifiability(kernel, k, emit_basis),
        Command::Invariance {
            kernel,
            k,
            scale,
            flip,
            rotate_seed,
            against,
            json,
        } => cmd_invariance(kernel, k, scale, flip, rotate_seed, against, json),
        Command::Fit {
            data,
            n,
            k,
            max_iters,
            grad_tol,
            step,
            step_size,
            init,
        } => cmd_fit(data, n, k, max_iters, grad_tol, step, step_size, init),
        Command::Exterior { kernel, k, plucker } => cmd_exterior(kernel, k, plucker),
        Command::Sample {
            kernel,
            k,
            count,
            seed,
        } => cmd_sample(kernel, k, count, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_prob(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_prob(6.0 / 11.0), "0.545454545455");
        assert_eq!(fmt_prob(0.125), "0.125000000000");
        assert_eq!(fmt_prob(1.0), "1.00000000000");
        assert_eq!(fmt_prob(0.0), "0");
        assert_eq!(fmt_prob(1.5e-7), "1.50000000000e-7");
    }

    #[test]
    fn exit_codes() {
        let code = |e: DppError| exit_code(&anyhow::Error::from(e));
        assert_eq!(code(DppError::Domain("x".into())), 2);
        assert_eq!(
            code(DppError::NotPsd {
                min_eigenvalue: -1.0
            }),
            2
        );
        assert_eq!(
            code(DppError::DegenerateStratum {
                k: 1,
                z_k: 0.0,
                threshold: 0.0
            }),
            3
        );
        assert_eq!(
            code(DppError::SingularKernel {
                min_eigenvalue: 0.0,
                max_eigenvalue: 1.0
            }),
            4
        );
        assert_eq!(
            code(DppError::BoundaryMle {
                element: 1,
                always_present: true
            }),
            5
        );
        assert_eq!(
            code(DppError::Capacity {
                what: "x",
                size: 2,
                limit: 1
            }),
            6
        );
        assert_eq!(
            code(DppError::NotProjection {
                rank: 2,
                reason: "x".into()
            }),
            7
        );
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 2);
    }

    #[test]
    fn float_lists() {
        assert_eq!(parse_floats("1,-1, 0.5").unwrap(), vec![1.0, -1.0, 0.5]);
        assert!(parse_floats("1,,2").is_err());
        assert!(parse_floats("inf").is_err());
        assert_eq!(data_file::parse_elements("1, 2").unwrap(), vec![1, 2]);
    }
}
