mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_core::asymptotics::{
    asympt_slicerank, asympt_subrank_tight3, capset_bound, degeneration_lower_bound, min_slice_cover, z_of_n,
    SLICERANK_AGREEMENT_TOL, Z_TOL,
};
use spectral_core::entropy::{ThetaWeights, INNER_GAP_TOL, INNER_MAX_ITERS, MINIMAX_GAP_TOL};
use spectral_core::functionals::{rho_lower_at_basis, upper_support_functional, BasisTuple, SearchStrategy};
use spectral_core::partition::PartitionSeq;
use spectral_core::quantum::{
    kronecker_coefficient, lower_quantum_functional, lr_coefficient, upper_quantum_certificate, QuantumOptions,
};
use spectral_core::subrank::{subrank_set_with_budget, DEFAULT_NODE_BUDGET, DEFAULT_POINT_BUDGET};
use spectral_core::tight::{check_comb_degeneration, check_tight, oblique_order, Tightness};
use spectral_core::{Result, SpectralError, SupportSet, Tensor};

use input::{load_support, load_tensor, parse_theta};
use output::{Cell, Format, Report};

#[derive(Parser)]
#[command(name = "spectral", version, about = "Spectral points of small tensors")]
struct Cli {
    #[arg(long, value_enum, default_value = "table", global = true)]
    format: Format,
    /// Significant digits for floating point fields.
    #[arg(long, default_value_t = 6, global = true)]
    digits: usize,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct TensorArgs {
    /// unit:r[:k], W, dicke:2,1, cw:q, matmul:a,b,c, polymult:n, capset:m,p
    #[arg(long)]
    family: Option<String>,
    /// Tensor text file.
    #[arg(long)]
    tensor: Option<PathBuf>,
}

impl TensorArgs {
    fn load(&self) -> Result<Tensor> {
        load_tensor(self.family.as_deref(), self.tensor.as_deref())
    }
}

#[derive(Args)]
struct SupportArgs {
    /// Support file, phi:n, psi:n or a family spec.
    #[arg(long)]
    support: String,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    lambda: PartitionSeq,
    #[arg(long)]
    mu: PartitionSeq,
    #[arg(long)]
    nu: PartitionSeq,
}

#[derive(Subcommand)]
enum Command {
    /// Build a family tensor and print it or summarize it.
    Family {
        #[command(flatten)]
        t: TensorArgs,
        /// Write the tensor in text format here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper support functional by basis search.
    SupportUpper {
        #[command(flatten)]
        t: TensorArgs,
        #[arg(long, default_value = "uniform")]
        theta: String,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Lower support functional at the standard basis and the searched basis.
    SupportLower {
        #[command(flatten)]
        t: TensorArgs,
        #[arg(long, default_value = "uniform")]
        theta: String,
    },
    /// Lower quantum functional by multi-start ascent.
    QuantumLower {
        #[command(flatten)]
        t: TensorArgs,
        #[arg(long, default_value = "uniform")]
        theta: String,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        /// Write the winning start's objective trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Finite-n Schur–Weyl certificate for the upper quantum functional.
    QuantumCert {
        #[command(flatten)]
        t: TensorArgs,
        #[arg(long, default_value = "uniform")]
        theta: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Projector order for crossing θ, as 1-based indices into the weighted bipartitions.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
    },
    /// Decide tightness of a support.
    Tight {
        #[command(flatten)]
        s: SupportArgs,
    },
    /// Combinatorial degeneration Ψ ⊵ Φ and the implied subrank bound.
    Degeneration {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        phi: String,
        /// Only check the degeneration, skip the subrank bound.
        #[arg(long)]
        no_bound: bool,
    },
    /// Subrank of a support by branch and bound.
    SubrankExact {
        #[command(flatten)]
        s: SupportArgs,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Asymptotic subrank of a tight 3-support.
    SubrankAsymptotic {
        #[command(flatten)]
        s: SupportArgs,
    },
    /// Table of z(n).
    Zn {
        #[arg(long, default_value_t = 2)]
        from: usize,
        #[arg(long, default_value_t = 10)]
        to: usize,
    },
    /// Cap-set growth bound for (Z/mZ)^n.
    Capset {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: u64,
    },
    /// Asymptotic slice rank, plus the exact slice cover for antichain supports.
    Slicerank {
        #[command(flatten)]
        t: TensorArgs,
        #[arg(long, default_value_t = 16)]
        starts: usize,
    },
    /// Kronecker coefficient g(λ, μ, ν).
    Kron {
        #[command(flatten)]
        p: PartitionArgs,
    },
    /// Littlewood–Richardson coefficient c^λ_{μν}.
    Lr {
        #[command(flatten)]
        p: PartitionArgs,
    },
}

fn fmt_vec(v: &[f64], digits: usize) -> String {
    v.iter().map(|&x| output::round_sig(x, digits)).collect::<Vec<_>>().join(",")
}

fn fmt_maps(maps: &[Vec<i64>]) -> String {
    maps.iter()
        .map(|m| m.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("|")
}

fn fmt_points(pts: &[Vec<usize>]) -> String {
    pts.iter()
        .map(|p| format!("({})", p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn theta_text(theta: &ThetaWeights, digits: usize) -> String {
    match theta {
        ThetaWeights::Legs(w) => fmt_vec(w, digits),
        ThetaWeights::Bipartitions { parts, .. } => parts
            .iter()
            .map(|(s, w)| {
                let legs: Vec<String> = s.iter().map(|l| (l + 1).to_string()).collect();
                format!("{{{}}}={}", legs.join(","), output::round_sig(*w, digits))
            })
            .collect::<Vec<_>>()
            .join(","),
    }
}

struct Outcome {
    report: Report,
    budget_exhausted: bool,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome {
            report,
            budget_exhausted: false,
        }
    }
}

fn quantum_tols(r: Report, o: &QuantumOptions) -> Report {
    r.tol("grad_tol", o.grad_tol)
        .tol("max_iters", o.max_iters as f64)
        .tol("cond_cap", o.cond_cap)
        .tol("armijo", 1e-4)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let digits = cli.digits;
    let out: Outcome = match &cli.cmd {
        Command::Family { t, out } => {
            let tensor = t.load()?;
            if let Some(path) = out {
                std::fs::write(path, tensor.to_text())
                    .map_err(|e| SpectralError::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
            }
            let s = tensor.support();
            let ranks: Vec<String> = (0..tensor.order())
                .map(|i| tensor.flattening_rank(&[i]).map(|r| r.to_string()))
                .collect::<Result<_>>()?;
            Report::new("family")
                .field("dims", format!("{:?}", tensor.dims()))
                .field("domain", tensor.domain().to_string())
                .field("support_size", s.len())
                .field("flattening_ranks", ranks.join(","))
                .field("antichain", s.is_antichain())
                .field("free", s.is_free())
                .into()
        }
        Command::SupportUpper { t, theta, restarts, steps } => {
            let tensor = t.load()?;
            let theta = parse_theta(theta, tensor.order())?;
            let strategy = SearchStrategy {
                restarts: *restarts,
                steps: *steps,
                seed: cli.seed,
                ..Default::default()
            };
            let r = upper_support_functional(&tensor, &theta, &strategy)?;
            let basis: Vec<String> = r
                .basis
                .iter()
                .map(|m| m.iter().map(|row| row.join(" ")).collect::<Vec<_>>().join("; "))
                .collect();
            Report::new("support-upper")
                .tol("inner_gap", INNER_GAP_TOL)
                .tol("inner_max_iters", INNER_MAX_ITERS as f64)
                .field("theta", fmt_vec(&r.theta, digits))
                .field("rho_upper", r.rho_upper)
                .field("zeta_upper", r.rho_upper.exp2())
                .field("rho_lower_same_basis", r.rho_lower)
                .field("support_size", r.support.len())
                .field("oblique_basis_found", r.oblique_basis_found)
                .field("tight", r.tight_certificate.is_some())
                .field("exact", r.exact)
                .field("candidates_evaluated", r.candidates_evaluated)
                .field("basis", basis.join(" | "))
                .into()
        }
        Command::SupportLower { t, theta } => {
            let tensor = t.load()?;
            let theta = parse_theta(theta, tensor.order())?;
            let standard = BasisTuple::standard(tensor.domain(), tensor.dims());
            let at_standard = rho_lower_at_basis(&tensor, &standard, &theta)?;
            let strategy = SearchStrategy {
                seed: cli.seed,
                ..Default::default()
            };
            let searched = upper_support_functional(&tensor, &theta, &strategy)?;
            let best = at_standard.max(searched.rho_lower);
            Report::new("support-lower")
                .tol("inner_gap", INNER_GAP_TOL)
                .field("theta", theta_text(&theta, digits))
                .field("rho_lower", best)
                .field("zeta_lower", best.exp2())
                .field("rho_lower_standard", at_standard)
                .field("rho_lower_searched", searched.rho_lower)
                .field("rho_upper_searched", searched.rho_upper)
                .field("exact", searched.exact)
                .into()
        }
        Command::QuantumLower { t, theta, starts, trace } => {
            let tensor = t.load()?;
            let theta = parse_theta(theta, tensor.order())?;
            let opts = QuantumOptions {
                starts: *starts,
                seed: cli.seed,
                ..Default::default()
            };
            let r = lower_quantum_functional(&tensor, &theta, &opts)?;
            if let Some(path) = trace {
                std::fs::write(path, r.trace_csv())
                    .map_err(|e| SpectralError::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
            }
            quantum_tols(Report::new("quantum-lower"), &opts)
                .field("theta", theta_text(&theta, digits))
                .field("value", r.value)
                .field("f_lower", r.value.exp2())
                .field("best_start", r.best_start)
                .field("iterations", r.iterations)
                .field("failed_starts", r.failed_starts)
                .field("starts", *starts)
                .into()
        }
        Command::QuantumCert { t, theta, n, order } => {
            let tensor = t.load()?;
            let theta = parse_theta(theta, tensor.order())?;
            let order: Option<Vec<usize>> = order
                .as_ref()
                .map(|o| {
                    o.iter()
                        .map(|&i| i.checked_sub(1).ok_or_else(|| SpectralError::InvalidParameter("order indices are 1-based".into())))
                        .collect::<Result<_>>()
                })
                .transpose()?;
            let c = upper_quantum_certificate(&tensor, &theta, *n, order.as_deref())?;
            let witness: Vec<String> = c
                .witness
                .iter()
                .map(|(s, l)| {
                    let legs: Vec<String> = s.iter().map(|x| (x + 1).to_string()).collect();
                    format!("{{{}}}:{l}", legs.join(","))
                })
                .collect();
            Report::new("quantum-cert")
                .tol("zero_norm", 1e-8)
                .field("theta", theta_text(&theta, digits))
                .field("n", c.n)
                .field("value", c.value)
                .field("witness", witness.join(" "))
                .field("surviving_tuples", c.surviving_tuples)
                .into()
        }
        Command::Tight { s } => {
            let support = load_support(&s.support)?;
            let r = Report::new("tight").field("support_size", support.len());
            match check_tight(&support)? {
                Tightness::Tight(c) => r
                    .field("tight", true)
                    .field("maps", fmt_maps(&c.maps))
                    .field("verified", c.verify(&support)),
                Tightness::NotTight { leg, x, y } => r
                    .field("tight", false)
                    .field("forced_equal", format!("leg {}: {x} = {y}", leg + 1)),
            }
            .into()
        }
        Command::Degeneration { psi, phi, no_bound } => {
            let psi_s = load_support(psi)?;
            let phi_s = load_support(phi)?;
            if *no_bound {
                let r = Report::new("degeneration").field("psi_size", psi_s.len()).field("phi_size", phi_s.len());
                match check_comb_degeneration(&psi_s, &phi_s)? {
                    Some(c) => r.field("degenerates", true).field("maps", fmt_maps(&c.maps)),
                    None => r.field("degenerates", false),
                }
                .into()
            } else {
                let b = degeneration_lower_bound(&psi_s, &phi_s)?;
                Report::new("degeneration")
                    .tol("minimax_gap", MINIMAX_GAP_TOL)
                    .field("psi_size", psi_s.len())
                    .field("phi_size", phi_s.len())
                    .field("degenerates", true)
                    .field("maps", fmt_maps(&b.certificate.maps))
                    .field("subrank_lower_bound", b.value)
                    .field("tight_maps", fmt_maps(&b.target.tight_certificate.maps))
                    .into()
            }
        }
        Command::SubrankExact { s, node_budget } => {
            let support = load_support(&s.support)?;
            let r = subrank_set_with_budget(&support, DEFAULT_POINT_BUDGET, *node_budget)?;
            Outcome {
                report: Report::new("subrank-exact")
                    .tol("node_budget", *node_budget as f64)
                    .field("support_size", support.len())
                    .field("subrank", r.size)
                    .field("exact", r.exact)
                    .field("diagonal", fmt_points(&r.diagonal)),
                budget_exhausted: !r.exact,
            }
        }
        Command::SubrankAsymptotic { s } => {
            let support = load_support(&s.support)?;
            let r = asympt_subrank_tight3(&support)?;
            Report::new("subrank-asymptotic")
                .tol("minimax_gap", MINIMAX_GAP_TOL)
                .field("support_size", support.len())
                .field("value", r.value)
                .field("log_value", r.log_value)
                .field("dual_log_value", r.dual_log_value)
                .field("gap", r.gap)
                .field("theta", fmt_vec(&r.theta, digits))
                .field("tight_maps", fmt_maps(&r.tight_certificate.maps))
                .into()
        }
        Command::Zn { from, to } => {
            if from > to {
                return Err(SpectralError::InvalidParameter("--from exceeds --to".into()));
            }
            let mut r = Report::new("zn").tol("bisection", Z_TOL).columns(&["n", "z", "gamma"]);
            for n in *from..=*to {
                let z = z_of_n(n)?;
                r.row(vec![Cell::from(n), z.z.into(), z.gamma.into()]);
            }
            r.into()
        }
        Command::Capset { m, p } => {
            let r = capset_bound(*m, *p)?;
            Report::new("capset")
                .tol("bisection", Z_TOL)
                .tol("minimax_gap", MINIMAX_GAP_TOL)
                .field("m", r.m)
                .field("p", r.p)
                .field("bound", r.bound)
                .field("gamma", r.gamma)
                .field("binomial_transform_verified", r.transform_verified)
                .field("relabel_to_polymult_verified", r.relabel_verified)
                .field("degeneration_maps", fmt_maps(&r.degeneration.maps))
                .field("degeneration_lp_maps", fmt_maps(&r.degeneration_lp.maps))
                .field("minimax_value", r.minimax_value)
                .into()
        }
        Command::Slicerank { t, starts } => {
            let tensor = t.load()?;
            let opts = QuantumOptions {
                starts: *starts,
                seed: cli.seed,
                ..Default::default()
            };
            let r = asympt_slicerank(&tensor, &opts)?;
            let support: SupportSet = tensor.support();
            let cover = if oblique_order(&support)?.is_some() {
                Some(min_slice_cover(&support)?)
            } else {
                None
            };
            quantum_tols(Report::new("slicerank"), &opts)
                .tol("route_agreement", SLICERANK_AGREEMENT_TOL)
                .field("value", r.value)
                .field("log_value", r.log_value)
                .field("theta", fmt_vec(&r.theta, digits))
                .field(
                    "support_route_value",
                    r.support_log_value.map_or(Cell::from("n/a"), |v| v.exp2().into()),
                )
                .field("outer_iterations", r.outer_iterations)
                .field(
                    "slice_rank_exact",
                    cover.map_or(Cell::from("n/a"), |c| c.size.into()),
                )
                .into()
        }
        Command::Kron { p } => Report::new("kron")
            .field("lambda", p.lambda.to_string())
            .field("mu", p.mu.to_string())
            .field("nu", p.nu.to_string())
            .field("g", kronecker_coefficient(&p.lambda, &p.mu, &p.nu)?)
            .into(),
        Command::Lr { p } => Report::new("lr")
            .field("lambda", p.lambda.to_string())
            .field("mu", p.mu.to_string())
            .field("nu", p.nu.to_string())
            .field("c", lr_coefficient(&p.lambda, &p.mu, &p.nu)?)
            .into(),
    };
    Ok(out)
}

fn exit_code(e: &SpectralError) -> u8 {
    match e {
        SpectralError::BudgetExceeded(_) => 3,
        SpectralError::OptimizerFailure(_) | SpectralError::VerificationFailed(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("SPECTRAL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.report.render(cli.format, cli.digits));
            ExitCode::from(if o.budget_exhausted { 3 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
