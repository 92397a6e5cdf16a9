//! Batch front end for `qwm-core`: JSON manifests in, JSON reports out.
//!
//! Exit codes: 0 on success, 2 when the inputs parse but fail a check (the
//! report is still written), 1 on usage, I/O or schema errors.

pub mod manifest;
pub mod report;

use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand};
use manifest::{FiltrationManifest, Manifest, MetricManifest, SchemaError};
use qwm_core::codes::{block_filtration, hamming_filtration_capped, kl_check, min_distance, volume_bound, QuantumCode};
use qwm_core::constructions::{
    canonicalize_m2, direct_sum, f_transform, graph_filtration, hoelder, lp_product, m2_metric, meet, metric_product,
    operator_system_metric, truncate, M2Params, Reparam,
};
use qwm_core::filtration::{from_classical, validate, Violation};
use qwm_core::geometry::{linkable, rho};
use qwm_core::lipschitz::{commutation_lipschitz_lower, spectral_lipschitz, Budget};
use qwm_core::numerics::CMatrix;
use qwm_core::{AmplifiedProjection, NumericConfig, StepFiltration, VNAlgebra};
use report::Report;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "qwm", version, about = "Finite-dimensional quantum metric toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Membership tolerance; the rank and eigenvalue tolerances scale with it.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Pad projections to this amplification degree before measuring.
    #[arg(long, global = true)]
    pub amplification: Option<usize>,
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Commutation search budget as RESTARTSxSTEPS.
    #[arg(long, global = true, default_value = "32x200", value_parser = parse_budget)]
    pub budget: (usize, usize),
}

fn parse_budget(s: &str) -> Result<(usize, usize), String> {
    let (r, t) = s.split_once('x').ok_or("expected RESTARTSxSTEPS, e.g. 32x200")?;
    let restarts = r.parse::<usize>().map_err(|e| format!("restarts: {e}"))?;
    let steps = t.parse::<usize>().map_err(|e| format!("steps: {e}"))?;
    if restarts == 0 {
        return Err("need at least one restart".into());
    }
    Ok((restarts, steps))
}

fn parse_extended(s: &str) -> Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    let x = s.parse::<f64>().map_err(|e| e.to_string())?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("expected a finite number or \"inf\"".into())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the filtration axioms and the (pseudo)metric condition.
    Validate {
        #[arg(long)]
        filtration: String,
    },
    /// Displacement gauge D(A) = inf{t : A ∈ V_t}.
    Gauge {
        #[arg(long)]
        filtration: String,
        #[arg(long)]
        matrix: String,
    },
    /// Distance ρ(P, Q) between two projections.
    Distance {
        #[arg(long)]
        filtration: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Spectral Lipschitz number and the commutation lower bound.
    Lipschitz {
        #[arg(long)]
        filtration: String,
        #[arg(long)]
        matrix: String,
    },
    /// Build a filtration from a standard family.
    Build {
        #[command(subcommand)]
        family: Family,
    },
    /// Apply a construction to a filtration.
    Transform {
        #[arg(long)]
        filtration: String,
        #[command(subcommand)]
        op: Transform,
    },
    /// Knill–Laflamme check, code distance and volume bound.
    CodeCheck {
        #[arg(long)]
        filtration: String,
        /// Code projection (a projection or matrix manifest).
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Canonical parameters (a, b, c) of a pseudometric on M₂.
    ClassifyM2 {
        #[arg(long)]
        filtration: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// Hamming filtration on n sites of local dimension d.
    Hamming {
        #[arg(long)]
        sites: usize,
        #[arg(long)]
        local_dim: usize,
        #[arg(long, default_value_t = 32)]
        cap: usize,
    },
    /// Hamming-type filtration on a direct sum of blocks.
    Blocks {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
    /// Classical metric from a distance table.
    Classical {
        #[arg(long)]
        metric: String,
    },
    /// Graph metric from an adjacency matrix.
    Graph {
        #[arg(long)]
        graph: String,
    },
    /// Canonical M₂ pseudometric with parameters a ≤ b ≤ c ≤ a + b.
    M2 {
        #[arg(long, value_parser = parse_extended)]
        a: f64,
        #[arg(long, value_parser = parse_extended)]
        b: f64,
        #[arg(long, value_parser = parse_extended)]
        c: f64,
    },
    /// Quantum metric of an operator system.
    OperatorSystem {
        #[arg(long)]
        subspace: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum Transform {
    /// Distances become min(ρ, cap).
    Truncate {
        #[arg(long)]
        cap: f64,
    },
    /// Distances become ρ^α.
    Hoelder {
        #[arg(long)]
        alpha: f64,
    },
    /// Time reparametrized by t^e, e ≥ 1.
    Power {
        #[arg(long)]
        exponent: f64,
    },
    /// Direct sum, optionally bridged at the given distance.
    DirectSum {
        #[arg(long)]
        other: String,
        #[arg(long)]
        bridge: Option<f64>,
    },
    /// Meet of two filtrations on the same space.
    Meet {
        #[arg(long)]
        other: String,
    },
    /// Max-type metric product.
    Product {
        #[arg(long)]
        other: String,
    },
    /// l^p product.
    Lp {
        #[arg(long)]
        other: String,
        #[arg(long)]
        p: f64,
    },
}

/// Failure modes mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Schema { path: String, source: SchemaError },
    #[error("{0}")]
    Domain(#[from] qwm_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Command output: a manifest or a report, plus whether every check passed.
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

struct Inputs<'a> {
    stdin: &'a mut dyn Read,
    stdin_used: bool,
}

impl Inputs<'_> {
    fn read(&mut self, path: &str) -> CliResult<String> {
        if path == "-" {
            if self.stdin_used {
                return Err(CliError::Usage("standard input can be used for one file only".into()));
            }
            self.stdin_used = true;
            let mut s = String::new();
            self.stdin.read_to_string(&mut s).map_err(|source| CliError::Io { path: path.into(), source })?;
            return Ok(s);
        }
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
    }

    fn manifest(&mut self, path: &str) -> CliResult<Manifest> {
        let text = self.read(path)?;
        manifest::parse(&text).map_err(|source| CliError::Schema { path: path.into(), source })
    }

    fn expect<T>(&mut self, path: &str, want: &str, pick: impl FnOnce(Manifest) -> Option<T>) -> CliResult<T> {
        let m = self.manifest(path)?;
        let found = m.kind();
        pick(m).ok_or_else(|| CliError::Schema {
            path: path.into(),
            source: SchemaError { pointer: "/kind".into(), message: format!("expected {want}, found \"{found}\"") },
        })
    }

    fn filtration(&mut self, path: &str) -> CliResult<FiltrationManifest> {
        self.expect(path, "\"filtration\"", |m| match m {
            Manifest::Filtration(f) => Some(f),
            _ => None,
        })
    }

    fn matrix(&mut self, path: &str) -> CliResult<CMatrix> {
        self.expect(path, "\"matrix\" or \"projection\"", |m| match m {
            Manifest::Matrix(a) => Some(a),
            Manifest::Projection(p) => Some(p.matrix().clone()),
            _ => None,
        })
    }

    fn projection(&mut self, path: &str, cfg: &NumericConfig) -> CliResult<AmplifiedProjection> {
        match self.manifest(path)? {
            Manifest::Projection(p) => Ok(p),
            Manifest::Matrix(a) => Ok(AmplifiedProjection::base(a, cfg)?),
            other => Err(CliError::Schema {
                path: path.into(),
                source: SchemaError {
                    pointer: "/kind".into(),
                    message: format!("expected \"projection\", found \"{}\"", other.kind()),
                },
            }),
        }
    }
}

fn config(global: &GlobalOpts) -> CliResult<NumericConfig> {
    let scale = global.tol / 1e-8;
    let base = NumericConfig::default();
    let cfg = NumericConfig {
        rank_tol: base.rank_tol * scale,
        membership_tol: global.tol,
        eig_cluster_tol: base.eig_cluster_tol * scale,
    };
    cfg.validate().map_err(|e| CliError::Usage(format!("--tol: {e}")))?;
    Ok(cfg)
}

fn filtration_out(f: &StepFiltration, algebra: Option<&VNAlgebra>) -> Outcome {
    let m = Manifest::Filtration(FiltrationManifest { filtration: f.clone(), algebra: algebra.cloned() });
    Outcome { text: manifest::emit(&m), ok: true }
}

fn violation_value(v: &Violation) -> serde_json::Value {
    match v {
        Violation::NotOperatorSystem { level } => json!({ "kind": "not_operator_system", "level": level }),
        Violation::NotNested { level } => json!({ "kind": "not_nested", "level": level }),
        Violation::ProductLaw { i, j } => json!({ "kind": "product_law", "i": i, "j": j }),
        Violation::CommutantNotInV0 => json!({ "kind": "commutant_not_in_v0" }),
        Violation::V0NotCommutant => json!({ "kind": "v0_not_commutant" }),
    }
}

fn execute(cli: &Cli, inputs: &mut Inputs<'_>) -> CliResult<Outcome> {
    let g = &cli.global;
    let cfg = config(g)?;
    let out = match &cli.command {
        Command::Validate { filtration } => {
            let fm = inputs.filtration(filtration)?;
            let f = &fm.filtration;
            let v = validate(f, Some(&fm.context()), &cfg)?;
            let mut r = Report::new("validate");
            r.set("is_filtration", v.is_filtration);
            r.set("is_pseudometric", v.is_pseudometric);
            r.set("is_metric", v.is_metric);
            r.set("violations", v.violations.iter().map(violation_value).collect::<Vec<_>>());
            r.set("level_dims", f.level_dims());
            r.set_floats("breakpoints", f.breakpoints());
            r.set_float("diameter", f.diameter());
            Outcome { text: r.render(), ok: v.is_pseudometric }
        }
        Command::Gauge { filtration, matrix } => {
            let f = inputs.filtration(filtration)?.filtration;
            let a = inputs.matrix(matrix)?;
            if a.nrows() != f.ambient_dim() {
                return Err(qwm_core::Error::MixedDimensions { expected: f.ambient_dim(), found: a.nrows() }.into());
            }
            let mut r = Report::new("gauge");
            r.set_float("gauge", f.displacement_gauge(&a, &cfg));
            Outcome { text: r.render(), ok: true }
        }
        Command::Distance { filtration, p, q } => {
            let f = inputs.filtration(filtration)?.filtration;
            let mut p = inputs.projection(p, &cfg)?;
            let mut q = inputs.projection(q, &cfg)?;
            if let Some(m) = g.amplification {
                p = p.pad_to(m)?;
                q = q.pad_to(m)?;
            }
            let mut r = Report::new("distance");
            r.set_float("rho", rho(&f, &p, &q, &cfg)?);
            r.set("linkable", linkable(&p, &q, &cfg)?);
            Outcome { text: r.render(), ok: true }
        }
        Command::Lipschitz { filtration, matrix } => {
            let f = inputs.filtration(filtration)?.filtration;
            let a = inputs.matrix(matrix)?;
            let budget = Budget { restarts: g.budget.0, steps: g.budget.1, seed: g.seed };
            let ls = spectral_lipschitz(&f, &a, &cfg)?;
            let lc = commutation_lipschitz_lower(&f, &a, budget, &cfg)?;
            let mut r = Report::new("lipschitz");
            r.set_float("spectral", ls.value);
            r.set_float("commutation_lower", lc.value);
            Outcome { text: r.render(), ok: true }
        }
        Command::Build { family } => match family {
            Family::Hamming { sites, local_dim, cap } => {
                filtration_out(&hamming_filtration_capped(*sites, *local_dim, *cap)?, None)
            }
            Family::Blocks { sizes } => {
                let (f, ctx) = block_filtration(sizes)?;
                filtration_out(&f, Some(&ctx.algebra))
            }
            Family::Classical { metric } => {
                let d: MetricManifest = inputs.expect(metric, "\"metric\"", |m| match m {
                    Manifest::Metric(d) => Some(d),
                    _ => None,
                })?;
                let (f, ctx) = from_classical(&d.distances)?;
                filtration_out(&f, Some(&ctx.algebra))
            }
            Family::Graph { graph } => {
                let adj = inputs.expect(graph, "\"graph\"", |m| match m {
                    Manifest::Graph(a) => Some(a),
                    _ => None,
                })?;
                let (f, ctx) = graph_filtration(&adj, &cfg)?;
                filtration_out(&f, Some(&ctx.algebra))
            }
            Family::M2 { a, b, c } => filtration_out(&m2_metric(M2Params::new(*a, *b, *c)?)?, None),
            Family::OperatorSystem { subspace } => {
                let s = inputs.expect(subspace, "\"subspace\"", |m| match m {
                    Manifest::Subspace(s) => Some(s),
                    _ => None,
                })?;
                filtration_out(&operator_system_metric(&s, &cfg)?, None)
            }
        },
        Command::Transform { filtration, op } => {
            let fm = inputs.filtration(filtration)?;
            let f = &fm.filtration;
            let same = fm.algebra.as_ref();
            match op {
                Transform::Truncate { cap } => filtration_out(&truncate(f, *cap)?, same),
                Transform::Hoelder { alpha } => filtration_out(&hoelder(f, *alpha)?, same),
                Transform::Power { exponent } => {
                    filtration_out(&f_transform(f, &Reparam::Power { exponent: *exponent })?, same)
                }
                Transform::Meet { other } => {
                    let h = inputs.filtration(other)?;
                    filtration_out(&meet(&[f.clone(), h.filtration], &cfg)?, same)
                }
                Transform::DirectSum { other, bridge } => {
                    let h = inputs.filtration(other)?;
                    let ctx = fm.context().direct_sum(&h.context());
                    filtration_out(&direct_sum(f, &h.filtration, *bridge)?, Some(&ctx.algebra))
                }
                Transform::Product { other } => {
                    let h = inputs.filtration(other)?;
                    let ctx = fm.context().tensor(&h.context());
                    filtration_out(&metric_product(f, &h.filtration, &cfg)?, Some(&ctx.algebra))
                }
                Transform::Lp { other, p } => {
                    let h = inputs.filtration(other)?;
                    let ctx = fm.context().tensor(&h.context());
                    filtration_out(&lp_product(f, &h.filtration, *p, &cfg)?, Some(&ctx.algebra))
                }
            }
        }
        Command::CodeCheck { filtration, code, level } => {
            let f = inputs.filtration(filtration)?.filtration;
            let p = inputs.matrix(code)?;
            let code = QuantumCode::new(p, f, &cfg)?;
            let kl = kl_check(&code, *level as f64, &cfg)?;
            let mut r = Report::new("code-check");
            r.set("code_dim", code.dim());
            r.set("level", *level);
            r.set("detects", kl.detects);
            r.set_float("worst_residual", kl.worst_residual);
            r.set("worst_index", kl.worst_index);
            r.set_float("min_distance", min_distance(&code, &cfg)?);
            if kl.detects {
                let vb = volume_bound(&code, *level, &cfg)?;
                r.set(
                    "volume_bound",
                    json!({ "code_dim": vb.code_dim, "dim_k": vb.dim_k, "bound": report::float(vb.bound), "holds": vb.holds }),
                );
            }
            Outcome { text: r.render(), ok: kl.detects }
        }
        Command::ClassifyM2 { filtration } => {
            let f = inputs.filtration(filtration)?.filtration;
            let (params, u) = canonicalize_m2(&f, &cfg)?;
            let mut r = Report::new("classify-m2");
            r.set_float("a", params.a);
            r.set_float("b", params.b);
            r.set_float("c", params.c);
            r.set("reflexive", params.is_reflexive());
            r.set("unitary", report::matrix(&u));
            Outcome { text: r.render(), ok: true }
        }
    };
    Ok(out)
}

/// Run with explicit streams; returns the exit code.
pub fn run_with<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return code;
        }
    };
    let mut inputs = Inputs { stdin, stdin_used: false };
    match execute(&cli, &mut inputs) {
        Ok(out) => {
            let _ = stdout.write_all(out.text.as_bytes());
            if out.ok {
                0
            } else {
                2
            }
        }
        Err(e) => {
            let code = e.exit_code();
            if code == 2 {
                let mut r = Report::new("error");
                r.set("error", e.to_string());
                let _ = stdout.write_all(r.render().as_bytes());
            }
            let _ = writeln!(stderr, "qwm: {e}");
            code
        }
    }
}

/// Run against the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let code = run_with(argv, &mut stdin.lock(), &mut out, &mut stderr.lock());
    let _ = out.flush();
    code
}
