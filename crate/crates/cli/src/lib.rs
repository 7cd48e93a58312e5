//! Command-line surface: file ingestion, one subcommand per library
//! operation, deterministic report emission (JSON or CSV), and the
//! randomized corpus runner. A fixed seed reproduces every output byte.

use clap::{Parser, Subcommand, ValueEnum};
use hardy_graph::capacity::{
    capacity, capacity_oracle_p2, equivalence_report, CapacityVariant,
};
use hardy_graph::cheeger::{
    cheeger_bounds_report, cheeger_constant, ground_state_transform, intrinsic_scale,
    is_p_intrinsic, oscillation_bound, CheegerBoundsVariant, CheegerOptions,
};
use hardy_graph::energy::{
    energy, energy_gradient, is_supersolution, p_laplacian, schrodinger, SolutionClass,
};
use hardy_graph::fractional::{
    fractional_p_weights, fractional_weights, spectral_fractional_check,
};
use hardy_graph::generate::{generate, parse_generator_spec};
use hardy_graph::graph::{
    validate, EdgeTable, ExhaustionPlan, GraphData, VertexFunction, WeightedGraph,
};
use hardy_graph::hardy::{
    criticalize, green_function, ground_state, hardy_constant, kp_check, lambda_infty,
    mazya_norm, mazya_sandwich_check, null_sequence, spectral_gap_check,
};
use hardy_graph::io::{load_graph, parse_graph_data, parse_vertex_function, save_graph};
use hardy_graph::report::{all_enforced_pass, Assertion, Rep};
use hardy_graph::simplified::{cutoff_energy_check, sandwich_report, simplified_terms};
use hardy_graph::solver::SolverOptions;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "hardygraph", version, about = "Energy, capacity, Hardy and Cheeger machinery on finite weighted graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Graph JSON file ({"p", "vertices": [{"id","m","c"}], "edges": [{"u","v","b"}]}).
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,

    /// Generate the instance instead, e.g. `path:8:kill=left:p=1.5` or
    /// `tree:2:4:killed`.
    #[arg(long, global = true)]
    pub generate: Option<String>,

    /// Override the stored homogeneity exponent.
    #[arg(long, global = true)]
    pub p: Option<f64>,

    /// Solver stationarity tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,

    /// Solver restarts for nonconvex instances.
    #[arg(long, global = true, default_value_t = 8)]
    pub restarts: usize,

    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Size cap for subset enumerations.
    #[arg(long, global = true)]
    pub subset_cap: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out_file: Option<PathBuf>,

    /// Exhaustion plan: `prefix:2,4,6`, `balls:CENTER:0,1,2`, or
    /// `sets:a|b;a|b|c`.
    #[arg(long, global = true)]
    pub exhaustion: Option<String>,

    /// Test function: `const:V`, `indicator:id1,id2`, inline JSON map, or a
    /// file path.
    #[arg(long, global = true)]
    pub phi: Option<String>,

    /// Reference function u (same forms as --phi).
    #[arg(long, global = true)]
    pub u: Option<String>,

    /// Weight function (same forms as --phi).
    #[arg(long, global = true)]
    pub weight: Option<String>,

    /// Vertex set, comma-separated ids.
    #[arg(long, global = true)]
    pub set: Option<String>,

    /// Single vertex id (probe or pole).
    #[arg(long, global = true)]
    pub vertex: Option<String>,

    #[arg(long, global = true)]
    pub sigma: Option<f64>,

    /// Operation variant: capacity standard|tilde|sim, cheeger-bounds
    /// general|gst, frac-weights sigma|p.
    #[arg(long, global = true)]
    pub variant: Option<String>,

    #[arg(long, global = true, default_value_t = false)]
    pub connected_only: bool,

    /// Cheeger enumeration region: comma ids, or `interior` for the
    /// zero-potential vertices.
    #[arg(long, global = true)]
    pub admissible: Option<String>,

    /// Relative spectral-gap margin.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub margin: f64,

    /// Corpus trial-count scale factor (1 = full).
    #[arg(long, global = true, default_value_t = 1.0)]
    pub trials: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check all graph invariants and report violations.
    Validate,
    /// Energy breakdown of a test function.
    Energy,
    /// Apply the weighted p-Laplacian.
    Plap,
    /// Apply the Schrödinger operator.
    Schrodinger,
    /// Classify a positive function as solution / supersolution / neither.
    Supersolution,
    /// Simplified-energy terms for (u, phi).
    Simplified,
    /// Two-sided comparison of the simplified total with the product energy.
    Sandwich,
    /// Cutoff energy comparison.
    Cutoff,
    /// Generalized capacity of a vertex set.
    Capacity,
    /// All capacity variants with ordering and zero-set checks.
    CapEquiv,
    /// Best Hardy constant of a weight.
    Hardy,
    /// Capacity-based weight norm by subset enumeration.
    Mazya,
    /// Two-sided comparison of the weight norm against the capacity norm.
    MazyaCheck,
    /// Largest point mass subtractable at a vertex.
    Criticalize,
    /// Null-sequence stage energies on a critical instance.
    Nullseq,
    /// Ground state of a critical instance.
    Groundstate,
    /// Positive point-source solution.
    Green,
    /// Weight-integrability check along an exhaustion.
    KpCheck,
    /// Tail best-constant estimates along an exhaustion.
    LambdaInfty,
    /// Spectral gap, criticality of the shifted instance, and saturation.
    GapCheck,
    /// Cheeger constant by subset enumeration.
    Cheeger,
    /// Scaled combinatorial edge metric and its row-sum check.
    Intrinsic,
    /// Two-sided Cheeger bounds on the reciprocal best constant.
    CheegerBounds,
    /// Ground-state edge transform.
    Gst,
    /// Fractional edge weights with the dual-route deviation.
    FracWeights,
    /// Rebuild the fractional operator and compare with the spectral power.
    FracCheck,
    /// Run the randomized check corpus.
    Corpus,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Energy => "energy",
            Command::Plap => "plap",
            Command::Schrodinger => "schrodinger",
            Command::Supersolution => "supersolution",
            Command::Simplified => "simplified",
            Command::Sandwich => "sandwich",
            Command::Cutoff => "cutoff",
            Command::Capacity => "capacity",
            Command::CapEquiv => "cap-equiv",
            Command::Hardy => "hardy",
            Command::Mazya => "mazya",
            Command::MazyaCheck => "mazya-check",
            Command::Criticalize => "criticalize",
            Command::Nullseq => "nullseq",
            Command::Groundstate => "groundstate",
            Command::Green => "green",
            Command::KpCheck => "kp-check",
            Command::LambdaInfty => "lambda-infty",
            Command::GapCheck => "gap-check",
            Command::Cheeger => "cheeger",
            Command::Intrinsic => "intrinsic",
            Command::CheegerBounds => "cheeger-bounds",
            Command::Gst => "gst",
            Command::FracWeights => "frac-weights",
            Command::FracCheck => "frac-check",
            Command::Corpus => "corpus",
        }
    }
}

#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for CliError {}

impl From<hardy_graph::Error> for CliError {
    fn from(e: hardy_graph::Error) -> Self {
        CliError(e.to_string())
    }
}

pub struct Outcome {
    pub report: Rep,
    pub all_passed: bool,
    pub rendered: String,
}

fn fail(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

impl Cli {
    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            grad_tol: self.tol,
            restarts: self.restarts,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }

    fn instance_label(&self) -> String {
        if let Some(p) = &self.graph {
            p.display().to_string()
        } else if let Some(s) = &self.generate {
            format!("generate:{s}")
        } else {
            format!("corpus:{}", self.seed)
        }
    }

    fn load_graph(&self) -> Result<WeightedGraph, CliError> {
        let g = match (&self.graph, &self.generate) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
                load_graph(&text).map_err(|e| fail(e.to_string()))?
            }
            (None, Some(spec)) => {
                let spec = parse_generator_spec(spec)?;
                generate(&spec)?
            }
            (Some(_), Some(_)) => {
                return Err(fail("pass either --graph or --generate, not both"))
            }
            (None, None) => return Err(fail("an instance is required: --graph or --generate")),
        };
        match self.p {
            Some(p) => Ok(g.with_exponent(p)?),
            None => Ok(g),
        }
    }

    fn raw_graph_data(&self) -> Result<GraphData, CliError> {
        match (&self.graph, &self.generate) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
                Ok(parse_graph_data(&text).map_err(|e| fail(e.to_string()))?)
            }
            _ => Ok(self.load_graph()?.to_data()),
        }
    }

    fn function(
        &self,
        g: &WeightedGraph,
        spec: &Option<String>,
        default: VertexFunction,
    ) -> Result<VertexFunction, CliError> {
        let Some(spec) = spec else { return Ok(default) };
        if let Some(v) = spec.strip_prefix("const:") {
            let v: f64 = v.parse().map_err(|_| fail(format!("bad constant `{spec}`")))?;
            return Ok(VertexFunction::constant(g, v));
        }
        if let Some(ids) = spec.strip_prefix("indicator:") {
            let idx = parse_id_list(g, ids)?;
            return Ok(VertexFunction::indicator(g, &idx));
        }
        if spec.trim_start().starts_with('{') {
            return Ok(parse_vertex_function(g, spec)?);
        }
        let text = std::fs::read_to_string(spec)
            .map_err(|e| fail(format!("cannot read function file {spec}: {e}")))?;
        Ok(parse_vertex_function(g, &text)?)
    }

    fn vertex_set(&self, g: &WeightedGraph) -> Result<Vec<usize>, CliError> {
        match &self.set {
            Some(ids) => parse_id_list(g, ids),
            None => Err(fail("--set is required for this subcommand")),
        }
    }

    fn probe(&self, g: &WeightedGraph) -> Result<usize, CliError> {
        match &self.vertex {
            Some(id) => Ok(g.index_of(id)?),
            None => Ok(g.probe_vertex()),
        }
    }

    fn plan(&self, g: &WeightedGraph) -> Result<ExhaustionPlan, CliError> {
        match &self.exhaustion {
            Some(spec) => parse_exhaustion(g, spec),
            None => {
                let n = g.vertex_count();
                let mut sizes: Vec<usize> =
                    [n / 4, n / 2, (3 * n) / 4].iter().copied().filter(|&s| s > 0).collect();
                sizes.dedup();
                if sizes.is_empty() {
                    sizes.push(n.max(1) - 1);
                }
                let sizes: Vec<usize> = sizes.into_iter().filter(|&s| s < n).collect();
                let sizes = if sizes.is_empty() { vec![1] } else { sizes };
                Ok(ExhaustionPlan::prefixes(g, &sizes)?)
            }
        }
    }

    fn admissible(&self, g: &WeightedGraph) -> Result<Option<Vec<usize>>, CliError> {
        match &self.admissible {
            None => Ok(None),
            Some(spec) if spec == "interior" => Ok(Some(
                (0..g.vertex_count()).filter(|&i| g.potential(i) == 0.0).collect(),
            )),
            Some(ids) => Ok(Some(parse_id_list(g, ids)?)),
        }
    }

    fn config_rep(&self) -> Rep {
        Rep::map([
            ("graph", opt_str(self.graph.as_ref().map(|p| p.display().to_string()))),
            ("generate", opt_str(self.generate.clone())),
            ("p_override", self.p.map_or(Rep::Null, Rep::Num)),
            (
                "tolerances",
                Rep::map([
                    ("stationarity", Rep::Num(self.tol)),
                    ("value", Rep::Num(1e-8)),
                    ("zero_threshold", Rep::Num(hardy_graph::hardy::CRITICAL_THRESHOLD)),
                ]),
            ),
            ("restarts", Rep::Int(self.restarts as i64)),
            ("seed", Rep::Int(self.seed as i64)),
            (
                "subset_cap",
                self.subset_cap.map_or(Rep::Null, |v| Rep::Int(v as i64)),
            ),
            (
                "output",
                Rep::Str(match self.output {
                    OutputFormat::Json => "json".into(),
                    OutputFormat::Csv => "csv".into(),
                }),
            ),
            (
                "out_file",
                opt_str(self.out_file.as_ref().map(|p| p.display().to_string())),
            ),
            ("exhaustion", opt_str(self.exhaustion.clone())),
        ])
    }
}

fn opt_str(v: Option<String>) -> Rep {
    v.map_or(Rep::Null, Rep::Str)
}

fn parse_id_list(g: &WeightedGraph, ids: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for id in ids.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(g.index_of(id)?);
    }
    if out.is_empty() {
        return Err(fail("empty vertex list"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `prefix:2,4,6` | `balls:CENTER:0,1,2` | `sets:a|b;a|b|c`
pub fn parse_exhaustion(g: &WeightedGraph, spec: &str) -> Result<ExhaustionPlan, CliError> {
    let bad = |msg: &str| fail(format!("bad exhaustion spec `{spec}`: {msg}"));
    if let Some(rest) = spec.strip_prefix("prefix:") {
        let sizes: Result<Vec<usize>, _> =
            rest.split(',').map(|s| s.trim().parse::<usize>()).collect();
        let sizes = sizes.map_err(|_| bad("sizes must be integers"))?;
        return Ok(ExhaustionPlan::prefixes(g, &sizes)?);
    }
    if let Some(rest) = spec.strip_prefix("balls:") {
        let (center, radii) = rest.split_once(':').ok_or_else(|| bad("need CENTER:radii"))?;
        let center = g.index_of(center.trim()).map_err(|e| fail(e.to_string()))?;
        let radii: Result<Vec<usize>, _> =
            radii.split(',').map(|s| s.trim().parse::<usize>()).collect();
        let radii = radii.map_err(|_| bad("radii must be integers"))?;
        return Ok(ExhaustionPlan::balls(g, center, &radii)?);
    }
    if let Some(rest) = spec.strip_prefix("sets:") {
        let mut stages = Vec::new();
        for stage in rest.split(';') {
            let ids: Vec<String> =
                stage.split('|').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            stages.push(ids);
        }
        return Ok(ExhaustionPlan::from_ids(g, &stages)?);
    }
    Err(bad("expected prefix:, balls: or sets:"))
}

fn function_rep(g: &WeightedGraph, f: &VertexFunction) -> Rep {
    Rep::Map(
        (0..g.vertex_count()).map(|i| (g.id(i).to_string(), Rep::Num(f.get(i)))).collect(),
    )
}

fn table_rep(t: &EdgeTable) -> Rep {
    Rep::List(
        t.iter()
            .map(|((u, v), b)| {
                Rep::map([
                    ("u", Rep::Str(u.clone())),
                    ("v", Rep::Str(v.clone())),
                    ("value", Rep::Num(b)),
                ])
            })
            .collect(),
    )
}

fn ids_rep(g: &WeightedGraph, set: &[usize]) -> Rep {
    Rep::List(set.iter().map(|&i| Rep::Str(g.id(i).to_string())).collect())
}

fn diagnostics_rep(d: &hardy_graph::solver::Diagnostics) -> Rep {
    Rep::map([
        ("converged", Rep::Bool(d.converged)),
        ("iterations", Rep::Int(d.iterations as i64)),
        ("grad_norm", Rep::Num(d.grad_norm)),
        ("best_start", Rep::Int(d.best_start as i64)),
    ])
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let opts = cli.solver_options();
    let mut assertions: Vec<Assertion> = Vec::new();
    let results: Rep = match cli.command {
        Command::Validate => {
            let data = cli.raw_graph_data()?;
            let report = validate(&data);
            assertions.push(Assertion::holds(
                "no_violations",
                report.violations.is_empty(),
                report.violations.len() as f64,
                0.0,
            ));
            Rep::map([
                (
                    "violations",
                    Rep::List(
                        report.violations.iter().map(|v| Rep::Str(v.to_string())).collect(),
                    ),
                ),
                ("connected", Rep::Bool(report.connected)),
                (
                    "row_sums",
                    Rep::Map(
                        report
                            .row_sums
                            .iter()
                            .map(|(id, s)| (id.clone(), Rep::Num(*s)))
                            .collect(),
                    ),
                ),
            ])
        }
        Command::Energy => {
            let g = cli.load_graph()?;
            let phi = cli.function(
                &g,
                &cli.phi,
                VertexFunction::indicator(&g, &[g.probe_vertex()]),
            )?;
            let e = energy(&g, &phi);
            Rep::map([
                ("kinetic", Rep::Num(e.kinetic)),
                ("potential", Rep::Num(e.potential)),
                ("total", Rep::Num(e.total)),
                ("positive_part", Rep::Num(e.positive_part)),
            ])
        }
        Command::Plap => {
            let g = cli.load_graph()?;
            let phi = cli.function(
                &g,
                &cli.phi,
                VertexFunction::indicator(&g, &[g.probe_vertex()]),
            )?;
            Rep::map([("laplacian", function_rep(&g, &p_laplacian(&g, &phi)))])
        }
        Command::Schrodinger => {
            let g = cli.load_graph()?;
            let phi = cli.function(
                &g,
                &cli.phi,
                VertexFunction::indicator(&g, &[g.probe_vertex()]),
            )?;
            Rep::map([
                ("residual", function_rep(&g, &schrodinger(&g, &phi))),
                ("gradient", function_rep(&g, &energy_gradient(&g, &phi))),
            ])
        }
        Command::Supersolution => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let region = match &cli.set {
                Some(ids) => parse_id_list(&g, ids)?,
                None => (0..g.vertex_count()).collect(),
            };
            let rep = is_supersolution(&g, &u, &region, None)?;
            Rep::map([
                (
                    "class",
                    Rep::Str(
                        match rep.class {
                            SolutionClass::Solution => "solution",
                            SolutionClass::Supersolution => "supersolution",
                            SolutionClass::Neither => "neither",
                        }
                        .into(),
                    ),
                ),
                ("min_residual", Rep::Num(rep.min_residual)),
                ("max_abs_residual", Rep::Num(rep.max_abs_residual)),
                ("residual", function_rep(&g, &rep.residual)),
            ])
        }
        Command::Simplified => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let phi = cli.function(
                &g,
                &cli.phi,
                VertexFunction::indicator(&g, &[g.probe_vertex()]),
            )?;
            let terms = simplified_terms(&g, &u, &phi)?;
            Rep::map([
                ("terms", table_rep(&terms.terms)),
                ("total", Rep::Num(terms.total)),
                ("supersolution_term", Rep::Num(terms.supersolution_term)),
            ])
        }
        Command::Sandwich => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let phi = cli.function(
                &g,
                &cli.phi,
                VertexFunction::indicator(&g, &[g.probe_vertex()]),
            )?;
            let rep = sandwich_report(&g, &u, &phi)?;
            assertions.push(Assertion::holds(
                "ratio_positive_finite",
                rep.ratio.is_finite() && rep.ratio > 0.0 && !rep.inconsistent,
                rep.ratio,
                f64::INFINITY,
            ));
            if (g.p() - 2.0).abs() < 1e-12 {
                assertions.push(Assertion::holds(
                    "p2_ratio_in_unit_to_double",
                    rep.ratio >= 1.0 - 1e-9 && rep.ratio <= 2.0 + 1e-9,
                    rep.ratio,
                    2.0,
                ));
            }
            Rep::map([
                ("energy_u_phi", Rep::Num(rep.energy_u_phi)),
                ("simplified_total", Rep::Num(rep.simplified_total)),
                ("supersolution_term", Rep::Num(rep.supersolution_term)),
                ("middle", Rep::Num(rep.middle)),
                ("ratio", Rep::Num(rep.ratio)),
            ])
        }
        Command::Cutoff => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let phi = cli.function(
                &g,
                &cli.phi,
                VertexFunction::indicator(&g, &[g.probe_vertex()]),
            )?;
            let rep = cutoff_energy_check(&g, &u, &phi)?;
            assertions.push(rep.assertion.clone());
            Rep::map([
                ("cutoff_energy", Rep::Num(rep.cutoff_energy)),
                ("energy", Rep::Num(rep.energy)),
                ("ratio", Rep::Num(rep.ratio)),
            ])
        }
        Command::Capacity => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let set = cli.vertex_set(&g)?;
            let variant = match cli.variant.as_deref() {
                None | Some("standard") => CapacityVariant::Standard,
                Some("tilde") => CapacityVariant::Tilde,
                Some("sim") => CapacityVariant::Sim,
                Some(other) => return Err(fail(format!("unknown capacity variant `{other}`"))),
            };
            let cap = capacity(&g, &u, &set, variant, &opts)?;
            let oracle = if (g.p() - 2.0).abs() < 1e-12
                && g.potentials().iter().all(|&c| c >= 0.0)
                && u.values().iter().all(|&v| v == 1.0)
                && variant == CapacityVariant::Standard
            {
                match capacity_oracle_p2(&g, &set) {
                    Ok(o) => {
                        assertions.push(Assertion::close(
                            "matches_linear_oracle",
                            cap.value,
                            o.value,
                            1e-8 * (1.0 + o.value.abs()),
                        ));
                        Rep::Num(o.value)
                    }
                    Err(_) => Rep::Null,
                }
            } else {
                Rep::Null
            };
            Rep::map([
                ("variant", Rep::Str(cap.variant.name().into())),
                ("value", Rep::Num(cap.value)),
                ("minimizer", function_rep(&g, &cap.minimizer)),
                ("certified", Rep::Bool(cap.certified)),
                ("diagnostics", diagnostics_rep(&cap.diagnostics)),
                ("oracle_value", oracle),
            ])
        }
        Command::CapEquiv => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let set = cli.vertex_set(&g)?;
            let rep = equivalence_report(&g, &u, &set, &opts)?;
            assertions.push(Assertion::holds(
                "standard_le_tilde",
                rep.ordering_ok,
                rep.standard.value,
                rep.tilde.value,
            ));
            assertions.push(Assertion::holds(
                "zero_sets_agree",
                rep.zero_sets_agree,
                rep.standard.value,
                rep.cap_one.value,
            ));
            Rep::map([
                ("standard", Rep::Num(rep.standard.value)),
                ("tilde", Rep::Num(rep.tilde.value)),
                ("sim", Rep::Num(rep.sim.value)),
                ("cap_one", Rep::Num(rep.cap_one.value)),
                ("substitution", Rep::Num(rep.substitution.value)),
                ("ratio_tilde", Rep::Num(rep.ratio_tilde)),
                ("ratio_sim", Rep::Num(rep.ratio_sim)),
                ("ratio_substitution", Rep::Num(rep.ratio_substitution)),
                ("zero_threshold", Rep::Num(rep.zero_threshold)),
            ])
        }
        Command::Hardy => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let est = hardy_constant(&g, &w, &opts)?;
            Rep::map([
                ("lambda0", Rep::Num(est.lambda0)),
                ("norm_h", Rep::Num(est.norm_h)),
                ("minimizer", function_rep(&g, &est.minimizer)),
                ("certified", Rep::Bool(est.certified)),
                ("indefinite", Rep::Bool(est.indefinite)),
                ("diagnostics", diagnostics_rep(&est.diagnostics)),
            ])
        }
        Command::Mazya => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let cap = cli.subset_cap.unwrap_or_else(|| g.vertex_count().min(8));
            let est = mazya_norm(&g, &w, &u, cap, cli.connected_only, &opts)?;
            Rep::map([
                ("norm_hu", Rep::Num(est.norm_hu)),
                ("argmax_set", ids_rep(&g, &est.argmax_set)),
                ("exhaustive", Rep::Bool(est.exhaustive)),
                ("subsets", Rep::Int(est.rows.len() as i64)),
                (
                    "rows",
                    Rep::List(
                        est.rows
                            .iter()
                            .map(|r| {
                                Rep::map([
                                    ("set", ids_rep(&g, &r.set)),
                                    ("numerator", Rep::Num(r.numerator)),
                                    ("capacity", Rep::Num(r.capacity)),
                                    ("quotient", Rep::Num(r.quotient)),
                                ])
                            })
                            .collect(),
                    ),
                ),
            ])
        }
        Command::MazyaCheck => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let bound = cli.subset_cap.unwrap_or(10);
            let rep = mazya_sandwich_check(&g, &w, &u, bound, &opts)?;
            assertions.extend(rep.assertions.iter().cloned());
            Rep::map([
                ("norm_h", Rep::Num(rep.hardy.norm_h)),
                ("norm_hu", Rep::Num(rep.estimate.norm_hu)),
                ("ratio", Rep::Num(rep.ratio)),
                ("critical", Rep::Bool(rep.critical)),
                ("argmax_set", ids_rep(&g, &rep.estimate.argmax_set)),
            ])
        }
        Command::Criticalize => {
            let g = cli.load_graph()?;
            let probe = cli.probe(&g)?;
            let crit = criticalize(&g, probe, &opts)?;
            assertions.push(Assertion::close(
                "post_check_lambda0",
                crit.post_check,
                0.0,
                1e-7,
            ));
            Rep::map([
                ("c0", Rep::Num(crit.c0)),
                ("probe", Rep::Str(g.id(probe).into())),
                ("already_critical", Rep::Bool(crit.already_critical)),
                ("post_check", Rep::Num(crit.post_check)),
                (
                    "modified_potential",
                    function_rep(
                        &crit.modified,
                        &VertexFunction::new(crit.modified.potentials().to_vec()),
                    ),
                ),
            ])
        }
        Command::Nullseq => {
            let g = cli.load_graph()?;
            let plan = cli.plan(&g)?;
            let psi = match &cli.u {
                Some(_) => Some(cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?),
                None => None,
            };
            let rep = null_sequence(&g, &plan, psi.as_ref(), &opts)?;
            Rep::map([
                ("energies", Rep::nums(&rep.energies)),
                ("lambda0", Rep::Num(rep.lambda0)),
                ("limit_candidate", function_rep(&g, &rep.limit_candidate)),
                ("psi", function_rep(&g, &rep.psi)),
            ])
        }
        Command::Groundstate => {
            let g = cli.load_graph()?;
            let gs = ground_state(&g, &opts)?;
            assertions.push(Assertion::le(
                "operator_residual",
                gs.residual_max,
                1e-6,
                0.0,
            ));
            Rep::map([
                ("psi", function_rep(&g, &gs.psi)),
                ("lambda0", Rep::Num(gs.lambda0)),
                ("residual_max", Rep::Num(gs.residual_max)),
                ("probe", Rep::Str(g.id(gs.probe).into())),
            ])
        }
        Command::Green => {
            let g = cli.load_graph()?;
            let pole = cli.probe(&g)?;
            let green = green_function(&g, pole, &opts)?;
            Rep::map([
                ("u", function_rep(&g, &green.u)),
                ("pole", Rep::Str(g.id(pole).into())),
                ("flux", Rep::Num(green.flux)),
                ("max_off_residual", Rep::Num(green.max_off_residual)),
                ("certified", Rep::Bool(green.certified)),
            ])
        }
        Command::KpCheck => {
            let g = cli.load_graph()?;
            let pole = cli.probe(&g)?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let plan = cli.plan(&g)?;
            let green = green_function(&g, pole, &opts)?;
            let rep = kp_check(&g, &w, &green, &plan, &opts)?;
            assertions.extend(rep.assertions.iter().cloned());
            Rep::map([
                ("lambda0", Rep::Num(rep.lambda0)),
                ("c0", Rep::Num(rep.c0)),
                ("partial_sums_green", Rep::nums(&rep.partial_sums_green)),
                ("partial_sums_ground", Rep::nums(&rep.partial_sums_ground)),
                ("stage_bounds", Rep::nums(&rep.stage_bounds)),
                ("comparison", Rep::Num(rep.comparison)),
            ])
        }
        Command::LambdaInfty => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let plan = cli.plan(&g)?;
            let tail = lambda_infty(&g, &w, &plan, &opts)?;
            let monotone = tail
                .values
                .windows(2)
                .all(|w| w[0] <= w[1] + 1e-9 * (1.0 + w[0].abs()));
            assertions.push(Assertion::holds(
                "monotone_nondecreasing",
                monotone,
                *tail.values.first().unwrap_or(&0.0),
                tail.limit,
            ));
            Rep::map([
                ("values", Rep::nums(&tail.values)),
                ("limit", Rep::Num(tail.limit)),
            ])
        }
        Command::GapCheck => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let plan = cli.plan(&g)?;
            let rep = spectral_gap_check(&g, &w, &plan, cli.margin, &opts)?;
            assertions.extend(rep.assertions.iter().cloned());
            Rep::map([
                ("lambda0", Rep::Num(rep.lambda0)),
                ("lambda_infty", Rep::nums(&rep.tail.values)),
                ("lambda_infty_limit", Rep::Num(rep.tail.limit)),
                ("gap", Rep::Bool(rep.gap)),
                ("margin", Rep::Num(rep.margin)),
                (
                    "shifted_lambda0",
                    rep.shifted_lambda0.map_or(Rep::Null, Rep::Num),
                ),
                ("criticality_energies", Rep::nums(&rep.criticality_energies)),
                ("saturation_lhs", rep.saturation_lhs.map_or(Rep::Null, Rep::Num)),
                ("saturation_rhs", rep.saturation_rhs.map_or(Rep::Null, Rep::Num)),
                ("weight_partial_sums", Rep::nums(&rep.weight_partial_sums)),
                ("cneg_partial_sums", Rep::nums(&rep.cneg_partial_sums)),
                (
                    "ground_state",
                    rep.ground_state
                        .as_ref()
                        .map_or(Rep::Null, |psi| function_rep(&g, psi)),
                ),
            ])
        }
        Command::Cheeger => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let mu: Vec<f64> = (0..g.vertex_count())
                .map(|i| g.measure(i) * w.get(i).abs())
                .collect();
            let copts = CheegerOptions {
                size_cap: cli.subset_cap.unwrap_or(usize::MAX),
                connected_only: cli.connected_only,
                exclude_full: true,
                admissible: cli.admissible(&g)?,
            };
            let a = EdgeTable::from_graph(&g);
            let res = cheeger_constant(g.ids(), &a, &mu, &copts)?;
            Rep::map([
                ("h", Rep::Num(res.h)),
                ("argmin_set", ids_rep(&g, &res.argmin_set)),
                ("enumerated", Rep::Int(res.enumerated_count as i64)),
                ("exhaustive", Rep::Bool(res.exhaustive)),
            ])
        }
        Command::Intrinsic => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let mu: Vec<f64> = (0..g.vertex_count())
                .map(|i| g.measure(i) * w.get(i).abs())
                .collect();
            let (rho, d) = intrinsic_scale(&g, &mu)?;
            let rep = is_p_intrinsic(&g, &rho, &mu)?;
            assertions.push(Assertion::le("row_sum_condition", rep.max_row, 1.0, 1e-12));
            Rep::map([
                ("d_const", Rep::Num(d)),
                ("rho", table_rep(&rho)),
                ("max_row", Rep::Num(rep.max_row)),
                ("intrinsic", Rep::Bool(rep.intrinsic)),
            ])
        }
        Command::CheegerBounds => {
            let g = cli.load_graph()?;
            let w = cli.function(&g, &cli.weight, VertexFunction::constant(&g, 1.0))?;
            let variant = match cli.variant.as_deref() {
                None | Some("general") => CheegerBoundsVariant::GeneralP,
                Some("gst") => {
                    let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
                    CheegerBoundsVariant::GstP2 { u }
                }
                Some(other) => {
                    return Err(fail(format!("unknown cheeger-bounds variant `{other}`")))
                }
            };
            let copts = CheegerOptions {
                size_cap: cli.subset_cap.unwrap_or(usize::MAX),
                connected_only: cli.connected_only,
                exclude_full: true,
                admissible: cli.admissible(&g)?,
            };
            let rep = cheeger_bounds_report(&g, &w, &variant, &copts, &opts)?;
            assertions.extend(rep.bounds.iter().cloned());
            assertions.extend(rep.gst_extra.iter().cloned());
            Rep::map([
                ("lambda0", Rep::Num(rep.lambda0)),
                ("norm_h", Rep::Num(rep.norm_h)),
                ("critical", Rep::Bool(rep.critical)),
                ("h_plain", Rep::Num(rep.h_plain.h)),
                ("h_scaled", Rep::Num(rep.h_scaled.h)),
                ("argmin_set", ids_rep(&g, &rep.h_plain.argmin_set)),
                ("d_const", Rep::Num(rep.d_const)),
                ("rho_value", Rep::Num(rep.rho_value)),
                ("exhaustive", Rep::Bool(rep.exhaustive)),
            ])
        }
        Command::Gst => {
            let g = cli.load_graph()?;
            let u = cli.function(&g, &cli.u, VertexFunction::constant(&g, 1.0))?;
            let table = ground_state_transform(&g, &u)?;
            let osc = oscillation_bound(&g, &u)?;
            Rep::map([
                ("b_u", table_rep(&table)),
                ("oscillation", Rep::Num(osc)),
                ("p2_semantics", Rep::Bool((g.p() - 2.0).abs() < 1e-12)),
            ])
        }
        Command::FracWeights => {
            let g = cli.load_graph()?;
            let sigma = cli.sigma.ok_or_else(|| fail("--sigma is required"))?;
            let fw = match cli.variant.as_deref() {
                None | Some("sigma") => fractional_weights(&g, sigma)?,
                Some("p") => fractional_p_weights(&g, sigma, g.p())?,
                Some(other) => {
                    return Err(fail(format!("unknown frac-weights variant `{other}`")))
                }
            };
            assertions.push(Assertion::le(
                "route_agreement",
                fw.max_deviation,
                1e-6,
                0.0,
            ));
            Rep::map([
                ("sigma", Rep::Num(fw.sigma)),
                ("table", table_rep(&fw.table)),
                ("max_deviation", Rep::Num(fw.max_deviation)),
            ])
        }
        Command::FracCheck => {
            let g = cli.load_graph()?;
            let sigma = cli.sigma.ok_or_else(|| fail("--sigma is required"))?;
            let check = spectral_fractional_check(&g, sigma)?;
            assertions.push(Assertion::le(
                "powered_eigenvalues",
                check.max_eigenvalue_deviation,
                1e-6,
                0.0,
            ));
            assertions.push(Assertion::le(
                "action_deviation",
                check.max_action_deviation,
                1e-6,
                0.0,
            ));
            assertions.push(Assertion::holds(
                "off_diagonal_positive",
                check.min_off_diagonal > 0.0,
                check.min_off_diagonal,
                0.0,
            ));
            Rep::map([
                ("max_action_deviation", Rep::Num(check.max_action_deviation)),
                (
                    "max_eigenvalue_deviation",
                    Rep::Num(check.max_eigenvalue_deviation),
                ),
                ("min_off_diagonal", Rep::Num(check.min_off_diagonal)),
                ("quadrature_deviation", Rep::Num(check.quadrature_deviation)),
            ])
        }
        Command::Corpus => {
            let reports = hardy_graph::checks::run_all(cli.seed, cli.trials);
            for r in &reports {
                assertions.push(Assertion::holds(
                    format!("battery_{}", r.name),
                    r.passed(),
                    if r.passed() { 1.0 } else { 0.0 },
                    1.0,
                ));
            }
            Rep::map([(
                "batteries",
                Rep::List(reports.iter().map(|r| r.to_rep()).collect()),
            )])
        }
    };

    let all_passed = all_enforced_pass(&assertions);
    let report = Rep::map([
        ("subcommand", Rep::Str(cli.command.name().into())),
        ("config", cli.config_rep()),
        ("results", results),
        (
            "assertions",
            Rep::List(assertions.iter().map(|a| a.to_rep()).collect()),
        ),
    ]);
    let rendered = match cli.output {
        OutputFormat::Json => report.to_json_pretty(),
        OutputFormat::Csv => render_csv(&cli.instance_label(), &report),
    };
    Ok(Outcome { report, all_passed, rendered })
}

/// One row per (instance, quantity): flatten the report tree into dotted
/// quantity paths with deterministic order.
pub fn render_csv(instance: &str, report: &Rep) -> String {
    let mut out = String::from("instance,quantity,value\n");
    let mut rows: Vec<(String, String)> = Vec::new();
    flatten("", report, &mut rows);
    for (quantity, value) in rows {
        out.push_str(&csv_field(instance));
        out.push(',');
        out.push_str(&csv_field(&quantity));
        out.push(',');
        out.push_str(&csv_field(&value));
        out.push('\n');
    }
    out
}

fn flatten(prefix: &str, rep: &Rep, rows: &mut Vec<(String, String)>) {
    let join = |prefix: &str, key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match rep {
        Rep::Null => rows.push((prefix.to_string(), "null".into())),
        Rep::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Rep::Num(x) => rows.push((prefix.to_string(), trim_quotes(hardy_graph::report::float_repr(*x)))),
        Rep::Int(i) => rows.push((prefix.to_string(), i.to_string())),
        Rep::Str(s) => rows.push((prefix.to_string(), s.clone())),
        Rep::List(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&join(prefix, &i.to_string()), item, rows);
            }
        }
        Rep::Map(entries) => {
            for (k, v) in entries {
                flatten(&join(prefix, k), v, rows);
            }
        }
    }
}

fn trim_quotes(s: String) -> String {
    s.trim_matches('"').to_string()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Round-trip helper used by tests: serialize a graph and parse it back.
pub fn graph_round_trip(g: &WeightedGraph) -> Result<WeightedGraph, CliError> {
    let text = save_graph(g);
    load_graph(&text).map_err(|e| fail(e.to_string()))
}
