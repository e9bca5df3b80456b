//! Subcommand implementations.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use saatrace::applications::{
    build_hyper_family, enumerate_designs_capped, greedy_oed, HyperProblem, OedProblem, ScaledPrior,
};
use saatrace::certify::{
    compute, dudley_sphere_surrogates, matching_dudley_constant, oed_cardinality, tail_hoeffding_single,
    tail_mixed_single, Accuracy, Cardinality, Certificate, CertificateInputs, OedCardinality,
    TalagrandSurrogate,
};
use saatrace::family::{
    estimate_lipschitz, offdiag_mass, AffineFamily, FiniteSpace, Lipschitz, ListFamily, MassMode,
    MatrixFamily, OffdiagMass, OffdiagNorms, ParameterSpace, Sphere,
};
use saatrace::hutchinson::{draw_rademacher, estimate_trace, SampleBank};
use saatrace::nets::{build_sphere_net, Net};
use saatrace::rng::derive_seed;
use saatrace::saa::{
    FiniteProblem, OptimizationResult, SphereProblem, ZeroRegularizer,
};
use saatrace::validate::{
    exact_distribution, exact_tail, run_validation, SaaSolver, SphereSolver, TailConvention,
    ValidationReport, ValidationSpec,
};
use saatrace::SymMatrix;

use crate::cli::{
    BoundArgs, CertifyArgs, Cli, Command, EstimateArgs, FamilyKind, Format, HyperArgs, OedArgs,
    OptimizeArgs, OracleArgs, ProblemArgs, SamplingArgs, SpaceKind, ValidateArgs,
};
use crate::{bank, mtx, report, tables};

/// Seed stream reserved for Lipschitz estimation; trials use small indices.
const LIPSCHITZ_STREAM: u64 = u64::MAX;

/// Process exit status for a failed run: 2 when a bound's hypothesis is
/// violated, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let hypothesis = err.chain().any(|e| {
        e.downcast_ref::<saatrace::Error>().is_some_and(saatrace::Error::is_hypothesis)
            || matches!(
                e.downcast_ref::<crate::FormatError>(),
                Some(crate::FormatError::Core(c)) if c.is_hypothesis()
            )
    });
    if hypothesis {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        set_threads(n)?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Certify(a) => certify(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Optimize(a) => optimize(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Oracle(a) => oracle(a, out),
        Command::Oed(a) => oed(a, out),
        Command::Hyper(a) => hyper(a, out),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

#[cfg(not(feature = "parallel"))]
fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        bail!("--threads must be at least 1");
    }
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, command: &str, result: &T) -> Result<()> {
    let text = report::to_json(command, result)?;
    report::emit(out, text.as_bytes()).context("writing output")
}

fn write_file(path: &Path, what: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<(), crate::FormatError>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).with_context(|| format!("encoding {what}"))?;
    std::fs::write(path, buf).with_context(|| format!("writing {what} to {}", path.display()))
}

fn read_sym(path: &Path) -> Result<SymMatrix> {
    mtx::read_sym(path).with_context(|| format!("reading {}", path.display()))
}

/// A family with user-supplied Lipschitz constants.
struct WithLipschitz {
    inner: Box<dyn MatrixFamily>,
    lipschitz: Lipschitz,
}

impl MatrixFamily for WithLipschitz {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn eval(&self, theta: &[f64]) -> saatrace::Result<SymMatrix> {
        self.inner.eval(theta)
    }

    fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }
}

enum Space {
    Finite(FiniteSpace),
    Sphere(Sphere),
}

struct Problem {
    family: Box<dyn MatrixFamily>,
    space: Space,
}

fn build_problem(a: &ProblemArgs) -> Result<Problem> {
    let kind = a.family.ok_or_else(|| anyhow!("--family is required"))?;
    let mut default_space = None;
    let family: Box<dyn MatrixFamily> = match kind {
        FamilyKind::SyntheticDense | FamilyKind::SyntheticDiagdom => {
            let m = a.m.ok_or_else(|| anyhow!("synthetic families need --m"))?;
            let k = a.k_dim.ok_or_else(|| anyhow!("synthetic families need --K"))?;
            Box::new(if kind == FamilyKind::SyntheticDense {
                AffineFamily::synthetic_dense(m, k, a.family_seed, a.family_scale.unwrap_or(1.0))?
            } else {
                AffineFamily::synthetic_diagdom(m, k, a.family_seed, a.family_scale.unwrap_or(0.1))?
            })
        }
        FamilyKind::List => {
            let paths = a.matrices.as_ref().ok_or_else(|| anyhow!("the list family needs --matrices"))?;
            let mats = paths.0.iter().map(|p| read_sym(p)).collect::<Result<Vec<_>>>()?;
            let list = ListFamily::new(mats)?;
            default_space = Some(list.space());
            Box::new(list)
        }
        FamilyKind::Oed => {
            let g = a.g.as_ref().ok_or_else(|| anyhow!("the oed family needs --g"))?;
            let k = a.k.ok_or_else(|| anyhow!("the oed family needs --k"))?;
            let g = mtx::read_matrix(g).with_context(|| format!("reading {}", g.display()))?;
            let p = OedProblem::new(g, k)?;
            default_space = Some(enumerate_designs_capped(p.candidates(), k, saatrace::applications::DEFAULT_DESIGN_CAP)?);
            Box::new(p.family())
        }
    };
    let family: Box<dyn MatrixFamily> = match a.lipschitz {
        Some(lipschitz) => Box::new(WithLipschitz { inner: family, lipschitz }),
        None => family,
    };
    let space_kind = a.space.unwrap_or(match kind {
        FamilyKind::List | FamilyKind::Oed => SpaceKind::Finite,
        _ => SpaceKind::Sphere,
    });
    let space = match space_kind {
        SpaceKind::Finite => Space::Finite(match &a.space_file {
            Some(p) => tables::read_space(p).with_context(|| format!("reading {}", p.display()))?,
            None => default_space.ok_or_else(|| anyhow!("a finite space for this family needs --space-file"))?,
        }),
        SpaceKind::Sphere => {
            let b = a.b.ok_or_else(|| anyhow!("a sphere needs --B"))?;
            let center = a.center.clone().map_or_else(|| vec![0.0; family.param_dim()], |c| c.0);
            Space::Sphere(Sphere::new(center, b)?)
        }
    };
    let dim = match &space {
        Space::Finite(s) => s.param_dim(),
        Space::Sphere(s) => s.param_dim(),
    };
    if dim != family.param_dim() {
        bail!(
            "parameter space has dimension {dim} but the family expects {}",
            family.param_dim()
        );
    }
    Ok(Problem { family, space })
}

fn default_eta(sphere: &Sphere) -> f64 {
    sphere.radius() / 8.0
}

fn accuracy(b: &BoundArgs) -> Result<Accuracy> {
    let eps = b.eps.ok_or_else(|| anyhow!("--eps is required"))?;
    let delta = b.delta.ok_or_else(|| anyhow!("--delta is required"))?;
    Ok(Accuracy::new(eps, delta)?)
}

/// Everything a certificate needs about the problem.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
struct ProblemFacts {
    mass: Option<OffdiagMass>,
    lipschitz: Option<Lipschitz>,
    cardinality: Option<Cardinality>,
    m: Option<usize>,
    k: Option<usize>,
    b: Option<f64>,
}

fn fill_bound_inputs(b: &BoundArgs, facts: &ProblemFacts, acc: Accuracy) -> Result<CertificateInputs> {
    let mut inputs = CertificateInputs::new(acc);
    if let Some(mass) = facts.mass {
        inputs.alpha_2 = Some(mass.alpha2);
        inputs.alpha_f = Some(mass.alpha_f);
        inputs.alpha_m = Some(mass.alpha_m);
    }
    inputs.cardinality = facts.cardinality;
    inputs.m = facts.m;
    inputs.k = facts.k;
    inputs.b = facts.b;
    if let Some(l) = facts.lipschitz {
        inputs.l2 = l.l2;
        inputs.lf = l.lf;
        inputs.lm = l.lm;
    }
    inputs.const_c = b.const_c;
    inputs.surrogate = surrogate(b, &inputs)?;
    Ok(inputs)
}

/// User surrogates when any is given, otherwise Dudley surrogates when the
/// sphere geometry is known.
fn surrogate(b: &BoundArgs, inputs: &CertificateInputs) -> Result<Option<TalagrandSurrogate>> {
    if b.gamma2_dm.is_some() || b.gamma2_df.is_some() || b.gamma1_d2.is_some() {
        return Ok(Some(TalagrandSurrogate::user(b.gamma2_dm, b.gamma2_df, b.gamma1_d2)?));
    }
    match (inputs.k, inputs.b) {
        (Some(k), Some(radius)) if inputs.l2.is_some() || inputs.lf.is_some() || inputs.lm.is_some() => {
            let c = b.const_dudley.unwrap_or_else(matching_dudley_constant);
            Ok(Some(dudley_sphere_surrogates(k, radius, inputs.lm, inputs.lf, inputs.l2, c)?))
        }
        _ => Ok(None),
    }
}

/// Offdiagonal mass and the other problem facts; spheres get a net at
/// `eta` for the mass. Missing Lipschitz constants are estimated (and
/// marked non-certified) when the bound needs them.
fn problem_facts(p: &Problem, eta: Option<f64>, pairs: usize, seed: u64) -> Result<ProblemFacts> {
    let fam = p.family.as_ref();
    match &p.space {
        Space::Finite(fs) => Ok(ProblemFacts {
            mass: Some(offdiag_mass(fam, &ParameterSpace::Finite(fs.clone()), None, MassMode::Observed)?),
            cardinality: Some(Cardinality::exact(fs.len() as u64)?),
            m: Some(fam.dim()),
            ..ProblemFacts::default()
        }),
        Space::Sphere(sphere) => {
            let net = build_sphere_net(sphere, eta.unwrap_or_else(|| default_eta(sphere)))?;
            let own = fam.lipschitz();
            let complete = own.l2.is_some() && own.lf.is_some() && own.lm.is_some();
            let (mass, lipschitz) = if complete {
                let mode = if own.certified { MassMode::CertifiedUpper } else { MassMode::Observed };
                let space = ParameterSpace::Sphere(sphere.clone());
                (offdiag_mass(fam, &space, Some(&net), mode)?, own)
            } else {
                let est = estimate_lipschitz(fam, sphere, pairs, derive_seed(seed, LIPSCHITZ_STREAM))?;
                let space = ParameterSpace::Sphere(sphere.clone());
                (offdiag_mass(fam, &space, Some(&net), MassMode::Observed)?, est.as_lipschitz())
            };
            Ok(ProblemFacts {
                mass: Some(mass),
                lipschitz: Some(lipschitz),
                m: Some(fam.dim()),
                k: Some(sphere.param_dim()),
                b: Some(sphere.radius()),
                ..ProblemFacts::default()
            })
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReplayCheck {
    reproduced: bool,
    recorded_n: Option<u64>,
    replayed_n: Option<u64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CertifyOutput {
    certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    facts: Option<ProblemFacts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replay: Option<ReplayCheck>,
}

fn certify(a: CertifyArgs, out: Option<&Path>) -> Result<()> {
    if let Some(path) = &a.replay {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: serde_json::Value = serde_json::from_str(&text).context("parsing certificate JSON")?;
        let recorded = report::find_certificate(&v).ok_or_else(|| anyhow!("no certificate found in {}", path.display()))?;
        let replayed = recorded.replay()?;
        let reproduced = replayed.n == recorded.n && replayed.bound.to_bits() == recorded.bound.to_bits();
        write_json(
            out,
            "certify",
            &CertifyOutput {
                replay: Some(ReplayCheck {
                    reproduced,
                    recorded_n: recorded.n,
                    replayed_n: replayed.n,
                }),
                certificate: replayed,
                facts: None,
            },
        )?;
        if !reproduced {
            bail!("replay did not reproduce the recorded certificate");
        }
        return Ok(());
    }

    let bound = a.bound.bound.ok_or_else(|| anyhow!("--bound is required"))?;
    let acc = accuracy(&a.bound)?;
    let mut facts = if a.from_family {
        let p = build_problem(&a.problem)?;
        problem_facts(&p, a.problem.net_eta, a.problem.lipschitz_pairs, a.problem.family_seed)?
    } else {
        ProblemFacts {
            lipschitz: a.problem.lipschitz,
            m: a.problem.m,
            k: a.problem.k_dim,
            b: a.problem.b,
            ..ProblemFacts::default()
        }
    };
    let mut inputs = fill_bound_inputs(&a.bound, &facts, acc)?;
    inputs.alpha_m = a.alpha_m.or(inputs.alpha_m);
    inputs.alpha_f = a.alpha_f.or(inputs.alpha_f);
    inputs.alpha_2 = a.alpha_2.or(inputs.alpha_2);
    if let Some(n) = a.card {
        inputs.cardinality = Some(Cardinality::exact(n)?);
    } else if let Some(ln) = a.ln_card {
        inputs.cardinality = Some(Cardinality::from_ln(ln)?);
    }
    let certificate = compute(bound, &inputs)?;
    if !a.from_family {
        facts = ProblemFacts::default();
    }
    write_json(
        out,
        "certify",
        &CertifyOutput {
            certificate,
            facts: a.from_family.then_some(facts),
            replay: None,
        },
    )
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EstimateOutput {
    m: usize,
    n: usize,
    seed: u64,
    trace: f64,
    estimate: f64,
    error: f64,
    /// `2‖Ā‖_F² / N`.
    variance: f64,
    offdiag_norms: OffdiagNorms,
}

fn estimate(a: EstimateArgs, out: Option<&Path>) -> Result<()> {
    let matrix = match (&a.matrix, &a.theta) {
        (Some(path), _) => read_sym(path)?,
        (None, Some(theta)) => {
            let p = build_problem(&a.problem)?;
            p.family.eval(&theta.0)?
        }
        (None, None) => bail!("--matrix or --theta is required"),
    };
    let bank: SampleBank = match &a.bank {
        Some(path) => {
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            bank::read_bank(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let n = a.n.ok_or_else(|| anyhow!("--n is required"))?;
            let seed = a.seed.ok_or_else(|| anyhow!("--seed is required"))?;
            draw_rademacher(seed, n, matrix.dim())?
        }
    };
    if let Some(path) = &a.bank_out {
        write_file(path, "sample bank", |buf| bank::write_bank(buf, &bank))?;
    }
    let est = estimate_trace(&matrix, &bank)?;
    let norms = OffdiagNorms::of(&matrix)?;
    write_json(
        out,
        "estimate",
        &EstimateOutput {
            m: matrix.dim(),
            n: bank.n(),
            seed: bank.seed(),
            trace: matrix.trace(),
            estimate: est,
            error: est - matrix.trace(),
            variance: 2.0 * norms.frobenius * norms.frobenius / bank.n() as f64,
            offdiag_norms: norms,
        },
    )
}

/// `N` from `--n`, or from a certificate built on the problem facts.
fn sample_amount(s: &SamplingArgs, facts: &ProblemFacts) -> Result<(usize, Option<Certificate>)> {
    if let Some(n) = s.n {
        if n == 0 {
            bail!("--n must be at least 1");
        }
        return Ok((n, None));
    }
    let bound = s
        .bound
        .bound
        .ok_or_else(|| anyhow!("either --n or --bound is required"))?;
    let cert = compute(bound, &fill_bound_inputs(&s.bound, facts, accuracy(&s.bound)?)?)?;
    Ok((cert.samples()?, Some(cert)))
}

/// Net for the search: `--net-eta`, else the certificate's own scale, else
/// the default.
fn search_net(sphere: &Sphere, eta: Option<f64>, cert: Option<&Certificate>) -> Result<Net> {
    let eta = eta
        .or_else(|| cert.and_then(|c| c.inputs.eta))
        .unwrap_or_else(|| default_eta(sphere));
    Ok(build_sphere_net(sphere, eta)?)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OptimizeOutput {
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    net_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    net_eta: Option<f64>,
    facts: ProblemFacts,
    result: OptimizationResult,
}

fn optimize(a: OptimizeArgs, out: Option<&Path>) -> Result<()> {
    let seed = a.seed.ok_or_else(|| anyhow!("--seed is required"))?;
    let p = build_problem(&a.problem)?;
    let facts = problem_facts(&p, a.problem.net_eta, a.problem.lipschitz_pairs, seed)?;
    let (n, cert) = sample_amount(&a.sampling, &facts)?;
    let bank = draw_rademacher(seed, n, p.family.dim())?;
    if let Some(path) = &a.bank_out {
        write_file(path, "sample bank", |buf| bank::write_bank(buf, &bank))?;
    }
    let (mut result, net) = match &p.space {
        Space::Finite(fs) => (FiniteProblem::new(p.family.as_ref(), fs, &ZeroRegularizer)?.solve(&bank)?, None),
        Space::Sphere(sphere) => {
            let net = search_net(sphere, a.problem.net_eta, cert.as_ref())?;
            let sp = SphereProblem::new(p.family.as_ref(), &ZeroRegularizer, &net, a.refine)?;
            (sp.solve(&bank, a.refine)?, Some(net))
        }
    };
    result.certificate = cert;
    if let (Some(path), Some(net)) = (&a.net_out, &net) {
        write_file(path, "net", |buf| tables::write_net(buf, net))?;
    }
    write_json(
        out,
        "optimize",
        &OptimizeOutput {
            n,
            seed,
            net_size: net.as_ref().map(Net::len),
            net_eta: net.as_ref().map(Net::eta),
            facts,
            result,
        },
    )
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ValidateOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    net_size: Option<usize>,
    facts: ProblemFacts,
    /// Per-trial records go to the CSV log, not here.
    report: ValidationReport,
}

/// Runs the trials and writes the log; the returned report has no records.
fn validation(
    solver: &dyn SaaSolver,
    n: usize,
    acc: Accuracy,
    trials: usize,
    seed: u64,
    log: Option<&Path>,
) -> Result<ValidationReport> {
    let mut rep = run_validation(
        solver,
        &ValidationSpec {
            n,
            eps: acc.eps,
            delta: acc.delta,
            trials,
            master_seed: seed,
        },
    )?;
    if let Some(path) = log {
        write_file(path, "trial log", |buf| tables::write_trials(buf, &rep.records))?;
    }
    rep.records.clear();
    Ok(rep)
}

fn validate(a: ValidateArgs, out: Option<&Path>) -> Result<()> {
    let seed = a.seed.ok_or_else(|| anyhow!("--seed is required"))?;
    let acc = accuracy(&a.sampling.bound)?;
    let p = build_problem(&a.problem)?;
    let facts = problem_facts(&p, a.problem.net_eta, a.problem.lipschitz_pairs, seed)?;
    let (n, certificate) = sample_amount(&a.sampling, &facts)?;
    let (report, net_size) = match &p.space {
        Space::Finite(fs) => {
            let fp = FiniteProblem::new(p.family.as_ref(), fs, &ZeroRegularizer)?;
            (validation(&fp, n, acc, a.trials, seed, a.log.as_deref())?, None)
        }
        Space::Sphere(sphere) => {
            let net = search_net(sphere, a.problem.net_eta, certificate.as_ref())?;
            let sp = SphereProblem::new(p.family.as_ref(), &ZeroRegularizer, &net, a.refine)?;
            let solver = SphereSolver {
                problem: &sp,
                refine_steps: a.refine,
            };
            (validation(&solver, n, acc, a.trials, seed, a.log.as_deref())?, Some(net.len()))
        }
    };
    write_json(
        out,
        "validate",
        &ValidateOutput {
            certificate,
            net_size,
            facts,
            report,
        },
    )
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TailRow {
    t: f64,
    exact_at_least: f64,
    exact_greater: f64,
    hoeffding: f64,
    mixed: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleOutput {
    m: usize,
    n: usize,
    trace: f64,
    mean: f64,
    variance: f64,
    /// `2‖Ā‖_F² / N`.
    predicted_variance: f64,
    atoms: Vec<(f64, u64)>,
    tails: Vec<TailRow>,
}

fn oracle(a: OracleArgs, out: Option<&Path>) -> Result<()> {
    let matrix = read_sym(&a.matrix)?;
    let dist = exact_distribution(&matrix, a.n)?;
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            tables::write_distribution(&mut buf, &dist)?;
            report::emit(out, &buf).context("writing output")
        }
        Format::Json => {
            let tr = matrix.trace();
            let tails = a
                .t
                .as_ref()
                .map_or(&[][..], |t| &t.0)
                .iter()
                .map(|&t| {
                    Ok(TailRow {
                        t,
                        exact_at_least: exact_tail(&dist, tr, t, TailConvention::AtLeast),
                        exact_greater: exact_tail(&dist, tr, t, TailConvention::Greater),
                        hoeffding: tail_hoeffding_single(&matrix, a.n, t)?.capped,
                        mixed: tail_mixed_single(&matrix, a.n, t)?.capped,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let nf = matrix.offdiag().norm_f();
            write_json(
                out,
                "oracle",
                &OracleOutput {
                    m: matrix.dim(),
                    n: a.n,
                    trace: tr,
                    mean: dist.mean(),
                    variance: dist.variance(),
                    predicted_variance: 2.0 * nf * nf / a.n as f64,
                    atoms: dist.atoms,
                    tails,
                },
            )
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Design {
    index: Option<usize>,
    design: Vec<f64>,
    objective: f64,
    log_det: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OedOutput {
    candidates: usize,
    k: usize,
    designs: usize,
    cardinality: OedCardinality,
    optimum: Design,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy: Option<Design>,
    #[serde(skip_serializing_if = "Option::is_none")]
    saa: Option<OptimizationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<ValidationReport>,
}

fn oed(a: OedArgs, out: Option<&Path>) -> Result<()> {
    let g = mtx::read_matrix(&a.g).with_context(|| format!("reading {}", a.g.display()))?;
    let problem = OedProblem::new(g, a.k)?;
    let family = problem.family();
    let space = enumerate_designs_capped(problem.candidates(), a.k, a.design_cap)?;
    let fp = FiniteProblem::new(&family, &space, &ZeroRegularizer)?;
    let (star, f_star) = fp.exact_minimum();
    let design = |index: Option<usize>, theta: Vec<f64>| -> Result<Design> {
        Ok(Design {
            index,
            objective: family.eval(&theta)?.trace(),
            log_det: family.log_det(&theta)?,
            design: theta,
        })
    };
    let mut optimum = design(Some(star), space.points()[star].clone())?;
    optimum.objective = f_star;
    let greedy = if a.greedy {
        let theta = greedy_oed(&problem)?;
        let index = space.points().iter().position(|p| *p == theta);
        Some(design(index, theta)?)
    } else {
        None
    };
    let (saa, validation_report) = match a.seed {
        Some(seed) => {
            let facts = problem_facts(
                &Problem {
                    family: Box::new(family.clone()),
                    space: Space::Finite(space.clone()),
                },
                None,
                0,
                seed,
            )?;
            let (n, cert) = sample_amount(&a.sampling, &facts)?;
            let mut r = fp.solve(&draw_rademacher(seed, n, fp.dim())?)?;
            r.certificate = cert;
            let v = match a.trials {
                Some(trials) => Some(validation(&fp, n, accuracy(&a.sampling.bound)?, trials, seed, a.log.as_deref())?),
                None => None,
            };
            (Some(r), v)
        }
        None if a.trials.is_some() => bail!("--trials needs --seed"),
        None => (None, None),
    };
    write_json(
        out,
        "oed",
        &OedOutput {
            candidates: problem.candidates(),
            k: a.k,
            designs: space.len(),
            cardinality: oed_cardinality(problem.candidates(), a.k)?,
            optimum,
            greedy,
            saa,
            validation: validation_report,
        },
    )
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HyperOutput {
    n: usize,
    seed: u64,
    net_size: usize,
    net_eta: f64,
    facts: ProblemFacts,
    /// Objective `log det Ψ + R` at the reported point.
    result: OptimizationResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<ValidationReport>,
}

fn hyper(a: HyperArgs, out: Option<&Path>) -> Result<()> {
    let seed = a.seed.ok_or_else(|| anyhow!("--seed is required"))?;
    let forward = mtx::read_matrix(&a.forward).with_context(|| format!("reading {}", a.forward.display()))?;
    let data = tables::read_vector(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let gamma0 = read_sym(&a.gamma0)?;
    let mu0 = tables::read_vector(&a.mu0).with_context(|| format!("reading {}", a.mu0.display()))?;
    let sphere = Sphere::new(a.center.0.clone(), a.b)?.with_floor(0, a.theta_min)?;
    let problem = HyperProblem::new(forward, data, a.sigma, ScaledPrior::new(gamma0, mu0)?, sphere)?;
    let (family, reg, sphere) =
        build_hyper_family(&problem, a.lipschitz, a.lipschitz_pairs, derive_seed(seed, LIPSCHITZ_STREAM))?;
    let mass_net = build_sphere_net(&sphere, a.net_eta.unwrap_or_else(|| default_eta(&sphere)))?;
    let lip = family.lipschitz();
    let mode = if lip.certified { MassMode::CertifiedUpper } else { MassMode::Observed };
    let mass = offdiag_mass(&family, &ParameterSpace::Sphere(sphere.clone()), Some(&mass_net), mode)?;
    let facts = ProblemFacts {
        mass: Some(mass),
        lipschitz: Some(lip),
        m: Some(family.dim()),
        k: Some(sphere.param_dim()),
        b: Some(sphere.radius()),
        cardinality: None,
    };
    let (n, cert) = sample_amount(&a.sampling, &facts)?;
    let net = search_net(&sphere, a.net_eta, cert.as_ref())?;
    let sp = SphereProblem::new(&family, &reg, &net, a.refine)?;
    let mut result = sp.solve(&draw_rademacher(seed, n, family.dim())?, a.refine)?;
    result.certificate = cert;
    let validation_report = match a.trials {
        Some(trials) => {
            let solver = SphereSolver {
                problem: &sp,
                refine_steps: a.refine,
            };
            Some(validation(&solver, n, accuracy(&a.sampling.bound)?, trials, seed, a.log.as_deref())?)
        }
        None => None,
    };
    write_json(
        out,
        "hyper",
        &HyperOutput {
            n,
            seed,
            net_size: net.len(),
            net_eta: net.eta(),
            facts,
            result,
            validation: validation_report,
        },
    )
}

