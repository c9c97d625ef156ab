use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use irtensor::angular::{cg, HalfInt};
use irtensor::basis::{epsilon, partial_basis, sym_basis, EpsilonMethod, PartialRoute, SymRoute};
use irtensor::harmonics::{ylm, ylm_derivatives, UnitVector, YlmMethod};
use irtensor::multipoles::{
    electric_moments, electric_potential, magnetic_moments, vector_potential, ChargeDistribution, CurrentDistribution,
    FieldMethod, Units,
};
use irtensor::rotation::{rotation, wigner_d, DMethod, RotationParams};
use irtensor::verify::{self, VerifyOptions, VerifyReport, MODULES};
use irtensor::wigner_eckart::{
    reduced_me_gradient_op, reduced_me_jpow, reduced_me_rhat, reduced_me_ylm, we_matrix_element, ReducedSet, SymmetryClass,
};
use irtensor::{Tensor, C64};

#[derive(Parser)]
#[command(name = "irtensor", version, about = "Cartesian and spherical irreducible tensors")]
struct Cli {
    /// Output format; csv is available for tabular outputs.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Clebsch–Gordan coefficient ⟨j1 m1 j2 m2|j m⟩.
    Cg(CgArgs),
    /// Standard basis tensor ε₍ₙ₎(m), or a symmetric/partial basis tensor.
    Epsilon(EpsilonArgs),
    /// Wigner D-matrix, rows and columns ordered m = l … −l.
    Dmat(DmatArgs),
    /// Spherical harmonic Y_lm.
    Ylm(YlmArgs),
    /// |r|ⁿ ∂ⁿ Y_lm on the unit sphere.
    YlmGrad(YlmGradArgs),
    /// Closed-form reduced matrix element.
    Rme(RmeArgs),
    /// Operator matrix element ⟨j′ m′|O|j m⟩ assembled from reduced matrix elements.
    We(WeArgs),
    /// Multipole moments of a charge or current source.
    Multipole(MultipoleArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CgArgs {
    #[arg(long)]
    j1: HalfInt,
    #[arg(long, allow_hyphen_values = true)]
    m1: HalfInt,
    #[arg(long)]
    j2: HalfInt,
    #[arg(long, allow_hyphen_values = true)]
    m2: HalfInt,
    #[arg(long)]
    j: HalfInt,
    #[arg(long, allow_hyphen_values = true)]
    m: HalfInt,
}

#[derive(Copy, Clone, ValueEnum)]
enum EpsMethodArg {
    Recursive,
    Explicit,
    Harmonic,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EpsilonArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: i32,
    #[arg(long, value_enum, default_value_t = EpsMethodArg::Recursive)]
    method: EpsMethodArg,
    /// `sym:s` for ε₍{n,s}₎(m) or `partial:j` for the rank n+1 tensor B⁽ʲ⁾(m).
    #[arg(long, value_parser = parse_basis)]
    basis: Option<BasisArg>,
}

#[derive(Copy, Clone)]
enum BasisArg {
    Sym(usize),
    Partial(usize),
}

#[derive(Copy, Clone, ValueEnum)]
enum DMethodArg {
    Contraction,
    ProductExpansion,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DmatArgs {
    #[arg(long)]
    l: usize,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, requires = "angle", conflicts_with = "euler")]
    axis: Option<[f64; 3]>,
    #[arg(long)]
    angle: Option<f64>,
    /// z-y-z Euler angles α,β,γ.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, required_unless_present = "axis")]
    euler: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value_t = DMethodArg::Contraction)]
    method: DMethodArg,
}

#[derive(Copy, Clone, ValueEnum)]
enum YlmMethodArg {
    Analytic,
    Tensorial,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct YlmArgs {
    #[arg(long)]
    l: usize,
    #[arg(long)]
    m: i32,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    dir: [f64; 3],
    #[arg(long, value_enum, default_value_t = YlmMethodArg::Analytic)]
    method: YlmMethodArg,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct YlmGradArgs {
    #[arg(long)]
    order: usize,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    m: i32,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    dir: [f64; 3],
}

#[derive(Copy, Clone, ValueEnum)]
enum RmeKindArg {
    /// ⟨l′‖Y_n‖l⟩
    Ylm,
    /// ⟨l′‖ε₍ₙ₎·r̂ⁿ‖l⟩
    Rhat,
    /// ⟨j‖ε₍ₙ₎·Jⁿ‖j⟩
    Jpow,
    /// ⟨l′‖O₍ₙ,q₎‖l⟩ for the derivative operator with q gradients
    Gradop,
}

#[derive(Args)]
struct RmeArgs {
    #[arg(long, value_enum)]
    kind: RmeKindArg,
    #[arg(long)]
    n: usize,
    /// Bra orbital quantum number (ylm, rhat, gradop).
    #[arg(long)]
    lp: Option<usize>,
    /// Ket orbital quantum number (ylm, rhat, gradop).
    #[arg(long)]
    l: Option<usize>,
    /// Angular momentum (jpow).
    #[arg(long)]
    j: Option<HalfInt>,
    /// Number of gradients (gradop).
    #[arg(long)]
    q: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum ClassArg {
    Irreducible,
    TotallySymmetric,
    PartiallyIrreducible,
    Rank2Generic,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct WeArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    /// Cartesian rank of the operator.
    #[arg(long)]
    rank: usize,
    /// Reduced matrix element for channel s, as `s=re` or `s=re,im`. Repeatable.
    #[arg(long = "rme", value_parser = parse_rme, allow_hyphen_values = true)]
    rme: Vec<(usize, C64)>,
    #[arg(long)]
    jp: HalfInt,
    #[arg(long, allow_hyphen_values = true)]
    mp: HalfInt,
    #[arg(long)]
    j: HalfInt,
    #[arg(long, allow_hyphen_values = true)]
    m: HalfInt,
}

#[derive(Copy, Clone, ValueEnum)]
enum KindArg {
    E,
    M,
}

#[derive(Copy, Clone, ValueEnum)]
enum FieldMethodArg {
    Direct,
    Spherical,
    Cartesian,
    SphericalFull,
}

#[derive(Args)]
struct MultipoleArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// JSON source file.
    #[arg(long)]
    source: std::path::PathBuf,
    #[arg(long)]
    order: usize,
    /// Field point for the potential (electric) or vector potential (magnetic).
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    eval: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value_t = FieldMethodArg::Direct, requires = "eval")]
    method: FieldMethodArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(MODULES))]
    module: Option<String>,
    /// Tolerance applied to every check.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Include per-check runtimes (makes the report run-dependent).
    #[arg(long)]
    timings: bool,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}

fn parse_basis(s: &str) -> Result<BasisArg, String> {
    let (kind, v) = s.split_once(':').ok_or("expected sym:s or partial:j")?;
    let v: usize = v.parse().map_err(|e| format!("{v:?}: {e}"))?;
    match kind {
        "sym" => Ok(BasisArg::Sym(v)),
        "partial" => Ok(BasisArg::Partial(v)),
        _ => Err("expected sym:s or partial:j".into()),
    }
}

fn parse_rme(s: &str) -> Result<(usize, C64), String> {
    let (ch, v) = s.split_once('=').ok_or("expected s=re or s=re,im")?;
    let ch: usize = ch.trim().parse().map_err(|e| format!("{ch:?}: {e}"))?;
    let nums: Vec<f64> =
        v.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
    match nums[..] {
        [re] => Ok((ch, C64::new(re, 0.0))),
        [re, im] => Ok((ch, C64::new(re, im))),
        _ => Err("expected s=re or s=re,im".into()),
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("{s:?}: {e}"))
}

/// A command result: JSON value plus an optional table for `--format csv`.
struct Output {
    json: Value,
    table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
}

fn c(z: C64) -> Value {
    json!([z.re, z.im])
}

fn tensor_table(t: &Tensor) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = (0..t.len())
        .map(|off| {
            let idx = irtensor::tensor::MultiIndex::from_offset(t.rank(), off);
            let digits: String = idx.digits().iter().map(|d| char::from(b'1' + d)).collect();
            let z = t.entries()[off];
            vec![digits, z.re.to_string(), z.im.to_string()]
        })
        .collect();
    (vec!["index", "re", "im"], rows)
}

fn tensor_output(t: &Tensor) -> Output {
    Output { json: serde_json::to_value(t).expect("tensor serializes"), table: Some(tensor_table(t)) }
}

fn scalar_table(name: &'static str, v: String) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
    Some((vec![name], vec![vec![v]]))
}

enum Failure {
    Usage(String),
    Verify(Output),
}

impl From<irtensor::Error> for Failure {
    fn from(e: irtensor::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn run(cmd: Cmd) -> Result<Output, Failure> {
    match cmd {
        Cmd::Cg(a) => {
            let v = cg(a.j1, a.m1, a.j2, a.m2, a.j, a.m)?;
            Ok(Output { json: json!({ "value": v }), table: scalar_table("value", v.to_string()) })
        }
        Cmd::Epsilon(a) => {
            let t = match a.basis {
                None => {
                    let method = match a.method {
                        EpsMethodArg::Recursive => EpsilonMethod::Recursive,
                        EpsMethodArg::Explicit => EpsilonMethod::Explicit,
                        EpsMethodArg::Harmonic => EpsilonMethod::Harmonic,
                    };
                    epsilon(a.n, a.m, method)?.tensor
                }
                Some(BasisArg::Sym(s)) => sym_basis(a.n, s, a.m, SymRoute::Definition)?.tensor,
                Some(BasisArg::Partial(j)) => partial_basis(a.n, j, a.m, PartialRoute::CgSum)?.tensor,
            };
            Ok(tensor_output(&t))
        }
        Cmd::Dmat(a) => {
            let params = match (a.axis, a.angle, a.euler) {
                (Some(axis), Some(angle), None) => RotationParams::AxisAngle { axis, angle },
                (None, None, Some([alpha, beta, gamma])) => RotationParams::Euler { alpha, beta, gamma },
                _ => return Err(Failure::Usage("give either --axis with --angle, or --euler".into())),
            };
            let method = match a.method {
                DMethodArg::Contraction => DMethod::Contraction,
                DMethodArg::ProductExpansion => DMethod::ProductExpansion,
            };
            let d = wigner_d(a.l, &rotation(params), method)?;
            let l = a.l as i32;
            let ms: Vec<i32> = (-l..=l).rev().collect();
            let matrix: Vec<Value> =
                (0..ms.len()).map(|r| Value::Array((0..ms.len()).map(|k| c(d.matrix[(r, k)])).collect())).collect();
            let mut rows = Vec::new();
            for (r, mp) in ms.iter().enumerate() {
                for (k, m) in ms.iter().enumerate() {
                    let z = d.matrix[(r, k)];
                    rows.push(vec![mp.to_string(), m.to_string(), z.re.to_string(), z.im.to_string()]);
                }
            }
            Ok(Output {
                json: json!({ "l": a.l, "order": "m descending", "matrix": matrix }),
                table: Some((vec!["mp", "m", "re", "im"], rows)),
            })
        }
        Cmd::Ylm(a) => {
            let method = match a.method {
                YlmMethodArg::Analytic => YlmMethod::Analytic,
                YlmMethodArg::Tensorial => YlmMethod::Tensorial,
            };
            let v = ylm(a.l, a.m, &UnitVector::new(a.dir)?, method)?;
            Ok(Output {
                json: json!({ "value": c(v) }),
                table: Some((vec!["re", "im"], vec![vec![v.re.to_string(), v.im.to_string()]])),
            })
        }
        Cmd::YlmGrad(a) => Ok(tensor_output(&ylm_derivatives(a.order, a.l, a.m, &UnitVector::new(a.dir)?)?)),
        Cmd::Rme(a) => {
            let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for this kind")));
            let r = match a.kind {
                RmeKindArg::Ylm => reduced_me_ylm(need(a.lp, "lp")?, a.n, need(a.l, "l")?),
                RmeKindArg::Rhat => reduced_me_rhat(need(a.lp, "lp")?, a.n, need(a.l, "l")?),
                RmeKindArg::Jpow => {
                    let j = a.j.ok_or_else(|| Failure::Usage("--j is required for this kind".into()))?;
                    reduced_me_jpow(j, a.n)
                }
                RmeKindArg::Gradop => reduced_me_gradient_op(need(a.lp, "lp")?, a.n, need(a.q, "q")?, need(a.l, "l")?)?,
            };
            Ok(Output {
                json: serde_json::to_value(r).expect("reduced element serializes"),
                table: Some((vec!["re", "im"], vec![vec![r.value.re.to_string(), r.value.im.to_string()]])),
            })
        }
        Cmd::We(a) => {
            let class = match a.class {
                ClassArg::Irreducible => SymmetryClass::Irreducible,
                ClassArg::TotallySymmetric => SymmetryClass::TotallySymmetric,
                ClassArg::PartiallyIrreducible => SymmetryClass::PartiallyIrreducible,
                ClassArg::Rank2Generic => SymmetryClass::Rank2Generic,
            };
            if class == SymmetryClass::PartiallyIrreducible && a.rank < 2 {
                return Err(Failure::Usage("partially irreducible operators have rank ≥ 2".into()));
            }
            if class == SymmetryClass::Rank2Generic && a.rank != 2 {
                return Err(Failure::Usage("rank2-generic requires --rank 2".into()));
            }
            let values: BTreeMap<usize, C64> = a.rme.into_iter().collect();
            let set = ReducedSet { class, rank: a.rank, values };
            let t = we_matrix_element(&set, a.jp, a.mp, a.j, a.m).map_err(|e| match e {
                irtensor::Error::MissingReducedMe(_) => Failure::Usage(format!(
                    "{e}; this class needs --rme for channels {:?}",
                    ReducedSet::required_channels(class, a.rank)
                )),
                e => e.into(),
            })?;
            Ok(tensor_output(&t))
        }
        Cmd::Multipole(a) => multipole(a),
        Cmd::Verify(a) => {
            let report = verify::run(&VerifyOptions { module: a.module, tol: a.tol, seed: a.seed, timings: a.timings });
            let out = verify_output(&report);
            if report.passed {
                Ok(out)
            } else {
                Err(Failure::Verify(out))
            }
        }
    }
}

fn multipole(a: MultipoleArgs) -> Result<Output, Failure> {
    let text = std::fs::read_to_string(&a.source).map_err(|e| Failure::Usage(format!("{}: {e}", a.source.display())))?;
    let method = match a.method {
        FieldMethodArg::Direct => FieldMethod::Direct,
        FieldMethodArg::Spherical => FieldMethod::Spherical,
        FieldMethodArg::Cartesian => FieldMethod::Cartesian,
        FieldMethodArg::SphericalFull => FieldMethod::SphericalFull,
    };
    let bad_source = |e: serde_json::Error| Failure::Usage(format!("{}: {e}", a.source.display()));
    let (set, field) = match a.kind {
        KindArg::E => {
            let d: ChargeDistribution = serde_json::from_str(&text).map_err(bad_source)?;
            let set = electric_moments(&d, a.order);
            let field = match a.eval {
                Some(r) => Some(json!({ "point": r, "method": method, "potential": electric_potential(&d, r, method, a.order, Units::default())? })),
                None => None,
            };
            (set, field)
        }
        KindArg::M => {
            let d: CurrentDistribution = serde_json::from_str(&text).map_err(bad_source)?;
            let set = magnetic_moments(&d, a.order);
            let field = match a.eval {
                Some(r) => Some(json!({
                    "point": r,
                    "method": method,
                    "vector_potential": vector_potential(&d, r, method, a.order, None, Units::default())?,
                })),
                None => None,
            };
            (set, field)
        }
    };
    let rows = set
        .spherical
        .iter()
        .map(|e| vec![e.n.to_string(), e.m.to_string(), e.value.re.to_string(), e.value.im.to_string()])
        .collect();
    let mut json = serde_json::to_value(&set).expect("multipole set serializes");
    if let Some(f) = field {
        json["field"] = f;
    }
    Ok(Output { json, table: Some((vec!["n", "m", "re", "im"], rows)) })
}

fn verify_output(r: &VerifyReport) -> Output {
    let rows = r
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.module.clone(),
                c.identity.clone(),
                serde_json::to_value(c.status).expect("status").as_str().unwrap_or_default().to_string(),
                c.max_error.to_string(),
                c.tolerance.to_string(),
                c.runtime_ms.map(|t| t.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    Output {
        json: serde_json::to_value(r).expect("report serializes"),
        table: Some((vec!["name", "module", "identity", "status", "max_error", "tolerance", "runtime_ms"], rows)),
    }
}

fn emit(out: &Output, format: Format) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match (format, &out.table) {
        (Format::Csv, Some((header, rows))) => {
            let mut w = csv::Writer::from_writer(lock);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()
        }
        _ => {
            serde_json::to_writer_pretty(&mut lock, &out.json)?;
            writeln!(lock)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let (out, code) = match run(cli.cmd) {
        Ok(out) => (out, ExitCode::SUCCESS),
        Err(Failure::Verify(out)) => (out, ExitCode::from(1)),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&out, format) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    code
}
