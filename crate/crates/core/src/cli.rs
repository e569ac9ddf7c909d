use std::io::Read;

use clap::{Args, Parser, Subcommand};

use crate::dynkin::{self, DynkinType};
use crate::error::{Error, Result};
use crate::factorize::{FactorizationContext, Theta};
use crate::maps::PentagonSolution;
use crate::matrix::RatMatrix;
use crate::model::{GroupElement, GroupModel, SExponents, SeedStream};
use crate::rational::Rational;
use crate::verify::{run_suite, run_suites, Suite, SuiteReport, VerifyConfig};

/// Exact verification of pentagon-equation structures on matrix groups.
#[derive(Parser, Debug)]
#[command(name = "pentalab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run randomized exact-identity suites and emit JSON-line reports.
    Verify(VerifyArgs),
    /// Factor an ambient group element into its four symmetric factors.
    Factor(FactorArgs),
    /// Evaluate the worked examples at fixed points, comparing routes.
    Demo(DemoArgs),
    /// Print a Cartan matrix.
    Cartan(TypeArgs),
    /// Print the diagram involution.
    Tau(TauArgs),
    /// Print the splitting dimensions of the Cartan subalgebra.
    Dims(TypeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Group model: tri2, sl3s or block2n.
    #[arg(long, default_value = "tri2")]
    pub model: String,

    /// Block size for the block2n model.
    #[arg(long, default_value_t = 1)]
    pub n: usize,

    /// Exponent triple for the sl3s model, e.g. "0,-1,1".
    #[arg(long, default_value = "0,-1,1", allow_hyphen_values = true)]
    pub s: String,

    /// Conjugating element parameters: "b=..,c=.." (tri2), "a=..,b=.."
    /// (sl3s) or "b=.." (block2n, a scalar multiple of the identity).
    #[arg(long)]
    pub theta: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Suite name, or "all".
    #[arg(long, default_value = "all")]
    pub suite: String,

    /// Defined sample points per suite and shard quota.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,

    /// RNG seed; falls back to PENTALAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Coordinate sampling bound.
    #[arg(long, default_value_t = 10)]
    pub bound: u32,

    /// Worker shards; shard k draws from stream (seed, k).
    #[arg(long, default_value_t = 1)]
    pub shards: usize,

    /// Render human-readable tables instead of JSON lines.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct FactorArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Input file holding an element JSON or a bare matrix JSON; "-" reads
    /// standard input.
    #[arg(long, default_value = "-")]
    pub input: String,

    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// One of gl2, sl3, almost.
    pub example: String,

    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct TypeArgs {
    /// Family letter: A, B, C, D, E, F or G.
    #[arg(long = "type")]
    pub family: String,

    #[arg(long)]
    pub rank: usize,

    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct TauArgs {
    #[command(flatten)]
    pub ty: TypeArgs,

    /// Single vertex to map; omitting it prints the whole involution.
    #[arg(long)]
    pub index: Option<usize>,
}

impl ModelArgs {
    pub fn build_model(&self) -> Result<GroupModel> {
        match self.model.as_str() {
            "tri2" => Ok(GroupModel::Tri2),
            "sl3s" => {
                let parts: Vec<Rational> = self
                    .s
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_>>()?;
                if parts.len() != 3 {
                    return Err(Error::InvalidInput(
                        "the exponent triple needs exactly three entries".into(),
                    ));
                }
                Ok(GroupModel::Sl3s(SExponents::new(&parts[0], &parts[1], &parts[2])?))
            }
            "block2n" => GroupModel::block2n(self.n),
            other => Err(Error::InvalidInput(format!("unknown model {other:?}"))),
        }
    }

    pub fn build_theta(&self, model: &GroupModel) -> Result<Theta> {
        let pairs = parse_kv(self.theta.as_deref())?;
        let get = |key: &str| -> Result<Option<Rational>> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.parse())
                .transpose()
        };
        let known_keys: &[&str] = match model {
            GroupModel::Tri2 => &["b", "c"],
            GroupModel::Sl3s(_) => &["a", "b"],
            GroupModel::Block2n { .. } => &["b"],
        };
        for (k, _) in &pairs {
            if !known_keys.contains(&k.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "unknown theta parameter {k:?} for model {}",
                    model.name()
                )));
            }
        }
        let one = Rational::one;
        match model {
            GroupModel::Tri2 => Theta::tri2(get("b")?.unwrap_or_else(one), get("c")?.unwrap_or_else(one)),
            GroupModel::Sl3s(_) => Theta::sl3s(get("a")?.unwrap_or_else(one), get("b")?.unwrap_or_else(one)),
            GroupModel::Block2n { n } => Theta::block_scalar(*n, get("b")?.unwrap_or_else(one)),
        }
    }
}

fn parse_kv(s: Option<&str>) -> Result<Vec<(String, String)>> {
    let Some(s) = s else { return Ok(vec![]) };
    s.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            part.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got {part:?}")))
        })
        .collect()
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::SamplingExhausted(_) | Error::RejectionOverflow { .. } => 3,
        Error::NotFactorizable(_) => 1,
        _ => 2,
    }
}

/// Executes a parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Factor(args) => cmd_factor(args),
        Command::Demo(args) => cmd_demo(args),
        Command::Cartan(args) => cmd_cartan(args),
        Command::Tau(args) => cmd_tau(args),
        Command::Dims(args) => cmd_dims(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("PENTALAB_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::InvalidInput(format!("PENTALAB_SEED is not a valid seed: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let model = args.model.build_model()?;
    let theta = args.model.build_theta(&model)?;
    let seed = resolve_seed(args.seed)?;
    let cfg = VerifyConfig::new(model, theta)
        .with_samples(args.samples)
        .with_seed(seed)
        .with_bound(args.bound)
        .with_shards(args.shards);

    let suites = Suite::parse(&args.suite)?;
    let reports = if suites.len() == 1 {
        vec![run_suite(suites[0], &cfg)?]
    } else {
        run_suites(&suites, &cfg)?
    };

    let mut failed = false;
    for report in &reports {
        failed |= !report.ok();
        if args.pretty {
            print_report_pretty(report);
        } else {
            println!("{}", serde_json::to_string(report).expect("report serializes"));
        }
    }
    Ok(if failed { 1 } else { 0 })
}

fn print_report_pretty(r: &SuiteReport) {
    let status = if let Some(reason) = &r.skipped {
        format!("skipped ({reason})")
    } else if r.ok() {
        "ok".into()
    } else {
        "FAILED".into()
    };
    println!(
        "{:<14} model={:<8} samples={:<5} passed={:<5} rejected={:<5} failures={:<3} {}",
        r.suite,
        r.model["model"].as_str().unwrap_or("?"),
        r.samples,
        r.passed,
        r.rejected,
        r.failures.len(),
        status
    );
    for f in &r.failures {
        println!("    {} [{}] witness: {}", f.check, f.kind, serde_json::to_string(&f.witness).unwrap());
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::InvalidInput(format!("cannot read standard input: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {path:?}: {e}")))
    }
}

fn cmd_factor(args: FactorArgs) -> Result<i32> {
    let model = args.model.build_model()?;
    let theta = args.model.build_theta(&model)?;
    let ctx = FactorizationContext::new(model.clone(), theta)?;

    let text = read_input(&args.input)?;
    let value: serde_json::Value = serde_json::from_str(text.trim())
        .map_err(|e| Error::InvalidInput(format!("input is not valid JSON: {e}")))?;

    // Accept an element JSON, an element-like {"model":..,"matrix":..}, or
    // a bare matrix JSON interpreted in the ambient group of --model.
    let ambient: RatMatrix = if value.get("rows").is_some() {
        serde_json::from_value(value).map_err(|e| Error::InvalidInput(e.to_string()))?
    } else if value.get("matrix").is_some() && value.get("model").is_some() {
        serde_json::from_value(value["matrix"].clone())
            .map_err(|e| Error::InvalidInput(e.to_string()))?
    } else {
        let element: GroupElement =
            serde_json::from_value(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
        ctx.embed(&element)?
    };

    let f = ctx.factor(&ambient)?;
    let verified = ctx.factorization_holds(&ambient, &f);
    let out = serde_json::json!({
        "input": ambient,
        "gp": f.gp,
        "gm": f.gm,
        "gbp": f.gbp,
        "gbm": f.gbm,
        "verified": verified,
    });
    if args.pretty {
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    } else {
        println!("{}", serde_json::to_string(&out).expect("serializes"));
    }
    Ok(if verified { 0 } else { 1 })
}

fn coords_json(x: &GroupElement) -> serde_json::Value {
    serde_json::to_value(x.coord_list()).expect("coords serialize")
}

fn demo_line(lines: &mut Vec<serde_json::Value>, v: serde_json::Value) {
    lines.push(v);
}

/// Route-comparison record for one unary map evaluation.
fn route_record(
    example: &str,
    op: &str,
    input: &GroupElement,
    a: &GroupElement,
    b: &GroupElement,
) -> serde_json::Value {
    serde_json::json!({
        "example": example,
        "op": op,
        "input": coords_json(input),
        "factor_route": coords_json(a),
        "closed_form": coords_json(b),
        "agree": a == b,
    })
}

fn demo_gl2() -> Result<Vec<serde_json::Value>> {
    let mut lines = Vec::new();
    let tri2 = |a: &str, b: &str| GroupElement::tri2(a.parse().unwrap(), b.parse().unwrap());
    let sol = |b: &str, c: &str| -> Result<PentagonSolution> {
        Ok(PentagonSolution::new(FactorizationContext::new(
            GroupModel::Tri2,
            Theta::tri2(b.parse()?, c.parse()?)?,
        )?))
    };

    let s1 = sol("-1", "1")?;
    let x = tri2("2", "3")?;
    let y = tri2("5", "7")?;
    demo_line(&mut lines, route_record("gl2", "rho", &x, &s1.rho(&x)?, &s1.rho_closed(&x)?));
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "gl2",
            "op": "star",
            "inputs": [coords_json(&x), coords_json(&y)],
            "rho_route": coords_json(&s1.star(&x, &y)?),
            "closed_rho_route": coords_json(&s1.star_closed(&x, &y)?),
            "agree": s1.star(&x, &y)? == s1.star_closed(&x, &y)?,
        }),
    );
    let (u, v) = s1.s_map(&x, &y)?;
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "gl2",
            "op": "s",
            "inputs": [coords_json(&x), coords_json(&y)],
            "image": [coords_json(&u), coords_json(&v)],
            "round_trip": s1.s_inv(&u, &v)? == (x.clone(), y.clone()),
        }),
    );

    let s2 = sol("2", "1/2")?;
    demo_line(&mut lines, route_record("gl2", "rho", &x, &s2.rho(&x)?, &s2.rho_closed(&x)?));

    let s3 = sol("1", "1")?;
    demo_line(&mut lines, route_record("gl2", "j", &x, &s3.j_map(&x)?, &s3.j_closed(&x)?));
    demo_line(&mut lines, route_record("gl2", "k", &x, &s3.k_map(&x)?, &s3.k_closed(&x)?));
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "gl2",
            "op": "odot",
            "inputs": [coords_json(&x), coords_json(&y)],
            "value": coords_json(&s3.odot(&x, &y)?),
        }),
    );

    let ctx23 = FactorizationContext::new(GroupModel::Tri2, Theta::tri2("2".parse()?, "3".parse()?)?)?;
    let nt = ctx23.normalize_theta()?;
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "gl2",
            "op": "normalize_theta",
            "theta": ctx23.theta().describe(),
            "normalized": nt,
            "squares_to_identity": nt.mul(&nt)?.is_identity(),
        }),
    );

    // A seeded sample point, both routes.
    let mut stream = SeedStream::new(0);
    let p = s1.sample_point(&mut stream, 10)?;
    demo_line(&mut lines, route_record("gl2", "rho", &p, &s1.rho(&p)?, &s1.rho_closed(&p)?));
    Ok(lines)
}

fn demo_sl3() -> Result<Vec<serde_json::Value>> {
    let mut lines = Vec::new();
    let model = GroupModel::sl3s_standard();
    let elem = |c: [&str; 4]| -> Result<GroupElement> {
        GroupElement::sl3s(
            model.clone(),
            [c[0].parse()?, c[1].parse()?, c[2].parse()?, c[3].parse()?],
        )
    };
    let sol = PentagonSolution::new(FactorizationContext::new(
        model.clone(),
        Theta::sl3s(Rational::one(), Rational::one())?,
    )?);

    let x = elem(["2", "1", "1", "1"])?;
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "sl3",
            "op": "inverse",
            "input": coords_json(&x),
            "value": coords_json(&x.inv()),
            "check": x.mul(&x.inv())?.is_identity(),
        }),
    );
    let r = elem(["2", "1", "3", "1"])?;
    demo_line(&mut lines, route_record("sl3", "rho", &r, &sol.rho(&r)?, &sol.rho_closed(&r)?));
    demo_line(&mut lines, route_record("sl3", "k", &r, &sol.k_map(&r)?, &sol.k_closed(&r)?));

    let ctx = sol.context().expect("factorized");
    let mut stream = SeedStream::new(0);
    let g = ctx.sample_ambient(&mut stream, 6)?;
    let f = ctx.factor(&g)?;
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "sl3",
            "op": "factor",
            "input": g,
            "gp": f.gp,
            "gm": f.gm,
            "verified": ctx.factorization_holds(&g, &f),
        }),
    );
    Ok(lines)
}

fn demo_almost() -> Result<Vec<serde_json::Value>> {
    use crate::almost::{AlmostGroup, AlmostGroupElement};
    let mut lines = Vec::new();
    let group = AlmostGroup::new(&GroupModel::Tri2, &Theta::tri2(Rational::one(), Rational::one())?)?;
    let theta = AlmostGroupElement::Theta;
    let square = group.mul(&theta, &theta)?;
    let pair_json = |p: &AlmostGroupElement| serde_json::to_value(p).expect("element serializes");
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "almost",
            "op": "theta_square",
            "value": pair_json(&square),
            "is_unit": square == group.unit(),
        }),
    );

    let mut stream = SeedStream::new(0);
    let model = group.model();
    let p = AlmostGroupElement::Pair(model.sample(&mut stream, 6)?, model.sample(&mut stream, 6)?);
    let q = AlmostGroupElement::Pair(model.sample(&mut stream, 6)?, model.sample(&mut stream, 6)?);
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "almost",
            "op": "product",
            "inputs": [pair_json(&p), pair_json(&q)],
            "value": pair_json(&group.mul(&p, &q)?),
        }),
    );
    let pinv = group.inv_element(&p)?;
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "almost",
            "op": "inverse",
            "input": pair_json(&p),
            "value": pair_json(&pinv),
            "product_is_unit": group.mul(&p, &pinv)? == group.unit(),
        }),
    );
    demo_line(
        &mut lines,
        serde_json::json!({
            "example": "almost",
            "op": "left_unit",
            "input": pair_json(&p),
            "holds": group.mul(&group.unit(), &p)? == p,
        }),
    );
    Ok(lines)
}

fn cmd_demo(args: DemoArgs) -> Result<i32> {
    let lines = match args.example.as_str() {
        "gl2" => demo_gl2()?,
        "sl3" => demo_sl3()?,
        "almost" => demo_almost()?,
        other => return Err(Error::InvalidInput(format!("unknown demo {other:?}"))),
    };
    for line in lines {
        if args.pretty {
            println!("{}", serde_json::to_string_pretty(&line).expect("serializes"));
        } else {
            println!("{}", serde_json::to_string(&line).expect("serializes"));
        }
    }
    Ok(0)
}

fn parse_type(args: &TypeArgs) -> Result<DynkinType> {
    DynkinType::new(args.family.parse()?, args.rank)
}

fn cmd_cartan(args: TypeArgs) -> Result<i32> {
    let t = parse_type(&args)?;
    let m = dynkin::cartan_matrix(t)?;
    if args.pretty {
        println!("{m:?}");
    } else {
        println!("{}", serde_json::to_string(&m).expect("serializes"));
    }
    Ok(0)
}

fn cmd_tau(args: TauArgs) -> Result<i32> {
    let t = parse_type(&args.ty)?;
    let out = match args.index {
        Some(i) => {
            serde_json::json!({ "type": t.to_string(), "index": i, "image": dynkin::tau(t, i)? })
        }
        None => {
            let images: Vec<usize> = (1..=t.rank)
                .map(|i| dynkin::tau(t, i))
                .collect::<Result<_>>()?;
            serde_json::json!({ "type": t.to_string(), "images": images })
        }
    };
    if args.ty.pretty {
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    } else {
        println!("{}", serde_json::to_string(&out).expect("serializes"));
    }
    Ok(0)
}

fn cmd_dims(args: TypeArgs) -> Result<i32> {
    let t = parse_type(&args)?;
    let (h0, hp) = dynkin::h_decomposition_dims(t);
    let out = serde_json::json!({ "type": t.to_string(), "dim_h0": h0, "dim_hprime": hp });
    if args.pretty {
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    } else {
        println!("{}", serde_json::to_string(&out).expect("serializes"));
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_parsing() {
        let args = ModelArgs {
            model: "tri2".into(),
            n: 1,
            s: "0,-1,1".into(),
            theta: Some("b=2,c=1/2".into()),
        };
        let model = args.build_model().unwrap();
        let theta = args.build_theta(&model).unwrap();
        assert_eq!(theta, Theta::tri2("2".parse().unwrap(), "1/2".parse().unwrap()).unwrap());

        // Unknown keys are rejected.
        let args = ModelArgs {
            model: "block2n".into(),
            n: 2,
            s: "0,-1,1".into(),
            theta: Some("c=3".into()),
        };
        let model = args.build_model().unwrap();
        assert!(args.build_theta(&model).is_err());
    }

    #[test]
    fn model_parsing() {
        let args = ModelArgs {
            model: "sl3s".into(),
            n: 1,
            s: "0,1,-1".into(),
            theta: None,
        };
        assert!(matches!(args.build_model().unwrap(), GroupModel::Sl3s(_)));
        let bad = ModelArgs {
            model: "sl3s".into(),
            n: 1,
            s: "1,1,1".into(),
            theta: None,
        };
        assert!(bad.build_model().is_err());
    }

    #[test]
    fn demos_are_consistent() {
        for lines in [demo_gl2().unwrap(), demo_sl3().unwrap(), demo_almost().unwrap()] {
            assert!(!lines.is_empty());
            for line in lines {
                for key in ["agree", "check", "verified", "round_trip", "is_unit", "holds", "product_is_unit", "squares_to_identity"] {
                    if let Some(v) = line.get(key) {
                        assert_eq!(v, &serde_json::json!(true), "{line}");
                    }
                }
            }
        }
    }
}
