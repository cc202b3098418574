use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use serde::Deserialize;
use serde_json::{json, Value};

use logcy::broken_lines::{check_consistency, chamber_points, enumerate_broken_lines, lift};
use logcy::curve_classes::format_boundary;
use logcy::cyclic_quotient::{
    build_chain, dual_singularity_type, family_equations, p_resolution, semigroup_type, develop, ChainSpec,
};
use logcy::error::{Error, Result};
use logcy::lattice::LatticeVector;
use logcy::rational::{fmt_q, parse_q, Q};
use logcy::scattering::{
    canonical_diagram, extract_invariants, initial_diagram, loop_identity, scatter_complete, scattering_functional,
    ScatteringDiagram,
};
use logcy::series_ring::TruncatedElement;
use logcy::theta::{
    chart_equation, fiber_relations, format_point, ray_generator_names, ray_relations, ThetaAlgebra, ThetaElement,
};
use logcy::tropical_pair::{build_pair, looijenga_check, ChartPoint, PairSpec, Side, TangentVector, TropicalPair};

const EXIT_INVALID: u8 = 2;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "logcy", version, about = "Scattering diagrams, broken lines and theta functions of log Calabi-Yau surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Spec file (JSON) or preset name: m05, p1p1-blowup, cubic, vertex-n1, chain-n1-l4
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Truncation order k (rational, at least 1)
    #[arg(long, global = true)]
    order: Option<String>,
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,
    /// Weight ε of the exceptional curves in the truncation functional
    #[arg(long, global = true)]
    epsilon: Option<String>,
    /// Seed for the randomized `check` command
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
    Plotdata,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sign of the boundary intersection form
    Classify,
    /// Monodromy of the affine structure around the origin
    Monodromy,
    /// Factorization of the inverse monodromy into transvections
    Factorize,
    /// Completed scattering diagram on the plane of the toric model
    Scatter,
    /// Canonical scattering diagram on B
    Diagram,
    /// Broken lines for q ending at a point, and their sum
    Lift {
        /// Direction q: "v2", "2v1+v2" (rays 1-based) or "c:a,b" (cone 0-based)
        #[arg(long)]
        q: String,
        /// Endpoint "c:a,b" with rational a, b (cone 0-based)
        #[arg(long)]
        at: String,
    },
    /// Product of theta functions
    Product { points: Vec<String> },
    /// Relations among theta functions
    Relations {
        /// Generators for relations in the central fiber, e.g. "v2,v1,v3"
        #[arg(long)]
        generators: Option<String>,
        /// Rays (1-based) whose boundary classes are set to 1 in the fiber
        #[arg(long)]
        contracted: Option<String>,
        #[arg(long, default_value_t = 4)]
        degree: u32,
    },
    /// Local equations of the mirror family along the rays
    Charts,
    /// Deformation data of the cyclic quotient singularity of a chain
    Cyclic,
    /// Log invariants of the walls of the canonical diagram
    Invariants,
    /// Randomized consistency checks of the lifts (uses --seed)
    Check {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Run a JSON request from a file, or stdin when omitted
    Run { request: Option<PathBuf> },
}

/// Resolved arguments of one computation.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Request {
    command: String,
    spec: Option<Value>,
    order: Option<Value>,
    epsilon: Option<String>,
    format: Option<Format>,
    seed: Option<u64>,
    q: Option<String>,
    at: Option<String>,
    #[serde(default)]
    points: Vec<String>,
    generators: Option<String>,
    contracted: Option<String>,
    degree: Option<u32>,
    trials: Option<usize>,
}

struct Report {
    json: Value,
    text: String,
    plot: Option<String>,
}

fn preset(name: &str) -> Option<Value> {
    let v = match name {
        "m05" => json!({"fan_rays": [[1,0],[1,1],[0,1],[-1,0],[0,-1]], "blowups": [0,0,0,1,1]}),
        "p1p1-blowup" => json!({"fan_rays": [[1,0],[0,1],[-1,0],[0,-1]], "blowups": [1,0,0,0]}),
        "cubic" => json!({"fan_rays": [[1,0],[0,1],[-1,-1]], "blowups": [2,2,2]}),
        "vertex-n1" => json!({"fan_rays": [[1,0],[0,1],[-1,-1]], "blowups": [0,2,3]}),
        "chain-n1-l4" => json!({"fan_rays": [[1,0],[0,1],[-1,0]], "blowups": [4], "proper_over_line": true}),
        _ => return None,
    };
    Some(v)
}

fn load_spec(arg: &str) -> Result<Value> {
    if let Some(v) = preset(arg) {
        return Ok(v);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::invalid(format!("--spec {arg}: not a preset and not readable: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{arg}: {e}")))
}

enum Spec {
    Pair(PairSpec),
    Chain(ChainSpec),
}

fn parse_spec(v: &Value) -> Result<Spec> {
    let v = match v {
        Value::String(s) => load_spec(s)?,
        other => other.clone(),
    };
    let chain = v.get("proper_over_line").and_then(Value::as_bool).unwrap_or(false);
    if chain {
        let s: ChainSpec = serde_json::from_value(v).map_err(|e| Error::invalid(format!("spec: {e}")))?;
        Ok(Spec::Chain(s))
    } else {
        let s: PairSpec = serde_json::from_value(v).map_err(|e| Error::invalid(format!("spec: {e}")))?;
        Ok(Spec::Pair(s))
    }
}

fn pair_spec(req: &Request) -> Result<PairSpec> {
    let v = req.spec.as_ref().ok_or_else(|| Error::invalid("missing --spec"))?;
    match parse_spec(v)? {
        Spec::Pair(p) => Ok(p),
        Spec::Chain(_) => Err(Error::invalid(format!("command {} needs a pair spec, not a chain", req.command))),
    }
}

fn order_of(req: &Request) -> Result<Q> {
    let k = match &req.order {
        None => Q::from_integer(3.into()),
        Some(Value::String(s)) => parse_q(s)?,
        Some(Value::Number(n)) => parse_q(&n.to_string())?,
        Some(_) => return Err(Error::invalid("order must be a number or a string p/q")),
    };
    if k < Q::from_integer(1.into()) {
        return Err(Error::invalid("order must be at least 1"));
    }
    Ok(k)
}

fn epsilon_of(req: &Request) -> Result<Option<Q>> {
    req.epsilon.as_deref().map(parse_q).transpose()
}

/// "0", "v2", "3v2", "2v1+v2" (1-based rays) or "c:a,b" (0-based cone).
fn parse_point(pair: &TropicalPair, s: &str) -> Result<TangentVector> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse point {s:?}"));
    if s == "0" {
        return Ok(TangentVector { cone: 0, v: LatticeVector::ZERO });
    }
    if let Some((c, rest)) = s.split_once(':') {
        let cone: usize = c.trim().parse().map_err(|_| bad())?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if cone >= pair.n {
            return Err(Error::invalid(format!("cone {cone} out of range")));
        }
        return Ok(TangentVector { cone, v: LatticeVector::new(a, b) });
    }
    let mut terms = Vec::new();
    for t in s.split('+') {
        let (k, i) = t.trim().split_once('v').ok_or_else(bad)?;
        let k: i64 = if k.is_empty() { 1 } else { k.parse().map_err(|_| bad())? };
        let i: usize = i.parse().map_err(|_| bad())?;
        if i == 0 || i > pair.n || k <= 0 {
            return Err(bad());
        }
        terms.push((i - 1, k));
    }
    match terms.as_slice() {
        [(i, k)] => Ok(TangentVector { cone: *i, v: LatticeVector::new(*k, 0) }),
        [(i, a), (j, b)] if *j == pair.next(*i) => Ok(TangentVector { cone: *i, v: LatticeVector::new(*a, *b) }),
        [(i, a), (j, b)] if *i == pair.next(*j) => Ok(TangentVector { cone: *j, v: LatticeVector::new(*b, *a) }),
        _ => Err(Error::invalid(format!("point {s:?} must combine at most two adjacent rays"))),
    }
}

fn parse_chart_point(pair: &TropicalPair, s: &str) -> Result<ChartPoint> {
    let bad = || Error::invalid(format!("cannot parse endpoint {s:?}, expected c:a,b"));
    let (c, rest) = s.split_once(':').ok_or_else(bad)?;
    let cone: usize = c.trim().parse().map_err(|_| bad())?;
    if cone >= pair.n {
        return Err(Error::invalid(format!("cone {cone} out of range")));
    }
    let (a, b) = rest.split_once(',').ok_or_else(bad)?;
    Ok(ChartPoint { cone, a: parse_q(a)?, b: parse_q(b)? })
}

fn format_element(pair: &TropicalPair, e: &TruncatedElement) -> String {
    let terms = e.sorted_terms();
    if terms.is_empty() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (_, m, c, v) in terms {
        let mut s = String::new();
        let bare = c.is_zero() && m.is_zero();
        if bare || v != Q::from_integer(1.into()) {
            s.push_str(&fmt_q(&v));
        }
        if !c.is_zero() {
            let _ = write!(s, "z^{{{}}}", format_boundary(pair, &c));
        }
        if !m.is_zero() {
            let _ = write!(s, "X^{{{},{}}}", m.x, m.y);
        }
        parts.push(s);
    }
    parts.join(" + ")
}

fn setup(req: &Request) -> Result<(TropicalPair, Q, Option<Q>)> {
    let pair = build_pair(&pair_spec(req)?)?;
    Ok((pair, order_of(req)?, epsilon_of(req)?))
}

fn canonical(pair: &TropicalPair, order: &Q, eps: Option<Q>) -> Result<ScatteringDiagram> {
    let f = scattering_functional(pair, eps)?;
    canonical_diagram(pair, &f, order)
}

fn diagram_report(pair: &TropicalPair, d: &ScatteringDiagram) -> Report {
    let mut text = String::new();
    let mut plot = String::from("# kind\tx\ty\tlabel\n");
    for i in 0..pair.n {
        let r = pair.rays[i];
        let _ = writeln!(plot, "ray\t{}\t{}\tD{}", r.x, r.y, i + 1);
    }
    for w in &d.walls {
        let dir = match d.side {
            Side::Bbar => w.support,
            Side::B => pair.plane_vector(w.cone, w.support),
        };
        let label = format_element(pair, &w.f.element);
        let _ = writeln!(text, "[{}] cone {} support {} {}: {}", w.orientation.as_str(), w.cone, w.support, dir, label);
        let _ = writeln!(plot, "wall\t{}\t{}\t{}", dir.x, dir.y, label);
    }
    let _ = write!(text, "{} walls, order {}, epsilon {}", d.walls.len(), fmt_q(d.order()), fmt_q(&d.functional().epsilon));
    Report { json: d.to_json(pair), text, plot: Some(plot) }
}

fn theta_report(pair: &TropicalPair, x: &ThetaElement) -> (Value, String) {
    (x.to_json(pair), x.format(pair))
}

fn run(req: &Request) -> Result<Report> {
    match req.command.as_str() {
        "classify" => {
            let pair = build_pair(&pair_spec(req)?)?;
            let c = pair.classify_boundary();
            let kind = serde_json::to_value(c.kind).map_err(|e| Error::internal(e.to_string()))?;
            let kind_s = kind.as_str().unwrap_or_default().to_string();
            let mut text = format!("{kind_s}\nself-intersections {:?}", pair.self_int);
            if let Some(w) = &c.witness {
                let _ = write!(text, "\nwitness {w:?} with square {}", c.witness_square.unwrap_or_default());
            }
            let json = json!({
                "kind": kind,
                "self_intersections": pair.self_int,
                "intersection_matrix": pair.intersection_matrix(),
                "witness": c.witness,
                "witness_square": c.witness_square,
            });
            Ok(Report { json, text, plot: None })
        }
        "monodromy" => {
            let pair = build_pair(&pair_spec(req)?)?;
            let t = pair.monodromy();
            let m = t.entries;
            let text = format!("T = {m:?} in the basis (v1, v2); trace {}", t.trace());
            Ok(Report { json: json!({"matrix": m, "trace": t.trace()}), text, plot: None })
        }
        "factorize" => {
            let pair = build_pair(&pair_spec(req)?)?;
            let factors = pair.looijenga_factors();
            let ok = looijenga_check(&pair.monodromy_inverse_in_plane(), &factors)?;
            let fj: Vec<Value> = factors.iter().map(|(w, k)| json!({"w": [w.x, w.y], "k": k})).collect();
            let mut text = String::from("T^-1 =");
            for (w, k) in factors.iter().rev() {
                let _ = write!(text, " T[{w}]^{k}");
            }
            let _ = write!(text, "\nverified: {ok}");
            Ok(Report { json: json!({"factors": fj, "verified": ok}), text, plot: None })
        }
        "scatter" => {
            let (pair, k, eps) = setup(req)?;
            let f = scattering_functional(&pair, eps)?;
            let d = scatter_complete(&pair, &initial_diagram(&pair, &f, &k)?)?;
            let ok = loop_identity(&pair, &d)?;
            let mut r = diagram_report(&pair, &d);
            let _ = write!(r.text, "\nloop identity: {ok}");
            r.json["loop_identity"] = json!(ok);
            Ok(r)
        }
        "diagram" => {
            let (pair, k, eps) = setup(req)?;
            let d = canonical(&pair, &k, eps)?;
            Ok(diagram_report(&pair, &d))
        }
        "lift" => {
            let (pair, k, eps) = setup(req)?;
            let d = canonical(&pair, &k, eps)?;
            let q = parse_point(&pair, req.q.as_deref().ok_or_else(|| Error::invalid("lift needs --q"))?)?;
            let at = parse_chart_point(&pair, req.at.as_deref().ok_or_else(|| Error::invalid("lift needs --at"))?)?;
            let lines = enumerate_broken_lines(&pair, &d, q, &at, &k)?;
            let sum = lift(&pair, &d, q, &at, &k)?;
            let mut text = String::new();
            let mut plot = String::from("# line\tx0\ty0\tx1\ty1\tmonomial\n");
            for (i, l) in lines.iter().enumerate() {
                let _ = writeln!(text, "line {i}: {} bends, final monomial {} z^{{{}}} X^{}", l.bends(), fmt_q(&l.final_monomial().coeff), format_boundary(&pair, &l.final_monomial().p), l.final_monomial().m);
                let j = l.to_json(&pair);
                for s in j["segments"].as_array().into_iter().flatten() {
                    let end = &s["end"]["plane"];
                    let start = match &s["start"] {
                        Value::Null => json!(["inf", "inf"]),
                        st => st["plane"].clone(),
                    };
                    let unq = |v: &Value| v.as_str().unwrap_or("").to_string();
                    let _ = writeln!(plot, "{i}\t{}\t{}\t{}\t{}\t{}X^({},{})", unq(&start[0]), unq(&start[1]), unq(&end[0]), unq(&end[1]), unq(&s["coeff"]), s["m"][0], s["m"][1]);
                }
            }
            let _ = write!(text, "lift: {}", format_element(&pair, &sum));
            let json = json!({
                "lines": lines.iter().map(|l| l.to_json(&pair)).collect::<Vec<_>>(),
                "lift": sum.to_json(&pair),
            });
            Ok(Report { json, text, plot: Some(plot) })
        }
        "product" => {
            let (pair, k, eps) = setup(req)?;
            if req.points.is_empty() {
                return Err(Error::invalid("product needs at least one point"));
            }
            let d = canonical(&pair, &k, eps)?;
            let alg = ThetaAlgebra::new(&pair, &d, &k)?;
            let thetas: Vec<ThetaElement> =
                req.points.iter().map(|s| alg.theta(parse_point(&pair, s)?)).collect::<Result<_>>()?;
            let x = alg.multiply_expand(&thetas)?;
            let (json, body) = theta_report(&pair, &x);
            let lhs: Vec<String> = req.points.iter().map(|s| format!("θ[{}]", s.trim())).collect();
            Ok(Report { json: json!({"factors": req.points, "product": json}), text: format!("{} = {body}", lhs.join("·")), plot: None })
        }
        "relations" => {
            let (pair, k, eps) = setup(req)?;
            let d = canonical(&pair, &k, eps)?;
            let alg = ThetaAlgebra::new(&pair, &d, &k)?;
            match &req.generators {
                None => {
                    let names = ray_generator_names(pair.n);
                    let rels = ray_relations(&alg)?;
                    let text = rels.iter().map(|r| r.format(&pair, &names)).collect::<Vec<_>>().join("\n");
                    let json = json!({"generators": names, "relations": rels.iter().map(|r| r.to_json(&pair, &names)).collect::<Vec<_>>()});
                    Ok(Report { json, text, plot: None })
                }
                Some(g) => {
                    let gens: Vec<TangentVector> = g.split(',').map(|s| parse_point(&pair, s)).collect::<Result<_>>()?;
                    let contracted: Vec<usize> = match &req.contracted {
                        None => Vec::new(),
                        Some(c) => c
                            .split(',')
                            .map(|s| match s.trim().parse::<usize>() {
                                Ok(i) if i >= 1 && i <= pair.n => Ok(i - 1),
                                _ => Err(Error::invalid(format!("bad contracted ray {s:?}"))),
                            })
                            .collect::<Result<_>>()?,
                    };
                    let names = generator_names(gens.len());
                    let rels = fiber_relations(&alg, &gens, &contracted, req.degree.unwrap_or(4))?;
                    let mut text = String::new();
                    for (nm, g) in names.iter().zip(&gens) {
                        let _ = writeln!(text, "{nm} = θ[{}]", format_point(*g, pair.n));
                    }
                    let rel_text: Vec<String> = rels.iter().map(|r| format!("{} = 0", r.format(&names))).collect();
                    text.push_str(&rel_text.join("\n"));
                    let json = json!({
                        "generators": names.iter().zip(&gens).map(|(n, g)| json!({"name": n, "point": format_point(*g, pair.n)})).collect::<Vec<_>>(),
                        "contracted": contracted.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        "relations": rels.iter().map(|r| json!({
                            "terms": r.terms.iter().map(|(e, c)| json!({"monomial": e, "coeff": fmt_q(c)})).collect::<Vec<_>>(),
                            "text": r.format(&names),
                        })).collect::<Vec<_>>(),
                    });
                    Ok(Report { json, text, plot: None })
                }
            }
        }
        "charts" => {
            let (pair, k, eps) = setup(req)?;
            let d = canonical(&pair, &k, eps)?;
            let eqs = (0..pair.n).map(|i| chart_equation(&pair, &d, i, &k)).collect::<Result<Vec<_>>>()?;
            let text = eqs.iter().map(|e| format!("ray {}: {}", e.ray + 1, e.format(&pair))).collect::<Vec<_>>().join("\n");
            Ok(Report { json: json!({"charts": eqs.iter().map(|e| e.to_json(&pair)).collect::<Vec<_>>()}), text, plot: None })
        }
        "invariants" => {
            let (pair, k, eps) = setup(req)?;
            let d = canonical(&pair, &k, eps)?;
            let mut text = String::new();
            let mut out = Vec::new();
            for w in &d.walls {
                let inv = extract_invariants(&pair, w)?;
                let _ = writeln!(text, "wall cone {} support {}:", w.cone, w.support);
                for x in &inv {
                    let _ = writeln!(text, "  k={} class {} value {}", x.multiplicity, format_boundary(&pair, &x.class), fmt_q(&x.value));
                }
                out.push(json!({
                    "cone": w.cone,
                    "support": [w.support.x, w.support.y],
                    "invariants": inv.iter().map(|x| json!({
                        "multiplicity": x.multiplicity,
                        "class": x.class.to_json(&pair),
                        "label": format_boundary(&pair, &x.class),
                        "value": fmt_q(&x.value),
                    })).collect::<Vec<_>>(),
                }));
            }
            Ok(Report { json: json!({"walls": out}), text: text.trim_end().to_string(), plot: None })
        }
        "check" => {
            let (pair, k, eps) = setup(req)?;
            let d = canonical(&pair, &k, eps)?;
            let pts = chamber_points(&pair, &d, &k)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(req.seed.unwrap_or(0));
            let mut results = Vec::new();
            let mut text = String::new();
            for _ in 0..req.trials.unwrap_or(10) {
                let cone = rng.gen_range(0..pair.n);
                let q = TangentVector { cone, v: LatticeVector::new(rng.gen_range(1..=3), rng.gen_range(0..=3)) };
                let a = &pts[rng.gen_range(0..pts.len())];
                let b = &pts[rng.gen_range(0..pts.len())];
                let ok = check_consistency(&pair, &d, q, a, b, &k)?;
                let _ = writeln!(text, "q={} from cone {} to cone {}: {ok}", format_point(q, pair.n), a.cone, b.cone);
                results.push(json!({"q": format_point(q, pair.n), "from": a.cone, "to": b.cone, "consistent": ok}));
            }
            Ok(Report { json: json!({"checks": results}), text: text.trim_end().to_string(), plot: None })
        }
        "cyclic" => {
            let v = req.spec.as_ref().ok_or_else(|| Error::invalid("missing --spec"))?;
            let Spec::Chain(spec) = parse_spec(v)? else {
                return Err(Error::invalid("cyclic needs a chain spec with \"proper_over_line\": true"));
            };
            let chain = build_chain(&spec)?;
            let eqs = family_equations(&spec)?;
            let single = eqs.len() == 1;
            let mut text = String::new();
            for e in &eqs {
                let _ = writeln!(text, "{}", e.format(single));
            }
            let mut json = json!({
                "equations": eqs.iter().map(|e| json!({"index": e.index, "exponent": e.exponent, "l": e.l, "text": e.format(single)})).collect::<Vec<_>>(),
                "self_intersections": chain.self_int[1..=chain.n],
            });
            if chain.blowups.iter().any(|l| *l > 0) {
                let t = dual_singularity_type(&spec)?;
                let v = develop(&chain);
                let z = semigroup_type(v[0], v[chain.n + 1])?;
                let p = p_resolution(&spec)?;
                let _ = writeln!(text, "dual singularity type {}", t.format());
                let _ = writeln!(text, "Spec k[σ∩M] type {}", z.format());
                text.push_str(&p.format());
                json["dual_type"] = json!({"r": t.r, "a": t.a, "text": t.format()});
                json["semigroup_type"] = json!({"r": z.r, "a": z.a, "text": z.format()});
                json["p_resolution"] = p.to_json();
            } else {
                text.push_str("no blowups: toric family, no singularity");
            }
            Ok(Report { json, text: text.trim_end().to_string(), plot: None })
        }
        other => Err(Error::invalid(format!("unknown command {other:?}"))),
    }
}

fn generator_names(k: usize) -> Vec<String> {
    const LETTERS: [&str; 5] = ["x", "y", "z", "u", "w"];
    if k <= LETTERS.len() {
        LETTERS[..k].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=k).map(|i| format!("x{i}")).collect()
    }
}

fn request_from_cli(cli: Cli) -> Result<(Request, Format)> {
    let spec = cli.spec.map(Value::String);
    let order = cli.order.map(Value::String);
    let mut req = Request { spec, order, epsilon: cli.epsilon, seed: Some(cli.seed), ..Default::default() };
    let name = match cli.command {
        Command::Classify => "classify",
        Command::Monodromy => "monodromy",
        Command::Factorize => "factorize",
        Command::Scatter => "scatter",
        Command::Diagram => "diagram",
        Command::Lift { q, at } => {
            req.q = Some(q);
            req.at = Some(at);
            "lift"
        }
        Command::Product { points } => {
            req.points = points;
            "product"
        }
        Command::Relations { generators, contracted, degree } => {
            req.generators = generators;
            req.contracted = contracted;
            req.degree = Some(degree);
            "relations"
        }
        Command::Charts => "charts",
        Command::Cyclic => "cyclic",
        Command::Invariants => "invariants",
        Command::Check { trials } => {
            req.trials = Some(trials);
            "check"
        }
        Command::Run { request } => {
            let text = match request {
                Some(p) => std::fs::read_to_string(&p).map_err(|e| Error::invalid(format!("{}: {e}", p.display())))?,
                None => std::io::read_to_string(std::io::stdin()).map_err(|e| Error::invalid(format!("stdin: {e}")))?,
            };
            let r: Request = serde_json::from_str(&text).map_err(|e| Error::invalid(format!("request: {e}")))?;
            let f = r.format.unwrap_or(cli.format);
            return Ok((r, f));
        }
    };
    req.command = name.into();
    Ok((req, cli.format))
}

fn emit(r: Report, format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(&r.json).map_err(|e| Error::internal(e.to_string())),
        Format::Text => Ok(r.text),
        Format::Plotdata => r.plot.ok_or_else(|| Error::invalid("plot data is available for scatter, diagram and lift")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| {
        let (req, format) = request_from_cli(cli)?;
        emit(run(&req)?, format)
    });
    match outcome {
        Ok(Ok(out)) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not an error of the computation
            let _ = writeln!(stdout, "{out}");
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_INVALID } else { EXIT_INTERNAL })
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
