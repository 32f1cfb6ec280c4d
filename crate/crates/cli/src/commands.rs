use std::fmt::Write as _;
use std::path::Path;

use qmeas::assemblage::{
    cglmp_pair, depolarize_second, heisenberg_weyl_mub, heisenberg_weyl_mub_subset, random_assemblage, NoisyPairSpec,
    Party,
};
use qmeas::altdist;
use qmeas::bounds::{corollary2_bounds, theorem3_bounds};
use qmeas::correlations::{self, SteeringOptions};
use qmeas::monotones::{self, FreeAssemblage, FreeSetSpec, Multipliers};
use qmeas::repro;
use qmeas::{Error, SolverConfig, WeightedAssemblage};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::io::{self, AssemblageFile, Metadata};
use crate::{CliError, ComputeArgs, FreeArg, GenerateArgs, GenerateKind, HierarchyArgs, OptimizePArgs, PartyArg, Quantity, Table1Args};

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("`generate {kind}` needs --{flag}")))
}

pub fn generate(args: &GenerateArgs) -> Result<AssemblageFile, CliError> {
    let kind = args.kind.name();
    let (assemblage, mut meta) = match args.kind {
        GenerateKind::Mub => {
            let (d, m) = (need(args.d, "d", kind)?, need(args.m, "m", kind)?);
            (heisenberg_weyl_mub(d, m)?, Metadata { generator: format!("mub d={d} m={m}"), ..Default::default() })
        }
        GenerateKind::MubSubset => {
            let d = need(args.d, "d", kind)?;
            let ops = parse_ops(args.ops.as_deref().ok_or_else(|| CliError::Input("`generate mub-subset` needs --ops".into()))?)?;
            let labels = ops.iter().map(|(a, b)| format!("X^{a} Z^{b}")).collect();
            (heisenberg_weyl_mub_subset(d, &ops)?, Metadata { generator: format!("mub-subset d={d}"), labels, ..Default::default() })
        }
        GenerateKind::Cglmp => {
            let d = need(args.d, "d", kind)?;
            let party = match args.party.unwrap_or(PartyArg::Alice) {
                PartyArg::Alice => Party::Alice,
                PartyArg::Bob => Party::Bob,
            };
            (cglmp_pair(d, party)?, Metadata { generator: format!("cglmp d={d} party={party:?}").to_lowercase(), ..Default::default() })
        }
        GenerateKind::Random => {
            let (d, m, o) = (need(args.d, "d", kind)?, need(args.m, "m", kind)?, need(args.o, "o", kind)?);
            let seed = args.seed.unwrap_or(0);
            (
                random_assemblage(d, m, o, seed)?,
                Metadata { generator: format!("random d={d} m={m} o={o}"), seed: Some(seed), ..Default::default() },
            )
        }
        GenerateKind::NoisyMub => {
            let (d, mu) = (need(args.d, "d", kind)?, need(args.mu, "mu", kind)?);
            let a = depolarize_second(&NoisyPairSpec::new(heisenberg_weyl_mub(d, 2)?, mu)?)?;
            (a, Metadata { generator: format!("noisy-mub d={d} mu={mu}"), ..Default::default() })
        }
    };
    if meta.labels.is_empty() {
        meta.labels = (0..assemblage.settings()).map(|x| format!("x={x}")).collect();
    }
    Ok(AssemblageFile::from_assemblage(&assemblage, meta))
}

/// `"1:0,0:1,1:1"` -> `[(1,0), (0,1), (1,1)]`.
fn parse_ops(s: &str) -> Result<Vec<(usize, usize)>, CliError> {
    s.split(',')
        .map(|item| {
            let (a, b) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::Input(format!("operator `{item}` is not of the form a:b")))?;
            let p = |t: &str| t.parse::<usize>().map_err(|e| CliError::Input(format!("operator `{item}`: {e}")));
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

#[derive(Serialize)]
pub struct ResultRecord {
    pub quantity: String,
    pub value: f64,
    pub primal: f64,
    pub dual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Value>,
    pub certificate_digest: String,
    pub solver: Value,
    pub tolerances: Value,
}

fn digest(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn solver_info(cfg: &SolverConfig) -> Value {
    json!({
        "backend": "clarabel",
        "linear_solver": cfg.linear_solver.backend_name(),
        "max_iter": cfg.max_iter,
        "cross_check": cfg.cross_check,
    })
}

fn tolerance_info(cfg: &SolverConfig) -> Value {
    json!({
        "gap_rel": cfg.gap_rel,
        "gap_abs": cfg.gap_abs,
        "feas": cfg.feas,
        "feasibility_tol": cfg.feasibility_tol,
        "duality_tol": cfg.duality_tol,
        "enumeration_cap": cfg.enumeration_cap,
    })
}

fn free_set(arg: FreeArg, d: usize) -> FreeSetSpec {
    match arg {
        FreeArg::Jm => FreeSetSpec::Jm,
        FreeArg::Ui => FreeSetSpec::Ui,
        FreeArg::Ic => FreeSetSpec::ic_computational(d),
    }
}

fn free_assemblage_json(f: &FreeAssemblage) -> Value {
    match f {
        FreeAssemblage::Ui(q) => json!({ "ui": q }),
        FreeAssemblage::Ic(alpha) => json!({ "ic": alpha }),
        FreeAssemblage::Jm(g) => json!({ "jm_parent": io::matrices(g) }),
    }
}

fn multipliers_json(m: &Multipliers) -> Value {
    match m {
        Multipliers::Jm(l) => json!({ "L": io::matrix_to_json(l) }),
        Multipliers::Ui(l) => json!({ "l": l }),
        Multipliers::Ic(l) => json!({ "l": l }),
    }
}

fn monotone(a: &WeightedAssemblage, free: &FreeSetSpec, cfg: &SolverConfig) -> Result<(f64, f64, Value), CliError> {
    if matches!(free, FreeSetSpec::Jm) && a.settings() <= 1 {
        return Ok((0.0, 0.0, json!({ "trivial": "a single measurement is jointly measurable" })));
    }
    let dual = monotones::resource_dual(a, free, cfg)?;
    let primal = monotones::resource_primal(a, free, cfg)?;
    if (primal.value - dual.value).abs() > cfg.duality_tol {
        return Err(Error::DualityGap { primal: primal.value, dual: dual.value }.into());
    }
    let cert = json!({
        "free_set": free.name(),
        "dual": {
            "value": dual.value,
            "C": io::matrix_grid(&dual.c),
            "rho": io::matrices(&dual.rho),
            "multipliers": multipliers_json(&dual.multipliers),
        },
        "primal": {
            "value": primal.value,
            "a": primal.a,
            "Z": io::matrices(&primal.z),
            "free_assemblage": free_assemblage_json(&primal.free_assemblage),
            "free_effects": io::matrix_grid(&primal.free_effects),
        },
    });
    Ok((primal.value, dual.value, cert))
}

fn incompatibility_bounds(a: &WeightedAssemblage, cfg: &SolverConfig) -> Option<Value> {
    let t3 = theorem3_bounds(a).ok()?;
    let mut v = json!({ "theorem3": { "lower": t3.lower, "upper": t3.upper, "eta": t3.eta_low } });
    if let Ok(c2) = corollary2_bounds(a, cfg) {
        v["corollary2"] = json!({ "lower": c2.lower, "upper": c2.upper, "T": c2.t });
    }
    Some(v)
}

pub fn compute(args: &ComputeArgs, cfg: &SolverConfig) -> Result<(ResultRecord, Value), CliError> {
    let path = args
        .input
        .as_ref()
        .or(args.alice.as_ref())
        .ok_or_else(|| CliError::Input("no assemblage given (positional path or --alice)".into()))?;
    let a = io::read_assemblage(path)?;
    let d = a.dim();
    let (primal, dual, cert, bounds) = match args.quantity {
        Quantity::Incompatibility => {
            let (p, q, c) = monotone(&a, &FreeSetSpec::Jm, cfg)?;
            (p, q, c, incompatibility_bounds(&a, cfg))
        }
        Quantity::Informativeness => {
            let (p, q, c) = monotone(&a, &FreeSetSpec::Ui, cfg)?;
            (p, q, c, None)
        }
        Quantity::Coherence => {
            let (p, q, c) = monotone(&a, &FreeSetSpec::ic_computational(d), cfg)?;
            (p, q, c, None)
        }
        Quantity::Steering => {
            let state = io::read_state(args.state.as_deref().unwrap_or("phi-plus"), d)?;
            let sigma = correlations::steer(&a, &state)?;
            let s = correlations::steerability_with(&sigma, SteeringOptions { consistency: args.consistent }, cfg)?;
            let cert = json!({
                "G": io::matrix_grid(&s.g),
                "classical_bound": s.classical_bound,
                "Y": s.y.as_ref().map(io::matrix_to_json),
                "hidden_states": io::matrices(&s.hidden_states),
            });
            (s.primal_value, s.value, cert, None)
        }
        Quantity::Nonlocality => {
            let bob_path =
                args.bob.as_ref().ok_or_else(|| CliError::Input("nonlocality needs --bob".into()))?;
            let bob = io::read_assemblage(bob_path)?;
            let state = io::read_state(args.state.as_deref().unwrap_or("phi-plus"), d)?;
            let q = correlations::behavior(&a, &bob, &state)?;
            let b = correlations::nonlocality(&q, cfg)?;
            let cert = json!({ "coefficients": b.coefficients, "local_bound": b.local_bound, "pi": b.pi });
            (b.primal_value, b.value, cert, None)
        }
        Quantity::RInf | Quantity::RL1 => {
            let free = free_set(args.free, d);
            let r = if args.quantity == Quantity::RInf {
                altdist::r_inf(&a, &free, cfg)?
            } else {
                altdist::r_l1(&a, &free, cfg)?
            };
            let cert = json!({ "free_set": free.name(), "free_effects": io::matrix_grid(&r.free_assemblage) });
            (r.value, r.value, cert, None)
        }
    };
    let record = ResultRecord {
        quantity: args.quantity.name().to_string(),
        value: dual,
        primal,
        dual,
        bounds,
        certificate_digest: digest(&cert),
        solver: solver_info(cfg),
        tolerances: tolerance_info(cfg),
    };
    Ok((record, cert))
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Runs the table cells; rows that fail are reported after the good ones.
pub fn table1(args: &Table1Args, cfg: &SolverConfig) -> (String, Vec<CliError>) {
    let cells: Vec<(usize, usize)> =
        repro::table1_cells(&args.dims).into_iter().filter(|&(_, m)| m <= args.max_m).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "d", "m", "upper", "sdp_value", "lower", "tight_lower", "closed_form", "published_upper", "published_value",
        "published_lower", "dev_upper", "dev_value", "dev_lower",
    ])
    .unwrap();
    let mut errors = Vec::new();
    for ((d, m), row) in cells.iter().zip(repro::table1(&cells, cfg)) {
        match row {
            Ok(r) => {
                let published = repro::table1_reference(*d, *m);
                let dev = r.deviations;
                w.write_record([
                    d.to_string(),
                    m.to_string(),
                    fmt(r.upper),
                    fmt(r.sdp_value),
                    fmt(r.lower),
                    fmt(r.tight_lower),
                    opt(r.closed_form),
                    opt(published.map(|p| p.0)),
                    opt(published.map(|p| p.1)),
                    opt(published.map(|p| p.2)),
                    opt(dev.map(|v| v[0])),
                    opt(dev.map(|v| v[1])),
                    opt(dev.map(|v| v[2])),
                ])
                .unwrap();
            }
            Err(e) => errors.push(CliError::Context(format!("d={d} m={m}"), Box::new(e.into()))),
        }
    }
    (String::from_utf8(w.into_inner().unwrap()).unwrap(), errors)
}

pub fn hierarchy(args: &HierarchyArgs, cfg: &SolverConfig) -> Result<(String, String), CliError> {
    if args.d_min < 2 || args.d_max < args.d_min {
        return Err(CliError::Input(format!("bad dimension range {}..={}", args.d_min, args.d_max)));
    }
    let dims: Vec<usize> = (args.d_min..=args.d_max).collect();
    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(["d", "IF", "C", "I", "S", "N", "ordered"]).unwrap();
    let mut plot = String::from("d,series,value\n");
    let mut broken = Vec::new();
    for row in repro::hierarchy(&dims, cfg) {
        let row = row?;
        let r = &row.report;
        let ordered = r.is_ordered(1e-6);
        if !ordered {
            broken.push(format!("d={}: {}", row.d, r.violations(1e-6).join(", ")));
        }
        let mut rec = vec![row.d.to_string()];
        rec.extend(r.values().iter().map(|&v| fmt(v)));
        rec.push(ordered.to_string());
        table.write_record(&rec).unwrap();
        for (name, v) in ["IF", "C", "I", "S", "N"].iter().zip(r.values()) {
            writeln!(plot, "{},{name},{}", row.d, fmt(v)).unwrap();
        }
    }
    if !broken.is_empty() {
        return Err(CliError::Core(Error::NumericalTrouble(format!("hierarchy violated: {}", broken.join("; ")))));
    }
    Ok((String::from_utf8(table.into_inner().unwrap()).unwrap(), plot))
}

pub fn optimize_p(args: &OptimizePArgs, cfg: &SolverConfig) -> Result<String, CliError> {
    let grid = match &args.mu_grid {
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Input(format!("mu `{t}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => repro::default_mu_grid(),
    };
    let base = match &args.base {
        Some(p) => io::read_assemblage(p)?,
        None => heisenberg_weyl_mub(args.d, 2)?,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mu", "p1", "i_opt", "i_uniform"]).unwrap();
    let rows = qmeas::exec::map_slice(&grid, cfg.execution, |&mu| -> qmeas::Result<[f64; 4]> {
        let a = depolarize_second(&NoisyPairSpec::new(base.clone(), mu)?)?;
        let opt = monotones::incompatibility_optimal_weights(&a, cfg)?;
        let uni = monotones::incompatibility(&a.with_weights(vec![0.5, 0.5])?, cfg)?;
        Ok([mu, opt.weights[0], opt.value, uni])
    });
    for r in rows {
        let r = r?;
        w.write_record(r.iter().map(|&v| fmt(v))).unwrap();
    }
    Ok(String::from_utf8(w.into_inner().unwrap()).unwrap())
}

pub fn write_certificate(path: &Path, cert: &Value) -> Result<(), CliError> {
    io::emit(Some(path), &io::pretty(cert))
}
