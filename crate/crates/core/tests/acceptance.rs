//! End-to-end checks, one PASS/FAIL line per criterion. Run with
//! `cargo test -p qmeas --test acceptance`. The d = 5, m = 6 cell alone
//! takes several minutes in release mode.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use qmeas::altdist;
use qmeas::assemblage::{
    cglmp_pair, heisenberg_weyl_labels, heisenberg_weyl_mub, heisenberg_weyl_mub_subset, random_assemblage,
    random_channel_kraus, Party, Povm, Simulation,
};
use qmeas::bounds::{compute_t, mub_bounds};
use qmeas::correlations::{
    behavior, nonlocality, nonlocality_dual, nonlocality_primal, steer, steerability, steerability_dual,
    steerability_primal, SteeringOptions,
};
use qmeas::linalg::{self, CMat, DensityMatrix};
use qmeas::monotones::{self, FreeSetSpec};
use qmeas::random;
use qmeas::repro::{self, Table1Row};
use qmeas::{Result, SolverConfig, Tolerances, WeightedAssemblage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Cells = BTreeMap<(usize, usize), Table1Row>;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn random_state(d: usize, r: &mut ChaCha8Rng) -> DensityMatrix {
    let rank = r.gen_range(1..=d);
    DensityMatrix::new(random::density_matrix(d, rank, r), &Tolerances::default()).unwrap()
}

fn phi_plus_steering(a: &WeightedAssemblage, dual_only: bool) -> Result<f64> {
    let sigma = steer(a, &DensityMatrix::phi_plus(a.dim()))?;
    if dual_only {
        Ok(steerability_dual(&sigma, SteeringOptions::default(), &cfg())?.0)
    } else {
        Ok(steerability(&sigma, &cfg())?.value)
    }
}

fn c1_table(cells: &Cells) -> Result<Outcome> {
    let mut worst = [0.0f64; 3];
    let mut bad = Vec::new();
    for (&(d, m), row) in cells {
        let dev = row.deviations.expect("published cell");
        for k in 0..3 {
            worst[k] = worst[k].max(dev[k]);
        }
        if dev.iter().any(|&e| e > 5e-4) {
            bad.push(format!("({d},{m}) {dev:?}"));
        }
        // exact-T lower <= SDP <= upper
        if row.tight_lower > row.sdp_value + 1e-6 || row.sdp_value > row.upper + 1e-6 {
            bad.push(format!("({d},{m}) sandwich {} {} {}", row.tight_lower, row.sdp_value, row.upper));
        }
    }
    Ok(outcome(
        bad.is_empty(),
        format!(
            "{} cells, max |dev| upper {:.1e} value {:.1e} lower {:.1e}{}",
            cells.len(),
            worst[0],
            worst[1],
            worst[2],
            if bad.is_empty() { String::new() } else { format!("; off: {}", bad.join(", ")) }
        ),
    ))
}

fn c2_subsets() -> Result<Outcome> {
    let d = 5;
    let labels = heisenberg_weyl_labels(d);
    let first = heisenberg_weyl_mub_subset(d, &labels[..3])?;
    let second = heisenberg_weyl_mub_subset(d, &[(1, d - 3), (1, d - 2), (1, d - 1)])?;
    let i1 = monotones::incompatibility(&first, &cfg())?;
    let i2 = monotones::incompatibility(&second, &cfg())?;
    Ok(outcome((i1 - 0.3750).abs() <= 5e-4 && (i2 - 0.3685).abs() <= 5e-4, format!("I1 = {i1:.6}, I2 = {i2:.6}")))
}

fn c3_closed_forms() -> Result<Outcome> {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut worst_if = 0.0f64;
    let mut cases = 0;
    let mut check_if = |a: &WeightedAssemblage| -> Result<()> {
        let v = monotones::informativeness(a, &cfg())?;
        worst_if = worst_if.max((v - (1.0 - 1.0 / a.dim() as f64)).abs());
        cases += 1;
        Ok(())
    };
    for d in [2, 3, 5] {
        check_if(&heisenberg_weyl_mub(d, 2)?)?;
        check_if(&heisenberg_weyl_mub(d, 3)?)?;
        check_if(&cglmp_pair(d, Party::Alice)?)?;
    }
    // random orthonormal bases
    for _ in 0..6 {
        let d = r.gen_range(2..=4);
        let m = r.gen_range(1..=3);
        let povms = (0..m)
            .map(|_| {
                let u = random::haar_unitary(d, &mut r);
                Povm::new((0..d).map(|k| linalg::outer(&u.column(k).into_owned())).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        check_if(&WeightedAssemblage::uniform(povms)?)?;
    }
    let mut worst_c = 0.0f64;
    for d in [2, 3, 5] {
        let unbiased: Vec<_> = heisenberg_weyl_labels(d).into_iter().filter(|&(a, _)| a != 0).take(3).collect();
        for a in [cglmp_pair(d, Party::Alice)?, cglmp_pair(d, Party::Bob)?, heisenberg_weyl_mub_subset(d, &unbiased)?] {
            let v = monotones::coherence(&a, None, &cfg())?;
            worst_c = worst_c.max((v - (1.0 - 1.0 / d as f64)).abs());
        }
    }
    Ok(outcome(
        worst_if <= 1e-6 && worst_c <= 1e-5,
        format!("informativeness {cases} cases max dev {worst_if:.1e}; coherence 9 cases max dev {worst_c:.1e}"),
    ))
}

fn c4_tightness(cells: &Cells) -> Result<Outcome> {
    let mut worst_t = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut parts = Vec::new();
    for d in [2usize, 3, 5] {
        let mut ms = vec![2, d, d + 1];
        ms.dedup();
        for m in ms {
            let a = heisenberg_weyl_mub(d, m)?;
            let big = m == 6;
            let (i, t) = match cells.get(&(d, m)) {
                Some(row) => (row.sdp_value, 1.0 - row.tight_lower),
                None => {
                    // dual only: the primal of this cell is as large as the dual
                    let c = cfg().with_cross_check(false);
                    (monotones::incompatibility(&a, &c)?, compute_t(&a, &c)?.0 / m as f64)
                }
            };
            let s = phi_plus_steering(&a, big)?;
            worst_t = worst_t.max((i - (1.0 - t)).abs());
            worst_s = worst_s.max((i - s).abs());
            parts.push(format!("({d},{m}) I={i:.5} S={s:.5}"));
        }
    }
    Ok(outcome(
        worst_t <= 1e-4 && worst_s <= 1e-4,
        format!("max |I - (1 - T/m)| {worst_t:.1e}, max |I - S| {worst_s:.1e}; {}", parts.join(" ")),
    ))
}

fn c5_hierarchy() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in 2..=5 {
        let rep = repro::hierarchy_row(d, &cfg())?.report;
        let min_slack = rep.slacks().iter().cloned().fold(f64::INFINITY, f64::min);
        let anchor = 1.0 - 1.0 / d as f64;
        ok &= min_slack >= -1e-6
            && (rep.informativeness - anchor).abs() <= 1e-5
            && (rep.coherence - anchor).abs() <= 1e-5;
        parts.push(format!("d={d} {:?} min slack {min_slack:.1e}", rep.values().map(|v| (v * 1e4).round() / 1e4)));
    }
    Ok(outcome(ok, parts.join("; ")))
}

fn c6_duality() -> Result<Outcome> {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let c = cfg();
    let mut worst = 0.0f64;
    let mut worst_lp = 0.0f64;
    for k in 0..20 {
        let (d, m, o) = (r.gen_range(2..=4), r.gen_range(1..=3), r.gen_range(2..=3));
        let a = random_assemblage(d, m, o, 600 + k)?;
        for free in [FreeSetSpec::Ui, FreeSetSpec::ic_computational(d), FreeSetSpec::Jm] {
            if matches!(free, FreeSetSpec::Jm) && m == 1 {
                continue;
            }
            let p = monotones::resource_primal(&a, &free, &c)?.value;
            let q = monotones::resource_dual(&a, &free, &c)?.value;
            worst = worst.max((p - q).abs());
        }
        let rho = random_state(d * d, &mut r);
        let sigma = steer(&a, &rho)?;
        let (sp, _) = steerability_primal(&sigma, SteeringOptions::default(), &c)?;
        let (sd, ..) = steerability_dual(&sigma, SteeringOptions::default(), &c)?;
        worst = worst.max((sp - sd).abs());
        let bob = random_assemblage(d, 2, 2, 700 + k)?;
        let q = behavior(&a, &bob, &rho)?;
        let (np, _) = nonlocality_primal(&q, &c)?;
        let (nd, ..) = nonlocality_dual(&q, &c)?;
        worst_lp = worst_lp.max((np - nd).abs());
    }
    Ok(outcome(worst <= 1e-5 && worst_lp <= 1e-7, format!("20 cases, max SDP gap {worst:.1e}, max LP gap {worst_lp:.1e}")))
}

fn c7_distance_axioms() -> Result<Outcome> {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let c = cfg().tight();
    let dist = |a: &WeightedAssemblage, b: &WeightedAssemblage| monotones::assemblage_distance(a, b, &c);
    let mut asym = 0.0f64;
    let (mut tri, mut chan, mut sim, mut conv) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for k in 0..100u64 {
        let (d, m, o) = (r.gen_range(2..=3), r.gen_range(1..=2), r.gen_range(2..=3));
        let gen = |s: u64| random_assemblage(d, m, o, s);
        let (a, b, e) = (gen(7000 + 3 * k)?, gen(7001 + 3 * k)?, gen(7002 + 3 * k)?);
        let dab = dist(&a, &b)?;
        asym = asym.max((dab - dist(&b, &a)?).abs());
        tri = tri.min(dab + dist(&b, &e)? - dist(&a, &e)?);
        let kraus: Vec<CMat> = random_channel_kraus(d, d, 2, &mut r);
        chan = chan.min(dab - dist(&a.apply_adjoint_channel(&kraus)?, &b.apply_adjoint_channel(&kraus)?)?);
        let s = Simulation::random(a.weights(), o, r.gen_range(1..=3), r.gen_range(2..=3), &mut r);
        sim = sim.min(dab - dist(&a.simulate(&s)?, &b.simulate(&s)?)?);
        let t: f64 = r.gen();
        let lhs = dist(&a.mix(&e, t)?, &b.mix(&e, t)?)?;
        conv = conv.min(t * dab + (1.0 - t) * dist(&e, &e)? - lhs);
        let (a2, b2) = (gen(9000 + 2 * k)?, gen(9001 + 2 * k)?);
        let lhs = dist(&a.mix(&a2, t)?, &b.mix(&b2, t)?)?;
        conv = conv.min(t * dab + (1.0 - t) * dist(&a2, &b2)? - lhs);
    }
    Ok(outcome(
        asym == 0.0 && tri >= -1e-7 && chan >= -1e-6 && sim >= -1e-6 && conv >= -1e-6,
        format!(
            "100 pairs: asymmetry {asym:e}, min slack triangle {tri:.1e}, channels {chan:.1e}, simulations {sim:.1e}, convexity {conv:.1e}"
        ),
    ))
}

fn c8_bound_chain() -> Result<Outcome> {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let c = cfg();
    let mut chain = f64::INFINITY;
    for k in 0..20 {
        let (d, m, o) = (r.gen_range(2..=3), r.gen_range(2..=3), r.gen_range(2..=3));
        let a = random_assemblage(d, m, o, 800 + k)?;
        chain = chain.min(altdist::bound_chain(&a, &FreeSetSpec::Jm, &c)?.min_slack());
    }
    let mut dev = 0.0f64;
    for k in 0..50 {
        let (d, m) = (r.gen_range(2..=3), r.gen_range(2..=3));
        let a = random_assemblage(d, m, 2, 850 + k)?;
        let v = [
            monotones::incompatibility(&a, &c)?,
            altdist::r_inf(&a, &FreeSetSpec::Jm, &c)?.value,
            altdist::r_l1(&a, &FreeSetSpec::Jm, &c)?.value,
        ];
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        dev = dev.max(hi - lo);
    }
    Ok(outcome(chain >= -1e-6 && dev <= 1e-5, format!("min chain slack {chain:.1e} (20 cases); dichotomic max deviation {dev:.1e} (50 cases)")))
}

fn c9_bound_gate() -> Result<Outcome> {
    let b = mub_bounds(6, 4);
    Ok(outcome(
        (b.lower - 0.4438).abs() <= 1e-4 && (b.upper - 0.5357).abs() <= 1e-4,
        format!("[{:.6}, {:.6}]", b.lower, b.upper),
    ))
}

fn c10_optimal_weights() -> Result<Outcome> {
    let grid = repro::default_mu_grid();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2, 3, 5] {
        let rows = repro::optimize_p(d, &grid, &cfg()).into_iter().collect::<Result<Vec<_>>>()?;
        let mut min_gain = f64::INFINITY;
        for row in &rows {
            let gain = row.i_opt - row.i_uniform;
            ok &= gain >= -1e-6;
            if row.mu <= 0.9 + 1e-12 {
                ok &= gain > 1e-6;
                min_gain = min_gain.min(gain);
            }
        }
        let last = rows.last().unwrap();
        ok &= (last.p1 - 0.5).abs() <= 1e-3;
        parts.push(format!("d={d} min gain (mu<=0.9) {min_gain:.1e}, p1(mu=1) {:.5}", last.p1));
    }
    Ok(outcome(ok, parts.join("; ")))
}

fn c11_correlations() -> Result<Outcome> {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let c = cfg();
    let (mut ns, mut si) = (f64::INFINITY, f64::INFINITY);
    for k in 0..20 {
        let (d, m, o) = (r.gen_range(2..=3), r.gen_range(2..=3), r.gen_range(2..=3));
        let alice = random_assemblage(d, m, o, 1100 + k)?;
        let bob = random_assemblage(d, r.gen_range(2..=3), r.gen_range(2..=3), 1150 + k)?;
        let rho = if k % 2 == 0 { DensityMatrix::phi_plus(d) } else { random_state(d * d, &mut r) };
        let n = nonlocality(&behavior(&alice, &bob, &rho)?, &c)?.value;
        let s = steerability(&steer(&alice, &rho)?, &c)?.value;
        let i = monotones::incompatibility(&alice, &c)?;
        ns = ns.min(s - n);
        si = si.min(i - s);
    }
    Ok(outcome(ns >= -1e-6 && si >= -1e-6, format!("20 scenarios, min slack S - N {ns:.1e}, I - S {si:.1e}")))
}

fn main() -> ExitCode {
    // libtest flags are passed through by `cargo test`; only `--list` matters
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let subset: Vec<_> = repro::table1_cells(&[2, 3, 5]).into_iter().filter(|&(_, m)| m <= 5).collect();
    let cells: Result<Cells> = repro::table1(&subset, &cfg())
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map(|rows| rows.into_iter().map(|r| ((r.d, r.m), r)).collect());
    let cells = match cells {
        Ok(c) => Some(c),
        Err(e) => {
            eprintln!("table cells failed: {e}");
            None
        }
    };
    let with_cells = |f: fn(&Cells) -> Result<Outcome>| -> Result<Outcome> {
        match &cells {
            Some(c) => f(c),
            None => Ok(outcome(false, "table cells could not be computed")),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome> + '_>)> = vec![
        ("MUB table cells", Box::new(|| with_cells(c1_table))),
        ("MUB subset inequivalence", Box::new(c2_subsets)),
        ("closed forms", Box::new(c3_closed_forms)),
        ("tightness identities", Box::new(|| with_cells(c4_tightness))),
        ("CGLMP hierarchy", Box::new(c5_hierarchy)),
        ("duality", Box::new(c6_duality)),
        ("distance axioms", Box::new(c7_distance_axioms)),
        ("bound chain", Box::new(c8_bound_chain)),
        ("d=6 bound gate", Box::new(c9_bound_gate)),
        ("optimal setting weights", Box::new(c10_optimal_weights)),
        ("N <= S <= I", Box::new(c11_correlations)),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} ({name}): {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed in {:.0}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
