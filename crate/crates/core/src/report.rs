//! Command reports: one JSON document and one plot-ready table per command.

use std::io::Write;

use num_traits::{Signed, Zero};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::boundary::{step_cost_nats, BoundaryModel, CylinderFunction, FLOAT_GUARD};
use crate::chain::{CosetChain, TailCertificate};
use crate::config::{Format, Params, Setup};
use crate::entropy::{corollary_check, entropy_sequence, smb_estimate, CheckStatus};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind};
use crate::hitting::{first_passage, mass_balanced, membership_holds, sample_hits, theta_from, HittingTruncation};
use crate::logvalue::round_float;
use crate::measure::FinMeasure;
use crate::rational::{int, to_f64, Rational};
use crate::sampling::stream_rng;

/// Monte Carlo agreement threshold in standard errors.
pub const Z_THRESHOLD: f64 = 4.0;

/// Longest walk a single hitting draw may take before it is reported as an error.
pub const STEP_LIMIT: usize = 10_000_000;

/// Largest `n` in the conditional-avoidance grid.
pub const GRID_N_MAX: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kac,
    Hit,
    Tails,
    Boundary,
    Entropy,
    Abramov,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kac => "kac",
            Command::Hit => "hit",
            Command::Tails => "tails",
            Command::Boundary => "boundary",
            Command::Entropy => "entropy",
            Command::Abramov => "abramov",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Inconclusive,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Inconclusive => 4,
        }
    }

    fn from_checks(checks: &[(&str, bool)]) -> Self {
        if checks.iter().all(|(_, ok)| *ok) {
            Status::Ok
        } else {
            Status::Failed
        }
    }
}

/// Exit status for an error: 3 for support-cap aborts, 2 otherwise.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::SupportCap { .. } => 3,
        _ => 2,
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: Command,
    pub status: Status,
    pub settings: Value,
    pub result: Value,
    pub table: Table,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command.name(),
            "status": self.status,
            "settings": self.settings,
            "result": self.result,
        })
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.table.header).map_err(|e| Error::Config(e.to_string()))?;
                for row in &self.table.rows {
                    w.write_record(row).map_err(|e| Error::Config(e.to_string()))?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn settings(p: &Params) -> Value {
    json!({
        "seed": p.seed,
        "horizon": p.horizon,
        "n_max": p.n_max,
        "tail_n_max": p.tail_n_max,
        "samples": p.samples,
        "support_cap": p.support_cap,
        "max_bias": p.max_bias,
    })
}

fn checks_json(checks: &[(&str, bool)]) -> Value {
    Value::Object(checks.iter().map(|(k, v)| (k.to_string(), Value::Bool(*v))).collect())
}

fn measure_json(setup: &Setup, m: &FinMeasure) -> Value {
    Value::Object(
        m.sorted_atoms()
            .into_iter()
            .map(|(g, w)| (setup.model.format(g), Value::String(w.to_string())))
            .collect(),
    )
}

fn certificate(setup: &Setup, chain: &CosetChain, p: &Params) -> Result<TailCertificate> {
    chain.tail_rate_certificate(p.tail_n_max.max(setup.action.index()).max(p.horizon))
}

pub fn run(command: Command, setup: &Setup, p: &Params) -> Result<Report> {
    let (status, result, table) = match command {
        Command::Kac => kac(setup)?,
        Command::Hit => hit(setup, p)?,
        Command::Tails => tails(setup, p)?,
        Command::Boundary => boundary(setup, p)?,
        Command::Entropy => entropy(setup, p)?,
        Command::Abramov => abramov(setup, p)?,
        Command::VerifyAll => verify_all(setup, p)?,
    };
    Ok(Report { command, status, settings: settings(p), result, table })
}

type Parts = (Status, Value, Table);

fn kac(setup: &Setup) -> Result<Parts> {
    let chain = CosetChain::build(&setup.model, &setup.action, &setup.mu)?;
    let index = setup.action.index();
    let e_tau = chain.expected_return_time()?;
    let certs = chain.certificates();
    let checks = [
        ("kac_identity", e_tau == int(index as i64)),
        ("rows_sum_to_one", certs.rows_sum_to_one),
        ("columns_sum_to_one", certs.columns_sum_to_one),
        ("irreducible", certs.irreducible),
        ("uniform_stationary", certs.uniform_stationary),
    ];
    let matrix: Vec<Vec<String>> =
        chain.matrix().iter().map(|row| row.iter().map(|x| x.to_string()).collect()).collect();
    let mut table = Table::new(&["from", "to", "probability"]);
    for (i, row) in matrix.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            table.push(vec![i.to_string(), j.to_string(), x.clone()]);
        }
    }
    let result = json!({
        "index": index,
        "expected_return_time": e_tau.to_string(),
        "hitting_times": chain.hitting_times()?.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "transition_matrix": matrix,
        "checks": checks_json(&checks),
    });
    Ok((Status::from_checks(&checks), result, table))
}

/// Monte Carlo agreement of hitting positions and return times with the
/// exact truncation.
fn hit_sampling(setup: &Setup, p: &Params, trunc: &HittingTruncation) -> Result<(Value, Vec<(&'static str, bool)>)> {
    let draws = sample_hits(&setup.model, &setup.action, &setup.mu, p.samples, p.seed, STEP_LIMIT)?;
    let summary = draws.summary();
    let index = setup.action.index() as f64;
    let n = summary.samples as f64;
    let z_tau = if (summary.mean_tau - index).abs() == 0.0 { 0.0 } else { (summary.mean_tau - index).abs() / summary.std_error_tau };
    let freq = draws.frequencies();
    let theta = trunc.combined();
    let tail = to_f64(trunc.tail());
    let mut worst_atom_z: f64 = 0.0;
    let mut outside = n;
    for (g, w) in theta.iter() {
        let lo = to_f64(w);
        let hi = (lo + tail).min(1.0);
        let count = freq.get(g).copied().unwrap_or(0) as f64;
        outside -= count;
        let phat = count / n;
        let gap = if phat < lo { lo - phat } else if phat > hi { phat - hi } else { 0.0 };
        let pm = phat.clamp(lo, hi);
        let se = (pm * (1.0 - pm) / n).sqrt();
        let z = if gap == 0.0 { 0.0 } else if se == 0.0 { f64::INFINITY } else { gap / se };
        worst_atom_z = worst_atom_z.max(z);
    }
    let out_frac = outside / n;
    let se_out = (tail * (1.0 - tail) / n).sqrt();
    let outside_ok = out_frac <= tail + Z_THRESHOLD * se_out;
    let checks = vec![
        ("mean_return_time_within_4se", z_tau <= Z_THRESHOLD),
        ("atoms_within_4se", worst_atom_z <= Z_THRESHOLD),
        ("unlisted_atoms_within_tail", outside_ok),
    ];
    let value = json!({
        "samples": summary.samples,
        "seed": summary.seed,
        "mean_tau": round_float(summary.mean_tau),
        "std_error_tau": round_float(summary.std_error_tau),
        "z_tau": round_float(z_tau),
        "worst_atom_z": round_float(worst_atom_z),
        "unlisted_fraction": round_float(out_frac),
    });
    Ok((value, checks))
}

fn hit(setup: &Setup, p: &Params) -> Result<Parts> {
    let trunc = first_passage(&setup.model, &setup.action, &setup.mu, p.horizon, p.support_cap)?;
    let chain = CosetChain::build(&setup.model, &setup.action, &setup.mu)?;
    let cert = certificate(setup, &chain, p)?;
    let (lo, hi) = trunc.kac_bracket(&cert);
    let index = int(setup.action.index() as i64);
    let mut checks = vec![
        ("membership", membership_holds(&setup.action, &trunc)?),
        ("mass_balance", mass_balanced(&trunc)),
        ("kac_bracket_contains_index", lo <= index && index <= hi),
    ];
    let (mc, mc_checks) = if p.samples > 0 { hit_sampling(setup, p, &trunc)? } else { (Value::Null, vec![]) };
    checks.extend(mc_checks);
    let mut table = Table::new(&["n", "word", "weight"]);
    for (i, level) in trunc.levels.iter().enumerate() {
        for (g, w) in level.sorted_atoms() {
            table.push(vec![(i + 1).to_string(), setup.model.format(g), w.to_string()]);
        }
    }
    let result = json!({
        "horizon": trunc.horizon(),
        "tail": trunc.tail().to_string(),
        "theta": measure_json(setup, &trunc.combined()),
        "level_masses": trunc.level_masses().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "truncated_mean": trunc.truncated_mean().to_string(),
        "kac_bracket": [lo.to_string(), hi.to_string()],
        "monte_carlo": mc,
        "checks": checks_json(&checks),
    });
    Ok((Status::from_checks(&checks), result, table))
}

fn tails(setup: &Setup, p: &Params) -> Result<Parts> {
    let chain = CosetChain::build(&setup.model, &setup.action, &setup.mu)?;
    let cert = certificate(setup, &chain, p)?;
    let grid_n = GRID_N_MAX.min(cert.n_max);
    let mut grid_ok = true;
    let mut grid_points = 0usize;
    let mut worst_ratio: f64 = 0.0;
    for n in 1..=grid_n {
        let bound = cert.half_split_bound(n);
        for k in 1..=n {
            for (g, _) in setup.mu.iter() {
                let v = to_f64(&chain.conditional_avoidance(&setup.action, &setup.mu, n, k, g)?);
                grid_points += 1;
                if v > bound {
                    grid_ok = false;
                }
                if bound > 0.0 {
                    worst_ratio = worst_ratio.max(v / bound);
                }
            }
        }
    }
    let checks = [("tail_certificate", cert.holds()), ("half_split_grid", grid_ok)];
    let mut table = Table::new(&["n", "tail", "worst_case", "bound"]);
    for n in 0..=cert.n_max {
        table.push(vec![
            n.to_string(),
            round_float(to_f64(&cert.tails[n])).to_string(),
            round_float(to_f64(&cert.worst_case[n])).to_string(),
            round_float(cert.bound(n as f64)).to_string(),
        ]);
    }
    let result = json!({
        "certificate": cert,
        "remainder_factor": cert.remainder_factor().to_string(),
        "tails": cert.tails.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "grid": { "n_max": grid_n, "points": grid_points, "worst_ratio": round_float(worst_ratio) },
        "checks": checks_json(&checks),
    });
    Ok((Status::from_checks(&checks), result, table))
}

fn boundary(setup: &Setup, p: &Params) -> Result<Parts> {
    let b = BoundaryModel::for_model(&setup.model)?;
    let mu = &setup.mu;
    let ball = setup.model.ball(p.radius)?;

    let mut table = Table::new(&["word", "phi", "phi_nats"]);
    let mut phi_ok = true;
    let mut harmonic_ok = true;
    for g in &ball {
        let phi = b.phi(g)?;
        let positive = if *g == setup.model.identity() { phi.q.is_zero() } else { phi.q.is_positive() };
        phi_ok &= positive && phi == b.phi_by_cylinders(g)?;
        harmonic_ok &= b.nearly_harmonic_residual(g, mu)?.q.is_zero();
        table.push(vec![setup.model.format(g), phi.q.to_string(), round_float(phi.nats()).to_string()]);
    }
    let stationary = b.is_stationary(mu, (p.radius + 1).min(4))?;
    let h_mu = b.furstenberg_entropy(mu)?;

    let chain = CosetChain::build(&setup.model, &setup.action, mu)?;
    let cert = certificate(setup, &chain, p)?;
    let trunc = first_passage(&setup.model, &setup.action, mu, p.horizon, p.support_cap)?;
    let h_theta = b.furstenberg_entropy_hitting(&trunc, mu, Some(&cert))?;
    let scaled = int(setup.action.index() as i64) * &h_mu.q;
    let abramov_ok = if h_theta.exact {
        h_theta.lower.q == scaled
    } else {
        let target = to_f64(&scaled) * (b.branching() as f64).ln();
        h_theta.lower.nats() <= target + FLOAT_GUARD && target <= h_theta.upper_nats + FLOAT_GUARD
    };

    let rows = b.telescoping_check(mu, &setup.action, p.horizon, p.support_cap)?;
    let unit = (b.branching() as f64).ln();
    let telescoping_ok = rows.iter().all(|r| {
        r.equal && !r.remainder.is_negative() && to_f64(&r.remainder) * unit <= r.remainder_bound_nats + FLOAT_GUARD
    });

    let mut rng = stream_rng(p.seed, 0);
    let support: Vec<&GroupElement> = mu.sorted_atoms().into_iter().map(|(g, _)| g).collect();
    let tuples = p.samples.min(10_000);
    let mut min_slack = f64::INFINITY;
    let mut cocycle_ok = true;
    for _ in 0..tuples {
        let len = rng.random_range(1..=6);
        let steps: Vec<GroupElement> = (0..len).map(|_| support[rng.random_range(0..support.len())].clone()).collect();
        min_slack = min_slack.min(b.phi_bound_check(&steps, mu)?.slack_nats);
        let g = &ball[rng.random_range(0..ball.len())];
        let g1 = &ball[rng.random_range(0..ball.len())];
        let depth = 2 * p.radius + 1 + rng.random_range(0..3);
        let w = b.random_word(&mut rng, depth);
        cocycle_ok &= b.cocycle_residual(g, g1, &w)? == 0;
    }
    let phi_bound_ok = tuples == 0 || min_slack >= -FLOAT_GUARD;

    let checks = [
        ("phi_matches_cylinder_sum_and_positive", phi_ok),
        ("nearly_harmonic", harmonic_ok),
        ("stationary", stationary),
        ("abramov", abramov_ok),
        ("telescoping", telescoping_ok),
        ("phi_bound", phi_bound_ok),
        ("cocycle_relation", cocycle_ok),
    ];
    let result = json!({
        "h_mu": h_mu.to_string(),
        "h_mu_nats": round_float(h_mu.nats()),
        "h_theta": h_theta,
        "index": setup.action.index(),
        "telescoping": rows,
        "phi_bound": { "tuples": tuples, "min_slack_nats": round_float(if tuples == 0 { 0.0 } else { min_slack }) },
        "step_cost_nats": round_float(step_cost_nats(mu)?),
        "checks": checks_json(&checks),
    });
    Ok((Status::from_checks(&checks), result, table))
}

fn entropy(setup: &Setup, p: &Params) -> Result<Parts> {
    let mut seq = entropy_sequence(&setup.model, &setup.mu, p.n_max, p.support_cap)?;
    if let GroupKind::Free { rank } = setup.model.kind() {
        if *rank >= 2 {
            let b = BoundaryModel::new(*rank)?;
            if b.is_stationary(&setup.mu, 2)? {
                seq = seq.with_lower(b.furstenberg_entropy(&setup.mu)?.to_log_value());
            }
        }
    }
    let bracket = seq.bracket();
    let smb = if p.samples > 0 && p.smb_n <= seq.n_max() {
        Some(smb_estimate(&setup.model, &setup.mu, p.smb_n, p.samples, p.seed, p.support_cap)?)
    } else {
        None
    };
    let checks = [
        ("invariants", seq.invariants_hold()),
        ("bracket_ordered", bracket.lower.nats() <= bracket.upper.nats() + FLOAT_GUARD),
        ("smb_within_4se", smb.as_ref().is_none_or(|s| s.z_score() <= Z_THRESHOLD)),
    ];
    let mut table = Table::new(&["n", "entropy", "increment", "average", "support"]);
    for (i, (h, d)) in seq.entropies.iter().zip(seq.differences()).enumerate() {
        let n = i + 1;
        table.push(vec![
            n.to_string(),
            round_float(h.nats()).to_string(),
            round_float(d.nats()).to_string(),
            round_float(h.nats() / n as f64).to_string(),
            seq.support_sizes[i].to_string(),
        ]);
    }
    let result = json!({
        "sequence": seq,
        "increments": seq.differences(),
        "bracket": bracket,
        "smb": smb,
        "checks": checks_json(&checks),
    });
    Ok((Status::from_checks(&checks), result, table))
}

fn abramov(setup: &Setup, p: &Params) -> Result<Parts> {
    let r = corollary_check(&setup.model, &setup.mu, &setup.action, p.horizon, p.n_max, p.support_cap, p.max_bias)?;
    let chain = CosetChain::build(&setup.model, &setup.action, &setup.mu)?;
    let kac_ok = chain.expected_return_time()? == int(setup.action.index() as i64);
    let status = match (r.status, kac_ok) {
        (_, false) | (CheckStatus::Inconsistent, _) => Status::Failed,
        (CheckStatus::Inconclusive, _) => Status::Inconclusive,
        (CheckStatus::Consistent, _) => Status::Ok,
    };
    let mut table = Table::new(&["n", "walk_increment", "induced_increment"]);
    let (dw, di) = (r.walk.differences(), r.induced.differences());
    for n in 0..dw.len().max(di.len()) {
        let cell = |d: &Vec<crate::logvalue::LogValue>| d.get(n).map(|x| round_float(x.nats()).to_string()).unwrap_or_default();
        table.push(vec![(n + 1).to_string(), cell(&dw), cell(&di)]);
    }
    let result = json!({ "kac_identity": kac_ok, "corollary": r });
    Ok((status, result, table))
}

/// Harmonicity and restriction checks for seeded random cylinder functions.
pub fn harmonic_checks(b: &BoundaryModel, setup: &Setup, p: &Params, functions: usize) -> Result<(bool, bool)> {
    let mut rng = stream_rng(p.seed, 1);
    let ball = setup.model.ball(2)?;
    let horizon = p.horizon.min(4);
    let mut harmonic = true;
    let mut restriction = true;
    for _ in 0..functions {
        let terms = (0..rng.random_range(1..=3))
            .map(|_| {
                let depth = rng.random_range(0..=2);
                (b.random_word(&mut rng, depth), Rational::new(rng.random_range(-5..=5).into(), rng.random_range(1..=4).into()))
            })
            .collect();
        let f = CylinderFunction { terms };
        for g in &ball {
            harmonic &= b.harmonicity_residual(&f, g, &setup.mu)?.is_zero();
        }
        let g = &ball[rng.random_range(0..ball.len())];
        let t = theta_from(&setup.model, &setup.action, &setup.mu, g, horizon, p.support_cap)?;
        let c = b.restriction_check(&f, &t)?;
        restriction &= c.within_bracket && c.stopped_identity && c.isometry;
    }
    Ok((harmonic, restriction))
}

fn verify_all(setup: &Setup, p: &Params) -> Result<Parts> {
    let mut sections = serde_json::Map::new();
    let mut table = Table::new(&["check", "status"]);
    let mut status = Status::Ok;
    let mut record = |name: &str, s: Status, v: Value| {
        table.push(vec![name.to_string(), serde_json::to_value(s).unwrap().as_str().unwrap_or_default().to_string()]);
        sections.insert(name.to_string(), json!({ "status": s, "result": v }));
        status = status.max(s);
    };
    let (s, v, _) = kac(setup)?;
    record("kac", s, v);
    let (s, v, _) = hit(setup, p)?;
    record("hit", s, v);
    let (s, v, _) = tails(setup, p)?;
    record("tails", s, v);
    let free_boundary = matches!(setup.model.kind(), GroupKind::Free { rank } if *rank >= 2)
        && BoundaryModel::for_model(&setup.model)?.is_stationary(&setup.mu, 2)?;
    if free_boundary {
        let (s, v, _) = boundary(setup, p)?;
        record("boundary", s, v);
        let b = BoundaryModel::for_model(&setup.model)?;
        let (harmonic, restriction) = harmonic_checks(&b, setup, p, 20)?;
        let checks = [("harmonicity", harmonic), ("restriction", restriction)];
        record("harmonic_functions", Status::from_checks(&checks), checks_json(&checks));
    }
    let (s, v, _) = entropy(setup, p)?;
    record("entropy", s, v);
    let (s, v, _) = abramov(setup, p)?;
    record("abramov", s, v);
    Ok((status, Value::Object(sections), table))
}

/// Worker count from `WALK_INDUCTION_WORKERS`, if set and valid.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("WALK_INDUCTION_WORKERS").ok()?.parse().ok().filter(|&n| n > 0)
}
