use std::fs;
use std::io::Write as _;
use std::path::Path;

use dklab_core::certificates::{
    centralizer_construct, centralizer_verify, extreme_section, find_ring_family, ivakhno_construct, ivakhno_verify,
    partition_base, random_unit_lip, CertificateReport, RingFamily,
};
use dklab_core::dkprofile::{
    constructive_dk_upper, dk_floor_check, estimate_dk, sup_grid_size, ConstructiveBound, ConstructiveRoute, DkBudget,
    SUP_GRID_LIMIT,
};
use dklab_core::hullgeom::{CmParams, DescentBudget, GridOracle, GRID_POINT_LIMIT};
use dklab_core::lipmetric::{
    geometric_chain, integer_ray, lip_seminorm_witness, mcshane_extend, FiniteMetricSpace, LipFunction,
};
use dklab_core::spaces::{sample_unit_ball, NormedSpaceSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{BudgetLevel, CertKind, Construct, Failure, Format, GenKind, RunConfig, EXIT_NOT_FOUND, EXIT_VERIFY_FAIL};

type Outcome = Result<u8, Failure>;

fn write_output(config: &RunConfig, text: &str) -> Result<(), Failure> {
    match &config.args.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(format!("cannot write to stdout: {e}"))),
    }
}

fn json_document(config: &RunConfig, result: impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "config": config, "result": result })).expect("serializable");
    s.push('\n');
    s
}

fn config_comment(config: &RunConfig) -> String {
    format!("# config: {}\n", serde_json::to_string(config).expect("serializable"))
}

/// The requested format, or `default`; anything outside `allowed` is an input error.
fn output_format(config: &RunConfig, allowed: &[Format], default: Format) -> Result<Format, Failure> {
    let f = config.args.format.unwrap_or(default);
    if allowed.contains(&f) {
        return Ok(f);
    }
    let names: Vec<&str> = allowed.iter().map(|f| format_name(*f)).collect();
    Err(Failure::input(format!("`{}` writes {}", config.command, names.join(" or "))))
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "text",
    }
}

fn require<T: Clone>(value: &Option<T>, flag: &str, command: &str) -> Result<T, Failure> {
    value.clone().ok_or_else(|| Failure::input(format!("`{command}` needs --{flag}")))
}

fn read_metric(path: &Path) -> Result<FiniteMetricSpace, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    FiniteMetricSpace::parse(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_space(s: &str) -> Result<NormedSpaceSpec, Failure> {
    s.parse::<NormedSpaceSpec>().map_err(|e| Failure::input(format!("bad --space `{s}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| Failure::input(format!("bad entry `{t}` in --{flag}"))))
        .collect()
}

fn read_values(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for t in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            out.push(
                t.parse().map_err(|_| Failure::input(format!("{} line {}: bad value `{t}`", path.display(), i + 1)))?,
            );
        }
    }
    Ok(out)
}

/// `3`, `1..4`, `1-4` (inclusive) or `1,2,4`.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::input(format!("bad --k `{s}`; use 3, 1..4, 1-4 or 1,2,4"));
    let ks: Vec<usize> = if let Some((a, b)) = s.split_once("..").or_else(|| s.split_once('-')) {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        parse_list(s, "k")?
    };
    if ks.is_empty() || ks.contains(&0) {
        return Err(bad());
    }
    Ok(ks)
}

fn parse_alpha(s: &Option<String>, eps: f64) -> Result<f64, Failure> {
    match s.as_deref() {
        None => Ok(1.0),
        Some("plus") => Ok(1.0 + eps),
        Some(v) => v.parse().map_err(|_| Failure::input(format!("bad --alpha `{v}`; use a number or `plus`"))),
    }
}

fn budget(level: Option<BudgetLevel>) -> DkBudget {
    match level.unwrap_or(BudgetLevel::Default) {
        BudgetLevel::Light => DkBudget { candidates: 8, descent: DescentBudget::light(), ..DkBudget::default() },
        BudgetLevel::Default => DkBudget::default(),
        BudgetLevel::Heavy => DkBudget {
            candidates: 64,
            descent: DescentBudget { sweeps: 24, random_pool: 16, coordinate_moves: 48 },
            grid_top: 4,
            sup_descent: DescentBudget::default(),
            ..DkBudget::default()
        },
    }
}

pub fn lip(config: RunConfig) -> Outcome {
    let a = &config.args;
    output_format(&config, &[Format::Json], Format::Json)?;
    let metric = read_metric(&require(&a.metric, "metric", "lip")?)?;
    let values: Vec<f64> = match (&a.values, &a.values_file) {
        (_, Some(path)) => read_values(path)?,
        (Some(v), None) => parse_list(v, "values")?,
        (None, None) => return Err(Failure::input("`lip` needs --values or --values-file")),
    };
    let f = match &a.mask {
        Some(m) => LipFunction::restricted(values, parse_list(m, "mask")?),
        None => LipFunction::new(values),
    };
    let w = lip_seminorm_witness(&metric, &f)?;
    let mut result = json!({ "seminorm": w.value, "pair": [w.pair.0, w.pair.1], "domain": f.domain() });
    if let Some(l) = a.extend {
        let ext = mcshane_extend(&metric, &f, l)?;
        let g = lip_seminorm_witness(&metric, &ext)?;
        let agrees = f.domain().iter().all(|&i| ext.values[i] == f.values[i]);
        result["extension"] = json!({
            "constant": l,
            "values": ext.values,
            "seminorm": g.value,
            "pair": [g.pair.0, g.pair.1],
            "agrees_on_domain": agrees,
        });
    }
    write_output(&config, &json_document(&config, result))?;
    Ok(0)
}

pub fn rings(config: RunConfig) -> Outcome {
    let a = &config.args;
    output_format(&config, &[Format::Json], Format::Json)?;
    let metric = read_metric(&require(&a.metric, "metric", "rings")?)?;
    let eps = require(&a.eps, "eps", "rings")?;
    let target = single_k(a.k.as_deref(), 3)?;
    let found = find_ring_family(&metric, eps, target)?;
    let validation = found.as_ref().map(|f| f.validate(&metric)).transpose()?;
    let result = json!({ "target": target, "found": found.is_some(), "family": found, "validation": validation });
    write_output(&config, &json_document(&config, result))?;
    match found {
        Some(_) => Ok(0),
        None => Err(Failure { code: EXIT_NOT_FOUND, message: format!("no ring family with {target} entries") }),
    }
}

fn single_k(s: Option<&str>, default: usize) -> Result<usize, Failure> {
    match s {
        None => Ok(default),
        Some(s) => {
            let ks = parse_k_range(s)?;
            if ks.len() != 1 {
                return Err(Failure::input(format!("--k must be a single value here, got `{s}`")));
            }
            Ok(ks[0])
        }
    }
}

fn read_family(path: &Path) -> Result<RingFamily, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let fam = v.pointer("/result/family").cloned().unwrap_or(v);
    serde_json::from_value(fam).map_err(|e| Failure::input(format!("{}: not a ring family: {e}", path.display())))
}

fn prefixed(report: CertificateReport, prefix: &str) -> CertificateReport {
    CertificateReport::new(
        report
            .checks
            .into_iter()
            .map(|mut c| {
                c.name = format!("{prefix}{}", c.name);
                c
            })
            .collect(),
    )
}

pub fn cert(kind: CertKind, config: RunConfig) -> Outcome {
    output_format(&config, &[Format::Json], Format::Json)?;
    match kind {
        CertKind::Ivakhno => cert_rings(&config),
        CertKind::Centralizer => cert_centralizer(&config),
    }
}

fn cert_rings(config: &RunConfig) -> Outcome {
    let a = &config.args;
    let cmd = "cert ivakhno";
    let metric = read_metric(&require(&a.metric, "metric", cmd)?)?;
    let eps = require(&a.eps, "eps", cmd)?;
    let seed = require(&a.seed, "seed", cmd)?;
    let n = a.n.unwrap_or(1);
    let k = single_k(a.k.as_deref(), 3)?;
    let panel = a.panel.unwrap_or(1).max(1);
    let family = match &a.family {
        Some(p) => read_family(p)?,
        None => find_ring_family(&metric, eps, k)?
            .ok_or_else(|| Failure { code: EXIT_NOT_FOUND, message: format!("no ring family with {k} entries") })?,
    };
    if k > family.len() {
        return Err(Failure::input(format!("--k {k} exceeds the family size {}", family.len())));
    }
    let family = RingFamily { epsilon: eps, entries: family.entries[..k].to_vec() };
    let validation = family.validate(&metric)?;
    let mut report = prefixed(validation.clone(), "family.");
    let mut tuples = Vec::new();
    if validation.pass {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 0..panel {
            let z = random_unit_lip(&metric, n, &mut rng);
            let built = ivakhno_construct(&metric, &z, &family, eps)?;
            let rep = ivakhno_verify(&metric, &z, &family, &built, k, eps)?;
            // The family part was already reported once.
            let own: Vec<_> = rep.checks.into_iter().filter(|c| !c.name.starts_with("ring")).collect();
            report.extend(prefixed(CertificateReport::new(own), &format!("z[{p}].")));
            let z_values: Vec<&Vec<f64>> = z.iter().map(|f| &f.values).collect();
            let built_values: Vec<Vec<&Vec<f64>>> =
                built.iter().map(|t| t.iter().map(|f| &f.values).collect()).collect();
            tuples.push(json!({ "z": z_values, "constructed": built_values }));
        }
    }
    let result = json!({
        "family": family,
        "k": k,
        "bound": (4.0 + 2.0 * eps) / k as f64,
        "pass": report.pass,
        "report": report,
        "tuples": tuples,
    });
    write_output(config, &json_document(config, result))?;
    Ok(if report.pass { 0 } else { EXIT_VERIFY_FAIL })
}

fn cert_centralizer(config: &RunConfig) -> Outcome {
    let a = &config.args;
    let cmd = "cert centralizer";
    let module = parse_space(&require(&a.space, "space", cmd)?)?;
    let eps = require(&a.eps, "eps", cmd)?;
    let seed = require(&a.seed, "seed", cmd)?;
    let n = a.n.unwrap_or(1);
    let m = require(&a.m, "m", cmd)?;
    let panel = a.panel.unwrap_or(1).max(1);
    let (base, _) =
        module.as_function_module().ok_or_else(|| Failure::input(format!("`{module}` is not a function module")))?;
    let e = extreme_section(&module)?;
    let sets = partition_base(base, m)?;
    let tuple_space = NormedSpaceSpec::sup_tuple(n, module.clone())?;
    // Skip the deterministic extreme points at the head of the sample.
    let zs: Vec<Vec<f64>> = sample_unit_ball(&tuple_space, panel + 64 + 2 * tuple_space.dim(), seed)
        .into_iter()
        .rev()
        .take(panel)
        .collect();
    // Rejects n = 0 and ε outside (0, 1).
    CmParams::plain(n, eps, m)?;
    let mut report = CertificateReport::default();
    let mut tuples = Vec::new();
    for (p, z) in zs.iter().enumerate() {
        let built = centralizer_construct(&module, z, &e, &sets)?;
        let rep = centralizer_verify(&module, z, &built, &sets, eps)?;
        report.extend(prefixed(rep, &format!("z[{p}].")));
        tuples.push(json!({ "z": z, "constructed": built }));
    }
    let result = json!({
        "space": module,
        "e": e,
        "sets": sets,
        "m": m,
        "bound": 2.0 / m as f64,
        "pass": report.pass,
        "report": report,
        "tuples": tuples,
    });
    write_output(config, &json_document(config, result))?;
    Ok(if report.pass { 0 } else { EXIT_VERIFY_FAIL })
}

pub fn dk(config: RunConfig) -> Outcome {
    let a = &config.args;
    let eps = require(&a.eps, "eps", "dk")?;
    let seed = require(&a.seed, "seed", "dk")?;
    let n = require(&a.n, "n", "dk")?;
    let ks = parse_k_range(a.k.as_deref().unwrap_or("1..4"))?;
    let k_max = *ks.iter().max().expect("nonempty");
    let format = output_format(&config, &[Format::Csv, Format::Json], Format::Csv)?;
    let mut budget = budget(a.budget);
    budget.grid_resolution = a.resolution;
    budget.sup_resolution = a.sup_resolution;
    let panel = a.panel.unwrap_or(50);

    if a.space.is_none() {
        let metric = read_metric(&require(&a.metric, "space or --metric", "dk")?)?;
        return dk_rings(&config, &metric, n, eps, &ks, panel, seed, format);
    }
    let space = parse_space(a.space.as_deref().expect("checked"))?;
    let alpha = parse_alpha(&a.alpha, eps)?;
    let params = CmParams::new(n, eps, alpha, k_max)?;
    if let Some(h) = a.resolution {
        // Refuse before any work when the grid is too large.
        if GridOracle::grid_size(&space, &params, h) > GRID_POINT_LIMIT {
            GridOracle::new(&space, &params, h)?;
        }
    }
    if let Some(h) = a.sup_resolution {
        let points = sup_grid_size(&space, n, h);
        if points > SUP_GRID_LIMIT {
            // largest per-axis count the limit allows, then the coarsest h reaching it
            let axis = SUP_GRID_LIMIT.powf(1.0 / (n * space.dim()) as f64).floor();
            let steps = ((axis - 1.0) / 2.0).floor();
            let required_resolution = if steps >= 1.0 { 1.0 / steps } else { f64::INFINITY };
            return Err(dklab_core::Error::GridRefused { points, limit: SUP_GRID_LIMIT, required_resolution }.into());
        }
    }
    let mut profile = estimate_dk(&space, n, eps, alpha, &ks, &budget, seed)?;

    let route = match a.construct.unwrap_or(Construct::Auto) {
        Construct::None => None,
        Construct::Rings => return Err(Failure::input("--construct rings needs --metric instead of --space")),
        Construct::Centralizer => {
            if space.as_function_module().is_none() {
                return Err(Failure::input(format!("`{space}` is not a function module")));
            }
            Some(ConstructiveRoute::Centralizer { module: space.clone(), panel })
        }
        Construct::Auto => space
            .as_function_module()
            .filter(|_| alpha >= 1.0)
            .map(|_| ConstructiveRoute::Centralizer { module: space.clone(), panel }),
    };
    let constructive: Vec<ConstructiveBound> = match &route {
        Some(r) => constructive_dk_upper(r, n, eps, k_max, seed)?,
        None => Vec::new(),
    };
    for b in &constructive {
        if alpha >= b.alpha {
            profile.apply_upper(b.k, b.upper, &b.route);
        }
    }
    let consistent = profile.entries.iter().all(|e| e.lower <= e.heuristic + 1e-9)
        && constructive.iter().all(|b| profile.entry(b.k).is_none_or(|e| e.heuristic <= b.upper + 1e-9));

    let floor = if a.floor {
        let h = a.resolution.ok_or_else(|| Failure::input("--floor needs --resolution"))?;
        Some(dk_floor_check(&space, n, eps, k_max, h)?)
    } else {
        None
    };

    let text = match format {
        Format::Csv => {
            let mut s = config_comment(&config);
            if let Some(f) = &floor {
                s.push_str(&format!("# floor: {} (conclusive: {})\n", f.floor, f.conclusive));
            }
            s.push_str(&profile.to_csv());
            s
        }
        _ => json_document(
            &config,
            json!({
                "profile": profile,
                "constructive": constructive,
                "floor": floor,
                "consistent": consistent,
            }),
        ),
    };
    write_output(&config, &text)?;
    Ok(if consistent { 0 } else { EXIT_VERIFY_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn dk_rings(
    config: &RunConfig,
    metric: &FiniteMetricSpace,
    n: usize,
    eps: f64,
    ks: &[usize],
    panel: usize,
    seed: u64,
    format: Format,
) -> Outcome {
    let k_max = *ks.iter().max().expect("nonempty");
    let family = match &config.args.family {
        Some(p) => read_family(p)?,
        None => match find_ring_family(metric, eps, 1)? {
            Some(f) => f,
            None => return Err(Failure { code: EXIT_NOT_FOUND, message: "no ring family found".into() }),
        },
    };
    let family = RingFamily { epsilon: eps, ..family };
    let route = ConstructiveRoute::Ivakhno { metric: metric.clone(), family, panel };
    let bounds: Vec<ConstructiveBound> =
        constructive_dk_upper(&route, n, eps, k_max, seed)?.into_iter().filter(|b| ks.contains(&b.k)).collect();
    let text = match format {
        Format::Csv => {
            let mut s = config_comment(config);
            s.push_str("k,lower,upper,heuristic,method,witness-id\n");
            for b in &bounds {
                s.push_str(&format!(
                    "{},0,{},,upper={}(alpha={});panel={},-\n",
                    b.k, b.upper, b.route, b.alpha, b.panel
                ));
            }
            s
        }
        _ => json_document(config, json!({ "constructive": bounds })),
    };
    write_output(config, &text)?;
    Ok(0)
}

pub fn generate(kind: GenKind, config: RunConfig) -> Outcome {
    let a = &config.args;
    let levels = require(&a.levels, "levels", "gen")?;
    let ratio = require(&a.ratio, "ratio", "gen")?;
    let metric = match kind {
        GenKind::Chain => geometric_chain(ratio, levels)?,
        GenKind::Ray => integer_ray(levels, ratio)?,
    };
    let text = match output_format(&config, &[Format::Text, Format::Json], Format::Text)? {
        Format::Json => json_document(&config, json!({ "metric": metric })),
        _ => format!("{}{}", config_comment(&config), metric.to_text()),
    };
    write_output(&config, &text)?;
    Ok(0)
}
