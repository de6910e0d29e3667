//! Command-line front door.
//!
//! Exit codes: 0 on success, 1 on input errors (bad flags, unreadable files,
//! violated state invariants), 2 when an analysis raises exclusion flags.

use crate::error::{Error, Result};
use crate::fixtures::{make_fixture, FixtureName, FixtureSpec, StateFixture};
use crate::io::{self, Payload};
use crate::numerics::Tolerance;
use crate::proofcheck;
use crate::purification::{ensemble_reduce, hjw_steering, purify};
use crate::report;
use crate::schmidt::{ghz_coefficient, gsd_detect, schmidt_decompose};
use crate::separability::{classify_bipartite, ppt_report, triangle_classify, SearchParams};
use crate::states::{Bipartition, DensityMatrix, PureState};

const USAGE: &str = "\
usage: multisep <command> [options]

commands:
  fixture NAME [--n N] [--dims D1,D2,..] [--k K] [--seed S] --out FILE
      write a canonical state (epr, ghz, ncat, w, basis, tiles,
      random_pure, random_gsd) to FILE
  schmidt FILE --cut CUT        bipartite Schmidt data across CUT (e.g. A|BC)
  gsd FILE [--tol T] [--retries R] [--seed S]
      detect the all-parties Schmidt form
  ppt FILE [--drop PARTY]       partial-transpose report (optionally after
                                tracing out PARTY, e.g. --drop C)
  classify FILE [--seed S] [--restarts N] [--iters N] [--tol T]
      certify a two-party state (separable / bound entangled / NPT)
  triangle FILE [--seed S] [--tol T]
      classify all three reductions of a three-party pure state
  purify FILE --out FILE        minimal purification of a density operator
  steer PSI ENSEMBLE --out FILE
      isometry on the last party carrying PSI onto the ensemble's lift
  proofcheck PSI [--ensemble FILE] [--seed S] [--tol T]
      pairwise orthogonality certificate (three parties) or the grouped
      induction (four or more)
  report FILE --json OUT [--seed S] [--tol T]
      run every applicable analysis; write the machine record to OUT

exit codes: 0 success, 1 input error, 2 analysis raised exclusion flags
";

struct Args {
    positional: Vec<String>,
    flags: Vec<(String, String)>,
}

const FLAGS_WITH_VALUE: &[&str] = &[
    "--n", "--dims", "--k", "--seed", "--out", "--cut", "--drop", "--tol", "--retries",
    "--restarts", "--iters", "--ensemble", "--json",
];

fn parse_args(argv: &[String]) -> Result<Args> {
    let mut positional = Vec::new();
    let mut flags = Vec::new();
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a.starts_with("--") {
            if !FLAGS_WITH_VALUE.contains(&a.as_str()) {
                return Err(Error::Parse(format!("unknown flag '{a}'")));
            }
            let v = it
                .next()
                .ok_or_else(|| Error::Parse(format!("flag '{a}' expects a value")))?;
            flags.push((a.clone(), v.clone()));
        } else {
            positional.push(a.clone());
        }
    }
    Ok(Args { positional, flags })
}

impl Args {
    fn flag(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, name: &str) -> Result<&str> {
        self.flag(name)
            .ok_or_else(|| Error::Parse(format!("missing required flag '{name}'")))
    }

    fn parse_flag<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>> {
        match self.flag(name) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("flag '{name}': cannot parse '{v}'"))),
        }
    }
}

fn search_params(args: &Args) -> Result<SearchParams> {
    let mut p = SearchParams::default();
    if let Some(t) = args.parse_flag::<f64>("--tol")? {
        p.tol = Tolerance::with_eps(t)?;
    }
    if let Some(s) = args.parse_flag::<u64>("--seed")? {
        p.seed = s;
    }
    if let Some(r) = args.parse_flag::<usize>("--restarts")? {
        p.restarts = r;
    }
    if let Some(i) = args.parse_flag::<usize>("--iters")? {
        p.iters = i;
    }
    if let Some(r) = args.parse_flag::<usize>("--retries")? {
        p.retries = r;
    }
    Ok(p)
}

fn parse_party(s: &str, n: usize) -> Result<usize> {
    let c = s
        .chars()
        .next()
        .filter(|_| s.len() == 1)
        .ok_or_else(|| Error::Parse(format!("party must be a single letter, got '{s}'")))?;
    let idx = (c.to_ascii_uppercase() as u8).wrapping_sub(b'A') as usize;
    if idx >= n {
        return Err(Error::Parse(format!(
            "party '{s}' out of range for {n} parties"
        )));
    }
    Ok(idx)
}

fn parse_cut(s: &str, n: usize) -> Result<Bipartition> {
    let (left, right) = s
        .split_once('|')
        .ok_or_else(|| Error::Parse(format!("cut must look like A|BC, got '{s}'")))?;
    let mut left_idx = Vec::new();
    for c in left.chars() {
        left_idx.push(parse_party(&c.to_string(), n)?);
    }
    let cut = Bipartition::new(&left_idx, n)?;
    // The right side is redundant but must be consistent when given.
    if !right.is_empty() {
        let mut right_idx: Vec<usize> = Vec::new();
        for c in right.chars() {
            right_idx.push(parse_party(&c.to_string(), n)?);
        }
        right_idx.sort_unstable();
        if right_idx != cut.right() {
            return Err(Error::Parse(format!(
                "cut '{s}' does not partition the {n} parties"
            )));
        }
    }
    Ok(cut)
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad dimension '{x}'")))
        })
        .collect()
}

fn load_pure(path: &str) -> Result<PureState> {
    match io::read_file(path)? {
        Payload::Pure(p) => Ok(p),
        _ => Err(Error::Parse(format!("{path}: expected a pure state file"))),
    }
}

fn load_density_like(path: &str) -> Result<DensityMatrix> {
    match io::read_file(path)? {
        Payload::Density(d) => Ok(d),
        Payload::Pure(p) => Ok(p.to_density()),
        _ => Err(Error::Parse(format!("{path}: expected a state file"))),
    }
}

fn header(what: &str, params: &SearchParams) {
    println!("multisep {what} | tol {:e} | seed {}", params.tol.eps, params.seed);
}

pub fn run(argv: &[String]) -> i32 {
    match dispatch(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Parse(_)) {
                eprintln!();
                eprintln!("{USAGE}");
            }
            1
        }
    }
}

fn dispatch(argv: &[String]) -> Result<i32> {
    if argv.is_empty() {
        return Err(Error::Parse("no command given".into()));
    }
    let cmd = argv[0].as_str();
    let args = parse_args(&argv[1..])?;
    match cmd {
        "fixture" => cmd_fixture(&args),
        "schmidt" => cmd_schmidt(&args),
        "gsd" => cmd_gsd(&args),
        "ppt" => cmd_ppt(&args),
        "classify" => cmd_classify(&args),
        "triangle" => cmd_triangle(&args),
        "purify" => cmd_purify(&args),
        "steer" => cmd_steer(&args),
        "proofcheck" => cmd_proofcheck(&args),
        "report" => cmd_report(&args),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(0)
        }
        other => Err(Error::Parse(format!("unknown command '{other}'"))),
    }
}

fn cmd_fixture(args: &Args) -> Result<i32> {
    let name = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("fixture needs a NAME".into()))?;
    let out = args.require("--out")?;
    let spec = FixtureSpec {
        name: FixtureName::parse(name)?,
        n: args.parse_flag::<usize>("--n")?,
        dims: match args.flag("--dims") {
            Some(d) => Some(parse_dims(d)?),
            None => None,
        },
        k: args.parse_flag::<usize>("--k")?,
        seed: args.parse_flag::<u64>("--seed")?.unwrap_or(0),
    };
    let payload = match make_fixture(&spec)? {
        StateFixture::Pure(p) => Payload::Pure(p),
        StateFixture::Density(d) => Payload::Density(d),
    };
    io::write_file(out, &payload)?;
    println!("wrote {name} fixture to {out}");
    Ok(0)
}

fn cmd_schmidt(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("schmidt needs a FILE".into()))?;
    let psi = load_pure(path)?;
    let params = search_params(args)?;
    let cut = parse_cut(args.require("--cut")?, psi.parties().count())?;
    header("schmidt", &params);
    let form = schmidt_decompose(&psi, &cut)?;
    println!("cut {}: {} coefficient(s)", cut.label(), form.coeffs.len());
    for (i, c) in form.coeffs.iter().enumerate() {
        println!("  a[{i}] = {}", io::fmt_real(*c));
    }
    println!("entropy: {} bits", io::fmt_real(psi.partial_entropy(&cut)?));
    Ok(0)
}

fn cmd_gsd(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("gsd needs a FILE".into()))?;
    let psi = load_pure(path)?;
    let params = search_params(args)?;
    header("gsd", &params);
    let g = gsd_detect(&psi, &params.tol, params.retries, params.seed);
    if g.decomposable {
        println!("decomposable: true ({} attempt(s))", g.attempts_used);
        for (i, c) in g.coeffs.iter().enumerate() {
            println!("  a[{i}] = {}", io::fmt_real(*c));
        }
        println!("residual: {:.3e}", g.residual);
        println!("ghz-coefficient: {} bits", io::fmt_real(ghz_coefficient(&g)?));
    } else {
        println!("decomposable: false ({} attempt(s))", g.attempts_used);
        if let Some(f) = &g.failure {
            println!("evidence: {}", f.describe());
        }
    }
    Ok(0)
}

fn cmd_ppt(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("ppt needs a FILE".into()))?;
    let rho = load_density_like(path)?;
    let params = search_params(args)?;
    let rho = match args.flag("--drop") {
        Some(p) => {
            let idx = parse_party(p, rho.parties().count())?;
            rho.partial_trace(&[idx])?
        }
        None => rho,
    };
    header("ppt", &params);
    let report = ppt_report(&rho)?;
    for e in &report.entries {
        println!(
            "cut {}: min eigenvalue {}  {}",
            e.cut.label(),
            io::fmt_real(e.min_eigenvalue),
            if e.npt { "NPT" } else { "PPT" }
        );
    }
    Ok(0)
}

fn cmd_classify(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("classify needs a FILE".into()))?;
    let rho = load_density_like(path)?;
    let params = search_params(args)?;
    header("classify", &params);
    let c = classify_bipartite(&rho, &params)?;
    println!("verdict: {}", c.verdict.as_str());
    println!("criterion: {} = {}", c.criterion, io::fmt_real(c.value));
    Ok(0)
}

fn cmd_triangle(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("triangle needs a FILE".into()))?;
    let psi = load_pure(path)?;
    let params = search_params(args)?;
    header("triangle", &params);
    let t = triangle_classify(&psi, &params)?;
    for s in &t.sides {
        println!(
            "side {}: {} ({} = {})",
            s.label(),
            s.classification.verdict.as_str(),
            s.classification.criterion,
            io::fmt_real(s.classification.value)
        );
    }
    println!("gsd decomposable: {}", t.gsd.decomposable);
    if t.exclusion_flags.is_empty() {
        println!("exclusion flags: none");
        Ok(0)
    } else {
        for f in &t.exclusion_flags {
            println!("EXCLUSION FLAG: {f}");
        }
        Ok(2)
    }
}

fn cmd_purify(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("purify needs a FILE".into()))?;
    let out = args.require("--out")?;
    let rho = match io::read_file(path)? {
        Payload::Density(d) => d,
        _ => return Err(Error::Parse(format!("{path}: expected a density file"))),
    };
    let psi = purify(&rho)?;
    io::write_file(out, &Payload::Pure(psi.clone()))?;
    println!(
        "wrote purification with dims {:?} to {out}",
        psi.parties().dims()
    );
    Ok(0)
}

fn cmd_steer(args: &Args) -> Result<i32> {
    if args.positional.len() < 2 {
        return Err(Error::Parse("steer needs PSI and ENSEMBLE files".into()));
    }
    let psi = load_pure(&args.positional[0])?;
    let ensemble = match io::read_file(&args.positional[1])? {
        Payload::Ensemble(e) => e,
        _ => {
            return Err(Error::Parse(format!(
                "{}: expected an ensemble file",
                args.positional[1]
            )))
        }
    };
    let out = args.require("--out")?;
    let m = hjw_steering(&psi, &ensemble)?;
    io::write_file(out, &Payload::Matrix(m.clone()))?;
    println!("wrote {}x{} steering isometry to {out}", m.rows(), m.cols());
    Ok(0)
}

fn cmd_proofcheck(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("proofcheck needs a PSI file".into()))?;
    let psi = load_pure(path)?;
    let params = search_params(args)?;
    header("proofcheck", &params);
    let n = psi.parties().count();
    if n == 3 {
        let outcome = match args.flag("--ensemble") {
            Some(epath) => {
                let e = match io::read_file(epath)? {
                    Payload::Ensemble(e) => e,
                    _ => return Err(Error::Parse(format!("{epath}: expected an ensemble file"))),
                };
                proofcheck::orthogonality_certificate(&psi, &ensemble_reduce(&e))?
            }
            None => {
                eprintln!(
                    "note: no ensemble supplied; falling back to the eigen-ensemble of the \
                     (B,C) reduction. Degenerate reductions may fail here even for \
                     decomposable states; use `gsd` for the detector route."
                );
                proofcheck::certificate_with_eigen_ensemble(&psi)?
            }
        };
        println!("{}", report::certificate_text(&outcome));
        if let CertificateOutcome::Certified { gsd, .. } = &outcome {
            for (i, c) in gsd.coeffs.iter().enumerate() {
                println!("  a[{i}] = {}", io::fmt_real(*c));
            }
        }
        Ok(0)
    } else if n >= 4 {
        if args.flag("--ensemble").is_some() {
            eprintln!("note: --ensemble is ignored for four or more parties");
        }
        let g = proofcheck::induction_step(&psi, &params.tol, params.seed);
        if g.decomposable {
            println!("induction: decomposable with {} term(s)", g.coeffs.len());
            for (i, c) in g.coeffs.iter().enumerate() {
                println!("  a[{i}] = {}", io::fmt_real(*c));
            }
        } else {
            println!("induction: not decomposable");
            if let Some(f) = &g.failure {
                println!("evidence: {}", f.describe());
            }
        }
        Ok(0)
    } else {
        Err(Error::BadDims("proofcheck needs at least three parties".into()))
    }
}

use crate::proofcheck::CertificateOutcome;

fn cmd_report(args: &Args) -> Result<i32> {
    let path = args
        .positional
        .first()
        .ok_or_else(|| Error::Parse("report needs a FILE".into()))?;
    let out = args.require("--json")?;
    let params = search_params(args)?;
    let rep = match io::read_file(path)? {
        Payload::Pure(p) => report::analyze_pure(&p, &params)?,
        Payload::Density(d) => report::analyze_density(&d, &params)?,
        _ => return Err(Error::Parse(format!("{path}: expected a state file"))),
    };
    std::fs::write(out, rep.json.as_bytes())?;
    print!("{}", rep.text);
    println!("machine report written to {out}");
    if rep.exclusion_flags.is_empty() {
        Ok(0)
    } else {
        Ok(2)
    }
}
