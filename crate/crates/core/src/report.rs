//! Bundled analyses with deterministic human and machine output.
//!
//! The machine record is JSON with insertion-ordered keys and every real
//! printed at 17 significant digits, so identical inputs and seeds produce
//! byte-identical reports.

use crate::error::Result;
use crate::io::fmt_real;
use crate::numerics::herm_eig;
use crate::proofcheck::{self, CertificateOutcome};
use crate::schmidt::{ghz_coefficient, gsd_detect, schmidt_decompose, GsdResult};
use crate::separability::{
    classify_bipartite, eigenseparable_check, multiseparability_report, ppt_report,
    range_product_search, realignment_value, triangle_classify, Classification, PptReport,
    SearchParams,
};
use crate::states::{Bipartition, DensityMatrix, PureState};
use std::fmt::Write as _;

/// Minimal ordered-JSON builder.
#[derive(Default)]
pub struct JsonObj {
    parts: Vec<String>,
}

impl JsonObj {
    pub fn new() -> Self {
        JsonObj { parts: Vec::new() }
    }

    pub fn raw(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        self.parts.push(format!("\"{key}\":{}", value.as_ref()));
        self
    }

    pub fn string(&mut self, key: &str, value: &str) -> &mut Self {
        self.raw(key, format!("\"{}\"", escape(value)))
    }

    pub fn real(&mut self, key: &str, value: f64) -> &mut Self {
        self.raw(key, fmt_real(value))
    }

    pub fn count(&mut self, key: &str, value: usize) -> &mut Self {
        self.raw(key, value.to_string())
    }

    pub fn boolean(&mut self, key: &str, value: bool) -> &mut Self {
        self.raw(key, if value { "true" } else { "false" })
    }

    pub fn finish(&self) -> String {
        format!("{{{}}}", self.parts.join(","))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn json_array<I: IntoIterator<Item = String>>(items: I) -> String {
    let v: Vec<String> = items.into_iter().collect();
    format!("[{}]", v.join(","))
}

pub fn reals_array(xs: &[f64]) -> String {
    json_array(xs.iter().map(|x| fmt_real(*x)))
}

pub fn classification_json(c: &Classification) -> String {
    let mut o = JsonObj::new();
    o.string("verdict", c.verdict.as_str())
        .string("criterion", &c.criterion)
        .real("value", c.value);
    o.finish()
}

pub fn ppt_json(report: &PptReport) -> String {
    json_array(report.entries.iter().map(|e| {
        let mut o = JsonObj::new();
        o.string("cut", &e.cut.label())
            .real("min_eigenvalue", e.min_eigenvalue)
            .raw("eigenvalues", reals_array(&e.eigenvalues))
            .string("verdict", if e.npt { "NPT" } else { "PPT" });
        o.finish()
    }))
}

pub fn gsd_json(g: &GsdResult) -> String {
    let mut o = JsonObj::new();
    o.boolean("decomposable", g.decomposable);
    if g.decomposable {
        o.raw("coeffs", reals_array(&g.coeffs));
        o.real("residual", g.residual);
        if let Ok(h) = ghz_coefficient(g) {
            o.real("ghz_coefficient_bits", h);
        }
    } else if let Some(f) = &g.failure {
        o.string("evidence", &f.describe());
        o.real("failing_value", g.residual);
    }
    o.count("attempts_used", g.attempts_used);
    o.finish()
}

/// A bundled analysis: machine JSON, human text, and any exclusion flags
/// (non-empty flags signal an internal inconsistency and map to exit code 2).
pub struct Report {
    pub json: String,
    pub text: String,
    pub exclusion_flags: Vec<String>,
}

fn header_text(what: &str, params: &SearchParams) -> String {
    format!(
        "multisep report: {what}\ntolerance: {:e}   seed: {}\n",
        params.tol.eps, params.seed
    )
}

/// Full analysis bundle for a pure state.
pub fn analyze_pure(psi: &PureState, params: &SearchParams) -> Result<Report> {
    let n = psi.parties().count();
    let mut text = header_text("pure state", params);
    let _ = writeln!(text, "dims: {:?}  parties: {}", psi.parties().dims(), n);

    let mut top = JsonObj::new();
    top.string("kind", "report")
        .real("tol", params.tol.eps)
        .count("seed", params.seed as usize)
        .string("input", "pure")
        .raw("dims", json_array(psi.parties().dims().iter().map(|d| d.to_string())));

    // Schmidt data across every single-party cut.
    if n >= 2 {
        let mut cuts = Vec::new();
        for p in 0..n {
            let cut = Bipartition::new(&[p], n)?;
            let form = schmidt_decompose(psi, &cut)?;
            let entropy = psi.partial_entropy(&cut)?;
            let mut o = JsonObj::new();
            o.string("cut", &cut.label())
                .raw("coeffs", reals_array(&form.coeffs))
                .real("entropy_bits", entropy);
            cuts.push(o.finish());
            let _ = writeln!(
                text,
                "schmidt {}: {} coefficient(s), entropy {:.6} bits",
                cut.label(),
                form.coeffs.len(),
                entropy
            );
        }
        top.raw("schmidt", json_array(cuts));
    }

    let gsd = gsd_detect(psi, &params.tol, params.retries, params.seed);
    top.raw("gsd", gsd_json(&gsd));
    if gsd.decomposable {
        let _ = writeln!(
            text,
            "gsd: decomposable, {} term(s), residual {:.3e}, cat-units {:.6}",
            gsd.coeffs.len(),
            gsd.residual,
            ghz_coefficient(&gsd).unwrap_or(0.0)
        );
    } else {
        let _ = writeln!(
            text,
            "gsd: not decomposable ({})",
            gsd.failure.as_ref().map(|f| f.describe()).unwrap_or_default()
        );
    }

    let mut flags = Vec::new();
    if n >= 3 {
        let reports = multiseparability_report(psi, params)?;
        let mut drops = Vec::new();
        for r in &reports {
            let mut o = JsonObj::new();
            o.string("dropped", &((b'A' + r.dropped as u8) as char).to_string())
                .raw("ppt", ppt_json(&r.ppt))
                .raw(
                    "classifications",
                    json_array(r.classifications.iter().map(|(cut, c)| {
                        let mut co = JsonObj::new();
                        co.string("cut", &cut.label());
                        co.raw("classification", classification_json(c));
                        co.finish()
                    })),
                );
            drops.push(o.finish());
            let _ = writeln!(
                text,
                "drop {}: min PT eigenvalue {:.6e} ({})",
                (b'A' + r.dropped as u8) as char,
                r.ppt.min_eigenvalue(),
                if r.ppt.all_ppt() { "PPT" } else { "NPT" }
            );
        }
        top.raw("multiseparability", json_array(drops));
    }

    if n == 3 {
        let t = triangle_classify(psi, params)?;
        let mut o = JsonObj::new();
        o.raw(
            "sides",
            json_array(t.sides.iter().map(|s| {
                let mut so = JsonObj::new();
                so.string("pair", &s.label())
                    .raw("classification", classification_json(&s.classification))
                    .real("min_pt_eigenvalue", s.min_pt_eigenvalue);
                so.finish()
            })),
        )
        .boolean("gsd_decomposable", t.gsd.decomposable)
        .raw(
            "exclusion_flags",
            json_array(t.exclusion_flags.iter().map(|f| format!("\"{}\"", escape(f)))),
        );
        top.raw("triangle", o.finish());
        for s in &t.sides {
            let _ = writeln!(
                text,
                "triangle {}: {} ({} = {:.6e})",
                s.label(),
                s.classification.verdict.as_str(),
                s.classification.criterion,
                s.classification.value
            );
        }
        for f in &t.exclusion_flags {
            let _ = writeln!(text, "EXCLUSION FLAG: {f}");
        }
        flags.extend(t.exclusion_flags);

        let cert = proofcheck::certificate_with_eigen_ensemble(psi)?;
        top.raw("proofcheck", certificate_json(&cert));
        let _ = writeln!(text, "proofcheck: {}", certificate_text(&cert));
    } else if n >= 4 {
        let ind = proofcheck::induction_step(psi, &params.tol, params.seed);
        top.raw("induction", gsd_json(&ind));
        let _ = writeln!(
            text,
            "induction: {}",
            if ind.decomposable { "decomposable" } else { "not decomposable" }
        );
    }

    Ok(Report { json: top.finish(), text, exclusion_flags: flags })
}

pub fn certificate_json(outcome: &CertificateOutcome) -> String {
    let pair_entries = |pairs: &[proofcheck::PairEntry]| {
        json_array(pairs.iter().map(|p| {
            let mut o = JsonObj::new();
            o.count("i", p.i)
                .count("j", p.j)
                .string("branch", p.label.kind.as_str())
                .real("minor", p.label.minor)
                .string("swapped_branch", p.swapped.kind.as_str())
                .real("swapped_minor", p.swapped.minor);
            o.finish()
        }))
    };
    match outcome {
        CertificateOutcome::Certified { gsd, pairs, ppt_ab_min, ppt_ac_min } => {
            let mut o = JsonObj::new();
            o.string("verdict", "certified")
                .raw("coeffs", reals_array(&gsd.coeffs))
                .real("residual", gsd.residual)
                .raw("pairs", pair_entries(pairs))
                .real("ppt_ab_min", *ppt_ab_min)
                .real("ppt_ac_min", *ppt_ac_min);
            o.finish()
        }
        CertificateOutcome::Violation { offending, reason, pairs, ppt_ab_min, ppt_ac_min } => {
            let mut o = JsonObj::new();
            o.string("verdict", "violation");
            if let Some((i, j)) = offending {
                o.count("offending_i", *i).count("offending_j", *j);
            }
            o.string("reason", reason)
                .raw("pairs", pair_entries(pairs))
                .real("ppt_ab_min", *ppt_ab_min)
                .real("ppt_ac_min", *ppt_ac_min);
            o.finish()
        }
    }
}

pub fn certificate_text(outcome: &CertificateOutcome) -> String {
    match outcome {
        CertificateOutcome::Certified { gsd, .. } => format!(
            "certified Schmidt form with {} term(s), residual {:.3e}",
            gsd.coeffs.len(),
            gsd.residual
        ),
        CertificateOutcome::Violation { reason, ppt_ab_min, ppt_ac_min, .. } => format!(
            "violation: {reason} [min PT eigenvalues: (A,B) {ppt_ab_min:.3e}, (A,C) {ppt_ac_min:.3e}]"
        ),
    }
}

/// Full analysis bundle for a density operator.
pub fn analyze_density(rho: &DensityMatrix, params: &SearchParams) -> Result<Report> {
    let n = rho.parties().count();
    let mut text = header_text("density operator", params);
    let _ = writeln!(text, "dims: {:?}  parties: {}", rho.parties().dims(), n);

    let mut top = JsonObj::new();
    top.string("kind", "report")
        .real("tol", params.tol.eps)
        .count("seed", params.seed as usize)
        .string("input", "density")
        .raw("dims", json_array(rho.parties().dims().iter().map(|d| d.to_string())));

    let eig = herm_eig(rho.mat())?;
    top.raw("eigenvalues", reals_array(&eig.values));
    let entropy = rho.von_neumann_entropy();
    top.real("entropy_bits", entropy);
    let _ = writeln!(text, "entropy: {entropy:.6} bits");

    if n >= 2 {
        let report = ppt_report(rho)?;
        top.raw("ppt", ppt_json(&report));
        let _ = writeln!(
            text,
            "partial transpose: min eigenvalue {:.6e} ({})",
            report.min_eigenvalue(),
            if report.all_ppt() { "PPT" } else { "NPT" }
        );
    }
    if n == 2 {
        let c = classify_bipartite(rho, params)?;
        top.raw("classification", classification_json(&c));
        let _ = writeln!(
            text,
            "classification: {} ({} = {:.6e})",
            c.verdict.as_str(),
            c.criterion,
            c.value
        );

        let realign = realignment_value(rho)?;
        top.real("realignment", realign);
        let search = range_product_search(rho, params)?;
        top.real("range_best_overlap", search.best_overlap);
        let _ = writeln!(
            text,
            "realignment: {realign:.9}   range product overlap: {:.9}",
            search.best_overlap
        );

        let esep = eigenseparable_check(rho, params)?;
        top.string("eigenseparability", esep.as_str());
        let _ = writeln!(text, "eigenseparability: {}", esep.as_str());
    }

    Ok(Report { json: top.finish(), text, exclusion_flags: Vec::new() })
}
