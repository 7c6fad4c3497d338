//! Rendering in the three output formats. Machine formats print rationals
//! as "num/den".

use clap::ValueEnum;
use qchar::affine::ModularReport;
use qchar::fusion::{FRSolution, FusionRing, Residual};
use qchar::qseries::QSeries;
use qchar::rat::fmt_rat;
use qchar::verify::CorpusSummary;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
    s.push('\n');
    s
}

fn csv_out(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub fn series(s: &QSeries, fmt: Format) -> String {
    match fmt {
        Format::Text => format!("{s}\n"),
        Format::Json => pretty(&s.to_json()),
        Format::Csv => {
            let trunc = s.trunc().map(|t| fmt_rat(&t)).unwrap_or_default();
            csv_out(
                &["exponent", "coeff", "trunc"],
                s.terms().map(|(e, c)| vec![fmt_rat(&e), fmt_rat(c), trunc.clone()]),
            )
        }
    }
}

pub fn corpus(sum: &CorpusSummary, fmt: Format) -> String {
    match fmt {
        Format::Text => sum.table(),
        Format::Json => pretty(&serde_json::to_value(sum).expect("summary serialises")),
        Format::Csv => csv_out(
            &["id", "pass", "checked_to", "mismatch_exponent", "lhs", "rhs", "certificate", "error", "millis"],
            sum.reports.iter().map(|r| {
                let m = r.first_mismatch.as_ref();
                vec![
                    r.id.clone(),
                    r.pass.to_string(),
                    fmt_rat(&r.checked_to.0),
                    m.map(|m| fmt_rat(&m.exponent.0)).unwrap_or_default(),
                    m.map(|m| fmt_rat(&m.lhs.0)).unwrap_or_default(),
                    m.map(|m| fmt_rat(&m.rhs.0)).unwrap_or_default(),
                    r.certificate.clone(),
                    r.error.clone().unwrap_or_default(),
                    r.millis.to_string(),
                ]
            }),
        ),
    }
}

/// (kind, labels, ζ₈ exponent) for every nontrivial entry.
fn entries(ring: &FusionRing, sol: &FRSolution) -> Vec<(&'static str, String, u8)> {
    let name = |i: usize| ring.channels[i].as_str();
    let mut out: Vec<(&'static str, String, u8)> = sol
        .f
        .iter()
        .filter(|(_, v)| **v != 0)
        .map(|(&(j, k, i), &v)| ("F", format!("{}{}{}", name(j), name(k), name(i)), v))
        .collect();
    out.extend(sol.r.iter().map(|(&(i, j), &v)| ("R", format!("{}{}", name(i), name(j)), v)));
    out
}

pub fn solutions(ring: &FusionRing, sols: &[FRSolution], contains: Option<bool>, fmt: Format) -> String {
    match fmt {
        Format::Text => {
            let mut s = format!("{} solutions (values are exponents of ζ₈)\n", sols.len());
            if let Some(c) = contains {
                s.push_str(&format!("contains reference solution: {}\n", if c { "yes" } else { "no" }));
            }
            for (n, sol) in sols.iter().enumerate() {
                let parts: Vec<String> = entries(ring, sol).iter().map(|(k, l, v)| format!("{k}{l}={v}")).collect();
                s.push_str(&format!("#{n}: {}\n", parts.join(" ")));
            }
            s
        }
        Format::Json => pretty(&json!({
            "count": sols.len(),
            "contains_reference": contains,
            "solutions": sols.iter().map(|x| x.to_json(ring)).collect::<Vec<_>>(),
        })),
        Format::Csv => csv_out(
            &["solution", "kind", "labels", "zeta8_exp"],
            sols.iter().enumerate().flat_map(|(n, sol)| {
                entries(ring, sol)
                    .into_iter()
                    .map(move |(k, l, v)| vec![n.to_string(), k.to_string(), l, v.to_string()])
            }),
        ),
    }
}

pub fn residuals(rows: &[(&str, Residual)], fmt: Format) -> String {
    match fmt {
        Format::Text => rows
            .iter()
            .map(|(name, r)| {
                let first = r.first_violation.as_deref().map(|v| format!("  first: {v}")).unwrap_or_default();
                format!(
                    "{name:<9} {} equations, {} violated, max defect {:.3e}{first}\n",
                    r.tuples, r.violations, r.max_defect
                )
            })
            .collect(),
        Format::Json => pretty(&Value::Object(
            rows.iter().map(|(n, r)| (n.to_string(), serde_json::to_value(r).expect("residual serialises"))).collect(),
        )),
        Format::Csv => csv_out(
            &["check", "equations", "violations", "max_defect", "first_violation"],
            rows.iter().map(|(n, r)| {
                vec![
                    n.to_string(),
                    r.tuples.to_string(),
                    r.violations.to_string(),
                    format!("{:e}", r.max_defect),
                    r.first_violation.clone().unwrap_or_default(),
                ]
            }),
        ),
    }
}

pub fn scalar(name: &str, v: f64, fmt: Format) -> String {
    match fmt {
        Format::Text => format!("{name} = {v:.12}\n"),
        Format::Json => pretty(&json!({ name: v })),
        Format::Csv => csv_out(&["name", "value"], [vec![name.to_string(), format!("{v}")]]),
    }
}

pub fn modular(reports: &[(&str, &ModularReport)], tol: f64, fmt: Format) -> String {
    let rows = || {
        reports.iter().flat_map(|(name, rep)| rep.rows.iter().map(move |(tau, row, err)| (*name, *tau, *row, *err)))
    };
    match fmt {
        Format::Text => {
            let mut s: String = rows()
                .map(|(n, tau, row, err)| {
                    let ok = if err < tol { "PASS" } else { "FAIL" };
                    format!("{ok}  {n:<9} tau={tau} row {row}  rel err {err:.3e}\n")
                })
                .collect();
            s.push_str(&format!("tolerance {tol:e}\n"));
            s
        }
        Format::Json => pretty(&json!({
            "tolerance": tol,
            "rows": rows().map(|(n, tau, row, err)| json!({
                "check": n, "tau_re": tau.re, "tau_im": tau.im, "row": row, "rel_err": err, "pass": err < tol,
            })).collect::<Vec<_>>(),
        })),
        Format::Csv => csv_out(
            &["check", "tau_re", "tau_im", "row", "rel_err", "pass"],
            rows().map(|(n, tau, row, err)| {
                vec![n.to_string(), tau.re.to_string(), tau.im.to_string(), row.to_string(), format!("{err:e}"), (err < tol).to_string()]
            }),
        ),
    }
}
