//! CSV and JSON emission of sweep results.
//!
//! The CSV has one `run` row per case followed by one `summary` row. Runtime
//! is deliberately absent from the CSV so that repeated sweeps produce
//! byte-identical files; it is reported in the JSON only.

use std::io::Write;

use serde_json::{json, Value};

use super::{SweepOutcome, VerificationReport};

pub const REPORT_SCHEMA: &str = "uhlenbeck-report/1";

pub const CSV_HEADER: [&str; 30] = [
    "kind",
    "index",
    "domain",
    "nonlinearity",
    "p",
    "bc",
    "components",
    "rhs",
    "kappa",
    "h_target",
    "h",
    "cells",
    "grad_sup",
    "f_norm_n1",
    "bound_rhs",
    "gradient_ratio",
    "energy_integral",
    "energy_ratio",
    "oracle",
    "oracle_error",
    "eps_final",
    "iterations",
    "residual",
    "regime",
    "error",
    "ratio_min",
    "ratio_max",
    "ratio_band",
    "max_gradient_spread",
    "max_energy_spread",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run_row(r: &VerificationReport) -> Vec<String> {
    let d = &r.descriptor;
    let mut row = vec![
        "run".to_string(),
        r.index.to_string(),
        d.domain.clone(),
        d.nonlinearity.clone(),
        opt(d.p),
        d.bc.as_str().to_string(),
        d.components.to_string(),
        d.rhs.clone(),
        d.kappa.to_string(),
        d.h_target.to_string(),
    ];
    match &r.result {
        Ok(m) => row.extend([
            m.h.to_string(),
            m.cells.to_string(),
            m.grad_sup.to_string(),
            m.f_norm_n1.to_string(),
            m.bound_rhs.to_string(),
            m.gradient_ratio.to_string(),
            m.energy_integral.to_string(),
            m.energy_ratio.to_string(),
            opt(m.oracle),
            opt(m.oracle_error),
            m.eps_final.to_string(),
            m.iterations.to_string(),
            m.residual.to_string(),
            r.regime.clone(),
            String::new(),
        ]),
        Err(e) => {
            row.extend(std::iter::repeat(String::new()).take(13));
            row.push(r.regime.clone());
            row.push(e.clone());
        }
    }
    row.extend(std::iter::repeat(String::new()).take(5));
    row
}

/// Writes the CSV report.
pub fn write_csv<W: Write>(outcome: &SweepOutcome, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &outcome.reports {
        w.write_record(run_row(r))?;
    }
    let s = &outcome.summary;
    let mut row = vec!["summary".to_string(), s.rows.to_string()];
    row.extend(std::iter::repeat(String::new()).take(CSV_HEADER.len() - 7));
    row.extend([
        s.ratio_min.to_string(),
        s.ratio_max.to_string(),
        s.ratio_band.to_string(),
        s.max_gradient_spread.to_string(),
        s.max_energy_spread.to_string(),
    ]);
    // failures go in the error column of the summary row
    row[24] = if s.failures > 0 { format!("{} failed runs", s.failures) } else { String::new() };
    w.write_record(row)?;
    w.flush()?;
    Ok(())
}

/// The nested JSON report, with `config` echoed verbatim.
pub struct SweepJson;

impl SweepJson {
    pub fn build(outcome: &SweepOutcome, config: Value) -> Value {
        let rows: Vec<Value> = outcome
            .reports
            .iter()
            .map(|r| {
                let mut row = json!({
                    "index": r.index,
                    "descriptor": r.descriptor,
                    "regime": r.regime,
                    "runtime_ms": r.runtime.as_secs_f64() * 1e3,
                });
                match &r.result {
                    Ok(m) => row["measurements"] = json!(m),
                    Err(e) => row["error"] = json!(e),
                }
                row
            })
            .collect();
        json!({
            "schema": REPORT_SCHEMA,
            "config": config,
            "rows": rows,
            "summary": outcome.summary,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;
    use crate::nonlinearity::{FamilyRegistry, SpecRecord};
    use crate::rhs::{RhsCatalog, RhsRecord};
    use crate::solver::{BoundaryCondition, SolverConfig};
    use crate::verify::{run_sweep, SweepPlan};

    #[test]
    fn csv_and_json_shapes() {
        let plan = SweepPlan {
            domains: vec![DomainSpec::reference_triangle()],
            nonlinearities: vec![SpecRecord::power(2.0)],
            rhs: RhsRecord::constant(1.0),
            bc: BoundaryCondition::Dirichlet,
            components: 1,
            h: vec![0.2],
            kappa: vec![1.0, 2.0],
            solver: SolverConfig::default(),
        };
        let out = run_sweep(&plan, &FamilyRegistry::default(), &RhsCatalog::default(), Some(1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("kind,index,domain"));
        assert!(lines[1].starts_with("run,0,triangle,power(p=2),2,dirichlet,1,constant,1,0.2,"));
        assert!(lines[3].starts_with("summary,2,"));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for rec in reader.records() {
            assert_eq!(rec.unwrap().len(), CSV_HEADER.len());
        }

        let v = SweepJson::build(&out, serde_json::to_value(&plan).unwrap());
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert!(v["rows"][0]["runtime_ms"].as_f64().unwrap() >= 0.0);
        assert_eq!(v["config"]["bc"], "dirichlet");
        assert!(v["summary"]["ratio_band"].as_f64().unwrap() >= 1.0);
    }
}
