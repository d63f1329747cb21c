use std::fs;

use anyhow::{Context, Result};
use rug::{Float, Rational};
use serde_json::{json, Value};
use tentcert::alphacert::{certify, Certificate};
use tentcert::geometry::{induced_subdivision, HeightVector, PointConfig};
use tentcert::lambert::one_cell_heights;
use tentcert::numeric::{decimal_string, parse_rational, rational_to_f64};
use tentcert::refine::{candidate_systems, digit_refine, initial_digits, Candidate, Mode, RefineSettings, MAX_FREE};
use tentcert::solver::{maximize, Solution, SolverSettings};

use crate::io::{load_candidates, load_config, load_heights, write_output, Heights, InvalidInput};
use crate::{exit, Cli, Command};

pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Estimate { input } => estimate(cli, &load_config(input)?),
        Command::Certify { input, heights, subdivision, refine, dump_system } => {
            let x = load_config(input)?;
            let h = heights_or_estimate(cli, &x, heights.as_deref())?;
            let opts = CertifyOptions { subdivision, refine: *refine, dump: dump_system.as_deref() };
            certify_cmd(cli, &x, &h, &opts)
        }
        Command::ClosedForm { w1, w2, vol } => closed_form(cli, w1, w2, vol),
        Command::Tentplot { input, heights, out_dir } => {
            let x = load_config(input)?;
            let h = heights_or_estimate(cli, &x, heights.as_deref())?;
            tentplot(cli, &x, &h, out_dir)
        }
    }
}

fn solver_settings(cli: &Cli) -> SolverSettings {
    SolverSettings { precision: cli.precision, tol_flat: cli.tol_flat, gtol: cli.gtol, ..Default::default() }
}

fn strings(v: &[Float], digits: usize) -> Vec<String> {
    v.iter().map(|f| decimal_string(f, digits)).collect()
}

fn sci(v: &[Float]) -> Vec<String> {
    v.iter().map(|f| format!("{:.9e}", f.to_f64())).collect()
}

fn solution_json(cli: &Cli, s: &Solution) -> Value {
    json!({
        "heights": strings(&s.heights.values, cli.digits),
        "digits": cli.digits,
        "subdivision": s.subdivision.cell_vertex_sets(),
        "pieces": s.subdivision.cells.iter().map(|c| c.pieces.clone()).collect::<Vec<_>>(),
        "free_heights": s.chart.free_indices,
        "objective": decimal_string(&s.objective, 20),
        "integral": decimal_string(&s.integral, 20),
        "iterations": s.iterations,
        "converged": s.converged,
        "gradient_norm": format!("{:.3e}", s.grad_norm),
        "certification": "undecided",
        "warnings": s.warnings,
    })
}

fn estimate(cli: &Cli, x: &PointConfig) -> Result<u8> {
    let s = maximize(x, &solver_settings(cli))?;
    write_output(cli.output.as_deref(), &solution_json(cli, &s))?;
    if s.converged {
        Ok(exit::OK)
    } else {
        eprintln!("estimate did not converge: {}", s.warnings.join("; "));
        Ok(exit::NOT_CONVERGED)
    }
}

fn heights_or_estimate(cli: &Cli, x: &PointConfig, path: Option<&std::path::Path>) -> Result<Heights> {
    if let Some(p) = path {
        return load_heights(p, x.n(), cli.precision);
    }
    let s = maximize(x, &solver_settings(cli))?;
    if !s.converged {
        log::warn!("estimate did not converge; continuing with the best heights found");
    }
    let literals = strings(&s.heights.values, cli.digits);
    Ok(Heights { values: s.heights.values, literals })
}

struct CertifyOptions<'a> {
    subdivision: &'a str,
    refine: bool,
    dump: Option<&'a std::path::Path>,
}

enum Outcome {
    Certified,
    NotCertified,
    Budget,
    Failed,
}

fn certify_cmd(cli: &Cli, x: &PointConfig, h: &Heights, opts: &CertifyOptions) -> Result<u8> {
    let prec = cli.precision;
    let hv = HeightVector::new(h.values.clone());
    let candidates = if opts.subdivision == "auto" {
        candidate_systems(x, &hv, cli.tol_flat)?
    } else {
        load_candidates(std::path::Path::new(opts.subdivision), x)?
    };
    if candidates.is_empty() {
        anyhow::bail!(InvalidInput("no candidate subdivisions".into()));
    }
    if let Some(dir) = opts.dump {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let induced = induced_subdivision(x, &hv, cli.tol_flat)?;

    let mut reports = Vec::new();
    let mut outcomes = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let (report, outcome) = certify_candidate(cli, x, h, c, i, opts);
        let tag = match outcome {
            Outcome::Certified => "certified",
            Outcome::NotCertified => "not certified",
            Outcome::Budget => "term budget exceeded",
            Outcome::Failed => "failed",
        };
        eprintln!("[{i}] {}: {tag}", c.label);
        reports.push(report);
        outcomes.push(outcome);
    }
    let certified = outcomes.iter().position(|o| matches!(o, Outcome::Certified));
    let code = if certified.is_some() {
        exit::OK
    } else if outcomes.iter().any(|o| matches!(o, Outcome::Budget)) {
        exit::TERM_BUDGET
    } else {
        exit::NOT_CERTIFIED
    };
    let out = json!({
        "heights": h.literals,
        "precision": prec,
        "induced_subdivision": induced.cell_vertex_sets(),
        "certified": certified.is_some(),
        "certified_candidate": certified,
        "candidates": reports,
    });
    write_output(cli.output.as_deref(), &out)?;
    Ok(code)
}

fn certificate_json(c: &Certificate) -> Value {
    serde_json::to_value(c).unwrap_or(Value::Null)
}

fn certify_candidate(cli: &Cli, x: &PointConfig, h: &Heights, c: &Candidate, index: usize, opts: &CertifyOptions) -> (Value, Outcome) {
    let prec = cli.precision;
    let free = c.free_indices();
    let residual = c.residual(x, &h.values, prec);
    let max_res = residual.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let mut report = json!({
        "label": c.label,
        "kind": match c.mode { Mode::Reduced(_) => "reduced", Mode::Unreduced(_) => "unreduced" },
        "cells": c.cells,
        "free_heights": free,
        "residual": sci(&residual),
        "residual_max": format!("{max_res:.3e}"),
    });
    let sys = match c.build(x, cli.term_budget) {
        Ok(s) => s,
        Err(e) => {
            let outcome = if matches!(e, tentcert::Error::TermBudget { .. }) { Outcome::Budget } else { Outcome::Failed };
            report["status"] = json!(if matches!(outcome, Outcome::Budget) { "term_budget" } else { "error" });
            report["error"] = json!(e.to_string());
            return (report, outcome);
        }
    };
    report["system"] = json!({"id": sys.hash(), "degrees": sys.degrees, "terms": sys.n_terms()});
    if let Some(dir) = opts.dump {
        let path = dir.join(format!("system_{index}.json"));
        if let Err(e) = fs::write(&path, sys.to_json().to_string()) {
            log::warn!("could not write {}: {e}", path.display());
        }
    }
    let y0 = c.free_heights(&h.values);
    let cert = certify(&sys, &sys.lift(&y0, prec), prec);
    report["certificate"] = certificate_json(&cert);
    if cert.certified {
        report["status"] = json!("certified");
        return (report, Outcome::Certified);
    }
    if opts.refine {
        if free.len() > MAX_FREE {
            report["refinement"] = json!({"skipped": format!("{} free heights exceed {MAX_FREE}", free.len())});
        } else {
            let lits: Vec<&String> = free.iter().map(|&i| &h.literals[i]).collect();
            let settings = RefineSettings { max_stall: cli.max_stall, min_precision: prec, ..Default::default() };
            let refined = initial_digits(&lits).and_then(|p0| digit_refine(&sys, &y0, p0, &settings));
            match refined {
                Ok(r) => {
                    let history: Vec<Value> = r.state.history.iter().map(|(p, a)| json!([p, a.map(|v| format!("{v:.6e}"))])).collect();
                    report["refinement"] = json!({
                        "certified": r.certified,
                        "rounds": r.rounds,
                        "digits": r.state.p,
                        "point": strings(&r.state.point, cli.digits.max(r.state.p as usize * 3 / 10 + 5)),
                        "history": history,
                        "reason": r.reason,
                    });
                    if let Some(rc) = &r.certificate {
                        if r.certified {
                            report["certificate"] = certificate_json(rc);
                            report["status"] = json!("certified");
                            return (report, Outcome::Certified);
                        }
                    }
                }
                Err(e) => report["refinement"] = json!({"error": e.to_string()}),
            }
        }
    }
    report["status"] = json!("not_certified");
    (report, Outcome::NotCertified)
}

fn closed_form(cli: &Cli, w1: &str, w2: &str, vol: &str) -> Result<u8> {
    let parse = |s: &str| -> Result<Rational> { parse_rational(s).map_err(|e| InvalidInput(format!("{s}: {e}")).into()) };
    let (y1, y2) = one_cell_heights(&parse(w1)?, &parse(w2)?, &parse(vol)?, cli.precision.max(64))?;
    let out = json!({ "heights": [decimal_string(&y1, cli.digits), decimal_string(&y2, cli.digits)] });
    write_output(cli.output.as_deref(), &out)?;
    Ok(exit::OK)
}

fn tentplot(cli: &Cli, x: &PointConfig, h: &Heights, out_dir: &std::path::Path) -> Result<u8> {
    let hv = HeightVector::new(h.values.clone());
    let sub = induced_subdivision(x, &hv, cli.tol_flat)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let hs = |i: usize| decimal_string(&h.values[i], cli.digits);
    let coord = |i: usize| -> Vec<String> { x.point(i).iter().map(|r| r.to_string()).collect() };
    let (doc, csv) = if x.dim() == 1 {
        let mut verts = sub.vertices();
        verts.sort_by(|&a, &b| x.point(a)[0].cmp(&x.point(b)[0]));
        let mut csv = String::from("index,x,height\n");
        for &v in &verts {
            csv += &format!("{v},{},{}\n", rational_to_f64(&x.point(v)[0]), h.values[v].to_f64());
        }
        let pts: Vec<Value> = verts.iter().map(|&v| json!({"index": v, "x": coord(v)[0], "height": hs(v)})).collect();
        (json!({"dimension": 1, "breakpoints": pts}), csv)
    } else {
        let tri = sub.vertex_triangulation(x)?;
        let mut csv = String::from("triangle,index,x,y,height\n");
        let mut tris = Vec::new();
        for (k, cell) in tri.cells().iter().enumerate() {
            for &v in cell {
                let p = x.point(v);
                csv += &format!("{k},{v},{},{},{}\n", rational_to_f64(&p[0]), rational_to_f64(&p[1]), h.values[v].to_f64());
            }
            tris.push(json!({
                "vertices": cell,
                "points": cell.iter().map(|&v| coord(v)).collect::<Vec<_>>(),
                "heights": cell.iter().map(|&v| hs(v)).collect::<Vec<_>>(),
            }));
        }
        (json!({"dimension": 2, "triangles": tris}), csv)
    };
    fs::write(out_dir.join("tent.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    fs::write(out_dir.join("tent.csv"), csv)?;
    write_output(cli.output.as_deref(), &json!({"files": ["tent.json", "tent.csv"], "cells": sub.cell_vertex_sets()}))?;
    Ok(exit::OK)
}
