//! Subcommand implementations. Each builds a table, writes it and its
//! sidecar, and reports how many rows failed their convergence check.

use crate::cli::{Basis, Command, Grid, Numerics, Outputs, Problem, Profile};
use crate::config::Numeric;
use crate::output::{emit, timestamp, Cell, Point, Sidecar, Table};
use crate::range::{parse_bandwidths, parse_distances, parse_list};
use crate::sweep::{evaluate, evaluate_points, grid, pool};
use crate::UsageError;
use anyhow::Context;
use qfi_bandlimit::fisher::{qfi_localization_checked, qfi_pair_checked};
use qfi_bandlimit::genspec::{
    qfi_general, solve_genspec, GenspecBasis, GenspecOptions, SpectrumProfile,
};
use qfi_bandlimit::pswf::default_truncation;
use qfi_bandlimit::spdo_loc::{solve_loc, Parity};
use qfi_bandlimit::spdo_pair::solve_pair;
use qfi_bandlimit::zernike_cfi::{cfi, mode_probabilities, ZernikeMode};
use qfi_bandlimit::{FisherResult, PswfBasis, PswfMethod, SolveOptions};
use serde_json::{json, Value};

/// Rows whose trace differs from one by more than this are flagged.
pub const TRACE_TOLERANCE: f64 = 1e-8;
/// Looser trace tolerance for the general-spectrum eigenvalue table.
pub const GENSPEC_TRACE_TOLERANCE: f64 = 1e-6;

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: usize,
    pub unconverged: usize,
}

struct Report {
    command: &'static str,
    table: Table,
    unconverged: Vec<Point>,
    defaults: Value,
    effective: Value,
}

impl Numerics {
    pub fn resolve(&self) -> Result<Numeric, UsageError> {
        let base = match &self.config {
            Some(p) => Numeric::load(p)?,
            None => Numeric::default(),
        };
        let n = base.overlay(self.k, self.n, self.n_q, self.cutoff);
        if !(n.cutoff > 0.0 && n.cutoff < 1.0) {
            return Err(UsageError::field(
                "cutoff",
                format!("must lie in (0, 1), got {}", n.cutoff),
            ));
        }
        if n.n_q < 2 {
            return Err(UsageError::field(
                "N_q",
                format!("need at least 2 nodes, got {}", n.n_q),
            ));
        }
        if n.n.is_some_and(|n| n < 4) {
            return Err(UsageError::field(
                "N",
                "truncation order must be at least 4",
            ));
        }
        Ok(n)
    }
}

fn solve_options(n: &Numeric) -> SolveOptions {
    SolveOptions {
        k_samples: n.k,
        n_trunc: n.n,
        n_quad: n.n_q,
        cutoff: n.cutoff,
        ..SolveOptions::default()
    }
}

fn numeric_defaults() -> Value {
    serde_json::to_value(Numeric::default()).expect("plain struct")
}

impl Grid {
    fn points(&self) -> Result<Vec<(f64, f64)>, UsageError> {
        Ok(grid(
            &parse_bandwidths(&self.bandwidths)?,
            &parse_distances(&self.distances)?,
        ))
    }
}

fn unconverged_point(label: impl Into<String>, b: f64, l: f64) -> Point {
    Point {
        label: label.into(),
        bandwidth: b,
        l,
    }
}

fn fisher_row(problem: &str, r: &FisherResult) -> Vec<Cell> {
    vec![
        problem.into(),
        r.bandwidth.into(),
        r.distance.into(),
        r.value.into(),
        (1.0 / r.value.sqrt()).into(),
        r.diagonal_sum.into(),
        r.cross_sum.into(),
        r.retained.into(),
        r.convergence.cutoff_shift.into(),
        r.convergence.grid_shift.into(),
        r.convergence.converged.into(),
    ]
}

const FISHER_HEADER: [&str; 11] = [
    "problem",
    "B",
    "l",
    "fisher_information",
    "min_sd_per_photon",
    "diagonal_sum",
    "cross_sum",
    "retained",
    "cutoff_shift",
    "grid_shift",
    "converged",
];

fn run_qfi(problem: Problem, grid: &Grid, numerics: &Numerics) -> anyhow::Result<Report> {
    let num = numerics.resolve()?;
    let points = grid.points()?;
    let opts = solve_options(&num);
    let results = evaluate(&pool()?, &points, |b, l| {
        Ok(match problem {
            Problem::Loc => qfi_localization_checked(b, l, &opts)?,
            Problem::Pair => qfi_pair_checked(b, l, &opts)?,
        })
    })?;
    let mut table = Table::new(FISHER_HEADER.to_vec());
    let mut unconverged = Vec::new();
    for r in &results {
        table.rows.push(fisher_row(problem.name(), r));
        if !r.convergence.converged {
            unconverged.push(unconverged_point(problem.name(), r.bandwidth, r.distance));
        }
    }
    Ok(Report {
        command: "qfi",
        table,
        unconverged,
        defaults: numeric_defaults(),
        effective: json!({ "problem": problem.name(), "numeric": num }),
    })
}

struct EigRow {
    subspace: &'static str,
    eigenvalue: f64,
    nodes: Vec<f64>,
    coeff: Vec<f64>,
}

fn eigen_rows(
    problem: Problem,
    b: f64,
    l: f64,
    opts: &SolveOptions,
) -> anyhow::Result<(Vec<EigRow>, f64)> {
    let mut rows = Vec::new();
    let trace = match problem {
        Problem::Loc => {
            let sys = solve_loc(b, l, opts)?;
            for (s, p) in sys.states.iter().zip(&sys.parities) {
                rows.push(EigRow {
                    subspace: if *p == Parity::Even { "even" } else { "odd" },
                    eigenvalue: s.eigenvalue,
                    nodes: sys.rule.nodes.clone(),
                    coeff: s.coeff.clone(),
                });
            }
            sys.trace()
        }
        Problem::Pair => {
            let (plus, minus) = solve_pair(b, l, opts)?;
            for (name, sys) in [("plus", &plus), ("minus", &minus)] {
                for s in &sys.states {
                    rows.push(EigRow {
                        subspace: name,
                        eigenvalue: s.eigenvalue,
                        nodes: sys.rule.nodes.clone(),
                        coeff: s.coeff.clone(),
                    });
                }
            }
            rows.sort_by(|a, b| b.eigenvalue.total_cmp(&a.eigenvalue));
            plus.trace() + minus.trace()
        }
    };
    Ok((rows, trace))
}

fn run_eig(
    problem: Problem,
    grid: &Grid,
    dump: bool,
    count: usize,
    numerics: &Numerics,
) -> anyhow::Result<Report> {
    let num = numerics.resolve()?;
    let points = grid.points()?;
    let opts = solve_options(&num);
    let results = evaluate(&pool()?, &points, |b, l| eigen_rows(problem, b, l, &opts))?;
    let mut table = if dump {
        Table::new(vec![
            "problem",
            "B",
            "l",
            "rank",
            "subspace",
            "eigenvalue",
            "f",
            "d",
            "converged",
        ])
    } else {
        Table::new(vec![
            "problem",
            "B",
            "l",
            "rank",
            "subspace",
            "eigenvalue",
            "trace",
            "converged",
        ])
    };
    let mut unconverged = Vec::new();
    for (&(b, l), (rows, trace)) in points.iter().zip(&results) {
        let ok = (trace - 1.0).abs() <= TRACE_TOLERANCE;
        if !ok {
            unconverged.push(unconverged_point(problem.name(), b, l));
        }
        let head = |rank: usize, r: &EigRow| -> Vec<Cell> {
            vec![
                problem.name().into(),
                b.into(),
                l.into(),
                rank.into(),
                r.subspace.into(),
                r.eigenvalue.into(),
            ]
        };
        for (rank, r) in rows.iter().enumerate() {
            if dump {
                if rank >= count {
                    break;
                }
                for (f, d) in r.nodes.iter().zip(&r.coeff) {
                    let mut row = head(rank, r);
                    row.extend([Cell::from(*f), Cell::from(*d), Cell::from(ok)]);
                    table.rows.push(row);
                }
            } else {
                let mut row = head(rank, r);
                row.extend([Cell::from(*trace), Cell::from(ok)]);
                table.rows.push(row);
            }
        }
    }
    Ok(Report {
        command: "eig",
        table,
        unconverged,
        defaults: numeric_defaults(),
        effective: json!({ "problem": problem.name(), "numeric": num, "dump_eigenfunctions": dump, "count": count }),
    })
}

/// Parses `z2,z3`, `2,3` or `all`.
pub fn parse_modes(text: &str) -> Result<Vec<ZernikeMode>, UsageError> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(ZernikeMode::ALL.to_vec());
    }
    let mut modes = Vec::new();
    for item in text.split(',') {
        let t = item.trim();
        let digits = t.strip_prefix(['z', 'Z']).unwrap_or(t);
        let mode = digits
            .parse::<usize>()
            .ok()
            .and_then(|n| ZernikeMode::from_noll(n).ok())
            .ok_or_else(|| {
                UsageError::field("modes", format!("`{t}` is not one of z1, z2, z3, z4"))
            })?;
        modes.push(mode);
    }
    modes.sort();
    modes.dedup();
    Ok(modes)
}

fn run_cfi(modes: &str, bucket: bool, phi: f64, grid: &Grid) -> anyhow::Result<Report> {
    let modes = parse_modes(modes)?;
    if !phi.is_finite() {
        return Err(UsageError::field("phi", "must be finite").into());
    }
    let points = grid.points()?;
    let results = evaluate(&pool()?, &points, |b, l| {
        let set = mode_probabilities(b, l, phi)?;
        let r = cfi(&set, &modes, bucket)?;
        let captured: f64 = modes.iter().map(|m| set.probs[*m as usize]).sum();
        Ok((r, captured))
    })?;
    let label: Vec<String> = modes.iter().map(|m| format!("z{}", m.noll())).collect();
    let label = label.join("+");
    let mut table = Table::new(vec![
        "B",
        "l",
        "phi",
        "modes",
        "bucket",
        "fisher_information",
        "mode_term",
        "bucket_term",
        "captured_probability",
        "converged",
    ]);
    let mut unconverged = Vec::new();
    for (r, captured) in &results {
        table.rows.push(vec![
            r.bandwidth.into(),
            r.distance.into(),
            phi.into(),
            label.as_str().into(),
            bucket.into(),
            r.value.into(),
            r.diagonal_sum.into(),
            r.cross_sum.into(),
            (*captured).into(),
            r.convergence.converged.into(),
        ]);
        if !r.convergence.converged {
            unconverged.push(unconverged_point("cfi", r.bandwidth, r.distance));
        }
    }
    Ok(Report {
        command: "cfi",
        table,
        unconverged,
        defaults: json!({ "modes": "z2+z3", "bucket": false, "phi": 0.0 }),
        effective: json!({ "modes": label, "bucket": bucket, "phi": phi }),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_genspec(
    profile: Profile,
    spectrum_file: Option<&std::path::Path>,
    widths: Option<&str>,
    distances: &str,
    m_order: usize,
    basis: Basis,
    eigs: bool,
    numerics: &Numerics,
) -> anyhow::Result<Report> {
    let num = numerics.resolve()?;
    let distances = parse_distances(distances)?;
    let (profiles, name): (Vec<SpectrumProfile>, &str) = match spectrum_file {
        Some(path) => {
            if widths.is_some() {
                return Err(UsageError::field("B", "not used with --spectrum-file").into());
            }
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let p = SpectrumProfile::tabulated_from_csv(&text)
                .map_err(|e| UsageError::field("spectrum-file", e.to_string()))?;
            (vec![p], "tabulated")
        }
        None => {
            let w = widths.ok_or_else(|| {
                UsageError::field("B", "required unless --spectrum-file is given")
            })?;
            let ws = parse_bandwidths(w)?;
            let mut ps = Vec::new();
            for w in ws {
                let p = match profile {
                    Profile::Flat => SpectrumProfile::flat_top(w),
                    Profile::Gaussian => SpectrumProfile::gaussian(w),
                    Profile::Lorentzian => SpectrumProfile::lorentzian(w),
                };
                ps.push(p.map_err(|e| UsageError::field("B", e.to_string()))?);
            }
            let name = match profile {
                Profile::Flat => "flat",
                Profile::Gaussian => "gaussian",
                Profile::Lorentzian => "lorentzian",
            };
            (ps, name)
        }
    };
    let opts = GenspecOptions {
        m_order,
        basis: match basis {
            Basis::Angular => GenspecBasis::AngularSine,
            Basis::Fourier => GenspecBasis::FourierQuarterWeight,
        },
        n_quad: num.n_q,
        cutoff: num.cutoff,
    };
    let widths: Vec<f64> = profiles.iter().map(SpectrumProfile::width).collect();
    let points: Vec<(usize, f64)> = grid(&widths, &distances)
        .into_iter()
        .map(|(w, l)| {
            (
                widths
                    .iter()
                    .position(|x| *x == w)
                    .expect("width from list"),
                l,
            )
        })
        .collect();
    let describe = |&(i, l): &(usize, f64)| format!("at {name} width {}, l = {l}", widths[i]);
    let mut unconverged = Vec::new();
    let mut table;
    if eigs {
        let results = evaluate_points(&pool()?, &points, describe, |&(i, l)| {
            Ok(solve_genspec(&profiles[i], l, opts.m_order, opts.basis)?)
        })?;
        table = Table::new(vec![
            "profile",
            "width",
            "l",
            "parity",
            "index",
            "eigenvalue",
            "trace",
            "converged",
        ]);
        for (&(i, l), (even, odd)) in points.iter().zip(&results) {
            let width = widths[i];
            let trace: f64 = even.eigs.iter().chain(&odd.eigs).sum();
            let lmax = even
                .eigs
                .iter()
                .chain(&odd.eigs)
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let ok = (trace - 1.0).abs() <= GENSPEC_TRACE_TOLERANCE;
            if !ok {
                unconverged.push(unconverged_point(name, width, l));
            }
            for (parity, sys) in [("even", even), ("odd", odd)] {
                for (k, &lam) in sys.eigs.iter().enumerate() {
                    if lam >= opts.cutoff * lmax {
                        table.rows.push(vec![
                            name.into(),
                            width.into(),
                            l.into(),
                            parity.into(),
                            k.into(),
                            lam.into(),
                            trace.into(),
                            ok.into(),
                        ]);
                    }
                }
            }
        }
    } else {
        let results = evaluate_points(&pool()?, &points, describe, |&(i, l)| {
            Ok(qfi_general(&profiles[i], l, &opts)?)
        })?;
        table = Table::new(FISHER_HEADER.to_vec());
        table.header[0] = "profile";
        table.header[1] = "width";
        for r in &results {
            table.rows.push(fisher_row(name, r));
            if !r.convergence.converged {
                unconverged.push(unconverged_point(name, r.bandwidth, r.distance));
            }
        }
    }
    let d = GenspecOptions::default();
    Ok(Report {
        command: "genspec",
        table,
        unconverged,
        defaults: json!({ "M": d.m_order, "basis": "angular", "N_q": d.n_quad, "cutoff": d.cutoff }),
        effective: json!({
            "profile": name,
            "M": opts.m_order,
            "basis": if opts.basis == GenspecBasis::AngularSine { "angular" } else { "fourier" },
            "N_q": opts.n_quad,
            "cutoff": opts.cutoff,
        }),
    })
}

fn run_pswf_dump(c_values: &str, points: usize, numerics: &Numerics) -> anyhow::Result<Report> {
    let num = numerics.resolve()?;
    let cs = parse_list("C", c_values)?;
    if let Some(bad) = cs.iter().find(|c| !(**c > 0.0)) {
        return Err(UsageError::field("C", format!("{bad} is not positive")).into());
    }
    if points < 2 {
        return Err(UsageError::field("points", "need at least 2").into());
    }
    let bases = evaluate_points(
        &pool()?,
        &cs,
        |c| format!("at C = {c}"),
        |&c| {
            let n = num.n.unwrap_or_else(|| default_truncation(c));
            Ok(PswfBasis::build(
                c,
                n,
                num.k.max(64 * n),
                PswfMethod::Legendre,
            )?)
        },
    )?;
    let mut table = Table::new(vec!["C", "n", "eigenvalue", "x", "psi"]);
    for basis in &bases {
        let xs: Vec<f64> = (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect();
        let vals: Vec<Vec<f64>> = xs.iter().map(|&x| basis.eval_unit(x)).collect();
        for (n, lam) in basis.conc_eigs.iter().enumerate() {
            for (x, v) in xs.iter().zip(&vals) {
                table.rows.push(vec![
                    basis.c.into(),
                    n.into(),
                    (*lam).into(),
                    (*x).into(),
                    v[n].into(),
                ]);
            }
        }
    }
    Ok(Report {
        command: "pswf-dump",
        table,
        unconverged: Vec::new(),
        defaults: numeric_defaults(),
        effective: json!({ "numeric": num, "points": points }),
    })
}

fn write_report(
    report: Report,
    outputs: &Outputs,
    arguments: &[String],
) -> anyhow::Result<Outcome> {
    let csv = report.table.to_csv();
    emit(outputs.out.as_deref(), &csv).context("writing CSV")?;
    let meta = outputs
        .meta
        .clone()
        .or_else(|| outputs.out.as_ref().map(|p| p.with_extension("json")));
    let outcome = Outcome {
        rows: report.table.rows.len(),
        unconverged: report.unconverged.len(),
    };
    if let Some(path) = meta {
        let sidecar = Sidecar {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: report.command.to_string(),
            arguments: arguments.to_vec(),
            defaults: report.defaults,
            effective: report.effective,
            rows: outcome.rows,
            all_converged: report.unconverged.is_empty(),
            unconverged: report.unconverged,
            generated_at: timestamp(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(outcome)
}

/// Runs one subcommand; `arguments` are echoed into the sidecar.
pub fn run(command: &Command, arguments: &[String]) -> anyhow::Result<Outcome> {
    let (report, outputs) = match command {
        Command::Qfi {
            problem,
            grid,
            numerics,
            outputs,
        } => (run_qfi(*problem, grid, numerics)?, outputs),
        Command::Eig {
            problem,
            grid,
            dump_eigenfunctions,
            count,
            numerics,
            outputs,
        } => (
            run_eig(*problem, grid, *dump_eigenfunctions, *count, numerics)?,
            outputs,
        ),
        Command::Cfi {
            modes,
            bucket,
            phi,
            grid,
            outputs,
        } => (run_cfi(modes, *bucket, *phi, grid)?, outputs),
        Command::Genspec {
            profile,
            spectrum_file,
            widths,
            distances,
            m_order,
            basis,
            eigs,
            numerics,
            outputs,
        } => (
            run_genspec(
                *profile,
                spectrum_file.as_deref(),
                widths.as_deref(),
                distances,
                *m_order,
                *basis,
                *eigs,
                numerics,
            )?,
            outputs,
        ),
        Command::PswfDump {
            c_values,
            points,
            numerics,
            outputs,
        } => (run_pswf_dump(c_values, *points, numerics)?, outputs),
    };
    write_report(report, outputs, arguments)
}
