//! Experiment dispatch: turns a validated config into module calls and
//! writes the resulting tables, plots, and manifest into an output
//! directory.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;

use crate::annulus::{fixed_points_2d, FixedPointKind, Stability};
use crate::config::{
    box_center, build_flow_map, build_generating_map, ExperimentKind, ResolvedConfig,
};
use crate::critical::{enumerate_critical, ergodic_density_curve, CensusOptions};
use crate::density::{
    coarea_density, cross_validate, kac_rice_schedule, CoareaSupport, CrossValidateConfig,
    TraceOptions,
};
use crate::error::QsympError;
use crate::exec::{map_indexed, stream_rng, tree_fold};
use crate::field::{ergodicity_check, spectral_h_minus1};
use crate::flow::{integrate_flow, regularity_report, DEFAULT_FLOW_STEP, DEFAULT_FLOW_TOLERANCE};
use crate::output::{ensure_dir, svg_plot, Cell, Curve, Table};

/// What a completed run hands back for the manifest.
#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl RunOutcome {
    fn record(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }
}

/// Execute `kind` with the given config into `out_dir`.
pub fn run(
    kind: ExperimentKind,
    resolved: &ResolvedConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunOutcome, QsympError> {
    if resolved.raw.experiment != kind {
        return Err(QsympError::Config(format!(
            "config declares experiment {:?} but the {} command was invoked",
            resolved.raw.experiment.name(),
            kind.name()
        )));
    }
    ensure_dir(out_dir)?;
    match kind {
        ExperimentKind::SpectralCheck => run_spectral_check(resolved, out_dir),
        ExperimentKind::FixedPoints => run_fixed_points(resolved, out_dir),
        ExperimentKind::ErgodicDensity => run_ergodic_density(resolved, out_dir),
        ExperimentKind::KacRice => run_kac_rice(resolved, out_dir, seed),
        ExperimentKind::Coarea => run_coarea(resolved, out_dir),
        ExperimentKind::Flow => run_flow(resolved, out_dir),
        ExperimentKind::Pb2d => run_pb2d(resolved, out_dir),
        ExperimentKind::Xval => run_xval(resolved, out_dir, seed),
        ExperimentKind::MeanDisplacement => run_mean_displacement(resolved, out_dir, seed),
    }
}

fn census_options() -> CensusOptions {
    CensusOptions::default()
}

fn run_spectral_check(resolved: &ResolvedConfig, out_dir: &Path) -> Result<RunOutcome, QsympError> {
    let field = resolved.field()?;
    let a = resolved.matrix()?;
    let radius = resolved.raw.scan_radius.unwrap_or(50);
    let mut outcome = RunOutcome::default();

    let mut modes = Table::new(&["mode", "pulled_norm", "amplitude"]);
    for mode in field.modes() {
        let pulled = crate::field::pulled_frequency(a, &mode.m);
        modes.push(vec![
            format!(
                "[{}]",
                mode.m
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            )
            .into(),
            pulled.norm().into(),
            mode.amplitude().into(),
        ]);
    }
    let modes_path = out_dir.join("modes.csv");
    modes.write(&modes_path)?;
    outcome.record(modes_path);

    let h = spectral_h_minus1(field, a)?;
    let report = ergodicity_check(a, radius)?;
    let mut summary = Table::new(&[
        "h_minus1_norm_sq",
        "scan_radius",
        "min_nonzero_pullback",
        "zero_modes",
        "diophantine_k",
    ]);
    summary.push(vec![
        h.into(),
        Cell::Int(radius),
        report.min_nonzero.into(),
        report.zero_modes.len().into(),
        report.diophantine_k.into(),
    ]);
    let summary_path = out_dir.join("spectral.csv");
    summary.write(&summary_path)?;
    outcome.record(summary_path);

    for m in &report.zero_modes {
        outcome.warnings.push(format!(
            "resonance: integer vector {m:?} pulls back to zero"
        ));
    }
    Ok(outcome)
}

fn census_table(census: &crate::critical::Census) -> Table {
    let n = census.center.len();
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend(
        ["value", "gradient_norm", "index", "degenerate"]
            .iter()
            .map(|s| s.to_string()),
    );
    header.extend((0..n).map(|i| format!("eig{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header_refs);
    for point in &census.points {
        let mut row: Vec<Cell> = point.location.iter().map(|&x| Cell::Float(x)).collect();
        row.push(point.value.into());
        row.push(point.gradient_norm.into());
        row.push(point.index.into());
        row.push(Cell::Int(point.degenerate as i64));
        row.extend(point.eigenvalues.iter().map(|&e| Cell::Float(e)));
        table.push(row);
    }
    table
}

fn run_fixed_points(resolved: &ResolvedConfig, out_dir: &Path) -> Result<RunOutcome, QsympError> {
    let a = resolved.matrix()?;
    let half_width = resolved
        .raw
        .box_schedule
        .as_ref()
        .and_then(|s| s.last().copied())
        .unwrap_or(1.0);
    let n = a.ncols();
    let center = box_center(resolved, n)?;
    let opts = census_options();
    // With map_dim declared the census goes through the generated map itself
    // (Newton on Φ − id); otherwise it runs on the potential's gradient.
    let census = if resolved.raw.map_dim.is_some() {
        let map = build_generating_map(resolved)?;
        crate::critical::fixed_point_census(&map, &center, half_width, &opts)?
    } else {
        let field = resolved.field()?;
        let base = resolved.base_or_zero()?;
        enumerate_critical(field, a, &base, &center, half_width, &opts)?
    };

    let mut outcome = RunOutcome {
        warnings: census.warnings.clone(),
        outputs: Vec::new(),
    };
    let table = census_table(&census);
    let path = out_dir.join("census.csv");
    table.write(&path)?;
    outcome.record(path);
    Ok(outcome)
}

fn run_ergodic_density(
    resolved: &ResolvedConfig,
    out_dir: &Path,
) -> Result<RunOutcome, QsympError> {
    let field = resolved.field()?;
    let a = resolved.matrix()?;
    let base = resolved.base_or_zero()?;
    let schedule = resolved
        .raw
        .box_schedule
        .clone()
        .ok_or_else(|| QsympError::Config("ergodic-density needs box_schedule".into()))?;
    let class = resolved.index_class();
    let opts = census_options();
    let (curve, census) = ergodic_density_curve(field, a, &base, &schedule, class, &opts)?;

    let mut outcome = RunOutcome {
        warnings: census.warnings.clone(),
        outputs: Vec::new(),
    };
    let mut table = Table::new(&["half_width", "count", "density"]);
    for point in &curve {
        table.push(vec![
            point.half_width.into(),
            point.count.into(),
            point.density.into(),
        ]);
    }
    let path = out_dir.join("density_curve.csv");
    table.write(&path)?;
    outcome.record(path);

    let svg = svg_plot(
        &[Curve {
            label: "density".into(),
            points: curve.iter().map(|p| (p.half_width, p.density)).collect(),
            markers: true,
        }],
        "critical-point density vs box half-width",
    );
    let svg_path = out_dir.join("density_curve.svg");
    std::fs::write(&svg_path, svg)?;
    outcome.record(svg_path);
    Ok(outcome)
}

fn run_kac_rice(
    resolved: &ResolvedConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunOutcome, QsympError> {
    let field = resolved.field()?;
    let a = resolved.matrix()?;
    let epsilons = resolved
        .raw
        .epsilon_schedule
        .clone()
        .ok_or_else(|| QsympError::Config("kac-rice needs epsilon_schedule".into()))?;
    let samples = resolved
        .raw
        .samples
        .ok_or_else(|| QsympError::Config("kac-rice needs samples".into()))?;
    let class = resolved.index_class();
    let estimates = kac_rice_schedule(
        field,
        a,
        &epsilons,
        samples,
        seed,
        class,
        CensusOptions::default().degeneracy_tol,
    )?;

    let mut outcome = RunOutcome::default();
    let mut table = Table::new(&["epsilon", "estimate", "stderr", "hits", "samples"]);
    for est in &estimates {
        if let Some(w) = &est.warning {
            outcome.warnings.push(w.clone());
        }
        table.push(vec![
            est.epsilon.into(),
            est.value.into(),
            est.stderr.into(),
            Cell::Int(est.hits as i64),
            Cell::Int(est.samples as i64),
        ]);
    }
    let path = out_dir.join("kac_rice.csv");
    table.write(&path)?;
    outcome.record(path);
    Ok(outcome)
}

fn run_coarea(resolved: &ResolvedConfig, out_dir: &Path) -> Result<RunOutcome, QsympError> {
    let field = resolved.field()?;
    let a = resolved.matrix()?;
    let class = resolved.index_class();
    let trace = TraceOptions::default();
    let result = coarea_density(field, a, class, &trace, &census_options())?;

    let mut outcome = RunOutcome::default();
    let mut table = Table::new(&["density", "support", "components", "arclength"]);
    match &result.support {
        CoareaSupport::Points(count) => {
            table.push(vec![
                result.value.into(),
                "points".into(),
                (*count).into(),
                0.0.into(),
            ]);
        }
        CoareaSupport::Curves {
            components,
            arclength,
        } => {
            table.push(vec![
                result.value.into(),
                "curves".into(),
                (*components).into(),
                (*arclength).into(),
            ]);
        }
    }
    let path = out_dir.join("coarea.csv");
    table.write(&path)?;
    outcome.record(path);
    Ok(outcome)
}

fn run_flow(resolved: &ResolvedConfig, out_dir: &Path) -> Result<RunOutcome, QsympError> {
    let field = resolved.time_field()?;
    let a = resolved.matrix()?;
    let base = resolved.base_or_zero()?;
    let step = resolved.raw.flow_step.unwrap_or(DEFAULT_FLOW_STEP);
    let tol = resolved
        .raw
        .flow_tolerance
        .unwrap_or(DEFAULT_FLOW_TOLERANCE);
    let result = integrate_flow(field, a, base.coords(), 1.0, step, tol)?;

    let mut outcome = RunOutcome::default();
    let fine_step = 1.0 / ((result.path.len() - 1) as f64);
    let n_torus = a.nrows();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n_torus).map(|i| format!("theta{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header_refs);
    for (j, theta) in result.path.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(j as f64 * fine_step).into()];
        row.extend(theta.iter().map(|&x| Cell::Float(x)));
        table.push(row);
    }
    let path = out_dir.join("trajectory.csv");
    table.write(&path)?;
    outcome.record(path);

    let n = a.ncols();
    let mut summary = Table::new(&["quantity", "value"]);
    for (i, z) in result.zeta1.iter().enumerate() {
        summary.push(vec![format!("zeta1_{i}").into(), (*z).into()]);
    }
    for r in 0..n {
        for c in 0..n {
            summary.push(vec![
                format!("monodromy_{r}{c}").into(),
                result.monodromy[(r, c)].into(),
            ]);
        }
    }
    summary.push(vec!["cert_error".into(), result.cert_error.into()]);
    let summary_path = out_dir.join("flow_summary.csv");
    summary.write(&summary_path)?;
    outcome.record(summary_path);

    // Regularity gate: warn (never fail) when the Fourier bounds put the
    // time-one map outside the twist regime.
    if let Some(d) = resolved.raw.map_dim {
        let map = build_flow_map(resolved)?;
        let probes: Vec<DVector<f64>> = (0..8)
            .map(|i| {
                let mut rng = stream_rng(0xF10F, i);
                DVector::from_fn(2 * d, |_, _| rng.gen_range(-1.0..1.0))
            })
            .collect();
        let report = regularity_report(&map, &probes)?;
        if !report.twist_ok {
            outcome.warnings.push(format!(
                "flow regularity: e^ell = {:.4} exceeds the twist gate 1.9",
                report.ell.exp()
            ));
        }
        if !report.probes_consistent {
            outcome.warnings.push(
                "flow regularity: probe displacement/expansion exceeded the analytic envelope"
                    .into(),
            );
        }
    }
    Ok(outcome)
}

fn run_pb2d(resolved: &ResolvedConfig, out_dir: &Path) -> Result<RunOutcome, QsympError> {
    let profile = resolved.profile()?;
    let [q_lo, q_hi] = resolved
        .raw
        .q_range
        .ok_or_else(|| QsympError::Config("pb2d needs q_range".into()))?;
    let census = fixed_points_2d(profile, q_lo, q_hi)?;

    let mut outcome = RunOutcome::default();
    let mut table = Table::new(&[
        "q",
        "p",
        "type",
        "trace",
        "eig_re_1",
        "eig_im_1",
        "eig_re_2",
        "eig_im_2",
        "psi_second",
        "degenerate",
        "residual",
    ]);
    for fp in &census.points {
        let kind = match fp.kind {
            FixedPointKind::Plus => "plus",
            FixedPointKind::Minus => "minus",
            FixedPointKind::Elliptic => "elliptic",
        };
        let (re1, im1, re2, im2) = match fp.stability {
            Stability::Real { lambda1, lambda2 } => (lambda1, 0.0, lambda2, 0.0),
            Stability::Complex { re, im } => (re, -im, re, im),
        };
        table.push(vec![
            fp.q.into(),
            fp.p.into(),
            kind.into(),
            fp.trace.into(),
            re1.into(),
            im1.into(),
            re2.into(),
            im2.into(),
            fp.psi_second.into(),
            Cell::Int(fp.degenerate as i64),
            fp.residual.into(),
        ]);
    }
    let path = out_dir.join("annulus_fixed_points.csv");
    table.write(&path)?;
    outcome.record(path);

    let mut summary = Table::new(&[
        "lambda_plus",
        "lambda_minus",
        "elliptic",
        "degenerate",
        "q_lo",
        "q_hi",
    ]);
    summary.push(vec![
        census.lambda_plus.into(),
        census.lambda_minus.into(),
        census.elliptic_count.into(),
        census.degenerate_count.into(),
        census.q_lo.into(),
        census.q_hi.into(),
    ]);
    let summary_path = out_dir.join("annulus_summary.csv");
    summary.write(&summary_path)?;
    outcome.record(summary_path);

    if census.degenerate_count > 0 {
        outcome.warnings.push(format!(
            "annulus census: {} degenerate critical points flagged",
            census.degenerate_count
        ));
    }

    // ψ̂ over the first stretch of the range, with fixed-point markers.
    let plot_hi = q_hi.min(q_lo + 10.0);
    let samples = 800;
    let psi_curve: Vec<(f64, f64)> = (0..=samples)
        .map(|i| {
            let q = q_lo + (plot_hi - q_lo) * i as f64 / samples as f64;
            (q, profile.psi_twist(q))
        })
        .collect();
    let marker_points: Vec<(f64, f64)> = census
        .points
        .iter()
        .filter(|fp| fp.q < plot_hi)
        .map(|fp| (fp.q, profile.psi_twist(fp.q)))
        .collect();
    let svg = svg_plot(
        &[
            Curve {
                label: "psi_twist".into(),
                points: psi_curve,
                markers: false,
            },
            Curve {
                label: "fixed points".into(),
                points: marker_points,
                markers: true,
            },
        ],
        "fiber diagonal and fixed points",
    );
    let svg_path = out_dir.join("psi_profile.svg");
    std::fs::write(&svg_path, svg)?;
    outcome.record(svg_path);
    Ok(outcome)
}

fn run_xval(
    resolved: &ResolvedConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunOutcome, QsympError> {
    let field = resolved.field()?;
    let a = resolved.matrix()?;
    let base = resolved.base_or_zero()?;
    let cfg = CrossValidateConfig {
        box_schedule: resolved
            .raw
            .box_schedule
            .clone()
            .ok_or_else(|| QsympError::Config("xval needs box_schedule".into()))?,
        epsilon_schedule: resolved
            .raw
            .epsilon_schedule
            .clone()
            .ok_or_else(|| QsympError::Config("xval needs epsilon_schedule".into()))?,
        samples: resolved
            .raw
            .samples
            .ok_or_else(|| QsympError::Config("xval needs samples".into()))?,
        seed,
        class: resolved.index_class(),
        census: census_options(),
        trace: TraceOptions::default(),
    };
    let report = cross_validate(field, a, &base, &cfg)?;

    let mut outcome = RunOutcome {
        warnings: report.warnings.clone(),
        outputs: Vec::new(),
    };

    let mut curve_table = Table::new(&["half_width", "count", "density"]);
    for point in &report.ergodic {
        curve_table.push(vec![
            point.half_width.into(),
            point.count.into(),
            point.density.into(),
        ]);
    }
    let curve_path = out_dir.join("density_curve.csv");
    curve_table.write(&curve_path)?;
    outcome.record(curve_path);

    let mut kr_table = Table::new(&["epsilon", "estimate", "stderr", "hits", "samples"]);
    for est in &report.kac_rice {
        kr_table.push(vec![
            est.epsilon.into(),
            est.value.into(),
            est.stderr.into(),
            Cell::Int(est.hits as i64),
            Cell::Int(est.samples as i64),
        ]);
    }
    let kr_path = out_dir.join("kac_rice.csv");
    kr_table.write(&kr_path)?;
    outcome.record(kr_path);

    let mut table = Table::new(&["ergodic", "kac_rice", "coarea", "spread"]);
    table.push(vec![
        report.representative[0].into(),
        report.representative[1].into(),
        report.representative[2].into(),
        report.spread.into(),
    ]);
    let path = out_dir.join("xval.csv");
    table.write(&path)?;
    outcome.record(path);
    Ok(outcome)
}

fn run_mean_displacement(
    resolved: &ResolvedConfig,
    out_dir: &Path,
    seed: u64,
) -> Result<RunOutcome, QsympError> {
    let field = resolved.time_field()?;
    let a = resolved.matrix()?;
    let step = resolved.raw.flow_step.unwrap_or(DEFAULT_FLOW_STEP);
    let tol = resolved
        .raw
        .flow_tolerance
        .unwrap_or(DEFAULT_FLOW_TOLERANCE);
    let samples = resolved.raw.samples.unwrap_or(10_000);
    let n_torus = a.nrows();
    let n = a.ncols();

    // ζ₁ averaged over uniformly random base points; failure of any single
    // integration aborts (the certificate was validated by config loading).
    const SHARD: u64 = 1024;
    let shards = samples.div_ceil(SHARD) as usize;
    #[derive(Clone)]
    struct Acc {
        sum: DVector<f64>,
        sum_sq: DVector<f64>,
        count: u64,
    }
    let shard_results = map_indexed(shards, |shard| -> Result<Acc, QsympError> {
        let mut rng = stream_rng(seed, shard as u64);
        let lo = shard as u64 * SHARD;
        let hi = (lo + SHARD).min(samples);
        let mut acc = Acc {
            sum: DVector::zeros(n),
            sum_sq: DVector::zeros(n),
            count: 0,
        };
        for _ in lo..hi {
            let omega = DVector::from_fn(n_torus, |_, _| rng.gen::<f64>());
            let result = integrate_flow(field, a, &omega, 1.0, step, tol)?;
            for i in 0..n {
                acc.sum[i] += result.zeta1[i];
                acc.sum_sq[i] += result.zeta1[i] * result.zeta1[i];
            }
            acc.count += 1;
        }
        Ok(acc)
    });
    let mut collected = Vec::with_capacity(shards);
    for shard in shard_results {
        collected.push(shard?);
    }
    let total = tree_fold(
        &collected,
        &|x, y| Acc {
            sum: &x.sum + &y.sum,
            sum_sq: &x.sum_sq + &y.sum_sq,
            count: x.count + y.count,
        },
        Acc {
            sum: DVector::zeros(n),
            sum_sq: DVector::zeros(n),
            count: 0,
        },
    );

    let mut outcome = RunOutcome::default();
    let m = total.count as f64;
    let mut table = Table::new(&["component", "mean", "stderr", "within_band"]);
    for i in 0..n {
        let mean = total.sum[i] / m;
        let var = ((total.sum_sq[i] - m * mean * mean) / (m - 1.0)).max(0.0);
        let stderr = (var / m).sqrt();
        let pass = mean.abs() <= 3.0 * stderr;
        if !pass {
            outcome.warnings.push(format!(
                "mean displacement component {i}: |{mean:.3e}| exceeds 3·stderr = {:.3e}",
                3.0 * stderr
            ));
        }
        table.push(vec![
            i.into(),
            mean.into(),
            stderr.into(),
            Cell::Int(pass as i64),
        ]);
    }
    let path = out_dir.join("mean_displacement.csv");
    table.write(&path)?;
    outcome.record(path);
    Ok(outcome)
}
