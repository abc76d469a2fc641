use lagcal_core::calibration::{self, VolumeOptions};
use lagcal_core::circular;
use lagcal_core::curvature::{self, interior_samples};
use lagcal_core::families::{self, EquivariantFamily, EvolvingQuadric, FamilySpec};
use lagcal_core::groups::random_pseudo_unitary;
use lagcal_core::immersion::{induced_metric, lagrangian_angle_at, lagrangian_defect, metric_signature_relative};
use lagcal_core::psherm::{apply_j, plane_props, symplectic_orthogonal, CVector, Plane};
use lagcal_core::{Complex64, Signature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{ConfigError, Experiment, RunConfig};
use crate::report::{Cell, ExperimentReport, Table, Volumes};

pub const MINIMALITY_TOL: f64 = 1e-6;
pub const CURVATURE_AGREEMENT_TOL: f64 = 1e-5;
pub const OFFSET_SPREAD_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const EQUALITY_TOL: f64 = 1e-10;
pub const VOLUME_SLACK_TOL: f64 = 1e-6;
/// Fraction of perturbation runs that must stay non-degenerate.
pub const MIN_NONDEGENERATE_FRACTION: f64 = 0.75;
pub const SIGNATURE_REL_TOL: f64 = 1e-9;
const BETA_GRID: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] lagcal_core::Error),
}

/// Result of one experiment. `violations` lists every acceptance threshold
/// that failed; an empty list means exit code 0.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub table: Table,
    pub violations: Vec<String>,
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Outcome, RunError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Verify => verify(cfg),
        Experiment::Angle => angle(cfg),
        Experiment::Curvature => curvature(cfg),
        Experiment::Calibrate => calibrate(cfg),
        Experiment::VolumeCompare => volume_compare(cfg),
        Experiment::PlaneProps => plane_experiment(cfg),
    }
}

/// Column names for the patch parameters.
fn param_names(family: Option<&FamilySpec>, dim: usize) -> Vec<String> {
    match family {
        Some(FamilySpec::ProductNullCurves(_)) => vec!["u".into(), "v".into()],
        Some(FamilySpec::Hopf(_)) => vec!["s".into(), "t".into()],
        Some(FamilySpec::Equivariant(_) | FamilySpec::Catenoid(_) | FamilySpec::EvolvingQuadric(_)) => {
            if dim == 2 {
                vec!["s".into(), "t".into()]
            } else {
                std::iter::once("s".to_string()).chain((1..dim).map(|k| format!("t{k}"))).collect()
            }
        }
        _ => (1..=dim).map(|k| format!("x{k}")).collect(),
    }
}

fn point_cells(u: &[f64]) -> Vec<Cell> {
    u.iter().map(|&x| Cell::Float(x)).collect()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0f64, f64::max)
}

struct VerifyRow {
    beta: f64,
    defect: f64,
    h: f64,
    neg: usize,
    pos: usize,
    null: usize,
}

fn verify(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let patch = cfg.build_patch()?;
    let sig = patch.signature();
    let points = interior_samples(&patch, cfg.samples, cfg.seed);
    let rows: Vec<VerifyRow> = points
        .par_iter()
        .map(|u| -> lagcal_core::Result<VerifyRow> {
            let counts = metric_signature_relative(&induced_metric(&patch, u)?, SIGNATURE_REL_TOL);
            Ok(VerifyRow {
                beta: lagrangian_angle_at(&patch, u)?,
                defect: lagrangian_defect(&patch, u)?,
                h: curvature::mean_curvature_sff(&patch, u)?.norm(),
                neg: counts.neg,
                pos: counts.pos,
                null: counts.null,
            })
        })
        .collect::<lagcal_core::Result<_>>()?;

    let mut table = Table::new(param_names(cfg.family.as_ref(), patch.dim()).into_iter().chain(
        ["beta", "defect", "h_norm", "neg", "pos", "null"].map(String::from),
    ));
    for (u, r) in points.iter().zip(&rows) {
        let mut cells = point_cells(u);
        cells.extend([r.beta.into(), r.defect.into(), r.h.into(), r.neg.into(), r.pos.into(), r.null.into()]);
        table.push(cells);
    }

    let betas: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    let st = circular::stats(&betas);
    let max_defect = max_of(rows.iter().map(|r| r.defect));
    let max_h = max_of(rows.iter().map(|r| r.h));
    let residual = max_h.max(st.spread);
    let mut report = ExperimentReport::new(cfg);
    report.max_defect = Some(max_defect);
    report.beta_mean = Some(st.mean);
    report.beta_spread = Some(st.spread);
    report.residual = Some(residual);

    let mut violations = Vec::new();
    if max_defect > cfg.tol {
        violations.push(format!("max_defect {max_defect:e} exceeds tol {:e}", cfg.tol));
    }
    if !(residual < MINIMALITY_TOL) {
        violations.push(format!("minimality residual {residual:e} is not below {MINIMALITY_TOL:e}"));
    }
    let bad = rows.iter().filter(|r| r.neg != sig.p() || r.null != 0).count();
    if bad > 0 {
        violations.push(format!("{bad} samples break the induced signature ({} negative, 0 null)", sig.p()));
    }
    Ok(Outcome { report, table, violations })
}

fn angle(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let sig = cfg.sig()?;
    let patch = cfg.build_patch()?;
    let mut report = ExperimentReport::new(cfg);
    let mut violations = Vec::new();
    let equivariant = match &cfg.family {
        Some(FamilySpec::Equivariant(s)) => Some(EquivariantFamily::new(
            &sig,
            s.epsilon,
            s.curve.build()?,
            s.interval,
            s.chart_center.as_deref(),
            s.chart_half_width,
            "equivariant",
        )?),
        Some(FamilySpec::Catenoid(s)) => Some(families::catenoid_family(&sig, s)?),
        _ => None,
    };

    let (table, betas) = if let Some(fam) = equivariant {
        // along the orbit through the chart center, s at cell midpoints
        let d = patch.domain();
        let (a, b) = (d.lo[0], d.hi[0]);
        let n = cfg.samples;
        let rows: Vec<(f64, f64, f64)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let s = a + (b - a) * (k as f64 + 0.5) / n as f64;
                let mut u = vec![0.0; patch.dim()];
                u[0] = s;
                Ok((s, lagrangian_angle_at(&patch, &u)?, fam.predicted_angle(s)))
            })
            .collect::<lagcal_core::Result<_>>()?;
        let mut table = Table::new(["s", "beta"]);
        for &(s, beta, _) in &rows {
            table.push(vec![s.into(), beta.into()]);
        }
        let err = max_of(rows.iter().map(|&(_, beta, pred)| circular::distance(beta, pred)));
        report.residual = Some(err);
        if err > cfg.tol {
            violations.push(format!("beta departs from arg(γ′γ^(n−1)) by {err:e} > tol {:e}", cfg.tol));
        }
        (table, rows.iter().map(|r| r.1).collect::<Vec<_>>())
    } else if let Some(FamilySpec::EvolvingQuadric(spec)) = &cfg.family {
        let fam = EvolvingQuadric::new(&sig, spec)?;
        let chart = fam.chart().clone();
        let points = interior_samples(&patch, cfg.samples, cfg.seed);
        let rows: Vec<(f64, f64, f64)> = points
            .par_iter()
            .map(|u| {
                let beta = lagrangian_angle_at(&patch, u)?;
                let pred = fam.theoquad_angle(u[0], &chart.point(&u[1..])?);
                Ok((beta, pred, circular::principal(beta - pred)))
            })
            .collect::<lagcal_core::Result<_>>()?;
        let mut table = Table::new(
            param_names(cfg.family.as_ref(), patch.dim()).into_iter().chain(["beta", "predicted", "offset"].map(String::from)),
        );
        for (u, &(beta, pred, off)) in points.iter().zip(&rows) {
            let mut cells = point_cells(u);
            cells.extend([beta.into(), pred.into(), off.into()]);
            table.push(cells);
        }
        let offsets: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let off = circular::stats(&offsets);
        report.residual = Some(off.spread);
        if !(off.spread < OFFSET_SPREAD_TOL) {
            violations.push(format!("offset spread {:e} is not below {OFFSET_SPREAD_TOL:e}", off.spread));
        }
        (table, rows.iter().map(|r| r.0).collect())
    } else {
        let points = interior_samples(&patch, cfg.samples, cfg.seed);
        let betas: Vec<f64> = points
            .par_iter()
            .map(|u| lagrangian_angle_at(&patch, u))
            .collect::<lagcal_core::Result<_>>()?;
        let mut table = Table::new(param_names(cfg.family.as_ref(), patch.dim()).into_iter().chain(["beta".to_string()]));
        for (u, &beta) in points.iter().zip(&betas) {
            let mut cells = point_cells(u);
            cells.push(beta.into());
            table.push(cells);
        }
        (table, betas)
    };
    let st = circular::stats(&betas);
    report.beta_mean = Some(st.mean);
    report.beta_spread = Some(st.spread);
    Ok(Outcome { report, table, violations })
}

fn curvature(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let patch = cfg.build_patch()?;
    let null_coords = matches!(cfg.family, Some(FamilySpec::ProductNullCurves(_)));
    let points = interior_samples(&patch, cfg.samples, cfg.seed);
    let rows: Vec<(f64, curvature::CurvatureSample<f64>, f64, Option<f64>)> = points
        .par_iter()
        .map(|u| {
            let c = curvature::curvature_sample(&patch, u)?;
            let beta = lagrangian_angle_at(&patch, u)?;
            let defect = lagrangian_defect(&patch, u)?;
            let null = if null_coords {
                Some((&curvature::surface_h_null_coords(&patch, u)? - &c.h_sff).norm())
            } else {
                None
            };
            Ok((beta, c, defect, null))
        })
        .collect::<lagcal_core::Result<_>>()?;

    let mut cols: Vec<String> = param_names(cfg.family.as_ref(), patch.dim());
    cols.extend(["beta", "h_angle_norm", "h_sff_norm", "discrepancy"].map(String::from));
    if null_coords {
        cols.push("null_coords_discrepancy".into());
    }
    let mut table = Table::new(cols);
    for (u, (beta, c, _, null)) in points.iter().zip(&rows) {
        let mut cells = point_cells(u);
        cells.extend([(*beta).into(), c.h_angle.norm().into(), c.h_sff.norm().into(), c.discrepancy.into()]);
        if let Some(d) = null {
            cells.push((*d).into());
        }
        table.push(cells);
    }

    let betas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let st = circular::stats(&betas);
    let worst = max_of(rows.iter().map(|r| r.1.discrepancy));
    let worst_null = max_of(rows.iter().filter_map(|r| r.3));
    let mut report = ExperimentReport::new(cfg);
    report.max_defect = Some(max_of(rows.iter().map(|r| r.2)));
    report.beta_mean = Some(st.mean);
    report.beta_spread = Some(st.spread);
    report.residual = Some(max_of(rows.iter().map(|r| r.1.h_sff.norm())));
    let mut violations = Vec::new();
    if !(worst < CURVATURE_AGREEMENT_TOL) {
        violations.push(format!("|H_angle − H_sff| reaches {worst:e}, limit {CURVATURE_AGREEMENT_TOL:e}"));
    }
    if !(worst_null < CURVATURE_AGREEMENT_TOL) {
        violations.push(format!("null-coordinate H departs from H_sff by {worst_null:e}"));
    }
    Ok(Outcome { report, table, violations })
}

fn calibrate(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let sig = cfg.sig()?;
    let records = calibration::calibration_survey(&[sig], cfg.samples, cfg.seed, BETA_GRID, true)?;
    let s = calibration::summarize(&records);
    let mut table = Table::new(["index", "p", "n", "beta", "dvol", "slack_min", "identity_residual", "defect", "equality_residual"]);
    for r in &records {
        table.push(vec![
            r.index.into(),
            r.p.into(),
            r.n.into(),
            r.beta.into(),
            r.dvol.into(),
            r.slack_min.into(),
            r.identity_residual.into(),
            r.defect.into(),
            r.equality_residual.into(),
        ]);
    }
    let mut report = ExperimentReport::new(cfg);
    report.slack_min = Some(s.slack_min);
    report.identity_max_residual = Some(s.identity_max_residual);
    report.max_defect = Some(s.max_defect);
    report.residual = Some(s.equality_max_residual);
    let mut violations = Vec::new();
    if s.slack_min < -cfg.tol {
        violations.push(format!("calibration slack {:e} below −tol", s.slack_min));
    }
    if !(s.identity_max_residual < IDENTITY_TOL) {
        violations.push(format!("determinant identity residual {:e}", s.identity_max_residual));
    }
    if !(s.equality_max_residual < EQUALITY_TOL) {
        violations.push(format!("equality residual {:e} after rotation", s.equality_max_residual));
    }
    Ok(Outcome { report, table, violations })
}

fn default_grid(dim: usize) -> Vec<usize> {
    let per_axis = match dim {
        0..=2 => 64,
        3 => 24,
        _ => 12,
    };
    vec![per_axis; dim]
}

fn volume_compare(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let base = cfg.build_patch()?;
    let pc = cfg.perturbation_config();
    let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(base.dim()));
    let specs = calibration::random_perturbations(&base, pc.count, (pc.amplitude[0], pc.amplitude[1]), cfg.seed)?;
    let opts = VolumeOptions { seed: cfg.seed, ..VolumeOptions::default() };
    let cmp = calibration::volume_compare(&base, &specs, &grid, &opts)?;

    let mut table = Table::new(["index", "amplitude", "radius", "volume", "slack", "max_defect", "degenerate_points", "degenerate"]);
    for r in &cmp.runs {
        table.push(vec![
            r.index.into(),
            r.amplitude.into(),
            r.radius.into(),
            r.volume.into(),
            r.slack.into(),
            r.max_defect.into(),
            r.degenerate_points.into(),
            r.degenerate.into(),
        ]);
    }
    let degenerate = cmp.degenerate_count();
    let mut report = ExperimentReport::new(cfg);
    report.volumes = Some(Volumes { base: cmp.base_volume, perturbed: cmp.runs.iter().map(|r| r.volume).collect() });
    report.slack_min = Some(cmp.slack_min());
    report.degenerate_count = Some(degenerate);
    report.residual = Some(cmp.base_residual);
    report.max_defect = Some(max_of(cmp.runs.iter().map(|r| r.max_defect)));

    let mut violations = Vec::new();
    let needed = (MIN_NONDEGENERATE_FRACTION * pc.count as f64).ceil() as usize;
    if pc.count - degenerate < needed {
        violations.push(format!("only {} of {} runs are non-degenerate, need {needed}", pc.count - degenerate, pc.count));
    }
    for r in cmp.runs.iter().filter(|r| !r.degenerate && r.slack < -VOLUME_SLACK_TOL) {
        violations.push(format!("run {} lowers the volume by {:e}", r.index, -r.slack));
    }
    Ok(Outcome { report, table, violations })
}

/// Kinds of sampled planes: generic Gaussian planes plus direct
/// constructions of each special class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaneKind {
    Generic,
    Lagrangian,
    Complex,
    TotallyNull,
}

impl PlaneKind {
    fn name(self) -> &'static str {
        match self {
            PlaneKind::Generic => "generic",
            PlaneKind::Lagrangian => "lagrangian",
            PlaneKind::Complex => "complex",
            PlaneKind::TotallyNull => "totally_null",
        }
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng) -> CVector<f64> {
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    CVector(vec![Complex64::new(g(), g()), Complex64::new(g(), g())])
}

/// Draws one plane of the requested kind. Totally null planes need p = 1.
pub fn random_plane(kind: PlaneKind, sig: &Signature, rng: &mut ChaCha8Rng) -> lagcal_core::Result<Plane<f64>> {
    let c = |a: f64, b: f64| Complex64::new(a, b);
    match kind {
        PlaneKind::Generic => Plane::new(gaussian_vector(rng), gaussian_vector(rng)),
        PlaneKind::Complex => {
            let v = gaussian_vector(rng);
            let jv = apply_j(&v);
            Plane::new(v, jv)
        }
        PlaneKind::Lagrangian => {
            // U·ℝ² for U preserving the form
            let u = random_pseudo_unitary(sig, rng);
            Plane::new(CVector(vec![c(1.0, 0.0), c(0.0, 0.0)]).apply(&u), CVector(vec![c(0.0, 0.0), c(1.0, 0.0)]).apply(&u))
        }
        PlaneKind::TotallyNull => {
            if sig.p() != 1 {
                return Err(lagcal_core::Error::Precondition("totally null planes need (p, n) = (1, 2)".into()));
            }
            let u = random_pseudo_unitary(sig, rng);
            Plane::new(CVector(vec![c(1.0, 0.0), c(0.0, 1.0)]).apply(&u), CVector(vec![c(0.0, 1.0), c(1.0, 0.0)]).apply(&u))
        }
    }
}

fn plane_experiment(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let sig = cfg.sig()?;
    let mut kinds = vec![PlaneKind::Generic, PlaneKind::Lagrangian, PlaneKind::Complex];
    if sig.p() == 1 {
        kinds.push(PlaneKind::TotallyNull);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new(["index", "kind", "totally_null", "lagrangian", "complex", "orth_is_j"]);
    let mut violations = Vec::new();
    let mut degenerate = 0usize;
    for k in 0..cfg.samples {
        let kind = kinds[k % kinds.len()];
        let plane = match random_plane(kind, &sig, &mut rng) {
            Ok(p) => p,
            Err(_) => {
                degenerate += 1;
                continue;
            }
        };
        let props = plane_props(&plane, &sig)?;
        let orth_is_j = match symplectic_orthogonal(&plane, &sig) {
            Ok(o) => o.same_span(&plane.apply_j()),
            Err(_) => {
                degenerate += 1;
                continue;
            }
        };
        if orth_is_j != props.totally_null {
            violations.push(format!("plane {k}: totally_null = {} but orth_is_j = {orth_is_j}", props.totally_null));
        }
        if props.count() == 2 {
            violations.push(format!("plane {k} has exactly two of the three properties"));
        }
        let built = match kind {
            PlaneKind::Generic => true,
            PlaneKind::Lagrangian => props.lagrangian,
            PlaneKind::Complex => props.complex,
            PlaneKind::TotallyNull => props.totally_null,
        };
        if !built {
            violations.push(format!("plane {k} constructed as {} lacks that property", kind.name()));
        }
        table.push(vec![
            k.into(),
            kind.name().into(),
            props.totally_null.into(),
            props.lagrangian.into(),
            props.complex.into(),
            orth_is_j.into(),
        ]);
    }
    let mut report = ExperimentReport::new(cfg);
    report.degenerate_count = Some(degenerate);
    Ok(Outcome { report, table, violations })
}
