//! One function per subcommand. Each returns a finished [`Report`]; a
//! report whose `checks` contain a `false` maps to exit code 4.

use std::path::{Path, PathBuf};

use deficiency::bipartite::{assemble, conjecture_probe, isomorphism, IsomorphismCertificate};
use deficiency::extension::{
    min_pairwise_distance, sweep_extensions, verify_extension, ExtensionBasis, UnitaryParameter,
};
use deficiency::frames::{span_agreement, FrameFamily};
use deficiency::io::write_matrix;
use deficiency::linalg::{unitarity_residual, I};
use deficiency::operator::{deficiency_indices, deficiency_report, validate_symmetric};
use deficiency::{CMatrix, Frame, OperatorModel, Sign, Tolerances, C64};
use sha2::{Digest, Sha256};

use crate::config::{parse_complex, parse_unitary, FramesSpec, RunConfig, SweepSpec, UnitarySpec};
use crate::report::Report;
use crate::CliError;

/// Largest principal angle accepted between spans that should agree.
pub const SPAN_BOUND: f64 = 1e-8;
/// Unitarity residual accepted for the frame unitaries `U_z`.
pub const FRAME_UNITARITY_BOUND: f64 = 1e-10;
/// Smallest largest-principal-angle between sweep domains counted as distinct.
pub const DISTINCT_BOUND: f64 = 1e-3;
pub const DEFAULT_PHASES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Indices,
    Extend,
    Bipartite,
    Frames,
    Probe,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Indices => "indices",
            Command::Extend => "extend",
            Command::Bipartite => "bipartite",
            Command::Frames => "frames",
            Command::Probe => "probe",
            Command::Sweep => "sweep",
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol_rank: Option<f64>,
    pub tol_zero: Option<f64>,
    pub unitary: Option<String>,
    pub z: Vec<String>,
    pub phases: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(t) = self.tol_rank {
            cfg.tolerances.tol_rank = t;
        }
        if let Some(t) = self.tol_zero {
            cfg.tolerances.tol_zero = t;
        }
        if let Some(u) = &self.unitary {
            cfg.unitary = Some(UnitarySpec { value: u.clone() });
        }
        if !self.z.is_empty() {
            cfg.frames = Some(FramesSpec { z: self.z.clone() });
        }
        if let Some(p) = self.phases {
            cfg.sweep = Some(SweepSpec { phases: p });
        }
        cfg.tolerances()?;
        Ok(())
    }
}

/// Runs `cmd` on a config with overrides already applied. `out` is the
/// JSON destination, used to place auxiliary matrix files next to it.
pub fn run(cmd: Command, cfg: &RunConfig, out: Option<&Path>) -> Result<Report, CliError> {
    let tol = cfg.tolerances()?;
    let echo = serde_json::to_value(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = Report::new(cmd.name(), echo);
    match cmd {
        Command::Indices => indices(cfg, &tol, out, &mut report)?,
        Command::Extend => extend(cfg, &tol, out, &mut report)?,
        Command::Bipartite => bipartite(cfg, &tol, &mut report)?,
        Command::Frames => frames(cfg, &tol, &mut report)?,
        Command::Probe => probe(cfg, &tol, &mut report)?,
        Command::Sweep => sweep(cfg, &tol, &mut report)?,
    }
    Ok(report)
}

fn build_model(cfg: &RunConfig, tol: &Tolerances, report: &mut Report) -> Result<OperatorModel, CliError> {
    let m = cfg.operator.preset(&cfg.base_dir).build(tol)?;
    report.label("operator", m.label());
    report.dimension("ambient", m.ambient_dim());
    report.dimension("domain", m.domain_dim());
    Ok(m)
}

fn validate(m: &OperatorModel, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let sym = validate_symmetric(m, tol)?;
    report.residual("symmetry_residual", sym.residual);
    report.residual("symmetry_absolute", sym.absolute);
    Ok(())
}

fn load_model(cfg: &RunConfig, tol: &Tolerances, report: &mut Report) -> Result<OperatorModel, CliError> {
    let m = build_model(cfg, tol, report)?;
    validate(&m, tol, report)?;
    Ok(m)
}

/// `<out without extension>.<suffix>`
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_aux(report: &mut Report, key: &str, path: PathBuf, m: &CMatrix) -> Result<(), CliError> {
    write_matrix(&path, m)?;
    report.file(key, path.display().to_string());
    Ok(())
}

fn indices(cfg: &RunConfig, tol: &Tolerances, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    let m = load_model(cfg, tol, report)?;
    let d = deficiency_report(&m, tol)?;
    report.indices("deficiency", (d.d_plus, d.d_minus));
    report.residual("deficiency_orthogonality", d.residual);
    report.check("symmetric", true);
    match out {
        Some(out) => {
            write_aux(report, "basis_plus", sibling(out, "plus.mat"), d.basis_plus.matrix())?;
            write_aux(report, "basis_minus", sibling(out, "minus.mat"), d.basis_minus.matrix())?;
        }
        None => report.note("no output path; deficiency bases not written"),
    }
    Ok(())
}

/// SHA-256 of the orthogonal projector onto `f`, entries rounded to 1e-8.
/// Independent of the basis chosen for the span.
pub fn span_fingerprint(f: &Frame) -> String {
    let q = f.matrix();
    let p = q * q.adjoint();
    let mut h = Sha256::new();
    h.update((p.nrows() as u64).to_le_bytes());
    for z in p.iter() {
        for x in [z.re, z.im] {
            let r = (x * 1e8).round() as i64;
            h.update(r.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn unitary_parameter(cfg: &RunConfig, d: usize) -> Result<UnitaryParameter, CliError> {
    match &cfg.unitary {
        Some(spec) => parse_unitary(&spec.value, &cfg.base_dir),
        None if d == 0 => Ok(UnitaryParameter::identity(0)),
        None => Err(CliError::Config(format!(
            "deficiency index is {d}; give a unitary parameter ([unitary] value or --unitary)"
        ))),
    }
}

fn extend(cfg: &RunConfig, tol: &Tolerances, out: Option<&Path>, report: &mut Report) -> Result<(), CliError> {
    // Unequal indices are reported before symmetry: no extension exists
    // whatever the symmetry residual.
    let m = build_model(cfg, tol, report)?;
    let basis = ExtensionBasis::new(&m, tol)?;
    validate(&m, tol, report)?;
    let d = basis.deficiency();
    report.indices("deficiency", (d, d));
    let u = unitary_parameter(cfg, d)?;
    let e = basis.build(&u, tol)?;
    let r = verify_extension(&e, tol);

    report.residual("extension.symmetry_residual", r.symmetry_residual);
    report.residual("extension.symmetry_scale", r.scale);
    report.residual("extension.base_residual", r.extension_residual);
    if r.maximality_margin.is_finite() {
        report.residual("extension.maximality_margin", r.maximality_margin);
    } else {
        report.note("boundary complement is empty; no maximality margin");
    }
    report.dimension("extension.base_dim", r.base_dim);
    report.dimension("extension.domain_dim", r.domain_dim);
    report.dimension("extension.boundary_dim", r.boundary_dim);
    report.dimension("extension.complement_dim", r.complement_dim);
    report.dimension("extension.multivalued_dim", r.multivalued_dim);
    report.check("symmetric", r.symmetric);
    report.check("extends_base", r.extends_base);
    report.check("dimension", r.dim_check);
    report.check("maximal", r.maximality);
    report.label("domain_fingerprint", span_fingerprint(e.domain()));
    if d == 0 {
        report.note("deficiency indices (0, 0): the model is its own unique extension");
    }
    if r.multivalued_dim > 0 {
        report.note(format!(
            "the extension is a relation with a {}-dimensional multivalued part",
            r.multivalued_dim
        ));
    }
    if let Some(out) = out {
        if let Some(b) = e.matrix() {
            write_aux(report, "extension_matrix", sibling(out, "extension.mat"), &b)?;
        }
    }
    Ok(())
}

fn sign_key(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

fn record_certificate(report: &mut Report, c: &IsomorphismCertificate) {
    let s = sign_key(c.sign);
    report.dimension(format!("{s}.dimension"), c.dimension);
    report.dimension(format!("{s}.expected_dimension"), c.expected_dimension);
    report.residual(format!("{s}.unitarity_residual"), c.unitarity_residual);
    report.residual(format!("{s}.max_oracle_angle"), c.max_oracle_angle());
    report.residual(format!("{s}.max_image_angle"), c.max_image_angle());
    let worst_fiber = c.fiber_residuals.iter().copied().fold(0.0, f64::max);
    report.residual(format!("{s}.max_fiber_residual"), worst_fiber);
    report.angles(format!("{s}.oracle"), c.oracle_angles.clone());
    report.angles(format!("{s}.image"), c.image_angles.clone());
    report.angles(format!("{s}.fiber_residuals"), c.fiber_residuals.clone());
    report.check(format!("{s}.dimension"), c.dimension == c.expected_dimension);
    report.check(
        format!("{s}.oracle"),
        c.max_oracle_angle() <= IsomorphismCertificate::ANGLE_BOUND,
    );
    report.check(
        format!("{s}.fibers"),
        worst_fiber <= IsomorphismCertificate::ANGLE_BOUND,
    );
    report.check(
        format!("{s}.image"),
        c.max_image_angle() <= IsomorphismCertificate::ANGLE_BOUND,
    );
    report.check(
        format!("{s}.unitary"),
        c.unitarity_residual <= IsomorphismCertificate::UNITARITY_BOUND,
    );
    for d in &c.diagnostics {
        report.note(format!("{s}: {d}"));
    }
}

fn bipartite(cfg: &RunConfig, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let fiber = load_model(cfg, tol, report)?;
    let space = cfg.space()?;
    report.indices("fiber", deficiency_indices(&fiber, tol)?);
    report.dimension("fiber_count", space.len());
    report.bound("angle", IsomorphismCertificate::ANGLE_BOUND);
    report.bound("unitarity", IsomorphismCertificate::UNITARITY_BOUND);
    let b = assemble(&fiber, &space)?;
    let plus = isomorphism(&b, Sign::Plus, tol)?;
    let minus = isomorphism(&b, Sign::Minus, tol)?;
    report.indices("block", (plus.dimension, minus.dimension));
    record_certificate(report, &plus);
    record_certificate(report, &minus);
    Ok(())
}

fn frame_parameters(cfg: &RunConfig) -> Result<Vec<C64>, CliError> {
    match &cfg.frames {
        Some(spec) if !spec.z.is_empty() => spec.z.iter().map(|s| parse_complex(s)).collect(),
        _ => Ok(vec![I]),
    }
}

fn frames(cfg: &RunConfig, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let m = load_model(cfg, tol, report)?;
    let zs = frame_parameters(cfg)?;
    let family = FrameFamily::new(&m, tol)?;
    report.dimension("reference_count", family.deficiency());
    report.bound("span_angle", SPAN_BOUND);
    report.bound("unitarity", FRAME_UNITARITY_BOUND);
    let data = family.at_all(&zs)?;
    for (k, fd) in data.iter().enumerate() {
        let key = format!("z{k:02}");
        let direct = family.direct_complement(fd.z)?;
        let angles = span_agreement(&family, fd)?;
        let worst = angles.iter().copied().fold(0.0, f64::max);
        let u = family.unitary_on(fd, &direct);
        let u_res = unitarity_residual(&u);
        report.label(format!("{key}.z"), format!("{}{:+}i", fd.z.re, fd.z.im));
        report.label(format!("{key}.selected"), format!("{:?}", fd.selected));
        report.dimension(format!("{key}.nonzero_count"), fd.nonzero_count());
        report.dimension(format!("{key}.direct_dim"), direct.len());
        report.residual(format!("{key}.unitarity_residual"), u_res);
        report.residual(format!("{key}.max_span_angle"), worst);
        report.angles(format!("{key}.span"), angles);
        report.check(format!("{key}.count"), fd.nonzero_count() == direct.len());
        report.check(format!("{key}.span"), worst <= SPAN_BOUND);
        report.check(format!("{key}.unitary"), u_res <= FRAME_UNITARITY_BOUND);
    }
    Ok(())
}

fn probe(cfg: &RunConfig, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let a = load_model(cfg, tol, report)?;
    let spec_b = cfg
        .operator_b
        .as_ref()
        .ok_or_else(|| CliError::Config("probe needs an [operator_b] section".into()))?;
    let b = spec_b.preset(&cfg.base_dir).build(tol)?;
    report.label("operator_b", b.label());
    let p = conjecture_probe(&a, &b, tol)?;
    report.label("status", "exploratory: no expected value");
    report.dimension("n_a", p.n_a);
    report.dimension("n_b", p.n_b);
    report.indices("d_a", p.d_a);
    report.indices("d_b", p.d_b);
    report.indices("d_ab", p.d_ab);
    report.indices("d_a_n_b", p.d_a_n_b);
    report.indices("n_a_d_b", p.n_a_d_b);
    report.indices("d_a_n_b_plus_n_a_d_b", p.conjectured);
    Ok(())
}

fn sweep(cfg: &RunConfig, tol: &Tolerances, report: &mut Report) -> Result<(), CliError> {
    let m = build_model(cfg, tol, report)?;
    let basis_d = deficiency_indices(&m, tol)?;
    report.indices("deficiency", basis_d);
    if basis_d.0 != basis_d.1 {
        return Err(deficiency::Error::NoSelfAdjointExtension {
            d_plus: basis_d.0,
            d_minus: basis_d.1,
        }
        .into());
    }
    validate(&m, tol, report)?;
    let count = cfg.sweep.as_ref().map_or(DEFAULT_PHASES, |s| s.phases);
    let d = basis_d.0;
    let grid: Vec<UnitaryParameter> = if d == 0 {
        Vec::new()
    } else {
        (0..count)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                let u = CMatrix::identity(d, d) * C64::from_polar(1.0, theta);
                UnitaryParameter::new(u)
            })
            .collect::<Result<_, _>>()?
    };
    let entries = sweep_extensions(&m, &grid, tol)?;
    report.dimension("entries", entries.len());
    report.bound("distinct", DISTINCT_BOUND);
    for (k, e) in entries.iter().enumerate() {
        let key = format!("phase{k:02}");
        let r = &e.report;
        let theta = if grid.is_empty() {
            0.0
        } else {
            2.0 * std::f64::consts::PI * k as f64 / count as f64
        };
        report.label(format!("{key}.theta"), format!("{theta}"));
        report.label(format!("{key}.domain_fingerprint"), span_fingerprint(&e.domain));
        report.residual(format!("{key}.symmetry_residual"), r.symmetry_residual);
        report.residual(format!("{key}.symmetry_scale"), r.scale);
        report.residual(format!("{key}.base_residual"), r.extension_residual);
        if r.maximality_margin.is_finite() {
            report.residual(format!("{key}.maximality_margin"), r.maximality_margin);
        }
        report.dimension(format!("{key}.domain_dim"), r.domain_dim);
        report.dimension(format!("{key}.complement_dim"), r.complement_dim);
        report.dimension(format!("{key}.multivalued_dim"), r.multivalued_dim);
        report.check(format!("{key}.symmetric"), r.symmetric);
        report.check(format!("{key}.extends_base"), r.extends_base);
        report.check(format!("{key}.dimension"), r.dim_check);
        report.check(format!("{key}.maximal"), r.maximality);
    }
    if entries.len() >= 2 {
        let dist = min_pairwise_distance(&entries)?;
        report.residual("min_pairwise_distance", dist);
        report.check("distinct", dist > DISTINCT_BOUND);
    }
    Ok(())
}
