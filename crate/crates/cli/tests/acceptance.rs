//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p deficiency-cli --test acceptance`. The process
//! exits nonzero if any criterion fails.

// `ensure!(x <= bound)` must fail on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use deficiency::bipartite::{assemble, conjecture_probe, isomorphism, MeasureSpace};
use deficiency::extension::{lift, min_pairwise_distance, phase_grid, sweep_extensions};
use deficiency::frames::{ambient_unitary, span_agreement, FrameFamily};
use deficiency::linalg::{orthonormal_range, principal_angles, unitarity_residual, I};
use deficiency::operator::{
    deficiency_dim_at, deficiency_indices, deficiency_space, laplacian_interval, momentum_interval,
    validate_symmetric,
};
use deficiency::{CMatrix, OperatorModel, Sign, Tolerances, C64};
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const N: usize = 200;

fn tol() -> Tolerances {
    Tolerances::default()
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn lib<T>(r: deficiency::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn hermitian(n: usize, seed: f64) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |i, j| {
        let t = seed + (i * n + j) as f64;
        C64::new(t.sin(), (1.7 * t).cos())
    });
    &a + a.adjoint()
}

fn cli(dir: &Path, args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_deficiency"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    ))
}

fn cli_json(dir: &Path, args: &[&str]) -> Result<Value, String> {
    let (code, stdout) = cli(dir, args)?;
    ensure!(code == 0, "`{}` exited with {code}", args.join(" "));
    serde_json::from_str(&stdout).map_err(|e| e.to_string())
}

fn pair(v: &Value) -> (u64, u64) {
    (v[0].as_u64().unwrap_or(u64::MAX), v[1].as_u64().unwrap_or(u64::MAX))
}

fn c1_indices(dir: &Path) -> Outcome {
    let t = tol();
    let mom = lib(deficiency_indices(&lib(momentum_interval(N))?, &t))?;
    ensure!(mom == (1, 1), "momentum: {mom:?}");
    let lap = lib(deficiency_indices(&lib(laplacian_interval(N))?, &t))?;
    ensure!(lap == (2, 2), "laplacian: {lap:?}");
    for (n, seed) in [(3, 0.1), (8, 2.0), (40, 5.5)] {
        let h = lib(OperatorModel::full_domain("h", hermitian(n, seed)))?;
        lib(validate_symmetric(&h, &t))?;
        let d = lib(deficiency_indices(&h, &t))?;
        ensure!(d == (0, 0), "hermitian {n}×{n}: {d:?}");
    }
    std::fs::write(
        dir.join("c1.toml"),
        format!("[operator]\npreset = \"momentum_interval\"\nn = {N}\n"),
    )
    .map_err(|e| e.to_string())?;
    let json = cli_json(dir, &["indices", "--config", "c1.toml", "--json"])?;
    ensure!(pair(&json["indices"]["deficiency"]) == (1, 1), "cli: {}", json["indices"]);
    Ok(format!(
        "momentum n={N} {mom:?}, laplacian n={N} {lap:?}, hermitian 3/8/40 (0, 0), cli (1, 1)"
    ))
}

fn c2_vectors() -> Outcome {
    let m = lib(momentum_interval(N))?;
    let grid = m.grid().ok_or("momentum preset has no grid")?.clone();
    let decay = grid.sample_normalized(|x| C64::new((-x).exp(), 0.0));
    let growth = grid.sample_normalized(|x| C64::new(x.exp(), 0.0));
    let plus = lib(deficiency_space(&m, Sign::Plus, &tol()))?;
    let minus = lib(deficiency_space(&m, Sign::Minus, &tol()))?;
    let op = plus.vector(0).dotc(&decay).norm();
    let om = minus.vector(0).dotc(&growth).norm();
    ensure!(op >= 0.95, "|<N+, e^-x>| = {op:.6}");
    ensure!(om >= 0.95, "|<N-, e^x>| = {om:.6}");
    Ok(format!("|<N+, e^-x>| = {op:.6}, |<N-, e^x>| = {om:.6} (bound 0.95)"))
}

fn c3_extensions() -> Outcome {
    let t = tol();
    ensure!(t.tol_boundary == 1e-8, "tol_boundary is {}", t.tol_boundary);
    let m = lib(momentum_interval(N))?;
    let entries = lib(sweep_extensions(&m, &phase_grid(8), &t))?;
    ensure!(entries.len() == 8, "{} entries", entries.len());
    let base_dim = m.domain_dim();
    let mut worst_rel: f64 = 0.0;
    for (k, e) in entries.iter().enumerate() {
        let r = &e.report;
        let rel = r.symmetry_residual / r.scale;
        worst_rel = worst_rel.max(rel);
        ensure!(r.symmetry_residual <= 1e-8 * r.scale, "phase {k}: Γ/scale = {rel:.3e}");
        ensure!(r.domain_dim == base_dim + 1, "phase {k}: dim {} vs {}", r.domain_dim, base_dim + 1);
        ensure!(r.extends_base, "phase {k}: base residual {:.3e}", r.extension_residual);
        ensure!(r.maximality, "phase {k}: maximality margin {:.3e}", r.maximality_margin);
    }
    // Every extension domain contains the lifted D(A), so spans are compared
    // both as wholes (largest angle) and modulo D(A) (all angles).
    let dist = lib(min_pairwise_distance(&entries))?;
    let base = lib(orthonormal_range(
        &lift(m.domain().matrix(), &m.action_on_domain()),
        &t,
    ))?;
    let parts: Vec<_> = entries
        .iter()
        .map(|e| {
            let q = e.domain.matrix();
            let b = base.matrix();
            orthonormal_range(&(q - b * (b.adjoint() * q)), &t)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut min_quotient = f64::INFINITY;
    for a in 0..parts.len() {
        for b in a + 1..parts.len() {
            for angle in lib(principal_angles(&parts[a], &parts[b]))? {
                min_quotient = min_quotient.min(angle);
            }
        }
    }
    ensure!(dist > 1e-3, "min pairwise domain distance {dist:.3e}");
    ensure!(min_quotient > 1e-3, "min principal angle modulo D(A) {min_quotient:.3e}");
    Ok(format!(
        "8 phases: max Γ/scale {worst_rel:.2e}, dim {}, extends, maximal; min pairwise angle {dist:.3e} (modulo D(A) {min_quotient:.3e})",
        base_dim + 1
    ))
}

fn c4_frames() -> Outcome {
    let t = tol();
    let res = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let ims = [0.25, 0.5, 1.0, 2.0, 4.0];
    let zs: Vec<C64> = res
        .iter()
        .flat_map(|&a| ims.iter().map(move |&b| C64::new(a, b)))
        .collect();
    let mut summary = Vec::new();
    for m in [lib(momentum_interval(N))?, lib(laplacian_interval(N))?] {
        let (d_plus, _) = lib(deficiency_indices(&m, &t))?;
        let family = lib(FrameFamily::new(&m, &t))?;
        let data = lib(family.at_all(&zs))?;
        let (mut worst_angle, mut worst_unitary): (f64, f64) = (0.0, 0.0);
        for fd in &data {
            ensure!(
                fd.nonzero_count() == d_plus,
                "{} z = {}: {} nonzero σ, d+ = {d_plus}",
                m.label(),
                fd.z,
                fd.nonzero_count()
            );
            let angle = lib(span_agreement(&family, fd))?
                .into_iter()
                .fold(0.0, f64::max);
            let u = family.unitary_on(fd, &lib(family.direct_complement(fd.z))?);
            let ures = unitarity_residual(&u).max(fd.unitarity_residual());
            ensure!(angle <= 1e-8, "{} z = {}: span angle {angle:.3e}", m.label(), fd.z);
            ensure!(ures <= 1e-10, "{} z = {}: unitarity {ures:.3e}", m.label(), fd.z);
            worst_angle = worst_angle.max(angle);
            worst_unitary = worst_unitary.max(ures);
        }
        let at_i = lib(family.at(I))?;
        let tau = family.reference(I);
        let coord = (&at_i.unitary_to_reference - CMatrix::identity(d_plus, d_plus)).norm();
        let ambient = (ambient_unitary(&at_i.selected_frame, tau) * tau.matrix() - tau.matrix()).norm();
        ensure!(coord.max(ambient) <= 1e-10, "{}: U_i − I = {:.3e}", m.label(), coord.max(ambient));
        summary.push(format!(
            "{} count {d_plus}, angle {worst_angle:.1e}, unitarity {worst_unitary:.1e}, |U_i − I| {:.1e}",
            m.label(),
            coord.max(ambient)
        ));
    }
    Ok(format!("25 z per preset: {}", summary.join("; ")))
}

fn c5_bipartite() -> Outcome {
    let t = tol();
    let fiber = lib(momentum_interval(N))?;
    let phi = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut profiles = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for mu in [[1.0; 5], [1.0, 2.0, 0.5, 1.0, 3.0]] {
        let space = lib(MeasureSpace::from_parts(phi.to_vec(), mu.to_vec()))?;
        let b = lib(assemble(&fiber, &space))?;
        let mut profile = Vec::new();
        for sign in [Sign::Plus, Sign::Minus] {
            let c = lib(isomorphism(&b, sign, &t))?;
            let checks = [
                c.dimension == 5,
                c.max_oracle_angle() <= 1e-8,
                c.unitarity_residual <= 1e-9,
                c.passed(),
            ];
            ensure!(
                checks.iter().all(|&x| x),
                "μ = {mu:?}, {}: dim {}, oracle {:.3e}, unitarity {:.3e}, {:?}",
                sign.as_str(),
                c.dimension,
                c.max_oracle_angle(),
                c.unitarity_residual,
                c.diagnostics
            );
            worst.0 = worst.0.max(c.max_oracle_angle());
            worst.1 = worst.1.max(c.unitarity_residual);
            profile.push(checks);
        }
        profiles.push(profile);
    }
    ensure!(profiles[0] == profiles[1], "pass profiles differ: {profiles:?}");
    Ok(format!(
        "m = 5, dim N± = 5, max oracle angle {:.2e}, max unitarity {:.2e}, uniform and weighted μ agree",
        worst.0, worst.1
    ))
}

fn c6_constancy() -> Outcome {
    let t = tol();
    let zs = [
        I,
        C64::new(0.0, 3.0),
        C64::new(1.0, 1.0),
        C64::new(-2.0, 0.5),
        C64::new(4.0, 0.2),
        C64::new(-0.7, 7.0),
    ];
    let mut out = Vec::new();
    for m in [lib(momentum_interval(N))?, lib(laplacian_interval(N))?] {
        let ds: Vec<usize> = zs
            .iter()
            .map(|&z| deficiency_dim_at(&m, z, &t))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure!(ds.iter().all(|&d| d == ds[0]), "{}: {ds:?}", m.label());
        out.push(format!("{} d_z = {}", m.label(), ds[0]));
    }
    Ok(format!("6 points each: {}", out.join(", ")))
}

fn c7_probe(dir: &Path) -> Outcome {
    let t = tol();
    let a = lib(momentum_interval(40))?;
    let h = lib(OperatorModel::full_domain("h", hermitian(5, 0.3)))?;
    let p = lib(conjecture_probe(&a, &h, &t))?;
    ensure!(p.d_ab == p.d_a_n_b, "momentum ⊗ hermitian: d_AB {:?} vs d_A·n_B {:?}", p.d_ab, p.d_a_n_b);
    let q = lib(conjecture_probe(&h, &a, &t))?;
    ensure!(q.d_ab == q.n_a_d_b, "hermitian ⊗ momentum: d_AB {:?} vs n_A·d_B {:?}", q.d_ab, q.n_a_d_b);

    std::fs::write(
        dir.join("c7.toml"),
        "[operator]\npreset = \"momentum_interval\"\nn = 24\n\n[operator_b]\npreset = \"momentum_interval\"\nn = 24\n",
    )
    .map_err(|e| e.to_string())?;
    let json = cli_json(dir, &["probe", "--config", "c7.toml", "--json"])?;
    let idx = &json["indices"];
    for key in ["d_a", "d_b", "d_ab", "d_a_n_b_plus_n_a_d_b"] {
        ensure!(idx[key].is_array(), "probe report lacks {key}");
    }
    Ok(format!(
        "one side hermitian: d_AB = {:?} = d_A·n_B; both momentum n=24: d_A {:?}, d_B {:?}, d_AB {:?}, d_A·n_B + n_A·d_B {:?} (not asserted)",
        p.d_ab,
        pair(&idx["d_a"]),
        pair(&idx["d_b"]),
        pair(&idx["d_ab"]),
        pair(&idx["d_a_n_b_plus_n_a_d_b"])
    ))
}

fn strip_timing(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time_seconds\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c8_determinism(dir: &Path) -> Outcome {
    std::fs::write(
        dir.join("c8.toml"),
        "[operator]\npreset = \"momentum_interval\"\nn = 48\n\n\
         [operator_b]\npreset = \"laplacian_interval\"\nn = 10\n\n\
         [space]\npoints = [[-1.0, 1.0], [0.0, 2.0], [1.5, 0.5]]\n\n\
         [unitary]\nvalue = \"phase:0.7\"\n\n\
         [frames]\nz = [\"1+1i\", \"-0.5+2i\", \"0.3-1i\"]\n\n\
         [sweep]\nphases = 4\n",
    )
    .map_err(|e| e.to_string())?;
    let commands = ["indices", "extend", "bipartite", "frames", "probe", "sweep"];
    for cmd in commands {
        let out = format!("c8-{cmd}.json");
        let mut runs = Vec::new();
        for _ in 0..2 {
            let (code, _) = cli(dir, &[cmd, "--config", "c8.toml", "--out", &out])?;
            ensure!(code == 0, "{cmd} exited with {code}");
            let text = std::fs::read_to_string(dir.join(&out)).map_err(|e| e.to_string())?;
            runs.push(text);
        }
        ensure!(runs[0].contains("\"wall_time_seconds\""), "{cmd}: no timing field");
        ensure!(strip_timing(&runs[0]) == strip_timing(&runs[1]), "{cmd}: reports differ");
    }
    Ok(format!("{} commands, two runs each, byte-identical apart from wall time", commands.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let dir = dir.path();
    let criteria: Vec<Criterion> = vec![
        ("C1 indices", Box::new(|| c1_indices(dir))),
        ("C2 deficiency vectors", Box::new(c2_vectors)),
        ("C3 von Neumann extensions", Box::new(c3_extensions)),
        ("C4 σ frames and U_z", Box::new(c4_frames)),
        ("C5 bipartite isomorphism", Box::new(c5_bipartite)),
        ("C6 d_z constancy", Box::new(c6_constancy)),
        ("C7 conjecture probe", Box::new(|| c7_probe(dir))),
        ("C8 determinism", Box::new(|| c8_determinism(dir))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let start = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
