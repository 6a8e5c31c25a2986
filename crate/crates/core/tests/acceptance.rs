//! End-to-end acceptance run. Prints one line per criterion and exits nonzero
//! if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use plate_echo::farfield::FarFieldMatrix;
use plate_echo::forward::assemble_far_field_matrix;
use plate_echo::geometry::{ParametricCurve, Point, Region, ShapeKind};
use plate_echo::imaging::{add_noise, apply_mask, evaluate_grid, spearman, ApertureMask, GridSpec, Indicator, NoiseModel};
use plate_echo::oracle::disk_far_field_matrix;
use plate_echo::verify::{
    check_decay_slope_for, check_equivalence_chain, check_funk_hecke, check_operator_identity, reconstruction_overlap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: f64 = 4.0;
const N: usize = 64;
const NODES: usize = 128;
const J0_ZERO: f64 = 2.404825557695773;
const THRESHOLD: f64 = 0.3;

/// Regression floors for the overlap with the cavity at `THRESHOLD`, frozen a
/// little below the values measured when the solver was validated.
const OVERLAP_FLOORS: [(ShapeKind, f64, f64, f64); 4] = [
    // shape, delta, W_ip(4), W_norm(8)
    (ShapeKind::Star, 0.0, 0.08, 0.10),
    (ShapeKind::Star, 0.02, 0.08, 0.10),
    (ShapeKind::Peanut, 0.1, 0.14, 0.13),
    (ShapeKind::Peanut, 0.3, 0.14, 0.14),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn curve(kind: ShapeKind) -> ParametricCurve {
    ParametricCurve::new(kind, &[]).unwrap()
}

fn bie(kind: ShapeKind, nodes: usize) -> FarFieldMatrix {
    assemble_far_field_matrix(&curve(kind), K, N, nodes).unwrap()
}

fn relative_max_difference(a: &FarFieldMatrix, b: &FarFieldMatrix) -> f64 {
    let num = (&a.entries - &b.entries).iter().map(|v| v.norm()).fold(0.0, f64::max);
    num / b.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn disk_oracle_equivalence() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let f = pool.install(|| assemble_far_field_matrix(&curve(ShapeKind::Circle), K, N, NODES).unwrap());
    let secs = start.elapsed().as_secs_f64();
    let err = relative_max_difference(&f, &oracle_matrix());
    outcome(err <= 1e-6 && secs <= 30.0, format!("rel_max_err={err:.3e} (tol 1e-6) time={secs:.2}s (limit 30s)"))
}

fn oracle_matrix() -> FarFieldMatrix {
    disk_far_field_matrix(1.0, K, N).unwrap()
}

fn operator_identity() -> Outcome {
    let oracle = check_operator_identity(&oracle_matrix(), 1e-6);
    let mut pass = oracle.pass;
    let mut detail = format!("oracle={:.3e} (tol 1e-6)", oracle.residual);
    for kind in [ShapeKind::Star, ShapeKind::Peanut] {
        let coarse = check_operator_identity(&bie(kind, NODES), 1e-2);
        let fine = check_operator_identity(&bie(kind, 2 * NODES), 1e-2);
        // at 128 nodes both shapes already sit near the round-off floor, so a
        // doubling may only keep the residual within 10% of its coarse value
        let settles = fine.residual <= 1.1 * coarse.residual;
        pass &= coarse.pass && settles;
        detail.push_str(&format!(
            " {}: 2n=128 {:.3e} 2n=256 {:.3e} (tol 1e-2, 256 <= 1.1*128: {settles})",
            kind.name(),
            coarse.residual,
            fine.residual
        ));
    }
    outcome(pass, detail)
}

fn funk_hecke() -> Outcome {
    let mut worst: f64 = 0.0;
    let x = [0.3, -0.2];
    let mut distances: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
    distances.push(J0_ZERO);
    for kr in distances {
        for angle in [0.0, 0.7, 2.1, 4.0] {
            let d = kr / K;
            let z = [x[0] + d * f64::cos(angle), x[1] + d * f64::sin(angle)];
            worst = worst.max(check_funk_hecke(K, x, z, N).unwrap());
        }
    }
    outcome(worst <= 1e-10, format!("max_residual={worst:.3e} over k|x-z| in [0,10] and the J0 zero (tol 1e-10)"))
}

fn random_points(count: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..count).map(|_| [rng.gen_range(-4.0..=4.0), rng.gen_range(-4.0..=4.0)]).collect()
}

fn equivalence_chain() -> Outcome {
    let points = random_points(100);
    let oracle = check_equivalence_chain(&oracle_matrix(), &points);
    let star = check_equivalence_chain(&bie(ShapeKind::Star, NODES), &points);
    let peanut = check_equivalence_chain(&bie(ShapeKind::Peanut, NODES), &points);
    outcome(
        oracle <= 1e-6 && star.max(peanut) <= 0.05,
        format!("oracle_slack={oracle:.3e} (tol 1e-6) star_slack={star:.3e} peanut_slack={peanut:.3e} (tol 0.05)"),
    )
}

fn decay_rates() -> Outcome {
    let radii: Vec<f64> = (0..10).map(|i| 10.0 * 10f64.powf(i as f64 / 9.0)).collect();
    let mut pass = true;
    let mut detail = String::new();
    for kind in [ShapeKind::Star, ShapeKind::Peanut] {
        let c = curve(kind);
        let f = assemble_far_field_matrix(&c, K, 1024, NODES).unwrap();
        for (which, rho) in [(Indicator::Ip, 1.0), (Indicator::Ip, 2.0), (Indicator::Norm, 1.0), (Indicator::Norm, 2.0)] {
            let slope = check_decay_slope_for(&f, &c, which, rho, &radii, 32).unwrap();
            let expected = if which == Indicator::Ip { -rho } else { -rho / 2.0 };
            let ok = ((slope - expected) / expected).abs() <= 0.2;
            pass &= ok;
            detail.push_str(&format!(" {}/{which}/rho={rho}: {slope:.3} (want {expected})", kind.name()));
        }
    }
    outcome(pass, format!("slopes over r in [10,100]:{detail}"))
}

fn experiment_regressions() -> Outcome {
    let spec = GridSpec::default();
    let mut pass = true;
    let mut detail = String::new();
    for (kind, delta, ip_floor, norm_floor) in OVERLAP_FLOORS {
        let c = curve(kind);
        let region = Region::new(&c);
        let f = add_noise(&bie(kind, NODES), &NoiseModel::new(delta, 0).unwrap());
        let mut grids = Vec::new();
        for (which, rho, floor) in [(Indicator::Ip, 4.0, ip_floor), (Indicator::Norm, 8.0, norm_floor)] {
            let start = Instant::now();
            let grid = evaluate_grid(&f, &spec, rho, which).unwrap();
            let secs = start.elapsed().as_secs_f64();
            let (_, p, _) = grid.argmax();
            let inside = region.contains(p);
            let jaccard = reconstruction_overlap(&grid, &c, THRESHOLD).unwrap();
            let ok = inside && jaccard >= floor && secs <= 60.0;
            pass &= ok;
            detail.push_str(&format!(
                " {}/d={delta}/{which}: argmax_inside={inside} jaccard={jaccard:.3} (floor {floor}) time={secs:.2}s;",
                kind.name()
            ));
            grids.push(grid);
        }
        let rs = spearman(&grids[0].values, &grids[1].values);
        pass &= rs >= 0.95;
        detail.push_str(&format!(" spearman={rs:.4} (min 0.95);"));
    }
    outcome(pass, detail.trim().trim_end_matches(';').to_string())
}

fn partial_aperture() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for kind in [ShapeKind::Star, ShapeKind::Peanut] {
        let f = add_noise(&bie(kind, NODES), &NoiseModel::new(0.1, 0).unwrap());
        let masked = apply_mask(&f, &ApertureMask::quarter_aperture(N)).unwrap();
        let grid = evaluate_grid(&masked, &GridSpec::default(), 4.0, Indicator::Ip).unwrap();
        let (_, p, _) = grid.argmax();
        let dist = Region::new(&curve(kind)).distance(p);
        pass &= dist <= 0.5;
        detail.push_str(&format!(" {}: argmax=({:.3},{:.3}) distance={dist:.3} (tol 0.5)", kind.name(), p[0], p[1]));
    }
    outcome(pass, detail.trim().to_string())
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("config.toml");
    std::fs::write(&config, "[imaging]\ndelta = 0.02\nseed = 7\n").unwrap();
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = root.path().join(run);
        for cmd in ["forward", "image"] {
            let status = Command::new(env!("CARGO_BIN_EXE_plate-echo"))
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .arg(cmd)
                .output()
                .unwrap()
                .status;
            if !status.success() {
                return outcome(false, format!("`{cmd}` exited with {status}"));
            }
        }
        let files: Vec<Vec<u8>> = ["farfield.txt", "grid.csv", "grid.pgm"]
            .iter()
            .map(|name| std::fs::read(out.join(name)).unwrap())
            .collect();
        runs.push(files);
    }
    let same: Vec<bool> = (0..3).map(|i| runs[0][i] == runs[1][i]).collect();
    outcome(
        same.iter().all(|s| *s),
        format!("farfield.txt identical={} grid.csv identical={} grid.pgm identical={}", same[0], same[1], same[2]),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("disk oracle equivalence", disk_oracle_equivalence),
        ("operator identity", operator_identity),
        ("funk-hecke", funk_hecke),
        ("equivalence chain", equivalence_chain),
        ("decay rates", decay_rates),
        ("experiment regressions", experiment_regressions),
        ("partial aperture", partial_aperture),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += !o.pass as usize;
        println!("criterion {}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
