//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, even on success.

use std::sync::OnceLock;
use std::time::Instant;

use curve_reconcile::covariance::{
    estimate, ledoit_wolf_parts, schafer_strimmer_lambda, w_glasso, w_sample, CovOptions,
    GlassoOptions, ResidualPanel,
};
use curve_reconcile::hierarchy::{
    aggregate_bottom, build_hierarchy_vector, disaggregate, structure_matrices, summation_matrix,
    to_representation, Curve,
};
use curve_reconcile::market::{
    bin_volumes, build_step_curve, make_price_classes, tick_to_price, BidLadder, Side,
};
use curve_reconcile::reconcile::{
    covariance_in_representation, mapping_bottom_up, mapping_for, mapping_optimal, reconcile,
    reconcile_in_representation, Method, MethodInputs,
};
use curve_reconcile::simulation::{error_metrics, run_experiment, SimConfig, SimResult, Transform};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

const REPS: usize = 1000;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

/// Random SPD matrix `G G' / m + 0.05 I` with entries of order one.
fn random_spd(r: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let g = normal_matrix(r, m, m);
    let mut w = &g * g.transpose() / m as f64;
    for i in 0..m {
        w[(i, i)] += 0.05;
    }
    w
}

fn random_forecast(r: &mut ChaCha8Rng, n: usize) -> curve_reconcile::hierarchy::HierarchyVector {
    let v: Vec<f64> = (0..2 * n - 1)
        .map(|_| {
            let z: f64 = StandardNormal.sample(r);
            5.0 * z
        })
        .collect();
    curve_reconcile::hierarchy::HierarchyVector::new(v).unwrap()
}

fn identity_error(m: &DMatrix<f64>) -> f64 {
    (m - DMatrix::identity(m.nrows(), m.ncols())).amax()
}

// ---------------------------------------------------------------- 1

fn worked_example() -> Check {
    let a = Curve::new(vec![1.0, 4.0, 6.0, 7.0, 10.0, 15.0]).map_err(|e| e.to_string())?;
    let rows: [(usize, [f64; 6]); 3] = [
        (1, [1.0, 3.0, 2.0, 1.0, 3.0, 5.0]),
        (3, [-3.0, -2.0, 6.0, 1.0, 3.0, 5.0]),
        (6, [-3.0, -2.0, -1.0, -3.0, -5.0, 15.0]),
    ];
    for (k, expected) in rows {
        let b = disaggregate(&a, k).map_err(|e| e.to_string())?;
        ensure(b.values() == expected, || {
            format!("b_[{k}] = {:?}", b.values())
        })?;
        let y = build_hierarchy_vector(&a, k).map_err(|e| e.to_string())?;
        ensure(y.bottom() == expected, || {
            format!("bottom of y_[{k}] = {:?}", y.bottom())
        })?;
    }
    let y1 = build_hierarchy_vector(&a, 1).unwrap();
    ensure(
        y1.values() == [15.0, 10.0, 7.0, 6.0, 4.0, 1.0, 3.0, 2.0, 1.0, 3.0, 5.0],
        || format!("y = {:?}", y1.values()),
    )?;
    let y6 = build_hierarchy_vector(&a, 6).unwrap();
    ensure(
        y6.values() == [10.0, 7.0, 6.0, 4.0, 1.0, -3.0, -2.0, -1.0, -3.0, -5.0, 15.0],
        || format!("y_[6] = {:?}", y6.values()),
    )?;
    Ok("rows k = 1, 3, 6 bit-exact".into())
}

// ---------------------------------------------------------------- 2

fn structure_identity() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 2..=32 {
        for k in 1..=n {
            let m = structure_matrices(n, k).map_err(|e| e.to_string())?;
            let err = (m.recomposed_s() - &m.s).amax();
            ensure(err <= 1e-12, || {
                format!("n = {n}, k = {k}: max error {err:e}")
            })?;
            worst = worst.max(err);
            count += 1;
        }
    }
    Ok(format!("{count} (n, k) pairs, max error {worst:e}"))
}

// ---------------------------------------------------------------- 3

const OPTIMAL: [Method; 7] = [
    Method::OpOls,
    Method::OpLambda,
    Method::OpWls,
    Method::OpCov,
    Method::OpShrink,
    Method::OpLedoitWolf,
    Method::OpGlasso,
];

/// Residual panel with a common factor, so estimators see real correlation.
fn factor_panel(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ResidualPanel {
    let z = normal_matrix(r, rows, cols);
    let f = normal_matrix(r, rows, 1);
    let loadings: Vec<f64> = (0..cols).map(|_| r.random_range(0.2..1.0)).collect();
    ResidualPanel::new(DMatrix::from_fn(rows, cols, |t, j| {
        z[(t, j)] + loadings[j] * f[(t, 0)]
    }))
    .unwrap()
}

fn projection_and_coherency() -> Check {
    let mut r = rng(3);
    let mut worst_ps: f64 = 0.0;
    let mut worst_coh: f64 = 0.0;
    let mut instances = 0;
    for n in [4, 16, 64] {
        let s = summation_matrix(n, 1).unwrap();
        let mut check = |p: &curve_reconcile::reconcile::MappingMatrix,
                         y: &curve_reconcile::hierarchy::HierarchyVector|
         -> Result<(), String> {
            let ps = identity_error(&(p.matrix() * &s));
            ensure(ps <= 1e-10, || {
                format!("n = {n}, {}: |PS - I| = {ps:e}", p.method())
            })?;
            let rec = reconcile(p, &s, y).map_err(|e| e.to_string())?;
            let coh = rec.coherency_error(&s);
            ensure(coh <= 1e-10, || {
                format!("n = {n}, {}: coherency {coh:e}", p.method())
            })?;
            worst_ps = worst_ps.max(ps);
            worst_coh = worst_coh.max(coh);
            instances += 1;
            Ok(())
        };
        let y = random_forecast(&mut r, n);
        check(&mapping_bottom_up(n).unwrap(), &y)?;
        for _ in 0..100 {
            let w = random_spd(&mut r, 2 * n - 1);
            let y = random_forecast(&mut r, n);
            for m in OPTIMAL {
                check(&mapping_optimal(&s, &w, m).map_err(|e| e.to_string())?, &y)?;
            }
        }
        // Each estimator on residual panels long enough for a full-rank sample covariance.
        let panels = if n == 64 { 1 } else { 5 };
        for _ in 0..panels {
            let panel = factor_panel(&mut r, 3 * (2 * n - 1), 2 * n - 1);
            let y = random_forecast(&mut r, n);
            for m in OPTIMAL {
                let w = estimate(m, n, Some(&panel), &CovOptions::default())
                    .map_err(|e| e.to_string())?;
                let inputs = MethodInputs {
                    forecast: &y,
                    history: None,
                    covariance: Some(&w.w),
                };
                check(&mapping_for(m, inputs).map_err(|e| e.to_string())?, &y)?;
            }
        }
    }
    Ok(format!(
        "{instances} mappings, max |PS - I| {worst_ps:e}, max coherency error {worst_coh:e}"
    ))
}

// ---------------------------------------------------------------- 4

fn representation_invariance() -> Check {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = r.random_range(2..=32);
        let k = r.random_range(1..=n);
        let y = random_forecast(&mut r, n);
        let s = summation_matrix(n, 1).unwrap();
        let yk = to_representation(&y, k).map_err(|e| e.to_string())?;
        let ws = [
            DMatrix::identity(2 * n - 1, 2 * n - 1),
            random_spd(&mut r, 2 * n - 1),
        ];
        for w in ws {
            let canonical =
                reconcile(&mapping_optimal(&s, &w, Method::OpCov).unwrap(), &s, &y).unwrap();
            let w_k = covariance_in_representation(&w, n, k).map_err(|e| e.to_string())?;
            let rep =
                reconcile_in_representation(&yk, &w_k, Method::OpCov).map_err(|e| e.to_string())?;
            let a = DVector::from_column_slice(&canonical.y_tilde);
            let b = DVector::from_column_slice(&rep.canonical);
            let rel = (&a - &b).norm() / a.norm();
            ensure(rel <= 1e-8, || {
                format!("instance {i} (n = {n}, k = {k}): relative gap {rel:e}")
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "100 instances x (W = I, random SPD W), max relative gap {worst:e}"
    ))
}

// ---------------------------------------------------------------- 5-8

const COMPARED: [Method; 7] = [
    Method::Bu,
    Method::TdFo,
    Method::AdFo,
    Method::OpOls,
    Method::OpWls,
    Method::OpLambda,
    Method::OpShrink,
];

fn sim(n: usize, history: usize, phi: f64, transform: Transform) -> SimResult {
    let mut cfg = SimConfig::new(n, history, phi);
    cfg.transform = transform;
    cfg.replications = REPS;
    cfg.seed = 20240601;
    cfg.methods = COMPARED.to_vec();
    cfg.threads = 1;
    run_experiment(&cfg).expect("simulation runs")
}

static SIM_16_64: OnceLock<SimResult> = OnceLock::new();
static SIM_4_256: OnceLock<SimResult> = OnceLock::new();
static SIM_SQUARE: OnceLock<SimResult> = OnceLock::new();

fn sim_16_64() -> &'static SimResult {
    SIM_16_64.get_or_init(|| sim(16, 64, 0.7, Transform::None))
}

fn sim_4_256() -> &'static SimResult {
    SIM_4_256.get_or_init(|| sim(4, 256, 0.7, Transform::None))
}

/// Squared process with an AR coefficient of 0.7 before squaring.
fn sim_square() -> &'static SimResult {
    SIM_SQUARE.get_or_init(|| sim(16, 64, 0.49, Transform::Square))
}

fn rmse_table(res: &SimResult, methods: &[Method]) -> String {
    let mut parts = vec![format!("base {:.3}", res.base.rmse)];
    parts.extend(
        methods
            .iter()
            .map(|m| format!("{m} {:.3}", res.methods[m].rmse)),
    );
    parts.join(", ")
}

fn within(value: f64, lo: f64, hi: f64) -> bool {
    value >= lo && value <= hi
}

fn simulation_n16() -> Check {
    let res = sim_16_64();
    let (lo, hi) = (2.26 * 0.93, 2.27 * 1.07);
    let close = [
        Method::Bu,
        Method::AdFo,
        Method::OpOls,
        Method::OpWls,
        Method::OpLambda,
        Method::OpShrink,
    ];
    ensure(within(res.base.rmse, lo, hi), || {
        format!("base {:.4} outside [{lo:.4}, {hi:.4}]", res.base.rmse)
    })?;
    for m in close {
        let v = res.methods[&m].rmse;
        ensure(within(v, lo, hi), || {
            format!("{m} {v:.4} outside [{lo:.4}, {hi:.4}]")
        })?;
    }
    let ratio = res.methods[&Method::TdFo].rmse / res.base.rmse;
    ensure(ratio >= 10.0, || format!("tdfo / base = {ratio:.2} < 10"))?;
    Ok(format!(
        "{}; tdfo/base {ratio:.1}",
        rmse_table(res, &COMPARED)
    ))
}

fn simulation_n4() -> Check {
    let res = sim_4_256();
    let (lo, hi) = (1.32 * 0.93, 1.32 * 1.07);
    let close = [
        Method::Bu,
        Method::AdFo,
        Method::OpOls,
        Method::OpWls,
        Method::OpLambda,
        Method::OpShrink,
    ];
    ensure(within(res.base.rmse, lo, hi), || {
        format!("base {:.4} outside [{lo:.4}, {hi:.4}]", res.base.rmse)
    })?;
    for m in close {
        let v = res.methods[&m].rmse;
        ensure(within(v, lo, hi), || {
            format!("{m} {v:.4} outside [{lo:.4}, {hi:.4}]")
        })?;
    }
    let td = res.methods[&Method::TdFo].rmse;
    ensure(within(td, 1.4, 2.5), || {
        format!("tdfo {td:.4} outside [1.4, 2.5]")
    })?;
    Ok(rmse_table(res, &COMPARED))
}

fn squared_process() -> Check {
    let res = sim_square();
    let (lo, hi) = (6.22 * 0.93, 6.22 * 1.07);
    ensure(within(res.base.rmse, lo, hi), || {
        format!("base {:.4} outside [{lo:.4}, {hi:.4}]", res.base.rmse)
    })?;
    let ratio = res.methods[&Method::TdFo].rmse / res.base.rmse;
    ensure(ratio <= 1.3, || format!("tdfo / base = {ratio:.3} > 1.3"))?;
    // Reading the AR coefficient as sqrt(0.7) before squaring, for reference only.
    let literal = sim(16, 64, 0.7, Transform::Square);
    Ok(format!(
        "AR 0.7 before squaring: base {:.3}, tdfo {:.3}, ratio {ratio:.3} \
         [info: AR sqrt(0.7) before squaring gives base {:.3}, tdfo {:.3}]",
        res.base.rmse,
        res.methods[&Method::TdFo].rmse,
        literal.base.rmse,
        literal.methods[&Method::TdFo].rmse
    ))
}

fn outlier_filter() -> Check {
    let mut parts = Vec::new();
    for (name, res) in [
        ("n16 N64", sim_16_64()),
        ("n4 N256", sim_4_256()),
        ("squared", sim_square()),
    ] {
        let td = &res.methods[&Method::TdFo];
        if res.outlier_count > 0 {
            let filtered = td
                .filtered_rmse
                .ok_or_else(|| format!("{name}: every replication is an outlier"))?;
            ensure(filtered < td.rmse, || {
                format!(
                    "{name}: filtered {filtered:.4} >= unfiltered {:.4}",
                    td.rmse
                )
            })?;
            parts.push(format!(
                "{name}: {} outliers, tdfo {:.3} -> {filtered:.3}",
                res.outlier_count, td.rmse
            ));
        } else {
            parts.push(format!("{name}: no outliers"));
        }
    }
    ensure(sim_16_64().outlier_count > 0, || {
        "n16 N64 produced no outliers to filter".into()
    })?;
    Ok(parts.join("; "))
}

// ---------------------------------------------------------------- 9

fn panels_6x3() -> [Vec<[f64; 3]>; 2] {
    [
        vec![
            [0.5, 1.2, -0.3],
            [-1.1, 0.4, 0.8],
            [0.9, -0.7, 0.1],
            [0.2, 1.5, -1.2],
            [-0.6, -0.2, 0.6],
            [1.3, 0.3, -0.9],
        ],
        vec![
            [2.0, 1.8, -0.4],
            [-0.5, -0.7, 0.9],
            [1.4, 1.2, -1.3],
            [-1.7, -1.5, 0.2],
            [0.3, 0.5, 0.1],
            [-0.8, -0.6, 1.1],
        ],
    ]
}

fn to_panel(rows: &[[f64; 3]]) -> ResidualPanel {
    ResidualPanel::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

/// Schafer-Strimmer intensity from its definition, in matrix form:
/// standardize with the T-1 divisor, form the per-row products
/// `w_kij = z_ki z_kj`, take `r_ij = T/(T-1) mean_k w_kij` and
/// `Var(r_ij) = T/(T-1)^3 sum_k (w_kij - mean w_ij)^2`.
fn schafer_definition(rows: &[[f64; 3]]) -> f64 {
    let x = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let t = x.nrows() as f64;
    let mut z = x.clone();
    for mut c in z.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
        let sd = (c.norm_squared() / (t - 1.0)).sqrt();
        c /= sd;
    }
    let (mut var_sum, mut r2_sum) = (0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let w = z.column(i).component_mul(&z.column(j));
            let wbar = w.mean();
            let r = t / (t - 1.0) * wbar;
            var_sum += t / (t - 1.0).powi(3) * w.map(|v| (v - wbar).powi(2)).sum();
            r2_sum += r * r;
        }
    }
    (var_sum / r2_sum).clamp(0.0, 1.0)
}

/// Ledoit-Wolf constant-correlation intensity from its definition with raw
/// (uncentered) second moments, written in matrix form.
fn ledoit_wolf_definition(rows: &[[f64; 3]]) -> f64 {
    let x = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let t = x.nrows() as f64;
    let s = x.transpose() * &x / t;
    let sd = DVector::from_fn(3, |i, _| s[(i, i)].sqrt());
    let mut rbar = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                rbar += s[(i, j)] / (sd[i] * sd[j]) / 6.0;
            }
        }
    }
    let f = DMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            s[(i, i)]
        } else {
            rbar * sd[i] * sd[j]
        }
    });
    let gamma = (&f - &s).norm_squared();
    // pi_ij = mean_t (x_ti x_tj - s_ij)^2, theta_ii,ij = mean_t (x_ti^2 - s_ii)(x_ti x_tj - s_ij)
    let dev = |row: usize, i: usize, j: usize| x[(row, i)] * x[(row, j)] - s[(i, j)];
    let mean_over_rows = |g: &dyn Fn(usize) -> f64| (0..x.nrows()).map(g).sum::<f64>() / t;
    let mut pi = 0.0;
    let mut rho = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let pij = mean_over_rows(&|k| dev(k, i, j).powi(2));
            pi += pij;
            if i == j {
                rho += pij;
            } else {
                let th_ii_ij = mean_over_rows(&|k| dev(k, i, i) * dev(k, i, j));
                let th_jj_ij = mean_over_rows(&|k| dev(k, j, j) * dev(k, i, j));
                rho += rbar / 2.0 * (sd[j] / sd[i] * th_ii_ij + sd[i] / sd[j] * th_jj_ij);
            }
        }
    }
    ((pi - rho) / gamma / t).clamp(0.0, 1.0)
}

fn covariance_oracles() -> Check {
    let mut details = Vec::new();
    for (idx, rows) in panels_6x3().iter().enumerate() {
        let panel = to_panel(rows);
        let lambda = schafer_strimmer_lambda(&panel).map_err(|e| e.to_string())?;
        let lambda_ref = schafer_definition(rows);
        ensure((lambda - lambda_ref).abs() <= 1e-10, || {
            format!("panel {idx}: lambda {lambda} vs definition {lambda_ref}")
        })?;
        let delta = ledoit_wolf_parts(&panel, &CovOptions::default())
            .map_err(|e| e.to_string())?
            .delta;
        let delta_ref = ledoit_wolf_definition(rows);
        ensure((delta - delta_ref).abs() <= 1e-10, || {
            format!("panel {idx}: delta {delta} vs definition {delta_ref}")
        })?;
        details.push(format!("panel {idx}: lambda {lambda:.6}, delta {delta:.6}"));

        let s = w_sample(&panel, &CovOptions::default()).unwrap().w;
        let opts = GlassoOptions {
            rho: 0.0,
            ..Default::default()
        };
        let w = w_glasso(&s, &opts).map_err(|e| e.to_string())?.w;
        let gap = (&w - &s).amax();
        ensure(gap <= 1e-6, || {
            format!("panel {idx}: glasso rho = 0 differs from sample by {gap:e}")
        })?;

        let max_off = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)].abs())
            .fold(0.0, f64::max);
        let tol = opts.tol;
        let w = w_glasso(
            &s,
            &GlassoOptions {
                rho: max_off,
                ..opts
            },
        )
        .map_err(|e| e.to_string())?
        .w;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    ensure(w[(i, j)].abs() <= tol, || {
                        format!(
                            "panel {idx}: glasso rho = max|s_ij| leaves w[{i},{j}] = {:e}",
                            w[(i, j)]
                        )
                    })?;
                }
            }
        }
    }
    Ok(details.join("; ") + "; glasso limits hold")
}

// ---------------------------------------------------------------- 10

/// Bid ladder with prices on the 0.1 grid and volumes that are multiples of 1/4,
/// so every partial sum is exact in binary floating point.
fn synthetic_ladder(r: &mut ChaCha8Rng, side: Side, len: usize) -> BidLadder {
    let entries: Vec<(f64, f64)> = (0..len)
        .map(|_| {
            let tick = r.random_range(-5000..=30000);
            let quarters = r.random_range(1..=4000) as f64;
            (tick_to_price(tick), quarters / 4.0)
        })
        .collect();
    BidLadder::new(side, &entries).unwrap()
}

fn market_mass_and_metrics() -> Check {
    let mut r = rng(10);
    let mut pipelines = 0;
    for _ in 0..200 {
        for side in [Side::Supply, Side::Demand] {
            let len = r.random_range(5..80);
            let bids = synthetic_ladder(&mut r, side, len);
            let curve = build_step_curve(&bids).map_err(|e| e.to_string())?;
            let m = r.random_range(2..=20);
            let grid = match make_price_classes(&curve, m) {
                Ok(g) => g,
                Err(curve_reconcile::Error::DegenerateCurve) => continue,
                Err(e) => return Err(e.to_string()),
            };
            let b = bin_volumes(&bids, &grid).map_err(|e| e.to_string())?;
            let total = bids.total_volume();
            let binned: f64 = b.values().iter().sum();
            ensure(binned == total, || {
                format!("binned mass {binned} != bid mass {total}")
            })?;
            let a = aggregate_bottom(&b).map_err(|e| e.to_string())?;
            let top = *a.values().last().unwrap();
            ensure(top == total, || {
                format!("aggregated top {top} != bid mass {total}")
            })?;
            for (ai, edge) in a.values().iter().zip(grid.edges()) {
                let on_curve = curve.value_at(edge);
                ensure(*ai == on_curve, || {
                    format!("aggregate {ai} != curve {on_curve} at {edge}")
                })?;
            }

            let n = b.len();
            if n < 2 {
                continue;
            }
            let y = build_hierarchy_vector(&a, 1).map_err(|e| e.to_string())?;
            let s = summation_matrix(n, 1).unwrap();
            let rec =
                reconcile(&mapping_bottom_up(n).unwrap(), &s, &y).map_err(|e| e.to_string())?;
            ensure(rec.y_tilde == y.values(), || {
                "bottom-up changed a coherent hierarchy".into()
            })?;
            ensure(rec.y_tilde[0] == total, || {
                format!("reconciled top {} != {total}", rec.y_tilde[0])
            })?;
            ensure(rec.b_tilde.iter().sum::<f64>() == total, || {
                "reconciled bottom mass changed".into()
            })?;
            pipelines += 1;
        }
    }
    ensure(pipelines >= 300, || {
        format!("only {pipelines} non-degenerate pipelines")
    })?;

    let actual = DMatrix::from_fn(3, 24, |d, h| (d * 24 + h) as f64 * 0.5 - 7.0);
    let (mae, rmse) = error_metrics(&actual, &actual).map_err(|e| e.to_string())?;
    ensure(mae == 0.0 && rmse == 0.0, || {
        format!("identical forecast gives ({mae}, {rmse})")
    })?;
    let shifted = actual.add_scalar(2.0);
    let (mae, rmse) = error_metrics(&actual, &shifted).map_err(|e| e.to_string())?;
    ensure(mae == 2.0 && rmse == 2.0, || {
        format!("constant +2 error gives ({mae}, {rmse})")
    })?;
    let one_day = DMatrix::zeros(1, 24);
    let alternating = DMatrix::from_fn(1, 24, |_, h| if h % 2 == 0 { 1.0 } else { -1.0 });
    let (mae, rmse) = error_metrics(&one_day, &alternating).map_err(|e| e.to_string())?;
    ensure(mae == 1.0 && rmse == 1.0, || {
        format!("alternating +-1 error gives ({mae}, {rmse})")
    })?;
    Ok(format!(
        "{pipelines} bid pipelines conserve mass exactly; error metric examples hold"
    ))
}

fn main() {
    let checks: [Criterion; 10] = [
        (1, "disaggregation worked example", worked_example),
        (2, "structure identity", structure_identity),
        (3, "projection and coherency", projection_and_coherency),
        (4, "representation invariance", representation_invariance),
        (5, "simulation n=16 N=64", simulation_n16),
        (6, "simulation n=4 N=256", simulation_n4),
        (7, "squared process n=16 N=64", squared_process),
        (8, "outlier filter", outlier_filter),
        (9, "covariance oracles", covariance_oracles),
        (10, "market mass and error metrics", market_mass_and_metrics),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
