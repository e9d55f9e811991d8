//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use matrix_pressure::decomp::{block_triangularize, connecting_constant, is_irreducible, is_trivial, SearchOptions};
use matrix_pressure::ergodic::{block_lyapunov, lyapunov, variational_defect, ShiftMeasure};
use matrix_pressure::gibbs::{cesaro_shift_average, equilibrium_description, gibbs_ratio_stats, pressure_derivative_check, CylinderDistribution};
use matrix_pressure::pressure::{
    log_partition_sum, pressure_bounds, pressure_even_spectral, pressure_via_blocks, with_block_dominance, PressureOptions,
    DEFAULT_LIFT_BUDGET,
};
use matrix_pressure::svf::{affinity_dimension, exterior_identity_check, svf_submultiplicativity_check};
use matrix_pressure::tree::DEFAULT_BUDGET;
use matrix_pressure::{Matrix, MatrixFamily, Norm, Scalar, Word};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr_free::normal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Box–Muller, so the suite needs no extra distribution crate.
mod rand_distr_free {
    use rand::Rng;

    pub fn normal(rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let v: f64 = rng.gen();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("runtime {t:?} exceeds {limit:?}"))
}

fn diag_family() -> MatrixFamily {
    MatrixFamily::diagonal(&[&[1.0, 2.0], &[3.0, 2.0]])
}

fn shear_pair() -> MatrixFamily {
    MatrixFamily::real(&[&[&[1.0, 1.0], &[0.0, 1.0]], &[&[1.0, 0.0], &[1.0, 1.0]]])
}

fn dirac(symbols: &[usize]) -> ShiftMeasure {
    ShiftMeasure::periodic_dirac(Word::from_indices(symbols.to_vec()).unwrap()).unwrap()
}

/// Index of the 1×1 block whose first matrix equals `value`.
fn block_with_entry(dec: &matrix_pressure::decomp::BlockDecomposition, value: f64) -> Option<usize> {
    dec.diagonal_blocks.iter().position(|b| b.dim() == 1 && (b.matrix(0).get(0, 0).re.abs() - value).abs() < 1e-9)
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    Matrix::from_inner(DMatrix::from_fn(d, d, |_, _| Scalar::new(normal(rng), 0.0)))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let g = DMatrix::from_fn(d, d, |_, _| normal(rng));
    let q = g.qr().q();
    Matrix::from_inner(q.map(|x| Scalar::new(x, 0.0)))
}

fn remark_reproduction() -> Outcome {
    let start = Instant::now();
    let fam = diag_family();
    let dec = block_triangularize(&fam, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let b1 = block_with_entry(&dec, 1.0).ok_or("no block with entries (1,3)")?;
    let b2 = block_with_entry(&dec, 2.0).ok_or("no block with entries (2,2)")?;
    let tol = 1e-12;
    let check = |measure: &ShiftMeasure, m: f64, a1: f64, a2: f64, name: &str| -> Result<f64, String> {
        let r = block_lyapunov(&fam, &dec, measure, 8, Norm::Operator).map_err(|e| e.to_string())?;
        let block = |j| r.per_block.iter().find(|(k, _)| *k == j).map(|(_, l)| l.value).ok_or("block missing from Λ");
        let (x1, x2) = (block(b1)?, block(b2)?);
        ensure(
            (r.full.value - m).abs() <= tol && (x1 - a1).abs() <= tol && (x2 - a2).abs() <= tol,
            format!("{name}: M_*={} A1={x1} A2={x2}", r.full.value),
        )?;
        Ok(r.full.value)
    };
    check(&dirac(&[0]), LN_2, 0.0, LN_2, "δ₁")?;
    check(&dirac(&[1]), 3f64.ln(), 3f64.ln(), LN_2, "δ₂")?;
    let mix = ShiftMeasure::mixture(vec![(0.5, dirac(&[0])), (0.5, dirac(&[1]))]).map_err(|e| e.to_string())?;
    let m = check(&mix, 0.5 * 6f64.ln(), 0.5 * 3f64.ln(), LN_2, "mixture")?;
    ensure(m > (0.5 * 3f64.ln()).max(LN_2), "mixture exponent does not exceed the block maximum")?;
    within_time(start, Duration::from_secs(1))?;
    Ok(format!("M_*(mix) = {m:.15} = ½log 6"))
}

fn block_formula() -> Outcome {
    let start = Instant::now();
    let fam = diag_family();
    let dec = block_triangularize(&fam, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let opts = PressureOptions::default();
    let mut notes = Vec::new();
    for (q, exact) in [(0.5, (2.0 * 2f64.sqrt()).ln()), (1.0, 4f64.ln()), (2.0, 10f64.ln())] {
        let blocks = pressure_via_blocks(&fam, &dec, q, 14, Norm::Operator, &opts).map_err(|e| e.to_string())?;
        ensure(
            (blocks.combined.lower - exact).abs() <= 1e-12 && (blocks.combined.upper - exact).abs() <= 1e-12,
            format!("block route at q={q}: [{}, {}] vs {exact}", blocks.combined.lower, blocks.combined.upper),
        )?;
        let direct = pressure_bounds(&fam, q, 14, Norm::Operator, &opts).map_err(|e| e.to_string())?;
        ensure(direct.contains(exact), format!("direct interval at q={q} [{}, {}] misses {exact}", direct.lower, direct.upper))?;
        let raised = with_block_dominance(&direct, &blocks);
        ensure(raised.contains(exact), format!("raised interval at q={q} misses {exact}"))?;
        ensure(raised.width() <= 0.15, format!("width {} at q={q}", raised.width()))?;
        notes.push(format!("q={q}: width {:.3e} (direct {:.3})", raised.width(), direct.width()));
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(notes.join("; "))
}

fn kink() -> Outcome {
    let fam = diag_family();
    let dec = block_triangularize(&fam, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let b1 = block_with_entry(&dec, 1.0).ok_or("no block with entries (1,3)")?;
    let b2 = block_with_entry(&dec, 2.0).ok_or("no block with entries (2,2)")?;
    let opts = PressureOptions::default();
    let state_tv = |desc: &matrix_pressure::gibbs::EquilibriumDescription, j: usize, p: &[f64]| -> Result<f64, String> {
        let (_, mu) = desc.extremal_states.iter().find(|(k, _)| *k == j).ok_or("missing extremal state")?;
        let target = CylinderDistribution::bernoulli(p, 3).map_err(|e| e.to_string())?;
        mu.total_variation(&target).map_err(|e| e.to_string())
    };

    let at1 = equilibrium_description(&fam, &dec, 1.0, 12, 3, Norm::Operator, &opts).map_err(|e| e.to_string())?;
    let mut got = at1.achiever_blocks.clone();
    got.sort();
    let mut want = vec![b1, b2];
    want.sort();
    ensure(got == want, format!("achievers at q=1: {got:?}"))?;
    let tv1 = state_tv(&at1, b1, &[0.25, 0.75])?;
    let tv2 = state_tv(&at1, b2, &[0.5, 0.5])?;

    let at2 = equilibrium_description(&fam, &dec, 2.0, 12, 3, Norm::Operator, &opts).map_err(|e| e.to_string())?;
    ensure(at2.achiever_blocks == vec![b1], format!("achievers at q=2: {:?}", at2.achiever_blocks))?;
    let tv3 = state_tv(&at2, b1, &[0.1, 0.9])?;
    let tv = tv1.max(tv2).max(tv3);
    ensure(tv <= 0.05, format!("level-3 total variation {tv}"))?;

    let check = pressure_derivative_check(&fam, 1.0, 1e-3, 12, 3, Norm::Operator, Some(&dec), &opts).map_err(|e| e.to_string())?;
    let gap = check.right_slope - check.left_slope;
    let exact = 0.75 * 3f64.ln() - LN_2;
    ensure((gap - exact).abs() <= 5e-3, format!("slope gap {gap} vs {exact}"))?;
    Ok(format!("TV ≤ {tv:.2e}; slope gap {gap:.5} vs {exact:.5}"))
}

fn gibbs_property() -> Outcome {
    let start = Instant::now();
    let scalars = MatrixFamily::diagonal(&[&[1.0], &[3.0]]);
    let opts = PressureOptions::default();
    let p = pressure_bounds(&scalars, 1.0, 10, Norm::Operator, &opts).map_err(|e| e.to_string())?;
    let mu = cesaro_shift_average(&scalars, 1.0, 10, 5, Norm::Operator).map_err(|e| e.to_string())?;
    let g = gibbs_ratio_stats(&scalars, 1.0, &mu, &p, Norm::Operator).map_err(|e| e.to_string())?;
    ensure(
        (g.ratio_min - 1.0).abs() <= 1e-10 && (g.ratio_max - 1.0).abs() <= 1e-10,
        format!("scalar ratios in [{}, {}]", g.ratio_min, g.ratio_max),
    )?;

    let shear = shear_pair();
    let spread = |m: usize, n: usize| -> Result<f64, String> {
        let p = pressure_bounds(&shear, 1.0, n, Norm::Operator, &opts).map_err(|e| e.to_string())?;
        let mu = cesaro_shift_average(&shear, 1.0, n, m, Norm::Operator).map_err(|e| e.to_string())?;
        let g = gibbs_ratio_stats(&shear, 1.0, &mu, &p, Norm::Operator).map_err(|e| e.to_string())?;
        ensure(g.zero_mismatch_count == 0, "zero-mass mismatch")?;
        Ok(g.spread())
    };
    let s8 = spread(8, 16)?;
    let s6 = spread(6, 14)?;
    ensure(s8.is_finite() && s6.is_finite(), "infinite spread")?;
    let factor = s8.max(s6) / s8.min(s6);
    ensure(factor <= 2.0, format!("spread {s8} at m=8 vs {s6} at m=6"))?;
    within_time(start, Duration::from_secs(120))?;
    Ok(format!("shear spread {s8:.4} (m=8) vs {s6:.4} (m=6)"))
}

fn triviality() -> Outcome {
    let fam = MatrixFamily::real(&[&[&[0.0, 1.0], &[0.0, 0.0]], &[&[0.0, 2.0], &[0.0, 0.0]]]);
    let report = is_trivial(&fam, &SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(report.trivial, "Λ is not empty")?;
    for i in 0..2 {
        for j in 0..2 {
            let w = Word::from_indices(vec![i, j]).unwrap();
            ensure(fam.word_product(&w).unwrap().is_zero(), format!("product {w:?} is nonzero"))?;
        }
    }
    for q in [1.0, 2.0] {
        let p = pressure_bounds(&fam, q, 6, Norm::Operator, &PressureOptions::default()).map_err(|e| e.to_string())?;
        ensure(p.upper == f64::NEG_INFINITY && p.lower == f64::NEG_INFINITY, format!("P({q}) = [{}, {}]", p.lower, p.upper))?;
        let a2 = log_partition_sum(&fam, q, 2, Norm::Operator, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        ensure(a2 == f64::NEG_INFINITY, "a_2 is finite")?;
    }
    Ok("Λ = ∅, P = −∞".into())
}

fn decomposition_robustness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let upper = |rng: &mut ChaCha8Rng| {
        let mut m = DMatrix::from_fn(3, 3, |_, _| Scalar::new(normal(rng), 0.0));
        m[(1, 0)] = Scalar::new(0.0, 0.0);
        m[(2, 0)] = Scalar::new(0.0, 0.0);
        Matrix::from_inner(m)
    };
    let base = MatrixFamily::new(matrix_pressure::Field::Real, vec![upper(&mut rng), upper(&mut rng)]).map_err(|e| e.to_string())?;
    let lower = MatrixFamily::new(
        matrix_pressure::Field::Real,
        base.matrices().iter().map(|m| m.block(1..3, 1..3)).collect(),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        is_irreducible(&lower, &SearchOptions::default()).map_err(|e| e.to_string())?.is_irreducible(),
        "seeded lower block is reducible",
    )?;

    let (mut correct, mut worst) = (0, 0.0f64);
    for _ in 0..20 {
        let q = random_orthogonal(&mut rng, 3);
        let fam = base.conjugate_by(&q).map_err(|e| e.to_string())?;
        let dec = block_triangularize(&fam, &SearchOptions::default()).map_err(|e| e.to_string())?;
        let mut sizes = dec.block_sizes.clone();
        sizes.sort();
        if sizes == vec![1, 2] && dec.lambda.len() == 2 {
            correct += 1;
        }
        for (i, m) in fam.matrices().iter().enumerate() {
            worst = worst.max(dec.reconstruct(i).max_abs_diff(m) / m.max_abs_entry());
        }
        worst = worst.max(dec.residual);
    }
    ensure(correct >= 19, format!("{correct}/20 runs recovered the block structure"))?;
    ensure(worst <= 1e-8, format!("reconstruction residual {worst:e}"))?;
    Ok(format!("{correct}/20 correct, residual ≤ {worst:.1e}"))
}

fn spectral_oracle() -> Outcome {
    let shear = shear_pair();
    let oracle = pressure_even_spectral(&shear, 1, DEFAULT_LIFT_BUDGET).map_err(|e| e.to_string())?;
    let search = SearchOptions::default();
    let cert = is_irreducible(&shear, &search).map_err(|e| e.to_string())?;
    let est = connecting_constant(&shear, 6, Norm::Frobenius, &search).map_err(|e| e.to_string())?;
    let opts = PressureOptions::default().with_connecting(&cert, est).map_err(|e| e.to_string())?;
    let p = pressure_bounds(&shear, 2.0, 14, Norm::Frobenius, &opts).map_err(|e| e.to_string())?;
    ensure(p.contains(oracle), format!("oracle {oracle} outside [{}, {}]", p.lower, p.upper))?;
    ensure(p.width() <= 0.1, format!("width {} > 0.1", p.width()))?;
    let plain = pressure_bounds(&shear, 2.0, 14, Norm::Frobenius, &PressureOptions::default()).map_err(|e| e.to_string())?;
    ensure(plain.contains(oracle), "oracle outside the unconditional interval")?;
    Ok(format!(
        "oracle {oracle:.10} in [{:.6}, {:.6}], width {:.4}{}; unconditional width {:.4}",
        p.lower,
        p.upper,
        p.width(),
        if p.conditional { " (lower bound conditional on the connecting estimate)" } else { "" },
        plain.width()
    ))
}

fn gelfand() -> Outcome {
    let fam = MatrixFamily::real(&[&[&[1.0, 1.0], &[0.0, 1.0]]]);
    let p = pressure_bounds(&fam, 1.0, 128, Norm::Operator, &PressureOptions::default()).map_err(|e| e.to_string())?;
    ensure(p.upper <= 0.04, format!("upper {}", p.upper))?;
    ensure(p.lower == 0.0, format!("lower {}", p.lower))?;
    ensure(p.contains(0.0), "0 not bracketed")?;
    Ok(format!("[{}, {:.6}]", p.lower, p.upper))
}

fn svf_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut gap = 0.0f64;
    for d in [3, 4] {
        let mut count = 0;
        while count < 50 {
            let m = random_matrix(&mut rng, d);
            if m.singular_values().last().copied().unwrap_or(0.0) < 1e-6 {
                continue;
            }
            count += 1;
            for q in 1..=3 {
                gap = gap.max(exterior_identity_check(&m, q).map_err(|e| e.to_string())?.gap);
            }
        }
    }
    ensure(gap <= 1e-9, format!("exterior identity gap {gap:e}"))?;

    let fam = MatrixFamily::new(matrix_pressure::Field::Real, (0..3).map(|_| random_matrix(&mut rng, 3)).collect()).map_err(|e| e.to_string())?;
    let violation = svf_submultiplicativity_check(&fam, 100, 4).map_err(|e| e.to_string())?;
    ensure(violation <= 1e-10, format!("φ-submultiplicativity violation {violation:e}"))?;

    let t0 = Instant::now();
    let three = MatrixFamily::diagonal(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]]);
    let a3 = affinity_dimension(&three, 1e-7, 8).map_err(|e| e.to_string())?;
    let exact = 3f64.ln() / LN_2;
    ensure(
        (a3.s_low - exact).abs() <= 1e-6 && (a3.s_high - exact).abs() <= 1e-6,
        format!("three halves: [{}, {}] vs {exact}", a3.s_low, a3.s_high),
    )?;
    within_time(t0, Duration::from_secs(10))?;
    let two = MatrixFamily::diagonal(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let a2 = affinity_dimension(&two, 1e-7, 8).map_err(|e| e.to_string())?;
    ensure((a2.s_low - 1.0).abs() <= 1e-6 && (a2.s_high - 1.0).abs() <= 1e-6, format!("two halves: [{}, {}]", a2.s_low, a2.s_high))?;
    Ok(format!("gap {gap:.1e}, violation {violation:.1e}, dim {:.9}", a3.s_high))
}

fn variational() -> Outcome {
    let families = [
        ("diag", diag_family()),
        ("shear", shear_pair()),
        ("scalars", MatrixFamily::diagonal(&[&[1.0], &[3.0]])),
        ("rotation-shear", MatrixFamily::real(&[&[&[0.0, -1.0], &[1.0, 0.0]], &[&[2.0, 1.0], &[0.0, 0.5]]])),
    ];
    let measures = [
        "bernoulli:0.5,0.5",
        "bernoulli:0.2,0.8",
        "bernoulli:0.9,0.1",
        "dirac:1",
        "dirac:2",
        "dirac:1,2",
        "dirac:1,1,2",
        "mix:0.5*dirac:1+0.5*dirac:2",
        "mix:0.3*bernoulli:0.5,0.5+0.7*dirac:1,2",
    ];
    let opts = PressureOptions::default();
    let (mut cases, mut worst) = (0, f64::INFINITY);
    for (name, fam) in &families {
        for q in [0.5, 1.0, 2.0, 3.0] {
            for norm in [Norm::Operator, Norm::Frobenius] {
                let est = pressure_bounds(fam, q, 10, norm, &opts).map_err(|e| e.to_string())?;
                for text in measures {
                    let mu: ShiftMeasure = text.parse().map_err(|e: matrix_pressure::Error| e.to_string())?;
                    let defect = variational_defect(fam, &mu, q, &est).map_err(|e| e.to_string())?;
                    ensure(defect >= -1e-9, format!("{name}, {text}, q={q}, {norm:?}: defect {defect}"))?;
                    // The closed-form exponent must satisfy the same inequality.
                    let exact = lyapunov(fam, &mu, 10, norm).map_err(|e| e.to_string())?.value;
                    if exact.is_finite() {
                        ensure(q * exact + mu.entropy() <= est.upper + 1e-9, format!("{name}, {text}, q={q}: exact exponent violates"))?;
                    }
                    worst = worst.min(defect);
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases, smallest defect {worst:.3e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exponents of the diagonal pair and its Dirac mixture", remark_reproduction),
        ("block formula for the pressure", block_formula),
        ("kink and extremal states at q = 1", kink),
        ("Gibbs ratios", gibbs_property),
        ("trivial family", triviality),
        ("decomposition under random conjugation", decomposition_robustness),
        ("spectral lift oracle", spectral_oracle),
        ("single-matrix Gelfand bracket", gelfand),
        ("singular value function suite", svf_suite),
        ("variational inequality", variational),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({elapsed:.2}s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({elapsed:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
