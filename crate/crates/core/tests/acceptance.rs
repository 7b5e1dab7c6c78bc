//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kronarray::kron::{self, commutation_matrix, ikron, ikron_chain, kron as kron_product};
use kronarray::stats::{ks_one_sample, ks_two_sample, skew_normal_cdf};
use kronarray::{
    array_least_squares, parameter_savings, rmul, ArrayNormalParams, ArraySkewNormalParams, DenseArray, Execution,
    FactorSet, Matrix, Shape,
};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_0000 + tag)
}

fn dims_up_to(rng: &mut ChaCha8Rng, max_d: usize) -> Vec<usize> {
    loop {
        let ways = rng.random_range(1..=4);
        let dims: Vec<usize> = (0..ways).map(|_| rng.random_range(1..=6)).collect();
        if dims.iter().product::<usize>() <= max_d {
            return dims;
        }
    }
}

fn shape(dims: &[usize]) -> Shape {
    Shape::new(dims.to_vec()).unwrap()
}

fn mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn well_conditioned(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    mat(rng, m, m) * 0.5 + Matrix::identity(m, m) * 1.5
}

fn array(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseArray {
    DenseArray::from_fn(shape(dims), |_| rng.random_range(-2.0..2.0))
}

fn normal(rng: &mut ChaCha8Rng, dims: &[usize]) -> ArrayNormalParams {
    let mean = array(rng, dims);
    let factors = FactorSet::new(dims.iter().map(|&m| well_conditioned(rng, m)).collect()).unwrap();
    ArrayNormalParams::new(mean, factors).unwrap()
}

fn dense_lambda(p: &ArrayNormalParams) -> DMatrix<f64> {
    let c = ikron_chain(p.factors().factors()).unwrap();
    &c * c.transpose()
}

/// Multivariate normal log-density by Cholesky of the assembled covariance.
fn dense_logpdf(mu: &[f64], lambda: &DMatrix<f64>, x: &[f64]) -> f64 {
    let d = mu.len();
    let chol = lambda.clone().cholesky().expect("positive definite");
    let r = DVector::from_iterator(d, x.iter().zip(mu).map(|(a, b)| a - b));
    let w = chol.l().solve_lower_triangular(&r).unwrap();
    let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    -0.5 * (w.norm_squared() + log_det + d as f64 * (2.0 * std::f64::consts::PI).ln())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn rmul_kron_equivalence() -> Verdict {
    let mut rng = rng(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let dims = dims_up_to(&mut rng, 256);
        let bs: Vec<Matrix> = dims
            .iter()
            .map(|&m| {
                let rows = rng.random_range(1..=6);
                mat(&mut rng, rows, m)
            })
            .collect();
        let x = array(&mut rng, &dims);
        let lhs = DVector::from_column_slice(rmul(&bs, &x).unwrap().rvec());
        let rhs = ikron_chain(&bs).unwrap() * DVector::from_column_slice(x.rvec());
        worst = worst.max((&lhs - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE));
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst < 1e-12 && elapsed < Duration::from_secs(5),
        format!("max rel err {worst:.3e} (< 1e-12), {elapsed:.2?} (< 5s)"),
    )
}

fn normal_vs_monolinear() -> Verdict {
    let mut rng = rng(2);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let dims = dims_up_to(&mut rng, 64);
        let p = normal(&mut rng, &dims);
        let x = array(&mut rng, &dims);
        let oracle = dense_logpdf(p.mean().rvec(), &dense_lambda(&p), x.rvec());
        worst = worst.max((p.log_density(&x).unwrap() - oracle).abs());
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst < 1e-9 && elapsed < Duration::from_secs(5),
        format!("max |diff| {worst:.3e} (< 1e-9), {elapsed:.2?} (< 5s)"),
    )
}

fn skew_reduction() -> Verdict {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dims = dims_up_to(&mut rng, 64);
        let base = normal(&mut rng, &dims);
        let skew = ArraySkewNormalParams::new(base.clone(), DenseArray::zeros(shape(&dims))).unwrap();
        let x = array(&mut rng, &dims);
        worst = worst.max((skew.log_density(&x).unwrap() - base.log_density(&x).unwrap()).abs());
    }
    Verdict::new(worst <= 1e-13, format!("max |diff| {worst:.3e} (<= 1e-13)"))
}

fn skew(rng: &mut ChaCha8Rng, dims: &[usize]) -> ArraySkewNormalParams {
    let base = normal(rng, dims);
    let delta = DenseArray::from_fn(shape(dims), |_| rng.random_range(-3.0..3.0));
    ArraySkewNormalParams::new(base, delta).unwrap()
}

fn skew_normalization() -> Verdict {
    let mut rng = rng(4);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..5 {
        let p = skew(&mut rng, &[2, 2]);
        let (est, se) = p.importance_normalization(400 + k, 100_000, Execution::default());
        worst = worst.max((est - 1.0).abs() / se);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst <= 3.0 && elapsed < Duration::from_secs(30),
        format!("max |est-1|/SE {worst:.2} (<= 3), {elapsed:.2?} (< 30s)"),
    )
}

fn standardized_cell(p: &ArraySkewNormalParams, draws: &[DenseArray], cell: usize) -> Vec<f64> {
    draws
        .iter()
        .map(|x| p.base().standardize(x).unwrap().rvec()[cell])
        .collect()
}

fn sampler_validity() -> Verdict {
    const ALPHA: f64 = 0.01;
    let deltas = [-2.0, 0.0, 0.5, 3.0];
    let mut rng = rng(5);
    let mut failures = Vec::new();
    let mut tests = 0;

    // four (2,2) instances, each holding every δ once: 16 one-sample tests
    for rot in 0..4 {
        let base = normal(&mut rng, &[2, 2]);
        let delta = DenseArray::from_vec(shape(&[2, 2]), (0..4).map(|c| deltas[(c + rot) % 4]).collect()).unwrap();
        let p = ArraySkewNormalParams::new(base, delta.clone()).unwrap();
        let draws = p.sample_seeded(500 + rot as u64, 10_000, Execution::default());
        for cell in 0..4 {
            let dl = delta.rvec()[cell];
            let ks = ks_one_sample(&standardized_cell(&p, &draws, cell), |z| skew_normal_cdf(z, dl));
            tests += 1;
            if !ks.passes(ALPHA) {
                failures.push(format!("one-sample δ={dl} p={:.4}", ks.p_value));
            }
        }
    }

    // sample() vs the rejection oracle, cell by cell: 4 two-sample tests
    let p = skew(&mut rng, &[2, 2]);
    let direct = p.sample_seeded(599, 10_000, Execution::default());
    let oracle = p.rejection_sample_oracle(&mut rng, 10_000).unwrap().draws;
    for cell in 0..4 {
        let a: Vec<f64> = direct.iter().map(|x| x.rvec()[cell]).collect();
        let b: Vec<f64> = oracle.iter().map(|x| x.rvec()[cell]).collect();
        let ks = ks_two_sample(&a, &b);
        tests += 1;
        if !ks.passes(ALPHA) {
            failures.push(format!("two-sample cell {cell} p={:.4}", ks.p_value));
        }
    }
    Verdict::new(
        failures.len() <= 1,
        format!(
            "{} of {tests} KS tests rejected at α=0.01 (<= 1) {failures:?}",
            failures.len()
        ),
    )
}

fn gaussian_moments() -> Verdict {
    let mut rng = rng(6);
    let p = normal(&mut rng, &[2, 2]);
    let lambda = dense_lambda(&p);
    let n = 100_000;
    let draws = p.sample_seeded(600, n, Execution::default());
    let mu = DVector::from_column_slice(p.mean().rvec());
    let mut cov = DMatrix::<f64>::zeros(4, 4);
    for x in &draws {
        let c = DVector::from_column_slice(x.rvec()) - &mu;
        cov += &c * c.transpose();
    }
    cov /= n as f64;
    let mut worst = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let se = ((lambda[(a, a)] * lambda[(b, b)] + lambda[(a, b)].powi(2)) / n as f64).sqrt();
            worst = worst.max((cov[(a, b)] - lambda[(a, b)]).abs() / se);
        }
    }
    Verdict::new(worst <= 5.0, format!("max |cov-Λ|/SE {worst:.2} (<= 5)"))
}

fn kron_pca() -> Verdict {
    let mut rng = rng(7);
    let (mut val_err, mut vec_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let dims = dims_up_to(&mut rng, 64);
        let fs = FactorSet::new(dims.iter().map(|&m| well_conditioned(&mut rng, m)).collect()).unwrap();
        let c = ikron_chain(fs.factors()).unwrap();
        let lambda = &c * c.transpose();
        let mut dense: Vec<f64> = SymmetricEigen::new(lambda.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        let pca = kronarray::kron_pca(&fs).unwrap();
        if pca.components.len() != dense.len() {
            return Verdict::new(false, "component count differs from d");
        }
        let norm = lambda.norm();
        for (k, comp) in pca.components.iter().enumerate() {
            val_err = val_err.max((comp.eigenvalue - dense[k]).abs() / dense[k].abs());
            let v = DVector::from_vec(pca.materialize(k, 64).unwrap());
            vec_err = vec_err.max((&lambda * &v - &v * comp.eigenvalue).norm() / norm);
        }
    }
    Verdict::new(
        val_err <= 1e-9 && vec_err <= 1e-9,
        format!("eigenvalue rel err {val_err:.3e}, residual/‖Λ‖ {vec_err:.3e} (both <= 1e-9)"),
    )
}

fn savings() -> Verdict {
    let (k, f, _) = parameter_savings(&shape(&[3, 4, 5]));
    Verdict::new((k, f) == (31, 1830), format!("(3,4,5) -> ({k}, {f})"))
}

/// Tall factor with condition number at most 100.
fn tall(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    loop {
        let a = mat(rng, r, c);
        let sv = a.singular_values();
        if sv.max() <= 100.0 * sv.min() {
            return a;
        }
    }
}

fn least_squares() -> Verdict {
    let mut rng = rng(9);
    let (mut oracle_err, mut beaten) = (0.0f64, 0usize);
    for _ in 0..100 {
        let ways = rng.random_range(1..=3);
        let cols: Vec<usize> = (0..ways).map(|_| rng.random_range(1..=3)).collect();
        let rows: Vec<usize> = cols.iter().map(|&q| q + rng.random_range(0..=2)).collect();
        let a: Vec<Matrix> = rows.iter().zip(&cols).map(|(&r, &q)| tall(&mut rng, r, q)).collect();
        let y = array(&mut rng, &rows);
        let xh = array_least_squares(&a, &y).unwrap();

        let c = ikron_chain(&a).unwrap();
        let oracle = c.clone().pseudo_inverse(1e-13).unwrap() * DVector::from_column_slice(y.rvec());
        let diff = DVector::from_column_slice(xh.rvec()) - &oracle;
        oracle_err = oracle_err.max(diff.amax());

        let resid = |x: &DenseArray| y.sub(&rmul(&a, x).unwrap()).unwrap().square_norm();
        let best = resid(&xh);
        for _ in 0..100 {
            let dir = DenseArray::from_fn(shape(&cols), |_| rng.random_range(-1.0..1.0));
            let dx = dir.scale(1e-3 / dir.square_norm().sqrt());
            if resid(&xh.add(&dx).unwrap()) < best {
                beaten += 1;
            }
        }
    }
    Verdict::new(
        oracle_err <= 1e-9 && beaten == 0,
        format!("max |x̂-pinv·y| {oracle_err:.3e} (<= 1e-9), {beaten} perturbations improved the fit (0)"),
    )
}

fn identity_suite() -> Verdict {
    let mut rng = rng(10);
    let mut notes = Vec::new();
    let mut ok = true;
    let mut record = |name: &str, err: f64, tol: f64| {
        ok &= err <= tol;
        notes.push(format!("{name} {err:.1e}"));
    };

    let (mut mixed, mut bilin, mut perm, mut inv, mut pinv, mut linv, mut det, mut zero) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (a1, a2) = (mat(&mut rng, 3, 3), mat(&mut rng, 3, 3));
        let (b1, b2) = (mat(&mut rng, 2, 2), mat(&mut rng, 2, 2));
        mixed = mixed.max(max_abs(
            &(ikron(&a1, &b1) * ikron(&a2, &b2) - ikron(&(&a1 * &a2), &(&b1 * &b2))),
        ));

        let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        bilin = bilin.max(max_abs(&(ikron(&(&a1 + &a2), &b1) - ikron(&a1, &b1) - ikron(&a2, &b1))));
        bilin = bilin.max(max_abs(
            &(ikron(&(&a1 * alpha), &(&b1 * beta)) - ikron(&a1, &b1) * (alpha * beta)),
        ));
        zero = zero.max(max_abs(&ikron(&Matrix::zeros(3, 3), &b1)) + max_abs(&ikron(&a1, &Matrix::zeros(2, 2))));

        // ikron(A,B) = K(r,p)·(A⊗B)·K(q,s) for A p×q, B r×s
        let (p, q, r, s) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let (a, b) = (mat(&mut rng, p, q), mat(&mut rng, r, s));
        let permuted = commutation_matrix(r, p) * kron_product(&a, &b) * commutation_matrix(q, s);
        perm = perm.max(max_abs(&(ikron(&a, &b) - permuted)));

        let (fa, fb) = (well_conditioned(&mut rng, 3), well_conditioned(&mut rng, 2));
        let dense_inv = ikron(&fa, &fb).try_inverse().unwrap();
        inv = inv.max(max_abs(&(kron::ikron_inverse(&fa, &fb).unwrap() - &dense_inv)));
        let (ta, tb) = (mat(&mut rng, 4, 2), mat(&mut rng, 3, 2));
        let dense = ikron(&ta, &tb);
        let dense_pinv = dense.clone().pseudo_inverse(1e-13).unwrap();
        pinv = pinv.max(max_abs(&(kron::ikron_pinv(&ta, &tb).unwrap() - &dense_pinv)));
        // full column rank: the l-inverse is the pseudo-inverse
        linv = linv.max(max_abs(&(kron::ikron_l_inverse(&ta, &tb).unwrap() - &dense_pinv)));

        let (dt, tr) = kron::ikron_det_trace(&[fa.clone(), fb.clone()]).unwrap();
        let chain = ikron(&fa, &fb);
        let want_det = chain.determinant();
        let want_tr = chain.trace();
        det = det
            .max((dt - want_det).abs() / want_det.abs())
            .max((tr - want_tr).abs() / want_tr.abs().max(1.0));
    }
    record("mixed-product", mixed, 1e-10);
    record("bilinearity", bilin, 1e-12);
    record("zero", zero, 0.0);
    record("permutation", perm, 1e-12);
    record("inverse", inv, 1e-10);
    record("pinv", pinv, 1e-10);
    record("l-inverse", linv, 1e-10);
    record("det/trace", det, 1e-10);

    // associativity of the chain fold and the nonsingularity-iff-factors rule
    let fs: Vec<Matrix> = (2..=4).map(|m| mat(&mut rng, m, m)).collect();
    let left = ikron_chain(&fs).unwrap();
    let right = ikron(&fs[0], &ikron(&fs[1], &fs[2]));
    record("associativity", max_abs(&(left - right)), 1e-12);
    let singular = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    let rejected = FactorSet::new(vec![Matrix::identity(3, 3), singular]).is_err();
    if !rejected {
        ok = false;
        notes.push("singular factor accepted".into());
    }
    Verdict::new(ok, notes.join(", "))
}

fn cli_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_kronarray");
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("draws{run}.json"));
        let status = Command::new(bin)
            .args([
                "sample",
                "--params",
                &format!("{fixtures}/skew_2x2.json"),
                "--skew",
                "--n",
                "300",
            ])
            .args(["--seed", "42", "-o"])
            .arg(&path)
            .status()
            .unwrap();
        if !status.success() {
            return Verdict::new(false, format!("sample exited with {status}"));
        }
        outputs.push(std::fs::read(&path).unwrap());
    }
    let identical = outputs[0] == outputs[1];

    let start = Instant::now();
    let verify = Command::new(bin)
        .args(["verify", "--level", "quick", "--seed", "7"])
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    Verdict::new(
        identical && verify.status.success() && elapsed < Duration::from_secs(10),
        format!(
            "sample byte-identical: {identical}; verify quick exit {:?} in {elapsed:.2?} (< 10s)",
            verify.status.code()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 rmul vs Kronecker chain", rmul_kron_equivalence),
        ("2 array normal vs dense oracle", normal_vs_monolinear),
        ("3 skew normal reduction", skew_reduction),
        ("4 skew normal normalization", skew_normalization),
        ("5 skew sampler validity", sampler_validity),
        ("6 normal sampler moments", gaussian_moments),
        ("7 Kronecker PCA", kron_pca),
        ("8 parameter savings", savings),
        ("9 array least squares", least_squares),
        ("10 inverse-Kronecker identities", identity_suite),
        ("11 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let v = run();
        println!(
            "{} criterion {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.passed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
