//! Self-verification suites behind `kronarray verify`.
//!
//! Each check reduces to a nonnegative measured value compared against a
//! tolerance: it passes when `value <= tolerance * tolerance_scale`.
//! Checks are independent and may run concurrently; the report keeps a
//! fixed order.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::array::{rmul, unrvec, DenseArray, Shape};
use crate::exec::Execution;
use crate::gaussian::{ArrayNormalParams, DEFAULT_ORACLE_CAP};
use crate::kron::{self, FactorSet, Matrix};
use crate::skew_normal::{self, msn_log_density_2d, ArraySkewNormalParams};
use crate::spectral::{array_least_squares, kron_pca_with};
use crate::stats::{self, kolmogorov_survival, ks_one_sample, ks_two_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub level: Level,
    pub seed: u64,
    /// Multiplies every tolerance. Any negative value makes every check
    /// fail (negative control).
    pub tolerance_scale: f64,
    pub exec: Execution,
}

impl VerifyConfig {
    pub fn new(level: Level, seed: u64) -> Self {
        VerifyConfig {
            level,
            seed,
            tolerance_scale: 1.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub metric: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub trials: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Ctx {
    full: bool,
    seed: u64,
    exec: Execution,
}

impl Ctx {
    fn n(&self, quick: usize, full: usize) -> usize {
        if self.full {
            full
        } else {
            quick
        }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// Measured value, tolerance, trial count.
type Outcome = (f64, f64, usize);

struct Suite {
    name: &'static str,
    metric: &'static str,
    run: fn(&Ctx) -> Outcome,
}

const SUITES: &[Suite] = &[
    Suite {
        name: "rvec_roundtrip",
        metric: "max abs error",
        run: rvec_roundtrip,
    },
    Suite {
        name: "rmul_kron_equivalence",
        metric: "max rel error",
        run: rmul_kron_equivalence,
    },
    Suite {
        name: "rmul_composition",
        metric: "max rel error",
        run: rmul_composition,
    },
    Suite {
        name: "rmul_orthogonal_norm",
        metric: "max rel error",
        run: orthogonal_norm,
    },
    Suite {
        name: "ikron_mixed_product",
        metric: "max abs error",
        run: mixed_product,
    },
    Suite {
        name: "ikron_inverse_family",
        metric: "max abs error",
        run: inverse_family,
    },
    Suite {
        name: "ikron_det_trace",
        metric: "max rel error",
        run: det_trace,
    },
    Suite {
        name: "ikron_permutation",
        metric: "max abs error",
        run: permutation,
    },
    Suite {
        name: "normal_vs_monolinear",
        metric: "max abs log-density error",
        run: normal_vs_monolinear,
    },
    Suite {
        name: "normal_affine_closure",
        metric: "max abs error",
        run: affine_closure,
    },
    Suite {
        name: "normal_sampler_moments",
        metric: "max |cov error| / SE",
        run: normal_moments,
    },
    Suite {
        name: "skew_reduction",
        metric: "max abs error",
        run: skew_reduction,
    },
    Suite {
        name: "skew_sign_flip",
        metric: "max abs error",
        run: skew_sign_flip,
    },
    Suite {
        name: "skew_msn_crosscheck",
        metric: "max abs error",
        run: msn_crosscheck,
    },
    Suite {
        name: "skew_normalization",
        metric: "max |estimate - 1| / SE",
        run: skew_normalization,
    },
    Suite {
        name: "skew_sampler_ks",
        metric: "2nd largest KS lambda (one failure allowed)",
        run: skew_sampler_ks,
    },
    Suite {
        name: "pca_spectrum",
        metric: "max rel error",
        run: pca_spectrum,
    },
    Suite {
        name: "lstsq_oracle",
        metric: "max abs error",
        run: lstsq_oracle,
    },
    Suite {
        name: "lstsq_optimality",
        metric: "perturbations beating the solution",
        run: lstsq_optimality,
    },
];

/// Names of all checks, in report order.
pub fn check_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

pub fn run(config: &VerifyConfig) -> Report {
    let ctx = Ctx {
        full: config.level == Level::Full,
        seed: config.seed,
        exec: config.exec,
    };
    let checks = config.exec.map_slice(SUITES, |s| {
        let (value, tolerance, trials) = (s.run)(&ctx);
        let limit = tolerance * config.tolerance_scale;
        // a negative limit (including -0.0) can never be met
        let passed = value.is_finite() && limit.is_sign_positive() && value <= limit;
        Check {
            name: s.name,
            metric: s.metric,
            value,
            tolerance,
            trials,
            passed,
        }
    });
    Report {
        level: config.level,
        seed: config.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

// ---- instance generators ----

fn random_dims(rng: &mut ChaCha8Rng, max_d: usize) -> Vec<usize> {
    loop {
        let ways = rng.random_range(1..=4);
        let dims: Vec<usize> = (0..ways).map(|_| rng.random_range(1..=5)).collect();
        if dims.iter().product::<usize>() <= max_d {
            return dims;
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn random_factor(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    random_matrix(rng, m, m) * 0.5 + Matrix::identity(m, m) * 1.5
}

fn random_array(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseArray {
    DenseArray::from_fn(Shape::new(dims.to_vec()).expect("valid dims"), |_| {
        rng.random_range(-2.0..2.0)
    })
}

fn random_normal(rng: &mut ChaCha8Rng, dims: &[usize]) -> ArrayNormalParams {
    let mean = random_array(rng, dims);
    let factors = FactorSet::new(dims.iter().map(|&m| random_factor(rng, m)).collect()).expect("well conditioned");
    ArrayNormalParams::new(mean, factors).expect("shapes agree")
}

fn random_skew(rng: &mut ChaCha8Rng, dims: &[usize]) -> ArraySkewNormalParams {
    let base = random_normal(rng, dims);
    let delta = random_array(rng, dims).scale(1.5);
    ArraySkewNormalParams::new(base, delta).expect("shapes agree")
}

fn orthogonal(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    random_matrix(rng, m, m).qr().q()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

// ---- array algebra ----

fn rvec_roundtrip(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(1);
    let trials = ctx.n(50, 300);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 64);
        let x = random_array(&mut rng, &dims);
        let y = unrvec(x.rvec().to_vec(), x.shape().clone()).expect("same length");
        worst = worst.max(x.distance(&y).unwrap_or(f64::INFINITY));
        for (k, idx) in x.shape().indices().enumerate() {
            if x.shape().offset(&idx) != Ok(k) {
                worst = f64::INFINITY;
            }
        }
    }
    (worst, 0.0, trials)
}

fn rmul_kron_equivalence(ctx: &Ctx) -> Outcome {
    let trials = ctx.n(100, 500);
    let errs = ctx.exec.map_range(trials, |t| {
        let mut rng = ctx.rng(1000 + t as u64);
        let dims = random_dims(&mut rng, 256);
        let x = random_array(&mut rng, &dims);
        let bs: Vec<Matrix> = dims
            .iter()
            .map(|&m| {
                let q = rng.random_range(1..=4);
                random_matrix(&mut rng, q, m)
            })
            .collect();
        let arr = rmul(&bs, &x).expect("conformable");
        let mono = kron::ikron_chain(&bs).expect("non-empty") * DVector::from_column_slice(x.rvec());
        rel_err(arr.rvec(), mono.as_slice())
    });
    (errs.into_iter().fold(0.0, f64::max), 1e-12, trials)
}

fn rmul_composition(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(2);
    let trials = ctx.n(50, 200);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 128);
        let x = random_array(&mut rng, &dims);
        let mids: Vec<usize> = dims.iter().map(|_| rng.random_range(1..=4)).collect();
        let bs: Vec<Matrix> = dims
            .iter()
            .zip(&mids)
            .map(|(&m, &q)| random_matrix(&mut rng, q, m))
            .collect();
        let as_: Vec<Matrix> = mids
            .iter()
            .map(|&q| {
                let r = rng.random_range(1..=4);
                random_matrix(&mut rng, r, q)
            })
            .collect();
        let nested = rmul(&as_, &rmul(&bs, &x).expect("conformable")).expect("conformable");
        let products: Vec<Matrix> = as_.iter().zip(&bs).map(|(a, b)| a * b).collect();
        let direct = rmul(&products, &x).expect("conformable");
        worst = worst.max(rel_err(nested.rvec(), direct.rvec()));
    }
    (worst, 1e-12, trials)
}

fn orthogonal_norm(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(3);
    let trials = ctx.n(50, 200);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 256);
        let x = random_array(&mut rng, &dims);
        let qs: Vec<Matrix> = dims.iter().map(|&m| orthogonal(&mut rng, m)).collect();
        let y = rmul(&qs, &x).expect("conformable");
        let n = x.square_norm();
        worst = worst.max((y.square_norm() - n).abs() / n.max(f64::MIN_POSITIVE));
    }
    (worst, 1e-10, trials)
}

// ---- inverse Kronecker identities ----

fn mixed_product(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(4);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (a1, a2) = (random_matrix(&mut rng, 3, 3), random_matrix(&mut rng, 3, 3));
        let (b1, b2) = (random_matrix(&mut rng, 2, 2), random_matrix(&mut rng, 2, 2));
        let lhs = kron::ikron(&a1, &b1) * kron::ikron(&a2, &b2);
        let rhs = kron::ikron(&(&a1 * &a2), &(&b1 * &b2));
        worst = worst.max((lhs - rhs).amax());
        // bilinearity and scalar factoring
        let lhs = kron::ikron(&(&a1 + &a2), &b1);
        let rhs = kron::ikron(&a1, &b1) + kron::ikron(&a2, &b1);
        worst = worst.max((lhs - rhs).amax());
        let lhs = kron::ikron(&(&a1 * 1.7), &(&b2 * -0.3));
        let rhs = kron::ikron(&a1, &b2) * (1.7 * -0.3);
        worst = worst.max((lhs - rhs).amax());
        worst = worst.max(kron::ikron(&Matrix::zeros(3, 3), &b1).amax());
    }
    (worst, 1e-10, trials)
}

fn inverse_family(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(5);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let a = random_factor(&mut rng, 3);
        let b = random_factor(&mut rng, 2);
        let composite = kron::ikron(&a, &b);
        let inv = kron::ikron_inverse(&a, &b).expect("nonsingular");
        worst = worst.max((&inv * &composite - Matrix::identity(6, 6)).amax());
        let p = kron::ikron_pinv(&a, &b).expect("svd");
        worst = worst.max((p - kron::pinv(&composite).expect("svd")).amax());
        let ta = random_matrix(&mut rng, 4, 2) + Matrix::identity(4, 2);
        let tb = random_matrix(&mut rng, 3, 2) + Matrix::identity(3, 2);
        let l = kron::ikron_l_inverse(&ta, &tb).expect("full rank");
        let direct = kron::l_inverse(&kron::ikron(&ta, &tb)).expect("full rank");
        worst = worst.max((l - direct).amax());
    }
    (worst, 1e-9, trials)
}

fn det_trace(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(6);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let fs = vec![
            random_factor(&mut rng, 2),
            random_factor(&mut rng, 2),
            random_factor(&mut rng, 3),
        ];
        let (d, t) = kron::ikron_det_trace(&fs).expect("square");
        let full = kron::ikron_chain(&fs).expect("non-empty");
        let fd = full.clone().lu().determinant();
        worst = worst
            .max((d - fd).abs() / fd.abs())
            .max((t - full.trace()).abs() / full.trace().abs());
    }
    (worst, 1e-10, trials)
}

fn permutation(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(7);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (p, q, r, s) = (
            rng.random_range(1..5),
            rng.random_range(1..5),
            rng.random_range(1..5),
            rng.random_range(1..5),
        );
        let a = random_matrix(&mut rng, p, q);
        let b = random_matrix(&mut rng, r, s);
        let lhs = kron::ikron(&a, &b);
        let rhs = kron::commutation_matrix(r, p) * kron::kron(&a, &b) * kron::commutation_matrix(q, s);
        worst = worst.max((lhs - rhs).amax());
    }
    (worst, 1e-12, trials)
}

// ---- array normal ----

fn normal_vs_monolinear(ctx: &Ctx) -> Outcome {
    let trials = ctx.n(60, 200);
    let errs = ctx.exec.map_range(trials, |t| {
        let mut rng = ctx.rng(2000 + t as u64);
        let dims = random_dims(&mut rng, 64);
        let p = random_normal(&mut rng, &dims);
        let x = random_array(&mut rng, &dims);
        let mono = p.to_monolinear(DEFAULT_ORACLE_CAP).expect("small");
        (p.log_density(&x).expect("shape") - mono.log_density(x.rvec()).expect("shape")).abs()
    });
    (errs.into_iter().fold(0.0, f64::max), 1e-9, trials)
}

fn affine_closure(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(8);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 64);
        let p = random_normal(&mut rng, &dims);
        let bs: Vec<Matrix> = dims.iter().map(|&m| random_factor(&mut rng, m)).collect();
        let k = random_array(&mut rng, &dims);
        let q = p.affine(&bs, &k).expect("nonsingular");
        let x = random_array(&mut rng, &dims);
        let y = rmul(&bs, &x).expect("conformable").add(&k).expect("shape");
        let jac = FactorSet::new(bs).expect("nonsingular").log_abs_det_chain();
        let err = (q.log_density(&y).expect("shape") - (p.log_density(&x).expect("shape") - jac)).abs();
        worst = worst.max(err);
    }
    (worst, 1e-9, trials)
}

/// Largest standardized deviation of the empirical covariance of `rvec`
/// draws from `Λ`, using the Gaussian SE `sqrt((Λ_aa Λ_bb + Λ_ab²)/n)`.
pub fn covariance_z_max(draws: &[DenseArray], lambda: &nalgebra::DMatrix<f64>, mean: &[f64]) -> f64 {
    let d = mean.len();
    let n = draws.len() as f64;
    let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
    for x in draws {
        let c = DVector::from_iterator(d, x.rvec().iter().zip(mean).map(|(v, m)| v - m));
        cov += &c * c.transpose();
    }
    cov /= n;
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let se = ((lambda[(a, a)] * lambda[(b, b)] + lambda[(a, b)].powi(2)) / n).sqrt();
            worst = worst.max((cov[(a, b)] - lambda[(a, b)]).abs() / se);
        }
    }
    worst
}

fn normal_moments(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(9);
    let n = ctx.n(20_000, 100_000);
    let p = random_normal(&mut rng, &[2, 2]);
    let mono = p.to_monolinear(DEFAULT_ORACLE_CAP).expect("small");
    let draws = p.sample_seeded(ctx.seed.wrapping_add(9), n, ctx.exec);
    (covariance_z_max(&draws, &mono.lambda, p.mean().rvec()), 5.0, n)
}

// ---- array skew normal ----

fn skew_reduction(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(10);
    let trials = ctx.n(30, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 64);
        let base = random_normal(&mut rng, &dims);
        let p = ArraySkewNormalParams::new(base.clone(), DenseArray::zeros(base.shape().clone())).expect("shape");
        let x = random_array(&mut rng, &dims);
        worst = worst.max((p.log_density(&x).expect("shape") - base.log_density(&x).expect("shape")).abs());
    }
    (worst, 1e-13, trials)
}

fn skew_sign_flip(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(11);
    let trials = ctx.n(30, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 64);
        let p = random_skew(&mut rng, &dims);
        let x = random_array(&mut rng, &dims);
        let m = p.base().mean();
        let mirrored = m.sub(&x.sub(m).expect("shape")).expect("shape");
        let flipped = ArraySkewNormalParams::new(p.base().clone(), p.delta().scale(-1.0)).expect("shape");
        worst = worst.max((p.log_density(&x).expect("shape") - flipped.log_density(&mirrored).expect("shape")).abs());
    }
    (worst, 1e-12, trials)
}

fn msn_crosscheck(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(12);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (k, n) = (rng.random_range(1..4), rng.random_range(1..4));
        let g = random_matrix(&mut rng, k, k);
        let a = &g * g.transpose() + Matrix::identity(k, k);
        let h = random_matrix(&mut rng, n, n);
        let b = &h * h.transpose() + Matrix::identity(n, n);
        let (x, m, delta) = (
            random_matrix(&mut rng, k, n),
            random_matrix(&mut rng, k, n),
            random_matrix(&mut rng, k, n) * 2.0,
        );
        let to_arr = |mm: &Matrix| DenseArray::from_fn(Shape::new(vec![k, n]).expect("dims"), |i| mm[(i[0], i[1])]);
        let p = ArraySkewNormalParams::new(
            ArrayNormalParams::new(to_arr(&m), FactorSet::new(vec![a.clone(), b.clone()]).expect("spd"))
                .expect("shape"),
            to_arr(&delta),
        )
        .expect("shape");
        let v = msn_log_density_2d(&x, &m, &a, &b, &delta).expect("conformable");
        worst = worst.max((v - p.log_density(&to_arr(&x)).expect("shape")).abs());
    }
    (worst, 1e-12, trials)
}

fn skew_normalization(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(13);
    let sets = ctx.n(2, 5);
    let n = ctx.n(20_000, 100_000);
    let mut worst = 0.0f64;
    for s in 0..sets {
        let p = random_skew(&mut rng, &[2, 2]);
        let (est, se) = p.importance_normalization(ctx.seed.wrapping_add(100 + s as u64), n, ctx.exec);
        worst = worst.max((est - 1.0).abs() / se);
    }
    (worst, 3.0, sets)
}

/// `λ` with `P(K > λ) = alpha`.
pub fn kolmogorov_critical(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn stephens_lambda(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    (s + 0.12 + 0.11 / s) * d
}

fn skew_sampler_ks(ctx: &Ctx) -> Outcome {
    let n = ctx.n(2_000, 10_000);
    let mut lambdas = Vec::new();
    // sampler cores vs the univariate law
    let shape = Shape::new(vec![2, 2]).expect("dims");
    let deltas = DenseArray::from_vec(shape.clone(), vec![-2.0, 0.0, 0.5, 3.0]).expect("len");
    let p = ArraySkewNormalParams::new(ArrayNormalParams::standard(shape), deltas).expect("shape");
    let cores = skew_normal::sample_cores(&p, ctx.seed.wrapping_add(14), n);
    for cell in 0..4 {
        let dl = p.delta().rvec()[cell];
        let xs: Vec<f64> = cores.iter().map(|c| c.rvec()[cell]).collect();
        let out = ks_one_sample(&xs, |z| stats::skew_normal_cdf(z, dl));
        lambdas.push(stephens_lambda(out.statistic, n as f64));
    }
    // sampler vs rejection oracle on a (2,2) instance, per standardized cell
    let mut rng = ctx.rng(15);
    let q = random_skew(&mut rng, &[2, 2]);
    let m = ctx.n(1_000, 4_000);
    let oracle = q.rejection_sample_oracle(&mut rng, m).expect("small d");
    let direct = q.sample_seeded(ctx.seed.wrapping_add(15), m, ctx.exec);
    let std =
        |xs: &[DenseArray]| -> Vec<DenseArray> { xs.iter().map(|x| q.base().standardize(x).expect("shape")).collect() };
    let (zo, zd) = (std(&oracle.draws), std(&direct));
    for cell in 0..4 {
        let a: Vec<f64> = zo.iter().map(|z| z.rvec()[cell]).collect();
        let b: Vec<f64> = zd.iter().map(|z| z.rvec()[cell]).collect();
        let out = ks_two_sample(&a, &b);
        lambdas.push(stephens_lambda(out.statistic, (m * m) as f64 / (2 * m) as f64));
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[1], kolmogorov_critical(0.01), lambdas.len())
}

// ---- spectral ----

fn pca_spectrum(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(16);
    let trials = ctx.n(20, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let dims = random_dims(&mut rng, 64);
        let p = random_normal(&mut rng, &dims);
        let lambda = p.to_monolinear(DEFAULT_ORACLE_CAP).expect("small").lambda;
        let pca = kron_pca_with(p.factors(), Execution::Sequential).expect("nonsingular");
        let mut dense: Vec<f64> = SymmetricEigen::new(lambda.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        let norm = lambda.norm();
        for (k, c) in pca.components.iter().enumerate() {
            worst = worst.max((c.eigenvalue - dense[k]).abs() / dense[k].abs());
            let v = DVector::from_vec(pca.materialize(k, DEFAULT_ORACLE_CAP).expect("small"));
            worst = worst.max((&lambda * &v - &v * c.eigenvalue).norm() / norm);
        }
        worst = worst.max((pca.total_variance - lambda.trace()).abs() / lambda.trace());
    }
    (worst, 1e-9, trials)
}

fn lstsq_instance(rng: &mut ChaCha8Rng) -> (Vec<Matrix>, DenseArray) {
    let ways = rng.random_range(1..=3);
    let cols: Vec<usize> = (0..ways).map(|_| rng.random_range(1..=3)).collect();
    let rows: Vec<usize> = cols.iter().map(|&c| c + rng.random_range(0..=2)).collect();
    let factors = rows.iter().zip(&cols).map(|(&r, &c)| tall_factor(rng, r, c)).collect();
    (factors, random_array(rng, &rows))
}

/// Random full-column-rank factor with condition number at most 100, so that
/// absolute agreement with an SVD oracle is a meaningful test.
fn tall_factor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    loop {
        let a = random_matrix(rng, r, c) + Matrix::identity(r, c);
        let sv = a.singular_values();
        if sv.max() <= 100.0 * sv.min() {
            return a;
        }
    }
}

fn lstsq_oracle(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(17);
    let trials = ctx.n(30, 100);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (a, y) = lstsq_instance(&mut rng);
        let xh = array_least_squares(&a, &y).expect("full rank");
        let c = kron::ikron_chain(&a).expect("non-empty");
        let oracle = kron::pinv(&c).expect("svd") * DVector::from_column_slice(y.rvec());
        worst = worst.max(
            xh.rvec()
                .iter()
                .zip(oracle.iter())
                .fold(0.0f64, |m, (u, v)| m.max((u - v).abs())),
        );
        let resid = DVector::from_column_slice(y.sub(&rmul(&a, &xh).expect("conformable")).expect("shape").rvec());
        worst = worst.max((c.transpose() * resid).amax());
    }
    (worst, 1e-9, trials)
}

fn lstsq_optimality(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(18);
    let trials = ctx.n(30, 100);
    let mut beaten = 0usize;
    for _ in 0..trials {
        let (a, y) = lstsq_instance(&mut rng);
        let xh = array_least_squares(&a, &y).expect("full rank");
        let best = y
            .sub(&rmul(&a, &xh).expect("conformable"))
            .expect("shape")
            .square_norm();
        let dir = random_array(&mut rng, xh.shape().dims());
        let dx = dir.scale(1e-3 / dir.square_norm().sqrt());
        let moved = xh.add(&dx).expect("shape");
        let r = y
            .sub(&rmul(&a, &moved).expect("conformable"))
            .expect("shape")
            .square_norm();
        if r < best {
            beaten += 1;
        }
    }
    (beaten as f64, 0.0, trials)
}
