//! The κ constants of an inclusion and the four transform inequality
//! suites: the two-sided transform norm bound, the support and entropy
//! uncertainty principles, and the convolution norm bound. Every check
//! reports a signed margin; a margin ≥ −tol is a pass, so violations stay
//! visible instead of panicking inside numerics.

use rand::Rng;

use crate::fourier::{convolve_neg, convolve_pos, fourier, inv_fourier, BoxElement, BoxSign};
use crate::mmalg::blocks::block_decompose;
use crate::mmalg::functionals::entropy_functional;
use crate::mmalg::functionals::support_size;
use crate::mmalg::linalg::{dagger, mat_mul};
use crate::mmalg::random::rng_for;
use crate::tower::TowerLike;
use crate::{Result, TowerError};

/// One verified inequality instance or suite: its name, the exponents in
/// play, the worst witness seen, and the signed margin (≥ −tol is a pass).
#[derive(Clone, Debug)]
pub struct InequalityMargin {
    pub name: String,
    /// Box index the inequality was evaluated at.
    pub n: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    /// Description of the sample attaining the margin.
    pub witness: String,
    pub margin: f64,
    /// Number of samples folded into this record.
    pub samples: usize,
}

impl InequalityMargin {
    pub fn pass(&self, tol: f64) -> bool {
        self.margin.is_finite() && self.margin >= -tol
    }

    fn seed_record(name: &str, n: usize, p: Option<f64>, q: Option<f64>, r: Option<f64>) -> Self {
        InequalityMargin {
            name: name.into(),
            n,
            p,
            q,
            r,
            witness: String::new(),
            margin: f64::INFINITY,
            samples: 0,
        }
    }

    /// Fold a per-sample record into a suite aggregate, keeping the worst
    /// margin and its witness.
    fn fold(&mut self, sample: InequalityMargin) {
        if sample.margin < self.margin {
            self.margin = sample.margin;
            self.witness = sample.witness;
        }
        self.samples += sample.samples;
    }
}

/// Smallest trace of a minimal projection in B'∩Aₙ (Plus) or A'∩Aₙ₊₁
/// (Minus), read off the block weights.
pub fn kappa<T: TowerLike + ?Sized>(t: &T, n: usize, sign: BoxSign) -> Result<f64> {
    let alg = match sign {
        BoxSign::Plus => t.box_space(-1, n as isize)?,
        BoxSign::Minus => t.box_space(0, n as isize + 1)?,
    };
    let dec = block_decompose(alg.as_ref(), t.tol())?;
    Ok(dec
        .data
        .weights
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// κₙ = √(κ⁺ₙ·κ⁻ₙ), the constant entering the transform bounds at box
/// index n+1.
pub fn kappa_geometric<T: TowerLike + ?Sized>(t: &T, n: usize) -> Result<f64> {
    Ok((kappa(t, n, BoxSign::Plus)? * kappa(t, n, BoxSign::Minus)?).sqrt())
}

/// Conjugate exponent q with 1/p + 1/q = 1, for 2 ≤ p ≤ ∞.
fn conjugate_exponent(p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(TowerError::Config(format!(
            "transform norm bound needs 2 ≤ p ≤ ∞, got {}",
            p
        )));
    }
    if p.is_infinite() {
        Ok(1.0)
    } else {
        Ok(p / (p - 1.0))
    }
}

fn inverse_exponent(p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(TowerError::Config(format!("exponent must be ≥ 1, got {}", p)));
    }
    if p.is_infinite() {
        Ok(0.0)
    } else {
        Ok(1.0 / p)
    }
}

fn require_positive_index(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return Err(TowerError::IndexRange(format!(
            "{} needs box index ≥ 1 (the constant uses κ at index n−1)",
            what
        )));
    }
    Ok(())
}

fn require_nonzero(x: &BoxElement, what: &str) -> Result<f64> {
    let norm = x.norm2();
    if norm <= 1e-14 {
        return Err(TowerError::Config(format!("{} needs a nonzero element", what)));
    }
    Ok(norm)
}

/// Transform of a box element in its natural direction: F on B'∩Aₙ,
/// F⁻¹ on A'∩Aₙ₊₁.
fn natural_transform<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    match x.sign {
        BoxSign::Plus => fourier(t, x),
        BoxSign::Minus => inv_fourier(t, x),
    }
}

/// Signed margin of the two-sided transform norm bound
/// ‖x‖_q ≤ ‖T(x)‖_p ≤ (δ/κₙ₋₁)^{1−2/p}·‖x‖_q, where T is the natural
/// transform of the element's box space and 1/p + 1/q = 1.
pub fn hausdorff_young_margin<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
    p: f64,
) -> Result<InequalityMargin> {
    require_positive_index(x.n, "transform norm bound")?;
    let q = conjugate_exponent(p)?;
    let kap = kappa_geometric(t, x.n - 1)?;
    let constant = (t.scalars().delta / kap).powf(1.0 - 2.0 / p);
    let tx = natural_transform(t, x)?;
    let lower = x.norm_p(q);
    let middle = tx.norm_p(p);
    let margin = (middle - lower).min(constant * lower - middle);
    Ok(InequalityMargin {
        name: "transform-norm-bound".into(),
        n: x.n,
        p: Some(p),
        q: Some(q),
        r: None,
        witness: format!("{:?} element at n={}", x.sign, x.n),
        margin,
        samples: 1,
    })
}

/// Signed margin of the support uncertainty bound
/// 𝒮(x)·𝒮(T(x)) ≥ κ²ₙ₋₁/[A:B]₀, with 𝒮 the trace of the range projection.
pub fn donoho_stark_margin<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
) -> Result<InequalityMargin> {
    require_positive_index(x.n, "support uncertainty bound")?;
    require_nonzero(x, "support uncertainty bound")?;
    let support_cut = (t.tol() * 100.0).max(1e-9);
    let tx = natural_transform(t, x)?;
    let s_x = support_size(x.mat(), &x.elem.algebra.trace, support_cut);
    let s_tx = support_size(tx.mat(), &tx.elem.algebra.trace, support_cut);
    let kap = kappa_geometric(t, x.n - 1)?;
    let margin = s_x * s_tx - kap * kap / t.scalars().index;
    Ok(InequalityMargin {
        name: "support-uncertainty".into(),
        n: x.n,
        p: None,
        q: None,
        r: None,
        witness: format!("{:?} element at n={}", x.sign, x.n),
        margin,
        samples: 1,
    })
}

/// Signed margin of the entropy uncertainty bound
/// ½(H(|T(x)|²) + H(|x|²)) ≥ −‖x‖₂²·(log(δ/κₙ₋₁) + log ‖x‖₂²),
/// with H(y) = tr(η(y)).
pub fn hirschman_beckner_margin<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
) -> Result<InequalityMargin> {
    require_positive_index(x.n, "entropy uncertainty bound")?;
    let norm = require_nonzero(x, "entropy uncertainty bound")?;
    let tx = natural_transform(t, x)?;
    let habs = |b: &BoxElement| -> Result<f64> {
        let sq = mat_mul(&dagger(b.mat()), b.mat());
        entropy_functional(&sq, &b.elem.algebra.trace, (t.tol() * 100.0).max(1e-9))
    };
    let kap = kappa_geometric(t, x.n - 1)?;
    let norm_sq = norm * norm;
    let rhs = -norm_sq * ((t.scalars().delta / kap).ln() + norm_sq.ln());
    let margin = 0.5 * (habs(x)? + habs(&tx)?) - rhs;
    Ok(InequalityMargin {
        name: "entropy-uncertainty".into(),
        n: x.n,
        p: None,
        q: None,
        r: None,
        witness: format!("{:?} element at n={}", x.sign, x.n),
        margin,
        samples: 1,
    })
}

/// Signed margin of the convolution norm bound on a 1-box space:
/// ‖x*y‖_r ≤ (δ/κ₀±)·‖x‖_p·‖y‖_q with 1/p + 1/q = 1 + 1/r. The sign of
/// the elements selects the convolution and which κ₀ enters the constant.
pub fn young_margin<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
    y: &BoxElement,
    p: f64,
    q: f64,
    r: f64,
) -> Result<InequalityMargin> {
    if x.sign != y.sign || x.n != y.n {
        return Err(TowerError::IndexRange(
            "convolution norm bound needs two elements of the same box space".into(),
        ));
    }
    if x.n != 1 {
        return Err(TowerError::IndexRange(
            "convolution norm bound is stated on the 1-box spaces".into(),
        ));
    }
    let relation = inverse_exponent(p)? + inverse_exponent(q)?
        - inverse_exponent(r)?
        - 1.0;
    if relation.abs() > 1e-12 {
        return Err(TowerError::Config(format!(
            "exponents must satisfy 1/p + 1/q = 1 + 1/r, got ({}, {}, {})",
            p, q, r
        )));
    }
    let conv = match x.sign {
        BoxSign::Plus => convolve_pos(t, x, y)?,
        BoxSign::Minus => convolve_neg(t, x, y)?,
    };
    let constant = t.scalars().delta / kappa(t, 0, x.sign)?;
    let margin = constant * x.norm_p(p) * y.norm_p(q) - conv.norm_p(r);
    Ok(InequalityMargin {
        name: "convolution-norm-bound".into(),
        n: x.n,
        p: Some(p),
        q: Some(q),
        r: Some(r),
        witness: format!("{:?} pair at n={}", x.sign, x.n),
        margin,
        samples: 1,
    })
}

fn tag_witness(mut rec: InequalityMargin, tag: &str) -> InequalityMargin {
    rec.witness = tag.into();
    rec
}

/// Deterministic near-extremal witnesses for one box space: the unit, the
/// first Jones projection (or its transform on the Minus side).
fn deterministic_witnesses<T: TowerLike + ?Sized>(
    t: &T,
    n: usize,
    sign: BoxSign,
) -> Result<Vec<(BoxElement, String)>> {
    let mut out = Vec::new();
    match sign {
        BoxSign::Plus => {
            out.push((BoxElement::unit_plus(t, n)?, "unit".into()));
            if n >= 1 {
                let e1 = BoxElement::plus(t, n, t.jones_at(1, n as isize)?)?;
                out.push((e1, "jones generator".into()));
            }
        }
        BoxSign::Minus => {
            out.push((BoxElement::unit_minus(t, n)?, "unit".into()));
            if n >= 1 {
                let e1 = BoxElement::plus(t, n, t.jones_at(1, n as isize)?)?;
                out.push((fourier(t, &e1)?, "transform of the jones generator".into()));
            }
        }
    }
    Ok(out)
}

fn random_sample<T: TowerLike + ?Sized, R: Rng>(
    t: &T,
    n: usize,
    sign: BoxSign,
    rng: &mut R,
) -> Result<BoxElement> {
    match sign {
        BoxSign::Plus => BoxElement::random_plus(t, n, rng),
        BoxSign::Minus => BoxElement::random_minus(t, n, rng),
    }
}

/// Worst transform norm-bound margin at box index n and exponent p over
/// deterministic witnesses and `samples` random elements per side, both
/// transform directions.
pub fn hausdorff_young_suite<T: TowerLike + ?Sized>(
    t: &T,
    n: usize,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<InequalityMargin> {
    let q = conjugate_exponent(p)?;
    let mut agg = InequalityMargin::seed_record("transform-norm-bound", n, Some(p), Some(q), None);
    let mut rng = rng_for(seed, &format!("hy-{}-{}", n, p));
    for sign in [BoxSign::Plus, BoxSign::Minus] {
        for (x, tag) in deterministic_witnesses(t, n, sign)? {
            let rec = hausdorff_young_margin(t, &x, p)?;
            agg.fold(tag_witness(rec, &format!("{} ({:?} side)", tag, sign)));
        }
        for i in 0..samples {
            let x = random_sample(t, n, sign, &mut rng)?;
            let rec = hausdorff_young_margin(t, &x, p)?;
            agg.fold(tag_witness(
                rec,
                &format!("random sample {} (seed {}, {:?} side)", i, seed, sign),
            ));
        }
    }
    Ok(agg)
}

/// Worst support-uncertainty margin at box index n over deterministic
/// witnesses and `samples` random elements per side.
pub fn donoho_stark_suite<T: TowerLike + ?Sized>(
    t: &T,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<InequalityMargin> {
    let mut agg = InequalityMargin::seed_record("support-uncertainty", n, None, None, None);
    let mut rng = rng_for(seed, &format!("ds-{}", n));
    for sign in [BoxSign::Plus, BoxSign::Minus] {
        for (x, tag) in deterministic_witnesses(t, n, sign)? {
            let rec = donoho_stark_margin(t, &x)?;
            agg.fold(tag_witness(rec, &format!("{} ({:?} side)", tag, sign)));
        }
        for i in 0..samples {
            let x = random_sample(t, n, sign, &mut rng)?;
            let rec = donoho_stark_margin(t, &x)?;
            agg.fold(tag_witness(
                rec,
                &format!("random sample {} (seed {}, {:?} side)", i, seed, sign),
            ));
        }
    }
    Ok(agg)
}

/// Worst entropy-uncertainty margin at box index n over deterministic
/// witnesses and `samples` random elements per side.
pub fn hirschman_beckner_suite<T: TowerLike + ?Sized>(
    t: &T,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<InequalityMargin> {
    let mut agg = InequalityMargin::seed_record("entropy-uncertainty", n, None, None, None);
    let mut rng = rng_for(seed, &format!("hb-{}", n));
    for sign in [BoxSign::Plus, BoxSign::Minus] {
        for (x, tag) in deterministic_witnesses(t, n, sign)? {
            let rec = hirschman_beckner_margin(t, &x)?;
            agg.fold(tag_witness(rec, &format!("{} ({:?} side)", tag, sign)));
        }
        for i in 0..samples {
            let x = random_sample(t, n, sign, &mut rng)?;
            let rec = hirschman_beckner_margin(t, &x)?;
            agg.fold(tag_witness(
                rec,
                &format!("random sample {} (seed {}, {:?} side)", i, seed, sign),
            ));
        }
    }
    Ok(agg)
}

/// Worst convolution norm-bound margin on the selected 1-box space at
/// exponents (p, q, r), over deterministic witness pairs and `samples`
/// random pairs. The witness string also records the largest observed
/// ratio ‖x*y‖_r / (‖x‖_p‖y‖_q) against the constant, as an empirical
/// sharpness note.
pub fn young_suite<T: TowerLike + ?Sized>(
    t: &T,
    sign: BoxSign,
    p: f64,
    q: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<InequalityMargin> {
    let mut agg = InequalityMargin::seed_record("convolution-norm-bound", 1, Some(p), Some(q), Some(r));
    let mut rng = rng_for(seed, &format!("young-{:?}-{}-{}-{}", sign, p, q, r));
    let mut max_ratio = 0.0_f64;
    let mut pairs: Vec<(BoxElement, BoxElement, String)> = Vec::new();
    let dets = deterministic_witnesses(t, 1, sign)?;
    for (x, tag) in &dets {
        pairs.push((x.clone(), x.clone(), format!("{} with itself", tag)));
    }
    if dets.len() >= 2 {
        pairs.push((
            dets[0].0.clone(),
            dets[1].0.clone(),
            format!("{} with {}", dets[0].1, dets[1].1),
        ));
    }
    for i in 0..samples {
        let x = random_sample(t, 1, sign, &mut rng)?;
        let y = random_sample(t, 1, sign, &mut rng)?;
        pairs.push((x, y, format!("random pair {} (seed {})", i, seed)));
    }
    let constant = t.scalars().delta / kappa(t, 0, sign)?;
    for (x, y, tag) in pairs {
        let rec = young_margin(t, &x, &y, p, q, r)?;
        let denom = x.norm_p(p) * y.norm_p(q);
        if denom > 1e-12 {
            max_ratio = max_ratio.max((constant * denom - rec.margin) / denom);
        }
        agg.fold(tag_witness(rec, &format!("{} ({:?} side)", tag, sign)));
    }
    agg.witness = format!(
        "{}; max observed ratio {:.6} of constant {:.6}",
        agg.witness, max_ratio, constant
    );
    Ok(agg)
}
