//! Configuration-driven orchestration: parse a run description, build the
//! tower, run the requested verification suites, and emit deterministic
//! machine-readable reports plus text tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::{
    box_inclusion_matrix, depth_detect, entropy_growth, partition_relative_entropy,
    PartitionOfUnity, RMat,
};
use crate::fourier::{
    box_distance, box_residual_at, canonical_shift, commuting_square_check, convolve_neg,
    convolve_pos, fourier, inv_fourier, reflection_minus, reflection_plus,
    reflection_plus_coarse, rho_minus_power, rho_minus_power_closed, rho_plus, rho_plus_power,
    rho_plus_power_closed, shift_closed, shift_minus_closed, shift_minus_composed,
    shift_odd_check, shift_plus_composed, span_equality_residual, two_shift_check, BoxElement,
    BoxSign,
};
use crate::harmonic::{
    donoho_stark_suite, hausdorff_young_suite, hirschman_beckner_suite, young_suite,
    InequalityMargin,
};
use crate::mmalg::algebra::{Element, MultiMatrixAlgebra};
use crate::mmalg::functionals::{conditional_expectation, p_norm};
use crate::mmalg::linalg::{
    cr, dagger, eye, fro_norm, mat_mul, mat_mul3, matrix_unit, rel_fro_dist, CMat, C64,
};
use crate::mmalg::random::{random_in, rng_for};
use crate::tower::{InclusionSpec, Tower, TowerLike};
use crate::{Result, TowerError};

fn default_tolerance() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    100
}

/// Complex matrix in the wire format: rows of [re, im] pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

/// Turns an internal matrix into the wire format.
pub fn matrix_to_rows(m: &CMat) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_matrix(rows: &MatrixRows, dim: usize, what: &str) -> Result<CMat> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(TowerError::Config(format!(
            "{}: expected a {}×{} matrix",
            what, dim, dim
        )));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// The inclusion to build, in a serializable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// M_k ⊗ 1 ⊂ M_k ⊗ M_d. k = 1 gives ℂ ⊂ M_d, d = 1 gives B = A.
    Tensor { k: usize, d: usize },
    /// Spanning matrices for A and B ⊆ A inside M_{ambient_dim}.
    Explicit {
        ambient_dim: usize,
        a_basis: Vec<MatrixRows>,
        b_basis: Vec<MatrixRows>,
    },
}

impl ModelConfig {
    fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Tensor { k, d } => {
                if *k == 0 || *d == 0 {
                    return Err(TowerError::Config(
                        "tensor model needs k ≥ 1 and d ≥ 1".into(),
                    ));
                }
            }
            ModelConfig::Explicit {
                ambient_dim,
                a_basis,
                b_basis,
            } => {
                if *ambient_dim == 0 {
                    return Err(TowerError::Config("explicit model needs ambient_dim ≥ 1".into()));
                }
                if a_basis.is_empty() || b_basis.is_empty() {
                    return Err(TowerError::Config(
                        "explicit model needs nonempty a_basis and b_basis".into(),
                    ));
                }
                for (tag, fam) in [("a_basis", a_basis), ("b_basis", b_basis)] {
                    for (i, rows) in fam.iter().enumerate() {
                        rows_to_matrix(rows, *ambient_dim, &format!("{}[{}]", tag, i))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds the tower-facing inclusion description.
    pub fn to_spec(&self) -> Result<InclusionSpec> {
        self.validate()?;
        Ok(match self {
            ModelConfig::Tensor { k, d } => InclusionSpec::Tensor { k: *k, d: *d },
            ModelConfig::Explicit {
                ambient_dim,
                a_basis,
                b_basis,
            } => InclusionSpec::Explicit {
                ambient_dim: *ambient_dim,
                a_basis: a_basis
                    .iter()
                    .map(|r| rows_to_matrix(r, *ambient_dim, "a_basis"))
                    .collect::<Result<_>>()?,
                b_basis: b_basis
                    .iter()
                    .map(|r| rows_to_matrix(r, *ambient_dim, "b_basis"))
                    .collect::<Result<_>>()?,
            },
        })
    }
}

/// Names of the verification suites.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Tl,
    QuasiBasis,
    Fourier,
    Rotation,
    Reflection,
    Convolution,
    Shift,
    CanonicalShift,
    TwoShift,
    Hy,
    Ds,
    Hb,
    Young,
    Entropy,
}

impl SuiteName {
    pub fn all() -> Vec<SuiteName> {
        use SuiteName::*;
        vec![
            Tl,
            QuasiBasis,
            Fourier,
            Rotation,
            Reflection,
            Convolution,
            Shift,
            CanonicalShift,
            TwoShift,
            Hy,
            Ds,
            Hb,
            Young,
            Entropy,
        ]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Tl => "tl",
            SuiteName::QuasiBasis => "quasi-basis",
            SuiteName::Fourier => "fourier",
            SuiteName::Rotation => "rotation",
            SuiteName::Reflection => "reflection",
            SuiteName::Convolution => "convolution",
            SuiteName::Shift => "shift",
            SuiteName::CanonicalShift => "canonical-shift",
            SuiteName::TwoShift => "two-shift",
            SuiteName::Hy => "hy",
            SuiteName::Ds => "ds",
            SuiteName::Hb => "hb",
            SuiteName::Young => "young",
            SuiteName::Entropy => "entropy",
        }
    }
}

impl std::fmt::Display for SuiteName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A validated run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub max_level: isize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "SuiteName::all")]
    pub suites: Vec<SuiteName>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_level < 1 {
            return Err(TowerError::Config("max_level must be ≥ 1".into()));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(TowerError::Config("tolerance must be positive and finite".into()));
        }
        if self.suites.is_empty() {
            return Err(TowerError::Config("suites must be non-empty".into()));
        }
        if self.samples == 0 {
            return Err(TowerError::Config("samples must be ≥ 1".into()));
        }
        self.model.validate()
    }

    fn deduped_suites(&self) -> Vec<SuiteName> {
        let mut seen = Vec::new();
        for s in &self.suites {
            if !seen.contains(s) {
                seen.push(*s);
            }
        }
        seen
    }
}

/// Parses and validates a config document from a file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TowerError::Config(format!("{}: {}", path.display(), e)))?;
    parse_config_str(&text).map_err(|e| match e {
        TowerError::Config(msg) => TowerError::Config(format!("{}: {}", path.display(), msg)),
        other => other,
    })
}

/// Parses and validates a config document from a JSON string.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| TowerError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// One verified identity or inequality: pass ⇔ margin ≥ −tolerance.
/// Identity checks report margin = −residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    /// Stable slug naming the identity or inequality family.
    pub anchor: String,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: isize,
    pub ambient_dim: usize,
    /// Linear dimension of B'∩Aₙ.
    pub b_commutant_dim: usize,
    /// Linear dimension of A'∩Aₙ.
    pub a_commutant_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionStep {
    /// Step A'∩Aₘ ⊆ A'∩Aₘ₊₁.
    pub m: usize,
    pub entries: Vec<Vec<f64>>,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerSummary {
    pub model: String,
    pub index: f64,
    pub tau: f64,
    pub delta: f64,
    pub max_level: isize,
    pub levels: Vec<LevelSummary>,
    pub inclusion_steps: Vec<InclusionStep>,
    pub depth: Option<usize>,
    pub depth_checked_to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub n: usize,
    pub level: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub sequence: Vec<EntropyPoint>,
    pub slope: f64,
    pub log_index: f64,
    pub agreement: f64,
    pub depth: usize,
    pub beta: f64,
    pub h_shift: f64,
    pub pf_residual: f64,
    pub trace_vector_residual: f64,
    pub implied_step_relative_entropy: f64,
}

/// The full outcome of a run: config echo, tower structure, one record per
/// executed check, and the entropy summary when that suite ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: RunConfig,
    pub tower: TowerSummary,
    pub records: Vec<CheckRecord>,
    pub entropy: Option<EntropySummary>,
    pub pass: bool,
}

/// Serializes a report as pretty JSON with a trailing newline; the output
/// is byte-identical for identical (config, seed, build).
pub fn report_to_json(report: &VerificationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

struct Suite<'a> {
    name: &'static str,
    tol: f64,
    records: &'a mut Vec<CheckRecord>,
}

impl Suite<'_> {
    fn margin(&mut self, name: String, anchor: &str, margin: f64) {
        let pass = margin.is_finite() && margin >= -self.tol;
        self.records.push(CheckRecord {
            suite: self.name.into(),
            name,
            anchor: anchor.into(),
            margin,
            pass,
        });
    }

    fn residual(&mut self, name: String, anchor: &str, residual: f64) {
        self.margin(name, anchor, -residual);
    }

    fn level_cap(&mut self, need: isize, have: isize) {
        self.records.push(CheckRecord {
            suite: self.name.into(),
            name: format!("skipped: needs max_level ≥ {} (built {})", need, have),
            anchor: "level-cap".into(),
            margin: -f64::MAX,
            pass: false,
        });
    }

    fn inequality(&mut self, anchor: &str, rec: &InequalityMargin) {
        let mut name = format!("{} at n = {}", rec.name, rec.n);
        for (tag, v) in [("p", rec.p), ("q", rec.q), ("r", rec.r)] {
            if let Some(v) = v {
                name.push_str(&format!(", {} = {}", tag, fmt_exponent(v)));
            }
        }
        name.push_str(&format!(" [{} samples, worst: {}]", rec.samples, rec.witness));
        self.margin(name, anchor, rec.margin);
    }
}

fn fmt_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{}", p)
    }
}

/// tr(a·b) against a diagonal density, without forming the product.
fn trace_pair(a: &CMat, b: &CMat, density: &[f64]) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..n {
            row += a[(i, j)] * b[(j, i)];
        }
        acc += row * cr(density[i]);
    }
    acc
}

fn unit_sample(t: &Tower, n: isize, rng: &mut impl rand::Rng) -> Result<CMat> {
    let alg = t.level_algebra(n)?;
    let x = random_in(alg.as_ref(), rng);
    let norm = p_norm(&x, &alg.trace, 2.0).max(1e-300);
    Ok(&x * cr(1.0 / norm))
}

/// Builds the tower described by the config and runs the configured suites.
pub fn run(config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let t = Tower::build(config.model.to_spec()?, config.max_level, config.tolerance)?;
    let mut records = Vec::new();
    let mut entropy_summary = None;
    for suite in config.deduped_suites() {
        let mut s = Suite {
            name: suite.as_str(),
            tol: config.tolerance,
            records: &mut records,
        };
        let outcome = match suite {
            SuiteName::Tl => suite_tl(&t, config, &mut s),
            SuiteName::QuasiBasis => suite_quasi_basis(&t, config, &mut s),
            SuiteName::Fourier => suite_fourier(&t, config, &mut s),
            SuiteName::Rotation => suite_rotation(&t, config, &mut s),
            SuiteName::Reflection => suite_reflection(&t, config, &mut s),
            SuiteName::Convolution => suite_convolution(&t, config, &mut s),
            SuiteName::Shift => suite_shift(&t, config, &mut s),
            SuiteName::CanonicalShift => suite_canonical_shift(&t, config, &mut s),
            SuiteName::TwoShift => suite_two_shift(&t, config, &mut s),
            SuiteName::Hy => suite_hy(&t, config, &mut s),
            SuiteName::Ds => suite_ds(&t, config, &mut s),
            SuiteName::Hb => suite_hb(&t, config, &mut s),
            SuiteName::Young => suite_young(&t, config, &mut s),
            SuiteName::Entropy => suite_entropy(&t, config, &mut s, &mut entropy_summary),
        };
        if let Err(e) = outcome {
            records.push(CheckRecord {
                suite: suite.as_str().into(),
                name: format!("suite aborted: {}", e),
                anchor: "suite-abort".into(),
                margin: -f64::MAX,
                pass: false,
            });
        }
    }
    let tower = tower_summary(&t)?;
    let pass = !records.is_empty() && records.iter().all(|r| r.pass);
    Ok(VerificationReport {
        config: config.clone(),
        tower,
        records,
        entropy: entropy_summary,
        pass,
    })
}

/// Builds the tower and returns only its structural summary.
pub fn build_summary(config: &RunConfig) -> Result<TowerSummary> {
    config.validate()?;
    let t = Tower::build(config.model.to_spec()?, config.max_level, config.tolerance)?;
    tower_summary(&t)
}

fn tower_summary(t: &Tower) -> Result<TowerSummary> {
    let lmax = t.max_level();
    let mut levels = Vec::new();
    for n in 0..=lmax {
        // A'∩A₀ is the center of A; the box accessor starts at n = 1
        let a_commutant_dim = if n == 0 {
            t.level_algebra(0)?.block_dims.len()
        } else {
            t.box_space(0, n)?.dimension()
        };
        levels.push(LevelSummary {
            level: n,
            ambient_dim: t.level_algebra(n)?.ambient_dim,
            b_commutant_dim: t.box_space(-1, n)?.dimension(),
            a_commutant_dim,
        });
    }
    let mut inclusion_steps = Vec::new();
    for m in 1..=(lmax - 1).min(3).max(0) {
        let g = box_inclusion_matrix(t, m as usize, t.tol())?;
        inclusion_steps.push(InclusionStep {
            m: m as usize,
            entries: rmat_rows(&g.entries),
            connected: g.connected,
        });
    }
    let depth_report = depth_detect(t, (lmax as usize).min(3))?;
    let scalars = t.scalars();
    Ok(TowerSummary {
        model: t.model_label(),
        index: scalars.index,
        tau: scalars.tau,
        delta: scalars.delta,
        max_level: lmax,
        levels,
        inclusion_steps,
        depth: depth_report.depth,
        depth_checked_to: depth_report.checked_to,
    })
}

fn rmat_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn suite_tl(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let tau = t.scalars().tau;
    let mut idempotent = 0.0f64;
    let mut self_adjoint = 0.0f64;
    for i in 1..=lmax {
        let e = t.jones(i as usize)?;
        idempotent = idempotent.max(rel_fro_dist(&mat_mul(&e, &e), &e));
        self_adjoint = self_adjoint.max(rel_fro_dist(&dagger(&e), &e));
    }
    s.residual("eᵢ² = eᵢ for i ≤ L".into(), "tl-idempotent", idempotent);
    s.residual("eᵢ* = eᵢ for i ≤ L".into(), "tl-self-adjoint", self_adjoint);
    let mut absorption = 0.0f64;
    for i in 1..lmax {
        let at = i + 1;
        let ei = t.jones_at(i as usize, at)?;
        let ej = t.jones(at as usize)?;
        absorption = absorption.max(rel_fro_dist(&mat_mul3(&ei, &ej, &ei), &(&ei * cr(tau))));
        absorption = absorption.max(rel_fro_dist(&mat_mul3(&ej, &ei, &ej), &(&ej * cr(tau))));
    }
    s.residual(
        "eᵢe_{i±1}eᵢ = τeᵢ for i < L".into(),
        "tl-absorption",
        absorption,
    );
    let mut commutation = 0.0f64;
    for j in 3..=lmax {
        let ej = t.jones(j as usize)?;
        for i in 1..=(j - 2) {
            let ei = t.jones_at(i as usize, j)?;
            let c = mat_mul(&ei, &ej) - mat_mul(&ej, &ei);
            commutation = commutation.max(fro_norm(&c) / fro_norm(&ej).max(1e-300));
        }
    }
    s.residual(
        "[eᵢ, eⱼ] = 0 for |i−j| ≥ 2".into(),
        "tl-far-commutation",
        commutation,
    );
    let mut rng = rng_for(cfg.seed, "tl-markov");
    let mut markov = 0.0f64;
    for n in 1..=lmax {
        let e = t.jones(n as usize)?;
        let density: Vec<f64> = t.level_algebra(n)?.trace.density.clone();
        for _ in 0..cfg.samples {
            let x = unit_sample(t, n - 1, &mut rng)?;
            let xe = t.embed_to(&x, n - 1, n)?;
            let lhs = trace_pair(&xe, &e, &density);
            let rhs = t.tr_level(n - 1, &x)? * cr(tau);
            markov = markov.max((lhs - rhs).norm());
        }
    }
    s.residual(
        "tr(x·eₙ) = τ·tr(x) for x ∈ Aₙ₋₁, n ≤ L".into(),
        "markov-trace",
        markov,
    );
    let mut rng = rng_for(cfg.seed, "tl-pushdown");
    let mut pushdown = 0.0f64;
    for n in 1..lmax {
        let e = t.jones((n + 1) as usize)?;
        for _ in 0..cfg.samples {
            let x = unit_sample(t, n, &mut rng)?;
            let xe = t.embed_to(&x, n, n + 1)?;
            let lhs = mat_mul3(&e, &xe, &e);
            let ex = t.expect_step(&x, n)?;
            let exe = t.embed_to(&ex, n - 1, n + 1)?;
            let rhs = mat_mul(&exe, &e);
            pushdown = pushdown.max(fro_norm(&(lhs - rhs)) / fro_norm(&e).max(1e-300));
        }
    }
    s.residual(
        "eₙ₊₁·x·eₙ₊₁ = Eₙ(x)·eₙ₊₁ for x ∈ Aₙ, n < L".into(),
        "jones-pushdown",
        pushdown,
    );
    Ok(())
}

fn suite_quasi_basis(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let a0 = t.level_algebra(0)?;
    let lam = t.quasi_basis_mats().to_vec();
    let index = t.scalars().index;
    let d = a0.ambient_dim;
    let mut acc = CMat::zeros(d, d);
    for l in &lam {
        acc += mat_mul(l, &dagger(l));
    }
    s.residual(
        "Σᵢ λᵢλᵢ* = [A:B]₀·1".into(),
        "quasi-basis-index",
        rel_fro_dist(&acc, &(eye(d) * cr(index))),
    );
    let mut rng = rng_for(cfg.seed, "quasi-basis-reconstruction");
    let mut reconstruction = 0.0f64;
    for _ in 0..cfg.samples {
        let x = unit_sample(t, 0, &mut rng)?;
        let mut sum = CMat::zeros(d, d);
        for l in &lam {
            let inner = t.expect_step(&mat_mul(&dagger(l), &x), 0)?;
            sum += mat_mul(l, &t.embed_to(&inner, -1, 0)?);
        }
        reconstruction = reconstruction.max(rel_fro_dist(&sum, &x));
    }
    s.residual(
        "Σᵢ λᵢ·E₀(λᵢ*x) = x for x ∈ A".into(),
        "quasi-basis-reconstruction",
        reconstruction,
    );
    let e1 = t.jones(1)?;
    let d1 = t.level_algebra(1)?.ambient_dim;
    let mut part = CMat::zeros(d1, d1);
    for l in &lam {
        let le = t.embed_to(l, 0, 1)?;
        part += mat_mul3(&le, &e1, &dagger(&le));
    }
    s.residual(
        "Σᵢ λᵢe₁λᵢ* = 1".into(),
        "jones-partition",
        rel_fro_dist(&part, &eye(d1)),
    );
    let big = t.box_space(-1, 1)?;
    let small = t.box_space(0, 1)?;
    let elem = Element::new_unchecked(big, e1.clone());
    let proj = conditional_expectation(&elem, &small, t.tol())?;
    s.residual(
        "E^{B'∩A₁}_{A'∩A₁}(e₁) = τ·1".into(),
        "jones-box-expectation",
        rel_fro_dist(&proj.mat, &(eye(d1) * cr(t.scalars().tau))),
    );
    Ok(())
}

fn suite_fourier(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let tau = t.scalars().tau;
    let one0 = BoxElement::unit_plus(t, 0)?;
    s.residual(
        "F₀(1) = 1".into(),
        "transform-witness",
        box_distance(t, &fourier(t, &one0)?, &BoxElement::unit_minus(t, 0)?)?,
    );
    if lmax >= 2 {
        let e1 = BoxElement::plus(t, 1, t.jones(1)?)?;
        let want = BoxElement::unit_minus(t, 1)?.scale(cr(tau.sqrt()));
        s.residual(
            "F₁(e₁) = √τ·1".into(),
            "transform-witness",
            box_distance(t, &fourier(t, &e1)?, &want)?,
        );
        let back = BoxElement::plus(t, 1, &t.jones(1)? * cr(tau.powf(-0.5)))?;
        s.residual(
            "F₁⁻¹(1) = τ^{−1/2}·e₁".into(),
            "transform-witness",
            box_distance(t, &inv_fourier(t, &BoxElement::unit_minus(t, 1)?)?, &back)?,
        );
    }
    if lmax >= 6 {
        let e1 = BoxElement::plus(t, 5, t.jones_at(1, 5)?)?;
        let word = mat_mul(
            &mat_mul(&t.jones(6)?, &t.jones_at(5, 6)?),
            &mat_mul(&t.jones_at(4, 6)?, &t.jones_at(3, 6)?),
        );
        let want = BoxElement::minus(t, 5, &word * cr(tau.powf(-1.5)))?;
        s.residual(
            "F₅(e₁) = τ^{−3/2}·e₆e₅e₄e₃".into(),
            "transform-witness",
            box_distance(t, &fourier(t, &e1)?, &want)?,
        );
    }
    let mut rng = rng_for(cfg.seed, "fourier-samples");
    let mut isometry = 0.0f64;
    let mut inversion = 0.0f64;
    for n in 0..=2usize.min((lmax - 1).max(0) as usize) {
        for _ in 0..cfg.samples {
            let x = BoxElement::random_plus(t, n, &mut rng)?.normalized();
            let f = fourier(t, &x)?;
            isometry = isometry.max((f.norm2() - x.norm2()).abs());
            inversion = inversion.max(box_distance(t, &inv_fourier(t, &f)?, &x)?);
            let w = BoxElement::random_minus(t, n, &mut rng)?.normalized();
            let g = inv_fourier(t, &w)?;
            isometry = isometry.max((g.norm2() - w.norm2()).abs());
            inversion = inversion.max(box_distance(t, &fourier(t, &g)?, &w)?);
        }
    }
    s.residual(
        "‖Fₙ(x)‖₂ = ‖x‖₂ both directions, n ≤ 2".into(),
        "transform-isometry",
        isometry,
    );
    s.residual(
        "Fₙ⁻¹∘Fₙ = id and Fₙ∘Fₙ⁻¹ = id, n ≤ 2".into(),
        "transform-inversion",
        inversion,
    );
    Ok(())
}

fn suite_rotation(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let mut rng = rng_for(cfg.seed, "rotation-order");
    for n in 1..=3usize {
        if (n + 1) as isize > lmax {
            s.level_cap((n + 1) as isize, lmax);
            continue;
        }
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let x = BoxElement::random_plus(t, n, &mut rng)?.normalized();
            worst = worst.max(box_distance(t, &rho_plus_power(t, &x, n + 1)?, &x)?);
            let w = BoxElement::random_minus(t, n, &mut rng)?.normalized();
            worst = worst.max(box_distance(t, &rho_minus_power(t, &w, n + 1)?, &w)?);
        }
        s.residual(
            format!("(ρ±_{})^{} = id", n, n + 1),
            "rotation-order",
            worst,
        );
    }
    if lmax >= 3 {
        let tau = t.scalars().tau;
        let e2e1 = BoxElement::plus(t, 2, mat_mul(&t.jones(2)?, &t.jones_at(1, 2)?))?;
        let r1 = rho_plus(t, &e2e1)?;
        s.residual(
            "ρ⁺₂(e₂e₁) = τ·1".into(),
            "rotation-witness",
            box_distance(t, &r1, &BoxElement::unit_plus(t, 2)?.scale(cr(tau)))?,
        );
        let r2 = rho_plus(t, &r1)?;
        let e1e2 = BoxElement::plus(t, 2, mat_mul(&t.jones_at(1, 2)?, &t.jones(2)?))?;
        s.residual(
            "(ρ⁺₂)²(e₂e₁) = e₁e₂".into(),
            "rotation-witness",
            box_distance(t, &r2, &e1e2)?,
        );
    } else {
        s.level_cap(3, lmax);
    }
    let closed_samples = cfg.samples.min(8);
    let mut rng = rng_for(cfg.seed, "rotation-closed");
    for (n, k) in [(2usize, 2usize), (3, 2), (3, 3)] {
        if (n + 1) as isize > lmax {
            s.level_cap((n + 1) as isize, lmax);
            continue;
        }
        let mut worst = 0.0f64;
        for _ in 0..closed_samples {
            let x = BoxElement::random_plus(t, n, &mut rng)?.normalized();
            worst = worst.max(box_distance(
                t,
                &rho_plus_power_closed(t, &x, k)?,
                &rho_plus_power(t, &x, k)?,
            )?);
        }
        s.residual(
            format!("(ρ⁺_{})^{} closed sum = iterate", n, k),
            "rotation-closed-power",
            worst,
        );
    }
    if lmax >= 3 {
        let mut worst = 0.0f64;
        for _ in 0..closed_samples {
            let w = BoxElement::random_minus(t, 2, &mut rng)?.normalized();
            worst = worst.max(box_distance(
                t,
                &rho_minus_power_closed(t, &w, 2)?,
                &rho_minus_power(t, &w, 2)?,
            )?);
        }
        s.residual(
            "(ρ⁻₂)² closed sum = iterate".into(),
            "rotation-closed-power",
            worst,
        );
    }
    Ok(())
}

fn suite_reflection(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let mut rng = rng_for(cfg.seed, "reflection-laws");
    for n in [1usize, 3] {
        if (n + 1) as isize > lmax {
            s.level_cap((n + 1) as isize, lmax);
            continue;
        }
        for sign in [BoxSign::Plus, BoxSign::Minus] {
            let refl = |x: &BoxElement| -> Result<BoxElement> {
                match sign {
                    BoxSign::Plus => reflection_plus(t, x),
                    BoxSign::Minus => reflection_minus(t, x),
                }
            };
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<BoxElement> {
                Ok(match sign {
                    BoxSign::Plus => BoxElement::random_plus(t, n, rng)?,
                    BoxSign::Minus => BoxElement::random_minus(t, n, rng)?,
                }
                .normalized())
            };
            let unit = match sign {
                BoxSign::Plus => BoxElement::unit_plus(t, n)?,
                BoxSign::Minus => BoxElement::unit_minus(t, n)?,
            };
            let side = match sign {
                BoxSign::Plus => "r⁺",
                BoxSign::Minus => "r⁻",
            };
            s.residual(
                format!("{}_{}(1) = 1", side, n),
                "reflection-unital",
                box_distance(t, &refl(&unit)?, &unit)?,
            );
            let mut involutive = 0.0f64;
            let mut star = 0.0f64;
            let mut antimult = 0.0f64;
            let mut trace = 0.0f64;
            for _ in 0..cfg.samples {
                let x = sample(&mut rng)?;
                let y = sample(&mut rng)?;
                let rx = refl(&x)?;
                involutive = involutive.max(box_distance(t, &refl(&rx)?, &x)?);
                star = star.max(box_distance(t, &refl(&x.adjoint())?, &rx.adjoint())?);
                let ry = refl(&y)?;
                antimult =
                    antimult.max(box_distance(t, &refl(&x.mul(&y)?)?, &ry.mul(&rx)?)?);
                trace = trace.max((rx.trace() - x.trace()).norm());
            }
            s.residual(
                format!("{}_{} is involutive", side, n),
                "reflection-involutive",
                involutive,
            );
            s.residual(
                format!("{}_{} preserves *", side, n),
                "reflection-star",
                star,
            );
            s.residual(
                format!("{}_{} is anti-multiplicative", side, n),
                "reflection-antimultiplicative",
                antimult,
            );
            s.residual(
                format!("{}_{} preserves the trace", side, n),
                "reflection-trace",
                trace,
            );
        }
        let mut conj = 0.0f64;
        for _ in 0..cfg.samples.min(25) {
            let w = BoxElement::random_minus(t, n, &mut rng)?.normalized();
            let rhs = fourier(t, &reflection_plus(t, &inv_fourier(t, &w)?)?)?;
            conj = conj.max(box_distance(t, &reflection_minus(t, &w)?, &rhs)?);
        }
        s.residual(
            format!("r⁻_{} = F∘r⁺_{}∘F⁻¹", n, n),
            "reflection-conjugation",
            conj,
        );
    }
    if lmax >= 4 {
        let mut coarse = 0.0f64;
        let mut rng = rng_for(cfg.seed, "reflection-coarse");
        for _ in 0..cfg.samples.min(25) {
            let x = BoxElement::random_plus(t, 3, &mut rng)?.normalized();
            coarse = coarse.max(box_distance(
                t,
                &reflection_plus_coarse(t, &x)?,
                &reflection_plus(t, &x)?,
            )?);
        }
        s.residual(
            "r⁺₃ agrees with the one-step-coarser reflection".into(),
            "reflection-coarse",
            coarse,
        );
    }
    Ok(())
}

fn suite_convolution(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let tau = t.scalars().tau;
    if lmax >= 6 {
        let e1 = BoxElement::plus(t, 5, t.jones_at(1, 5)?)?;
        let conv = convolve_pos(t, &e1, &e1)?;
        let word = mat_mul3(&t.jones_at(4, 5)?, &t.jones_at(1, 5)?, &t.jones_at(3, 5)?);
        let want = BoxElement::plus(t, 5, &word * cr(tau.powf(-0.5)))?;
        s.residual(
            "e₁*e₁ = τ^{−1/2}·e₄e₁e₃ in B'∩A₅".into(),
            "convolution-witness",
            box_distance(t, &conv, &want)?,
        );
        if t.scalars().index > 1.5 {
            let density = &t.level_algebra(conv.level())?.trace;
            let defect = p_norm(&(conv.adjoint().mat() - conv.mat()), density, 2.0);
            s.margin(
                "‖(e₁*e₁)* − e₁*e₁‖₂ exceeds 10⁻³".into(),
                "convolution-star-defect",
                defect - 1e-3,
            );
        }
    } else {
        s.level_cap(6, lmax);
    }
    if lmax >= 2 {
        let mut rng = rng_for(cfg.seed, "convolution-samples");
        let u = inv_fourier(t, &BoxElement::unit_minus(t, 1)?)?;
        let mut identity = 0.0f64;
        let mut assoc = 0.0f64;
        let mut reversal = 0.0f64;
        for _ in 0..cfg.samples {
            let x = BoxElement::random_plus(t, 1, &mut rng)?.normalized();
            let y = BoxElement::random_plus(t, 1, &mut rng)?.normalized();
            let z = BoxElement::random_plus(t, 1, &mut rng)?.normalized();
            identity = identity.max(box_distance(t, &convolve_pos(t, &x, &u)?, &x)?);
            identity = identity.max(box_distance(t, &convolve_pos(t, &u, &x)?, &x)?);
            assoc = assoc.max(box_distance(
                t,
                &convolve_pos(t, &convolve_pos(t, &x, &y)?, &z)?,
                &convolve_pos(t, &x, &convolve_pos(t, &y, &z)?)?,
            )?);
            let lhs = reflection_plus(t, &convolve_pos(t, &x, &y)?)?;
            let rhs = convolve_pos(t, &reflection_plus(t, &y)?, &reflection_plus(t, &x)?)?;
            reversal = reversal.max(box_distance(t, &lhs, &rhs)?);
            let w = BoxElement::random_minus(t, 1, &mut rng)?.normalized();
            let v = BoxElement::random_minus(t, 1, &mut rng)?.normalized();
            let g = BoxElement::random_minus(t, 1, &mut rng)?.normalized();
            assoc = assoc.max(box_distance(
                t,
                &convolve_neg(t, &convolve_neg(t, &w, &v)?, &g)?,
                &convolve_neg(t, &w, &convolve_neg(t, &v, &g)?)?,
            )?);
        }
        s.residual(
            "τ^{−1/2}e₁ is the convolution identity on B'∩A₁".into(),
            "convolution-identity",
            identity,
        );
        s.residual(
            "convolution is associative on both 1-boxes".into(),
            "convolution-associativity",
            assoc,
        );
        s.residual(
            "r⁺₁ reverses convolution".into(),
            "convolution-reversal",
            reversal,
        );
    } else {
        s.level_cap(2, lmax);
    }
    Ok(())
}

fn suite_shift(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let mut rng = rng_for(cfg.seed, "shift-closed");
    for (idx, m) in [(0usize, 1usize), (1, 3)] {
        let need = (m + 3) as isize;
        if need > lmax {
            s.level_cap(need, lmax);
            continue;
        }
        let count = if m == 1 { cfg.samples.min(8) } else { cfg.samples.min(4) };
        let mut worst = 0.0f64;
        for _ in 0..count {
            let x = BoxElement::random_plus(t, m, &mut rng)?.normalized();
            worst = worst.max(box_distance(
                t,
                &shift_closed(t, &x)?,
                &shift_plus_composed(t, &x)?,
            )?);
            let w = BoxElement::random_minus(t, m, &mut rng)?.normalized();
            worst = worst.max(box_distance(
                t,
                &shift_minus_closed(t, &w)?,
                &shift_minus_composed(t, &w)?,
            )?);
        }
        s.residual(
            format!("S±_{} closed form = r∘r composition", idx),
            "shift-closed-form",
            worst,
        );
    }
    let mut rng = rng_for(cfg.seed, "shift-odd");
    for n in [1usize, 2] {
        let need = (n + 2) as isize;
        if need > lmax {
            s.level_cap(need, lmax);
            continue;
        }
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples.min(25) {
            let w = BoxElement::random_minus(t, n, &mut rng)?.normalized();
            worst = worst.max(shift_odd_check(t, &w)?);
        }
        s.residual(
            format!("odd-index shift identity at n = {}", n),
            "shift-odd-identity",
            worst,
        );
    }
    if lmax >= 3 {
        let mut rng = rng_for(cfg.seed, "shift-isomorphism");
        let mut range = 0.0f64;
        let mut isometry = 0.0f64;
        let mut homomorphism = 0.0f64;
        let mut trace = 0.0f64;
        for _ in 0..cfg.samples {
            let x = BoxElement::random_plus(t, 1, &mut rng)?.normalized();
            let y = BoxElement::random_plus(t, 1, &mut rng)?.normalized();
            let sx = shift_closed(t, &x)?;
            let sy = shift_closed(t, &y)?;
            range = range.max(box_residual_at(t, 1, 3, sx.level(), sx.mat())?);
            isometry = isometry.max((sx.norm2() - x.norm2()).abs());
            homomorphism = homomorphism
                .max(box_distance(t, &shift_closed(t, &x.adjoint())?, &sx.adjoint())?);
            homomorphism = homomorphism.max(box_distance(
                t,
                &shift_closed(t, &x.mul(&y)?)?,
                &sx.mul(&sy)?,
            )?);
            trace = trace.max((sx.trace() - x.trace()).norm());
        }
        s.residual("S⁺₀ lands in A₁'∩A₃".into(), "shift-iso-range", range);
        s.residual("S⁺₀ is a ‖·‖₂ isometry".into(), "shift-iso-isometry", isometry);
        s.residual(
            "S⁺₀ is a *-homomorphism".into(),
            "shift-iso-homomorphism",
            homomorphism,
        );
        s.residual("S⁺₀ preserves the trace".into(), "shift-iso-trace", trace);
        let basis = t.box_space(-1, 1)?.orthonormal_basis()?;
        let mut images = Vec::with_capacity(basis.len());
        for b in &basis {
            images.push(shift_closed(t, &BoxElement::plus(t, 1, b.clone())?)?.mat().clone());
        }
        let target = t.box_space(1, 3)?.orthonormal_basis()?;
        let density = t.level_algebra(3)?.trace.density.clone();
        s.residual(
            "S⁺₀(B'∩A₁) spans A₁'∩A₃".into(),
            "shift-iso-onto",
            span_equality_residual(&images, &target, &density, t.tol()),
        );
    } else {
        s.level_cap(3, lmax);
    }
    Ok(())
}

fn suite_canonical_shift(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    if lmax >= 4 {
        let mut rng = rng_for(cfg.seed, "canonical-shift");
        let mut range = 0.0f64;
        let mut isometry = 0.0f64;
        let mut homomorphism = 0.0f64;
        let mut trace = 0.0f64;
        for _ in 0..cfg.samples {
            let w = BoxElement::random_minus(t, 1, &mut rng)?.normalized();
            let z = BoxElement::random_minus(t, 1, &mut rng)?.normalized();
            let g = canonical_shift(t, &w)?;
            let gz = canonical_shift(t, &z)?;
            range = range.max(box_residual_at(t, 2, 4, g.level(), g.mat())?);
            isometry = isometry.max((g.norm2() - w.norm2()).abs());
            homomorphism = homomorphism
                .max(box_distance(t, &canonical_shift(t, &w.adjoint())?, &g.adjoint())?);
            homomorphism = homomorphism.max(box_distance(
                t,
                &canonical_shift(t, &w.mul(&z)?)?,
                &g.mul(&gz)?,
            )?);
            trace = trace.max((g.trace() - w.trace()).norm());
        }
        s.residual(
            "Γ(A'∩A₂) lands in A₂'∩A₄".into(),
            "canonical-shift-range",
            range,
        );
        s.residual(
            "Γ is a ‖·‖₂ isometry".into(),
            "canonical-shift-isometry",
            isometry,
        );
        s.residual(
            "Γ is a *-homomorphism".into(),
            "canonical-shift-homomorphism",
            homomorphism,
        );
        s.residual(
            "Γ preserves the trace".into(),
            "canonical-shift-trace",
            trace,
        );
        let basis = t.box_space(0, 2)?.orthonormal_basis()?;
        let mut images = Vec::with_capacity(basis.len());
        for b in &basis {
            images.push(canonical_shift(t, &BoxElement::minus(t, 1, b.clone())?)?.mat().clone());
        }
        let target = t.box_space(2, 4)?.orthonormal_basis()?;
        let density = t.level_algebra(4)?.trace.density.clone();
        s.residual(
            "Γ(A'∩A₂) spans A₂'∩A₄".into(),
            "canonical-shift-onto",
            span_equality_residual(&images, &target, &density, t.tol()),
        );
    } else {
        s.level_cap(4, lmax);
    }
    if lmax >= 6 {
        let mut rng = rng_for(cfg.seed, "canonical-shift-coherence");
        let mut coherence = 0.0f64;
        for _ in 0..cfg.samples.min(6) {
            let w = BoxElement::random_minus(t, 1, &mut rng)?.normalized();
            let up = BoxElement::minus(t, 2, t.embed_to(w.mat(), w.level(), w.level() + 1)?)?;
            coherence = coherence.max(box_distance(
                t,
                &canonical_shift(t, &up)?,
                &canonical_shift(t, &w)?,
            )?);
        }
        s.residual(
            "Γ commutes with the box inclusions".into(),
            "canonical-shift-coherence",
            coherence,
        );
    }
    for j in [2usize, 3] {
        // Γ on A'∩Aⱼ routes through the even level above j, landing two
        // levels higher still
        let need = (j + 2 + j % 2) as isize;
        if need > lmax {
            s.level_cap(need, lmax);
            continue;
        }
        s.residual(
            format!("A'∩A_{} and Γ(A'∩A_{}) form a commuting square over Γ(A'∩A_{})", j, j, j - 2),
            "commuting-square",
            commuting_square_check(t, j)?,
        );
    }
    Ok(())
}

fn suite_two_shift(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    let samples = cfg.samples.min(8);
    for (j, m) in [(1usize, 1usize), (2, 2)] {
        let need = (j + 2 * m) as isize;
        if need > lmax {
            s.level_cap(need, lmax);
            continue;
        }
        let rep = two_shift_check(t, j, m, 1, samples, cfg.seed)?;
        s.residual(
            format!("Γᵖ(A'∩A_{}) ⊆ A'∩A_{{{}+2p}}, p ≤ {}", j, j, m),
            "two-shift-containment",
            rep.containment,
        );
        if let Some(c) = rep.commutation {
            s.residual(
                format!("Γ^{}(A'∩A_{}) commutes with A'∩A_{}", m, j, j),
                "two-shift-commutation",
                c,
            );
        }
        s.residual(
            format!("tr(w·Γ^{}(z)) = tr(w)·tr(z) on A'∩A_{}", rep.l * rep.step, j),
            "two-shift-trace-factorization",
            rep.trace_factorization,
        );
    }
    Ok(())
}

fn suite_hy(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    for n in [1usize, 2] {
        if (n + 1) as isize > lmax {
            s.level_cap((n + 1) as isize, lmax);
            continue;
        }
        for p in [2.0, 4.0, f64::INFINITY] {
            let rec = hausdorff_young_suite(t, n, p, cfg.samples, cfg.seed)?;
            s.inequality("transform-norm-bound", &rec);
        }
    }
    Ok(())
}

fn suite_ds(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    for n in [1usize, 2] {
        if (n + 1) as isize > lmax {
            s.level_cap((n + 1) as isize, lmax);
            continue;
        }
        let rec = donoho_stark_suite(t, n, cfg.samples, cfg.seed)?;
        s.inequality("support-uncertainty", &rec);
    }
    Ok(())
}

fn suite_hb(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    for n in [1usize, 2] {
        if (n + 1) as isize > lmax {
            s.level_cap((n + 1) as isize, lmax);
            continue;
        }
        let rec = hirschman_beckner_suite(t, n, cfg.samples, cfg.seed)?;
        s.inequality("entropy-uncertainty", &rec);
    }
    Ok(())
}

fn suite_young(t: &Tower, cfg: &RunConfig, s: &mut Suite) -> Result<()> {
    let lmax = t.max_level();
    if lmax < 2 {
        s.level_cap(2, lmax);
        return Ok(());
    }
    let inf = f64::INFINITY;
    for sign in [BoxSign::Plus, BoxSign::Minus] {
        for (p, q, r) in [(1.0, 1.0, 1.0), (2.0, 2.0, inf), (2.0, 1.0, 2.0), (inf, 1.0, inf)] {
            let rec = young_suite(t, sign, p, q, r, cfg.samples, cfg.seed)?;
            s.inequality("convolution-norm-bound", &rec);
        }
    }
    Ok(())
}

fn suite_entropy(
    t: &Tower,
    cfg: &RunConfig,
    s: &mut Suite,
    summary: &mut Option<EntropySummary>,
) -> Result<()> {
    let lmax = t.max_level();
    if lmax < 3 {
        s.level_cap(3, lmax);
    } else {
        match crate::entropy::shift_entropy(t) {
            Ok(se) => {
                let index = t.scalars().index;
                s.residual(
                    format!("finite depth established at n = {}", se.depth),
                    "finite-depth",
                    0.0,
                );
                s.residual(
                    "Perron–Frobenius eigenvalue of GGᵗ equals the index".into(),
                    "pf-eigenvalue",
                    (se.beta - index).abs(),
                );
                s.residual(
                    "Perron–Frobenius eigen-residual".into(),
                    "pf-residual",
                    se.pf_residual,
                );
                s.residual(
                    "GGᵗ·s = [A:B]₀·s on the trace vector".into(),
                    "trace-vector-eigenrelation",
                    se.trace_vector_residual,
                );
                s.residual(
                    "entropy growth slope equals log [A:B]₀".into(),
                    "entropy-growth-slope",
                    (se.growth_slope - index.ln()).abs(),
                );
                s.residual(
                    "H_tr(Γ) agrees with the growth slope".into(),
                    "shift-entropy-agreement",
                    se.agreement,
                );
                let growth = entropy_growth(t, (lmax / 2) as usize)?;
                *summary = Some(EntropySummary {
                    sequence: growth
                        .values
                        .iter()
                        .map(|&(n, h)| EntropyPoint {
                            n,
                            level: 2 * n,
                            value: h,
                        })
                        .collect(),
                    slope: growth.slope,
                    log_index: index.ln(),
                    agreement: se.agreement,
                    depth: se.depth,
                    beta: se.beta,
                    h_shift: se.h_shift,
                    pf_residual: se.pf_residual,
                    trace_vector_residual: se.trace_vector_residual,
                    implied_step_relative_entropy: se.implied_step_relative_entropy,
                });
            }
            Err(e) => {
                s.records.push(CheckRecord {
                    suite: s.name.into(),
                    name: format!("shift entropy unavailable: {}", e),
                    anchor: "finite-depth".into(),
                    margin: -f64::MAX,
                    pass: false,
                });
            }
        }
    }
    let tol = cfg.tolerance;
    let m2 = MultiMatrixAlgebra::full(2);
    let scalars = MultiMatrixAlgebra::tensor_factor(1, 1, 2);
    let gamma = PartitionOfUnity::new(vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)], tol)?;
    let h = partition_relative_entropy(&m2, &scalars, &gamma, tol)?;
    s.residual(
        "H_γ(M₂|ℂ) = log 2 for γ = {e₁₁, e₂₂}".into(),
        "partition-entropy",
        (h - 2.0f64.ln()).abs(),
    );
    let unit = PartitionOfUnity::new(vec![eye(2)], tol)?;
    let h0 = partition_relative_entropy(&m2, &scalars, &unit, tol)?;
    s.residual(
        "H_γ(M₂|ℂ) = 0 for γ = {1}".into(),
        "partition-entropy",
        h0.abs(),
    );
    let hm = partition_relative_entropy(&m2, &m2, &gamma, tol)?;
    s.residual("H_γ(M|M) = 0".into(), "partition-entropy", hm.abs());
    Ok(())
}

/// Renders one table from a report. Selectors: "entropy", "margins",
/// "dims".
pub fn emit_table(report: &VerificationReport, selector: &str) -> Result<String> {
    match selector {
        "entropy" => {
            let mut out = String::from("   n   level          H_tr         slope\n");
            if let Some(e) = &report.entropy {
                for pt in &e.sequence {
                    out.push_str(&format!(
                        "{:>4}  {:>6}  {:>12.8}  {:>12.8}\n",
                        pt.n, pt.level, pt.value, e.slope
                    ));
                }
            }
            Ok(out)
        }
        "margins" => {
            let mut rows = report.records.clone();
            rows.sort_by(|a, b| {
                a.margin
                    .partial_cmp(&b.margin)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.suite.cmp(&b.suite))
                    .then_with(|| a.name.cmp(&b.name))
            });
            let mut out = String::from("        margin  pass  suite            check\n");
            for r in &rows {
                out.push_str(&format!(
                    "{:>+14.6e}  {:<4}  {:<15}  {}\n",
                    r.margin,
                    if r.pass { "ok" } else { "FAIL" },
                    r.suite,
                    r.name
                ));
            }
            Ok(out)
        }
        "dims" => {
            let t = &report.tower;
            let mut out = format!(
                "model {}   index {:.6}   τ {:.6}   depth {}\n",
                t.model,
                t.index,
                t.tau,
                match t.depth {
                    Some(d) => d.to_string(),
                    None => format!("not found ≤ {}", t.depth_checked_to),
                }
            );
            out.push_str(" level  ambient  dim B'∩Aₙ  dim A'∩Aₙ\n");
            for l in &t.levels {
                out.push_str(&format!(
                    "{:>6}  {:>7}  {:>9}  {:>9}\n",
                    l.level, l.ambient_dim, l.b_commutant_dim, l.a_commutant_dim
                ));
            }
            for step in &t.inclusion_steps {
                let rows: Vec<String> = step
                    .entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|v| format!("{}", v))
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                out.push_str(&format!(
                    "G(A'∩A_{} ⊆ A'∩A_{}) = [{}]{}\n",
                    step.m,
                    step.m + 1,
                    rows.join("; "),
                    if step.connected { "" } else { "  (disconnected)" }
                ));
            }
            Ok(out)
        }
        other => Err(TowerError::Config(format!(
            "unknown table selector: {} (expected entropy, margins, or dims)",
            other
        ))),
    }
}

#[cfg(test)]
mod test {
    use super::*;

    fn tensor_config(suites: Vec<SuiteName>, max_level: isize, samples: usize) -> RunConfig {
        RunConfig {
            model: ModelConfig::Tensor { k: 1, d: 2 },
            max_level,
            tolerance: 1e-9,
            seed: 0,
            suites,
            samples,
        }
    }

    #[test]
    fn minimal_config_gets_the_defaults() {
        let cfg = parse_config_str(
            r#"{"model": {"kind": "tensor", "k": 1, "d": 2}, "max_level": 6}"#,
        )
        .unwrap();
        assert_eq!(cfg.model, ModelConfig::Tensor { k: 1, d: 2 });
        assert_eq!(cfg.max_level, 6);
        assert_eq!(cfg.tolerance, 1e-9);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.samples, 100);
        assert_eq!(cfg.suites, SuiteName::all());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        // d = 0
        let err = parse_config_str(
            r#"{"model": {"kind": "tensor", "k": 1, "d": 0}, "max_level": 6}"#,
        );
        assert!(matches!(err, Err(TowerError::Config(_))));
        // max_level 0
        assert!(parse_config_str(
            r#"{"model": {"kind": "tensor", "k": 1, "d": 2}, "max_level": 0}"#
        )
        .is_err());
        // negative tolerance
        assert!(parse_config_str(
            r#"{"model": {"kind": "tensor", "k": 1, "d": 2}, "max_level": 3, "tolerance": -1.0}"#
        )
        .is_err());
        // empty suite list
        assert!(parse_config_str(
            r#"{"model": {"kind": "tensor", "k": 1, "d": 2}, "max_level": 3, "suites": []}"#
        )
        .is_err());
        // unknown field
        assert!(parse_config_str(
            r#"{"model": {"kind": "tensor", "k": 1, "d": 2}, "max_level": 3, "hue": 7}"#
        )
        .is_err());
        // malformed document reports the position
        let msg = match parse_config_str("{\n  \"model\": oops\n}") {
            Err(TowerError::Config(m)) => m,
            other => panic!("expected config error, got {:?}", other.map(|_| ())),
        };
        assert!(msg.contains("line"), "{}", msg);
    }

    #[test]
    fn explicit_model_round_trips() {
        let a_basis: Vec<MatrixRows> = (0..2)
            .flat_map(|i| (0..2).map(move |j| matrix_to_rows(&matrix_unit(2, i, j))))
            .collect();
        let cfg = RunConfig {
            model: ModelConfig::Explicit {
                ambient_dim: 2,
                a_basis,
                b_basis: vec![matrix_to_rows(&eye(2))],
            },
            max_level: 2,
            tolerance: 1e-9,
            seed: 0,
            suites: vec![SuiteName::Tl, SuiteName::QuasiBasis],
            samples: 5,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back = parse_config_str(&text).unwrap();
        assert_eq!(back, cfg);
        // the parsed config drives a build: ℂ ⊂ M₂ has index 4
        let report = run(&back).unwrap();
        assert!(report.pass, "{:#?}", report.records);
        assert!((report.tower.index - 4.0).abs() < 1e-9);
    }

    #[test]
    fn small_verify_passes_and_summarizes() {
        let cfg = tensor_config(
            vec![SuiteName::Tl, SuiteName::QuasiBasis, SuiteName::Fourier],
            4,
            6,
        );
        let report = run(&cfg).unwrap();
        assert!(report.pass, "{:#?}", report.records);
        assert!(report.records.iter().all(|r| r.pass));
        assert_eq!(report.tower.levels[0].ambient_dim, 2);
        assert_eq!(report.tower.levels[0].b_commutant_dim, 4);
        assert_eq!(report.tower.depth, Some(1));
        // the box chain of the index-4 model doubles at each step
        assert_eq!(report.tower.inclusion_steps[0].entries, vec![vec![2.0]]);
    }

    #[test]
    fn reports_are_byte_identical() {
        let cfg = tensor_config(vec![SuiteName::Fourier, SuiteName::Hy], 3, 5);
        let a = report_to_json(&run(&cfg).unwrap());
        let b = report_to_json(&run(&cfg).unwrap());
        assert_eq!(a, b);
        // reports survive a serialization round trip
        let parsed: VerificationReport = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed, run(&cfg).unwrap());
    }

    #[test]
    fn forced_tiny_tolerance_fails_controlledly() {
        let mut cfg = tensor_config(vec![SuiteName::Tl, SuiteName::Fourier], 3, 4);
        cfg.tolerance = 1e-30;
        let report = run(&cfg).unwrap();
        assert!(!report.pass);
        assert!(report.records.iter().any(|r| !r.pass));
        // margins are still reported for the failing records
        assert!(report
            .records
            .iter()
            .filter(|r| !r.pass)
            .all(|r| r.margin.is_finite()));
    }

    #[test]
    fn degenerate_inclusion_passes_trivially() {
        let cfg = RunConfig {
            model: ModelConfig::Tensor { k: 2, d: 1 },
            max_level: 6,
            tolerance: 1e-9,
            seed: 0,
            suites: vec![SuiteName::Rotation, SuiteName::Young, SuiteName::Entropy],
            samples: 4,
        };
        let report = run(&cfg).unwrap();
        assert!(report.pass, "{:#?}", report.records);
        let e = report.entropy.unwrap();
        assert!((e.beta - 1.0).abs() < 1e-10);
        assert!(e.slope.abs() < 1e-10);
    }

    #[test]
    fn tables_render_and_reject_unknown_selectors() {
        let cfg = tensor_config(vec![SuiteName::Entropy, SuiteName::Ds], 4, 4);
        let report = run(&cfg).unwrap();
        assert!(report.pass, "{:#?}", report.records);
        let entropy = emit_table(&report, "entropy").unwrap();
        assert!(entropy.contains("slope"));
        assert!(entropy.lines().count() > 1);
        let margins = emit_table(&report, "margins").unwrap();
        let first: f64 = margins
            .lines()
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        let last: f64 = margins
            .lines()
            .last()
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(first <= last);
        let dims = emit_table(&report, "dims").unwrap();
        assert!(dims.contains("level"));
        assert!(emit_table(&report, "hue").is_err());
        // an empty record list still renders (header only)
        let mut empty = report.clone();
        empty.records.clear();
        empty.entropy = None;
        assert_eq!(emit_table(&empty, "margins").unwrap().lines().count(), 1);
        assert_eq!(emit_table(&empty, "entropy").unwrap().lines().count(), 1);
    }

    #[test]
    fn unreachable_checks_surface_as_level_cap_records() {
        let cfg = tensor_config(vec![SuiteName::TwoShift], 2, 4);
        let report = run(&cfg).unwrap();
        assert!(!report.pass);
        assert!(report.records.iter().all(|r| r.anchor == "level-cap"));
    }
}
