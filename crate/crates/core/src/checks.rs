//! Seeded property suites over random nonlinearities, arguments and
//! fields. Each suite is registered by name in a [`SuiteRegistry`].

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::nonlinearity::properties::{
    b_growth_bounds, conjugate_bound, delta2_bound, elliptic_form_bounds, f_bounds, h_bounds,
    power_envelope, regularization_bounds, young_product_bounds, PropertyOutcome,
};
use crate::nonlinearity::{
    check_monotonicity_lower_bound, hessian_core_inequality, CustomModel, InequalityCheck,
    LogPower, NonlinearitySpec, ShiftedPower,
};
use crate::rearrangement::{
    decreasing_rearrangement, distribution_function, hardy_littlewood_pairing, lorentz_norm,
    MeasuredField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckContext {
    pub seed: u64,
    pub samples: usize,
}

impl Default for CheckContext {
    fn default() -> Self {
        Self { seed: 1, samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckFailure {
    pub check: String,
    pub detail: String,
}

/// Result of one suite. Only the first [`MAX_REPORTED_FAILURES`] failures
/// are kept in detail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub samples: usize,
    pub checks: usize,
    pub failure_count: usize,
    pub failures: Vec<CheckFailure>,
    /// Measured constants, e.g. the largest observed ratio of two norms.
    pub measured: BTreeMap<String, f64>,
}

pub const MAX_REPORTED_FAILURES: usize = 20;

impl SuiteOutcome {
    fn new(suite: &str, samples: usize) -> Self {
        Self {
            suite: suite.to_string(),
            samples,
            checks: 0,
            failure_count: 0,
            failures: Vec::new(),
            measured: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn fail(&mut self, check: &str, detail: String) {
        self.checks += 1;
        self.failure_count += 1;
        if self.failures.len() < MAX_REPORTED_FAILURES {
            self.failures.push(CheckFailure { check: check.to_string(), detail });
        }
    }

    fn record(&mut self, check: &str, c: InequalityCheck, context: impl FnOnce() -> String) {
        if c.holds {
            self.checks += 1;
        } else {
            self.fail(check, format!("lhs {:e} rhs {:e} at {}", c.lhs, c.rhs, context()));
        }
    }

    fn record_outcomes<E: std::fmt::Display>(
        &mut self,
        group: &str,
        outcomes: Result<impl IntoIterator<Item = PropertyOutcome>, E>,
        context: impl Fn() -> String,
    ) {
        match outcomes {
            Ok(list) => {
                for o in list {
                    self.record(o.property, o.check, &context);
                }
            }
            Err(e) => self.fail(group, format!("{e} at {}", context())),
        }
    }

    fn measure_max(&mut self, key: &str, value: f64) {
        let entry = self.measured.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        *entry = entry.max(value);
    }
}

pub trait CheckSuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome;
}

fn rng_for(ctx: &CheckContext, suite: &str) -> ChaCha8Rng {
    // FNV-1a of the suite name keeps suites independent under one seed
    let mut h: u64 = 0xcbf29ce484222325;
    for b in suite.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(ctx.seed ^ h)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// A mix of analytic and sampled-index families with random parameters.
fn spec_pool(rng: &mut ChaCha8Rng) -> Vec<NonlinearitySpec> {
    let mut pool = Vec::new();
    for _ in 0..4 {
        pool.push(NonlinearitySpec::power(rng.gen_range(1.1..6.0)).expect("valid exponent"));
    }
    for p in [1.5, 2.0, 3.0, 4.0] {
        pool.push(NonlinearitySpec::power(p).expect("valid exponent"));
    }
    for _ in 0..2 {
        let (p, shift) = (rng.gen_range(1.2..5.0), rng.gen_range(0.05..2.0));
        let model = ShiftedPower::new(p, shift).expect("valid shifted power");
        pool.push(NonlinearitySpec::from_model(Arc::new(model), format!("shifted-power(p={p})")).expect("certified"));
    }
    let p = rng.gen_range(2.0..4.0);
    let model = LogPower::new(p).expect("valid log power");
    pool.push(NonlinearitySpec::from_model(Arc::new(model), format!("log-power(p={p})")).expect("certified"));
    let saturating = CustomModel::new(
        "saturating",
        |t| 1.0 + t * t / (1.0 + t * t),
        |t| 2.0 * t / ((1.0 + t * t) * (1.0 + t * t)),
    );
    pool.push(NonlinearitySpec::from_model(Arc::new(saturating), "saturating").expect("certified"));
    pool
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [NonlinearitySpec]) -> &'a NonlinearitySpec {
    &pool[rng.gen_range(0..pool.len())]
}

struct PropAbis;

impl CheckSuite for PropAbis {
    fn name(&self) -> &'static str {
        "prop-abis"
    }
    fn description(&self) -> &'static str {
        "power envelope of a, B̃(b) ≤ C B, t b ≍ B, t b² ≍ F, b² ≍ H"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let pool = spec_pool(&mut rng);
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for _ in 0..ctx.samples {
            let spec = pick(&mut rng, &pool);
            let t = log_uniform(&mut rng, 1e-3, 1e3);
            let d = spec.derived();
            let ctx_str = || format!("{} t={t:e}", spec.label());
            out.record_outcomes("abis-i", Ok::<_, String>(power_envelope(spec, t)), ctx_str);
            out.record_outcomes("abis-iv", conjugate_bound(&d, t).map(|o| [o]), ctx_str);
            out.record_outcomes("abis-vi", b_growth_bounds(&d, t), ctx_str);
            out.record_outcomes("abis-vii", f_bounds(&d, t), ctx_str);
            out.record_outcomes("abis-viii", h_bounds(&d, t), ctx_str);
        }
        out
    }
}

struct YoungProp;

impl CheckSuite for YoungProp {
    fn name(&self) -> &'static str {
        "youngprop"
    }
    fn description(&self) -> &'static str {
        "s ≤ B⁻¹(s) B̃⁻¹(s) ≤ 2s"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let pool = spec_pool(&mut rng);
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for _ in 0..ctx.samples {
            let spec = pick(&mut rng, &pool);
            let s = log_uniform(&mut rng, 1e-3, 1e3);
            let outcome = young_product_bounds(&spec.derived(), s);
            if let Ok(list) = &outcome {
                out.measure_max("max B^-1 B~^-1 / s", list[0].ratio);
            }
            out.record_outcomes("youngprop", outcome, || format!("{} s={s:e}", spec.label()));
        }
        out
    }
}

struct Ineqa;

impl CheckSuite for Ineqa {
    fn name(&self) -> &'static str {
        "ineqa"
    }
    fn description(&self) -> &'static str {
        "monotonicity of ξ ↦ a(|ξ|)ξ with explicit lower bounds"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let pool = spec_pool(&mut rng);
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for _ in 0..ctx.samples {
            let spec = pick(&mut rng, &pool);
            let dim = rng.gen_range(1..=6);
            let scale = log_uniform(&mut rng, 1e-2, 1e2);
            let xi = random_vector(&mut rng, dim, scale);
            let eta = random_vector(&mut rng, dim, scale);
            let ctx_str = || format!("{} xi={xi:?} eta={eta:?}", spec.label());
            match check_monotonicity_lower_bound(spec, &xi, &eta) {
                Ok(c) => out.record("ineqa", c, ctx_str),
                Err(e) => out.fail("ineqa", format!("{e} at {}", ctx_str())),
            }
        }
        out
    }
}

struct Elliptic;

impl CheckSuite for Elliptic {
    fn name(&self) -> &'static str {
        "elliptic"
    }
    fn description(&self) -> &'static str {
        "flux Jacobian quadratic form bounds and finite-difference agreement"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let pool = spec_pool(&mut rng);
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for _ in 0..ctx.samples {
            let spec = pick(&mut rng, &pool);
            let (n, dim) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let scale = log_uniform(&mut rng, 1e-2, 1e2);
            let xi = random_vector(&mut rng, n * dim, scale);
            let eta = random_vector(&mut rng, n * dim, 1.0);
            let outcome = elliptic_form_bounds(spec, &xi, &eta);
            if let Ok(list) = &outcome {
                out.measure_max("max finite-difference rel. error", list[2].ratio);
            }
            out.record_outcomes("elliptic", outcome, || format!("{} xi={xi:?} eta={eta:?}", spec.label()));
        }
        out
    }
}

struct HessianCore;

impl CheckSuite for HessianCore {
    fn name(&self) -> &'static str {
        "hessian-core"
    }
    fn description(&self) -> &'static str {
        "|V|² + i_a (V·ω)² ≥ (1 + min{i_a, 0}) |V|²"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for _ in 0..ctx.samples {
            let i_a = rng.gen_range(-0.999..6.0);
            let dim = rng.gen_range(1..=9);
            let scale = log_uniform(&mut rng, 1e-3, 1e3);
            let v = random_vector(&mut rng, dim, scale);
            let mut omega = random_vector(&mut rng, dim, 1.0);
            let norm = omega.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                omega[0] = 1.0;
            } else {
                omega.iter_mut().for_each(|x| *x /= norm);
            }
            match hessian_core_inequality(i_a, &v, &omega) {
                Ok(c) => out.record("hessian-core", c, || format!("i_a={i_a} v={v:?}")),
                Err(e) => out.fail("hessian-core", e.to_string()),
            }
        }
        out
    }
}

struct Approx;

impl CheckSuite for Approx {
    fn name(&self) -> &'static str {
        "approx"
    }
    fn description(&self) -> &'static str {
        "ε ≤ a_ε ≤ 1/ε, indices of a_ε within [min(i_a,0), max(s_a,0)], monotonicity kept"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let pool = spec_pool(&mut rng);
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for k in 0..ctx.samples {
            let spec = pick(&mut rng, &pool);
            let eps = [1e-1, 1e-2, 1e-3][k % 3];
            let t = log_uniform(&mut rng, 1e-4, 1e4);
            out.record_outcomes("approx", regularization_bounds(spec, eps, t), || {
                format!("{} eps={eps:e} t={t:e}", spec.label())
            });
        }
        out
    }
}

struct Delta2;

impl CheckSuite for Delta2 {
    fn name(&self) -> &'static str {
        "delta2"
    }
    fn description(&self) -> &'static str {
        "B(2t) ≤ 2^(2+s_a) B(t)"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let pool = spec_pool(&mut rng);
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);
        for _ in 0..ctx.samples {
            let spec = pick(&mut rng, &pool);
            let t = log_uniform(&mut rng, 1e-3, 1e3);
            let outcome = delta2_bound(&spec.derived(), t);
            if let Ok(o) = &outcome {
                out.measure_max("max B(2t)/B(t) / 2^(2+s_a)", o.ratio / 2f64.powf(2.0 + spec.s_a()));
            }
            out.record_outcomes("delta2", outcome.map(|o| [o]), || format!("{} t={t:e}", spec.label()));
        }
        out
    }
}

fn random_field(rng: &mut ChaCha8Rng, cells: usize) -> MeasuredField {
    let values = (0..cells)
        .map(|_| {
            let v: f64 = rng.gen_range(-3.0..3.0);
            // coarse rounding produces ties
            if rng.gen_bool(0.3) { v.round() } else { v }
        })
        .collect();
    let measures = (0..cells).map(|_| rng.gen_range(0.01..2.0)).collect();
    MeasuredField::new(values, measures).expect("positive measures")
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

struct Rearrangement;

impl CheckSuite for Rearrangement {
    fn name(&self) -> &'static str {
        "rearrangement"
    }
    fn description(&self) -> &'static str {
        "indicator Lorentz norms, Hardy–Littlewood, L^{q,q} = L^q, equimeasurability"
    }
    fn run(&self, ctx: &CheckContext) -> SuiteOutcome {
        let mut rng = rng_for(ctx, self.name());
        let mut out = SuiteOutcome::new(self.name(), ctx.samples);

        // indicators of sets made of several cells
        for _ in 0..100 {
            let q = rng.gen_range(1.05..8.0);
            let sigma = if rng.gen_bool(0.1) { f64::INFINITY } else { rng.gen_range(1.0..8.0) };
            let cells = rng.gen_range(1..20);
            let measures: Vec<f64> = (0..cells).map(|_| log_uniform(&mut rng, 1e-2, 1e2)).collect();
            let size: f64 = measures.iter().sum();
            let mut values = vec![1.0; cells];
            let mut all = measures.clone();
            // zero-valued cells must not count
            for _ in 0..rng.gen_range(0..5) {
                values.push(0.0);
                all.push(rng.gen_range(0.1..1.0));
            }
            let field = MeasuredField::new(values, all).expect("positive measures");
            let expected = if sigma.is_infinite() {
                size.powf(1.0 / q)
            } else {
                (q / sigma).powf(1.0 / sigma) * size.powf(1.0 / q)
            };
            match lorentz_norm(&decreasing_rearrangement(&field), q, sigma) {
                Ok(v) => {
                    let gap = relative_gap(v, expected);
                    out.measure_max("max indicator rel. error", gap);
                    if gap <= 1e-12 {
                        out.checks += 1;
                    } else {
                        out.fail("indicator-lorentz", format!("q={q} sigma={sigma} |E|={size}: {v} vs {expected}"));
                    }
                }
                Err(e) => out.fail("indicator-lorentz", e.to_string()),
            }
        }

        for _ in 0..500 {
            let cells = rng.gen_range(1..60);
            let v = random_field(&mut rng, cells);
            let w_values = (0..cells).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let w = MeasuredField::new(w_values, v.measures().to_vec()).expect("same measures");
            match hardy_littlewood_pairing(&v, &w) {
                Ok(c) => out.record("hardy-littlewood", c, || format!("{} cells", cells)),
                Err(e) => out.fail("hardy-littlewood", e.to_string()),
            }
        }

        for _ in 0..ctx.samples {
            let cells = rng.gen_range(1..60);
            let field = random_field(&mut rng, cells);
            let profile = decreasing_rearrangement(&field);
            let q = rng.gen_range(1.05..8.0);
            match lorentz_norm(&profile, q, q) {
                Ok(l) => {
                    let direct = field.lebesgue_norm(q);
                    let gap = relative_gap(l, direct);
                    out.measure_max("max |L^{q,q} - L^q| rel.", gap);
                    if gap <= 1e-12 {
                        out.checks += 1;
                    } else {
                        out.fail("lorentz-qq", format!("q={q}: {l} vs {direct}"));
                    }
                }
                Err(e) => out.fail("lorentz-qq", e.to_string()),
            }
            let level = rng.gen_range(0.0..3.5);
            let (a, b) = (distribution_function(&field, level), profile.distribution(level));
            if relative_gap(a, b) <= 1e-12 || a == b {
                out.checks += 1;
            } else {
                out.fail("equimeasurable", format!("level {level}: {a} vs {b}"));
            }
            // nesting L^{q,σ₁} ⊂ L^{q,σ₂}, σ₁ < σ₂: measured constant only
            let (s1, s2) = (rng.gen_range(1.0..4.0), rng.gen_range(4.0..12.0));
            if let (Ok(n1), Ok(n2)) = (lorentz_norm(&profile, q, s1), lorentz_norm(&profile, q, s2)) {
                if n1 > 0.0 {
                    out.measure_max("max |v|_{q,s2} / |v|_{q,s1}", n2 / n1);
                }
            }
            // Hölder in Lorentz spaces with conjugate exponents: measured constant only
            let w = random_field(&mut rng, cells);
            let w = MeasuredField::new(w.values().to_vec(), field.measures().to_vec()).expect("same measures");
            let (qc, sc) = (q / (q - 1.0), s1 / (s1 - 1.0).max(f64::MIN_POSITIVE));
            let sc = if s1 == 1.0 { f64::INFINITY } else { sc };
            let pairing: f64 = field
                .values()
                .iter()
                .zip(w.values())
                .zip(field.measures())
                .map(|((x, y), m)| (x * y).abs() * m)
                .sum();
            if let (Ok(a), Ok(b)) = (
                lorentz_norm(&profile, q, s1),
                lorentz_norm(&decreasing_rearrangement(&w), qc, sc),
            ) {
                if a * b > 0.0 {
                    out.measure_max("max Holder-Lorentz ratio", pairing / (a * b));
                }
            }
        }
        out
    }
}

/// Name → suite table; `all` runs every suite in name order.
pub struct SuiteRegistry {
    suites: BTreeMap<&'static str, Box<dyn CheckSuite>>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        Self { suites: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(PropAbis));
        r.register(Box::new(YoungProp));
        r.register(Box::new(Ineqa));
        r.register(Box::new(Elliptic));
        r.register(Box::new(HessianCore));
        r.register(Box::new(Approx));
        r.register(Box::new(Delta2));
        r.register(Box::new(Rearrangement));
        r
    }

    pub fn register(&mut self, suite: Box<dyn CheckSuite>) {
        self.suites.insert(suite.name(), suite);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.suites.keys().copied()
    }

    pub fn get(&self, name: &str) -> Option<&dyn CheckSuite> {
        self.suites.get(name).map(|s| s.as_ref())
    }

    /// Runs one suite, or all of them for `"all"`. `None` for unknown names.
    pub fn run(&self, name: &str, ctx: &CheckContext) -> Option<Vec<SuiteOutcome>> {
        if name == "all" {
            Some(self.suites.values().map(|s| s.run(ctx)).collect())
        } else {
            self.get(name).map(|s| vec![s.run(ctx)])
        }
    }
}
