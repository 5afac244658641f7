//! Seeded randomized campaigns over every operation, with JSON-lines
//! reports.
//!
//! Case `i` draws from `ChaCha8Rng::seed_from_u64(seed)` moved to stream
//! `i`, so a case reproduces on its own and the report does not depend on
//! thread scheduling. Cases run in parallel and are written in index order.

use std::io::Write;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::conductor::{newform_dims, Dim, ParameterDatum};
use crate::descent::conjugate_level;
use crate::descent::{
    block_reduce_h, block_reduce_twisted, conjugator_lift, find_residue_conjugator, lift_to_kmh,
    match_classes, plain_start, prime_to_p, residue_conjugacy_suite, residue_group, ConjugacyPair,
    MatchOptions,
};
use crate::error::{Error, Result};
use crate::matrices::{
    from_y_frame, is_unitary, j_matrix, membership, theta_frame, to_y_frame, MatrixE, Shape,
};
use crate::norms::{centralizer_rank_check, integral_norm_section, norm_section, AlgebraB, SectionPath};
use crate::residue::{field, poly, FMat};
use crate::ring::{solve_unit_norm, EElement, Oe, RingContext};
use crate::sample::{
    cayley, random_km, random_kmh, random_lie_frame, random_oe, random_teichmuller, random_unit,
    torus_element,
};
use crate::twisted::{
    is_top_unipotent, norm_of, tjd, tjd_frame, tjd_twisted, tjd_twisted_frame, twisted_conjugate_level,
    unipotent_sqrt, TwistedElement,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ring,
    Tjd,
    Sqrt,
    NormSection,
    Hilbert90,
    #[serde(rename = "integral-section")]
    IntegralSection,
    BlockReduce,
    MatchClasses,
    #[serde(rename = "residue-conjugacy")]
    Residue,
    ConductorTable,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Ring,
        Suite::Tjd,
        Suite::Sqrt,
        Suite::NormSection,
        Suite::Hilbert90,
        Suite::IntegralSection,
        Suite::BlockReduce,
        Suite::MatchClasses,
        Suite::Residue,
        Suite::ConductorTable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Ring => "ring",
            Suite::Tjd => "tjd",
            Suite::Sqrt => "sqrt",
            Suite::NormSection => "norm-section",
            Suite::Hilbert90 => "hilbert90",
            Suite::IntegralSection => "integral-section",
            Suite::BlockReduce => "block-reduce",
            Suite::MatchClasses => "match-classes",
            Suite::Residue => "residue-conjugacy",
            Suite::ConductorTable => "conductor-table",
        }
    }

    fn needs_reduction(&self) -> bool {
        matches!(self, Suite::BlockReduce | Suite::MatchClasses)
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub p: u64,
    pub k: u32,
    pub n: usize,
    pub m: u32,
    pub seed: u64,
    pub trials: usize,
    pub suite: Suite,
    pub floor: Option<i32>,
    /// Conductor-table inputs: one list of character depths per parameter.
    pub depths: Vec<Vec<u32>>,
    pub m_max: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 3,
            k: 6,
            n: 1,
            m: 1,
            seed: 0,
            trials: 100,
            suite: Suite::Ring,
            floor: None,
            depths: vec![vec![0, 0, 0]],
            m_max: 3,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<RingContext> {
        let bad = |s: String| Err(Error::ConfigInvalid(s));
        if self.k < 2 {
            return bad(format!("k = {} is below 2", self.k));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.suite.needs_reduction() && (self.m == 0 || self.k < 2 * self.m + 2) {
            return bad(format!("{} needs m >= 1 and k >= 2m + 2", self.suite.name()));
        }
        if self.suite == Suite::Residue && (self.n != 1 || self.p != 3 || self.m == 0) {
            return bad("residue-conjugacy runs at p = 3, n = 1, m >= 1".into());
        }
        let ctx = RingContext::new(self.p, self.k)?;
        Ok(match self.floor {
            Some(f) => ctx.with_floor(f),
            None => ctx,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub case: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
    pub data: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: u128,
    pub unix_time: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub cases: usize,
    pub violations: usize,
    pub counterexamples: Vec<usize>,
    /// Suite-wide results that are not per case.
    pub extra: Value,
    /// The only field that varies between identical runs.
    pub timing: Timing,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub cases: Vec<CaseResult>,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.violations == 0
    }

    /// One line per case, then the summary line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.cases {
            serde_json::to_writer(&mut w, c)?;
            writeln!(w)?;
        }
        serde_json::to_writer(&mut w, &json!({ "summary": &self.summary }))?;
        writeln!(w)
    }
}

type Check = std::result::Result<Value, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err(e: Error) -> String {
    format!("error: {e}")
}

fn rng_for(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let ctx = cfg.validate()?;
    let start = Instant::now();
    let mut extra = Value::Null;
    let mut suite_violation = false;
    let results: Vec<(Check, usize)> = match cfg.suite {
        Suite::ConductorTable => {
            cfg.depths.iter().enumerate().map(|(i, d)| (conductor_case(d, cfg.m_max), i)).collect()
        }
        Suite::Residue => {
            let rep = residue_conjugacy_suite(&ctx)?;
            suite_violation = !rep.split_classes.is_empty() || rep.orbits != rep.charpoly_classes;
            extra = serde_json::to_value(&rep).expect("serializable");
            let f = field(&ctx);
            let group = residue_group(&ctx);
            let mut pool = Vec::new();
            for r in &group {
                if prime_to_p(r, &ctx)? {
                    pool.push(r.clone());
                }
            }
            let shared = ResidueShared { group, pool, f };
            par_cases(cfg, |rng| residue_case(&ctx, cfg.m, &shared, rng))
        }
        s => par_cases(cfg, |rng| {
            let case = rng.get_stream() as usize;
            match s {
                Suite::Ring => ring_case(&ctx, rng),
                Suite::Tjd if case.is_multiple_of(2) => tjd_case(&ctx, cfg.n, cfg.m, rng),
                Suite::Tjd => tjd_twisted_case(&ctx, cfg.n, cfg.m, rng),
                Suite::Sqrt => sqrt_case(&ctx, cfg.n, cfg.m, rng),
                Suite::NormSection => norm_section_case(&ctx, cfg.n, rng),
                Suite::Hilbert90 => hilbert90_case(&ctx, cfg.n, cfg.m, rng),
                Suite::IntegralSection => integral_section_case(&ctx, cfg.n, cfg.m, rng),
                Suite::BlockReduce if case.is_multiple_of(2) => block_h_case(&ctx, cfg.n, cfg.m, rng),
                Suite::BlockReduce => block_twisted_case(&ctx, cfg.n, cfg.m, rng),
                Suite::MatchClasses => match_case(&ctx, cfg.n, cfg.m, case % 10 == 9, rng),
                Suite::Residue | Suite::ConductorTable => unreachable!(),
            }
        }),
    };
    let cases: Vec<CaseResult> = results
        .into_iter()
        .map(|(r, case)| match r {
            Ok(data) => CaseResult { case, ok: true, violation: None, data },
            // the draw is fixed by (seed, stream), which is enough to replay it
            Err(v) => CaseResult {
                case,
                ok: false,
                violation: Some(v),
                data: json!({ "replay": { "seed": cfg.seed, "stream": case } }),
            },
        })
        .collect();
    let counterexamples: Vec<usize> = cases.iter().filter(|c| !c.ok).map(|c| c.case).collect();
    let summary = Summary {
        config: cfg.clone(),
        cases: cases.len(),
        violations: counterexamples.len() + usize::from(suite_violation),
        counterexamples,
        extra,
        timing: Timing {
            elapsed_ms: start.elapsed().as_millis(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        },
    };
    Ok(Report { cases, summary })
}

fn par_cases(cfg: &RunConfig, f: impl Fn(&mut ChaCha8Rng) -> Check + Sync) -> Vec<(Check, usize)> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg.seed, i);
            (f(&mut rng), i)
        })
        .collect()
}

fn eye(ctx: &RingContext, n: usize) -> MatrixE {
    MatrixE::identity(ctx, n)
}

fn frame_conj(g: &MatrixE, x: &MatrixE, m: u32) -> std::result::Result<MatrixE, String> {
    let yg = to_y_frame(g, m);
    let y = &(&yg * &to_y_frame(x, m)) * &yg.invert().map_err(err)?;
    Ok(from_y_frame(&y, m))
}

fn charpolys_agree(a: &MatrixE, b: &MatrixE) -> bool {
    a.charpoly().iter().zip(b.charpoly().iter()).all(|(x, y)| x.eq_at_prec(y))
}

fn ring_case(c: &RingContext, rng: &mut ChaCha8Rng) -> Check {
    let a = EElement::from_oe(c, random_oe(c, rng)).mul_p_pow(-rng.gen_range(0..2));
    let b = EElement::from_oe(c, random_oe(c, rng));
    ensure!(a.conj().conj().eq_at_prec(&a), "conj is not an involution on {a}");
    ensure!((a * b).conj().eq_at_prec(&(a.conj() * b.conj())), "conj not multiplicative on {a}, {b}");
    ensure!((a + b).conj().eq_at_prec(&(a.conj() + b.conj())), "conj not additive on {a}, {b}");
    let u = EElement::from_oe(c, random_unit(c, rng));
    let ui = u.inv().map_err(err)?;
    ensure!((u * ui).eq_at_prec(&c.one()), "u * u^-1 != 1 for {u}");
    ensure!(ui.inv().map_err(err)?.eq_at_prec(&u), "inverse is not an involution on {u}");
    let r = random_unit(c, rng);
    let t = r.teichmuller(c);
    let q = c.q();
    ensure!(t.pow(q * q - 1, c) == Oe::one(), "teichmuller lift of {r} has order not dividing q^2 - 1");
    ensure!(t.residue(c) == r.residue(c), "teichmuller lift of {r} changes the residue");
    let z0 = c.one() + EElement::from_oe(c, random_oe(c, rng)).mul_p_pow(1);
    let target = z0.norm();
    let z = solve_unit_norm(&target).map_err(err)?;
    ensure!(z.norm().eq_at_prec(&target), "solve_unit_norm({target}) = {z} fails the norm");
    ensure!((z - c.one()).valuation().lower_bound() >= 1, "solve_unit_norm({target}) = {z} is not 1 mod p");
    Ok(Value::Null)
}

fn tjd_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let x = random_kmh(c, n, m, rng);
    let t = tjd(&x, m).map_err(err)?;
    let (yx, ys, yu) = (to_y_frame(&x, m), to_y_frame(&t.ss, m), to_y_frame(&t.unip, m));
    let id = eye(c, 2 * n + 1);
    ensure!((&ys * &yu).eq_at_prec(&yx), "t v != gamma");
    ensure!((&yu * &ys).eq_at_prec(&yx), "v t != gamma");
    ensure!(ys.pow(t.order_prime_to_p).eq_at_prec(&id), "t^r' != I (r' = {})", t.order_prime_to_p);
    ensure!(is_top_unipotent(&t.unip, m).map_err(err)?, "v is not residually unipotent");
    ensure!(tjd_frame(&yx, 2).map_err(err)?.ss.eq_at_prec(&ys), "larger exponent changes t");
    let g = random_kmh(c, n, m, rng);
    let moved = tjd(&frame_conj(&g, &x, m)?, m).map_err(err)?.ss;
    ensure!(
        to_y_frame(&moved, m).eq_at_prec(&to_y_frame(&frame_conj(&g, &t.ss, m)?, m)),
        "tjd is not conjugation equivariant"
    );
    Ok(json!({ "order_prime_to_p": t.order_prime_to_p }))
}

fn tjd_twisted_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let dt = TwistedElement::new(random_km(c, n, m, rng));
    let t = tjd_twisted(&dt, m).map_err(err)?;
    let (yd, ys, yu) = (to_y_frame(&dt.delta, m), to_y_frame(&t.ss, m), to_y_frame(&t.unip, m));
    let id = eye(c, 2 * n + 1);
    ensure!((&ys * &theta_frame(&yu, m).map_err(err)?).eq_at_prec(&yd), "s theta(u) != delta");
    ensure!((&yu * &ys).eq_at_prec(&yd), "u s != delta");
    let ns = &ys * &theta_frame(&ys, m).map_err(err)?;
    ensure!(ns.pow(t.order_prime_to_p / 2).eq_at_prec(&id), "N(s) has the wrong order");
    ensure!(is_top_unipotent(&t.unip, m).map_err(err)?, "u is not residually unipotent");
    ensure!(tjd_twisted_frame(&yd, m, 2).map_err(err)?.ss.eq_at_prec(&ys), "larger exponent changes s");
    let g = random_km(c, n, m, rng);
    let moved = tjd_twisted(&twisted_conjugate_level(&g, &dt, m), m).map_err(err)?.ss;
    let expect = twisted_conjugate_level(&g, &TwistedElement::new(t.ss.clone()), m).delta;
    ensure!(to_y_frame(&moved, m).eq_at_prec(&to_y_frame(&expect, m)), "twisted tjd is not equivariant");
    Ok(json!({ "order_prime_to_p": t.order_prime_to_p, "twisted": true }))
}

fn sqrt_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let v = tjd(&random_kmh(c, n, m, rng), m).map_err(err)?.unip;
    let u = unipotent_sqrt(&v, m).map_err(err)?;
    let (yv, yu) = (to_y_frame(&v, m), to_y_frame(&u, m));
    ensure!((&yu * &yu).eq_at_prec(&yv), "sqrt(v)^2 != v");
    ensure!(is_top_unipotent(&u, m).map_err(err)?, "sqrt(v) is not residually unipotent");
    let w = tjd(&random_kmh(c, n, m, rng), m).map_err(err)?.unip;
    let yw = to_y_frame(&w, m);
    let back = unipotent_sqrt(&from_y_frame(&(&yw * &yw), m), m).map_err(err)?;
    ensure!(to_y_frame(&back, m).eq_at_prec(&yw), "sqrt(w^2) != w");
    Ok(Value::Null)
}

fn teichmuller_torus(c: &RingContext, n: usize, rng: &mut ChaCha8Rng) -> MatrixE {
    let units: Vec<Oe> = (0..n).map(|_| random_teichmuller(c, rng)).collect();
    torus_element(c, &units)
}

fn norm_section_case(c: &RingContext, n: usize, rng: &mut ChaCha8Rng) -> Check {
    let t = teichmuller_torus(c, n, rng);
    let g = random_kmh(c, n, 0, rng);
    let gamma = &(&g * &t) * &g.invert().map_err(err)?;
    let d = norm_section(&gamma).map_err(err)?;
    ensure!(norm_of(&d).map_err(err)?.eq_at_prec(&gamma), "gamma != delta theta(delta)");
    ensure!((&d.delta * &gamma).eq_at_prec(&(&gamma * &d.delta)), "delta does not commute with gamma");
    let r = centralizer_rank_check(&gamma, &d).map_err(err)?;
    ensure!(r.equal, "centralizer ranks {} != {}", r.rank_h, r.rank_g_twisted);
    Ok(json!({ "rank": r.rank_h }))
}

fn semisimple_in_kmh(
    c: &RingContext,
    n: usize,
    m: u32,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<MatrixE, String> {
    Ok(tjd(&random_kmh(c, n, m, rng), m).map_err(err)?.ss)
}

fn check_section(s: &TwistedElement, t: &MatrixE, m: u32) -> std::result::Result<(), String> {
    let (ys, yt) = (to_y_frame(&s.delta, m), to_y_frame(t, m));
    ensure!((&ys * &theta_frame(&ys, m).map_err(err)?).eq_at_prec(&yt), "s theta(s) != t");
    ensure!((&ys * &yt).eq_at_prec(&(&yt * &ys)), "s t != t s");
    ensure!(membership(&s.delta, Shape::Km(m)).map_err(err)?, "s is outside the level-m group");
    Ok(())
}

fn integral_section_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let t = semisimple_in_kmh(c, n, m, rng)?;
    let fast_ok = c.q() > (2 * n + 1) as u64;
    let paths: &[SectionPath] =
        if fast_ok { &[SectionPath::Fast, SectionPath::General] } else { &[SectionPath::General] };
    let mut valid = Vec::new();
    for &path in paths {
        let ok = match integral_norm_section(&t, m, Some(path)) {
            Ok((s, _)) => {
                check_section(&s, &t, m)?;
                true
            }
            Err(e) => return Err(format!("{path:?} path: {e}")),
        };
        valid.push(ok);
    }
    ensure!(valid.windows(2).all(|w| w[0] == w[1]), "paths disagree on validity");
    Ok(json!({ "paths": paths.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>() }))
}

fn hilbert90_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let t = semisimple_in_kmh(c, n, m, rng)?;
    let b = AlgebraB::new(&to_y_frame(&t, m), m);
    let big = 2 * n + 1;
    let y0 = (0..64)
        .map(|_| b.element(&(0..big).map(|_| random_oe(c, rng)).collect::<Vec<_>>()))
        .find(|y| y.det().is_unit())
        .ok_or("no unit drawn in o_E[t]")?;
    let x = &y0 * &b.sigma(&y0).invert().map_err(err)?;
    let y = crate::norms::hilbert90_kernel(&b, &x).map_err(err)?;
    ensure!(y.det().is_unit(), "kernel element is not a unit");
    ensure!((&b.sigma(&y) * &x).eq_at_prec(&y), "sigma(y) x != y");
    Ok(Value::Null)
}

fn block_h_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let t0 = semisimple_in_kmh(c, n, m, rng)?;
    let t = frame_conj(&random_kmh(c, n, m, rng), &t0, m)?;
    let (k, red) = block_reduce_h(&t, m).map_err(err)?;
    ensure!(membership(&red, Shape::Reduced(m)).map_err(err)?, "output is not in block shape");
    ensure!(membership(&k, Shape::KmH(m)).map_err(err)?, "conjugator is outside the level-m unitary group");
    ensure!(is_unitary(&k).map_err(err)?, "conjugator does not keep the form");
    ensure!(conjugate_level(&k, &t, m).map_err(err)?.eq_at_prec(&red), "k^-1 t k != reduced");
    ensure!(charpolys_agree(&t, &red), "charpoly changed");
    Ok(Value::Null)
}

fn block_twisted_case(c: &RingContext, n: usize, m: u32, rng: &mut ChaCha8Rng) -> Check {
    let s = tjd_twisted(&TwistedElement::new(random_km(c, n, m, rng)), m).map_err(err)?.ss;
    let st = twisted_conjugate_level(&random_km(c, n, m, rng), &TwistedElement::new(s), m);
    let r = block_reduce_twisted(&st, m).map_err(err)?;
    ensure!(membership(&r.reduced.delta, Shape::Reduced(m)).map_err(err)?, "output is not in block shape");
    ensure!(membership(&r.k, Shape::Km(m)).map_err(err)?, "conjugator is outside the level-m group");
    let j = j_matrix(c, 2 * n + 1);
    ensure!((&(&r.f_basis.star() * &j) * &r.k).eq_at_prec(&j), "Gram matrix changed");
    let norm = |d: &MatrixE| -> std::result::Result<MatrixE, String> {
        let y = to_y_frame(d, m);
        Ok(&y * &theta_frame(&y, m).map_err(err)?)
    };
    ensure!(charpolys_agree(&norm(&st.delta)?, &norm(&r.reduced.delta)?), "charpoly of the norm changed");
    Ok(json!({ "twisted": true }))
}

/// Diagonal principal unit `diag(z_i, 1, conj(z_i)^-1)`, `z_i = 1 mod p`.
fn principal_torus(c: &RingContext, n: usize, rng: &mut ChaCha8Rng) -> std::result::Result<MatrixE, String> {
    let mut d = vec![c.one(); 2 * n + 1];
    for i in 0..n {
        let z = c.one() + EElement::from_oe(c, random_unit(c, rng)).mul_p_pow(1);
        d[i] = z;
        d[2 * n - i] = z.conj().inv().map_err(err)?;
    }
    Ok(MatrixE::diag(c, &d))
}

/// Teichmuller torus element with squarefree residue characteristic
/// polynomial, times a principal unit, moved by a random conjugation.
fn regular_gamma(
    c: &RingContext,
    n: usize,
    m: u32,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<MatrixE, String> {
    let f = field(c);
    for _ in 0..256 {
        let t = teichmuller_torus(c, n, rng);
        if !poly::is_squarefree(&FMat::of(&t).map_err(err)?.charpoly(&f), &f) {
            continue;
        }
        let gamma = &t * &principal_torus(c, n, rng)?;
        return frame_conj(&random_kmh(c, n, m, rng), &gamma, m);
    }
    Err("no regular torus element drawn".into())
}

fn match_case(c: &RingContext, n: usize, m: u32, negative: bool, rng: &mut ChaCha8Rng) -> Check {
    let opts = MatchOptions { probes: 2, seed: rng.gen() };
    let gamma = if negative {
        let units: Vec<Oe> = (0..n)
            .map(|_| loop {
                let u = random_teichmuller(c, rng);
                if u != Oe::one() {
                    break u;
                }
            })
            .collect();
        let mut g = torus_element(c, &units);
        let lam = c
            .residue_units()
            .into_iter()
            .map(|u| u.teichmuller(c))
            .find(|u| *u != Oe::one() && u.norm(c) == 1)
            .ok_or("no norm-one unit")?;
        g.set(n, n, EElement::from_oe(c, lam));
        &g * &principal_torus(c, n, rng)?
    } else {
        regular_gamma(c, n, m, rng)?
    };
    let r = match_classes(&gamma, m, opts).map_err(err)?;
    ensure!(r.j_count == r.i_count, "|J| = {} but |I| = {}", r.j_count, r.i_count);
    ensure!(r.j_count == usize::from(!negative), "unexpected class count {}", r.j_count);
    ensure!(r.all_consistent(), "inconsistent report: {}", r.to_json());
    let v = if negative {
        tjd(&gamma, 0).map_err(err)?.unip
    } else {
        MatrixE::parse(c, r.v_target.as_ref().expect("present")).map_err(err)?
    };
    ensure!(!v.eq_at_prec(&eye(c, 2 * n + 1)), "trivial unipotent part");
    Ok(serde_json::to_value(&r).expect("serializable"))
}

struct ResidueShared {
    group: Vec<FMat>,
    pool: Vec<FMat>,
    f: RingContext,
}

/// Lifts of conjugate prime-to-`p` residues, lifted independently, must be
/// conjugate by a lift of a residue conjugator within three sweeps.
fn residue_case(c: &RingContext, m: u32, sh: &ResidueShared, rng: &mut ChaCha8Rng) -> Check {
    let f = &sh.f;
    let a = &sh.pool[rng.gen_range(0..sh.pool.len())];
    let g = &sh.group[rng.gen_range(0..sh.group.len())];
    let b = g.mul(a, f).mul(&g.inverse(f).ok_or("singular residue")?, f);
    let t = tjd(&lift_to_kmh(a, c, m).map_err(err)?, m).map_err(err)?.ss;
    let kernel = from_y_frame(&cayley(&random_lie_frame(c, 1, m, 1, rng)).map_err(err)?, m);
    let lb =
        from_y_frame(&(&to_y_frame(&lift_to_kmh(&b, c, m).map_err(err)?, m) * &to_y_frame(&kernel, m)), m);
    let t2 = tjd(&lb, m).map_err(err)?.ss;
    let (ra, rb) = (FMat::of(&to_y_frame(&t, m)).map_err(err)?, FMat::of(&to_y_frame(&t2, m)).map_err(err)?);
    let r = find_residue_conjugator(&ra, &rb, &sh.group, f).ok_or("no residue conjugator")?;
    let start = plain_start(&r, c, m).map_err(err)?;
    let out = conjugator_lift(ConjugacyPair::Plain { t: &t, t2: &t2 }, &[start], m).map_err(err)?;
    ensure!(out.sweeps <= 3, "{} sweeps", out.sweeps);
    ensure!(membership(&out.g, Shape::KmH(m)).map_err(err)?, "conjugator left the level-m unitary group");
    ensure!(to_y_frame(&frame_conj(&out.g, &t, m)?, m).eq_at_prec(&to_y_frame(&t2, m)), "g t g^-1 != t2");
    Ok(json!({ "sweeps": out.sweeps }))
}

fn conductor_case(depths: &[u32], m_max: u32) -> Check {
    ensure!(depths.len() % 2 == 1, "{} components is even", depths.len());
    let n = depths.len() / 2;
    let phi = ParameterDatum::from_depths(n, depths).map_err(err)?;
    let table = newform_dims(&phi, m_max);
    let c = table.conductor;
    for r in &table.rows {
        let want = match r.m {
            m if m < c => (Dim::Exact(0), Dim::Exact(0)),
            m if m == c => (Dim::Exact(1), Dim::Exact(1)),
            m if m == c + 1 => (Dim::Exact(2 * n as u64 + 1), Dim::AtLeast(1)),
            _ => (Dim::Unspecified, Dim::AtLeast(1)),
        };
        ensure!((r.gl_dim, r.h_dim) == want, "row m = {} is {:?}", r.m, (r.gl_dim, r.h_dim));
    }
    ensure!(table.h_monotone(), "h column drops along m -> m + 2");
    Ok(json!({ "conductor": c, "csv": table.to_csv() }))
}
