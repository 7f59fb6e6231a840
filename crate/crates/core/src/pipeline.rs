//! End-to-end driver: parse, invariants, optional-stopping selection,
//! degree ladder, LP, certificate and verification.

use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use crate::certificate::{
    locpolys_to_json, mc_consistency, poly_to_json, verify_certificate, CertMode, Certificate, InvariantsJson, McReport,
    McVerdict, Meta, MultiplierJson, OstJson, RsmJson,
};
use crate::frontend::compile;
use crate::handelman::{build_lp, default_gamma_min, solve_lp, HandelmanError, HandelmanOptions, PRESOLVE_MIN_ROWS};
use crate::invariant::{
    check_bounded_output_range, check_inductive, emit_invariant_file, generate_interval_invariants, parse_invariant_file,
    Invariant, DEFAULT_WIDEN_AFTER,
};
use crate::lp::write_lp;
use crate::pcfg::Pcfg;
use crate::rational::Rational;
use crate::synth::{
    build_constraints, EpsilonSpec, Metric, Mode, OstCondition, OstSelection, RsmResult, SynthConfig, TemplateVarKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Exact,
    Sample,
    Both,
}

impl VerifyLevel {
    fn exact(self) -> bool {
        matches!(self, VerifyLevel::Exact | VerifyLevel::Both)
    }

    fn sample(self) -> bool {
        matches!(self, VerifyLevel::Sample | VerifyLevel::Both)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source_a: String,
    pub source_b: String,
    pub mode: Mode,
    pub metric: Metric,
    pub epsilon: EpsilonSpec,
    pub degree_min: u32,
    pub degree_max: u32,
    pub handelman_degree: Option<u32>,
    /// Invariant file contents; generated when absent.
    pub invariants_a: Option<String>,
    pub invariants_b: Option<String>,
    pub ost: Option<OstCondition>,
    pub verify: VerifyLevel,
    pub mc_samples: u64,
    pub seed: u64,
    pub max_steps: u64,
    pub timeout: Option<Duration>,
    /// Keep the text of the last LP built.
    pub emit_lp: bool,
    /// Sampled runs used to test invariant inductiveness.
    pub inductive_samples: usize,
    /// LP size from which a floating-point pre-solve guides the exact one;
    /// `None` for exact solving only.
    pub presolve_min_rows: Option<usize>,
}

impl RunConfig {
    pub fn new(source_a: impl Into<String>, source_b: impl Into<String>) -> Self {
        RunConfig {
            source_a: source_a.into(),
            source_b: source_b.into(),
            mode: Mode::Equivalence,
            metric: Metric::L1,
            epsilon: EpsilonSpec::Maximize,
            degree_min: 1,
            degree_max: 5,
            handelman_degree: None,
            invariants_a: None,
            invariants_b: None,
            ost: None,
            verify: VerifyLevel::Exact,
            mc_samples: 10_000,
            seed: 0,
            max_steps: 100_000_000,
            timeout: None,
            emit_lp: false,
            inductive_samples: 100,
            presolve_min_rows: Some(PRESOLVE_MIN_ROWS),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Refuted,
    Unknown,
    PreconditionFailed,
    Timeout,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Refuted => 0,
            Verdict::Unknown => 10,
            Verdict::PreconditionFailed => 11,
            Verdict::Timeout => 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub mode: Mode,
    pub degree: Option<u32>,
    pub epsilon: Option<Rational>,
    pub certificate: Option<Certificate>,
    pub mc: Option<McReport>,
    pub diagnostics: Vec<String>,
    pub elapsed: Duration,
    pub lp_text: Option<String>,
}

impl RunOutcome {
    /// `VERDICT <refuted|unknown> mode=<m> epsilon=<rat|-> degree=<d> time_ms=<t>`
    pub fn summary_line(&self) -> String {
        let v = if self.verdict == Verdict::Refuted { "refuted" } else { "unknown" };
        let m = match self.mode {
            Mode::Equivalence => "equivalence",
            Mode::Similarity => "similarity",
        };
        let e = self.epsilon.as_ref().map_or("-".to_string(), |e| e.to_string());
        let d = self.degree.map_or("-".to_string(), |d| d.to_string());
        format!("VERDICT {v} mode={m} epsilon={e} degree={d} time_ms={}", self.elapsed.as_millis())
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    start: Instant,
    deadline: Option<Instant>,
    diag: Vec<String>,
    lp_text: Option<String>,
}

impl Run<'_> {
    fn finish(self, verdict: Verdict) -> RunOutcome {
        self.finish_with(verdict, None, None, None, None)
    }

    fn finish_with(
        self,
        verdict: Verdict,
        degree: Option<u32>,
        epsilon: Option<Rational>,
        certificate: Option<Certificate>,
        mc: Option<McReport>,
    ) -> RunOutcome {
        RunOutcome {
            verdict,
            mode: self.cfg.mode,
            degree,
            epsilon,
            certificate,
            mc,
            diagnostics: self.diag,
            elapsed: self.start.elapsed(),
            lp_text: self.lp_text,
        }
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() > d)
    }
}

fn load_invariant(p: &Pcfg, text: Option<&str>, which: &str) -> Result<Invariant, String> {
    match text {
        Some(t) => parse_invariant_file(t, p).map_err(|e| format!("invariant file {which}: {e}")),
        None => Ok(generate_interval_invariants(p, DEFAULT_WIDEN_AFTER)),
    }
}

fn rsm_json(r: &RsmResult, p: &Pcfg) -> RsmJson {
    RsmJson {
        degree_d: r.degree,
        degree_big_d: r.handelman_degree,
        r: locpolys_to_json(&r.r, p),
        multipliers: r.multipliers.clone(),
    }
}

pub fn run(cfg: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let mut run = Run { cfg, start, deadline: cfg.timeout.map(|t| start + t), diag: Vec::new(), lp_text: None };

    if cfg.degree_min == 0 || cfg.degree_min > cfg.degree_max {
        run.diag.push(format!("empty degree range {}..={}", cfg.degree_min, cfg.degree_max));
        return run.finish(Verdict::PreconditionFailed);
    }
    if let EpsilonSpec::Fixed(e) = &cfg.epsilon {
        if cfg.mode == Mode::Similarity && !e.is_positive() {
            run.diag.push(format!("epsilon must be positive, got {e}"));
            return run.finish(Verdict::PreconditionFailed);
        }
    }
    let mut progs = Vec::new();
    for (which, src) in [("a", &cfg.source_a), ("b", &cfg.source_b)] {
        match compile(src) {
            Ok(p) => {
                if let Err(errs) = p.validate() {
                    for e in errs {
                        run.diag.push(format!("program {which}: {e}"));
                    }
                    return run.finish(Verdict::PreconditionFailed);
                }
                progs.push(p);
            }
            Err(e) => {
                run.diag.push(format!("program {which}: {e}"));
                return run.finish(Verdict::PreconditionFailed);
            }
        }
    }
    let (p1, p2) = (&progs[0], &progs[1]);
    if p1.out_vars.len() != p2.out_vars.len() {
        run.diag.push(format!(
            "programs return different numbers of values ({} vs {})",
            p1.out_vars.len(),
            p2.out_vars.len()
        ));
        return run.finish(Verdict::PreconditionFailed);
    }

    let mut invs = Vec::new();
    for (which, p, text) in [("a", p1, cfg.invariants_a.as_deref()), ("b", p2, cfg.invariants_b.as_deref())] {
        let inv = match load_invariant(p, text, which) {
            Ok(i) => i,
            Err(e) => {
                run.diag.push(e);
                return run.finish(Verdict::PreconditionFailed);
            }
        };
        let rep = check_inductive(p, &inv, cfg.inductive_samples, cfg.seed);
        if let Some(v) = rep.violations.first() {
            run.diag.push(format!("invariant {which} is not inductive at {}: {} ({:?})", v.location, v.atom, v.kind));
            return run.finish(Verdict::PreconditionFailed);
        }
        invs.push(inv);
    }
    let (inv1, inv2) = (&invs[0], &invs[1]);
    if cfg.mode == Mode::Similarity && cfg.metric.needs_bounded_outputs() {
        for (which, p, inv) in [("a", p1, inv1), ("b", p2, inv2)] {
            if !check_bounded_output_range(p, inv) {
                run.diag.push(format!(
                    "program {which}: the invariant does not bound the outputs at {}, so finite first moments \
                     required by the {} metric cannot be established",
                    p.labels[p.out],
                    cfg.metric.name()
                ));
                return run.finish(Verdict::PreconditionFailed);
            }
        }
    }

    for d in cfg.degree_min..=cfg.degree_max {
        if run.timed_out() {
            run.diag.push("timeout".into());
            return run.finish(Verdict::Timeout);
        }
        let sel = select_ost_logged(&mut run, p1, inv1, p2, inv2, d);
        let scfg = SynthConfig { mode: cfg.mode, metric: cfg.metric, epsilon: cfg.epsilon.clone(), degree: d, ost: sel.condition };
        let prob = match build_constraints(p1, inv1, p2, inv2, &scfg) {
            Ok(p) => p,
            Err(e) => {
                run.diag.push(e.to_string());
                return run.finish(Verdict::PreconditionFailed);
            }
        };
        let big_d = cfg.handelman_degree.unwrap_or(d + 1);
        let hopts = HandelmanOptions {
            deadline: run.deadline,
            presolve_min_rows: cfg.presolve_min_rows,
            ..HandelmanOptions::default()
        };
        let hl = match build_lp(&prob.constraints, big_d, &hopts) {
            Ok(h) => h,
            Err(e) => {
                run.diag.push(format!("degree {d}: {e}"));
                continue;
            }
        };
        if cfg.emit_lp {
            run.lp_text = Some(write_lp(&hl.instance));
        }
        let solved = match solve_lp(&prob.constraints, &hl, big_d, &hopts) {
            Ok(s) => s,
            Err(HandelmanError::Timeout) => {
                run.diag.push(format!("degree {d}: timeout during LP solve"));
                return run.finish(Verdict::Timeout);
            }
            Err(e) => {
                run.diag.push(format!("degree {d}: {e}"));
                continue;
            }
        };
        let Some(s) = solved else {
            run.diag.push(format!("degree {d}: no certificate (LP infeasible)"));
            continue;
        };
        let cs = &prob.constraints;
        let value = |t: u32| s.template_values[t as usize].clone();
        let epsilon = match (&cfg.mode, &cfg.epsilon) {
            (Mode::Equivalence, _) => None,
            (Mode::Similarity, EpsilonSpec::Fixed(e)) => Some(e.clone()),
            (Mode::Similarity, EpsilonSpec::Maximize) => {
                let e = value(cs.objective.expect("maximized epsilon"));
                if !e.is_positive() {
                    run.diag.push(format!("degree {d}: best epsilon {e} is not positive"));
                    continue;
                }
                Some(e)
            }
        };
        let bound = cs.registry.find(&TemplateVarKind::BoundC).map(value);
        let u: Vec<_> = prob.templates.u.iter().map(|t| t.instantiate(&value)).collect();
        let l: Vec<_> = prob.templates.l.iter().map(|t| t.instantiate(&value)).collect();
        let cert = Certificate {
            mode: match cfg.mode {
                Mode::Equivalence => CertMode::EquivalenceRefuted,
                Mode::Similarity => CertMode::SimilarityRefuted,
            },
            metric: (cfg.mode == Mode::Similarity).then(|| cfg.metric.name().to_string()),
            epsilon: epsilon.clone(),
            degree_d: d,
            degree_big_d: big_d,
            f: poly_to_json(&prob.templates.f.instantiate(&value), &p1.out_var_names()),
            uesm: locpolys_to_json(&u, p1),
            lesm: locpolys_to_json(&l, p2),
            multipliers: cs
                .entailments
                .iter()
                .zip(&s.multipliers)
                .map(|(e, m)| MultiplierJson { entailment: e.label.clone(), lambda: m.clone() })
                .collect(),
            ost: OstJson {
                condition: sel.condition.name().to_string(),
                reason: sel.reason.clone(),
                bound,
                rsm_a: sel.rsm.as_ref().map(|(a, _)| rsm_json(a, p1)),
                rsm_b: sel.rsm.as_ref().map(|(_, b)| rsm_json(b, p2)),
            },
            invariants: InvariantsJson { a: emit_invariant_file(inv1, p1), b: emit_invariant_file(inv2, p2) },
            meta: Meta {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed,
                timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |t| t.as_secs()),
                gamma_min: default_gamma_min(),
                program_a: cfg.source_a.clone(),
                program_b: cfg.source_b.clone(),
                assumed: vec!["every E[|Y_i|] is finite for the stopped processes".to_string()],
            },
        };
        if cfg.verify.exact() {
            if let Err(e) = verify_certificate(&cert, p1, p2) {
                run.diag.push(format!("degree {d}: certificate failed verification: {e}"));
                continue;
            }
        }
        let mut mc = None;
        if cfg.verify.sample() {
            match mc_consistency(&cert, p1, p2, cfg.mc_samples, cfg.seed, cfg.max_steps) {
                Ok(r) => {
                    match r.verdict {
                        McVerdict::Consistent => {}
                        McVerdict::Inconclusive => run.diag.push("Monte-Carlo check inconclusive (censored runs)".into()),
                        McVerdict::Inconsistent => {
                            run.diag.push(format!(
                                "degree {d}: Monte-Carlo estimates contradict the certificate (E1 = {} ± {}, E2 = {} ± {})",
                                r.a.mean, r.a.half_width, r.b.mean, r.b.half_width
                            ));
                            return run.finish(Verdict::Unknown);
                        }
                    }
                    mc = Some(r);
                }
                Err(e) => run.diag.push(format!("Monte-Carlo check failed: {e}")),
            }
        }
        return run.finish_with(Verdict::Refuted, Some(d), epsilon, Some(cert), mc);
    }
    run.finish(Verdict::Unknown)
}

fn select_ost_logged(run: &mut Run, p1: &Pcfg, inv1: &Invariant, p2: &Pcfg, inv2: &Invariant, d: u32) -> OstSelection {
    let sel = crate::synth::select_ost(p1, inv1, p2, inv2, d, run.cfg.ost);
    run.diag.push(format!("degree {d}: optional stopping {} ({})", sel.condition.name(), sel.reason));
    sel
}
