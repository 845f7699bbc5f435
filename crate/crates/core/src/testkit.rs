//! Differential and property-based checks that tie the evaluator, the
//! translation and the logic interpreter together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{allocation_pieces, fmt_rational, fv, int, AgentId, Expr, Interval, Op, Protocol, Rational, Value};
use crate::interp::{Evaluator, RuntimeError, Trace};
use crate::logic::{self, interpret, interpret_term, Assignment, Formula, Term, VarKind};
use crate::translate::{constraint_of, fresh_count, translate, translate_in, ConstraintTriple, IteMode};
use crate::typecheck::TyCtx;
use crate::valuation::{random_positive_valuation, random_valuation, MarkPolicy, PiecewiseValuation};

/// `values[a][b]` is agent `a`'s value for agent `b`'s share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyMatrix {
    pub values: Vec<Vec<Rational>>,
}

impl EnvyMatrix {
    pub fn size(&self) -> usize {
        self.values.len()
    }

    /// Agents that strictly prefer someone else's share.
    pub fn envious(&self) -> Vec<usize> {
        (0..self.size())
            .filter(|&a| self.values[a].iter().any(|v| *v > self.values[a][a]))
            .collect()
    }

    pub fn is_envy_free(&self) -> bool {
        self.envious().is_empty()
    }

    /// Multiplies row `a` by `factors[a]`.
    pub fn rescale(&self, factors: &[Rational]) -> EnvyMatrix {
        EnvyMatrix {
            values: self
                .values
                .iter()
                .zip(factors)
                .map(|(row, f)| row.iter().map(|v| v * f).collect())
                .collect(),
        }
    }
}

impl fmt::Display for EnvyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, row) in self.values.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(fmt_rational).collect();
            writeln!(f, "agent{}: {}", a + 1, cells.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("value {value} is not an allocation for {agents} agent(s)")]
pub struct ShapeMismatch {
    pub value: String,
    pub agents: usize,
}

/// Envy matrix of an allocation under `profile`, and whether it is envy-free.
pub fn envy_check(alloc: &Value, profile: &[PiecewiseValuation]) -> Result<(EnvyMatrix, bool), ShapeMismatch> {
    let shares = allocation_pieces(alloc, profile.len() as u32).ok_or_else(|| ShapeMismatch {
        value: alloc.to_string(),
        agents: profile.len(),
    })?;
    Ok(envy_matrix(&shares, profile)).map(|m| {
        let ok = m.is_envy_free();
        (m, ok)
    })
}

pub fn envy_matrix(shares: &[Vec<Interval>], profile: &[PiecewiseValuation]) -> EnvyMatrix {
    EnvyMatrix {
        values: profile
            .iter()
            .map(|v| {
                shares
                    .iter()
                    .map(|pieces| pieces.iter().map(|p| v.value_of(p)).sum())
                    .collect()
            })
            .collect(),
    }
}

/// Seed for trial `i` of a run rooted at `seed`.
pub fn trial_seed(seed: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng.next_u64()
}

/// Runs `trials` independent trials, each with its own state from `init`.
/// Results come back in trial order whether or not the `parallel` feature is on.
pub fn run_trials_with<S, T, I, F>(trials: usize, seed: u64, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials)
            .into_par_iter()
            .map_init(init, |s, i| f(s, i, trial_seed(seed, i as u64)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(trials, seed, init, f)
    }
}

/// The same as [`run_trials_with`] on the calling thread.
pub fn run_trials_sequential<S, T, I, F>(trials: usize, seed: u64, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, usize, u64) -> T,
{
    let mut state = init();
    (0..trials)
        .map(|i| f(&mut state, i, trial_seed(seed, i as u64)))
        .collect()
}

pub fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    run_trials_with(trials, seed, || (), |_, _, s| f(s))
}

/// Which random valuations a probe draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProfileClass {
    /// Every density strictly positive, as the endpoint axioms assume.
    #[default]
    Positive,
    /// Zero-density stretches allowed.
    Gaps,
}

/// Strictly positive random profile.
pub fn random_profile(seed: u64, n_agents: usize, max_segments: usize) -> Vec<PiecewiseValuation> {
    random_profile_in(ProfileClass::Positive, seed, n_agents, max_segments)
}

pub fn random_profile_in(
    class: ProfileClass,
    seed: u64,
    n_agents: usize,
    max_segments: usize,
) -> Vec<PiecewiseValuation> {
    (0..n_agents)
        .map(|a| {
            let s = trial_seed(seed, a as u64);
            match class {
                ProfileClass::Positive => random_positive_valuation(s, max_segments),
                ProfileClass::Gaps => random_valuation(s, max_segments),
            }
        })
        .collect()
}

/// Mark policies a probe runs under.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyChoice {
    /// The same policy for every agent.
    All(MarkPolicy),
    /// Each agent draws leftmost, rightmost or a random offset per trial.
    Mixed,
}

impl PolicyChoice {
    fn draw(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<MarkPolicy> {
        match self {
            PolicyChoice::All(p) => vec![p.clone(); n],
            PolicyChoice::Mixed => (0..n)
                .map(|_| match rng.gen_range(0..3) {
                    0 => MarkPolicy::Leftmost,
                    1 => MarkPolicy::Rightmost,
                    _ => MarkPolicy::Offset(Rational::new(rng.gen_range(0..=8).into(), 8.into())),
                })
                .collect(),
        }
    }
}

/// Everything needed to reproduce one failing trial.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub trial: usize,
    pub seed: u64,
    pub profile: Vec<PiecewiseValuation>,
    pub policies: Vec<MarkPolicy>,
    pub value: Option<Value>,
    pub witness: BTreeMap<String, String>,
    pub reason: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trial {} (seed {}): {}", self.trial, self.seed, self.reason)?;
        for (a, v) in self.profile.iter().enumerate() {
            let pts: Vec<String> = v.breakpoints().iter().map(fmt_rational).collect();
            let ds: Vec<String> = v.densities().iter().map(fmt_rational).collect();
            writeln!(
                f,
                "  agent{} breakpoints [{}] densities [{}] policy {:?}",
                a + 1,
                pts.join(" "),
                ds.join(" "),
                self.policies[a]
            )?;
        }
        if let Some(v) = &self.value {
            writeln!(f, "  result {v}")?;
        }
        for (k, v) in &self.witness {
            writeln!(f, "  {k} = {v}")?;
        }
        Ok(())
    }
}

/// Sampling parameters shared by the randomized probes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub policy: PolicyChoice,
    pub class: ProfileClass,
    pub max_segments: usize,
}

impl Sampling {
    pub fn new(policy: PolicyChoice) -> Self {
        Sampling {
            policy,
            class: ProfileClass::Positive,
            max_segments: 6,
        }
    }

    pub fn with_class(mut self, class: ProfileClass) -> Self {
        self.class = class;
        self
    }

    fn draw(&self, seed: u64, n: usize) -> (Vec<PiecewiseValuation>, Vec<MarkPolicy>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = random_profile_in(self.class, rng.next_u64(), n, self.max_segments);
        let policies = self.policy.draw(&mut rng, n);
        (profile, policies)
    }
}

/// `checked` trials reached a result and were compared against the
/// constraint; `stuck` trials raised a runtime error and say nothing about
/// soundness.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub trials: usize,
    pub checked: usize,
    pub stuck: Vec<(u64, RuntimeError)>,
    pub failure: Option<Counterexample>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// The valuation of the logical variables that a traced run realises.
pub fn witness(trace: &Trace, result: &Value, mode: IteMode) -> Assignment {
    let mut a = Assignment::new();
    for m in &trace.marks {
        let site = match mode {
            IteMode::Core => m.site_core,
            IteMode::Impl => m.site_impl,
        };
        a.insert(VarKind::Y(site), Value::Real(m.value.clone()));
    }
    if mode == IteMode::Impl {
        for i in &trace.ites {
            a.insert(VarKind::Y(i.site_impl), i.value.clone());
        }
    }
    a.insert(VarKind::Ret, result.clone());
    a
}

fn show(a: &Assignment) -> BTreeMap<String, String> {
    a.iter()
        .map(|(k, v)| {
            let name = match k {
                VarKind::Y(i) => format!("y{i}"),
                VarKind::X(x) => x.clone(),
                VarKind::Ret => "ret".to_string(),
            };
            (name, v.to_string())
        })
        .collect()
}

fn constraint(triple: &ConstraintTriple) -> Formula {
    let ret = logic::var(logic::Var::ret(logic::sort_of(&triple.result)));
    logic::and(vec![triple.side.clone(), logic::eq(ret, triple.result.clone())])
}

/// Samples profiles, runs the protocol and checks that the run's witness
/// satisfies the constraint produced by `translator`.
pub fn soundness_probe_with<T>(
    protocol: &Protocol,
    sampling: &Sampling,
    mode: IteMode,
    trials: usize,
    seed: u64,
    translator: T,
) -> ProbeReport
where
    T: Fn(&Expr, IteMode) -> ConstraintTriple + Sync + Send,
{
    soundness_probe_by(protocol, sampling, mode, trials, seed, translator, false)
}

/// [`soundness_probe`] pinned to the calling thread.
pub fn soundness_probe_sequential(
    protocol: &Protocol,
    sampling: &Sampling,
    mode: IteMode,
    trials: usize,
    seed: u64,
) -> ProbeReport {
    soundness_probe_by(protocol, sampling, mode, trials, seed, |e, m| translate(0, e, m), true)
}

fn soundness_probe_by<T>(
    protocol: &Protocol,
    sampling: &Sampling,
    mode: IteMode,
    trials: usize,
    seed: u64,
    translator: T,
    sequential: bool,
) -> ProbeReport
where
    T: Fn(&Expr, IteMode) -> ConstraintTriple + Sync + Send,
{
    enum Trial {
        Ok,
        Stuck(u64, RuntimeError),
        Fail(Box<Counterexample>),
    }
    let n = protocol.agent_count as usize;
    let init = || (constraint(&translator(&protocol.expr, mode)), Evaluator::new(protocol));
    let one = |(c, ev): &mut (Formula, Evaluator), trial: usize, s: u64| {
        let (profile, policies) = sampling.draw(s, n);
        let (value, trace) = match ev.evaluate(&profile, &policies) {
            Ok(r) => r,
            Err(e) => return Trial::Stuck(s, e),
        };
        let w = witness(&trace, &value, mode);
        let reason = match interpret(c, &profile, &w) {
            Ok(true) => return Trial::Ok,
            Ok(false) => "witness falsifies the constraint".to_string(),
            Err(e) => format!("constraint not evaluable: {e}"),
        };
        Trial::Fail(Box::new(Counterexample {
            trial,
            seed: s,
            profile,
            policies,
            value: Some(value),
            witness: show(&w),
            reason,
        }))
    };
    let results = if sequential {
        run_trials_sequential(trials, seed, init, one)
    } else {
        run_trials_with(trials, seed, init, one)
    };
    let mut report = ProbeReport {
        trials,
        checked: 0,
        stuck: Vec::new(),
        failure: None,
    };
    for r in results {
        match r {
            Trial::Ok => report.checked += 1,
            Trial::Stuck(s, e) => report.stuck.push((s, e)),
            Trial::Fail(c) => {
                report.checked += 1;
                if report.failure.is_none() {
                    report.failure = Some(*c);
                }
            }
        }
    }
    report
}

pub fn soundness_probe(
    protocol: &Protocol,
    sampling: &Sampling,
    mode: IteMode,
    trials: usize,
    seed: u64,
) -> ProbeReport {
    soundness_probe_with(protocol, sampling, mode, trials, seed, |e, m| translate(0, e, m))
}

/// Most mark queries a completeness probe will enumerate.
pub const COMPLETENESS_MARK_LIMIT: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("{0} mark queries exceed the probe limit of {COMPLETENESS_MARK_LIMIT}")]
    TooManyMarks(usize),
    #[error("grid resolution must be positive")]
    Grid,
}

/// Result of one completeness probe: every grid point that satisfies the
/// constraint, paired with the result it forces.
#[derive(Clone, Debug)]
pub struct GridReport {
    pub points: usize,
    pub satisfying: Vec<(Vec<Rational>, Value)>,
    pub failure: Option<Counterexample>,
}

impl GridReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Enumerates `y`-assignments on the grid `{k / resolution}`; each one that
/// satisfies the core-mode constraint is replayed as scripted marks and the
/// run must succeed with the same result.
pub fn completeness_probe_with<T>(
    protocol: &Protocol,
    profile: &[PiecewiseValuation],
    resolution: u32,
    translator: T,
) -> Result<GridReport, ProbeError>
where
    T: Fn(&Expr, IteMode) -> ConstraintTriple,
{
    if resolution == 0 {
        return Err(ProbeError::Grid);
    }
    let marks = protocol.expr.count_marks();
    if marks > COMPLETENESS_MARK_LIMIT {
        return Err(ProbeError::TooManyMarks(marks));
    }
    let triple = translator(&protocol.expr, IteMode::Core);
    let grid: Vec<Rational> = (0..=resolution)
        .map(|k| Rational::new(k.into(), resolution.into()))
        .collect();
    let ev = Evaluator::new(protocol);
    let n = protocol.agent_count as usize;
    let mut report = GridReport {
        points: 0,
        satisfying: Vec::new(),
        failure: None,
    };
    let mut idx = vec![0usize; marks];
    loop {
        report.points += 1;
        let ys: Vec<Rational> = idx.iter().map(|&i| grid[i].clone()).collect();
        let mut a = Assignment::new();
        for (i, y) in ys.iter().enumerate() {
            a.insert(VarKind::Y(i + 1), Value::Real(y.clone()));
        }
        if let Some(value) = satisfied(&triple, profile, &a) {
            let script: BTreeMap<usize, Rational> = ys.iter().cloned().enumerate().map(|(i, y)| (i + 1, y)).collect();
            let policies = vec![MarkPolicy::Scripted(script); n];
            let replay = ev.evaluate(profile, &policies);
            let reason = match &replay {
                Ok((v, _)) if v.semantic_eq(&value) => None,
                Ok((v, _)) => Some(format!("replay produced {v}, constraint forces {value}")),
                Err(e) => Some(format!("replay failed: {e}")),
            };
            if let Some(reason) = reason {
                a.insert(VarKind::Ret, value.clone());
                report.failure = Some(Counterexample {
                    trial: report.points - 1,
                    seed: 0,
                    profile: profile.to_vec(),
                    policies,
                    value: Some(value),
                    witness: show(&a),
                    reason,
                });
                return Ok(report);
            }
            report.satisfying.push((ys, value));
        }
        // odometer step
        let mut pos = 0;
        while pos < marks && idx[pos] == resolution as usize {
            idx[pos] = 0;
            pos += 1;
        }
        if pos == marks {
            break;
        }
        idx[pos] += 1;
    }
    Ok(report)
}

fn satisfied(triple: &ConstraintTriple, profile: &[PiecewiseValuation], a: &Assignment) -> Option<Value> {
    if !interpret(&triple.side, profile, a).ok()? {
        return None;
    }
    interpret_term(&triple.result, profile, a).ok()
}

pub fn completeness_probe(
    protocol: &Protocol,
    profile: &[PiecewiseValuation],
    resolution: u32,
) -> Result<GridReport, ProbeError> {
    completeness_probe_with(protocol, profile, resolution, |e, m| translate(0, e, m))
}

/// Outcome of many sampled runs of one protocol.
#[derive(Clone, Debug, Default)]
pub struct SampleReport {
    pub runs: usize,
    pub envy_free: usize,
    pub runtime_errors: Vec<(u64, RuntimeError)>,
    pub envious: Vec<(u64, EnvyMatrix)>,
}

/// Runs the protocol on `runs` random profiles under `policy` and
/// checks every outcome with [`envy_check`].
pub fn sample_runs(protocol: &Protocol, sampling: &Sampling, runs: usize, seed: u64) -> SampleReport {
    sample_runs_by(protocol, sampling, runs, seed, false)
}

/// [`sample_runs`] pinned to the calling thread.
pub fn sample_runs_sequential(protocol: &Protocol, sampling: &Sampling, runs: usize, seed: u64) -> SampleReport {
    sample_runs_by(protocol, sampling, runs, seed, true)
}

enum Outcome {
    Fair,
    Envy(u64, EnvyMatrix),
    Error(u64, RuntimeError),
}

fn sample_runs_by(protocol: &Protocol, sampling: &Sampling, runs: usize, seed: u64, sequential: bool) -> SampleReport {
    let n = protocol.agent_count as usize;
    let one = |ev: &mut Evaluator, _: usize, s: u64| {
        let (profile, policies) = sampling.draw(s, n);
        match ev.evaluate(&profile, &policies) {
            Err(e) => Outcome::Error(s, e),
            Ok((v, _)) => match envy_check(&v, &profile) {
                Ok((_, true)) => Outcome::Fair,
                Ok((m, false)) => Outcome::Envy(s, m),
                Err(e) => Outcome::Error(s, RuntimeError::Stuck(e.to_string())),
            },
        }
    };
    let init = || Evaluator::new(protocol);
    let outcomes = if sequential {
        run_trials_sequential(runs, seed, init, one)
    } else {
        run_trials_with(runs, seed, init, one)
    };
    let mut report = SampleReport {
        runs,
        ..SampleReport::default()
    };
    for o in outcomes {
        match o {
            Outcome::Fair => report.envy_free += 1,
            Outcome::Envy(s, m) => report.envious.push((s, m)),
            Outcome::Error(s, e) => report.runtime_errors.push((s, e)),
        }
    }
    report
}

/// Random expressions over a fixed pool of free variables.
pub struct ExprGen {
    rng: ChaCha8Rng,
    agents: u32,
    free: bool,
    bound: Vec<(String, Gen)>,
    next_name: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Gen {
    Real,
    Bool,
    Interval,
    Pair,
}

/// Free variables [`ExprGen`] may use when open terms are requested.
pub fn free_pool() -> TyCtx {
    use crate::ast::Ty;
    TyCtx::new()
        .with("I", Ty::Interval)
        .with("J", Ty::Interval)
        .with("m", Ty::Real)
        .with("b", Ty::Bool)
}

impl ExprGen {
    /// `free` allows the variables of [`free_pool`] to occur.
    pub fn new(seed: u64, agents: u32, free: bool) -> Self {
        ExprGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            agents: agents.max(1),
            free,
            bound: Vec::new(),
            next_name: 0,
        }
    }

    /// A random expression of allocation-like type (an interval pair) or any
    /// other sort, with nesting at most `depth`.
    pub fn expr(&mut self, depth: u32) -> Expr {
        let g = match self.rng.gen_range(0..4) {
            0 => Gen::Real,
            1 => Gen::Bool,
            2 => Gen::Interval,
            _ => Gen::Pair,
        };
        self.of(g, depth)
    }

    /// A closed protocol body of pair type for two agents.
    pub fn pair(&mut self, depth: u32) -> Expr {
        self.of(Gen::Pair, depth)
    }

    fn agent(&mut self) -> AgentId {
        AgentId::new(self.rng.gen_range(1..=self.agents)).expect("positive")
    }

    fn position(&mut self) -> Expr {
        Expr::real(Rational::new(self.rng.gen_range(0..=4).into(), 4.into()))
    }

    fn var_of(&mut self, g: Gen) -> Option<Expr> {
        let mut names: Vec<String> = self
            .bound
            .iter()
            .filter(|(_, t)| *t == g)
            .map(|(x, _)| x.clone())
            .collect();
        if self.free {
            let pool: &[&str] = match g {
                Gen::Real => &["m"],
                Gen::Bool => &["b"],
                Gen::Interval => &["I", "J"],
                Gen::Pair => &[],
            };
            names.extend(pool.iter().map(|s| s.to_string()));
        }
        if names.is_empty() {
            None
        } else {
            let i = self.rng.gen_range(0..names.len());
            Some(Expr::var(names.swap_remove(i)))
        }
    }

    fn leaf(&mut self, g: Gen) -> Expr {
        if self.rng.gen_bool(0.5) {
            if let Some(v) = self.var_of(g) {
                return v;
            }
        }
        match g {
            Gen::Real => self.position(),
            Gen::Bool => Expr::Value(Value::Bool(self.rng.gen_bool(0.5))),
            Gen::Interval => Expr::Cake,
            Gen::Pair => Expr::divide(Expr::Cake, self.position()),
        }
    }

    fn let_of(&mut self, g: Gen, depth: u32) -> Expr {
        let bound_g = [Gen::Real, Gen::Bool, Gen::Interval, Gen::Pair][self.rng.gen_range(0..4)];
        let bound = self.of(bound_g, depth - 1);
        self.next_name += 1;
        let x = format!("v{}", self.next_name);
        self.bound.push((x.clone(), bound_g));
        let body = self.of(g, depth - 1);
        self.bound.pop();
        Expr::let_in(x, bound, body)
    }

    fn of(&mut self, g: Gen, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(g);
        }
        let d = depth - 1;
        let choice = self.rng.gen_range(0..6);
        if choice == 0 {
            let c = self.of(Gen::Bool, d);
            let t = self.of(g, d);
            let f = self.of(g, d);
            return Expr::ite(c, t, f);
        }
        if choice == 1 {
            return self.let_of(g, depth);
        }
        match g {
            Gen::Real => match self.rng.gen_range(0..6) {
                0 => Expr::Left(Box::new(self.of(Gen::Interval, d))),
                1 => Expr::Right(Box::new(self.of(Gen::Interval, d))),
                2 | 3 => {
                    let a = self.agent();
                    Expr::eval(a, self.of(Gen::Interval, d))
                }
                4 => {
                    let a = self.agent();
                    let from = self.of(Gen::Real, d);
                    let target = self.of(Gen::Real, d);
                    Expr::mark(a, from, target)
                }
                _ => {
                    let op = [Op::Add, Op::Sub, Op::Mul][self.rng.gen_range(0..3)].clone();
                    let x = self.of(Gen::Real, d);
                    let y = self.of(Gen::Real, d);
                    Expr::op(op, vec![x, y])
                }
            },
            Gen::Bool => match self.rng.gen_range(0..4) {
                0 => Expr::op(Op::Not, vec![self.of(Gen::Bool, d)]),
                1 => {
                    let op = [Op::And, Op::Or][self.rng.gen_range(0..2)].clone();
                    let x = self.of(Gen::Bool, d);
                    let y = self.of(Gen::Bool, d);
                    Expr::op(op, vec![x, y])
                }
                2 => {
                    let x = self.of(Gen::Interval, d);
                    let y = self.of(Gen::Interval, d);
                    Expr::op(Op::Eq, vec![x, y])
                }
                _ => {
                    let op = [Op::Le, Op::Ge, Op::Lt, Op::Gt][self.rng.gen_range(0..4)].clone();
                    let x = self.of(Gen::Real, d);
                    let y = self.of(Gen::Real, d);
                    Expr::op(op, vec![x, y])
                }
            },
            Gen::Interval => {
                let k = self.rng.gen_range(1..=2);
                Expr::proj(k, self.of(Gen::Pair, d))
            }
            Gen::Pair => {
                if self.rng.gen_bool(0.5) {
                    let p = self.of(Gen::Interval, d);
                    let at = self.of(Gen::Real, d);
                    Expr::divide(p, at)
                } else {
                    let x = self.of(Gen::Interval, d);
                    let y = self.of(Gen::Interval, d);
                    Expr::Tuple(vec![x, y])
                }
            }
        }
    }
}

/// Evaluates `protocol` on a fresh profile for every seed until some run
/// ends in envy, returning that run's profile and envy matrix.
pub fn find_envy(
    protocol: &Protocol,
    sampling: &Sampling,
    tries: usize,
    seed: u64,
) -> Option<(Vec<PiecewiseValuation>, Value, EnvyMatrix)> {
    let n = protocol.agent_count as usize;
    let ev = Evaluator::new(protocol);
    for i in 0..tries {
        let (profile, policies) = sampling.draw(trial_seed(seed, i as u64), n);
        if let Ok((v, _)) = ev.evaluate(&profile, &policies) {
            if let Ok((m, false)) = envy_check(&v, &profile) {
                return Some((profile, v, m));
            }
        }
    }
    None
}

/// Mark term `ν_a([ℓ, y]) = v` equalities removed from `f`; used to show that
/// a weakened translation still passes the soundness probe.
pub fn drop_mark_equalities(f: &Formula) -> Formula {
    use crate::logic::{FormulaNode, TermNode};
    fn is_mark_eq(a: &Term) -> bool {
        matches!(&**a, TermNode::App(logic::Func::Nu(_), args)
            if matches!(&*args[0], TermNode::App(logic::Func::Interval, ends)
                if matches!(&*ends[1], TermNode::Var(v) if matches!(v.kind, VarKind::Y(_)))))
    }
    match &**f {
        FormulaNode::Eq(a, _) if is_mark_eq(a) => logic::tt(),
        FormulaNode::And(gs) => logic::and(gs.iter().map(drop_mark_equalities).collect()),
        FormulaNode::Or(gs) => logic::or(gs.iter().map(drop_mark_equalities).collect()),
        _ => f.clone(),
    }
}

/// Bookkeeping facts about `c(k, e, ret)` that the fresh-variable and free-variable properties inspect.
#[derive(Clone, Debug)]
pub struct TranslationFacts {
    pub k: usize,
    /// Marks, plus conditionals in impl mode.
    pub expected_fresh: usize,
    pub fresh_count: usize,
    pub q: usize,
    pub ys: BTreeSet<usize>,
    pub fv_expr: BTreeSet<String>,
    pub fv_constraint: BTreeSet<String>,
    /// Some `let x = e1 in e2` with `x` unused in `e2`.
    pub dead_binding: bool,
}

impl TranslationFacts {
    pub fn counts_agree(&self) -> bool {
        self.fresh_count == self.expected_fresh && self.q == self.k + self.expected_fresh
    }

    pub fn ys_in_window(&self) -> bool {
        self.ys.iter().all(|&i| self.k < i && i <= self.q)
    }

    pub fn ys_fill_window(&self) -> bool {
        self.ys.len() == self.q - self.k && self.ys_in_window()
    }

    pub fn fv_included(&self) -> bool {
        self.fv_constraint.is_subset(&self.fv_expr)
    }

    pub fn fv_equal(&self) -> bool {
        self.fv_constraint == self.fv_expr
    }
}

pub fn translation_facts(k: usize, e: &Expr, mode: IteMode, ctx: &TyCtx) -> TranslationFacts {
    fn ifs(e: &Expr) -> usize {
        usize::from(matches!(e, Expr::If(..))) + e.children().into_iter().map(ifs).sum::<usize>()
    }
    fn dead(e: &Expr) -> bool {
        match e {
            Expr::Let(x, _, body) if !fv(body).contains(x) => true,
            _ => e.children().into_iter().any(dead),
        }
    }
    let expected_fresh = match mode {
        IteMode::Core => e.count_marks(),
        IteMode::Impl => e.count_marks() + ifs(e),
    };
    let t = translate_in(k, e, mode, ctx);
    let ret = logic::var(logic::Var::ret(logic::sort_of(&t.result)));
    let c = constraint_of(k, e, ret, mode);
    let vars = logic::free_vars(&c);
    TranslationFacts {
        k,
        expected_fresh,
        fresh_count: fresh_count(e, mode),
        q: t.q,
        ys: vars
            .iter()
            .filter_map(|v| match v.kind {
                VarKind::Y(i) => Some(i),
                _ => None,
            })
            .collect(),
        fv_expr: fv(e),
        fv_constraint: vars
            .iter()
            .filter_map(|v| match &v.kind {
                VarKind::X(x) => Some(x.clone()),
                _ => None,
            })
            .collect(),
        dead_binding: dead(e),
    }
}

/// Uniform valuation on `[0, 1]` for every agent.
pub fn uniform_profile(n: usize) -> Vec<PiecewiseValuation> {
    vec![PiecewiseValuation::uniform(); n]
}

/// `2·1_{[0,1/2]}`: all value in the left half.
pub fn front_loaded() -> PiecewiseValuation {
    PiecewiseValuation::new(
        vec![Rational::zero(), Rational::new(1.into(), 2.into()), Rational::one()],
        vec![int(2), Rational::zero()],
    )
    .expect("normalized")
}
