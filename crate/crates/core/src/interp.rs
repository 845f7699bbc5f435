//! Big-step evaluator with a trace of every non-deterministic choice.

use num_traits::{One, Zero};

use crate::ast::{fmt_rational, AgentId, Expr, Interval, Protocol, Rational, Value};
use crate::translate::{FreshCounts, IteMode};
use crate::typecheck::snippet;
use crate::valuation::{MarkPolicy, PiecewiseValuation};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("divide out of bounds at `{location}`: cut {cut} outside {piece}")]
    DivOutOfBounds {
        location: String,
        piece: String,
        cut: String,
    },
    #[error("infeasible mark at `{location}`: agent {agent} cannot reach {target} from {from}")]
    MarkInfeasible {
        location: String,
        agent: AgentId,
        from: String,
        target: String,
    },
    #[error("expected {expected} valuations and policies, got {valuations} and {policies}")]
    ProfileArity {
        expected: usize,
        valuations: usize,
        policies: usize,
    },
    /// Only reachable for ill-typed input.
    #[error("evaluation stuck at `{0}`")]
    Stuck(String),
}

/// One executed mark query. `site_core` and `site_impl` are the indices of
/// the logical variable the translation assigns to this query in each mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkEvent {
    pub site_core: usize,
    pub site_impl: usize,
    pub agent: AgentId,
    pub value: Rational,
}

/// One executed conditional, with the value of the taken branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IteEvent {
    pub site_impl: usize,
    pub value: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub marks: Vec<MarkEvent>,
    pub ites: Vec<IteEvent>,
}

impl Trace {
    /// Mark results in execution order.
    pub fn values(&self) -> Vec<Rational> {
        self.marks.iter().map(|m| m.value.clone()).collect()
    }
}

/// Evaluator bound to one protocol; reusable across profiles.
pub struct Evaluator<'p> {
    protocol: &'p Protocol,
    counts: FreshCounts,
}

impl<'p> Evaluator<'p> {
    pub fn new(protocol: &'p Protocol) -> Self {
        Evaluator {
            protocol,
            counts: FreshCounts::new(&protocol.expr),
        }
    }

    pub fn evaluate(
        &self,
        profile: &[PiecewiseValuation],
        policies: &[MarkPolicy],
    ) -> Result<(Value, Trace), RuntimeError> {
        let n = self.protocol.agent_count as usize;
        if profile.len() != n || policies.len() != n {
            return Err(RuntimeError::ProfileArity {
                expected: n,
                valuations: profile.len(),
                policies: policies.len(),
            });
        }
        let mut run = Run {
            counts: &self.counts,
            profile,
            policies,
            env: Vec::new(),
            trace: Trace::default(),
        };
        let v = run.eval(&self.protocol.expr, 0, 0)?;
        Ok((v, run.trace))
    }
}

/// One-shot evaluation.
pub fn evaluate(
    protocol: &Protocol,
    profile: &[PiecewiseValuation],
    policies: &[MarkPolicy],
) -> Result<(Value, Trace), RuntimeError> {
    Evaluator::new(protocol).evaluate(profile, policies)
}

struct Run<'a> {
    counts: &'a FreshCounts,
    profile: &'a [PiecewiseValuation],
    policies: &'a [MarkPolicy],
    env: Vec<(String, Value)>,
    trace: Trace,
}

fn stuck(e: &Expr) -> RuntimeError {
    RuntimeError::Stuck(snippet(e))
}

impl Run<'_> {
    fn n(&self, e: &Expr) -> (usize, usize) {
        (self.counts.get(e, IteMode::Core), self.counts.get(e, IteMode::Impl))
    }

    fn number(&mut self, e: &Expr, kc: usize, ki: usize) -> Result<Rational, RuntimeError> {
        self.eval(e, kc, ki)?.as_number().ok_or_else(|| stuck(e))
    }

    fn interval(&mut self, e: &Expr, kc: usize, ki: usize) -> Result<Interval, RuntimeError> {
        match self.eval(e, kc, ki)? {
            Value::Interval(i) => Ok(i),
            _ => Err(stuck(e)),
        }
    }

    /// `kc`/`ki` are the fresh-variable counters of the translation at `e`
    /// in core and impl mode.
    fn eval(&mut self, e: &Expr, kc: usize, ki: usize) -> Result<Value, RuntimeError> {
        match e {
            Expr::Value(v) => Ok(v.clone()),
            Expr::Var(x) => self
                .env
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| stuck(e)),
            Expr::Cake => Ok(Value::Interval(Interval::cake())),
            Expr::Op(op, args) => {
                let vals = self.eval_seq(args, kc, ki)?;
                op.apply(&vals).ok_or_else(|| stuck(e))
            }
            Expr::Tuple(items) => self.eval_seq(items, kc, ki).map(Value::Tuple),
            Expr::Let(x, bound, body) => {
                let v = self.eval(bound, kc, ki)?;
                let (nc, ni) = self.n(bound);
                self.env.push((x.clone(), v));
                let out = self.eval(body, kc + nc, ki + ni);
                self.env.pop();
                out
            }
            Expr::Proj(k, inner) => match self.eval(inner, kc, ki)? {
                Value::Tuple(mut vs) if *k >= 1 && *k <= vs.len() => Ok(vs.swap_remove(*k - 1)),
                _ => Err(stuck(e)),
            },
            Expr::If(c, t, f) => {
                let guard = self.eval(c, kc, ki)?.as_bool().ok_or_else(|| stuck(e))?;
                let (c_c, c_i) = self.n(c);
                let (t_c, t_i) = self.n(t);
                let (_, f_i) = self.n(f);
                let v = if guard {
                    self.eval(t, kc + c_c, ki + c_i)?
                } else {
                    self.eval(f, kc + c_c + t_c, ki + c_i + t_i)?
                };
                self.trace.ites.push(IteEvent {
                    site_impl: ki + c_i + t_i + f_i + 1,
                    value: v.clone(),
                });
                Ok(v)
            }
            Expr::Left(p) => Ok(Value::Real(self.interval(p, kc, ki)?.lo().clone())),
            Expr::Right(p) => Ok(Value::Real(self.interval(p, kc, ki)?.hi().clone())),
            Expr::Divide(p, at) => {
                let piece = self.interval(p, kc, ki)?;
                let (nc, ni) = self.n(p);
                let cut = self.number(at, kc + nc, ki + ni)?;
                if cut < *piece.lo() || cut > *piece.hi() {
                    return Err(RuntimeError::DivOutOfBounds {
                        location: snippet(e),
                        piece: piece.to_string(),
                        cut: fmt_rational(&cut),
                    });
                }
                let left = Interval::new(piece.lo().clone(), cut.clone()).expect("bounds checked");
                let right = Interval::new(cut, piece.hi().clone()).expect("bounds checked");
                Ok(Value::Tuple(vec![Value::Interval(left), Value::Interval(right)]))
            }
            Expr::Mark(agent, from, target) => {
                let l = self.number(from, kc, ki)?;
                let (fc, fi) = self.n(from);
                let t = self.number(target, kc + fc, ki + fi)?;
                let (tc, ti) = self.n(target);
                let site_core = kc + fc + tc + 1;
                let site_impl = ki + fi + ti + 1;
                let infeasible = || RuntimeError::MarkInfeasible {
                    location: snippet(e),
                    agent: *agent,
                    from: fmt_rational(&l),
                    target: fmt_rational(&t),
                };
                if l < Rational::zero() || l > Rational::one() {
                    return Err(infeasible());
                }
                let range = self.profile[agent.slot()].mark_range(&l, &t).ok_or_else(infeasible)?;
                let r = self.policies[agent.slot()]
                    .choose(&range, Some(site_core))
                    .ok_or_else(infeasible)?;
                self.trace.marks.push(MarkEvent {
                    site_core,
                    site_impl,
                    agent: *agent,
                    value: r.clone(),
                });
                Ok(Value::Real(r))
            }
            Expr::Eval(agent, p) => {
                let piece = self.interval(p, kc, ki)?;
                Ok(Value::Real(self.profile[agent.slot()].value_of(&piece)))
            }
        }
    }

    fn eval_seq(&mut self, items: &[Expr], mut kc: usize, mut ki: usize) -> Result<Vec<Value>, RuntimeError> {
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            out.push(self.eval(item, kc, ki)?);
            let (nc, ni) = self.n(item);
            kc += nc;
            ki += ni;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{int, rat};
    use crate::parser::parse_protocol;

    const CUT_CHOOSE: &str = "agents 2
        let m = mark_1(0, 1/2) in
        let (I1, I2) = divide(cake, m) in
        let (A, B) = sort_2(I1, I2) in
        alloc(B, A)";

    const SURPLUS: &str = "agents 2
        let m1 = mark_1(0, 1/2) in
        let m2 = mark_2(0, 1/2) in
        let (A, S) = divide(cake, m1) in
        let (T, B) = divide(cake, m2) in
        if m1 >= m2 then alloc(S, T) else alloc(A, B)";

    fn iv(a: Rational, b: Rational) -> Value {
        Value::Interval(Interval::new(a, b).unwrap())
    }

    fn front_loaded() -> PiecewiseValuation {
        PiecewiseValuation::new(vec![int(0), rat(1, 2), int(1)], vec![int(2), int(0)]).unwrap()
    }

    #[test]
    fn cut_choose_uniform() {
        let p = parse_protocol(CUT_CHOOSE).unwrap();
        let profile = vec![PiecewiseValuation::uniform(); 2];
        let (v, trace) = evaluate(&p, &profile, &[MarkPolicy::Leftmost, MarkPolicy::Leftmost]).unwrap();
        assert_eq!(v, Value::Tuple(vec![iv(rat(1, 2), int(1)), iv(int(0), rat(1, 2))]));
        assert_eq!(trace.values(), vec![rat(1, 2)]);
        assert_eq!(trace.marks[0].site_core, 1);
    }

    #[test]
    fn surplus_example() {
        let p = parse_protocol(SURPLUS).unwrap();
        let profile = vec![PiecewiseValuation::uniform(), front_loaded()];
        let (v, trace) = evaluate(&p, &profile, &[MarkPolicy::Leftmost, MarkPolicy::Leftmost]).unwrap();
        assert_eq!(v, Value::Tuple(vec![iv(rat(1, 2), int(1)), iv(int(0), rat(1, 4))]));
        assert_eq!(trace.values(), vec![rat(1, 2), rat(1, 4)]);
        let sites: Vec<usize> = trace.marks.iter().map(|m| m.site_core).collect();
        assert_eq!(sites, vec![1, 2]);
    }

    #[test]
    fn divide_past_the_cake() {
        let p = parse_protocol("agents 1\ndivide(cake, 2)").unwrap();
        let err = evaluate(&p, &[PiecewiseValuation::uniform()], &[MarkPolicy::Leftmost]).unwrap_err();
        assert!(matches!(err, RuntimeError::DivOutOfBounds { .. }));
    }

    #[test]
    fn infeasible_mark() {
        let p = parse_protocol("agents 1\nmark_1(1/2, 3/4)").unwrap();
        let err = evaluate(&p, &[PiecewiseValuation::uniform()], &[MarkPolicy::Leftmost]).unwrap_err();
        assert!(matches!(err, RuntimeError::MarkInfeasible { .. }));
    }

    #[test]
    fn profile_arity() {
        let p = parse_protocol(CUT_CHOOSE).unwrap();
        let err = evaluate(&p, &[PiecewiseValuation::uniform()], &[MarkPolicy::Leftmost]).unwrap_err();
        assert!(matches!(err, RuntimeError::ProfileArity { expected: 2, .. }));
    }

    #[test]
    fn policies_disagree_on_plateaus() {
        let p = parse_protocol(CUT_CHOOSE).unwrap();
        let v1 =
            PiecewiseValuation::new(vec![int(0), rat(1, 4), rat(3, 4), int(1)], vec![int(2), int(0), int(2)]).unwrap();
        let profile = vec![v1, PiecewiseValuation::uniform()];
        let left = evaluate(&p, &profile, &vec![MarkPolicy::Leftmost; 2]).unwrap();
        let right = evaluate(&p, &profile, &[MarkPolicy::Rightmost, MarkPolicy::Leftmost]).unwrap();
        assert_ne!(left.0, right.0);
    }

    #[test]
    fn impl_sites_count_conditionals() {
        let p = parse_protocol(SURPLUS).unwrap();
        let profile = vec![PiecewiseValuation::uniform(), front_loaded()];
        let (_, trace) = evaluate(&p, &profile, &[MarkPolicy::Leftmost, MarkPolicy::Leftmost]).unwrap();
        assert_eq!(trace.ites.len(), 1);
        assert_eq!(trace.ites[0].site_impl, 3);
    }
}
