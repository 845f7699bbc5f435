//! Piecewise-constant valuations with exact mark and eval oracles.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{fmt_rational, int, parse_rational, Interval, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValuationError {
    #[error("breakpoints must start at 0, end at 1 and strictly increase")]
    Breakpoints,
    #[error("expected {expected} densities, found {found}")]
    DensityCount { expected: usize, found: usize },
    #[error("density {0} is negative")]
    NegativeDensity(String),
    #[error("total mass is {0}, not 1")]
    NotNormalized(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// A valuation whose density is constant on each `(b_{i-1}, b_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseValuation {
    breakpoints: Vec<Rational>,
    densities: Vec<Rational>,
    // cumulative mass at each breakpoint
    cumulative: Vec<Rational>,
}

impl PiecewiseValuation {
    pub fn new(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self, ValuationError> {
        let ok_ends = breakpoints.first().is_some_and(Zero::is_zero)
            && breakpoints.last().is_some_and(One::is_one)
            && breakpoints.len() >= 2
            && breakpoints.windows(2).all(|w| w[0] < w[1]);
        if !ok_ends {
            return Err(ValuationError::Breakpoints);
        }
        if densities.len() + 1 != breakpoints.len() {
            return Err(ValuationError::DensityCount {
                expected: breakpoints.len() - 1,
                found: densities.len(),
            });
        }
        if let Some(d) = densities.iter().find(|d| d.is_negative()) {
            return Err(ValuationError::NegativeDensity(fmt_rational(d)));
        }
        let mut cumulative = vec![Rational::zero()];
        for (i, d) in densities.iter().enumerate() {
            let next = cumulative[i].clone() + d * (&breakpoints[i + 1] - &breakpoints[i]);
            cumulative.push(next);
        }
        let total = cumulative.last().unwrap();
        if !total.is_one() {
            return Err(ValuationError::NotNormalized(fmt_rational(total)));
        }
        Ok(PiecewiseValuation {
            breakpoints,
            densities,
            cumulative,
        })
    }

    pub fn uniform() -> Self {
        Self::new(vec![int(0), int(1)], vec![int(1)]).unwrap()
    }

    /// Builds a valuation from the mass of each segment rather than its density.
    pub fn from_masses(breakpoints: Vec<Rational>, masses: Vec<Rational>) -> Result<Self, ValuationError> {
        if breakpoints.len() != masses.len() + 1 || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ValuationError::Breakpoints);
        }
        let densities = masses
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(m, w)| m / (&w[1] - &w[0]))
            .collect();
        Self::new(breakpoints, densities)
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    pub fn segments(&self) -> usize {
        self.densities.len()
    }

    /// Mass of `[0, x]` for `x` in `[0, 1]`.
    pub fn cdf(&self, x: &Rational) -> Rational {
        // index of the segment containing x
        let i = match self.breakpoints.binary_search(x) {
            Ok(i) => return self.cumulative[i].clone(),
            Err(i) => i - 1,
        };
        &self.cumulative[i] + &self.densities[i] * (x - &self.breakpoints[i])
    }

    pub fn value_between(&self, lo: &Rational, hi: &Rational) -> Rational {
        self.cdf(hi) - self.cdf(lo)
    }

    pub fn value_of(&self, piece: &Interval) -> Rational {
        self.value_between(piece.lo(), piece.hi())
    }

    /// The closed set `[r_min, r_max]` of valid marks, or `None` when the
    /// target exceeds what remains right of `l`.
    pub fn mark_range(&self, l: &Rational, target: &Rational) -> Option<(Rational, Rational)> {
        if target.is_negative() || l.is_negative() || *l > Rational::one() {
            return None;
        }
        let goal = self.cdf(l) + target;
        if goal > Rational::one() {
            return None;
        }
        let m = self.segments();
        let mut lo = None;
        for i in 0..m {
            let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
            if b < l {
                continue;
            }
            let s = a.max(l).clone();
            let fs = self.cdf(&s);
            if fs >= goal {
                lo = Some(s);
                break;
            }
            if self.cumulative[i + 1] >= goal {
                lo = Some(&s + (&goal - fs) / &self.densities[i]);
                break;
            }
        }
        let mut hi = None;
        for i in (0..m).rev() {
            let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
            if b < l {
                break;
            }
            if self.cumulative[i + 1] <= goal {
                hi = Some(b.clone());
                break;
            }
            let s = a.max(l).clone();
            let fs = self.cdf(&s);
            if fs <= goal {
                hi = Some(&s + (&goal - fs) / &self.densities[i]);
                break;
            }
        }
        Some((lo?, hi?))
    }

    pub fn mark_of(&self, l: &Rational, target: &Rational, policy: &MarkPolicy) -> Result<Rational, Infeasible> {
        let range = self.mark_range(l, target).ok_or(Infeasible)?;
        policy.choose(&range, None).ok_or(Infeasible)
    }

    /// Parses one profile line `b0 d1 b1 d2 … bm`.
    pub fn parse_line(line: &str) -> Result<Self, String> {
        let nums = line
            .split_whitespace()
            .map(|t| parse_rational(t).ok_or_else(|| format!("bad rational `{t}`")))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.len() < 3 || nums.len() % 2 == 0 {
            return Err("expected `b0 d1 b1 … dm bm`".to_string());
        }
        let breakpoints = nums.iter().step_by(2).cloned().collect();
        let densities = nums.iter().skip(1).step_by(2).cloned().collect();
        Self::new(breakpoints, densities).map_err(|e| e.to_string())
    }
}

impl fmt::Display for PiecewiseValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_rational(&self.breakpoints[0]))?;
        for (d, b) in self.densities.iter().zip(&self.breakpoints[1..]) {
            write!(f, " {} {}", fmt_rational(d), fmt_rational(b))?;
        }
        Ok(())
    }
}

/// Parses a profile file: one valuation per line; blank lines and `#` comments are skipped.
pub fn parse_profile(text: &str) -> Result<Vec<PiecewiseValuation>, ValuationError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = PiecewiseValuation::parse_line(line).map_err(|msg| ValuationError::Syntax { line: i + 1, msg })?;
        out.push(v);
    }
    Ok(out)
}

pub fn format_profile(profile: &[PiecewiseValuation]) -> String {
    profile.iter().map(|v| format!("{v}\n")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("mark target exceeds the remaining value")]
pub struct Infeasible;

/// How an agent picks among several valid marks.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum MarkPolicy {
    #[default]
    Leftmost,
    Rightmost,
    /// `r_min + θ·(r_max − r_min)` for θ in `[0, 1]`.
    Offset(Rational),
    /// Replays fixed marks keyed by mark site; a missing or invalid mark fails.
    Scripted(BTreeMap<usize, Rational>),
}

impl MarkPolicy {
    pub fn choose(&self, (lo, hi): &(Rational, Rational), site: Option<usize>) -> Option<Rational> {
        match self {
            MarkPolicy::Leftmost => Some(lo.clone()),
            MarkPolicy::Rightmost => Some(hi.clone()),
            MarkPolicy::Offset(theta) => {
                let theta = theta.clone().max(Rational::zero()).min(Rational::one());
                Some(lo + theta * (hi - lo))
            }
            MarkPolicy::Scripted(script) => {
                let r = script.get(&site?)?;
                (lo <= r && r <= hi).then(|| r.clone())
            }
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "leftmost" | "left" => Some(MarkPolicy::Leftmost),
            "rightmost" | "right" => Some(MarkPolicy::Rightmost),
            other => {
                let theta = parse_rational(other.strip_prefix("offset:")?)?;
                (!theta.is_negative() && theta <= Rational::one()).then_some(MarkPolicy::Offset(theta))
            }
        }
    }
}

/// Deterministic random valuation with up to `max_segments` pieces.
///
/// Breakpoints sit on a grid of 1/60 and segment masses are small integer
/// weights, so every quantity stays a short rational. Roughly one draw in
/// three forces a zero-density segment.
pub fn random_valuation(seed: u64, max_segments: usize) -> PiecewiseValuation {
    random_valuation_in(seed, max_segments, true)
}

/// Like [`random_valuation`] but with every density strictly positive.
pub fn random_positive_valuation(seed: u64, max_segments: usize) -> PiecewiseValuation {
    random_valuation_in(seed, max_segments, false)
}

fn random_valuation_in(seed: u64, max_segments: usize, gaps: bool) -> PiecewiseValuation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=max_segments.clamp(1, 59));
    if m == 1 {
        return PiecewiseValuation::uniform();
    }
    const GRID: i64 = 60;
    let mut cuts: Vec<i64> = Vec::new();
    while cuts.len() < m - 1 {
        let c = rng.gen_range(1..GRID);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut breakpoints = vec![int(0)];
    breakpoints.extend(cuts.iter().map(|&c| Rational::new(c.into(), GRID.into())));
    breakpoints.push(int(1));
    let low = if gaps { 0 } else { 1 };
    let mut weights: Vec<i64> = (0..m).map(|_| rng.gen_range(low..=4)).collect();
    if gaps && rng.gen_bool(1.0 / 3.0) {
        let z = rng.gen_range(0..m);
        weights[z] = 0;
    }
    if weights.iter().all(|w| *w == 0) {
        let i = rng.gen_range(0..m);
        weights[i] = 1;
    }
    let total: i64 = weights.iter().sum();
    let masses = weights.iter().map(|&w| Rational::new(w.into(), total.into())).collect();
    PiecewiseValuation::from_masses(breakpoints, masses).expect("normalized by construction")
}
