//! Type classes of n-samples: enumeration, probabilities under `P^n`,
//! and a sequence-level brute-force oracle for tiny instances.

use statrs::function::factorial::ln_factorial;

use crate::error::{check_dim, Error, Result};
use crate::measures::Dist;
use crate::numeric::{CompensatedSum, LogSumExp};

/// Default cap on the number of type classes a single computation may visit.
pub const DEFAULT_TYPE_BUDGET: u64 = 20_000_000;

/// Cap on `k^n` for sequence-level enumeration.
pub const SEQUENCE_CAP: u64 = 10_000_000;

/// Symbol counts of an n-sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeVector {
    counts: Vec<u64>,
    n: u64,
}

impl TypeVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "type vector needs at least 2 symbols, got {}",
                counts.len()
            )));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be positive".into(),
            ));
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// The empirical measure `counts / n`.
    pub fn as_dist(&self) -> Dist {
        counts_as_dist(&self.counts, self.n)
    }
}

pub(crate) fn counts_as_dist(counts: &[u64], n: u64) -> Dist {
    let n = n as f64;
    Dist::from_ratios_unchecked(counts.iter().map(|&c| c as f64 / n).collect())
}

/// `C(n + k - 1, k - 1)`, or `None` if it does not fit in a `u128`.
pub fn type_count(k: usize, n: u64) -> Option<u128> {
    let r = (k as u128).checked_sub(1)?;
    let n = n as u128;
    let mut c: u128 = 1;
    for i in 1..=r {
        c = c.checked_mul(n + i)? / i;
    }
    Some(c)
}

fn check_args(k: usize, n: u64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "alphabet size must be at least 2, got {k}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    Ok(())
}

/// Checks that the type classes of `(k, n)` fit in `budget`; returns their number.
pub fn check_type_budget(k: usize, n: u64, budget: u64) -> Result<u128> {
    check_args(k, n)?;
    match type_count(k, n) {
        Some(c) if c <= budget as u128 => Ok(c),
        required => Err(Error::Capacity {
            what: "type enumeration",
            required: required.unwrap_or(u128::MAX),
            budget: budget as u128,
        }),
    }
}

/// Lexicographic stream of all compositions of `n` into `k` nonnegative parts.
#[derive(Debug, Clone)]
pub struct TypeIter {
    counts: Vec<u64>,
    n: u64,
    started: bool,
    done: bool,
}

impl TypeIter {
    fn new(k: usize, n: u64) -> Self {
        let mut counts = vec![0; k];
        counts[k - 1] = n;
        Self {
            counts,
            n,
            started: false,
            done: false,
        }
    }

    /// Advances without allocating; the slice is valid until the next call.
    pub fn next_counts(&mut self) -> Option<&[u64]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.counts);
        }
        let k = self.counts.len();
        let last = k - 1;
        if self.counts[last] > 0 {
            self.counts[last] -= 1;
            self.counts[last - 1] += 1;
            return Some(&self.counts);
        }
        // Rightmost nonzero entry before the last; everything after it is zero.
        let r = match (0..last).rev().find(|&i| self.counts[i] > 0) {
            Some(r) if r > 0 => r,
            _ => {
                self.done = true;
                return None;
            }
        };
        let carry = self.counts[r] - 1;
        self.counts[r] = 0;
        self.counts[r - 1] += 1;
        self.counts[last] = carry;
        Some(&self.counts)
    }
}

impl Iterator for TypeIter {
    type Item = TypeVector;

    fn next(&mut self) -> Option<TypeVector> {
        let n = self.n;
        self.next_counts().map(|c| TypeVector {
            counts: c.to_vec(),
            n,
        })
    }
}

/// Every type of an n-sample over `k` symbols, in lexicographic order.
pub fn enumerate_types(k: usize, n: u64, budget: u64) -> Result<TypeIter> {
    check_type_budget(k, n, budget)?;
    Ok(TypeIter::new(k, n))
}

/// `ln m!` for `m = 0..=n`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: u64) -> Self {
        Self {
            table: (0..=n).map(ln_factorial).collect(),
        }
    }

    pub fn get(&self, m: u64) -> f64 {
        self.table[m as usize]
    }

    /// `ln [n! / Π c_u!]`, the log of the number of sequences with these counts.
    pub fn ln_multinomial(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        counts.iter().fold(self.get(n), |acc, &c| acc - self.get(c))
    }
}

/// Scores types against a fixed `P` and `n`, caching `ln p` and `ln m!`.
#[derive(Debug, Clone)]
pub struct TypeScorer {
    ln_p: Vec<f64>,
    factorials: LogFactorials,
    n: u64,
}

impl TypeScorer {
    pub fn new(p: &Dist, n: u64) -> Self {
        Self {
            ln_p: p.probs().iter().map(|v| v.ln()).collect(),
            factorials: LogFactorials::new(n),
            n,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.ln_p.len()
    }

    pub fn ln_multinomial(&self, counts: &[u64]) -> f64 {
        self.factorials.ln_multinomial(counts)
    }

    /// `Σ_u c_u ln p(u)`: the log-probability of any single sequence of this type.
    pub fn ln_sequence_prob(&self, counts: &[u64]) -> f64 {
        let mut s = 0.0;
        for (&c, &lp) in counts.iter().zip(&self.ln_p) {
            if c > 0 {
                if lp == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                s += c as f64 * lp;
            }
        }
        s
    }

    pub fn log_prob(&self, counts: &[u64]) -> f64 {
        let s = self.ln_sequence_prob(counts);
        if s == f64::NEG_INFINITY {
            s
        } else {
            self.ln_multinomial(counts) + s
        }
    }
}

/// `ln P^n(type t)`; `-∞` when `t` uses a symbol with `p(u) = 0`.
pub fn log_type_prob(t: &TypeVector, p: &Dist) -> Result<f64> {
    check_dim(p.len(), t.k())?;
    Ok(TypeScorer::new(p, t.n).log_prob(&t.counts))
}

/// `ln P(type ∈ event)` by summing over types.
pub fn log_event_prob<F>(p: &Dist, n: u64, budget: u64, mut member: F) -> Result<f64>
where
    F: FnMut(&[u64]) -> bool,
{
    let k = p.len();
    let mut iter = enumerate_types(k, n, budget)?;
    let scorer = TypeScorer::new(p, n);
    let mut acc = LogSumExp::new();
    while let Some(c) = iter.next_counts() {
        if member(c) {
            acc.push(scorer.log_prob(c));
        }
    }
    Ok(acc.value())
}

fn check_sequence_cap(k: usize, n: u64, cap: u64) -> Result<u64> {
    check_args(k, n)?;
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| (k as u64).checked_pow(n))
        .filter(|&t| t <= cap);
    total.ok_or(Error::Capacity {
        what: "sequence enumeration",
        required: (k as f64).powf(n as f64).min(u128::MAX as f64) as u128,
        budget: cap as u128,
    })
}

/// Odometer over all of `{0..k}^n`.
struct Sequences {
    digits: Vec<usize>,
    k: usize,
    started: bool,
}

impl Sequences {
    fn new(k: usize, n: usize) -> Self {
        Self {
            digits: vec![0; n],
            k,
            started: false,
        }
    }

    fn next_seq(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            return Some(&self.digits);
        }
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.k {
                return Some(&self.digits);
            }
            *d = 0;
        }
        None
    }
}

fn counts_of(seq: &[usize], k: usize) -> Vec<u64> {
    let mut c = vec![0; k];
    seq.iter().for_each(|&s| c[s] += 1);
    c
}

/// `P^n(member)` by summing `P^n(y)` over every sequence `y ∈ 𝒳^n`.
pub fn brute_force_event_prob<F>(k: usize, n: u64, p: &Dist, member: F) -> Result<f64>
where
    F: Fn(&TypeVector) -> bool,
{
    check_dim(p.len(), k)?;
    check_sequence_cap(k, n, SEQUENCE_CAP)?;
    let mut seqs = Sequences::new(k, n as usize);
    let mut total = CompensatedSum::new();
    while let Some(y) = seqs.next_seq() {
        let t = TypeVector {
            counts: counts_of(y, k),
            n,
        };
        if member(&t) {
            total.add(y.iter().map(|&s| p[s]).product());
        }
    }
    Ok(total.value())
}

/// The conditional law `μ(y) = P^n(y | type(y) ∈ event)`, materialized
/// sequence by sequence. Every functional is evaluated from its definition
/// over `𝒳^n`, without exchangeability shortcuts.
#[derive(Debug, Clone)]
pub struct SequenceOracle {
    k: usize,
    n: usize,
    /// `(sequence index in base k, ln P^n(y))` for member sequences with `P^n(y) > 0`.
    members: Vec<(u64, f64)>,
    prob_event: f64,
    log_prob_event: f64,
}

impl SequenceOracle {
    pub fn new<F>(p: &Dist, n: u64, cap: u64, member: F) -> Result<Self>
    where
        F: Fn(&TypeVector) -> bool,
    {
        let k = p.len();
        check_sequence_cap(k, n, cap)?;
        let ln_p: Vec<f64> = p.probs().iter().map(|v| v.ln()).collect();
        let mut seqs = Sequences::new(k, n as usize);
        let mut members = Vec::new();
        let mut total = CompensatedSum::new();
        let mut index = 0u64;
        while let Some(y) = seqs.next_seq() {
            let t = TypeVector {
                counts: counts_of(y, k),
                n,
            };
            if member(&t) {
                let lp: f64 = y.iter().map(|&s| ln_p[s]).sum();
                if lp > f64::NEG_INFINITY {
                    total.add(lp.exp());
                    members.push((index, lp));
                }
            }
            index += 1;
        }
        let prob_event = total.value();
        if members.is_empty() {
            return Err(Error::EmptyEvent { n });
        }
        Ok(Self {
            k,
            n: n as usize,
            members,
            prob_event,
            log_prob_event: prob_event.ln(),
        })
    }

    fn decode(&self, mut index: u64, out: &mut [usize]) {
        for d in out.iter_mut().rev() {
            *d = (index % self.k as u64) as usize;
            index /= self.k as u64;
        }
    }

    fn for_each_member(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut y = vec![0; self.n];
        for &(index, lp) in &self.members {
            self.decode(index, &mut y);
            f(&y, lp - self.log_prob_event);
        }
    }

    pub fn prob_event(&self) -> f64 {
        self.prob_event
    }

    pub fn log_prob_event(&self) -> f64 {
        self.log_prob_event
    }

    /// Marginal law of coordinate `i` under `μ`.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        self.for_each_member(|y, ln_mu| m[y[i]] += ln_mu.exp());
        m
    }

    /// The marginal of the first coordinate.
    pub fn omega(&self) -> Vec<f64> {
        self.marginal(0)
    }

    /// `H(μ) = -Σ_y μ(y) ln μ(y)`.
    pub fn entropy_mu(&self) -> f64 {
        let mut h = CompensatedSum::new();
        self.for_each_member(|_, ln_mu| h.add(-ln_mu.exp() * ln_mu));
        h.value()
    }

    /// `D(μ‖q^n)`, `+∞` if `μ` charges a sequence with `q^n(y) = 0`.
    pub fn divergence_from_product(&self, q: &[f64]) -> f64 {
        let ln_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
        let mut d = CompensatedSum::new();
        let mut infinite = false;
        self.for_each_member(|y, ln_mu| {
            let ln_qn: f64 = y.iter().map(|&s| ln_q[s]).sum();
            if ln_qn == f64::NEG_INFINITY {
                infinite = true;
            } else {
                d.add(ln_mu.exp() * (ln_mu - ln_qn));
            }
        });
        if infinite {
            f64::INFINITY
        } else {
            d.value()
        }
    }

    /// `D(μ‖ω^n)` with `ω` the first-coordinate marginal.
    pub fn total_correlation(&self) -> f64 {
        self.divergence_from_product(&self.omega())
    }
}
