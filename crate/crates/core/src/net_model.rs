//! Networks, investment profiles and the feasibility geometry between them.
//!
//! A [`Network`] is a symmetric nonnegative matrix with zero diagonal. An
//! agent's investment `D^i` has the same shape and removes weight from the
//! network; the game only ever sees the residual `A - sum_i D^i`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance applied when ingesting symmetric matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Slack allowed on `sum_i D^i <= A` before a profile is declared infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Which links an agent may invest in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Only links incident to the agent.
    Local,
    /// Any link of the network.
    Global,
}

/// Unordered pair of distinct nodes, stored with `k < l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub k: usize,
    pub l: usize,
}

impl Link {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::Param(format!("link endpoints must differ, got ({a},{a})")));
        }
        Ok(Link { k: a.min(b), l: a.max(b) })
    }

    pub fn touches(&self, i: usize) -> bool {
        self.k == i || self.l == i
    }

    /// Agents allowed to invest in this link under `mode`.
    pub fn investors(&self, n: usize, mode: Mode) -> Vec<usize> {
        match mode {
            Mode::Local => vec![self.k, self.l],
            Mode::Global => (0..n).collect(),
        }
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.k, self.l)
    }
}

/// Checks shape, finiteness, sign, diagonal and symmetry, then averages the
/// matrix with its transpose.
fn validate_symmetric(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if rows != cols || rows < 2 {
        return Err(Error::Shape { rows, cols });
    }
    for i in 0..rows {
        for j in 0..cols {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j });
            }
            if v < 0.0 {
                return Err(Error::Negative { i, j, value: v });
            }
        }
        if m[(i, i)] != 0.0 {
            return Err(Error::Diagonal { i, value: m[(i, i)] });
        }
    }
    for i in 0..rows {
        for j in (i + 1)..cols {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::Asymmetric { i, j, a, b });
            }
        }
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Weighted undirected contact network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    weights: DMatrix<f64>,
}

impl Network {
    /// Validates a raw weight matrix. Irreducibility is not required.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        Ok(Network { weights: validate_symmetric(&weights)? })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
            return Err(Error::Shape { rows: n, cols });
        }
        Network::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Every pair of nodes joined with weight `a`.
    pub fn complete(n: usize, a: f64) -> Result<Self> {
        Network::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { a }))
    }

    pub fn cycle(n: usize, a: f64) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            if i != j {
                w[(i, j)] = a;
                w[(j, i)] = a;
            }
        }
        Network::new(w)
    }

    /// Node 0 joined to every other node.
    pub fn star(n: usize, a: f64) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for j in 1..n {
            w[(0, j)] = a;
            w[(j, 0)] = a;
        }
        Network::new(w)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Pairs with strictly positive weight, in lexicographic order.
    pub fn links(&self) -> Vec<Link> {
        let n = self.n();
        let mut out = Vec::new();
        for k in 0..n {
            for l in (k + 1)..n {
                if self.weights[(k, l)] > 0.0 {
                    out.push(Link { k, l });
                }
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.weights.row(i).sum()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.sum()
    }

    /// True when every pair of distinct nodes is joined.
    pub fn is_complete(&self) -> bool {
        self.links().len() == self.n() * (self.n() - 1) / 2
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&j| self.weights[(i, j)] > 0.0)
    }

    /// Connectivity of the positive-weight graph.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in self.neighbours(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Non-bipartiteness of the positive-weight graph; `None` when the
    /// network is not irreducible.
    pub fn is_aperiodic(&self) -> Option<bool> {
        if !self.is_irreducible() {
            return None;
        }
        let n = self.n();
        let mut colour: Vec<Option<bool>> = vec![None; n];
        colour[0] = Some(false);
        let mut queue = VecDeque::from([0]);
        while let Some(i) = queue.pop_front() {
            let c = colour[i].expect("queued nodes are coloured");
            for j in self.neighbours(i) {
                match colour[j] {
                    None => {
                        colour[j] = Some(!c);
                        queue.push_back(j);
                    }
                    Some(cj) if cj == c => return Some(true),
                    Some(_) => {}
                }
            }
        }
        Some(false)
    }

    /// Edge-list text: a header `n <count>` followed by `i j weight` lines.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n {}\n", self.n());
        for link in self.links() {
            let _ = writeln!(s, "{} {} {}", link.k, link.l, self.weights[(link.k, link.l)]);
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["n", count] => count
                .parse::<usize>()
                .map_err(|e| Error::Parse { line: hline, msg: e.to_string() })?,
            _ => return Err(Error::Parse { line: hline, msg: "expected header `n <count>`".into() }),
        };
        let mut w = DMatrix::zeros(n, n);
        let mut seen = BTreeSet::new();
        for (line, body) in lines {
            let parts: Vec<&str> = body.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse { line, msg: "expected `i j weight`".into() });
            }
            let perr = |msg: String| Error::Parse { line, msg };
            let i: usize = parts[0].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?;
            let j: usize = parts[1].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?;
            let v: f64 = parts[2].parse().map_err(|e: std::num::ParseFloatError| perr(e.to_string()))?;
            if i >= n || j >= n {
                return Err(perr(format!("index out of range for n = {n}")));
            }
            if i == j {
                return Err(perr("self-loop".into()));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(perr(format!("duplicate edge ({i},{j})")));
            }
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        Network::new(w)
    }

    /// Dense comma-separated matrix, one row per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| format!("{}", self.weights[(i, j)])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
            rows.push(row);
        }
        Network::from_rows(&rows)
    }
}

/// Per-agent investment matrices `D^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    per_agent: Vec<DMatrix<f64>>,
}

impl StrategyProfile {
    /// Validates each `D^i` (symmetric, nonnegative, zero diagonal, n x n
    /// with n agents). Feasibility against a network is checked separately.
    pub fn new(per_agent: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = per_agent.len();
        let mut out = Vec::with_capacity(n);
        for d in &per_agent {
            if d.nrows() != n {
                return Err(Error::Dimension { expected: n, got: d.nrows() });
            }
            out.push(validate_symmetric(d)?);
        }
        Ok(StrategyProfile { per_agent: out })
    }

    pub fn zeros(n: usize) -> Self {
        StrategyProfile { per_agent: vec![DMatrix::zeros(n, n); n] }
    }

    pub fn n(&self) -> usize {
        self.per_agent.len()
    }

    pub fn agent(&self, i: usize) -> &DMatrix<f64> {
        &self.per_agent[i]
    }

    pub fn agents(&self) -> &[DMatrix<f64>] {
        &self.per_agent
    }

    /// Replaces agent `i`'s matrix, which must already be valid.
    pub(crate) fn set_agent(&mut self, i: usize, d: DMatrix<f64>) {
        self.per_agent[i] = d;
    }

    pub fn total(&self) -> DMatrix<f64> {
        let n = self.n();
        self.per_agent.iter().fold(DMatrix::zeros(n, n), |acc, d| acc + d)
    }

    /// Sum of all agents except `i`.
    pub fn others(&self, i: usize) -> DMatrix<f64> {
        let n = self.n();
        self.per_agent
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .fold(DMatrix::zeros(n, n), |acc, (_, d)| acc + d)
    }

    /// Fails on the first entry where `sum_i D^i` exceeds `A`.
    pub fn check_feasible(&self, net: &Network) -> Result<()> {
        if self.n() != net.n() {
            return Err(Error::Dimension { expected: net.n(), got: self.n() });
        }
        check_within(&self.total(), net)
    }

    /// Fails if some agent invests in a link it does not touch.
    pub fn check_local(&self) -> Result<()> {
        let n = self.n();
        for (agent, d) in self.per_agent.iter().enumerate() {
            for k in 0..n {
                for l in (k + 1)..n {
                    if k != agent && l != agent && d[(k, l)] != 0.0 {
                        return Err(Error::NotLocal { agent, k, l });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_mode(&self, net: &Network, mode: Mode) -> Result<()> {
        self.check_feasible(net)?;
        if mode == Mode::Local {
            self.check_local()?;
        }
        Ok(())
    }

    pub fn aggregate(&self, net: &Network) -> Result<AggregateInvestment> {
        self.check_feasible(net)?;
        Ok(AggregateInvestment { total: clamp_to(&self.total(), net) })
    }

    /// Investment of agent `i` on a link (one matrix entry).
    pub fn on_link(&self, i: usize, link: Link) -> f64 {
        self.per_agent[i][(link.k, link.l)]
    }
}

fn check_within(total: &DMatrix<f64>, net: &Network) -> Result<()> {
    let n = net.n();
    for i in 0..n {
        for j in 0..n {
            let a = net.weight(i, j);
            let excess = total[(i, j)] - a;
            if excess > FEASIBILITY_TOL * a.max(1.0) {
                return Err(Error::Infeasible { i, j, excess });
            }
        }
    }
    Ok(())
}

/// Removes round-off so that `0 <= total <= A` holds exactly.
fn clamp_to(total: &DMatrix<f64>, net: &Network) -> DMatrix<f64> {
    DMatrix::from_fn(net.n(), net.n(), |i, j| total[(i, j)].clamp(0.0, net.weight(i, j)))
}

/// Aggregate investment `D` with `0 <= D <= A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateInvestment {
    total: DMatrix<f64>,
}

impl AggregateInvestment {
    pub fn new(total: DMatrix<f64>, net: &Network) -> Result<Self> {
        if total.nrows() != net.n() {
            return Err(Error::Dimension { expected: net.n(), got: total.nrows() });
        }
        let total = validate_symmetric(&total)?;
        check_within(&total, net)?;
        Ok(AggregateInvestment { total: clamp_to(&total, net) })
    }

    pub fn zeros(n: usize) -> Self {
        AggregateInvestment { total: DMatrix::zeros(n, n) }
    }

    /// Every link fully suppressed.
    pub fn full(net: &Network) -> Self {
        AggregateInvestment { total: net.weights().clone() }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.total
    }

    pub fn on_link(&self, link: Link) -> f64 {
        self.total[(link.k, link.l)]
    }

    /// Sum of all entries.
    pub fn sum(&self) -> f64 {
        self.total.sum()
    }

    pub fn residual(&self, net: &Network) -> Network {
        let w = DMatrix::from_fn(net.n(), net.n(), |i, j| (net.weight(i, j) - self.total[(i, j)]).max(0.0));
        Network { weights: w }
    }
}

/// The network `A - sum_i D^i` left after investment.
pub fn residual_network(net: &Network, profile: &StrategyProfile) -> Result<Network> {
    Ok(profile.aggregate(net)?.residual(net))
}

/// Splits each link's total equally among its eligible agents. The lowest
/// eligible index absorbs the rounding remainder so the aggregate is exact.
pub fn localize_profile(
    total: &AggregateInvestment,
    eligibility: &BTreeMap<Link, Vec<usize>>,
    mode: Mode,
) -> Result<StrategyProfile> {
    let n = total.matrix().nrows();
    let mut per_agent = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for l in (k + 1)..n {
            let value = total.matrix()[(k, l)];
            if value == 0.0 {
                continue;
            }
            let link = Link { k, l };
            let mut agents: Vec<usize> = eligibility.get(&link).cloned().unwrap_or_default();
            agents.sort_unstable();
            agents.dedup();
            if agents.is_empty() {
                return Err(Error::NoEligible { k, l });
            }
            if let Some(&bad) = agents.iter().find(|&&a| a >= n || (mode == Mode::Local && !link.touches(a))) {
                return Err(Error::NotLocal { agent: bad, k, l });
            }
            let share = value / agents.len() as f64;
            let first = value - share * (agents.len() - 1) as f64;
            for (idx, &a) in agents.iter().enumerate() {
                let v = if idx == 0 { first } else { share };
                per_agent[a][(k, l)] = v;
                per_agent[a][(l, k)] = v;
            }
        }
    }
    Ok(StrategyProfile { per_agent })
}
