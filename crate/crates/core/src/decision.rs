//! Towers for the 0/1 decision problems on sequences and matrices, on
//! finitely described inputs.
//!
//! | problem | input    | question                                             | height |
//! |---------|----------|------------------------------------------------------|--------|
//! | `Xi1`   | sequence | a non-zero entry?                                    | 1      |
//! | `Xi2`   | sequence | infinitely many non-zero entries?                    | 2      |
//! | `Xi3`   | matrix   | a non-zero entry?                                    | 1      |
//! | `Xi4`   | matrix   | infinitely many non-zero entries?                    | 2      |
//! | `Xi5`   | matrix   | a column with infinitely many non-zero entries?      | 3      |
//! | `Xi6`   | matrix   | infinitely many such columns?                        | 4      |
//! | `Xi7`   | matrix   | only finitely many columns with finitely many 1s?    | 3      |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl From<bool> for Answer {
    fn from(b: bool) -> Self {
        if b {
            Answer::Yes
        } else {
            Answer::No
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        })
    }
}

/// A 0/1 sequence indexed from 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum SeqDesc {
    /// Positions of the 1s.
    Support { ones: Vec<u64> },
    /// `preamble` followed by `period` repeated forever.
    Periodic { preamble: Vec<u8>, period: Vec<u8> },
}

impl SeqDesc {
    pub fn support(ones: &[u64]) -> Self {
        let mut v = ones.to_vec();
        v.sort_unstable();
        v.dedup();
        SeqDesc::Support { ones: v }
    }

    pub fn periodic(preamble: &[u8], period: &[u8]) -> Self {
        SeqDesc::Periodic { preamble: preamble.to_vec(), period: period.to_vec() }
    }

    pub fn zeros() -> Self {
        SeqDesc::Support { ones: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SeqDesc::Support { ones } => {
                if ones.iter().any(|&i| i == 0) {
                    return Err(Error::Input("sequence positions start at 1".into()));
                }
                if ones.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Input("support must be strictly increasing".into()));
                }
            }
            SeqDesc::Periodic { preamble, period } => {
                if period.is_empty() {
                    return Err(Error::Input("period must be non-empty".into()));
                }
                if preamble.iter().chain(period).any(|&v| v > 1) {
                    return Err(Error::Input("entries must be 0 or 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn entry(&self, i: u64) -> bool {
        match self {
            SeqDesc::Support { ones } => ones.binary_search(&i).is_ok(),
            SeqDesc::Periodic { preamble, period } => {
                let i = (i - 1) as usize;
                if i < preamble.len() {
                    preamble[i] == 1
                } else {
                    period[(i - preamble.len()) % period.len()] == 1
                }
            }
        }
    }

    /// `sum_{i <= n} a_i`.
    pub fn count(&self, n: u64) -> u64 {
        match self {
            SeqDesc::Support { ones } => ones.partition_point(|&i| i <= n) as u64,
            SeqDesc::Periodic { preamble, period } => {
                let n = n as usize;
                let head = n.min(preamble.len());
                let mut c = preamble[..head].iter().filter(|&&v| v == 1).count() as u64;
                if n > preamble.len() {
                    let rest = n - preamble.len();
                    let per = period.iter().filter(|&&v| v == 1).count() as u64;
                    c += (rest / period.len()) as u64 * per;
                    c += period[..rest % period.len()].iter().filter(|&&v| v == 1).count() as u64;
                }
                c
            }
        }
    }

    /// Number of 1s, `None` when infinite.
    pub fn total(&self) -> Option<u64> {
        match self {
            SeqDesc::Support { ones } => Some(ones.len() as u64),
            SeqDesc::Periodic { preamble, period } => {
                if period.contains(&1) {
                    None
                } else {
                    Some(preamble.iter().filter(|&&v| v == 1).count() as u64)
                }
            }
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.total().is_none()
    }

    /// Position of the last 1 of a finite sequence (0 when there is none).
    pub fn settle(&self) -> u64 {
        match self {
            SeqDesc::Support { ones } => ones.last().copied().unwrap_or(0),
            SeqDesc::Periodic { preamble, period } => {
                if period.contains(&1) {
                    u64::MAX
                } else {
                    preamble.iter().rposition(|&v| v == 1).map_or(0, |p| p as u64 + 1)
                }
            }
        }
    }

    /// Least `n` with `count(n) >= c`.
    pub fn index_of_count(&self, c: u64) -> Option<u64> {
        if c == 0 {
            return Some(0);
        }
        match self {
            SeqDesc::Support { ones } => ones.get(c as usize - 1).copied(),
            SeqDesc::Periodic { preamble, period } => {
                let mut seen = 0u64;
                for (p, &v) in preamble.iter().enumerate() {
                    seen += v as u64;
                    if seen == c {
                        return Some(p as u64 + 1);
                    }
                }
                let per = period.iter().filter(|&&v| v == 1).count() as u64;
                if per == 0 {
                    return None;
                }
                let need = c - seen;
                let cycles = (need - 1) / per;
                let mut left = need - cycles * per;
                for (p, &v) in period.iter().enumerate() {
                    left -= v as u64;
                    if left == 0 {
                        return Some(preamble.len() as u64 + cycles * period.len() as u64 + p as u64 + 1);
                    }
                }
                unreachable!("the period holds {per} ones")
            }
        }
    }

    /// Least `n` such that `count(n') > t` agrees with `total > t` for all `n' >= n`.
    pub fn settle_above(&self, t: u64) -> u64 {
        match self.total() {
            Some(tot) if tot <= t => self.settle(),
            _ => self.index_of_count(t + 1).expect("more than t ones"),
        }
    }

    /// Position of the first 1.
    pub fn first_one(&self) -> Option<u64> {
        self.index_of_count(1)
    }
}

/// A 0/1 matrix `a_{i,j}`, rows and columns from 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum MatrixDesc {
    /// Positions `(i, j)` of the 1s.
    Support { ones: Vec<(u64, u64)> },
    /// Column `j` is `preamble[j-1]` for `j <= preamble.len()`, then the
    /// `period` columns repeat.
    Columns { preamble: Vec<SeqDesc>, period: Vec<SeqDesc> },
}

impl MatrixDesc {
    pub fn support(ones: &[(u64, u64)]) -> Self {
        let mut v = ones.to_vec();
        v.sort_unstable();
        v.dedup();
        MatrixDesc::Support { ones: v }
    }

    pub fn columns(preamble: Vec<SeqDesc>, period: Vec<SeqDesc>) -> Self {
        MatrixDesc::Columns { preamble, period }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MatrixDesc::Support { ones } => {
                if ones.iter().any(|&(i, j)| i == 0 || j == 0) {
                    return Err(Error::Input("matrix positions start at 1".into()));
                }
            }
            MatrixDesc::Columns { preamble, period } => {
                if period.is_empty() {
                    return Err(Error::Input("column period must be non-empty".into()));
                }
                for c in preamble.iter().chain(period) {
                    c.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn column(&self, j: u64) -> SeqDesc {
        match self {
            MatrixDesc::Support { ones } => {
                SeqDesc::support(&ones.iter().filter(|p| p.1 == j).map(|p| p.0).collect::<Vec<_>>())
            }
            MatrixDesc::Columns { preamble, period } => self.column_ref(j, preamble, period).clone(),
        }
    }

    fn column_ref<'a>(&self, j: u64, preamble: &'a [SeqDesc], period: &'a [SeqDesc]) -> &'a SeqDesc {
        let j = (j - 1) as usize;
        if j < preamble.len() {
            &preamble[j]
        } else {
            &period[(j - preamble.len()) % period.len()]
        }
    }

    pub fn entry(&self, i: u64, j: u64) -> bool {
        match self {
            MatrixDesc::Support { ones } => ones.binary_search(&(i, j)).is_ok(),
            MatrixDesc::Columns { preamble, period } => self.column_ref(j, preamble, period).entry(i),
        }
    }

    /// Columns that carry every distinct column pattern, in order:
    /// the explicit ones and one cycle of the period.
    fn pattern_columns(&self) -> Vec<u64> {
        match self {
            MatrixDesc::Support { ones } => {
                let mut js: Vec<u64> = ones.iter().map(|p| p.1).collect();
                js.sort_unstable();
                js.dedup();
                js
            }
            MatrixDesc::Columns { preamble, period } => (1..=(preamble.len() + period.len()) as u64).collect(),
        }
    }

    /// Number of columns with infinitely many 1s, `None` when infinite.
    pub fn infinite_columns(&self) -> Option<u64> {
        match self {
            MatrixDesc::Support { .. } => Some(0),
            MatrixDesc::Columns { preamble, period } => {
                if period.iter().any(SeqDesc::is_infinite) {
                    None
                } else {
                    Some(preamble.iter().filter(|c| c.is_infinite()).count() as u64)
                }
            }
        }
    }

    /// Number of columns with finitely many 1s, `None` when infinite.
    pub fn finite_columns(&self) -> Option<u64> {
        match self {
            MatrixDesc::Support { .. } => None,
            MatrixDesc::Columns { preamble, period } => {
                if period.iter().any(|c| !c.is_infinite()) {
                    None
                } else {
                    Some(preamble.iter().filter(|c| !c.is_infinite()).count() as u64)
                }
            }
        }
    }

    /// Total number of 1s, `None` when infinite.
    pub fn total(&self) -> Option<u64> {
        match self {
            MatrixDesc::Support { ones } => Some(ones.len() as u64),
            MatrixDesc::Columns { preamble, period } => {
                if period.iter().any(|c| c.total() != Some(0)) {
                    return None;
                }
                preamble.iter().map(SeqDesc::total).sum()
            }
        }
    }

    /// All 1s of a matrix with finitely many of them.
    fn finite_ones(&self) -> Vec<(u64, u64)> {
        match self {
            MatrixDesc::Support { ones } => ones.clone(),
            MatrixDesc::Columns { preamble, .. } => {
                let mut out = Vec::new();
                for (j, c) in preamble.iter().enumerate() {
                    let t = c.total().expect("finite column");
                    for r in 1..=t {
                        out.push((c.index_of_count(r).expect("r <= total"), j as u64 + 1));
                    }
                }
                out
            }
        }
    }
}

/// Cantor pairing of `N x N` onto `N` (all from 1), along anti-diagonals with
/// the column index increasing inside each diagonal.
pub fn cantor_pair(i: u64, j: u64) -> u64 {
    let d = i + j - 2;
    d * (d + 1) / 2 + (j - 1) + 1
}

pub fn cantor_unpair(k: u64) -> (u64, u64) {
    let k0 = k - 1;
    let mut d = (((8.0 * k0 as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while d * (d + 1) / 2 > k0 {
        d -= 1;
    }
    while (d + 1) * (d + 2) / 2 <= k0 {
        d += 1;
    }
    let j0 = k0 - d * (d + 1) / 2;
    (d - j0 + 1, j0 + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FinDesc {
    Sequence(SeqDesc),
    Matrix(MatrixDesc),
}

impl FinDesc {
    pub fn from_json(s: &str) -> Result<Self> {
        let d: FinDesc = serde_json::from_str(s).map_err(|e| Error::Input(format!("bad description: {e}")))?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptions always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FinDesc::Sequence(s) => s.validate(),
            FinDesc::Matrix(m) => m.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Problem {
    Xi1,
    Xi2,
    Xi3,
    Xi4,
    Xi5,
    Xi6,
    Xi7,
}

impl Problem {
    pub const ALL: [Problem; 7] =
        [Problem::Xi1, Problem::Xi2, Problem::Xi3, Problem::Xi4, Problem::Xi5, Problem::Xi6, Problem::Xi7];

    pub fn height(self) -> usize {
        match self {
            Problem::Xi1 | Problem::Xi3 => 1,
            Problem::Xi2 | Problem::Xi4 => 2,
            Problem::Xi5 | Problem::Xi7 => 3,
            Problem::Xi6 => 4,
        }
    }

    pub fn on_sequences(self) -> bool {
        matches!(self, Problem::Xi1 | Problem::Xi2)
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("xi").unwrap_or(&t);
        match t {
            "1" => Ok(Problem::Xi1),
            "2" => Ok(Problem::Xi2),
            "3" => Ok(Problem::Xi3),
            "4" => Ok(Problem::Xi4),
            "5" => Ok(Problem::Xi5),
            "6" => Ok(Problem::Xi6),
            "7" => Ok(Problem::Xi7),
            _ => Err(Error::Input(format!("unknown problem '{s}'"))),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = Problem::ALL.iter().position(|p| p == self).unwrap() + 1;
        write!(f, "xi{k}")
    }
}

fn as_sequence(problem: Problem, x: &FinDesc) -> Result<&SeqDesc> {
    match x {
        FinDesc::Sequence(s) => Ok(s),
        FinDesc::Matrix(_) => Err(Error::Input(format!("{problem} takes a sequence"))),
    }
}

fn as_matrix(problem: Problem, x: &FinDesc) -> Result<&MatrixDesc> {
    match x {
        FinDesc::Matrix(m) => Ok(m),
        FinDesc::Sequence(_) => Err(Error::Input(format!("{problem} takes a matrix"))),
    }
}

/// `sum_{k <= n} a_{i(k), j(k)}` in Cantor order.
fn paired_count(a: &MatrixDesc, n: u64) -> u64 {
    match a {
        MatrixDesc::Support { ones } => ones.iter().filter(|&&(i, j)| cantor_pair(i, j) <= n).count() as u64,
        _ => (1..=n).filter(|&k| {
            let (i, j) = cantor_unpair(k);
            a.entry(i, j)
        })
        .count() as u64,
    }
}

/// Number of columns `j <= k` whose first `n` entries hold more than `m` ones.
fn columns_above(a: &MatrixDesc, k: u64, m: u64, n: u64) -> u64 {
    (1..=k).filter(|&j| a.column(j).count(n) > m).count() as u64
}

/// The stage `Gamma_{indices}(x)`, indices outermost first.
pub fn decide_stage(problem: Problem, x: &FinDesc, indices: &[u64]) -> Result<Answer> {
    if indices.len() != problem.height() {
        return Err(Error::Input(format!(
            "{problem} has height {}, got {} indices",
            problem.height(),
            indices.len()
        )));
    }
    if indices.iter().any(|&i| i == 0) {
        return Err(Error::Input("stage indices start at 1".into()));
    }
    let yes = match problem {
        Problem::Xi1 => as_sequence(problem, x)?.count(indices[0]) > 0,
        Problem::Xi2 => as_sequence(problem, x)?.count(indices[1]) > indices[0],
        Problem::Xi3 => paired_count(as_matrix(problem, x)?, indices[0]) > 0,
        Problem::Xi4 => paired_count(as_matrix(problem, x)?, indices[1]) > indices[0],
        Problem::Xi5 => {
            let (k, m, n) = (indices[0], indices[1], indices[2]);
            columns_above(as_matrix(problem, x)?, k, m, n) > 0
        }
        Problem::Xi6 => {
            let (l, k, m, n) = (indices[0], indices[1], indices[2], indices[3]);
            columns_above(as_matrix(problem, x)?, k, m, n) > l
        }
        Problem::Xi7 => {
            let (k, m, n) = (indices[0], indices[1], indices[2]);
            let a = as_matrix(problem, x)?;
            let short = (1..=m).filter(|&j| a.column(j).count(n) < m).count() as u64;
            short < k
        }
    };
    Ok(yes.into())
}

/// The answer itself, read off the description.
pub fn decide_exact(problem: Problem, x: &FinDesc) -> Result<Answer> {
    let yes = match problem {
        Problem::Xi1 => as_sequence(problem, x)?.first_one().is_some(),
        Problem::Xi2 => as_sequence(problem, x)?.is_infinite(),
        Problem::Xi3 => as_matrix(problem, x)?.total() != Some(0),
        Problem::Xi4 => as_matrix(problem, x)?.total().is_none(),
        Problem::Xi5 => as_matrix(problem, x)?.infinite_columns() != Some(0),
        Problem::Xi6 => as_matrix(problem, x)?.infinite_columns().is_none(),
        Problem::Xi7 => as_matrix(problem, x)?.finite_columns().is_some(),
    };
    Ok(yes.into())
}

/// For the level below `outer` (indices fixed outermost first), the least
/// index from which the remaining inner limits all take their final value.
pub fn level_horizon(problem: Problem, x: &FinDesc, outer: &[u64]) -> Result<u64> {
    let level = outer.len();
    if level >= problem.height() {
        return Err(Error::Input(format!("{problem} has only {} levels", problem.height())));
    }
    let h = match (problem, level) {
        (Problem::Xi1, _) => as_sequence(problem, x)?.first_one().unwrap_or(1),
        (Problem::Xi2, 0) => as_sequence(problem, x)?.total().unwrap_or(1).max(1),
        (Problem::Xi2, _) => as_sequence(problem, x)?.settle_above(outer[0]),
        (Problem::Xi3, _) => {
            let a = as_matrix(problem, x)?;
            let mut best = None::<u64>;
            for j in a.pattern_columns() {
                if let Some(i) = a.column(j).first_one() {
                    let k = cantor_pair(i, j);
                    best = Some(best.map_or(k, |b| b.min(k)));
                }
            }
            best.unwrap_or(1)
        }
        (Problem::Xi4, 0) => as_matrix(problem, x)?.total().unwrap_or(1).max(1),
        (Problem::Xi4, _) => {
            let a = as_matrix(problem, x)?;
            match a.total() {
                Some(_) => a.finite_ones().iter().map(|&(i, j)| cantor_pair(i, j)).max().unwrap_or(0),
                None => {
                    // walk the pairing until m + 1 ones have been seen
                    let (mut k, mut c) = (0u64, 0u64);
                    while c <= outer[0] {
                        k += 1;
                        let (i, j) = cantor_unpair(k);
                        c += a.entry(i, j) as u64;
                    }
                    k
                }
            }
        }
        (Problem::Xi5, 0) => {
            let a = as_matrix(problem, x)?;
            a.pattern_columns().into_iter().find(|&j| a.column(j).is_infinite()).unwrap_or(1)
        }
        (Problem::Xi5, 1) | (Problem::Xi6, 2) => {
            let a = as_matrix(problem, x)?;
            let k = outer[level - 1];
            (1..=k).filter_map(|j| a.column(j).total()).max().unwrap_or(1).max(1)
        }
        (Problem::Xi5, _) | (Problem::Xi6, _) if level == problem.height() - 1 => {
            let a = as_matrix(problem, x)?;
            let (k, m) = (outer[level - 2], outer[level - 1]);
            (1..=k).map(|j| a.column(j).settle_above(m)).max().unwrap_or(0)
        }
        (Problem::Xi6, 0) => as_matrix(problem, x)?.infinite_columns().unwrap_or(1).max(1),
        (Problem::Xi6, _) => {
            let a = as_matrix(problem, x)?;
            let l = outer[0];
            if a.infinite_columns().is_some() {
                1
            } else {
                let (mut j, mut c) = (0u64, 0u64);
                while c <= l {
                    j += 1;
                    c += a.column(j).is_infinite() as u64;
                }
                j
            }
        }
        (Problem::Xi7, 0) => as_matrix(problem, x)?.finite_columns().map_or(1, |f| f + 1),
        (Problem::Xi7, 1) => {
            let a = as_matrix(problem, x)?;
            let k = outer[0];
            match a.finite_columns() {
                Some(f) if f < k => 1,
                _ => {
                    let mut m = 1u64;
                    while (1..=m).filter(|&j| a.column(j).total().is_some_and(|t| t < m)).count() < k as usize {
                        m += 1;
                    }
                    m
                }
            }
        }
        (Problem::Xi7, _) => {
            let a = as_matrix(problem, x)?;
            let m = outer[1];
            // count < m  <=>  not (count > m - 1)
            (1..=m).map(|j| a.column(j).settle_above(m - 1)).max().unwrap_or(0)
        }
        _ => unreachable!("levels are bounded by the height"),
    };
    Ok(h.max(1))
}

/// Indices reached by taking every level at its horizon, outermost first.
pub fn horizon(problem: Problem, x: &FinDesc) -> Result<Vec<u64>> {
    let mut idx = Vec::with_capacity(problem.height());
    for _ in 0..problem.height() {
        let h = level_horizon(problem, x, &idx)?;
        idx.push(h);
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: SeqDesc) -> FinDesc {
        FinDesc::Sequence(s)
    }

    #[test]
    fn stage_examples() {
        let ones = seq(SeqDesc::periodic(&[], &[1]));
        assert_eq!(decide_stage(Problem::Xi2, &ones, &[5, 10]).unwrap(), Answer::Yes);
        let two = seq(SeqDesc::support(&[1, 3]));
        assert_eq!(decide_stage(Problem::Xi2, &two, &[2, 100]).unwrap(), Answer::No);
        let col1 = FinDesc::Matrix(MatrixDesc::columns(vec![SeqDesc::periodic(&[], &[1])], vec![SeqDesc::zeros()]));
        assert_eq!(decide_stage(Problem::Xi5, &col1, &[1, 3, 10]).unwrap(), Answer::Yes);
        assert!(decide_stage(Problem::Xi5, &two, &[1, 1, 1]).is_err());
        assert!(decide_stage(Problem::Xi2, &two, &[1]).is_err());
    }

    #[test]
    fn exact_examples() {
        let s = seq(SeqDesc::periodic(&[1, 1, 0], &[0]));
        assert_eq!(decide_exact(Problem::Xi2, &s).unwrap(), Answer::No);
        let row = FinDesc::Matrix(MatrixDesc::columns(vec![], vec![SeqDesc::support(&[2])]));
        assert_eq!(decide_exact(Problem::Xi4, &row).unwrap(), Answer::Yes);
        let ones = SeqDesc::periodic(&[], &[1]);
        let three = FinDesc::Matrix(MatrixDesc::columns(vec![ones.clone(), ones.clone(), ones], vec![SeqDesc::zeros()]));
        assert_eq!(decide_exact(Problem::Xi6, &three).unwrap(), Answer::No);
        assert_eq!(decide_exact(Problem::Xi5, &three).unwrap(), Answer::Yes);
    }

    #[test]
    fn pairing_roundtrip() {
        for k in 1..5000 {
            let (i, j) = cantor_unpair(k);
            assert_eq!(cantor_pair(i, j), k);
        }
        assert_eq!(cantor_unpair(1), (1, 1));
        assert_eq!(cantor_unpair(2), (2, 1));
        assert_eq!(cantor_unpair(3), (1, 2));
    }

    #[test]
    fn counting_helpers() {
        let s = SeqDesc::periodic(&[1, 0], &[0, 1, 1]);
        let brute = |n: u64| (1..=n).filter(|&i| s.entry(i)).count() as u64;
        for n in 0..30 {
            assert_eq!(s.count(n), brute(n));
        }
        for c in 1..15 {
            let n = s.index_of_count(c).unwrap();
            assert_eq!(s.count(n), c);
            assert_eq!(s.count(n - 1), c - 1);
        }
    }

    #[test]
    fn json_roundtrip() {
        let x = FinDesc::Matrix(MatrixDesc::columns(vec![SeqDesc::support(&[3])], vec![SeqDesc::periodic(&[0], &[1, 0])]));
        assert_eq!(FinDesc::from_json(&x.to_json()).unwrap(), x);
        assert!(FinDesc::from_json(r#"{"kind":"sequence","form":"periodic","preamble":[],"period":[]}"#).is_err());
    }
}
