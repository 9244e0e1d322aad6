//! Lazy random-walk kernel on a site graph and its exact Markov quantities.
//!
//! Everything here is solved with dense linear algebra. Site graphs are
//! desk scale (tens of sites), so the product chain used for meeting times
//! stays small enough for a direct LU solve.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{SiteGraph, SiteId};

/// Default threshold on total-variation distance for the mixing time.
pub const MIXING_THRESHOLD: f64 = 0.25;
pub const MIXING_CAP: usize = 1_000_000;
/// Largest product chain (ordered state pairs) `meeting_times` will solve.
pub const PRODUCT_CHAIN_BUDGET: usize = 2_500;

const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic transition kernel over sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Wraps an arbitrary kernel after checking it is square, has entries in
    /// `[0, 1]` and rows summing to one.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidKernel("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidKernel(format!("row {i} has entry {x}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidKernel(format!("row {i} sums to {sum}")));
            }
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, state: SiteId) -> &[f64] {
        &self.rows[state]
    }

    pub fn get(&self, from: SiteId, to: SiteId) -> f64 {
        self.rows[from][to]
    }

    /// `dist * P` for a row vector `dist`.
    pub fn apply_left(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.n_states();
        let mut out = vec![0.0; n];
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(&self.rows[i]) {
                *o += mass * p;
            }
        }
        out
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        DMatrix::from_fn(n, n, |i, j| self.rows[i][j])
    }
}

/// Stay with probability 1/2, otherwise move to a uniformly chosen non-self
/// neighbor. A single isolated site gives `[[1]]`.
pub fn lazy_transition_matrix(graph: &SiteGraph) -> TransitionMatrix {
    let n = graph.num_sites();
    let mut rows = vec![vec![0.0; n]; n];
    for (site, row) in rows.iter_mut().enumerate() {
        let deg = graph.degree(site);
        if deg == 0 {
            row[site] = 1.0;
            continue;
        }
        row[site] = 0.5;
        let share = 1.0 / (2.0 * deg as f64);
        for &nb in graph.neighbors(site) {
            row[nb] = share;
        }
    }
    TransitionMatrix { rows }
}

/// Solves `pi P = pi`, `sum(pi) = 1` directly.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = p.n_states();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    // (P^T - I) pi = 0 with the last equation replaced by normalization
    let mut a = p.to_dmatrix().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or(Error::SingularSystem("stationary distribution"))?;
    if pi.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem("stationary distribution"));
    }
    Ok(pi.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimes {
    /// `matrix[from][to]`: expected steps for a walk at `from` to reach `to`.
    pub matrix: Vec<Vec<f64>>,
    pub max: f64,
}

/// First-step analysis, one linear solve per target.
pub fn hitting_times(p: &TransitionMatrix) -> Result<HittingTimes> {
    let n = p.n_states();
    let mut matrix = vec![vec![0.0; n]; n];
    for target in 0..n {
        let others: Vec<usize> = (0..n).filter(|&s| s != target).collect();
        if others.is_empty() {
            continue;
        }
        let m = others.len();
        let a = DMatrix::from_fn(m, m, |r, c| {
            let id = if r == c { 1.0 } else { 0.0 };
            id - p.get(others[r], others[c])
        });
        let h = a
            .lu()
            .solve(&DVector::from_element(m, 1.0))
            .ok_or(Error::SingularSystem("hitting times"))?;
        for (r, &from) in others.iter().enumerate() {
            if !h[r].is_finite() {
                return Err(Error::SingularSystem("hitting times"));
            }
            matrix[from][target] = h[r];
        }
    }
    let max = matrix.iter().flatten().copied().fold(0.0, f64::max);
    Ok(HittingTimes { matrix, max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingTimes {
    /// `matrix[a][b]`: expected steps until two independent walkers started
    /// at `a` and `b` share a site. Zero on the diagonal.
    pub matrix: Vec<Vec<f64>>,
    pub max: f64,
}

/// Expected time for the product chain of two independent walkers to hit
/// the diagonal.
pub fn meeting_times(p: &TransitionMatrix) -> Result<MeetingTimes> {
    meeting_times_with_budget(p, PRODUCT_CHAIN_BUDGET)
}

pub fn meeting_times_with_budget(p: &TransitionMatrix, budget: usize) -> Result<MeetingTimes> {
    let n = p.n_states();
    let states = n * n;
    if states > budget {
        return Err(Error::ProductChainTooLarge { states, budget });
    }
    let mut index = vec![usize::MAX; states];
    let mut pairs = Vec::with_capacity(states - n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                index[a * n + b] = pairs.len();
                pairs.push((a, b));
            }
        }
    }
    let m = pairs.len();
    let mut matrix = vec![vec![0.0; n]; n];
    if m == 0 {
        return Ok(MeetingTimes { matrix, max: 0.0 });
    }
    let support: Vec<Vec<(usize, f64)>> = p
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(j, &x)| (j, x))
                .collect()
        })
        .collect();
    let mut a = DMatrix::<f64>::identity(m, m);
    for (r, &(x, y)) in pairs.iter().enumerate() {
        for &(x2, px) in &support[x] {
            for &(y2, py) in &support[y] {
                if x2 != y2 {
                    a[(r, index[x2 * n + y2])] -= px * py;
                }
            }
        }
    }
    let h = a
        .lu()
        .solve(&DVector::from_element(m, 1.0))
        .ok_or(Error::SingularSystem("meeting times"))?;
    let mut max = 0.0f64;
    for (r, &(x, y)) in pairs.iter().enumerate() {
        if !h[r].is_finite() {
            return Err(Error::SingularSystem("meeting times"));
        }
        matrix[x][y] = h[r];
        max = max.max(h[r]);
    }
    Ok(MeetingTimes { matrix, max })
}

/// Total-variation distance between two distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Worst-start total-variation distance to `pi` after `t` steps, for
/// `t = 0, 1, ...` until it drops to `threshold`. Returns the whole profile.
pub fn tv_profile(p: &TransitionMatrix, pi: &[f64], threshold: f64, cap: usize) -> Result<Vec<f64>> {
    let n = p.n_states();
    let mut dists: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let mut profile = Vec::new();
    for _ in 0..=cap {
        let worst = dists
            .iter()
            .map(|d| total_variation(d, pi))
            .fold(0.0, f64::max);
        profile.push(worst);
        if worst <= threshold {
            return Ok(profile);
        }
        for d in &mut dists {
            *d = p.apply_left(d);
        }
    }
    Err(Error::MixingCapExceeded(cap))
}

/// Smallest `t` with worst-start TV distance to stationarity `<= threshold`.
pub fn mixing_time(p: &TransitionMatrix, threshold: f64) -> Result<usize> {
    let pi = stationary_distribution(p)?;
    let profile = tv_profile(p, &pi, threshold, MIXING_CAP)?;
    Ok(profile.len() - 1)
}

/// Draws the next site from row `state` using exactly one uniform draw.
/// The self-transition is tested first, then other sites in ascending id
/// order, so `u < P[state][state]` always stays put.
pub fn sample_step<R: Rng + ?Sized>(p: &TransitionMatrix, state: SiteId, rng: &mut R) -> SiteId {
    let u: f64 = rng.gen();
    let row = p.row(state);
    let mut acc = row[state];
    if u < acc {
        return state;
    }
    let mut last = state;
    for (j, &x) in row.iter().enumerate() {
        if j == state || x == 0.0 {
            continue;
        }
        acc += x;
        last = j;
        if u < acc {
            return j;
        }
    }
    // rounding left a sliver above the cumulative sum
    last
}

/// Bundle of the exact chain quantities needed by parameter formulas and
/// theory curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovQuantities {
    pub stationary: Vec<f64>,
    pub hitting: HittingTimes,
    pub meeting: MeetingTimes,
    pub t_mix: usize,
}

impl MarkovQuantities {
    pub fn compute(p: &TransitionMatrix) -> Result<Self> {
        let stationary = stationary_distribution(p)?;
        let hitting = hitting_times(p)?;
        let meeting = meeting_times(p)?;
        let t_mix = tv_profile(p, &stationary, MIXING_THRESHOLD, MIXING_CAP)?.len() - 1;
        Ok(MarkovQuantities {
            stationary,
            hitting,
            meeting,
            t_mix,
        })
    }

    pub fn t_hit(&self) -> f64 {
        self.hitting.max
    }

    pub fn t_meet(&self) -> f64 {
        self.meeting.max
    }

    /// CSV with columns `quantity,from,to,value` covering the stationary
    /// vector and the pairwise hitting and meeting matrices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["quantity", "from", "to", "value"])?;
        for (i, x) in self.stationary.iter().enumerate() {
            w.write_record(["stationary", &i.to_string(), "", &x.to_string()])?;
        }
        for (name, m) in [("hitting", &self.hitting.matrix), ("meeting", &self.meeting.matrix)] {
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    w.write_record([name, &i.to_string(), &j.to_string(), &x.to_string()])?;
                }
            }
        }
        w.write_record(["t_hit", "", "", &self.t_hit().to_string()])?;
        w.write_record(["t_meet", "", "", &self.t_meet().to_string()])?;
        w.write_record(["t_mix", "", "", &self.t_mix.to_string()])?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{grid, line};
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EXACT: f64 = 1e-12;

    /// Returns a fixed u64 so `gen::<f64>()` yields a known value.
    struct FixedRng(u64);

    impl RngCore for FixedRng {
        fn next_u32(&mut self) -> u32 {
            (self.0 >> 32) as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0);
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            dest.fill(0);
            Ok(())
        }
    }

    fn residual(pi: &[f64], p: &TransitionMatrix) -> f64 {
        p.apply_left(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn lazy_kernel_entries() {
        let p = lazy_transition_matrix(&line(2).unwrap());
        assert_eq!(p.rows(), &[vec![0.5, 0.5], vec![0.5, 0.5]]);

        let p = lazy_transition_matrix(&line(3).unwrap());
        assert_eq!(p.row(1), &[0.25, 0.5, 0.25]);

        let p = lazy_transition_matrix(&grid(3, 3).unwrap());
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(p.get(0, 1), 0.25);
        assert_eq!(p.get(0, 3), 0.25);
        assert_eq!(p.get(0, 4), 0.0);

        let p = lazy_transition_matrix(&line(1).unwrap());
        assert_eq!(p.rows(), &[vec![1.0]]);
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        for g in [grid(3, 3).unwrap(), grid(4, 5).unwrap(), line(7).unwrap()] {
            let p = lazy_transition_matrix(&g);
            for (i, row) in p.rows().iter().enumerate() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= EXACT);
                assert_eq!(row[i], 0.5);
            }
            assert!(TransitionMatrix::from_rows(p.rows().to_vec()).is_ok());
        }
    }

    #[test]
    fn from_rows_rejects_bad_kernels() {
        assert!(TransitionMatrix::from_rows(vec![]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![1.0]; 2]).is_err());
    }

    #[test]
    fn stationary_small_cases() {
        let pi = stationary_distribution(&lazy_transition_matrix(&line(2).unwrap())).unwrap();
        assert!((pi[0] - 0.5).abs() < EXACT && (pi[1] - 0.5).abs() < EXACT);

        let p3 = lazy_transition_matrix(&line(3).unwrap());
        let pi = stationary_distribution(&p3).unwrap();
        for (x, want) in pi.iter().zip([0.25, 0.5, 0.25]) {
            assert!((x - want).abs() < 1e-12);
        }

        let pi = stationary_distribution(&lazy_transition_matrix(&line(1).unwrap())).unwrap();
        assert_eq!(pi, vec![1.0]);
    }

    #[test]
    fn stationary_is_degree_proportional() {
        let g = grid(3, 4).unwrap();
        let p = lazy_transition_matrix(&g);
        let pi = stationary_distribution(&p).unwrap();
        let total: usize = (0..g.num_sites()).map(|s| g.degree(s)).sum();
        for s in 0..g.num_sites() {
            assert!((pi[s] - g.degree(s) as f64 / total as f64).abs() < 1e-12);
        }
        assert!(residual(&pi, &p) <= 1e-10);
    }

    #[test]
    fn hitting_line2() {
        let h = hitting_times(&lazy_transition_matrix(&line(2).unwrap())).unwrap();
        assert!((h.matrix[0][1] - 2.0).abs() < EXACT);
        assert!((h.max - 2.0).abs() < EXACT);
        assert_eq!(h.matrix[0][0], 0.0);
    }

    #[test]
    fn hitting_recurrence_residual() {
        let p = lazy_transition_matrix(&grid(3, 3).unwrap());
        let h = hitting_times(&p).unwrap();
        let n = p.n_states();
        for target in 0..n {
            assert_eq!(h.matrix[target][target], 0.0);
            for from in (0..n).filter(|&s| s != target) {
                let rhs: f64 = 1.0
                    + (0..n)
                        .map(|k| p.get(from, k) * h.matrix[k][target])
                        .sum::<f64>();
                assert!((h.matrix[from][target] - rhs).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn hitting_line3_closed_form() {
        // end-to-end on a path of 3 lazy sites; solved by hand:
        // h(0->2): h0 = 1 + h0/2 + h1/2, h1 = 1 + h0/4 + h1/2 => h0 = 8, h1 = 6
        let h = hitting_times(&lazy_transition_matrix(&line(3).unwrap())).unwrap();
        assert!((h.matrix[0][2] - 8.0).abs() < 1e-9);
        assert!((h.matrix[1][2] - 6.0).abs() < 1e-9);
        assert!((h.max - 8.0).abs() < 1e-9);
    }

    #[test]
    fn meeting_line2_and_diagonal() {
        let m = meeting_times(&lazy_transition_matrix(&line(2).unwrap())).unwrap();
        assert!((m.matrix[0][1] - 2.0).abs() < EXACT);
        assert!((m.max - 2.0).abs() < EXACT);
        assert_eq!(m.matrix[0][0], 0.0);
        assert_eq!(m.matrix[1][1], 0.0);

        let m = meeting_times(&lazy_transition_matrix(&line(1).unwrap())).unwrap();
        assert_eq!(m.max, 0.0);
    }

    #[test]
    fn meeting_recurrence_residual() {
        let p = lazy_transition_matrix(&grid(3, 3).unwrap());
        let m = meeting_times(&p).unwrap();
        let n = p.n_states();
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let mut rhs = 1.0;
                for a2 in 0..n {
                    for b2 in 0..n {
                        rhs += p.get(a, a2) * p.get(b, b2) * m.matrix[a2][b2];
                    }
                }
                assert!((m.matrix[a][b] - rhs).abs() <= 1e-9);
            }
        }
        // symmetric in the start pair
        for a in 0..n {
            for b in 0..n {
                assert!((m.matrix[a][b] - m.matrix[b][a]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn meeting_budget_enforced() {
        let p = lazy_transition_matrix(&grid(3, 3).unwrap());
        let err = meeting_times_with_budget(&p, 80).unwrap_err();
        assert!(matches!(err, Error::ProductChainTooLarge { states: 81, budget: 80 }));
    }

    #[test]
    fn mixing_small_cases() {
        assert_eq!(mixing_time(&lazy_transition_matrix(&line(1).unwrap()), 0.25).unwrap(), 0);
        assert_eq!(mixing_time(&lazy_transition_matrix(&line(2).unwrap()), 0.25).unwrap(), 1);
    }

    #[test]
    fn mixing_grid_profile_is_monotone() {
        let p = lazy_transition_matrix(&grid(3, 3).unwrap());
        let pi = stationary_distribution(&p).unwrap();
        let profile = tv_profile(&p, &pi, 0.25, 10_000).unwrap();
        assert!(profile.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        let t = mixing_time(&p, 0.25).unwrap();
        assert_eq!(t, profile.len() - 1);
        assert!(profile[t] <= 0.25);
        assert!(t == 0 || profile[t - 1] > 0.25);
    }

    #[test]
    fn sample_step_single_site() {
        let p = lazy_transition_matrix(&line(1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_step(&p, 0, &mut rng), 0);
        }
    }

    #[test]
    fn sample_step_inversion() {
        let p = lazy_transition_matrix(&line(2).unwrap());
        // u = 0 is below the self mass from either state
        assert_eq!(sample_step(&p, 0, &mut FixedRng(0)), 0);
        assert_eq!(sample_step(&p, 1, &mut FixedRng(0)), 1);
        // u just below 1 leaves
        assert_eq!(sample_step(&p, 0, &mut FixedRng(u64::MAX)), 1);
        assert_eq!(sample_step(&p, 1, &mut FixedRng(u64::MAX)), 0);
    }

    #[test]
    fn sample_step_frequency() {
        let p = lazy_transition_matrix(&line(2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let stays = (0..n).filter(|_| sample_step(&p, 0, &mut rng) == 0).count();
        assert!((stays as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn csv_export_lists_all_quantities() {
        let q = MarkovQuantities::compute(&lazy_transition_matrix(&line(2).unwrap())).unwrap();
        let mut buf = Vec::new();
        q.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("quantity,from,to,value\n"));
        assert!(text.contains("hitting,0,1,2\n"));
        assert!(text.contains("t_meet,,,2\n"));
        assert_eq!(text.lines().count(), 1 + 2 + 4 + 4 + 3);
    }
}
