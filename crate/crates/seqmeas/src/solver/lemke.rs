//! Lemke–Howson complementary pivoting for bimatrix games, with a
//! lexicographic ratio test so degenerate games terminate.

/// Labels `0..m` belong to the row player's strategies, `m..m+n` to the column player's.
struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns of the initial identity block, in order, for lexicographic ties.
    slack: Vec<usize>,
    rhs: usize,
}

const PIVOT_TOL: f64 = 1e-14;

impl Tableau {
    /// Enter the variable with label `enter`; returns the label that leaves.
    fn pivot(&mut self, enter: usize) -> Option<usize> {
        let rows: Vec<usize> = (0..self.t.len())
            .filter(|&i| self.t[i][enter] > PIVOT_TOL)
            .collect();
        let mut best = *rows.first()?;
        for &i in &rows[1..] {
            let ci = self.t[i][enter];
            let cb = self.t[best][enter];
            for &c in std::iter::once(&self.rhs).chain(self.slack.iter()) {
                let a = self.t[i][c] / ci;
                let b = self.t[best][c] / cb;
                let scale = 1e-13 * (1.0 + a.abs().max(b.abs()));
                if a < b - scale {
                    best = i;
                    break;
                }
                if a > b + scale {
                    break;
                }
            }
        }
        let leave = self.basis[best];
        let pv = self.t[best][enter];
        for x in self.t[best].iter_mut() {
            *x /= pv;
        }
        let prow = self.t[best].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == best {
                continue;
            }
            let f = row[enter];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= f * p;
                }
            }
        }
        self.basis[best] = enter;
        Some(leave)
    }
}

fn normalize(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let lo = a.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    a.iter()
        .map(|r| r.iter().map(|x| 1.0 + (x - lo) / range).collect())
        .collect()
}

/// A Nash equilibrium `(x, y)` of the bimatrix game `(a, b)` reached from the
/// missing label `k0`, or `None` when pivoting breaks down numerically.
pub fn lemke_howson(a: &[Vec<f64>], b: &[Vec<f64>], k0: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = a.len();
    let n = a.first()?.len();
    if m == 0 || n == 0 || k0 >= m + n {
        return None;
    }
    let a = normalize(a);
    let b = normalize(b);
    let cols = m + n + 1;
    // P: B^T x + s = 1, variables x (labels 0..m) and s (labels m..m+n).
    let mut p = Tableau {
        t: (0..n)
            .map(|j| {
                let mut r = vec![0.0; cols];
                for i in 0..m {
                    r[i] = b[i][j];
                }
                r[m + j] = 1.0;
                r[m + n] = 1.0;
                r
            })
            .collect(),
        basis: (m..m + n).collect(),
        slack: (m..m + n).collect(),
        rhs: m + n,
    };
    // Q: r + A y = 1, variables r (labels 0..m) and y (labels m..m+n).
    let mut q = Tableau {
        t: (0..m)
            .map(|i| {
                let mut r = vec![0.0; cols];
                r[i] = 1.0;
                for j in 0..n {
                    r[m + j] = a[i][j];
                }
                r[m + n] = 1.0;
                r
            })
            .collect(),
        basis: (0..m).collect(),
        slack: (0..m).collect(),
        rhs: m + n,
    };
    let mut in_p = k0 < m;
    let mut enter = k0;
    let limit = 50 * (m + n) + 1000;
    for _ in 0..limit {
        let leave = if in_p { p.pivot(enter)? } else { q.pivot(enter)? };
        if leave == k0 {
            let mut x = vec![0.0; m];
            let mut y = vec![0.0; n];
            for (i, &l) in p.basis.iter().enumerate() {
                if l < m {
                    x[l] = p.t[i][m + n].max(0.0);
                }
            }
            for (i, &l) in q.basis.iter().enumerate() {
                if l >= m {
                    y[l - m] = q.t[i][m + n].max(0.0);
                }
            }
            let sx: f64 = x.iter().sum();
            let sy: f64 = y.iter().sum();
            if !(sx > 0.0 && sy > 0.0) {
                return None;
            }
            x.iter_mut().for_each(|v| *v /= sx);
            y.iter_mut().for_each(|v| *v /= sy);
            return Some((x, y));
        }
        enter = leave;
        in_p = !in_p;
    }
    None
}

/// Largest gain any pure strategy offers over the mixed profile `(x, y)`.
pub fn bimatrix_regret(a: &[Vec<f64>], b: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    let m = a.len();
    let n = y.len();
    let row: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i][j] * y[j]).sum()).collect();
    let col: Vec<f64> = (0..n).map(|j| (0..m).map(|i| b[i][j] * x[i]).sum()).collect();
    let vx: f64 = row.iter().zip(x).map(|(r, p)| r * p).sum();
    let vy: f64 = col.iter().zip(y).map(|(c, p)| c * p).sum();
    let gx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vx;
    let gy = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vy;
    gx.max(gy)
}
