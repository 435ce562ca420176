//! Banded LU with partial pivoting, and periodic banded systems via a
//! low-rank corner correction.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular at pivot {index}")]
    Singular { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("periodic band of half-width {band} needs more than {} unknowns, got {n}", 2 * band)]
    TooSmall { n: usize, band: usize },
}

/// Square matrix with `kl` sub- and `ku` super-diagonals. Storage reserves
/// another `kl` super-diagonals for pivoting fill-in.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            i < self.n && j < self.n && self.in_band(i, j),
            "({i}, {j}) outside band"
        );
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            i < self.n && j < self.n && self.in_band(i, j),
            "({i}, {j}) outside band"
        );
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu, LinalgError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let tiny = f64::EPSILON * scale * n as f64;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(LinalgError::Singular { index: k });
            }
            pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let s = self.slot(r, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let u = self.data[self.slot(k, j)];
                        let t = self.slot(r, j);
                        self.data[t] -= l * u;
                    }
                }
            }
        }
        Ok(BandedLu { a: self, pivots })
    }
}

/// `PA = LU` of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.a.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), LinalgError> {
        let a = &self.a;
        let n = a.n;
        if b.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                found: b.len(),
            });
        }
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + a.kl).min(n - 1) {
                b[r] -= a.data[a.slot(r, k)] * bk;
            }
        }
        let reach = a.kl + a.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= a.data[a.slot(k, j)] * b[j];
            }
            b[k] = s / a.data[a.slot(k, k)];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Dense solve through the banded path with full bandwidth; meant for the
/// small capacitance systems below.
pub fn solve_dense(n: usize, a: &[f64], b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let bw = n.saturating_sub(1);
    let mut m = BandedMatrix::zeros(n, bw, bw);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, a[i * n + j]);
        }
    }
    m.factor()?.solve(b)
}

/// Factorization of a periodic banded matrix `A[i][(i+o) mod n]`,
/// `|o| <= band`, as a banded part plus a rank-`2·band` corner correction
/// handled by the Sherman–Morrison–Woodbury identity.
#[derive(Debug, Clone)]
pub struct CyclicBandedLu {
    n: usize,
    band: usize,
    lu: BandedLu,
    /// Corner rows: `(row, [(col, value)])`.
    corners: Vec<(usize, Vec<(usize, f64)>)>,
    /// `B⁻¹U`, one column per corner row.
    z: Vec<Vec<f64>>,
    capacitance: Vec<f64>,
}

impl CyclicBandedLu {
    /// `entry(i, o)` returns `A[i][(i + o) mod n]` for `o ∈ [-band, band]`.
    pub fn new(
        n: usize,
        band: usize,
        entry: impl Fn(usize, isize) -> f64,
    ) -> Result<Self, LinalgError> {
        if n <= 2 * band {
            return Err(LinalgError::TooSmall { n, band });
        }
        let mut b = BandedMatrix::zeros(n, band, band);
        let mut corners: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for i in 0..n {
            let mut wrap = Vec::new();
            for o in -(band as isize)..=(band as isize) {
                let j = i as isize + o;
                let v = entry(i, o);
                if j < 0 {
                    wrap.push(((j + n as isize) as usize, v));
                } else if j >= n as isize {
                    wrap.push(((j - n as isize) as usize, v));
                } else {
                    b.set(i, j as usize, v);
                }
            }
            if !wrap.is_empty() {
                corners.push((i, wrap));
            }
        }
        let lu = b.factor()?;
        let r = corners.len();
        let mut z = Vec::with_capacity(r);
        for &(row, _) in &corners {
            let mut e = vec![0.0; n];
            e[row] = 1.0;
            lu.solve_in_place(&mut e)?;
            z.push(e);
        }
        // S = I + Vᵀ B⁻¹ U, with V's rows the wrap entries
        let mut capacitance = vec![0.0; r * r];
        for (a, (_, wrap)) in corners.iter().enumerate() {
            for (c, zc) in z.iter().enumerate() {
                let dot: f64 = wrap.iter().map(|&(j, v)| v * zc[j]).sum();
                capacitance[a * r + c] = dot + if a == c { 1.0 } else { 0.0 };
            }
        }
        // fail early rather than on the first solve
        solve_dense(r, &capacitance, &vec![0.0; r])?;
        Ok(CyclicBandedLu {
            n,
            band,
            lu,
            corners,
            z,
            capacitance,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut y = self.lu.solve(rhs)?;
        let r = self.corners.len();
        let vy: Vec<f64> = self
            .corners
            .iter()
            .map(|(_, wrap)| wrap.iter().map(|&(j, v)| v * y[j]).sum())
            .collect();
        let w = solve_dense(r, &self.capacitance, &vy)?;
        for (zc, wc) in self.z.iter().zip(&w) {
            for (yi, zi) in y.iter_mut().zip(zc) {
                *yi -= wc * zi;
            }
        }
        Ok(y)
    }
}
