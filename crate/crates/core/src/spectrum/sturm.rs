//! Sturm-sequence counting and bisection for symmetric tridiagonal matrices.
//!
//! The number of negative pivots in the `LDLᵀ` factorization of `T - x`
//! equals the number of eigenvalues of `T` strictly below `x`. Counts are
//! evaluated for [`LANES`] shifts per sweep over the matrix so independent
//! divisions overlap.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Shifts evaluated per pass over the matrix.
pub const LANES: usize = 8;

/// Replaces an exactly-zero pivot; the count then treats it as negative.
const PIVMIN: f64 = 1e-300;

/// Rows between magnitude checks in the minor recurrence. Each row grows the
/// minors by at most a factor of about 4, so 64 rows stay far from overflow.
const RESCALE_BLOCK: usize = 64;
const RESCALE_LOW: f64 = 1.0 / RESCALE_HIGH; // 2^-255
const RESCALE_HIGH: f64 = 5.78960446186581e76; // 2^255

/// Something whose eigenvalue counting function can be evaluated.
pub trait SturmCount: Sync {
    fn dim(&self) -> usize;

    /// `out[l] = #{eigenvalues < shifts[l]}`.
    fn count_below_lanes(&self, shifts: &[f64; LANES], out: &mut [usize; LANES]);

    /// An interval containing the whole spectrum.
    fn spectral_bounds(&self) -> (f64, f64);

    fn count_below(&self, x: f64) -> usize {
        let mut out = [0; LANES];
        self.count_below_lanes(&[x; LANES], &mut out);
        out[0]
    }
}

/// A general real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off_sq: Vec<f64>,
    off_abs: Vec<f64>,
}

impl SymTridiagonal {
    /// `diag` has length `n`, `off` has length `n - 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Domain(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal matrix entry".into()));
        }
        let off_sq = off.iter().map(|e| e * e).collect();
        let off_abs = off.iter().map(|e| e.abs()).collect();
        Ok(SymTridiagonal { diag, off_sq, off_abs })
    }
}

impl SturmCount for SymTridiagonal {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn count_below_lanes(&self, shifts: &[f64; LANES], out: &mut [usize; LANES]) {
        let mut q = [0.0; LANES];
        let mut count = [0usize; LANES];
        let d0 = self.diag[0];
        for l in 0..LANES {
            let t = d0 - shifts[l];
            let t = if t.abs() < PIVMIN { -PIVMIN } else { t };
            count[l] += (t < 0.0) as usize;
            q[l] = t;
        }
        for (&d, &e2) in self.diag[1..].iter().zip(&self.off_sq) {
            for l in 0..LANES {
                let t = (d - shifts[l]) - e2 / q[l];
                let t = if t.abs() < PIVMIN { -PIVMIN } else { t };
                count[l] += (t < 0.0) as usize;
                q[l] = t;
            }
        }
        *out = count;
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off_abs[i - 1] } else { 0.0 };
            let right = if i + 1 < n { self.off_abs[i] } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }
}

/// The finite-difference Dirichlet operator `-d²/dx² + V` on `n` interior
/// points with spacing `h`: diagonal `2/h² + V_i`, off-diagonal `-1/h²`.
///
/// Counting tracks the leading principal minors `D_i` of `h²(T - x)` through
/// their differences: `δ_i = δ_{i-1} + h²(V_i - x) D_{i-1}`,
/// `D_i = D_{i-1} + δ_i`, `D_0 = δ_0 = 1`. Pivots are `D_i / D_{i-1}`, so the
/// count is the number of sign changes. The form never builds `2/h² - x`,
/// keeping low eigenvalues accurate to nearly full relative precision on fine
/// grids, and needs no division. Both sequences are rescaled by powers of two
/// every [`RESCALE_BLOCK`] rows.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    h2: f64,
    scaled_potential: Vec<f64>,
    v_min: f64,
    v_max: f64,
}

impl DirichletOperator {
    pub fn new(h: f64, potential: &[f64]) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
        }
        if potential.is_empty() {
            return Err(Error::Domain("operator needs at least one grid point".into()));
        }
        if let Some(i) = potential.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("potential value at grid point {}", i + 1)));
        }
        let h2 = h * h;
        let v_min = potential.iter().copied().fold(f64::INFINITY, f64::min);
        let v_max = potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(DirichletOperator {
            h2,
            scaled_potential: potential.iter().map(|v| h2 * v).collect(),
            v_min,
            v_max,
        })
    }

    /// Smallest and largest potential value on the grid.
    pub fn potential_range(&self) -> (f64, f64) {
        (self.v_min, self.v_max)
    }

    /// The same operator as a plain tridiagonal matrix.
    pub fn to_tridiagonal(&self) -> SymTridiagonal {
        let inv = 1.0 / self.h2;
        let diag = self.scaled_potential.iter().map(|hv| 2.0 * inv + hv * inv).collect();
        let off = vec![-inv; self.dim() - 1];
        SymTridiagonal::new(diag, off).expect("finite entries")
    }
}

impl SturmCount for DirichletOperator {
    fn dim(&self) -> usize {
        self.scaled_potential.len()
    }

    fn count_below_lanes(&self, shifts: &[f64; LANES], out: &mut [usize; LANES]) {
        let mut sx = [0.0; LANES];
        for l in 0..LANES {
            sx[l] = self.h2 * shifts[l];
        }
        let mut minor = [1.0f64; LANES];
        let mut diff = [1.0f64; LANES];
        let mut count = [0usize; LANES];
        for block in self.scaled_potential.chunks(RESCALE_BLOCK) {
            for &hv in block {
                for l in 0..LANES {
                    let d = diff[l] + (hv - sx[l]) * minor[l];
                    let p = minor[l] + d;
                    // an exact zero counts as positive; the next minor then
                    // has the opposite sign of the previous one
                    count[l] += ((p < 0.0) != (minor[l] < 0.0)) as usize;
                    diff[l] = d;
                    minor[l] = p;
                }
            }
            for l in 0..LANES {
                let size = minor[l].abs().max(diff[l].abs());
                if !(RESCALE_LOW..=RESCALE_HIGH).contains(&size) {
                    let s = (-size.log2().round()).exp2();
                    minor[l] *= s;
                    diff[l] *= s;
                }
            }
        }
        *out = count;
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        (self.v_min, 4.0 / self.h2 + self.v_max)
    }
}

/// Convergence controls for [`lowest_eigenvalues`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionTolerance {
    /// Final bracket width never exceeds this (absolute, energy units).
    pub abs: f64,
    /// Bisection also continues until the width is below `rel · |λ|`.
    pub rel: f64,
}

impl Default for BisectionTolerance {
    fn default() -> Self {
        BisectionTolerance { abs: 1e-10, rel: 1e-13 }
    }
}

/// Computes the lowest `m` eigenvalues by bisection on the Sturm count.
///
/// `guess(k)` may supply a bracket for eigenvalue `k` (1-based); brackets are
/// verified with two counts and replaced by the global spectral bounds when
/// they do not contain the eigenvalue.
pub fn lowest_eigenvalues<S, G>(op: &S, m: usize, tol: BisectionTolerance, guess: G) -> Result<Vec<f64>>
where
    S: SturmCount,
    G: Fn(usize) -> Option<(f64, f64)> + Sync,
{
    let n = op.dim();
    if m > n {
        return Err(Error::Domain(format!("requested {m} eigenvalues of a {n}x{n} matrix")));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let global = op.spectral_bounds();
    let global = {
        let pad = 1e-12 * global.0.abs().max(global.1.abs()).max(1.0);
        (global.0 - pad, global.1 + pad)
    };

    let mut values = vec![0.0; m];
    values.par_chunks_mut(LANES).enumerate().for_each(|(chunk, slot)| {
        let first = chunk * LANES + 1;
        let ks: [usize; LANES] = std::array::from_fn(|l| (first + l).min(m));
        let found = bisect_lanes(op, &ks, tol, global, &guess);
        slot.copy_from_slice(&found[..slot.len()]);
    });

    for (i, w) in values.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Solver(format!(
                "eigenvalues {} and {} not separated ({} vs {})",
                i + 1,
                i + 2,
                w[0],
                w[1]
            )));
        }
    }
    Ok(values)
}

fn bisect_lanes<S, G>(
    op: &S,
    ks: &[usize; LANES],
    tol: BisectionTolerance,
    global: (f64, f64),
    guess: &G,
) -> [f64; LANES]
where
    S: SturmCount,
    G: Fn(usize) -> Option<(f64, f64)>,
{
    let mut lo = [global.0; LANES];
    let mut hi = [global.1; LANES];
    let mut use_guess = [false; LANES];
    for l in 0..LANES {
        if let Some((a, b)) = guess(ks[l]) {
            if a.is_finite() && b.is_finite() && a < b {
                lo[l] = a;
                hi[l] = b;
                use_guess[l] = true;
            }
        }
    }
    if use_guess.iter().any(|&g| g) {
        let mut c_lo = [0; LANES];
        let mut c_hi = [0; LANES];
        op.count_below_lanes(&lo, &mut c_lo);
        op.count_below_lanes(&hi, &mut c_hi);
        for l in 0..LANES {
            if use_guess[l] && !(c_lo[l] < ks[l] && c_hi[l] >= ks[l]) {
                lo[l] = global.0;
                hi[l] = global.1;
            }
        }
    }

    let mut counts = [0; LANES];
    let mut mid = [0.0; LANES];
    loop {
        let mut active = false;
        for l in 0..LANES {
            let width = hi[l] - lo[l];
            let scale = lo[l].abs().max(hi[l].abs());
            let target = tol.abs.min(tol.rel * scale);
            let m = 0.5 * (lo[l] + hi[l]);
            mid[l] = m;
            if width > target && m > lo[l] && m < hi[l] {
                active = true;
            }
        }
        if !active {
            break;
        }
        op.count_below_lanes(&mid, &mut counts);
        for l in 0..LANES {
            if counts[l] >= ks[l] {
                hi[l] = mid[l];
            } else {
                lo[l] = mid[l];
            }
        }
    }
    std::array::from_fn(|l| 0.5 * (lo[l] + hi[l]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian(n: usize, h: f64) -> SymTridiagonal {
        let inv = 1.0 / (h * h);
        SymTridiagonal::new(vec![2.0 * inv; n], vec![-inv; n - 1]).unwrap()
    }

    #[test]
    fn one_by_one_matrix() {
        let t = SymTridiagonal::new(vec![3.5], vec![]).unwrap();
        let ev = lowest_eigenvalues(&t, 1, BisectionTolerance::default(), |_| None).unwrap();
        assert!((ev[0] - 3.5).abs() < 1e-10);
    }

    #[test]
    fn counts_match_known_spectrum() {
        // eigenvalues of tridiag(2, -1) with n = 3: 2 - sqrt2, 2, 2 + sqrt2
        let t = SymTridiagonal::new(vec![2.0; 3], vec![-1.0; 2]).unwrap();
        assert_eq!(t.count_below(0.5), 0);
        assert_eq!(t.count_below(1.0), 1);
        assert_eq!(t.count_below(2.5), 2);
        assert_eq!(t.count_below(3.5), 3);
        let ev = lowest_eigenvalues(&t, 3, BisectionTolerance::default(), |_| None).unwrap();
        let expect = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dirichlet_counts_agree_with_plain_recurrence() {
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let v: Vec<f64> = (1..=n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let op = DirichletOperator::new(h, &v).unwrap();
        let plain = op.to_tridiagonal();
        for x in [-5.0, 0.0, 10.0, 100.0, 1e3, 5e4, 1.6e5] {
            assert_eq!(op.count_below(x), plain.count_below(x), "shift {x}");
        }
    }

    #[test]
    fn free_dirichlet_spectrum_to_relative_precision() {
        let n = 4000;
        let lambda = PI;
        let h = lambda / (n as f64 + 1.0);
        let op = DirichletOperator::new(h, &vec![0.0; n]).unwrap();
        let ev = lowest_eigenvalues(&op, 30, BisectionTolerance::default(), |_| None).unwrap();
        for (i, e) in ev.iter().enumerate() {
            let k = (i + 1) as f64;
            let exact = 4.0 / (h * h) * (k * PI * h / (2.0 * lambda)).sin().powi(2);
            assert!(((e - exact) / exact).abs() < 1e-12, "k={k}: {e} vs {exact}");
        }
    }

    #[test]
    fn bad_guess_falls_back_to_global_bracket() {
        let t = laplacian(50, 0.1);
        let good = lowest_eigenvalues(&t, 10, BisectionTolerance::default(), |_| None).unwrap();
        let bad = lowest_eigenvalues(&t, 10, BisectionTolerance::default(), |_| Some((1e3, 2e3))).unwrap();
        for (a, b) in good.iter().zip(&bad) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn too_many_eigenvalues_is_an_error() {
        let t = laplacian(4, 0.2);
        assert!(matches!(
            lowest_eigenvalues(&t, 5, BisectionTolerance::default(), |_| None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_non_finite_potential() {
        assert!(matches!(
            DirichletOperator::new(0.1, &[0.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }
}
