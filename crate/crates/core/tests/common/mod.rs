//! Independent reference computations used by the integration tests.
//!
//! Everything here works on plain arrays and brute-force sums so that it
//! shares no code path with the library under test.

#![allow(dead_code)]

use cewit::linalg::ComplexMatrix;
use num_complex::Complex64 as C;

pub type M2 = [[C; 2]; 2];
pub type M4 = [[C; 4]; 4];
pub type M16 = Vec<Vec<C>>;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

pub fn to_m4(m: &ComplexMatrix<f64>) -> M4 {
    let mut out = [[ZERO; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

/// `k = 0` is the identity, `1..=3` are X, Y, Z.
pub fn pauli(k: usize) -> M2 {
    let i = C::new(0.0, 1.0);
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -i], [i, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => unreachable!(),
    }
}

pub fn ket_projector(v: [C; 2]) -> M2 {
    let mut p = [[ZERO; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            p[a][b] = v[a] * v[b].conj();
        }
    }
    p
}

pub fn kron2(a: &M2, b: &M2) -> M4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i / 2][j / 2] * b[i % 2][j % 2];
        }
    }
    out
}

/// Singlet projector built from the state vector `(|01> − |10>)/√2`.
pub fn singlet() -> M4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [ZERO, C::new(h, 0.0), C::new(-h, 0.0), ZERO];
    let mut s = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            s[i][j] = psi[i] * psi[j].conj();
        }
    }
    s
}

pub fn trace_prod4(a: &M4, b: &M4) -> C {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[i][j] * b[j][i];
        }
    }
    acc
}

/// `χ1 ⊗ χ2` with qubit order `A1 B1 A2 B2`.
pub fn two_copy(chi1: &M4, chi2: &M4) -> M16 {
    let mut out = vec![vec![ZERO; 16]; 16];
    for i in 0..16 {
        for j in 0..16 {
            out[i][j] = chi1[i / 4][j / 4] * chi2[i % 4][j % 4];
        }
    }
    out
}

/// `M1 on A1, M2 on A2, S on B1 B2`, in the order `A1 B1 A2 B2`.
pub fn collective_operator(m1: &M2, m2: &M2, s: &M4) -> M16 {
    let split = |i: usize| ((i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1);
    let mut out = vec![vec![ZERO; 16]; 16];
    for i in 0..16 {
        let (a1, b1, a2, b2) = split(i);
        for j in 0..16 {
            let (c1, d1, c2, d2) = split(j);
            out[i][j] = m1[a1][c1] * m2[a2][c2] * s[2 * b1 + b2][2 * d1 + d2];
        }
    }
    out
}

/// `X on A1 A2` times `Y on B1 B2`.
pub fn pair_operator(on_a: &M4, on_b: &M4) -> M16 {
    let split = |i: usize| ((i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1);
    let mut out = vec![vec![ZERO; 16]; 16];
    for i in 0..16 {
        let (a1, b1, a2, b2) = split(i);
        for j in 0..16 {
            let (c1, d1, c2, d2) = split(j);
            out[i][j] = on_a[2 * a1 + a2][2 * c1 + c2] * on_b[2 * b1 + b2][2 * d1 + d2];
        }
    }
    out
}

pub fn trace_prod16(a: &M16, b: &M16) -> C {
    let mut acc = ZERO;
    for i in 0..16 {
        for j in 0..16 {
            acc += a[i][j] * b[j][i];
        }
    }
    acc
}

/// `Tr[(χ1 ⊗ χ2)(S ⊗ M1 ⊗ M2)]` by a full 16×16 trace.
pub fn direct_c(chi1: &M4, chi2: &M4, m1: &M2, m2: &M2, s: &M4) -> C {
    trace_prod16(&two_copy(chi1, chi2), &collective_operator(m1, m2, s))
}

/// `Tr[ρ (M ⊗ 1)]`.
pub fn marginal(rho: &M4, m: &M2) -> f64 {
    trace_prod4(rho, &kron2(m, &pauli(0))).re
}

/// `Tr[(ρ⊗ρ)((1−2S)⊗(1−2S))]` with one factor on each copy pair.
pub fn collective_purity(rho: &M4) -> f64 {
    let s = singlet();
    let mut flip = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            flip[i][j] = if i == j { ONE } else { ZERO } - s[i][j] * 2.0;
        }
    }
    trace_prod16(&two_copy(rho, rho), &pair_operator(&flip, &flip)).re
}

pub fn purity(rho: &M4) -> f64 {
    rho.iter().flatten().map(|z| z.norm_sqr()).sum()
}

/// `T_mn = Tr[ρ σm ⊗ σn]`.
pub fn correlation_tensor(rho: &M4) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for m in 0..3 {
        for n in 0..3 {
            t[m][n] = trace_prod4(rho, &kron2(&pauli(m + 1), &pauli(n + 1))).re;
        }
    }
    t
}

pub fn t_tt(t: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| t[i][k] * t[j][k]).sum();
        }
    }
    out
}

/// `C̄ − 4C` from direct 16×16 traces with Pauli measurements on `A`.
pub fn direct_r(rho: &M4) -> [[f64; 3]; 3] {
    let s = singlet();
    let mut r = [[0.0; 3]; 3];
    for m in 0..3 {
        for n in 0..3 {
            let (pm, pn) = (pauli(m + 1), pauli(n + 1));
            let c = direct_c(rho, rho, &pm, &pn, &s).re;
            r[m][n] = marginal(rho, &pm) * marginal(rho, &pn) - 4.0 * c;
        }
    }
    r
}

/// Eigenvalues of a real symmetric 3×3 matrix in ascending order, from the
/// trigonometric solution of the characteristic cubic.
pub fn sym3_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

/// `(Tr TTᵀ − 1)/2`.
pub fn entropic_oracle(rho: &M4) -> f64 {
    let r = t_tt(&correlation_tensor(rho));
    (r[0][0] + r[1][1] + r[2][2] - 1.0) / 2.0
}

/// Sum of the two largest eigenvalues of `TTᵀ` minus one.
pub fn chsh_oracle(rho: &M4) -> f64 {
    let ev = sym3_eigenvalues(&t_tt(&correlation_tensor(rho)));
    ev[1] + ev[2] - 1.0
}

/// Collectibility from direct two-copy traces.
pub fn collectibility_oracle(rho: &M4) -> f64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let p0 = ket_projector([ONE, ZERO]);
    let p1 = ket_projector([ZERO, ONE]);
    let pp = ket_projector([C::new(h, 0.0), C::new(h, 0.0)]);
    let pm = ket_projector([C::new(h, 0.0), C::new(-h, 0.0)]);
    let s = singlet();
    let x = |a: &M2, b: &M2| {
        let cbar = marginal(rho, a) * marginal(rho, b);
        if cbar <= 1e-14 {
            0.0
        } else {
            direct_c(rho, rho, a, b, &s).re / cbar
        }
    };
    let (x00, x11, x01, xpp, xmm) = (x(&p0, &p0), x(&p1, &p1), x(&p0, &p1), x(&pp, &pp), x(&pm, &pm));
    let x0 = marginal(rho, &p0);
    let x1 = 1.0 - x0;
    let eta = 16.0 * x0 * x1 * (x00 * x11).max(0.0).sqrt() + 4.0 * xpp.max(xmm);
    (eta + x0 * x0 * (1.0 - 2.0 * x00) + x1 * x1 * (1.0 - 2.0 * x11) + 2.0 * x0 * x1 * (1.0 - 2.0 * x01) - 1.0) / 2.0
}

pub fn partial_transpose_b(rho: &M4) -> M4 {
    let mut out = [[ZERO; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    out[2 * a + b][2 * a2 + b2] = rho[2 * a + b2][2 * a2 + b];
                }
            }
        }
    }
    out
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det4(m: &M4) -> C {
    let mut a = *m;
    let mut det = ONE;
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        if a[pivot][col].norm() == 0.0 {
            return ZERO;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
        }
    }
    det
}

/// For two qubits the partial transpose has at most one negative
/// eigenvalue, so a negative determinant is equivalent to entanglement.
pub fn ppt_entangled(rho: &M4, deadband: f64) -> Option<bool> {
    let d = det4(&partial_transpose_b(rho)).re;
    if d.abs() <= deadband {
        None
    } else {
        Some(d < 0.0)
    }
}

pub fn werner_matrix(p: f64) -> M4 {
    let v = 1.0 - p;
    let mut m = [[ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C::new((1.0 - v) / 4.0, 0.0);
    }
    for i in [0, 3] {
        for j in [0, 3] {
            m[i][j] += C::new(v / 2.0, 0.0);
        }
    }
    m
}

/// Dual RBF-SVM problem solved by accelerated projected gradient.
pub struct DualOracle {
    pub alpha: Vec<f64>,
    pub bias: f64,
    x: Vec<[f64; 2]>,
    y: Vec<f64>,
    gamma: f64,
}

impl DualOracle {
    pub fn solve(x: &[[f64; 2]], y: &[f64], caps: &[f64], gamma: f64, iterations: usize) -> Self {
        let n = x.len();
        let k = |a: &[f64; 2], b: &[f64; 2]| (-gamma * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))).exp();
        let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k(&x[i], &x[j])).collect()).collect();
        // Gershgorin bound on the largest eigenvalue
        let lip = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let project = |v: &[f64]| -> Vec<f64> {
            let at = |mu: f64| -> (Vec<f64>, f64) {
                let a: Vec<f64> = (0..n).map(|i| (v[i] - mu * y[i]).clamp(0.0, caps[i])).collect();
                let s = a.iter().zip(y).map(|(a, y)| a * y).sum();
                (a, s)
            };
            let (mut lo, mut hi) = (-1e3, 1e3);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if at(mid).1 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            at(0.5 * (lo + hi)).0
        };
        let mut alpha = vec![0.0; n];
        let mut z = alpha.clone();
        let mut t = 1.0f64;
        for _ in 0..iterations {
            let grad: Vec<f64> = (0..n).map(|i| q[i].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() - 1.0).collect();
            let step: Vec<f64> = (0..n).map(|i| z[i] - grad[i] / lip).collect();
            let next = project(&step);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - alpha[i])).collect();
            alpha = next;
            t = t_next;
        }
        let f = |i: usize| -> f64 { (0..n).map(|j| alpha[j] * y[j] * k(&x[j], &x[i])).sum() };
        let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > 1e-8 && alpha[i] < caps[i] - 1e-8).collect();
        let bias = if free.is_empty() {
            0.0
        } else {
            free.iter().map(|&i| y[i] - f(i)).sum::<f64>() / free.len() as f64
        };
        Self { alpha, bias, x: x.to_vec(), y: y.to_vec(), gamma }
    }

    pub fn decision(&self, p: &[f64; 2]) -> f64 {
        let g = self.gamma;
        self.alpha
            .iter()
            .zip(&self.x)
            .zip(&self.y)
            .map(|((a, s), y)| a * y * (-g * ((s[0] - p[0]).powi(2) + (s[1] - p[1]).powi(2))).exp())
            .sum::<f64>()
            + self.bias
    }

    pub fn objective(&self) -> f64 {
        let g = self.gamma;
        let n = self.x.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = (self.x[i][0] - self.x[j][0]).powi(2) + (self.x[i][1] - self.x[j][1]).powi(2);
                quad += self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j] * (-g * d).exp();
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }
}
