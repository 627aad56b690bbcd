#![allow(dead_code)]

use pqclone::matrixkit::{self, CMatrix};
use pqclone::{Complex64, QState, StateSet};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_vector(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_state(rng: &mut impl Rng, dim: usize) -> QState {
    loop {
        let v = random_vector(rng, dim);
        if matrixkit::norm(&v) > 0.1 {
            return QState::normalized(v).unwrap();
        }
    }
}

/// Normalized `Σ coeffs[i] · states[i]`.
pub fn combination(states: &[&QState], coeffs: &[Complex64]) -> QState {
    let dim = states[0].dim();
    let mut v = vec![c(0.0, 0.0); dim];
    for (s, &a) in states.iter().zip(coeffs) {
        matrixkit::axpy(&mut v, a, s.amplitudes());
    }
    QState::normalized(v).unwrap()
}

pub fn random_coeffs(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    loop {
        let v = random_vector(rng, n);
        if v.iter().all(|z| z.norm() > 0.2) {
            return v;
        }
    }
}

/// `{Ψ₁, Ψ₂, Ψ₃, Ψ₄ ∝ aΨ₂ + bΨ₃}` with random states in dimension 3 or 4.
pub fn single_clonable_instance(rng: &mut impl Rng) -> StateSet {
    let dim = rng.gen_range(3..=4);
    let p1 = random_state(rng, dim);
    let p2 = random_state(rng, dim);
    let p3 = random_state(rng, dim);
    let p4 = combination(&[&p2, &p3], &random_coeffs(rng, 2));
    StateSet::from_states(vec![p1, p2, p3, p4]).unwrap()
}

/// `m` random independent states plus one dependent state that uses all of them.
pub fn fully_blocked_instance(rng: &mut impl Rng, dim: usize, m: usize) -> StateSet {
    let mut states: Vec<QState> = (0..m).map(|_| random_state(rng, dim)).collect();
    let refs: Vec<&QState> = states.iter().collect();
    let dep = combination(&refs, &random_coeffs(rng, m));
    states.push(dep);
    StateSet::from_states(states).unwrap()
}

/// Two clonable states and one dependent state built from two further states.
pub fn two_clonable_instance(rng: &mut impl Rng) -> StateSet {
    let p: Vec<QState> = (0..4).map(|_| random_state(rng, 4)).collect();
    let dep = combination(&[&p[2], &p[3]], &random_coeffs(rng, 2));
    let mut states = p;
    states.push(dep);
    StateSet::from_states(states).unwrap()
}

/// Haar-ish unitary from Gram-Schmidt on a random complex matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vector(rng, n);
        for _ in 0..2 {
            for q in &cols {
                let p = matrixkit::inner(q, &v);
                matrixkit::axpy(&mut v, -p, q);
            }
        }
        let nv = matrixkit::norm(&v);
        if nv > 1e-3 {
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    CMatrix::from_columns(&cols).unwrap()
}

/// `U diag(λ) U†` with Hermitian symmetry enforced exactly.
pub fn hermitian_with_spectrum(u: &CMatrix, spectrum: &[f64]) -> CMatrix {
    let m = &(u * &CMatrix::from_diagonal(spectrum)) * &u.adjoint();
    let n = m.rows();
    CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Determinant by partial-pivot Gaussian elimination.
pub fn determinant(m: &CMatrix) -> Complex64 {
    let n = m.rows();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|r| m.row(r).to_vec()).collect();
    let mut det = c(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm()))
            .unwrap();
        if a[p][k].norm() == 0.0 {
            return c(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        let pivot = a[k].clone();
        for row in a.iter_mut().skip(k + 1) {
            let f = row[k] / pivot[k];
            for (x, &p) in row.iter_mut().zip(&pivot).skip(k) {
                *x -= f * p;
            }
        }
    }
    det
}

/// All principal minors, indexed by subset bitmask.
pub fn principal_minors(m: &CMatrix) -> Vec<f64> {
    let n = m.rows();
    (1..(1u32 << n))
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            determinant(&m.submatrix(&idx)).re
        })
        .collect()
}
