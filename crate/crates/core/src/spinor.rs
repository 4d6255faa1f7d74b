//! Two-component spinors and the Pauli algebra.
//!
//! Everything here is a small `Copy` value type. Matrix exponentials of
//! Pauli-basis operators use the closed form
//! `exp(-iθ c·σ) = cos(θ|c|) 1 - i sin(θ|c|) ĉ·σ`, so propagation is
//! exactly unitary up to rounding and bit-reproducible.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Spin state `c0 |↑⟩ + c1 |↓⟩`. No global-phase canonicalization is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub c0: C64,
    pub c1: C64,
}

impl Spinor {
    pub const fn new(c0: C64, c1: C64) -> Self {
        Self { c0, c1 }
    }

    pub fn from_parts(re0: f64, im0: f64, re1: f64, im1: f64) -> Self {
        Self::new(C64::new(re0, im0), C64::new(re1, im1))
    }

    pub const fn up() -> Self {
        Self::new(ONE, ZERO)
    }

    pub const fn down() -> Self {
        Self::new(ZERO, ONE)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.c0 * k, self.c1 * k)
    }

    /// Multiplies by `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        self.scale(C64::from_polar(1.0, theta))
    }

    pub fn normalize(&self) -> Result<Self> {
        normalize(*self)
    }

    pub fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.c1.is_finite()
    }
}

/// `c0·1 + cx σ₁ + cy σ₂ + cz σ₃` with real coefficients, so Hermitian by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermitianObservable {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

impl HermitianObservable {
    pub const fn new(c0: f64, cx: f64, cy: f64, cz: f64) -> Self {
        Self { c0, cx, cy, cz }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub const fn sigma_x() -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0)
    }

    pub const fn sigma_y() -> Self {
        Self::new(0.0, 0.0, 1.0, 0.0)
    }

    pub const fn sigma_z() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    /// Traceless operator `v·σ`.
    pub const fn from_vector(v: [f64; 3]) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.cx, self.cy, self.cz]
    }

    /// Length of the traceless part `|c⃗|`.
    pub fn magnitude(&self) -> f64 {
        (self.cx * self.cx + self.cy * self.cy + self.cz * self.cz).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.c0 * k, self.cx * k, self.cy * k, self.cz * k)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.c0 + other.c0,
            self.cx + other.cx,
            self.cy + other.cy,
            self.cz + other.cz,
        )
    }

    pub fn matrix(&self) -> Matrix2 {
        Matrix2::new([
            [
                C64::new(self.c0 + self.cz, 0.0),
                C64::new(self.cx, -self.cy),
            ],
            [
                C64::new(self.cx, self.cy),
                C64::new(self.c0 - self.cz, 0.0),
            ],
        ])
    }

    pub fn apply(&self, s: &Spinor) -> Spinor {
        self.matrix().apply(s)
    }
}

/// Bloch vector `(⟨σ₁⟩, ⟨σ₂⟩, ⟨σ₃⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl BlochVector {
    pub const fn new(nx: f64, ny: f64, nz: f64) -> Self {
        Self { nx, ny, nz }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn norm(&self) -> f64 {
        (self.nx * self.nx + self.ny * self.ny + self.nz * self.nz).sqrt()
    }

    /// Polar angle from +z in `[0, π]`.
    pub fn polar(&self) -> f64 {
        self.nx.hypot(self.ny).atan2(self.nz)
    }

    /// Azimuth in `(-π, π]`.
    pub fn azimuth(&self) -> f64 {
        self.ny.atan2(self.nx)
    }

    /// Projector `(1 + n⃗·σ)/2`.
    pub fn projector(&self) -> HermitianObservable {
        HermitianObservable::new(0.5, 0.5 * self.nx, 0.5 * self.ny, 0.5 * self.nz)
    }
}

/// Dense complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub m: [[C64; 2]; 2],
}

impl Matrix2 {
    pub const fn new(m: [[C64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn apply(&self, s: &Spinor) -> Spinor {
        Spinor::new(
            self.m[0][0] * s.c0 + self.m[0][1] * s.c1,
            self.m[1][0] * s.c0 + self.m[1][1] * s.c1,
        )
    }

    pub fn mul(&self, other: &Matrix2) -> Matrix2 {
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = self.m[i][0] * other.m[0][j] + self.m[i][1] * other.m[1][j];
            }
        }
        Matrix2::new(out)
    }

    pub fn add(&self, other: &Matrix2) -> Matrix2 {
        let mut out = self.m;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot += other.m[i][j];
            }
        }
        Matrix2::new(out)
    }

    pub fn scale(&self, k: C64) -> Matrix2 {
        let mut out = self.m;
        out.iter_mut().flatten().for_each(|z| *z *= k);
        Matrix2::new(out)
    }

    pub fn adjoint(&self) -> Matrix2 {
        Matrix2::new([
            [self.m[0][0].conj(), self.m[1][0].conj()],
            [self.m[0][1].conj(), self.m[1][1].conj()],
        ])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Matrix2) -> f64 {
        self.add(&other.scale(-ONE)).frobenius_norm()
    }

    /// `‖U†U − 1‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).distance(&Matrix2::identity())
    }
}

/// Rescales to unit norm. The ray (and the phase) of the input is kept.
pub fn normalize(s: Spinor) -> Result<Spinor> {
    let n = s.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroSpinor);
    }
    Ok(s.scale(C64::new(1.0 / n, 0.0)))
}

/// `⟨s|O|s⟩ = c0 + n⃗·c⃗` for a unit-norm `s`.
pub fn expectation(s: &Spinor, o: &HermitianObservable) -> f64 {
    let n = bloch(s);
    o.c0 * s.norm_sqr() + n.nx * o.cx + n.ny * o.cy + n.nz * o.cz
}

pub fn bloch(s: &Spinor) -> BlochVector {
    let cross = s.c0.conj() * s.c1;
    BlochVector::new(
        2.0 * cross.re,
        2.0 * cross.im,
        s.c0.norm_sqr() - s.c1.norm_sqr(),
    )
}

/// `exp(-iθ(c0·1 + c⃗·σ))` via the Euler identity for Pauli vectors.
pub fn exp_unitary(o: &HermitianObservable, theta: f64) -> Matrix2 {
    let mag = o.magnitude();
    let angle = theta * mag;
    let (sin, cos) = angle.sin_cos();
    let global = C64::from_polar(1.0, -theta * o.c0);
    let rot = if mag > 0.0 {
        let [ux, uy, uz] = o.vector().map(|c| c / mag);
        let s = -I * sin;
        Matrix2::new([
            [cos + s * uz, s * C64::new(ux, -uy)],
            [s * C64::new(ux, uy), cos - s * uz],
        ])
    } else {
        Matrix2::identity()
    };
    rot.scale(global)
}

/// `⟨a|b⟩`.
pub fn overlap(a: &Spinor, b: &Spinor) -> C64 {
    a.c0.conj() * b.c0 + a.c1.conj() * b.c1
}
