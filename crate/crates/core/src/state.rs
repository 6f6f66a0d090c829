//! Fixed-capacity state vector used by every stepper.
//!
//! The Monte Carlo inner loops evaluate the vector field millions of times, so
//! states live on the stack instead of in a heap-allocated vector.

use std::fmt;
use std::ops::{Add, Deref, DerefMut, Mul, Sub};

/// Largest supported state dimension.
pub const MAX_DIM: usize = 6;

#[derive(Clone, Copy, PartialEq)]
pub struct State {
    len: usize,
    data: [f64; MAX_DIM],
}

impl State {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DIM, "state dimension {len} exceeds {MAX_DIM}");
        State {
            len,
            data: [0.0; MAX_DIM],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut s = State::zeros(values.len());
        s.data[..values.len()].copy_from_slice(values);
        s
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }

    pub fn dot(&self, other: &State) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_inf(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &State) -> State {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for (o, v) in out.iter_mut().zip(other.iter()) {
            *o += alpha * v;
        }
        out
    }

    pub fn midpoint(&self, other: &State) -> State {
        let mut out = *self;
        for (o, v) in out.iter_mut().zip(other.iter()) {
            *o = 0.5 * (*o + v);
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> State {
        let mut out = *self;
        for o in out.iter_mut() {
            *o = f(*o);
        }
        out
    }
}

impl Deref for State {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        self.as_slice()
    }
}

impl DerefMut for State {
    fn deref_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl From<&[f64]> for State {
    fn from(values: &[f64]) -> Self {
        State::from_slice(values)
    }
}

impl<const N: usize> From<[f64; N]> for State {
    fn from(values: [f64; N]) -> Self {
        State::from_slice(&values)
    }
}

impl Add for State {
    type Output = State;

    fn add(self, rhs: State) -> State {
        self.axpy(1.0, &rhs)
    }
}

impl Sub for State {
    type Output = State;

    fn sub(self, rhs: State) -> State {
        self.axpy(-1.0, &rhs)
    }
}

impl Mul<f64> for State {
    type Output = State;

    fn mul(self, rhs: f64) -> State {
        self.map(|v| v * rhs)
    }
}
