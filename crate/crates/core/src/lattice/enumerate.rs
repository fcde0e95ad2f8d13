//! Schnorr–Euchner enumeration of lattice vectors inside a Euclidean ball.

use crate::error::{Error, Result};

use super::reduce::Gso;

/// Relative slack on the squared radius so boundary points are never lost to rounding.
const RADIUS_SLACK: f64 = 1e-10;

/// What to do after a visited vector.
pub(crate) enum Visit {
    Continue,
    /// Continue with a new squared radius.
    Shrink(f64),
    Stop,
}

pub(crate) struct Enumerator<'a, F> {
    gso: &'a Gso,
    r2: f64,
    /// Enumerate only vectors with some nonzero coefficient at index `>= tail_from`.
    tail_from: usize,
    coeffs: Vec<i64>,
    nodes: u64,
    budget: u64,
    visit: F,
    stopped: bool,
}

impl<'a, F> Enumerator<'a, F>
where
    F: FnMut(&[i64]) -> Visit,
{
    pub fn new(gso: &'a Gso, r2: f64, tail_from: usize, budget: u64, visit: F) -> Self {
        let k = gso.bstar_sq.len();
        Enumerator {
            gso,
            r2,
            tail_from,
            coeffs: vec![0; k],
            nodes: 0,
            budget,
            visit,
            stopped: false,
        }
    }

    /// Runs the enumeration; returns the number of tree nodes visited.
    pub fn run(mut self) -> Result<u64> {
        let k = self.coeffs.len();
        if k > 0 {
            self.level(k - 1, 0.0)?;
        }
        Ok(self.nodes)
    }

    fn bound(&self) -> f64 {
        self.r2 * (1.0 + RADIUS_SLACK) + 1e-300
    }

    fn level(&mut self, j: usize, partial: f64) -> Result<()> {
        let k = self.coeffs.len();
        let center: f64 = -((j + 1)..k)
            .map(|l| self.coeffs[l] as f64 * self.gso.mu[l][j])
            .sum::<f64>();
        let bj = self.gso.bstar_sq[j];
        let x0 = center.round();
        // zig-zag: x0, x0+1, x0-1, x0+2, ... with independent cut-offs per side
        let mut up_open = true;
        let mut down_open = true;
        let mut step: i64 = 0;
        while up_open || down_open {
            for side in [1i64, -1] {
                if step == 0 && side == -1 {
                    continue;
                }
                let open = if side == 1 { up_open } else { down_open };
                if !open {
                    continue;
                }
                let x = x0 + (side * step) as f64;
                let y = x - center;
                let p = partial + y * y * bj;
                if p > self.bound() {
                    if side == 1 {
                        up_open = false;
                    } else {
                        down_open = false;
                    }
                    if step == 0 {
                        down_open = false;
                    }
                    continue;
                }
                self.nodes += 1;
                if self.nodes > self.budget {
                    return Err(Error::budget(
                        "lattice enumeration",
                        format!("node budget {} exhausted", self.budget),
                    ));
                }
                if x.abs() > 9.0e15 {
                    return Err(Error::Overflow("enumeration coefficient".into()));
                }
                self.coeffs[j] = x as i64;
                if j == 0 {
                    if self.coeffs.iter().any(|&c| c != 0) {
                        match (self.visit)(&self.coeffs) {
                            Visit::Continue => {}
                            Visit::Shrink(r2) => self.r2 = r2,
                            Visit::Stop => self.stopped = true,
                        }
                    }
                } else if !(j == self.tail_from && self.coeffs[j..].iter().all(|&c| c == 0)) {
                    self.level(j - 1, p)?;
                }
                if self.stopped {
                    self.coeffs[j] = 0;
                    return Ok(());
                }
            }
            step += 1;
            if bj <= 0.0 {
                return Err(Error::Singular("zero Gram–Schmidt norm in enumeration".into()));
            }
        }
        self.coeffs[j] = 0;
        Ok(())
    }
}
