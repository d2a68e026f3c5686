//! Shifted-window Lyapunov bookkeeping.
//!
//! Over a window of the last `τ` estimator norms the state maintains
//!
//! - `U_k = Σ_{j=1..τ} ‖g_{k−j}‖²`
//! - `W_k = Σ_{j=1..τ} (τ−j+1)·‖g_{k−j}‖²`
//! - `V_k = r_k + L·α²·W_k`
//!
//! Only squared norms are retained (a scalar ring buffer of length `τ`), and
//! both sums advance in O(1) per push via `W ← W − U + τ‖g‖²`, which is an
//! exact identity even while the window is still filling: the oldest entry
//! carries weight 1 in `W` and weight 1 in `U`, so it leaves the weighted sum
//! automatically.

use crate::error::Error;
use crate::Result;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LyapunovState {
    tau: usize,
    alpha: f64,
    smoothness: f64,
    window: VecDeque<f64>,
    u: f64,
    w: f64,
}

impl LyapunovState {
    pub fn new(tau: usize, alpha: f64, smoothness: f64) -> Self {
        assert!(tau >= 1, "window length must be at least 1");
        Self {
            tau,
            alpha,
            smoothness,
            window: VecDeque::with_capacity(tau),
            u: 0.0,
            w: 0.0,
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// True once `τ` gradients have been pushed, i.e. the window quantities
    /// cover a full window rather than a prefix.
    pub fn is_full(&self) -> bool {
        self.window.len() == self.tau
    }

    /// `V = r + L·α²·W` for a caller-supplied sub-optimality `r`.
    pub fn v(&self, r: f64) -> f64 {
        r + self.smoothness * self.alpha * self.alpha * self.w
    }

    /// Advance the window by one estimator norm.
    pub fn push_gradient(&mut self, g_norm_sq: f64) -> Result<()> {
        if g_norm_sq.is_nan() || g_norm_sq < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "squared norm {g_norm_sq} must be nonnegative"
            )));
        }
        self.w += self.tau as f64 * g_norm_sq - self.u;
        self.u += g_norm_sq;
        if self.window.len() == self.tau {
            let dropped = self.window.pop_front().expect("window nonempty");
            self.u -= dropped;
        }
        self.window.push_back(g_norm_sq);
        Ok(())
    }

    /// Direct-summation oracle for `(U, W)` from the ring buffer contents.
    pub fn recompute(&self) -> (f64, f64) {
        let m = self.window.len();
        let mut u = 0.0;
        let mut w = 0.0;
        // window[m-1] is g_{k-1} (weight τ), window[0] is g_{k-m} (weight τ-m+1).
        for (idx, g) in self.window.iter().enumerate() {
            let j = m - idx;
            u += g;
            w += (self.tau - j + 1) as f64 * g;
        }
        (u, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn hand_checked_push_identity() {
        // τ = 2, history (a, b) = (1, 2): U = 3, W = 2·2 + 1·1 = 5.
        // Pushing c = 3 gives W = 2·3 + 1·2 = 8 = W − U + τc = 5 − 3 + 6.
        let mut s = LyapunovState::new(2, 0.1, 1.0);
        s.push_gradient(1.0).unwrap();
        s.push_gradient(2.0).unwrap();
        assert_eq!(s.u(), 3.0);
        assert_eq!(s.w(), 5.0);
        s.push_gradient(3.0).unwrap();
        assert_eq!(s.u(), 5.0);
        assert_eq!(s.w(), 8.0);
    }

    #[test]
    fn zero_history_gives_v_equal_r() {
        let mut s = LyapunovState::new(4, 0.25, 2.0);
        for _ in 0..6 {
            s.push_gradient(0.0).unwrap();
        }
        assert_eq!(s.u(), 0.0);
        assert_eq!(s.w(), 0.0);
        assert_eq!(s.v(1.25), 1.25);
    }

    #[test]
    fn negative_input_rejected() {
        let mut s = LyapunovState::new(2, 0.1, 1.0);
        assert!(matches!(
            s.push_gradient(-1e-9),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn incremental_matches_direct_summation_under_fuzz() {
        let mut rng = crate::rng::seeded_rng(2024);
        let mut s = LyapunovState::new(37, 0.01, 3.0);
        for step in 0..10_000 {
            s.push_gradient(rng.random_range(0.0..10.0)).unwrap();
            let (u, w) = s.recompute();
            assert!(
                (u - s.u()).abs() <= 1e-9 * u.max(1.0),
                "step {step}: U {} vs {u}",
                s.u()
            );
            assert!(
                (w - s.w()).abs() <= 1e-9 * w.max(1.0),
                "step {step}: W {} vs {w}",
                s.w()
            );
            // Window inequality: W ≤ τ·U.
            assert!(
                s.w() <= 37.0 * s.u() + 1e-10 * s.u().max(1.0),
                "step {step}"
            );
        }
    }

    #[test]
    fn fact_one_holds_during_and_after_fill() {
        let mut rng = crate::rng::seeded_rng(5);
        let tau = 5usize;
        let mut s = LyapunovState::new(tau, 0.1, 1.0);
        for step in 0..200 {
            let (w_prev, u_prev) = (s.w(), s.u());
            let g = rng.random_range(0.0..4.0);
            s.push_gradient(g).unwrap();
            let expected = w_prev - u_prev + tau as f64 * g;
            assert!(
                (s.w() - expected).abs() <= 1e-10 * expected.abs().max(1.0),
                "step {step}"
            );
        }
    }
}
