//! Reaction terms `(f₁, f₂)`.
//!
//! The two Lotka-Volterra kinds derive their structural constants
//! (`k`, `r`, `Θ(K)` and the Lipschitz bound on a box) analytically. Custom
//! models supply them and are checked by sampling before use.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GrowthError {
    #[error("model parameter `{name}` must be {rule}, got {value}")]
    BadParameter {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    #[error("growth contract violated: {0}")]
    Contract(String),
}

/// Lotka-Volterra coefficients shared by the competition and predator-prey kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvParams {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
}

impl LvParams {
    pub fn new(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Self {
        LvParams {
            a1: a.0,
            b1: b.0,
            c1: c.0,
            a2: a.1,
            b2: b.1,
            c2: c.1,
        }
    }

    fn validate(&self) -> Result<(), GrowthError> {
        let positive = [("a1", self.a1), ("b1", self.b1), ("a2", self.a2), ("b2", self.b2)];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GrowthError::BadParameter {
                    name,
                    rule: "positive",
                    value,
                });
            }
        }
        // Zero interaction is allowed: it decouples the species.
        for (name, value) in [("c1", self.c1), ("c2", self.c2)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(GrowthError::BadParameter {
                    name,
                    rule: "nonnegative",
                    value,
                });
            }
        }
        Ok(())
    }
}

pub type RateFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;
pub type ThetaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type LipschitzFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied reaction pair together with its structural constants.
#[derive(Clone)]
pub struct CustomGrowth {
    pub rates: RateFn,
    pub k: f64,
    pub r: f64,
    pub theta: ThetaFn,
    pub lipschitz: LipschitzFn,
}

#[derive(Clone)]
pub enum GrowthModel {
    /// `f₁ = u₁(a₁ − b₁u₁ − c₁u₂)`, `f₂ = u₂(a₂ − b₂u₂ − c₂u₁)`.
    Competition(LvParams),
    /// `f₁ = u₁(a₁ − b₁u₁ − c₁u₂)`, `f₂ = u₂(a₂ − b₂u₂ + c₂u₁)`.
    PredatorPrey(LvParams),
    Custom(CustomGrowth),
}

impl fmt::Debug for GrowthModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthModel::Competition(p) => f.debug_tuple("Competition").field(p).finish(),
            GrowthModel::PredatorPrey(p) => f.debug_tuple("PredatorPrey").field(p).finish(),
            GrowthModel::Custom(c) => f
                .debug_struct("Custom")
                .field("k", &c.k)
                .field("r", &c.r)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    WeakCompetition,
    WeakPredation,
    Other,
}

impl GrowthModel {
    pub fn competition(p: LvParams) -> Result<Self, GrowthError> {
        p.validate()?;
        Ok(GrowthModel::Competition(p))
    }

    pub fn predator_prey(p: LvParams) -> Result<Self, GrowthError> {
        p.validate()?;
        Ok(GrowthModel::PredatorPrey(p))
    }

    /// Wraps a custom model after sampling its contract on `[0, 2K]²`
    /// where `K` is the larger of `k` and `Θ(k)`.
    pub fn custom(c: CustomGrowth) -> Result<Self, GrowthError> {
        let model = GrowthModel::Custom(c);
        let k = model.k();
        let big = 2.0 * k.max(model.theta(k));
        model.check_contract(big, big, 41)?;
        Ok(model)
    }

    pub fn params(&self) -> Option<&LvParams> {
        match self {
            GrowthModel::Competition(p) | GrowthModel::PredatorPrey(p) => Some(p),
            GrowthModel::Custom(_) => None,
        }
    }

    /// Pointwise `(f₁(u₁,u₂), f₂(u₁,u₂))`.
    #[inline]
    pub fn react(&self, u1: f64, u2: f64) -> (f64, f64) {
        debug_assert!(u1 >= 0.0 && u2 >= 0.0, "negative density ({u1}, {u2})");
        match self {
            GrowthModel::Competition(p) => (u1 * (p.a1 - p.b1 * u1 - p.c1 * u2), u2 * (p.a2 - p.b2 * u2 - p.c2 * u1)),
            GrowthModel::PredatorPrey(p) => (u1 * (p.a1 - p.b1 * u1 - p.c1 * u2), u2 * (p.a2 - p.b2 * u2 + p.c2 * u1)),
            GrowthModel::Custom(c) => (c.rates)(u1, u2),
        }
    }

    /// Carrying bound `k`: `f₁ < 0` whenever `u₁ > k`.
    pub fn k(&self) -> f64 {
        match self {
            GrowthModel::Competition(p) | GrowthModel::PredatorPrey(p) => p.a1 / p.b1,
            GrowthModel::Custom(c) => c.k,
        }
    }

    /// Linear growth bound `r`: `f₁ ≤ r·u₁` for `0 < u₁ ≤ k`.
    pub fn r(&self) -> f64 {
        match self {
            GrowthModel::Competition(p) | GrowthModel::PredatorPrey(p) => p.a1,
            GrowthModel::Custom(c) => c.r,
        }
    }

    /// `Θ(K)`: `f₂ < 0` whenever `u₂ > Θ(K)` and `0 ≤ u₁ ≤ K`.
    pub fn theta(&self, big_k: f64) -> f64 {
        match self {
            GrowthModel::Competition(p) => p.a2 / p.b2,
            GrowthModel::PredatorPrey(p) => (p.a2 + p.c2 * big_k) / p.b2,
            GrowthModel::Custom(c) => (c.theta)(big_k),
        }
    }

    /// Bounds `(A₁, A₂)` on the solution given the sup of the initial data.
    pub fn a_priori_bounds(&self, u10_max: f64, u20_max: f64) -> (f64, f64) {
        let a1 = u10_max.max(self.k());
        let a2 = u20_max.max(self.theta(a1));
        (a1, a2)
    }

    /// Lipschitz constant of `(f₁, f₂)` on `[0,K₁]×[0,K₂]` in the sense
    /// `|fᵢ(u) − fᵢ(v)| ≤ L·(|u₁−v₁| + |u₂−v₂|)`.
    pub fn lipschitz_constant(&self, k1: f64, k2: f64) -> f64 {
        match self {
            GrowthModel::Competition(p) | GrowthModel::PredatorPrey(p) => {
                let d11 = p.a1 + 2.0 * p.b1 * k1 + p.c1 * k2;
                let d12 = p.c1 * k1;
                let d22 = p.a2 + 2.0 * p.b2 * k2 + p.c2 * k1;
                let d21 = p.c2 * k2;
                d11.max(d12).max(d22).max(d21)
            }
            GrowthModel::Custom(c) => (c.lipschitz)(k1, k2),
        }
    }

    pub fn regime(&self) -> Regime {
        match self {
            // b₁/c₂ > a₁/a₂ > c₁/b₂, cross-multiplied so c = 0 is allowed.
            GrowthModel::Competition(p) => {
                if p.b1 * p.a2 > p.a1 * p.c2 && p.a1 * p.b2 > p.a2 * p.c1 {
                    Regime::WeakCompetition
                } else {
                    Regime::Other
                }
            }
            GrowthModel::PredatorPrey(p) => {
                if p.a1 * p.b1 * p.b2 > p.a2 * p.b1 * p.c1 + p.a1 * p.c1 * p.c2 {
                    Regime::WeakPredation
                } else {
                    Regime::Other
                }
            }
            GrowthModel::Custom(_) => Regime::Other,
        }
    }

    pub fn regime_note(&self) -> Option<&'static str> {
        match self {
            GrowthModel::Custom(_) => Some("custom growth terms are not classified; long-time limits are unavailable"),
            _ => None,
        }
    }

    /// Samples the structural contract on a `samples × samples` lattice of
    /// `[0,K₁]×[0,K₂]` (plus points beyond `k` and `Θ(K₁)`).
    pub fn check_contract(&self, k1: f64, k2: f64, samples: usize) -> Result<(), GrowthError> {
        let n = samples.max(2);
        let k = self.k();
        let r = self.r();
        let th = self.theta(k1);
        let lat = |big: f64, i: usize| big * i as f64 / (n - 1) as f64;
        for i in 0..n {
            let s = lat(k1.max(k2), i);
            if self.react(0.0, s).0 != 0.0 {
                return Err(GrowthError::Contract(format!("f1(0, {s}) != 0")));
            }
            if self.react(s, 0.0).1 != 0.0 {
                return Err(GrowthError::Contract(format!("f2({s}, 0) != 0")));
            }
        }
        for i in 1..n {
            for j in 0..n {
                let u2 = lat(k2, j);
                let below = lat(k, i);
                let f1 = self.react(below, u2).0;
                if f1 > r * below * (1.0 + 1e-12) {
                    return Err(GrowthError::Contract(format!("f1({below}, {u2}) = {f1} exceeds r*u1")));
                }
                let above = k * (1.0 + i as f64 / (n - 1) as f64);
                let f1 = self.react(above, u2).0;
                if f1 >= 0.0 {
                    return Err(GrowthError::Contract(format!(
                        "f1({above}, {u2}) = {f1} is not negative above k"
                    )));
                }
                let u1 = lat(k1, j);
                let over = th * (1.0 + i as f64 / (n - 1) as f64);
                let f2 = self.react(u1, over).1;
                if f2 >= 0.0 {
                    return Err(GrowthError::Contract(format!(
                        "f2({u1}, {over}) = {f2} is not negative above Θ"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp() -> GrowthModel {
        GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), (0.5, 0.5))).unwrap()
    }

    fn pp() -> GrowthModel {
        GrowthModel::predator_prey(LvParams::new((1.0, 0.5), (1.0, 1.0), (0.5, 0.25))).unwrap()
    }

    #[test]
    fn react_examples() {
        let (f1, f2) = comp().react(0.0, 0.7);
        assert_eq!(f1, 0.0);
        assert!((f2 - 0.21).abs() < 1e-15);
        assert_eq!(comp().react(1.0, 0.0), (0.0, 0.0));
        // Independent evaluation of the predator-prey pair.
        let (u1, u2) = (0.5, 0.5);
        let e1 = u1 * (1.0 - 1.0 * u1 - 0.5 * u2);
        let e2 = u2 * (0.5 - 1.0 * u2 + 0.25 * u1);
        assert_eq!(pp().react(u1, u2), (e1, e2));
        assert!((e1 - 0.125).abs() < 1e-15 && (e2 - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(comp().a_priori_bounds(0.8, 0.8), (1.0, 1.0));
        assert_eq!(pp().a_priori_bounds(0.8, 0.8), (1.0, 0.8));
        assert_eq!(comp().a_priori_bounds(10.0, 10.0), (10.0, 10.0));
        assert!((pp().theta(1.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(comp().lipschitz_constant(1.0, 1.0), 3.5);
        let origin = comp().lipschitz_constant(0.0, 0.0);
        assert!(origin.is_finite() && origin == 1.0);
        assert!(comp().lipschitz_constant(2.0, 1.0) >= comp().lipschitz_constant(1.0, 1.0));
    }

    #[test]
    fn lipschitz_matches_brute_force() {
        // Maximum partial-derivative magnitude over the box by sampling; the
        // analytic bound must dominate it.
        let m = comp();
        let p = *m.params().unwrap();
        let mut worst: f64 = 0.0;
        let n = 101;
        for i in 0..n {
            for j in 0..n {
                let u1 = i as f64 / (n - 1) as f64;
                let u2 = j as f64 / (n - 1) as f64;
                let partials = [
                    p.a1 - 2.0 * p.b1 * u1 - p.c1 * u2,
                    p.c1 * u1,
                    p.a2 - 2.0 * p.b2 * u2 - p.c2 * u1,
                    p.c2 * u2,
                ];
                for d in partials {
                    worst = worst.max(d.abs());
                }
            }
        }
        assert!(worst <= m.lipschitz_constant(1.0, 1.0));
    }

    #[test]
    fn regimes() {
        assert_eq!(comp().regime(), Regime::WeakCompetition);
        assert_eq!(pp().regime(), Regime::WeakPredation);
        let strong = GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), (2.0, 2.0))).unwrap();
        assert_eq!(strong.regime(), Regime::Other);
        let decoupled = GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), (0.0, 0.0))).unwrap();
        assert_eq!(decoupled.regime(), Regime::WeakCompetition);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = LvParams::new((1.0, 1.0), (-1.0, 1.0), (0.5, 0.5));
        assert!(matches!(
            GrowthModel::competition(bad),
            Err(GrowthError::BadParameter { name: "b1", .. })
        ));
        let neg_c = LvParams::new((1.0, 1.0), (1.0, 1.0), (0.5, -0.1));
        assert!(GrowthModel::predator_prey(neg_c).is_err());
    }

    #[test]
    fn contract_holds_for_lv() {
        comp().check_contract(1.0, 1.0, 21).unwrap();
        pp().check_contract(1.0, 0.8, 21).unwrap();
    }

    #[test]
    fn custom_contract() {
        // Logistic pair written out by hand satisfies the contract.
        let good = CustomGrowth {
            rates: Arc::new(|u1, u2| (u1 * (1.0 - u1), u2 * (1.0 - u2))),
            k: 1.0,
            r: 1.0,
            theta: Arc::new(|_| 1.0),
            lipschitz: Arc::new(|k1, k2| 1.0 + 2.0 * k1.max(k2)),
        };
        let m = GrowthModel::custom(good.clone()).unwrap();
        assert_eq!(m.regime(), Regime::Other);
        assert!(m.regime_note().is_some());
        // Same rates but a claimed k that is too small.
        let bad = CustomGrowth { k: 0.5, ..good };
        assert!(matches!(GrowthModel::custom(bad), Err(GrowthError::Contract(_))));
    }
}
