//! Model specification: the mixture polynomial `nu`, the confinement
//! potential and the parameter set shared by every solver.
//!
//! The mixture is `nu(x) = sum_p a_p^2 / p! * x^p` for `p = 1..=m`. All of its
//! coefficients are non-negative, so `nu`, its derivatives and
//! `psi(x) = nu'(x) + x nu''(x)` are non-negative on `x >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Coefficients `a_p`, `p = 1..=m`, of the disorder polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    a: Vec<f64>,
    /// `nu_coef[p] = a_p^2 / p!`, index 0 is the (zero) constant term.
    nu_coef: Vec<f64>,
}

/// Derivative order for [`MixtureSpec::nu`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

impl MixtureSpec {
    /// Builds a mixture from `a_1, ..., a_m`. Requires `m >= 2`.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(invalid(
                "mixture",
                format!("need m >= 2 coefficients, got {}", a.len()),
            ));
        }
        if let Some(bad) = a.iter().find(|x| !x.is_finite()) {
            return Err(invalid("mixture", format!("non-finite coefficient {bad}")));
        }
        let mut nu_coef = vec![0.0; a.len() + 1];
        let mut factorial = 1.0;
        for (idx, ap) in a.iter().enumerate() {
            let p = idx + 1;
            factorial *= p as f64;
            nu_coef[p] = ap * ap / factorial;
        }
        Ok(Self { a, nu_coef })
    }

    /// Pure p-spin mixture with `a_p = coefficient` and all other `a` zero.
    pub fn pure(p: usize, coefficient: f64) -> Result<Self> {
        if p < 2 {
            return Err(invalid("mixture", "pure p-spin needs p >= 2"));
        }
        let mut a = vec![0.0; p];
        a[p - 1] = coefficient;
        Self::new(a)
    }

    /// Coefficients `a_1..=a_m`.
    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    /// Maximum degree `m`.
    pub fn degree(&self) -> usize {
        self.a.len()
    }

    /// `a_p` for `1 <= p <= m`, zero otherwise.
    pub fn a(&self, p: usize) -> f64 {
        if p == 0 || p > self.a.len() {
            0.0
        } else {
            self.a[p - 1]
        }
    }

    /// Random-field strength `nu'(0) = a_1^2`.
    pub fn random_field(&self) -> f64 {
        self.nu_coef[1]
    }

    /// Polynomial coefficients of `nu`, constant term first.
    pub fn nu_coefficients(&self) -> &[f64] {
        &self.nu_coef
    }

    /// `nu(x)`, `nu'(x)` or `nu''(x)` by Horner evaluation.
    pub fn nu(&self, x: f64, order: Order) -> f64 {
        match order {
            Order::Value => self.nu0(x),
            Order::First => self.nu1(x),
            Order::Second => self.nu2(x),
        }
    }

    #[inline]
    pub fn nu0(&self, x: f64) -> f64 {
        self.nu_coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    #[inline]
    pub fn nu1(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in (1..self.nu_coef.len()).rev() {
            acc = acc * x + p as f64 * self.nu_coef[p];
        }
        acc
    }

    #[inline]
    pub fn nu2(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in (2..self.nu_coef.len()).rev() {
            acc = acc * x + (p * (p - 1)) as f64 * self.nu_coef[p];
        }
        acc
    }

    /// `psi(x) = nu'(x) + x nu''(x)`.
    #[inline]
    pub fn psi(&self, x: f64) -> f64 {
        self.nu1(x) + x * self.nu2(x)
    }

    /// The leading monomial `a_m^2 / m! x^m` as a pure mixture.
    pub fn leading_pure(&self) -> Self {
        let m = self.degree();
        let mut a = vec![0.0; m];
        a[m - 1] = self.a[m - 1];
        Self::new(a).expect("degree >= 2 is preserved")
    }
}

/// Confinement of the radial degree of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConfinementSpec {
    /// Exact constraint `|x|^2 = rN`, enforced by the multiplier `mu(s)`.
    Hard { r: f64, k: f64 },
    /// `f(x) = L (x - r)^2 + (x/r)^(2k) / (4k) + alpha h x / r`.
    Soft {
        l: f64,
        r: f64,
        k_exp: u32,
        alpha: f64,
        h: f64,
    },
    /// User supplied `f(x) = sum_j c_j x^j`.
    Polynomial { coefficients: Vec<f64> },
}

impl ConfinementSpec {
    pub fn is_hard(&self) -> bool {
        matches!(self, ConfinementSpec::Hard { .. })
    }

    /// `f(x)` (`order = 0`) or `f'(x)` (`order = 1`).
    pub fn f_eval(&self, x: f64, order: u8) -> Result<f64> {
        match order {
            0 => self.f(x),
            1 => self.df(x),
            2 => self.d2f(x),
            _ => Err(invalid("order", format!("unsupported derivative order {order}"))),
        }
    }

    pub fn f(&self, x: f64) -> Result<f64> {
        match self {
            ConfinementSpec::Hard { .. } => Err(Error::NoPotential),
            ConfinementSpec::Soft {
                l,
                r,
                k_exp,
                alpha,
                h,
            } => {
                let k = *k_exp as f64;
                Ok(l * (x - r).powi(2)
                    + (x / r).powi(2 * *k_exp as i32) / (4.0 * k)
                    + alpha * h * x / r)
            }
            ConfinementSpec::Polynomial { coefficients } => {
                Ok(coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c))
            }
        }
    }

    pub fn df(&self, x: f64) -> Result<f64> {
        match self {
            ConfinementSpec::Hard { .. } => Err(Error::NoPotential),
            ConfinementSpec::Soft {
                l,
                r,
                k_exp,
                alpha,
                h,
            } => Ok(2.0 * l * (x - r)
                + (x / r).powi(2 * *k_exp as i32 - 1) / (2.0 * r)
                + alpha * h / r),
            ConfinementSpec::Polynomial { coefficients } => {
                let mut acc = 0.0;
                for j in (1..coefficients.len()).rev() {
                    acc = acc * x + j as f64 * coefficients[j];
                }
                Ok(acc)
            }
        }
    }

    pub fn d2f(&self, x: f64) -> Result<f64> {
        match self {
            ConfinementSpec::Hard { .. } => Err(Error::NoPotential),
            ConfinementSpec::Soft { l, r, k_exp, .. } => {
                let k = *k_exp as i32;
                Ok(2.0 * l + (2 * k - 1) as f64 / (2.0 * r * r) * (x / r).powi(2 * k - 2))
            }
            ConfinementSpec::Polynomial { coefficients } => {
                let mut acc = 0.0;
                for j in (2..coefficients.len()).rev() {
                    acc = acc * x + (j * (j - 1)) as f64 * coefficients[j];
                }
                Ok(acc)
            }
        }
    }
}

/// Parameters of one run of the limiting dynamics.
///
/// `h` is the field that enters the equations (the `h_r` of the hard
/// system); `alpha` fixes `M(0) = alpha sqrt(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub h: f64,
    pub r: f64,
    pub alpha: f64,
    pub mixture: MixtureSpec,
    pub confinement: ConfinementSpec,
}

impl ModelParams {
    /// Hard spherical constraint with constraint constant `k`.
    pub fn hard(beta: f64, h: f64, r: f64, alpha: f64, k: f64, mixture: MixtureSpec) -> Result<Self> {
        let p = Self {
            beta,
            h,
            r,
            alpha,
            mixture,
            confinement: ConfinementSpec::Hard { r, k },
        };
        p.validate()?;
        Ok(p)
    }

    /// Soft constraint `f_{L,r}` with exponent `k_exp`.
    pub fn soft(
        beta: f64,
        h: f64,
        r: f64,
        alpha: f64,
        l: f64,
        k_exp: u32,
        mixture: MixtureSpec,
    ) -> Result<Self> {
        let p = Self {
            beta,
            h,
            r,
            alpha,
            mixture,
            confinement: ConfinementSpec::Soft {
                l,
                r,
                k_exp,
                alpha,
                h,
            },
        };
        p.validate()?;
        Ok(p)
    }

    /// Soft constraint with a user polynomial potential.
    pub fn polynomial(
        beta: f64,
        h: f64,
        r: f64,
        alpha: f64,
        coefficients: Vec<f64>,
        mixture: MixtureSpec,
    ) -> Result<Self> {
        let p = Self {
            beta,
            h,
            r,
            alpha,
            mixture,
            confinement: ConfinementSpec::Polynomial { coefficients },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid("beta", format!("must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.h.is_finite() && self.h >= 0.0) {
            return Err(invalid("h", format!("must be finite and >= 0, got {}", self.h)));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(invalid("r", format!("must be positive, got {}", self.r)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        match &self.confinement {
            ConfinementSpec::Hard { r, k } => {
                if *r != self.r {
                    return Err(invalid("r", "hard confinement radius differs from model r"));
                }
                if !(k.is_finite() && *k >= 0.0) {
                    return Err(invalid("k", format!("must be finite and >= 0, got {k}")));
                }
            }
            ConfinementSpec::Soft {
                l,
                r,
                k_exp,
                alpha,
                h,
            } => {
                if *r != self.r || *alpha != self.alpha || *h != self.h {
                    return Err(invalid(
                        "confinement",
                        "soft potential must share r, alpha and h with the model",
                    ));
                }
                if !(l.is_finite() && *l >= 0.0) {
                    return Err(invalid("L", format!("must be finite and >= 0, got {l}")));
                }
                let m = self.mixture.degree() as f64;
                if (*k_exp as f64) <= m / 4.0 {
                    return Err(invalid(
                        "k_exp",
                        format!("must exceed m/4 = {}, got {k_exp}", m / 4.0),
                    ));
                }
            }
            ConfinementSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("confinement", "polynomial needs finite coefficients"));
                }
            }
        }
        Ok(())
    }

    /// `M(0) = alpha sqrt(r)`.
    pub fn initial_magnetization(&self) -> f64 {
        self.alpha * self.r.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_three() -> MixtureSpec {
        MixtureSpec::new(vec![0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn pure_two_spin_values() {
        let mix = MixtureSpec::pure(2, 1.0).unwrap();
        assert_eq!(mix.nu(1.0, Order::Value), 0.5);
        assert_eq!(mix.nu(0.7, Order::Second), 1.0);
        assert_eq!(mix.psi(1.0), 2.0);
    }

    #[test]
    fn mixed_first_derivative() {
        // nu = x^2/2 + x^3/6, nu' = x + x^2/2
        assert_relative_eq!(two_three().nu(1.0, Order::First), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn psi_mixed_by_polynomial_arithmetic() {
        // psi = (x + x^2/2) + x (1 + x) = 2x + 1.5 x^2
        let x = 0.5;
        assert_relative_eq!(two_three().psi(x), 2.0 * x + 1.5 * x * x, epsilon = 1e-15);
    }

    #[test]
    fn psi_at_zero_is_random_field() {
        let mix = MixtureSpec::new(vec![0.3, 1.0, 0.5]).unwrap();
        assert_relative_eq!(mix.psi(0.0), 0.09, epsilon = 1e-15);
        assert_relative_eq!(mix.random_field(), 0.09, epsilon = 1e-15);
    }

    #[test]
    fn rejects_degree_one() {
        assert!(MixtureSpec::new(vec![1.0]).is_err());
        assert!(MixtureSpec::pure(1, 1.0).is_err());
    }

    #[test]
    fn soft_potential_examples() {
        let conf = ConfinementSpec::Soft {
            l: 10.0,
            r: 1.0,
            k_exp: 1,
            alpha: 0.0,
            h: 0.0,
        };
        assert_relative_eq!(conf.f_eval(1.0, 0).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(conf.f_eval(1.0, 1).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn soft_derivative_matches_finite_difference() {
        let conf = ConfinementSpec::Soft {
            l: 10.0,
            r: 2.0,
            k_exp: 2,
            alpha: 0.5,
            h: 1.0,
        };
        let step = 1e-6;
        let fd = (conf.f(2.0 + step).unwrap() - conf.f(2.0 - step).unwrap()) / (2.0 * step);
        let exact = conf.df(2.0).unwrap();
        assert!(((fd - exact) / exact).abs() <= 1e-6, "fd {fd} exact {exact}");
    }

    #[test]
    fn hard_has_no_potential() {
        let conf = ConfinementSpec::Hard { r: 1.0, k: 1.0 };
        assert!(matches!(conf.f_eval(1.0, 0), Err(Error::NoPotential)));
        assert!(matches!(conf.f_eval(1.0, 1), Err(Error::NoPotential)));
    }

    #[test]
    fn soft_exponent_must_exceed_quarter_degree() {
        let mix = MixtureSpec::new(vec![0.0; 4].into_iter().chain([1.0]).collect()).unwrap();
        assert!(ModelParams::soft(0.1, 0.0, 1.0, 0.0, 10.0, 1, mix.clone()).is_err());
        assert!(ModelParams::soft(0.1, 0.0, 1.0, 0.0, 10.0, 2, mix).is_ok());
    }

    #[test]
    fn polynomial_extension_point() {
        let conf = ConfinementSpec::Polynomial {
            coefficients: vec![0.0, 0.5, 2.0],
        };
        assert_relative_eq!(conf.f(2.0).unwrap(), 9.0);
        assert_relative_eq!(conf.df(2.0).unwrap(), 8.5);
        assert_relative_eq!(conf.d2f(2.0).unwrap(), 4.0);
    }

    proptest! {
        #[test]
        fn nu_family_nonnegative(a in proptest::collection::vec(-2.0f64..2.0, 2..6), x in 0.0f64..3.0) {
            let mix = MixtureSpec::new(a).unwrap();
            prop_assert!(mix.nu0(x) >= 0.0);
            prop_assert!(mix.nu1(x) >= 0.0);
            prop_assert!(mix.nu2(x) >= 0.0);
            prop_assert!(mix.psi(x) >= 0.0);
        }

        #[test]
        fn derivatives_match_centered_differences(a in proptest::collection::vec(-1.5f64..1.5, 2..6), x in 0.0f64..2.0) {
            let mix = MixtureSpec::new(a).unwrap();
            let step = 1e-4;
            let d1 = (mix.nu0(x + step) - mix.nu0(x - step)) / (2.0 * step);
            let d2 = (mix.nu1(x + step) - mix.nu1(x - step)) / (2.0 * step);
            prop_assert!((d1 - mix.nu1(x)).abs() <= 1e-6 * (1.0 + mix.nu1(x).abs()));
            prop_assert!((d2 - mix.nu2(x)).abs() <= 1e-6 * (1.0 + mix.nu2(x).abs()));
        }
    }
}
