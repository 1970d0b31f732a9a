//! Source terms f(s) of power type, their exact antiderivatives, sign
//! truncations, and sampled certificates for the structural hypotheses the
//! solver relies on:
//!
//! - (h1) near-zero growth |f(s)| <= K1 |s|^alpha,
//! - (h2) global growth |f(s)| <= C (1 + |s|^q),
//! - (h3) superlinearity 0 < kappa F(s) <= s f(s) for |s| >= s0,
//! - subcriticality q < 1/(N-1).
//!
//! All sources are autonomous. The amplitude `c` scales f (and F) linearly;
//! setting it to zero disables the source, which some diagnostics use.

use thiserror::Error;

/// Sign restriction applied to a source on evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignBranch {
    Plus,
    Minus,
    #[default]
    Full,
}

/// Functional form of the source.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKind {
    /// f(s) = |s|^(q-1) s
    Power,
    /// f(s) = (s_+)^q
    PlusPower,
    /// f(s) = ((shift + s)_+)^q
    ShiftedPlusPower { shift: f64 },
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("invalid source parameter: {0}")]
    InvalidParameter(String),
}

/// A source term together with the constants entering the hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SourceSpec {
    #[serde(flatten)]
    pub kind: SourceKind,
    /// Power exponent q > 0.
    pub q: f64,
    /// Near-zero exponent in (h1).
    pub alpha: f64,
    /// Superlinearity constant in (h3), > 1.
    pub kappa: f64,
    /// Threshold above which (h3) is required.
    pub s0: f64,
    /// Growth/amplitude constant; f scales linearly with it.
    #[serde(rename = "c")]
    pub amplitude: f64,
    /// Ambient dimension used by the subcriticality test.
    #[serde(rename = "n")]
    pub dim: usize,
    /// Sign truncation baked into this spec (`Full` unless produced by `split`).
    #[serde(skip, default)]
    pub branch: SignBranch,
}

impl SourceSpec {
    /// Odd power source with the canonical constants: alpha = q, C = 1,
    /// s0 = 1, kappa = 1 + 0.8 q (inside (1, q+1]).
    pub fn power(q: f64, dim: usize) -> Self {
        SourceSpec {
            kind: SourceKind::Power,
            q,
            alpha: q,
            kappa: 1.0 + 0.8 * q,
            s0: 1.0,
            amplitude: 1.0,
            dim,
            branch: SignBranch::Full,
        }
    }

    /// Positive-part power source.
    pub fn plus_power(q: f64, dim: usize) -> Self {
        SourceSpec { kind: SourceKind::PlusPower, ..Self::power(q, dim) }
    }

    /// Shifted positive-part power with shift ((dim-1)/radius)^(1/q), the
    /// value for which u = ((dim-1)/|x|)^(1/q) - shift solves the problem
    /// on the ball of the given radius.
    pub fn shifted_plus_power(q: f64, dim: usize, radius: f64) -> Self {
        let shift = ((dim as f64 - 1.0) / radius).powf(1.0 / q);
        SourceSpec { kind: SourceKind::ShiftedPlusPower { shift }, ..Self::power(q, dim) }
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if !(self.q > 0.0) {
            return Err(SourceError::InvalidParameter(format!("q must be > 0, got {}", self.q)));
        }
        if !(self.alpha > 0.0) {
            return Err(SourceError::InvalidParameter(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.kappa > 1.0) {
            return Err(SourceError::InvalidParameter(format!(
                "kappa must be > 1, got {}",
                self.kappa
            )));
        }
        if !(self.s0 > 0.0) {
            return Err(SourceError::InvalidParameter(format!("s0 must be > 0, got {}", self.s0)));
        }
        if self.amplitude < 0.0 {
            return Err(SourceError::InvalidParameter(format!(
                "amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if self.dim < 2 {
            return Err(SourceError::InvalidParameter(format!(
                "dimension must be >= 2, got {}",
                self.dim
            )));
        }
        Ok(())
    }

    fn base_f(&self, s: f64) -> f64 {
        match self.kind {
            SourceKind::Power => s.signum() * s.abs().powf(self.q),
            SourceKind::PlusPower => s.max(0.0).powf(self.q),
            SourceKind::ShiftedPlusPower { shift } => (shift + s).max(0.0).powf(self.q),
        }
    }

    fn base_antiderivative(&self, s: f64) -> f64 {
        let q1 = self.q + 1.0;
        match self.kind {
            SourceKind::Power => s.abs().powf(q1) / q1,
            SourceKind::PlusPower => s.max(0.0).powf(q1) / q1,
            SourceKind::ShiftedPlusPower { shift } => {
                ((shift + s).max(0.0).powf(q1) - shift.max(0.0).powf(q1)) / q1
            }
        }
    }

    fn base_f_prime(&self, s: f64) -> f64 {
        let dpow = |t: f64| if t > 0.0 { self.q * t.powf(self.q - 1.0) } else { 0.0 };
        match self.kind {
            SourceKind::Power => dpow(s.abs()),
            SourceKind::PlusPower => dpow(s.max(0.0)),
            SourceKind::ShiftedPlusPower { shift } => dpow((shift + s).max(0.0)),
        }
    }

    /// f(s), honoring this spec's own branch.
    pub fn f(&self, s: f64) -> f64 {
        self.f_branch(s, SignBranch::Full)
    }

    /// f restricted to an additional sign branch: f_+(s) = f(s) for s > 0,
    /// f_-(s) = f(s) for s <= 0, zero otherwise.
    pub fn f_branch(&self, s: f64, extra: SignBranch) -> f64 {
        let s_eff = match compose(self.branch, extra) {
            SignBranch::Full => s,
            SignBranch::Plus => {
                if s > 0.0 {
                    s
                } else {
                    return 0.0;
                }
            }
            SignBranch::Minus => {
                if s <= 0.0 {
                    s
                } else {
                    return 0.0;
                }
            }
        };
        self.amplitude * self.base_f(s_eff)
    }

    /// Exact antiderivative F(s) with F(0) = 0, honoring the spec's branch.
    pub fn antiderivative(&self, s: f64) -> f64 {
        self.antiderivative_branch(s, SignBranch::Full)
    }

    /// Antiderivative of the branch-restricted source. Since F(0) = 0, the
    /// plus branch is F(max(s, 0)) and the minus branch F(min(s, 0)).
    pub fn antiderivative_branch(&self, s: f64, extra: SignBranch) -> f64 {
        let s_eff = match compose(self.branch, extra) {
            SignBranch::Full => s,
            SignBranch::Plus => s.max(0.0),
            SignBranch::Minus => s.min(0.0),
        };
        self.amplitude * self.base_antiderivative(s_eff)
    }

    /// d/ds of the branch-restricted source (one-sided at kinks; 0 where the
    /// exponent makes the slope unbounded, which the damped solver tolerates).
    pub fn f_prime_branch(&self, s: f64, extra: SignBranch) -> f64 {
        match compose(self.branch, extra) {
            SignBranch::Full => {}
            SignBranch::Plus => {
                if s <= 0.0 {
                    return 0.0;
                }
            }
            SignBranch::Minus => {
                if s > 0.0 {
                    return 0.0;
                }
            }
        }
        self.amplitude * self.base_f_prime(s)
    }

    /// Splits into the positive and negative truncations (f_+, f_-).
    pub fn split(&self) -> (SourceSpec, SourceSpec) {
        let plus = SourceSpec { branch: compose(self.branch, SignBranch::Plus), ..*self };
        let minus = SourceSpec { branch: compose(self.branch, SignBranch::Minus), ..*self };
        (plus, minus)
    }

    /// Upper limit of the admissible continuation exponent range:
    /// min{1 + alpha, kappa, q + 1}.
    pub fn p_upper(&self) -> f64 {
        (1.0 + self.alpha).min(self.kappa).min(self.q + 1.0)
    }

    pub fn subcritical(&self) -> bool {
        self.q < 1.0 / (self.dim as f64 - 1.0)
    }

    /// Sampled certificates for the structural hypotheses; see the module
    /// docs for the grids. `k1` is the measured near-zero growth constant
    /// max |f(s)| / |s|^alpha over the h1 grid.
    pub fn hypothesis_check(&self) -> HypothesisReport {
        // h1: ratios on s = +-10^-k, k = 1..12. Finite, and not growing by
        // more than 100x from the first decades to the last.
        let mut ratios = Vec::with_capacity(12);
        let mut k1 = 0.0f64;
        let mut all_finite = true;
        for k in 1..=12 {
            let s = 10f64.powi(-k);
            let mut rk = 0.0f64;
            for sgn in [1.0, -1.0] {
                let r = self.f(sgn * s).abs() / s.powf(self.alpha);
                if !r.is_finite() {
                    all_finite = false;
                }
                rk = rk.max(r);
                k1 = k1.max(r);
            }
            ratios.push(rk);
        }
        let early = ratios[..4].iter().cloned().fold(0.0f64, f64::max);
        let late = ratios[8..].iter().cloned().fold(0.0f64, f64::max);
        let h1 = all_finite && (late == 0.0 || (early > 0.0 && late <= 100.0 * early));

        // h2: |f(s)| <= C (1 + |s|^q) on a log grid over +-[1e-6, 1e6].
        let mut h2 = true;
        for j in 0..=96 {
            let s = 10f64.powf(-6.0 + 0.125 * j as f64);
            for sgn in [1.0, -1.0] {
                let lhs = self.f(sgn * s).abs();
                let rhs = self.amplitude * (1.0 + s.powf(self.q));
                if lhs > rhs * (1.0 + 1e-9) {
                    h2 = false;
                }
            }
        }

        // h3: 0 < kappa F(s) <= s f(s) for |s| in [s0, 1e6]. For the odd
        // power kind this reduces exactly to kappa <= q + 1.
        let h3 = match self.kind {
            SourceKind::Power if self.branch == SignBranch::Full => {
                self.amplitude > 0.0 && self.kappa <= self.q + 1.0
            }
            _ => {
                let mut ok = true;
                let decades = (6.0 - self.s0.log10()).max(1.0);
                let steps = (decades * 8.0).ceil() as usize;
                for j in 0..=steps {
                    let s = self.s0 * 10f64.powf(decades * j as f64 / steps as f64);
                    for sgn in [1.0, -1.0] {
                        let kf = self.kappa * self.antiderivative(sgn * s);
                        let sf = sgn * s * self.f(sgn * s);
                        if !(kf > 0.0) || kf > sf * (1.0 + 1e-12) {
                            ok = false;
                        }
                    }
                }
                ok
            }
        };

        HypothesisReport { h1, h2, h3, subcritical: self.subcritical(), k1 }
    }
}

fn compose(own: SignBranch, extra: SignBranch) -> SignBranch {
    match (own, extra) {
        (SignBranch::Full, e) => e,
        (o, SignBranch::Full) => o,
        (o, e) if o == e => o,
        // Opposite truncations annihilate; represent as Plus of the zero set.
        _ => SignBranch::Plus,
    }
}

/// Outcome of the sampled hypothesis certificates.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HypothesisReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub subcritical: bool,
    /// Measured near-zero growth constant from the h1 grid.
    pub k1: f64,
}

impl HypothesisReport {
    pub fn all(&self) -> bool {
        self.h1 && self.h2 && self.h3 && self.subcritical
    }

    /// Name of the first failing certificate, if any.
    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.h1 {
            Some("h1 (near-zero growth |f| <= K1 |s|^alpha)")
        } else if !self.h2 {
            Some("h2 (global growth |f| <= C(1 + |s|^q))")
        } else if !self.h3 {
            Some("h3 (superlinearity 0 < kappa F <= s f)")
        } else if !self.subcritical {
            Some("subcriticality (q < 1/(N-1))")
        } else {
            None
        }
    }
}
