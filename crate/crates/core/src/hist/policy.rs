use crate::hist::HistError;

/// How often a full anchor is written among an object's historical versions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnchorPolicy {
    /// Interval grows in tiers with the object's update count `f`:
    /// `tau1*c` while `f <= tau1`, `tau2*c` while `f <= tau2`, then
    /// `tau2^2/tau1*c`.
    Adaptive { tau1: u64, tau2: u64, c: f64 },
    /// One anchor every `u` versions.
    Fixed(u64),
}

impl Default for AnchorPolicy {
    fn default() -> Self {
        AnchorPolicy::Adaptive {
            tau1: 1000,
            tau2: 10_000,
            c: 0.01,
        }
    }
}

impl AnchorPolicy {
    pub fn validate(&self) -> Result<(), HistError> {
        match *self {
            AnchorPolicy::Fixed(0) => Err(HistError::InvalidPolicy("fixed interval must be >= 1".into())),
            AnchorPolicy::Fixed(_) => Ok(()),
            AnchorPolicy::Adaptive { tau1, tau2, c } => {
                if tau1 == 0 || tau2 <= tau1 {
                    Err(HistError::InvalidPolicy(format!(
                        "need 0 < tau1 < tau2, got tau1={tau1} tau2={tau2}"
                    )))
                } else if !(c.is_finite() && c > 0.0) {
                    Err(HistError::InvalidPolicy(format!("c must be positive, got {c}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Anchor interval `u` for an object with `f` migrated versions.
    pub fn interval(&self, f: u64) -> u64 {
        match *self {
            AnchorPolicy::Fixed(u) => u.max(1),
            AnchorPolicy::Adaptive { tau1, tau2, c } => {
                let base = if f <= tau1 {
                    tau1 as f64
                } else if f <= tau2 {
                    tau2 as f64
                } else {
                    (tau2 as f64) * (tau2 as f64) / (tau1 as f64)
                };
                ((base * c).round() as u64).max(1)
            }
        }
    }

    /// Parses `fixed:<u>` or `adaptive`.
    pub fn parse(s: &str, tau1: u64, tau2: u64, c: f64) -> Result<Self, HistError> {
        let p = if s == "adaptive" {
            AnchorPolicy::Adaptive { tau1, tau2, c }
        } else if let Some(u) = s.strip_prefix("fixed:") {
            let u = u
                .parse()
                .map_err(|_| HistError::InvalidPolicy(format!("bad fixed interval {u:?}")))?;
            AnchorPolicy::Fixed(u)
        } else {
            return Err(HistError::InvalidPolicy(format!(
                "expected `adaptive` or `fixed:<u>`, got {s:?}"
            )));
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tiers() {
        let p = AnchorPolicy::default();
        assert_eq!(p.interval(0), 10);
        assert_eq!(p.interval(1000), 10);
        assert_eq!(p.interval(1001), 100);
        assert_eq!(p.interval(10_000), 100);
        assert_eq!(p.interval(10_001), 1000);
    }

    #[test]
    fn interval_never_zero() {
        let p = AnchorPolicy::Adaptive { tau1: 10, tau2: 20, c: 0.001 };
        assert_eq!(p.interval(0), 1);
        assert_eq!(AnchorPolicy::Fixed(7).interval(123), 7);
    }

    #[test]
    fn validation() {
        assert!(AnchorPolicy::Fixed(0).validate().is_err());
        assert!(AnchorPolicy::Adaptive { tau1: 5, tau2: 5, c: 1.0 }.validate().is_err());
        assert!(AnchorPolicy::Adaptive { tau1: 5, tau2: 6, c: 0.0 }.validate().is_err());
        assert!(AnchorPolicy::parse("fixed:3", 1, 2, 1.0).is_ok());
        assert!(AnchorPolicy::parse("fixed:x", 1, 2, 1.0).is_err());
        assert!(AnchorPolicy::parse("sometimes", 1, 2, 1.0).is_err());
    }
}
