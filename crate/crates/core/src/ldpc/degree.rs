use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::CodeError;

/// Edge-perspective variable degree distribution `λ(x) = Σ λ_i x^{i-1}`:
/// `λ_i` is the fraction of edges attached to degree-`i` variable nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    lambda: BTreeMap<usize, f64>,
}

/// `(name, field exponent, code rate, λ coefficients)`.
pub type NamedProfile = (&'static str, u32, f64, &'static [(usize, f64)]);

/// Optimized irregular ensembles shipped with the crate.
pub const NAMED_PROFILES: &[NamedProfile] = &[
    (
        "gf16-r085",
        4,
        0.85,
        &[
            (2, 0.62755),
            (6, 0.03896),
            (10, 0.02497),
            (11, 0.01158),
            (14, 0.00598),
            (15, 0.03557),
            (17, 0.20497),
            (19, 0.05042),
        ],
    ),
    ("gf32-r09", 5, 0.9, &[(2, 0.67173), (6, 0.00164), (7, 0.00481), (8, 0.01342), (14, 0.02081), (16, 0.28759)]),
    ("gf64-r09", 6, 0.9, &[(2, 0.81173), (5, 0.00710), (8, 0.01004), (15, 0.17113)]),
];

/// Looks up a built-in profile: `(field exponent, distribution, rate)`.
pub fn named_profile(name: &str) -> Option<(u32, DegreeDistribution, f64)> {
    NAMED_PROFILES.iter().find(|(n, ..)| *n == name).map(|&(_, q, rate, coeffs)| {
        let dist = DegreeDistribution::new(coeffs.iter().copied()).expect("built-in profile is valid");
        (q, dist, rate)
    })
}

impl DegreeDistribution {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, CodeError> {
        let mut lambda = BTreeMap::new();
        for (deg, c) in coeffs {
            if deg < 2 {
                return Err(CodeError::Distribution(format!("degree {deg} below 2")));
            }
            if !(c >= 0.0) || !c.is_finite() {
                return Err(CodeError::Distribution(format!("coefficient {c} for degree {deg}")));
            }
            if lambda.insert(deg, c).is_some() {
                return Err(CodeError::Distribution(format!("degree {deg} listed twice")));
            }
        }
        let total: f64 = lambda.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CodeError::Distribution(format!("coefficients sum to {total}")));
        }
        lambda.retain(|_, c| *c > 0.0);
        Ok(Self { lambda })
    }

    /// `λ = x`: every edge on a degree-`dv` node.
    pub fn single(dv: usize) -> Result<Self, CodeError> {
        Self::new([(dv, 1.0)])
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lambda.iter().map(|(&d, &c)| (d, c))
    }

    pub fn max_degree(&self) -> usize {
        self.lambda.keys().next_back().copied().unwrap_or(0)
    }

    /// Node-perspective fractions `(λ_i/i) / Σ_j (λ_j/j)`.
    pub fn node_fractions(&self) -> Vec<(usize, f64)> {
        let norm: f64 = self.lambda.iter().map(|(&d, &c)| c / d as f64).sum();
        self.lambda.iter().map(|(&d, &c)| (d, c / d as f64 / norm)).collect()
    }

    /// Mean variable node degree, `1 / Σ (λ_i/i)`.
    pub fn average_degree(&self) -> f64 {
        1.0 / self.lambda.iter().map(|(&d, &c)| c / d as f64).sum::<f64>()
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (d, c)) in self.lambda.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}:{c}")?;
        }
        Ok(())
    }
}

impl FromStr for DegreeDistribution {
    type Err = CodeError;

    /// Parses `deg:coeff` pairs separated by commas, e.g. `2:0.6,3:0.4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |part: &str| CodeError::Distribution(format!("cannot parse {part:?} as degree:coefficient"));
        let pairs = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|part| {
                let (d, c) = part.split_once(':').ok_or_else(|| bad(part))?;
                let d = d.trim().parse().map_err(|_| bad(part))?;
                let c = c.trim().parse().map_err(|_| bad(part))?;
                Ok((d, c))
            })
            .collect::<Result<Vec<_>, CodeError>>()?;
        Self::new(pairs)
    }
}

/// Per-node degrees for `n` variable nodes, in ascending order.
///
/// Node counts are `n · (λ_i/i) / Σ(λ_j/j)` rounded by largest remainder so
/// they sum to exactly `n`; ties in the remainder go to the lower degree.
pub fn node_degrees_from_lambda(dist: &DegreeDistribution, n: usize) -> Vec<usize> {
    let fractions = dist.node_fractions();
    let exact: Vec<f64> = fractions.iter().map(|&(_, f)| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    fractions.iter().zip(&counts).flat_map(|(&(deg, _), &count)| std::iter::repeat_n(deg, count)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_degree_profile() {
        let d = DegreeDistribution::single(2).unwrap();
        assert_eq!(node_degrees_from_lambda(&d, 17), vec![2; 17]);
        assert_eq!(d.average_degree(), 2.0);
    }

    #[test]
    fn named_profiles_are_normalized() {
        for &(name, q, rate, _) in NAMED_PROFILES {
            let (pq, dist, prate) = named_profile(name).unwrap();
            assert_eq!((pq, prate), (q, rate));
            let total: f64 = dist.coefficients().map(|(_, c)| c).sum();
            assert!((total - 1.0).abs() < 1e-9, "{name}: {total}");
        }
        assert!(named_profile("gf8-r05").is_none());
    }

    #[test]
    fn gf32_degree_two_fraction() {
        let (_, dist, _) = named_profile("gf32-r09").unwrap();
        let norm = 0.67173 / 2.0 + 0.00164 / 6.0 + 0.00481 / 7.0 + 0.01342 / 8.0 + 0.02081 / 14.0 + 0.28759 / 16.0;
        let expected = (0.67173 / 2.0) / norm;
        let f2 = dist.node_fractions()[0];
        assert_eq!(f2.0, 2);
        assert!((f2.1 - expected).abs() < 1e-12);

        let n = 10_000;
        let degrees = node_degrees_from_lambda(&dist, n);
        assert_eq!(degrees.len(), n);
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
        let twos = degrees.iter().filter(|&&d| d == 2).count();
        assert!((twos as f64 - expected * n as f64).abs() <= 1.0);
        // Each class count is off by less than one node, so the edge total
        // is off by less than the sum of the degrees present.
        let edges: usize = degrees.iter().sum();
        let ideal = n as f64 * dist.average_degree();
        let slack: usize = dist.coefficients().map(|(d, _)| d).sum();
        assert!((edges as f64 - ideal).abs() < slack as f64);
    }

    #[test]
    fn rounding_sums_to_n() {
        let (_, dist, _) = named_profile("gf16-r085").unwrap();
        for n in [1, 7, 100, 999, 1000, 12345] {
            assert_eq!(node_degrees_from_lambda(&dist, n).len(), n);
        }
    }

    #[test]
    fn parse_and_validate() {
        let d: DegreeDistribution = "2:0.25, 3:0.75".parse().unwrap();
        assert_eq!(d.coefficients().collect::<Vec<_>>(), vec![(2, 0.25), (3, 0.75)]);
        assert_eq!(d.to_string().parse::<DegreeDistribution>().unwrap(), d);
        assert!("2:0.5".parse::<DegreeDistribution>().is_err());
        assert!("1:1.0".parse::<DegreeDistribution>().is_err());
        assert!("2:1.5,3:-0.5".parse::<DegreeDistribution>().is_err());
        assert!("2:0.5,2:0.5".parse::<DegreeDistribution>().is_err());
        assert!("2-1".parse::<DegreeDistribution>().is_err());
    }
}
