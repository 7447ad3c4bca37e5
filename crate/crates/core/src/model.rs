//! Bounded non-negative random-variable models with analytic moments and a
//! seeded sampler.

use crate::error::{Error, Result};
use crate::real::{real, Real};
use crate::stream::RandomStream;

/// Probabilities of a discrete model must sum to one within this slack.
const PROB_SUM_TOL: f64 = 1e-12;

/// Analytic first and second moments of a model, with the derived quantities
/// every closed-form routine needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary<F> {
    /// E[Z]
    pub z1: F,
    /// E[Z^2]
    pub z2: F,
    /// Var Z = z2 - z1^2
    pub var: F,
    /// Var Z / (E Z)^2
    pub rel_var: F,
    /// sqrt(Var Z / (E Z)^4), the asymptotic scale of the estimator
    pub sigma: F,
}

impl<F: Real> MomentSummary<F> {
    /// Builds the bundle from raw moments, rejecting degenerate inputs
    /// (z1 <= 0 or z2 <= z1^2).
    pub fn from_raw(z1: F, z2: F) -> Result<Self> {
        if !(z1 > F::zero()) || !z1.is_finite() {
            return Err(Error::InvalidModel(format!(
                "mean must be positive and finite, got {z1}"
            )));
        }
        let var = z2 - z1 * z1;
        if !(var > F::zero()) {
            return Err(Error::InvalidModel(format!(
                "model is degenerate: Var Z = {var} is not positive"
            )));
        }
        let rel_var = var / (z1 * z1);
        let sigma = (var / (z1 * z1 * z1 * z1)).sqrt();
        Ok(Self {
            z1,
            z2,
            var,
            rel_var,
            sigma,
        })
    }

    /// The target parameter beta = 1/E[Z].
    #[inline]
    pub fn beta(&self) -> F {
        F::one() / self.z1
    }

    /// Upper end of the feasibility interval, 2 E[Z] / E[Z^2].
    #[inline]
    pub fn feasibility_limit(&self) -> F {
        real::<F>(2.0) * self.z1 / self.z2
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind<F> {
    Bernoulli { p: F },
    UniformScaled { scale: F },
    DiscreteFinite { values: Vec<F>, cumulative: Vec<F> },
}

/// A bounded non-negative scalar distribution: Bernoulli(p), b*U(0,1), or a
/// finite set of non-negative atoms.
///
/// Construction validates all invariants (support in [0, bound], positive
/// probabilities summing to one, non-degeneracy), so a value of this type is
/// always usable. Immutable and freely shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ZModel<F> {
    kind: Kind<F>,
    bound: F,
}

impl<F: Real> ZModel<F> {
    /// Indicator of an event with probability `p`, bounded by 1.
    pub fn bernoulli(p: F) -> Result<Self> {
        if !p.is_finite() || !(p > F::zero()) || !(p < F::one()) {
            return Err(Error::InvalidModel(format!(
                "bernoulli probability must lie strictly inside (0, 1), got {p}"
            )));
        }
        Ok(Self {
            kind: Kind::Bernoulli { p },
            bound: F::one(),
        })
    }

    /// `scale * U(0,1)`, bounded by `scale`.
    pub fn uniform_scaled(scale: F) -> Result<Self> {
        if !scale.is_finite() || !(scale > F::zero()) {
            return Err(Error::InvalidModel(format!(
                "uniform scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self {
            kind: Kind::UniformScaled { scale },
            bound: scale,
        })
    }

    /// Finite support on non-negative atoms with the given probabilities.
    /// Bounded by the largest atom.
    pub fn discrete_finite(values: &[F], probs: &[F]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidModel("discrete model has no atoms".into()));
        }
        if values.len() != probs.len() {
            return Err(Error::InvalidModel(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        let mut bound = F::zero();
        for &v in values {
            if !v.is_finite() || v < F::zero() {
                return Err(Error::InvalidModel(format!(
                    "atom {v} is not a finite non-negative value"
                )));
            }
            bound = bound.max(v);
        }
        let mut total = F::zero();
        for &p in probs {
            if !p.is_finite() || !(p > F::zero()) {
                return Err(Error::InvalidModel(format!(
                    "atom probability {p} is not strictly positive"
                )));
            }
            total = total + p;
        }
        if (total - F::one()).abs().into_f64() > PROB_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        // Inverse-CDF table; the final entry is pinned to 1 so a uniform draw
        // can never fall past the table.
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = F::zero();
        for &p in probs {
            acc = acc + p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("nonempty") = F::one();

        let model = Self {
            kind: Kind::DiscreteFinite {
                values: values.to_vec(),
                cumulative,
            },
            bound,
        };
        // Non-degeneracy check doubles as moment validation.
        model.moments()?;
        Ok(model)
    }

    /// Almost-sure upper bound b with Z <= b.
    #[inline]
    pub fn bound(&self) -> F {
        self.bound
    }

    /// Exact closed-form moments. Infallible for Bernoulli/uniform models by
    /// construction; discrete models were validated as non-degenerate when
    /// built, so failures cannot occur after construction.
    pub fn moments(&self) -> Result<MomentSummary<F>> {
        match &self.kind {
            Kind::Bernoulli { p } => MomentSummary::from_raw(*p, *p),
            Kind::UniformScaled { scale } => {
                let z1 = *scale / real::<F>(2.0);
                let z2 = *scale * *scale / real::<F>(3.0);
                MomentSummary::from_raw(z1, z2)
            }
            Kind::DiscreteFinite { values, cumulative } => {
                let mut z1 = F::zero();
                let mut z2 = F::zero();
                let mut prev = F::zero();
                for (&v, &c) in values.iter().zip(cumulative) {
                    let p = c - prev;
                    prev = c;
                    z1 = z1 + v * p;
                    z2 = z2 + v * v * p;
                }
                MomentSummary::from_raw(z1, z2)
            }
        }
    }

    /// One draw of Z, consuming exactly one uniform from the stream.
    #[inline]
    pub fn sample(&self, stream: &mut RandomStream) -> F {
        let u: F = stream.unit();
        match &self.kind {
            Kind::Bernoulli { p } => {
                if u < *p {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Kind::UniformScaled { scale } => *scale * u,
            Kind::DiscreteFinite { values, cumulative } => {
                let idx = cumulative
                    .iter()
                    .position(|&c| u <= c)
                    .unwrap_or(values.len() - 1);
                values[idx]
            }
        }
    }
}

/// Parses the CLI model grammar:
/// `bernoulli:<p>`, `uniform:<b>`, `discrete:<v1>,...,<vk>@<p1>,...,<pk>`.
///
/// Errors carry the byte position of the offending token.
pub fn parse_model_spec<F: Real>(spec: &str) -> Result<ZModel<F>> {
    let fail = |position: usize, message: &str| Error::SpecParse {
        position,
        message: message.to_string(),
    };
    if spec.is_empty() {
        return Err(fail(0, "empty model spec"));
    }
    let colon = spec
        .find(':')
        .ok_or_else(|| fail(spec.len(), "expected ':' after the model kind"))?;
    let (kind, rest) = (&spec[..colon], &spec[colon + 1..]);
    let args_at = colon + 1;

    let parse_number = |text: &str, at: usize| -> Result<F> {
        text.parse::<f64>()
            .map(F::from_f64)
            .map_err(|_| fail(at, &format!("expected a number, found {text:?}")))
    };

    match kind {
        "bernoulli" => {
            let p = parse_number(rest, args_at)?;
            ZModel::bernoulli(p).map_err(|e| fail(args_at, &e.to_string()))
        }
        "uniform" => {
            let b = parse_number(rest, args_at)?;
            ZModel::uniform_scaled(b).map_err(|e| fail(args_at, &e.to_string()))
        }
        "discrete" => {
            let at = rest
                .find('@')
                .ok_or_else(|| fail(spec.len(), "expected '@' between values and probabilities"))?;
            let (vals_text, probs_text) = (&rest[..at], &rest[at + 1..]);
            let mut offset = args_at;
            let mut values = Vec::new();
            for item in vals_text.split(',') {
                values.push(parse_number(item, offset)?);
                offset += item.len() + 1;
            }
            let mut probs = Vec::new();
            let mut offset = args_at + at + 1;
            for item in probs_text.split(',') {
                probs.push(parse_number(item, offset)?);
                offset += item.len() + 1;
            }
            if values.len() != probs.len() {
                return Err(fail(
                    args_at + at + 1,
                    &format!("{} values but {} probabilities", values.len(), probs.len()),
                ));
            }
            ZModel::discrete_finite(&values, &probs).map_err(|e| fail(args_at, &e.to_string()))
        }
        other => Err(fail(
            0,
            &format!("unknown model kind {other:?}, expected bernoulli, uniform, or discrete"),
        )),
    }
}
