//! Window sums, cluster-rate estimates, explicit total-variation bounds and
//! convergence curves.

pub mod bounds;
pub mod cayley;
pub mod curve;
pub mod lambda;
pub mod randomized;

pub use bounds::{
    moment_terms_ergodic, theorem1_best, theorem1_bound, BoundReport, BoundVariant, HolderIndex, MomentTerms,
};
pub use cayley::{cayley_dn, cayley_lambda};
pub use curve::{
    convergence_curve, empirical_w_dist, evaluate_point, resolve_simulator, tv_with_stderr, BRule, CurvePoint, EmpiricalLaw, Mode,
    RandomizedConfig, Scaling, Scenario, SumMode, TvEstimate,
};
pub use lambda::{
    grid_window_size, lambda_hat_ergodic, lambda_hat_exchangeable, w_sum, AtomRate, LambdaEstimate, K_MAX_DEFAULT,
};
pub use randomized::{
    epsilon_n, lambda_hat_randomized, mtkatahdin_bound, radii_cn, randomized_draw, randomized_sum, sample_for_window,
    JDist, JMoments, JRule, RadiusChoice, RandomizedBoundInputs, RandomizedDraw, RandomizedLambda, RandomizedSpec,
    SumWindow,
};

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`
/// so that vacuous bounds survive a JSON round trip.
pub(crate) mod serde_extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}
