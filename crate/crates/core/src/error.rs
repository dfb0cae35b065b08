use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountsError {
    #[error("n_ab = {n_ab} exceeds min(n_a, n_b) = min({n_a}, {n_b})")]
    OverlapExceedsFound { n_a: u64, n_b: u64, n_ab: u64 },
    #[error("counts above {limit} are not supported")]
    TooLarge { limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PosteriorError {
    /// The weights decay too slowly for the posterior to be normalised.
    #[error(
        "posterior series diverges: needs n_ab + shift >= 2 (have n_ab + shift = {decay}); \
         n_ab >= {min_n_ab} or a more convergent scenario (e.g. proper-prior) is required"
    )]
    Divergent { decay: u64, min_n_ab: u64 },
    #[error("truncation needs about {required} terms, above the cap of {cap}; loosen the tail tolerance")]
    BudgetExceeded { required: f64, cap: u64 },
    #[error("tail tolerance must be in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("credible mass must be in (0, 1 - tail bound), got {0}")]
    InvalidMass(f64),
    #[error("no interval inside the table reaches mass {mass}; the table covers {covered}")]
    MassNotAchievable { mass: f64, covered: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("true population size must be positive")]
    EmptyPopulation,
    #[error("detection probability {name} = {value} must lie in (0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("sample size {name} = {value} exceeds the population size {true_n}")]
    SampleTooLarge { name: &'static str, value: u64, true_n: u64 },
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("interval width must be positive and finite, got {0}")]
    InvalidIntervalWidth(f64),
    #[error("credible mass must be in (0, 1), got {0}")]
    InvalidMass(f64),
    #[error("estimator scenario {scenario} does not match the {mode} search procedure; enable mismatched pairings to allow it")]
    MismatchedScenario { scenario: String, mode: &'static str },
    #[error("no estimators requested")]
    NoEstimators,
}
