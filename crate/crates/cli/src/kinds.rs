//! The registry of experiment kinds. The listing order is the declaration
//! order and never depends on the environment.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyT1,
    VerifyT2,
    VerifyT3,
    ConvexitySweep,
    T3Consistency,
    OzawaTsutsumi,
    AprioriBound,
    BourgainScaling,
    BilinearRadon,
    #[serde(rename = "smoothing-1d")]
    Smoothing1d,
    ScatteringDiagnostic,
    MomentumBound,
    RadonPlancherel,
    BruteForce,
    BoundaryBruteForce,
    CrossEngine,
    VerifyT1d,
    DomainVirial,
    TraceControl,
    #[serde(rename = "frequency-localized-l4")]
    FrequencyLocalizedL4,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 20] = [
        Self::VerifyT1,
        Self::VerifyT2,
        Self::VerifyT3,
        Self::ConvexitySweep,
        Self::T3Consistency,
        Self::OzawaTsutsumi,
        Self::AprioriBound,
        Self::BourgainScaling,
        Self::BilinearRadon,
        Self::Smoothing1d,
        Self::ScatteringDiagnostic,
        Self::MomentumBound,
        Self::RadonPlancherel,
        Self::BruteForce,
        Self::BoundaryBruteForce,
        Self::CrossEngine,
        Self::VerifyT1d,
        Self::DomainVirial,
        Self::TraceControl,
        Self::FrequencyLocalizedL4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyT1 => "verify-t1",
            Self::VerifyT2 => "verify-t2",
            Self::VerifyT3 => "verify-t3",
            Self::ConvexitySweep => "convexity-sweep",
            Self::T3Consistency => "t3-consistency",
            Self::OzawaTsutsumi => "ozawa-tsutsumi",
            Self::AprioriBound => "apriori-bound",
            Self::BourgainScaling => "bourgain-scaling",
            Self::BilinearRadon => "bilinear-radon",
            Self::Smoothing1d => "smoothing-1d",
            Self::ScatteringDiagnostic => "scattering-diagnostic",
            Self::MomentumBound => "momentum-bound",
            Self::RadonPlancherel => "radon-plancherel",
            Self::BruteForce => "brute-force",
            Self::BoundaryBruteForce => "boundary-brute-force",
            Self::CrossEngine => "cross-engine",
            Self::VerifyT1d => "verify-t1d",
            Self::DomainVirial => "domain-virial",
            Self::TraceControl => "trace-control",
            Self::FrequencyLocalizedL4 => "frequency-localized-l4",
        }
    }

    /// One-line statement of what the experiment checks.
    pub fn anchor(self) -> &'static str {
        match self {
            Self::VerifyT1 => "d^2/dt^2 I_omega(u, u) equals the directional trace and nonlinear terms along one solution",
            Self::VerifyT2 => "d^2/dt^2 I(u, v) for two 1D solutions equals the bilinear interaction identity",
            Self::VerifyT3 => "d^2/dt^2 of the smooth-weight interaction equals its Hessian-form right side",
            Self::ConvexitySweep => "I_omega is convex in time for seeded random data, both signs of the nonlinearity",
            Self::T3Consistency => "F-form minus G-form minus coupling vanishes identically for smooth weights",
            Self::OzawaTsutsumi => "1D space-time integral of |d_x(u conj v)|^2 against ||u0||^2 ||v0||^2",
            Self::AprioriBound => "defocusing space-time bound by sup_t ||u||^2 ||u||^2_{H^1/2}, constant recorded",
            Self::BourgainScaling => "bilinear L^2 gain for frequency-separated data decays like 2^-j",
            Self::BilinearRadon => "Radon transform of u conj v controls the bilinear space-time norm",
            Self::Smoothing1d => "1D local smoothing: sup_x int |d_x u|^2 dt against ||u0||^2_{H^1/2}",
            Self::ScatteringDiagnostic => "profile e^{-it Delta} u(t) and its H^1 Cauchy decrements (diagnostic)",
            Self::MomentumBound => "|d/dt I_omega| is bounded by mass times H^1/2 norms, seeded trials",
            Self::RadonPlancherel => "Plancherel identity for the Radon transform with a half derivative",
            Self::BruteForce => "prefix-sum evaluations of I_omega and d/dt I_omega equal direct double sums",
            Self::BoundaryBruteForce => "prefix-sum boundary term equals the direct double sum over faces and cells",
            Self::CrossEngine => "Crank-Nicolson without obstacle converges to the spectral engine at second order",
            Self::VerifyT1d => "directional identity on an exterior domain with its nonnegative boundary flux",
            Self::DomainVirial => "Morawetz-type virial identity with weight h on an exterior domain",
            Self::TraceControl => "boundary flux and local energy controlled by sup_t ||u||^2_{H^1/2} (diagnostic)",
            Self::FrequencyLocalizedL4 => "frequency-localized L^4 bound on windows of length 1/lambda (diagnostic)",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }
}

/// `name  anchor` lines in registry order.
pub fn listing() -> String {
    let width = ExperimentKind::ALL.iter().map(|k| k.name().len()).max().unwrap_or(0);
    ExperimentKind::ALL.iter().map(|k| format!("{:width$}  {}\n", k.name(), k.anchor())).collect()
}
