use thiserror::Error;

/// Invalid inputs detected while building a problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("wavenumber gamma must be positive and finite, got {0}")]
    Wavenumber(f64),
    #[error("glancing angle must satisfy 0 < theta0 < 90 degrees, got {0}")]
    GlancingAngle(f64),
    #[error("azimuth must be finite, got {0}")]
    Azimuth(f64),
    #[error("lattice vectors are degenerate (cross product {0:.3e})")]
    DegenerateLattice(f64),
    #[error("rod set must start with the zero rod")]
    MissingZeroRod,
    #[error("rod ({0}, {1}) appears more than once")]
    DuplicateRod(i32, i32),
    #[error("rod cutoff must be non-negative and finite, got {0}")]
    RodCutoff(f64),
    #[error("rod ({m1}, {m2}) is grazing: gamma^2 - |b0 + k|^2 = {value:.3e}")]
    GrazingRod { m1: i32, m2: i32, value: f64 },
    #[error("domain bottom z_e must be negative and finite, got {0}")]
    DomainBottom(f64),
    #[error("bulk period must lie in (0, |z_e|], got {0}")]
    BulkPeriod(f64),
    #[error("step size must be positive and finite, got {0}")]
    StepSize(f64),
    #[error("slice count must be positive")]
    SliceCount,
    #[error("rhst threshold must be non-negative, got {0}")]
    Threshold(f64),
    #[error("no bulk period set on the potential field")]
    NoBulkPeriod,
    #[error("bulk convergence needs absorption > 0 in every layer")]
    BulkWithoutAbsorption,
    #[error("gaussian layer {index}: {reason}")]
    Layer { index: usize, reason: &'static str },
    #[error("tabulated potential: {0}")]
    Tabulated(String),
    #[error("missing tabulated coefficient for rod difference ({0}, {1})")]
    MissingCoefficient(i32, i32),
    #[error("splitting scheme failed self-check: {0}")]
    Scheme(String),
    #[error("angle grid is empty")]
    EmptyGrid,
    #[error("theta0 values must be strictly increasing within an azimuth block")]
    UnsortedGrid,
}

/// Dense-kernel failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular (zero pivot in column {0})")]
    Singular(usize),
}

/// Failures while integrating or extracting the reflected wave.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("height {z} lies outside the potential domain [{bottom}, 0]")]
    Domain { z: f64, bottom: f64 },
    /// `recent_xi` holds the last few condition estimates before the failure.
    #[error("breakdown at step {step}: {reason}")]
    Breakdown {
        step: usize,
        reason: String,
        recent_xi: Vec<f64>,
    },
    #[error("bulk reflection did not converge within {periods} periods (last change {change:.3e})")]
    BulkConvergence { periods: usize, change: f64 },
    #[error("solve failed at theta0 = {theta0} deg, theta1 = {theta1} deg: {source}")]
    Angle {
        theta0: f64,
        theta1: f64,
        #[source]
        source: Box<SolverError>,
    },
}

/// Curve comparison failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("curves have {0} and {1} rows")]
    RowCount(usize, usize),
    #[error("curves have {0} and {1} rods")]
    RodCount(usize, usize),
    #[error("row {row}: angles differ ({a0}, {a1}) vs ({b0}, {b1})")]
    Angles { row: usize, a0: f64, a1: f64, b0: f64, b1: f64 },
    #[error("rod {index} differs: {a:?} vs {b:?}")]
    Rod { index: usize, a: (i32, i32), b: (i32, i32) },
}
