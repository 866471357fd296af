use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown letter '{letter}' at line {line}, column {column}")]
    UnknownLetter {
        letter: char,
        line: usize,
        column: usize,
    },
    #[error("empty image for letter '{0}'")]
    EmptyImage(char),
    #[error("letter '{0}' defined twice")]
    DuplicateLetter(char),
    #[error("letter '{0}' occurs in no image")]
    DeadLetter(char),
    #[error("rule has no letters")]
    Empty,
    #[error("bad lengths expression: {0}")]
    Lengths(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubstitutionError {
    #[error("substitution matrix is not primitive")]
    NotPrimitive,
    #[error("Perron-Frobenius iteration did not converge within {0} steps")]
    NoConvergence(usize),
    #[error("no admissible length scaling found: {0}")]
    NoAdmissibleScaling(String),
    #[error("tiling identity violated in column {column}: images do not fill the inflated tile")]
    TilingViolated { column: usize },
    #[error("seed {0}|{1} is not a legal two-letter word")]
    IllegalSeed(usize, usize),
    #[error("no fixed legal seed found up to power {0}")]
    NoFixedSeed(usize),
    #[error("patch coordinates overflow 64-bit integers")]
    Overflow,
    #[error("lengths have {found} entries, alphabet has {expected}")]
    LengthCount { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("could not recover an integer factor of the characteristic polynomial (coefficient {0:e} away from an integer)")]
    RoundingAmbiguity(f64),
    #[error("conjugate root of modulus {0} is not inside the unit disk (not a PV number)")]
    NotPisot(f64),
    #[error("constant term {0} of the minimal polynomial is not a unit")]
    NotUnit(String),
    #[error("minimal polynomial has repeated roots")]
    RepeatedRoots,
    #[error("Perron-Frobenius root is not strictly dominant")]
    NotDominant,
    #[error("division by zero in the number field")]
    DivisionByZero,
    #[error("dual-basis and trace derivations of the Fourier module disagree: {0}")]
    Inconsistent(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("internal contraction {0} is not contractive")]
    NotContractive(f64),
    #[error("window iteration did not reach tolerance after {iterations} steps (last change {change:e})")]
    IterationCap { iterations: usize, change: f64 },
    #[error("window solver needs internal dimension {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("point cloud for letter {0} is empty")]
    EmptyCloud(usize),
    #[error("Monte-Carlo relative standard error {found:e} exceeds the bound {bound:e}")]
    Variance { found: f64, bound: f64 },
    #[error(transparent)]
    Substitution(#[from] SubstitutionError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("argument has dimension {found}, internal space has dimension {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("patch covers radius {covered}, requested {requested}")]
    PatchTooSmall { covered: f64, requested: f64 },
    #[error("need at least {needed} points per letter, letter {letter} has {found}")]
    InsufficientPoints {
        letter: char,
        found: usize,
        needed: usize,
    },
    #[error("number of bins must be positive")]
    NoBins,
    #[error("unknown closed-form system '{0}'")]
    UnknownSystem(String),
    #[error(transparent)]
    Substitution(#[from] SubstitutionError),
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// Pipeline-level error with the originating module attached.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rule: {0}")]
    Rule(#[from] RuleError),
    #[error("substitution: {0}")]
    Substitution(#[from] SubstitutionError),
    #[error("numberfield: {0}")]
    Field(#[from] FieldError),
    #[error("windows: {0}")]
    Window(#[from] WindowError),
    #[error("cocycle: {0}")]
    Cocycle(#[from] CocycleError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status: 2 validation, 3 convergence diagnostic, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 4,
            Error::Substitution(SubstitutionError::NoConvergence(_))
            | Error::Window(WindowError::IterationCap { .. })
            | Error::Window(WindowError::Variance { .. }) => 3,
            _ => 2,
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Error::Rule(RuleError::Syntax { .. }) => {
                Some("rules are written `a -> ab ; b -> a`, one statement per line or `;`")
            }
            Error::Substitution(SubstitutionError::NotPrimitive) => {
                Some("every letter must eventually produce every other letter")
            }
            Error::Substitution(SubstitutionError::TilingViolated { .. }) => {
                Some("check the `lengths:` line; the images must tile the inflated intervals")
            }
            Error::Field(FieldError::NotPisot(_)) | Error::Field(FieldError::NotUnit(_)) => {
                Some("only Pisot unit inflation factors are supported")
            }
            Error::Window(WindowError::IterationCap { .. }) => Some("raise --max-iter or loosen --tol"),
            Error::Oracle(OracleError::PatchTooSmall { .. }) => Some("the patch is grown to --r; lower --r"),
            Error::Io(_) => Some("pass a rule file path or a bundled name from `spectra fixtures`"),
            _ => None,
        }
    }
}
