use std::fmt;

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, unparseable, or missing input; exit code 2.
    Input(anyhow::Error),
    /// Estimation or simulation failure on valid input; exit code 1.
    Compute(anyhow::Error),
}

impl Failure {
    pub fn input(msg: impl fmt::Display) -> Self {
        Failure::Input(anyhow::anyhow!("{msg}"))
    }

    pub fn compute(msg: impl fmt::Display) -> Self {
        Failure::Compute(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "input error: {e:#}"),
            Failure::Compute(e) => write!(f, "computation error: {e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

pub trait ResultExt<T> {
    fn input_err(self, context: impl fmt::Display) -> Result<T, Failure>;
    fn compute_err(self, context: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn input_err(self, context: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into().context(context.to_string())))
    }

    fn compute_err(self, context: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::Compute(e.into().context(context.to_string())))
    }
}
