use std::fmt;

/// A failed command, carrying the exit code class.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs: exit 2.
    Usage(String),
    /// The numerics did not deliver: exit 3.
    Numeric(String),
    /// Anything else, mostly I/O: exit 1.
    Other(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    pub fn usage(flag: &str, reason: impl fmt::Display) -> Self {
        Failure::Usage(format!("{flag}: {reason}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

/// Command-line flag that sets a library parameter.
fn flag_for(name: &str) -> String {
    match name {
        "L" | "K" => format!("--{name}"),
        "resistances" => "--r".into(),
        "capacitances" => "--c".into(),
        "n" => "--ladder".into(),
        "omegas" => "--omega-min/--omega-max".into(),
        "weight_grid" => "--weights".into(),
        "optimizer" => "--max-iterations/--tolerance".into(),
        other => format!("--{}", other.replace('_', "-")),
    }
}

impl From<fopfdd::Error> for Failure {
    fn from(e: fopfdd::Error) -> Self {
        match e {
            fopfdd::Error::InvalidParameter { name, reason } => Failure::usage(&flag_for(name), reason),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.into())
    }
}

pub type CliResult<T> = Result<T, Failure>;
