use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

fn innermost(e: &qpump::Error) -> &qpump::Error {
    match e {
        qpump::Error::AtPoint { source, .. } => innermost(source),
        other => other,
    }
}

impl From<qpump::Error> for CliError {
    fn from(e: qpump::Error) -> Self {
        use qpump::Error::*;
        let text = e.to_string();
        match innermost(&e) {
            InvalidAxis(_) | SiteOutOfRange { .. } | DimensionMismatch { .. } | InvalidConfig(_) | OutsideGrid { .. }
            | GridTooCoarse(_) | NoCoupling | Unsupported(_) => CliError::Config(text),
            NotHermitian(_) | NotTraceless(_) | NegativeMetric { .. } | BalanceViolation { .. } => CliError::Invariant(text),
            DegenerateKernel { .. } | SingularRestricted { .. } | BasisMismatch | QuadratureNotConverged { .. } | AtPoint { .. } => {
                CliError::Numerical(text)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_the_inner_error() {
        let wrapped = qpump::Error::AtPoint {
            point: vec![1.0, 0.5],
            source: Box::new(qpump::Error::BalanceViolation {
                residual: 1.0,
                relative: 1.0,
            }),
        };
        let e = CliError::from(wrapped);
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("[1.0, 0.5]"));
        assert_eq!(CliError::from(qpump::Error::DegenerateKernel { dim: 2 }).exit_code(), 4);
        assert_eq!(CliError::from(qpump::Error::InvalidConfig("x".into())).exit_code(), 2);
    }
}
