use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: qaction_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical { source, .. } if source.is_numerical() => 2,
            _ => 1,
        }
    }

    pub fn at(stage: &'static str) -> impl FnOnce(qaction_core::Error) -> RunError {
        move |source| RunError::Numerical { stage, source }
    }
}

impl From<qaction_core::Error> for RunError {
    fn from(e: qaction_core::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical { stage: "model", source: e }
        } else {
            RunError::Config {
                field: "model".into(),
                reason: e.to_string(),
            }
        }
    }
}
