use hsreg_core::ErrorClass;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: m.into(),
        }
    }

    pub fn parse(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: m.into(),
        }
    }

    pub fn data(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: m.into(),
        }
    }

    fn classed(class: ErrorClass, message: String) -> Self {
        let code = match class {
            ErrorClass::Parse => EXIT_PARSE,
            ErrorClass::Convergence => EXIT_CONVERGENCE,
            ErrorClass::Data | ErrorClass::Io => EXIT_DATA,
        };
        Self { code, message }
    }

    /// Prefixes the message with where it happened.
    pub fn context(mut self, what: impl std::fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<hsreg_core::Error> for CliError {
    fn from(e: hsreg_core::Error) -> Self {
        Self::classed(e.class(), e.to_string())
    }
}

impl From<hsreg_nn::NnError> for CliError {
    fn from(e: hsreg_nn::NnError) -> Self {
        Self::classed(e.class(), e.to_string())
    }
}

impl From<hsreg_bench::BenchError> for CliError {
    fn from(e: hsreg_bench::BenchError) -> Self {
        Self::classed(e.class(), e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::parse(e.to_string())
    }
}
