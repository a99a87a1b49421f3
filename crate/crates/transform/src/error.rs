use ldk_core::DslError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ScriptError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("transform error: {0}")]
    Transform(String),

    #[error(transparent)]
    Runtime(#[from] DslError),
}

impl ScriptError {
    pub fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        ScriptError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    pub fn transform(message: impl Into<String>) -> Self {
        ScriptError::Transform(message.into())
    }
}
