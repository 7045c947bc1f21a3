use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Runtime,
    Io,
}

/// Failure that maps to exit status 1, printed to stderr as one JSON object.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(key: Option<String>, message: impl Into<String>) -> CliError {
        CliError {
            kind: ErrorKind::Config,
            key,
            path: None,
            message: message.into(),
        }
    }

    pub fn io(path: String, message: impl Into<String>) -> CliError {
        CliError {
            kind: ErrorKind::Io,
            key: None,
            path: Some(path),
            message: message.into(),
        }
    }

    pub fn from_toml(e: impl std::fmt::Display) -> CliError {
        let message = e.to_string();
        let key = unknown_field(&message);
        CliError::config(key, message.trim().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).unwrap()
    }
}

/// The field named in serde's "unknown field `x`" message.
fn unknown_field(msg: &str) -> Option<String> {
    let rest = &msg[msg.find("unknown field `")? + "unknown field `".len()..];
    Some(rest[..rest.find('`')?].to_string())
}

impl From<msqg::Error> for CliError {
    fn from(e: msqg::Error) -> CliError {
        let (kind, key) = match &e {
            msqg::Error::InvalidParameter { name, .. } => {
                (ErrorKind::Config, Some(name.to_string()))
            }
            msqg::Error::ZeroMode => (ErrorKind::Config, None),
            _ => (ErrorKind::Runtime, None),
        };
        CliError {
            kind,
            key,
            path: None,
            message: e.to_string(),
        }
    }
}
