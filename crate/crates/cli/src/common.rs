use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use ntcf_core::devices::SimplifiedDevice;
use ntcf_core::profile::ParameterProfile;
use ntcf_core::Error;

/// A failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(PathBuf, std::io::Error),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(..) => 3,
            CliError::Core(e) => match e {
                Error::Io(_) => 3,
                Error::Protocol(_) | Error::DecodeFailure => 4,
                Error::Guard { .. } => 5,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(path.to_owned(), e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| CliError::Io(path.to_owned(), e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Prints to stdout, ignoring a closed pipe.
pub fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json value");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Profile selection shared by every subcommand that builds keys.
#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// Shipped profile name.
    #[arg(long, default_value = "desk-small")]
    pub profile: String,
    /// Profile JSON file; overrides --profile.
    #[arg(long, value_name = "PATH")]
    pub profile_file: Option<PathBuf>,
    /// Override the number of rounds N.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub p_test: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
}

impl ProfileArgs {
    pub fn load(&self) -> CliResult<ParameterProfile> {
        let mut p = match &self.profile_file {
            Some(path) => read_json::<ParameterProfile>(path)?,
            None if self.profile == "paper-shape" => {
                return config("paper-shape only reports sizes; use `analyze paper-shape`")
            }
            None => ParameterProfile::named(&self.profile)?,
        };
        if let Some(n) = self.rounds {
            p.protocol.rounds = n;
        }
        if let Some(v) = self.p_test {
            p.protocol.p_test = v;
        }
        if let Some(v) = self.gamma {
            p.protocol.gamma = v;
        }
        if let Some(v) = self.kappa {
            p.protocol.kappa = v;
        }
        p.validate()?;
        let violated = p.conditions().violated();
        if !violated.is_empty() {
            eprintln!("warning: profile {} is insecure; violated conditions: {}", p.name, violated.join(", "));
        }
        Ok(p)
    }
}

/// `honest-qubit` or a device JSON file.
pub fn load_device(spec: &str) -> CliResult<SimplifiedDevice> {
    if spec == "honest-qubit" {
        return Ok(SimplifiedDevice::honest_qubit());
    }
    let raw: SimplifiedDevice = read_json(Path::new(spec))?;
    Ok(SimplifiedDevice::new(raw.branches().to_vec())?)
}
