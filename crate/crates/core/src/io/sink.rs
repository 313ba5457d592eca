use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::str::FromStr;

/// Where verdict payloads go: `stdout`, `file:<path>` or `tcp:<addr>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkSpec {
    Stdout,
    File(PathBuf),
    /// Connects to a listening consumer such as a ground station.
    Tcp(String),
}

impl FromStr for SinkSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "stdout" => Ok(SinkSpec::Stdout),
            Some(("file", p)) if !p.is_empty() => Ok(SinkSpec::File(p.into())),
            Some(("tcp", a)) if !a.is_empty() => Ok(SinkSpec::Tcp(a.into())),
            _ => Err(format!("unknown sink `{s}`; expected stdout, file:<path> or tcp:<addr>")),
        }
    }
}

impl fmt::Display for SinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinkSpec::Stdout => f.write_str("stdout"),
            SinkSpec::File(p) => write!(f, "file:{}", p.display()),
            SinkSpec::Tcp(a) => write!(f, "tcp:{a}"),
        }
    }
}

pub fn open_sink(spec: &SinkSpec) -> io::Result<Box<dyn Write + Send>> {
    Ok(match spec {
        SinkSpec::Stdout => Box::new(io::stdout()),
        SinkSpec::File(p) => Box::new(BufWriter::new(File::create(p)?)),
        SinkSpec::Tcp(a) => {
            let stream = TcpStream::connect(a)?;
            stream.set_nodelay(true)?;
            Box::new(stream)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sink_strings() {
        for s in ["stdout", "file:out.ndjson", "tcp:127.0.0.1:9100"] {
            assert_eq!(s.parse::<SinkSpec>().unwrap().to_string(), s);
        }
        assert!("stderr".parse::<SinkSpec>().is_err());
        assert!("file:".parse::<SinkSpec>().is_err());
    }
}
