use std::path::PathBuf;

use clap::Subcommand;
use rtmon::corpus::{case, replay, CorpusCase, CASES, GEOFENCE_POLYGON};

use crate::{Failure, EXIT_FAILURE};

#[derive(Subcommand)]
pub enum CorpusCommand {
    /// List the cases and their fixtures.
    List,
    /// Check every case and replay every fixture against its golden verdicts.
    Verify {
        /// Limit to one case.
        case: Option<String>,
    },
    /// Write a case's specification, fixtures and goldens to a directory.
    Export { case: String, dir: PathBuf },
}

fn find(name: &str) -> Result<&'static CorpusCase, Failure> {
    case(name).ok_or_else(|| {
        let names: Vec<&str> = CASES.iter().map(|c| c.name).collect();
        Failure::usage(format!("unknown corpus case `{name}`; available: {}", names.join(", ")))
    })
}

pub fn corpus(cmd: &CorpusCommand) -> Result<u8, Failure> {
    match cmd {
        CorpusCommand::List => {
            for c in CASES {
                let fixtures: Vec<&str> = c.fixtures.iter().map(|f| f.name).collect();
                println!("{:<10} {} [{}]", c.name, c.title, fixtures.join(", "));
            }
            Ok(0)
        }
        CorpusCommand::Verify { case } => {
            let cases = match case {
                Some(name) => vec![find(name)?],
                None => CASES.iter().collect(),
            };
            let mut failed = 0;
            for c in cases {
                for f in c.fixtures {
                    let outcome = match replay(c.spec, f.trace) {
                        Ok((verdicts, _)) if verdicts == f.golden => "ok",
                        Ok(_) => "MISMATCH",
                        Err(_) => "ERROR",
                    };
                    if outcome != "ok" {
                        failed += 1;
                    }
                    println!("{outcome:<8} {}/{}", c.name, f.name);
                }
            }
            Ok(if failed > 0 { EXIT_FAILURE } else { 0 })
        }
        CorpusCommand::Export { case, dir } => {
            let c = find(case)?;
            let write = |name: &str, text: &str| {
                std::fs::write(dir.join(name), text).map_err(|e| Failure::failed(format!("cannot write {}: {e}", dir.join(name).display())))
            };
            std::fs::create_dir_all(dir).map_err(|e| Failure::failed(format!("cannot create {}: {e}", dir.display())))?;
            write("spec.lola", c.spec)?;
            if c.name == "geofence" {
                write("fence.txt", GEOFENCE_POLYGON)?;
            }
            for f in c.fixtures {
                write(&format!("{}.csv", f.name), f.trace)?;
                write(&format!("{}.ndjson", f.name), f.golden)?;
            }
            Ok(0)
        }
    }
}
