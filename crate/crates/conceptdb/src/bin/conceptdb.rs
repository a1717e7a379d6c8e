use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use conceptdb::dsl::{parse, render_error, run_script, Session};
use conceptdb::io::{export_csv, import_csv, load_snapshot, save_snapshot};
use std::fs::File;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conceptdb", version, about = "Set-and-function data engine", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a script file
    Run {
        script: PathBuf,
        /// Load this snapshot before running
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Read statements interactively; `\q` exits
    Repl {
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Import a CSV file into an entity set of a snapshot
    Import {
        csv: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Export paths of a set from a snapshot to CSV
    Export {
        #[arg(long)]
        set: String,
        /// Comma-separated dot paths, e.g. name,price or product.price
        #[arg(long)]
        paths: String,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn session_from(snapshot: Option<&PathBuf>) -> Result<Session, String> {
    let mut session = Session::new();
    if let Some(path) = snapshot {
        let file = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
        let (schema, state) = load_snapshot(file).map_err(|e| e.to_string())?;
        session.schema = schema;
        session.state = state;
    }
    Ok(session)
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { script, snapshot } => {
            let text = std::fs::read_to_string(&script)
                .map_err(|e| format!("cannot read {}: {e}", script.display()))?;
            let mut session = session_from(snapshot.as_ref())?;
            let stdout = std::io::stdout();
            run_script(&mut session, &text, &mut stdout.lock())
        }
        Command::Repl { snapshot } => {
            let mut session = session_from(snapshot.as_ref())?;
            repl(&mut session);
            Ok(())
        }
        Command::Import { csv, set, snapshot } => {
            // a missing snapshot file means "start from an empty engine"
            let mut session = if snapshot.exists() {
                session_from(Some(&snapshot))?
            } else {
                Session::new()
            };
            if session.schema.set(&set).is_none() {
                session.schema.define_entity_set(&set).map_err(|e| e.to_string())?;
            }
            let file = File::open(&csv).map_err(|e| format!("cannot open {}: {e}", csv.display()))?;
            let n = import_csv(file, &set, &mut session.schema, &mut session.state)
                .map_err(|e| e.to_string())?;
            let out = File::create(&snapshot)
                .map_err(|e| format!("cannot write {}: {e}", snapshot.display()))?;
            save_snapshot(&session.schema, &mut session.state, out).map_err(|e| e.to_string())?;
            println!("{n} rows imported into {set}");
            Ok(())
        }
        Command::Export { set, paths, snapshot, out } => {
            let mut session = session_from(Some(&snapshot))?;
            let paths: Vec<Vec<String>> = paths
                .split(',')
                .map(|p| p.split('.').map(|s| s.trim().to_string()).collect())
                .collect();
            conceptdb::evaluate(&session.schema, &mut session.state).map_err(|e| e.to_string())?;
            let file =
                File::create(&out).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            let n = export_csv(&set, &paths, &session.schema, &session.state, file)
                .map_err(|e| e.to_string())?;
            println!("{n} rows exported from {set}");
            Ok(())
        }
    }
}

/// Statements end at `;` and may span lines; errors never end the session.
fn repl(session: &mut Session) {
    let stdin = std::io::stdin();
    let mut buffer = String::new();
    print!("> ");
    let _ = std::io::stdout().flush();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim() == "\\q" {
            break;
        }
        buffer.push_str(&line);
        buffer.push('\n');
        if statement_complete(&buffer) {
            let text = std::mem::take(&mut buffer);
            match parse(&text) {
                Ok(stmts) => {
                    let stdout = std::io::stdout();
                    let mut out = stdout.lock();
                    for stmt in &stmts {
                        if let Err(e) = session.execute(stmt, &mut out) {
                            println!("{}", render_error(&e, stmt.line, stmt.col));
                            break;
                        }
                    }
                }
                Err(e) => println!("{}", render_error(&e, 1, 1)),
            }
        }
        print!("{}", if buffer.is_empty() { "> " } else { ". " });
        let _ = std::io::stdout().flush();
    }
}

/// True once the buffer holds a `;` outside of string literals and comments.
fn statement_complete(buffer: &str) -> bool {
    let mut in_string = false;
    let mut escaped = false;
    let mut chars = buffer.chars().peekable();
    while let Some(c) = chars.next() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            ';' => return true,
            '-' if chars.peek() == Some(&'-') => {
                while matches!(chars.peek(), Some(&c) if c != '\n') {
                    chars.next();
                }
            }
            _ => {}
        }
    }
    false
}
