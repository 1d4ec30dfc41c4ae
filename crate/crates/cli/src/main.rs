use clap::Parser;
use hyperising_cli::{execute, read_spec, run_spec, write_file, Cli, Command};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match go(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn go(cli: &Cli) -> hyperising::Result<i32> {
    let (rep, code) = if let Command::Run { spec } = &cli.command {
        run_spec(&read_spec(spec)?)?
    } else {
        let rep = execute(cli)?;
        let text = rep.render(cli.global.format)?;
        match &cli.global.out {
            Some(p) => write_file(p, &text)?,
            None => print!("{text}"),
        }
        let code = rep.exit_code();
        (rep, code)
    };
    for f in &rep.flags {
        eprintln!("{f}");
    }
    Ok(code)
}
