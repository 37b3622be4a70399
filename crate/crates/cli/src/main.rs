use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match x4p_cli::run_args(std::env::args_os()) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(outcome.text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(x4p_cli::EXIT_CONFIG as u8);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprint!("{}", e.message);
            if !e.message.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.code as u8)
        }
    }
}
