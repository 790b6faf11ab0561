use std::process::ExitCode;

fn main() -> ExitCode {
    match cornercast::cli::main_entry() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
