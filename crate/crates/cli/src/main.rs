use std::io::Write;

fn main() {
    let outcome = sanov_cli::execute(
        std::env::args_os(),
        std::env::var(sanov_cli::commands::BUDGET_ENV).ok(),
    );
    std::io::stdout().write_all(outcome.stdout.as_bytes()).ok();
    std::io::stderr().write_all(outcome.stderr.as_bytes()).ok();
    std::process::exit(outcome.code);
}
