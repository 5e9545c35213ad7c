use std::io::Write;

fn main() {
    let result = hgx::cli::dispatch(std::env::args_os());
    std::io::stdout().write_all(result.stdout.as_bytes()).ok();
    std::io::stderr().write_all(result.stderr.as_bytes()).ok();
    std::process::exit(result.exit_code);
}
