use clap::Parser;
use procstory_cli::{log, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let code = e.exit_code();
        log::event("error", serde_json::json!({ "code": code, "message": e.to_string() }));
        std::process::exit(code);
    }
}
