mod args;
mod cfgfile;
mod commands;
mod errors;
mod resolve;

use clap::Parser;

use args::{Cli, Cmd};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Prepare(a) => commands::cmd_prepare(a),
        Cmd::Train(a) => commands::cmd_train(a),
        Cmd::Eval(a) => commands::cmd_eval(a),
        Cmd::Infer(a) => commands::cmd_infer(a),
        Cmd::Count(a) => commands::cmd_count(a),
        Cmd::Time(a) => commands::cmd_time(a),
        Cmd::Gradcheck(a) => commands::cmd_gradcheck(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
