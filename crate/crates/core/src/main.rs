use clap::Parser;

fn main() -> std::process::ExitCode {
    chimera_mbl::cli::main_with(chimera_mbl::cli::Cli::parse())
}
