use clap::Parser;

fn main() {
    let args = refugium::cli::Args::parse();
    std::process::exit(refugium::cli::main_with(&args));
}
