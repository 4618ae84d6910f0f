fn main() { std::process::exit(pilotforge_cli::run(std::env::args_os().collect())); }
