fn main() { std::process::exit(burgers_lab::cli::dispatch(std::env::args().skip(1).collect())); }
