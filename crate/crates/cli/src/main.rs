use cafe_cli::config::parse_config;
use cafe_cli::{parse_flags, run_subcommand, USAGE};

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(subcommand) = args.first() else {
        eprintln!("{USAGE}");
        return 2;
    };
    if subcommand == "--help" || subcommand == "-h" || subcommand == "help" {
        println!("{USAGE}");
        return 0;
    }

    let flags = match parse_flags(&args[1..]) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    // peel off --config; everything else overrides config keys
    let mut config_path = None;
    let mut overrides = Vec::new();
    for (key, value) in flags {
        if key == "config" {
            config_path = Some(value);
        } else {
            overrides.push((key, value));
        }
    }
    let file_text = match &config_path {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => {
                eprintln!("error: cannot read config {path}: {e}");
                return 1;
            }
        },
        None => None,
    };
    let cfg = match parse_config(file_text.as_deref(), &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match run_subcommand(subcommand, &cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
