use std::process::exit;

fn main() {
    exit(trilinear::cli::run());
}
