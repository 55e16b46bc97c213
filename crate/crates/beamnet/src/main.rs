fn main() {
    std::process::exit(beamnet::cli::main());
}
