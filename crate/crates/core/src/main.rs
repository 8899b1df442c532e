fn main() {
    std::process::exit(phonon_laser::cli::main());
}
