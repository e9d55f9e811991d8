fn main() {
    std::process::exit(matrix_pressure::cli::main());
}
