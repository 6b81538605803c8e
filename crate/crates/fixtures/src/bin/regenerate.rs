//! Rewrites the shipped data directory from the builders in the library.

fn main() {
    let dir = std::env::args_os()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(foonforge_fixtures::data_dir);
    if let Err(err) = foonforge_fixtures::write_all(&dir) {
        eprintln!("regenerate-fixtures: {}: {err}", dir.display());
        std::process::exit(2);
    }
    println!("wrote {} files under {}", foonforge_fixtures::build().len(), dir.display());
}
