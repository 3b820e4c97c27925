// Kept in its own binary: the variable is process-wide.

use nuspin::cli::{config::OUTPUT_DIR_ENV, validate_config};

#[test]
fn output_dir_variable_overrides_config() {
    std::env::set_var(OUTPUT_DIR_ENV, "/tmp/elsewhere");
    let cfg = validate_config("system.initial = \"me\"\noutput.dir = \"here\"\n").unwrap();
    assert_eq!(cfg.output_dir, std::path::PathBuf::from("/tmp/elsewhere"));
    std::env::remove_var(OUTPUT_DIR_ENV);
    let cfg = validate_config("system.initial = \"me\"\noutput.dir = \"here\"\n").unwrap();
    assert_eq!(cfg.output_dir, std::path::PathBuf::from("here"));
}
