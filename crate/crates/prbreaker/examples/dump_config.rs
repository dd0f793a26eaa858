//! Print the default config with every overridable key, ready to edit.

use prbreaker::config::ToolConfig;

fn main() {
    let config = ToolConfig::default();
    config.validate().expect("defaults validate");
    print!("{}", config.to_toml_string());
}
