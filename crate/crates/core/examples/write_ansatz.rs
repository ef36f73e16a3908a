//! Regenerates `data/ansatz/*.toml` from the built-in presets. Run from the workspace root.

fn main() {
    for (name, c) in shotwise::simulator::presets::all() {
        std::fs::write(format!("data/ansatz/{name}.toml"), c.to_toml_string()).unwrap();
    }
}
