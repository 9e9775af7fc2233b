//! Provenance header written at the top of every output: the command line,
//! SHA-256 of each input, tolerances and the library version. A timestamp
//! is recorded only on request so repeated runs stay byte-identical.

use sha2::{Digest, Sha256};

pub struct Manifest {
    command: Vec<String>,
    inputs: Vec<(String, String, String)>,
    tolerances: Vec<(String, f64)>,
    notes: Vec<String>,
    timestamp: Option<u64>,
}

impl Manifest {
    /// `args` excludes the program name. `--jobs` is left out of the
    /// recorded command because results do not depend on it.
    pub fn new(args: Vec<String>, timestamp: bool) -> Self {
        let mut command = vec!["qgraph".to_string()];
        let mut skip_next = false;
        for a in args {
            if skip_next {
                skip_next = false;
                continue;
            }
            if a == "--jobs" {
                skip_next = true;
                continue;
            }
            if a.starts_with("--jobs=") {
                continue;
            }
            command.push(a);
        }
        let timestamp = timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            command,
            inputs: Vec::new(),
            tolerances: Vec::new(),
            notes: Vec::new(),
            timestamp,
        }
    }

    pub fn input(&mut self, role: &str, name: &str, bytes: &[u8]) {
        let digest = hex::encode(Sha256::digest(bytes));
        self.inputs.push((role.to_string(), name.to_string(), digest));
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.push((name.to_string(), value));
    }

    pub fn note(&mut self, text: String) {
        self.notes.push(text);
    }

    /// Header lines without a comment prefix.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("qgraph {}", env!("CARGO_PKG_VERSION")),
            format!("command: {}", self.command.join(" ")),
        ];
        for (role, name, digest) in &self.inputs {
            out.push(format!("input {role}: {name} sha256:{digest}"));
        }
        for (name, value) in &self.tolerances {
            out.push(format!("tolerance {name}: {value:e}"));
        }
        out.extend(self.notes.iter().cloned());
        out.push("convention: leads carry a_in e^{-ikx} + a_out e^{ikx}; resonances lie in Im k < 0".to_string());
        if let Some(t) = self.timestamp {
            out.push(format!("timestamp: unix {t}"));
        }
        out
    }

    pub fn to_value(&self) -> serde_json::Value {
        let inputs: Vec<_> = self
            .inputs
            .iter()
            .map(|(role, name, digest)| serde_json::json!({"role": role, "name": name, "sha256": digest}))
            .collect();
        let tolerances: serde_json::Map<String, serde_json::Value> = self
            .tolerances
            .iter()
            .map(|(n, v)| (n.clone(), serde_json::json!(v)))
            .collect();
        let mut value = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command.join(" "),
            "inputs": inputs,
            "tolerances": tolerances,
            "notes": self.notes,
        });
        if let Some(t) = self.timestamp {
            value["timestamp_unix"] = serde_json::json!(t);
        }
        value
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("manifest serializes");
        s.push('\n');
        s
    }
}
