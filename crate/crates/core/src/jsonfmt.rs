//! Deterministic line-oriented JSON writer for the canonical file formats.
//!
//! Top-level objects get one key per line and nested row arrays get one row
//! per line, so files diff well and the same value always prints the same
//! bytes. Floats go through `serde_json`, which prints the shortest string
//! that parses back to the identical `f64`.

use serde::Serialize;

pub(crate) struct ObjectWriter {
    buf: String,
    first: bool,
}

impl ObjectWriter {
    pub fn new() -> Self {
        ObjectWriter {
            buf: String::from("{\n"),
            first: true,
        }
    }

    fn key(&mut self, key: &str) {
        if !self.first {
            self.buf.push_str(",\n");
        }
        self.first = false;
        self.buf.push_str("  ");
        self.buf.push_str(&serde_json::to_string(key).expect("string key"));
        self.buf.push_str(": ");
    }

    pub fn field<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) {
        self.key(key);
        self.buf
            .push_str(&serde_json::to_string(value).expect("serializable value"));
    }

    /// Array whose elements each occupy one line.
    pub fn rows<T: Serialize>(&mut self, key: &str, rows: impl IntoIterator<Item = T>) {
        self.key(key);
        self.buf.push('[');
        let mut any = false;
        for row in rows {
            self.buf.push_str(if any { ",\n    " } else { "\n    " });
            self.buf
                .push_str(&serde_json::to_string(&row).expect("serializable row"));
            any = true;
        }
        self.buf.push_str(if any { "\n  ]" } else { "]" });
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("\n}\n");
        self.buf
    }
}
