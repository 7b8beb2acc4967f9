use serde_json::{Map, Value};

/// Ordered key/value output, printed as aligned text or as one JSON object.
#[derive(Default)]
pub struct Report {
    rows: Vec<(String, Value, String)>,
}

impl Report {
    pub fn int(&mut self, key: &str, v: u64) -> &mut Self {
        self.rows.push((key.into(), v.into(), v.to_string()));
        self
    }

    /// Full precision in JSON, `decimals` places in text.
    pub fn float(&mut self, key: &str, v: f64, decimals: usize) -> &mut Self {
        self.rows.push((key.into(), v.into(), format!("{v:.decimals$}")));
        self
    }

    pub fn text(&mut self, key: &str, v: &str) -> &mut Self {
        self.rows.push((key.into(), v.into(), v.into()));
        self
    }

    pub fn list(&mut self, key: &str, v: &[u32]) -> &mut Self {
        let text = v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        self.rows.push((key.into(), v.into(), text));
        self
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let map: Map<String, Value> = self.rows.iter().map(|(k, v, _)| (k.clone(), v.clone())).collect();
            return Value::Object(map).to_string();
        }
        let width = self.rows.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
        self.rows.iter().map(|(k, _, t)| format!("{k:<width$}  {t}")).collect::<Vec<_>>().join("\n")
    }
}
