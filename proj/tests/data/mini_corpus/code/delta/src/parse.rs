use std::num::ParseIntError;

pub fn parse_pairs(text: &str) -> Result<Vec<(String, i64)>, ParseIntError> {
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some((key, value)) = line.split_once('=') {
            out.push((key.trim().to_string(), value.trim().parse()?));
        }
    }
    Ok(out)
}
