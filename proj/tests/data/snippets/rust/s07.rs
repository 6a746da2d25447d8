fn first(words: Vec<String>) -> Option<String> {
    match words.len() {
        0 => None,
        _ => Some(words[0].clone()),
    }
}
