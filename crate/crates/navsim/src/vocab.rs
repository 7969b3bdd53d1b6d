//! Fixed 64-token instruction vocabulary.

pub const VOCAB_SIZE: usize = 64;
pub const N_LANDMARKS: usize = 40;

const LANDMARK_BASE: usize = 21;

#[rustfmt::skip]
const TOKENS: [&str; VOCAB_SIZE] = [
    "<unk>",
    "go", "walk", "head", "move", "proceed",
    "to", "the", "at", "then", "and",
    "turn", "veer", "left", "right", "straight", "around",
    "stop", "halt", "wait",
    "forward",
    // landmarks
    "kitchen", "hallway", "stairs", "door", "sofa", "table", "lamp", "plant",
    "window", "mirror", "bed", "desk", "shelf", "piano", "rug", "fireplace",
    "balcony", "closet", "fridge", "oven", "sink", "bathtub", "toilet", "tv",
    "bookcase", "painting", "statue", "fountain", "pillar", "arch", "bench",
    "cabinet", "counter", "stool", "vase", "clock", "chandelier", "curtain",
    "dresser", "wardrobe",
    "near", "past", "room",
];

/// Synonym groups used for noisy-instruction substitution.
const SYNONYMS: [&[&str]; 3] = [
    &["go", "walk", "head", "move", "proceed"],
    &["stop", "halt", "wait"],
    &["turn", "veer"],
];

pub fn token(id: usize) -> &'static str {
    TOKENS[id]
}

pub fn token_id(tok: &str) -> usize {
    TOKENS.iter().position(|t| *t == tok).unwrap_or(0)
}

pub fn landmark_token(landmark: usize) -> usize {
    assert!(landmark < N_LANDMARKS, "landmark {landmark} out of range");
    LANDMARK_BASE + landmark
}

pub fn is_landmark_token(id: usize) -> bool {
    (LANDMARK_BASE..LANDMARK_BASE + N_LANDMARKS).contains(&id)
}

/// Other members of the token's synonym group, if any.
pub fn synonyms_of(id: usize) -> Vec<usize> {
    let name = TOKENS[id];
    for group in SYNONYMS {
        if group.contains(&name) {
            return group
                .iter()
                .filter(|t| **t != name)
                .map(|t| token_id(t))
                .collect();
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_consistent() {
        assert_eq!(TOKENS.len(), VOCAB_SIZE);
        let mut sorted: Vec<&str> = TOKENS.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), VOCAB_SIZE, "duplicate tokens");
        assert!(is_landmark_token(landmark_token(0)));
        assert!(is_landmark_token(landmark_token(N_LANDMARKS - 1)));
        assert_eq!(token_id("go"), 1);
        assert_eq!(synonyms_of(token_id("go")).len(), 4);
        assert!(synonyms_of(token_id("left")).is_empty());
    }
}
