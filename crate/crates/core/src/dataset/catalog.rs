//! Region type catalog and stop-condition phrase bank.

/// The 30 region types used by generated plans, sorted.
pub const REGION_TYPES: [&str; 30] = [
    "balcony",
    "bar",
    "bathroom",
    "bedroom",
    "classroom",
    "closet",
    "conference room",
    "dining booth",
    "dining room",
    "entryway",
    "family room",
    "game room",
    "garage",
    "gym",
    "hallway",
    "kitchen",
    "laundry room",
    "library",
    "living room",
    "lobby",
    "lounge",
    "office",
    "outdoor area",
    "porch",
    "sauna",
    "stairs",
    "storage room",
    "toilet",
    "tv room",
    "utility room",
];

/// Type given to the corridor spine of generated plans.
pub const CORRIDOR_TYPE: &str = "hallway";

/// Stop phrases suited to a goal region type.
pub fn stop_phrases(region_type: &str) -> &'static [&'static str] {
    match region_type {
        "bedroom" => &["next to the bed", "beside the wardrobe"],
        "bathroom" | "toilet" => &["in front of the sink", "near the mirror"],
        "kitchen" => &["by the counter", "next to the fridge"],
        "living room" | "family room" | "tv room" | "lounge" => {
            &["near the sofa", "in front of the television"]
        }
        "dining room" | "dining booth" => &["beside the dining table", "next to the chairs"],
        "office" | "library" | "classroom" => &["at the desk", "in front of the bookshelf"],
        "garage" => &["next to the car", "by the workbench"],
        "gym" => &["beside the treadmill", "near the weights"],
        "laundry room" | "utility room" => &["in front of the washer", "near the shelves"],
        "balcony" | "porch" | "outdoor area" => &["by the railing", "near the plants"],
        "closet" | "storage room" => &["in front of the shelves", "just inside the door"],
        "stairs" => &["at the bottom of the stairs", "by the banister"],
        "bar" => &["at the counter", "next to the stools"],
        "conference room" => &["at the head of the table", "near the screen"],
        "game room" => &["next to the pool table", "beside the arcade machine"],
        "sauna" => &["near the bench", "just inside the door"],
        "entryway" | "lobby" => &["by the front door", "near the coat rack"],
        _ => &["in the middle of the room", "just inside the door"],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_sorted_and_distinct() {
        let mut sorted = REGION_TYPES.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, REGION_TYPES.to_vec());
        assert!(REGION_TYPES.contains(&CORRIDOR_TYPE));
        for t in REGION_TYPES {
            assert!(!t.chars().any(|c| c.is_ascii_digit()));
            assert!(!stop_phrases(t).is_empty());
        }
    }
}
