//! Bundled reference solutions, known-flawed variants and demo programs.

macro_rules! corpus_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name)))),*]
    };
}

/// `(file name, document text)` for every bundled program.
pub static FILES: &[(&str, &str)] = corpus_files![
    "aes_round_trip.json",
    "signature_demo.json",
    "task1_caesar.json",
    "task1_reference.json",
    "task2_reference.json",
    "task3_reference.json",
    "task3_reference_text.json",
    "task4_reference.json",
    "task5_reference.json",
    "task6_reference.json",
    "task7_crc32.json",
    "task7_hash_of_hash.json",
    "task7_public_key.json",
    "task7_reference.json",
    "task7_signature_only.json",
    "task8_aes_for_key.json",
    "task8_plaintext.json",
    "task8_reference.json",
    "task8_wrongkey.json",
];

pub fn get(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
