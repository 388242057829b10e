//! Counter-based child seeds, so that every record depends only on its
//! coordinates and not on scheduling.

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `master` and a coordinate tuple.
pub fn child_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Stable 64-bit tag of a name (FNV-1a).
pub fn name_tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

const INPUT_STREAM: u64 = 1;
const SELECT_STREAM: u64 = 2;
const CORRUPT_STREAM: u64 = 3;

/// Seed for the inputs of trial `(m, trial)`, shared by all rules.
pub fn input_seed(master: u64, m: u64, trial: u64) -> u64 {
    child_seed(master, &[INPUT_STREAM, m, trial])
}

/// Seed for a rule's uniform choice in trial `(m, trial)`.
pub fn selection_seed(master: u64, rule: &str, m: u64, trial: u64) -> u64 {
    child_seed(master, &[SELECT_STREAM, name_tag(rule), m, trial])
}

/// Seed for label corruption in trial `(m, trial)`, shared by all rules.
pub fn corruption_seed(master: u64, m: u64, trial: u64) -> u64 {
    child_seed(master, &[CORRUPT_STREAM, m, trial])
}
