use guidelab_tensor::RngState;

/// Deterministic filler prose for byte-level language modeling demos and
/// tests. Word-soup sentences drawn from a fixed lexicon: enough byte
/// structure to learn on, zero external data. Output is ASCII, at least
/// `n_bytes` long, and a pure function of the seed.
pub fn synth_corpus(n_bytes: usize, seed: u64) -> String {
    const WORDS: [&str; 32] = [
        "the", "a", "stone", "river", "lamp", "old", "quiet", "green", "wind", "carries", "holds",
        "turns", "under", "over", "beside", "light", "slow", "deep", "grain", "path", "keeps",
        "falls", "warm", "near", "bright", "cold", "moss", "gate", "iron", "bridge", "rises",
        "long",
    ];
    let mut rng = RngState::with_stream(seed, 0);
    let mut out = String::with_capacity(n_bytes + 64);
    while out.len() < n_bytes {
        let words = rng.next_range_inclusive(4, 9);
        for i in 0..words {
            if i > 0 {
                out.push(' ');
            }
            let w = WORDS[rng.next_below(WORDS.len())];
            if i == 0 {
                let mut chars = w.chars();
                let head = chars.next().unwrap().to_ascii_uppercase();
                out.push(head);
                out.push_str(chars.as_str());
            } else {
                out.push_str(w);
            }
        }
        out.push('.');
        out.push(if rng.next_below(4) == 0 { '\n' } else { ' ' });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_long_enough() {
        let a = synth_corpus(2000, 9);
        let b = synth_corpus(2000, 9);
        assert_eq!(a, b);
        assert!(a.len() >= 2000);
        assert!(a.is_ascii());
        assert_ne!(a, synth_corpus(2000, 10));
    }
}
