use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

pub(super) const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

pub(super) const ADJECTIVES: &[&str] = &[
    "Smart", "Quick", "Daily", "Expert", "Friendly", "Creative", "Precise", "Global", "Personal",
    "Instant", "Clever", "Handy", "Bright", "Swift", "Trusty",
];

pub(super) const NOUNS: &[&str] = &[
    "Writer",
    "Tutor",
    "Coder",
    "Planner",
    "Translator",
    "Analyst",
    "Designer",
    "Researcher",
    "Coach",
    "Chef",
    "Advisor",
    "Reader",
    "Scholar",
    "Editor",
    "Navigator",
    "Composer",
];

pub(super) const CAPABILITIES: &[&str] = &["web_browsing", "image_generation", "code_interpreter"];

const DOMAIN_WORDS: &[&str] = &[
    "alpha", "amber", "api", "atlas", "beacon", "birch", "bolt", "cedar", "cloud", "comet",
    "coral", "delta", "ember", "fable", "fern", "flux", "gale", "grove", "harbor", "helix", "iris",
    "jade", "kite", "lumen", "maple", "mesa", "nova", "onyx", "orbit", "pixel", "prism", "quartz",
    "raven", "ridge", "sage", "sierra", "spark", "tide", "umber", "vale", "vector", "willow",
    "zephyr",
];

const POLICY_SENTENCES: &[&str] = &[
    "We collect the information you provide when you use the service",
    "Request data sent by the assistant is processed only to fulfil your query",
    "We do not sell personal information to third parties",
    "Logs are retained for thirty days and then deleted",
    "You may request access to or deletion of your data at any time",
    "Aggregated usage statistics help us improve reliability",
    "Data is encrypted in transit and at rest",
    "We share data with subprocessors bound by confidentiality obligations",
    "Cookies are used only to keep you signed in",
    "Questions about this policy can be sent to our privacy team",
];

/// Unique `{word}.{word}.test` host names.
#[derive(Default)]
pub(super) struct DomainPool {
    used: HashSet<String>,
}

impl DomainPool {
    pub(super) fn next(&mut self, rng: &mut impl Rng) -> String {
        loop {
            let a = DOMAIN_WORDS.choose(rng).expect("non-empty");
            let b = DOMAIN_WORDS.choose(rng).expect("non-empty");
            let candidate = if self.used.len() < DOMAIN_WORDS.len() * DOMAIN_WORDS.len() / 2 {
                format!("{a}.{b}.test")
            } else {
                format!("{a}{}.{b}.test", rng.gen_range(0..100_000))
            };
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

/// Policy-like text naming `domain`, at least 200 characters.
pub(super) fn policy_text(rng: &mut impl Rng, domain: &str) -> String {
    let mut text = format!("Privacy Policy for {domain}.");
    while text.len() < 200 {
        let s = POLICY_SENTENCES.choose(rng).expect("non-empty");
        text.push(' ');
        text.push_str(s);
        text.push('.');
    }
    text
}
