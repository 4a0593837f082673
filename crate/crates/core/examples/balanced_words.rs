//! Balance, with witnesses, for Sturmian prefixes and a few finite words.

use stabset::props::{is_balanced, is_balanced_oracle, verify_witness};
use stabset::sadic::generate_prefix;
use stabset::{Alphabet, DirectiveSpec};

fn main() -> stabset::Result<()> {
    let ab = Alphabet::latin(2)?;
    for text in ["(La Rb)^w", "(La La Lb)^w", "Rb (Lb Ra Ra)^w"] {
        let w = generate_prefix(&DirectiveSpec::parse(text)?, 2000, None)?;
        println!("{text}: {}", is_balanced(&w).verdict);
    }
    for text in ["abaababaab", "aababb", "abba", "aaabaaab"] {
        let w = ab.word(text)?;
        let fast = is_balanced(&w);
        let slow = is_balanced_oracle(&w);
        assert_eq!(fast.verdict.is_holds(), slow.verdict.is_holds());
        match fast.verdict.witness() {
            Some(wit) => println!("{w}: {wit} (checked: {:?})", verify_witness(&w, wit)),
            None => println!("{w}: {}", fast.verdict),
        }
    }
    Ok(())
}
