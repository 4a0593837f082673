//! Decomposition of morphisms into L, R and exchange generators.

use stabset::morphism::{classify_episturmian_preserving, classify_sturmian_preserving};
use stabset::Morphism;

fn main() -> stabset::Result<()> {
    let cases = [
        "a -> ab\nb -> a\n",
        "a -> aab\nb -> ab\n",
        "a -> ab\nb -> ba\n",
        "a -> a\nb -> bac\nc -> baca\n",
        "a -> ab\nb -> ac\nc -> a\n",
    ];
    for text in cases {
        let f = Morphism::parse(text)?;
        print!("{}: {}", f.compact(), classify_episturmian_preserving(&f));
        if f.alphabet().len() == 2 {
            print!(", sturmian {}", classify_sturmian_preserving(&f)?);
        }
        println!();
    }
    Ok(())
}
