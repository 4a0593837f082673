//! Parse trees of a finite word under a set of substitutions.

use stabset::desub::{balanced_desub_step, directive_parses, SubstitutionSet};
use stabset::sadic::generate_prefix;
use stabset::{Alphabet, DirectiveSpec, Morphism};

fn main() -> stabset::Result<()> {
    let ab = Alphabet::latin(2)?;
    let tm = Morphism::from_images(&ab, &["ab", "ba"])?;
    let set = SubstitutionSet::single("tm", &tm);
    let w = tm.fixed_point_prefix(ab.require('a')?, 32)?;
    let tree = directive_parses(&w, &set, 4, 1000)?;
    print!("{}", tree.render_text());
    println!("outcome: {:?}\n", tree.outcome());

    let fib = generate_prefix(&DirectiveSpec::parse("(La Lb)^w")?, 21, None)?;
    let sbal = SubstitutionSet::from_generators(&ab, &["La", "Lb", "Ra", "Rb", "Eab"])?;
    let tree = directive_parses(&fib, &sbal, 3, 50)?;
    print!("{}", tree.render_text());
    println!("outcome: {:?}\n", tree.outcome());

    // One step of the balanced table, applied until the word runs out.
    let mut w = fib;
    while w.len() > 1 {
        let (g, p) = balanced_desub_step(&w)?;
        println!("{w} = {g}({}) with residue {}", p.preimage, p.residue);
        w = p.preimage;
    }
    Ok(())
}
