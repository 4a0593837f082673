//! Rewriting an L/R directive so that no R_α meets a word starting with α.

use stabset::sadic::{generate_prefix, normalize_directive, normalized_prefix, render_normalization};
use stabset::DirectiveSpec;

fn main() -> stabset::Result<()> {
    for text in ["(Ra)^w", "La (Rb Ra)^w", "Rb (Ra Lb)^w", "Ra Rb (La Rc Rb)^w"] {
        let spec = DirectiveSpec::parse(text)?;
        let norm = normalize_directive(&spec, 12, None)?;
        println!("{spec}");
        print!("{}", render_normalization(&norm, spec.alphabet()));
        let before = generate_prefix(&spec, 60, None)?;
        let after = normalized_prefix(&spec, &norm, 60)?;
        println!("same word: {}\n", before == after);
    }
    Ok(())
}
