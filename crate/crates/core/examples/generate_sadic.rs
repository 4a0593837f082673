//! Prefixes of S-adic words for a few directive sequences.

use stabset::sadic::{generate_prefix, validate_directive_for_family, Family, FamilyDescriptor};
use stabset::{Alphabet, DirectiveSpec};

fn main() -> stabset::Result<()> {
    let ab = Alphabet::latin(2)?;
    let fib = DirectiveSpec::parse("(La Lb)^w")?;
    println!("{fib}: {}", generate_prefix(&fib, 40, None)?);

    let sturm = FamilyDescriptor::new(Family::from_name("SSturm").unwrap(), &ab)?;
    for text in ["(La Rb)^w", "Lb Ra (La Lb Rb Ra)^w", "(Eab)^w"] {
        let spec = DirectiveSpec::parse(text)?;
        let v = validate_directive_for_family(&spec, &sturm);
        if v.valid {
            println!("{spec}: {}", generate_prefix(&spec, 40, None)?);
        } else {
            println!("{spec}: not in {}: {}", sturm.family, v.reason);
        }
    }

    // R_b fixes both a b^ω and b^ω; the seed picks the chain.
    let rb = DirectiveSpec::parse("(Rb)^w")?;
    println!("{rb}: {}", generate_prefix(&rb, 12, None)?);
    println!("{rb} from b: {}", generate_prefix(&rb, 12, ab.letter('b'))?);
    Ok(())
}
