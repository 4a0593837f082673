//! StabLet graphs of substitution sets and stable sets of directives.

use std::collections::BTreeMap;

use stabset::desub::{
    desubstitutes_indefinitely, genstabfin_bounded, stablet_graph, stablet_of_directive, stabultlet_bounded,
    SubstitutionSet,
};
use stabset::sadic::{family_members, Family, FamilyDescriptor};
use stabset::{Alphabet, DirectiveSpec, Morphism};

fn main() -> stabset::Result<()> {
    let ab = Alphabet::latin(2)?;
    print!("{}", stablet_graph(&SubstitutionSet::from_generators(&ab, &["La", "Lb"])?).render_text());
    let lynd = family_members(&FamilyDescriptor::new(Family::from_name("SLynd").unwrap(), &ab)?, 3)?;
    print!("{}", stablet_graph(&lynd).render_text());

    let abc = Alphabet::latin(3)?;
    let f = Morphism::from_images(&abc, &["bc", "b", "c"])?;
    let reg: BTreeMap<String, Morphism> = [("f".to_string(), f)].into_iter().collect();
    let spec = DirectiveSpec::parse_with("f (id)^w", Some(&abc), &reg)?;
    let show = |ws: std::collections::BTreeSet<stabset::Word>| {
        ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")
    };
    println!("{spec}");
    let letters: String = stablet_of_directive(&spec)?.into_iter().collect();
    println!("  StabLet: {letters}");
    println!("  StabUltLet: {}", show(stabultlet_bounded(&spec, 3)?));
    println!("  GenStabFin (|u| <= 4): {}", show(genstabfin_bounded(&spec, 4)?));
    for w in ["bc", "bcbc", "a"] {
        println!("  {w} desubstitutes forever: {}", desubstitutes_indefinitely(&abc.word(w)?, &spec)?);
    }
    Ok(())
}
