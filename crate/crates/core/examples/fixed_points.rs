//! Fixed points of single morphisms and of their powers.

use stabset::desub::{fixed_point_analysis, is_fixed_by_power, least_fixing_power, limit_points};
use stabset::{DirectiveSpec, EventuallyPeriodicWord, Morphism};

fn main() -> stabset::Result<()> {
    for text in ["a -> ba\nb -> ab\n", "a -> ab\nb -> a\n", "a -> bc\nb -> b\nc -> a\n"] {
        let f = Morphism::parse(text)?;
        println!("{}", f.compact());
        print!("{}", fixed_point_analysis(&f).render_text());
        let reg = [("f".to_string(), f.clone())].into_iter().collect();
        for mut p in limit_points(&DirectiveSpec::parse_with("(f)^w", Some(f.alphabet()), &reg)?)? {
            println!("  {}", p.describe(24)?.prefix);
        }
    }

    let rb = Morphism::parse("a -> ab\nb -> b\n")?;
    for text in ["a|b", "|b", "b|a"] {
        let w = EventuallyPeriodicWord::parse(rb.alphabet(), text)?;
        println!("{w} under {}: {} (power {:?})", rb.compact(), is_fixed_by_power(&w, &rb)?, least_fixing_power(&w, &rb)?);
    }
    Ok(())
}
