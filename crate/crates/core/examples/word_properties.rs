//! Bounded checks on prefixes: special factors, reversal closure, recurrence,
//! Lyndon and ultimate periodicity.

use stabset::props::{
    episturmian_necessary, is_lsp_prefixal, is_lyndon_bounded, is_recurrent_bounded, left_special_report,
    period_check, reversal_closure_check,
};
use stabset::sadic::generate_prefix;
use stabset::{DirectiveSpec, EventuallyPeriodicWord, Morphism};

fn main() -> stabset::Result<()> {
    let trib = Morphism::parse("a -> ab\nb -> ac\nc -> a\n")?;
    let w = trib.fixed_point_prefix(trib.alphabet().require('a')?, 1000)?;
    for level in left_special_report(&w, 6)? {
        let fs: Vec<String> = level.factors.iter().map(|f| f.to_string()).collect();
        println!("left special, length {}: {}", level.length, fs.join(" "));
    }
    println!("{}", reversal_closure_check(&w, 12)?);
    println!("{}", is_lsp_prefixal(&w, 12)?);
    println!("{}", episturmian_necessary(&w, 12)?);

    let aba = EventuallyPeriodicWord::parse(w.alphabet(), "aaab|a")?.expand(200);
    println!("{}", is_recurrent_bounded(&aba, 3, 50)?);
    println!("{}", period_check(&aba)?);

    let lyn = generate_prefix(&DirectiveSpec::parse("(La Rb Rb La)^w")?, 500, None)?;
    println!("{}", is_lyndon_bounded(&lyn)?);
    println!("{}", is_lyndon_bounded(&lyn.reversed())?);
    Ok(())
}
