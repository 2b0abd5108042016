//! Acceptance suite: one line per criterion, then a non-zero exit if any
//! criterion is red.  Tolerances are pinned in `planar_opoly::acceptance`.

use planar_opoly::acceptance;

fn main() {
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let ids: Vec<&str> = acceptance::ALL
        .iter()
        .copied()
        .filter(|id| args.is_empty() || args.iter().any(|a| a == id))
        .collect();
    println!("running {} acceptance criteria", ids.len());
    let mut red = Vec::new();
    for id in ids {
        let o = acceptance::run(id);
        println!("{}", o.line());
        for m in &o.metrics {
            match &m.bound {
                Some(b) => println!("    {:<40} {:>14.6e}   [{b}]", m.name, m.value),
                None => println!("    {:<40} {:>14.6e}", m.name, m.value),
            }
        }
        if !o.pass {
            red.push(o.id);
        }
    }
    if red.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: red criteria {red:?}");
        std::process::exit(1);
    }
}
