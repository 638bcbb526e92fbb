//! Regenerates `assets/peg_2000_1500.alist`, the bundled rate-3/4 PEG code.
//!
//! cargo run -p qci-core --example gen_bundled_code > crates/core/assets/peg_2000_1500.alist

use qci_core::coding::peg;

fn main() {
    let code = peg::construct(2000, 500, 3, 2024).expect("PEG construction");
    eprintln!("n = {}, k = {}, rate = {:.4}", code.n(), code.k(), code.rate());
    print!("{}", code.to_alist());
}
