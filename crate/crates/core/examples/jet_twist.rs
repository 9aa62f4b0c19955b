//! Converting a Euclidean jet into a horizontal one and checking it against
//! derivatives taken along the left-invariant frame.
//!
//! ```bash
//! cargo run --example jet_twist
//! ```

use carnot_lab::calculus::{carnot_jet, euclidean_jet, frame_at, twist_jet};
use carnot_lab::poly::Poly;
use carnot_lab::{CarnotGroup, GroupPoint, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = CarnotGroup::heisenberg();
    let p = GroupPoint::from([2.0, 4.0, 1.0]);
    let frame = frame_at(&g, &p)?;
    println!("frame at {:?}: A = {} B = {}", p.coords(), frame.a, frame.b);

    // Polynomials take the time variable as their last argument.
    let z = Poly::var(4, 2);
    let xy = &Poly::var(4, 0) * &Poly::var(4, 1);
    let t_x = &Poly::var(4, 3) * &Poly::var(4, 0);
    for (name, f) in [("z", z), ("xy", xy), ("t*x", t_x)] {
        let e = euclidean_jet(&g, &f, &p, 0.5)?;
        let twisted = twist_jet(&g, &p, &e)?;
        let direct = carnot_jet(&g, &ScalarField::Polynomial(f), &p, 0.5)?;
        println!("f = {name}");
        println!("  euclidean eta {:?}", e.eta.as_slice());
        println!("  twisted   eta {:?}, X {:?}", twisted.eta.as_slice(), twisted.x.as_slice());
        println!("  direct    eta {:?}, X {:?}", direct.eta.as_slice(), direct.x.as_slice());
    }
    Ok(())
}
