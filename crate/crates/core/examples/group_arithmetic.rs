//! Group law, inverses, gauge norm and dilations on the presets and on a
//! user-defined group.
//!
//! ```bash
//! cargo run --example group_arithmetic
//! ```

use carnot_lab::{CarnotGroup, CustomGroupSpec, GroupPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = CarnotGroup::heisenberg();
    println!("{}: N = {}, layers {:?}, Q = {}", h.label(), h.total_dim(), h.layer_dims(), h.homogeneous_dim());

    let p = GroupPoint::from([1.0, 2.0, 0.5]);
    let q = GroupPoint::from([-0.5, 1.0, 2.0]);
    let pq = h.multiply(&p, &q)?;
    let qp = h.multiply(&q, &p)?;
    println!("p.q = {:?}", pq.coords());
    println!("q.p = {:?}  (differs in the centre)", qp.coords());
    println!("p^-1 = {:?}", h.inverse(&p)?.coords());
    println!("|p| = {:.6}, d(p, q) = {:.6}", h.gauge_norm(&p)?, h.gauge_distance(&p, &q)?);

    let r = 3.0;
    let dp = h.dilate(r, &p)?;
    println!("delta_3 p = {:?}, |delta_3 p| / |p| = {:.6}", dp.coords(), h.gauge_norm(&dp)? / h.gauge_norm(&p)?);

    let e = CarnotGroup::engel();
    let a = GroupPoint::from([1.0, 0.0, 0.0, 0.0]);
    let b = GroupPoint::from([0.0, 1.0, 0.0, 0.0]);
    println!("{}: a.b = {:?}", e.label(), e.multiply(&a, &b)?.coords());

    // Heisenberg again, declared by hand: [E0, E1] = E2.
    let spec = CustomGroupSpec {
        label: "my-heisenberg".into(),
        layer_dims: vec![2, 1],
        structure_constants: vec![(0, 1, 2, 1.0), (1, 0, 2, -1.0)],
    };
    let custom = CarnotGroup::custom(&spec)?;
    println!("custom group equals the preset: {}", custom == h);

    let bad = CustomGroupSpec { structure_constants: vec![(0, 1, 2, 1.0)], ..spec };
    println!("missing antisymmetric entry: {}", CarnotGroup::custom(&bad).unwrap_err());
    Ok(())
}
