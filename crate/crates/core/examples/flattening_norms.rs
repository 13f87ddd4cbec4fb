//! Flattening norms of a small tensor over every partition of its labels, the
//! duality between a flattening and its transpose, and the merging estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tensor_chaos::experiment::random_tensor;
use tensor_chaos::norms::{merge, tensor_norm, NormOptions};
use tensor_chaos::tensor::{enumerate_partitions, IndexLabel, Partition};

fn main() -> tensor_chaos::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = NormOptions::default();
    let labels = vec![
        IndexLabel::j(1),
        IndexLabel::j(2),
        IndexLabel::a("a"),
        IndexLabel::b("b"),
    ];
    let h = random_tensor(&mut rng, labels, 1, 2, 60)?;
    println!("h: {} nonzero entries, |h|_F = {:.4}", h.nnz(), h.frobenius_sq().sqrt());

    for part in enumerate_partitions(h.labels(), 16)? {
        let fwd = tensor_norm(&h, &part, &opts)?.value;
        let back = tensor_norm(&h, &part.transposed(), &opts)?.value;
        println!("  {part:<28} {fwd:.6}  (transpose {back:.6})");
    }

    let f = random_tensor(&mut rng, vec![IndexLabel::a("x"), IndexLabel::a("s")], 1, 2, 10)?;
    let g = random_tensor(&mut rng, vec![IndexLabel::a("s"), IndexLabel::b("y")], 1, 2, 10)?;
    let fg = merge(&f, &g, &["s"])?;
    let lhs = tensor_norm(&fg, &Partition::by_names(&fg, &["x"], &["y"])?, &opts)?.value;
    let nf = tensor_norm(&f, &Partition::by_names(&f, &["x"], &["s"])?, &opts)?.value;
    let ng = tensor_norm(&g, &Partition::by_names(&g, &["s"], &["y"])?, &opts)?.value;
    println!(
        "\nmerging: |fg|_(x->y) = {lhs:.6} <= {:.6} = |f|_(x->s) |g|_(s->y)",
        nf * ng
    );
    Ok(())
}
