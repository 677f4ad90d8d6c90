use proptest::prelude::*;

use tilediff::image::pnm;
use tilediff::linops::{AvgPool, Grayscale, Identity, LinearOperator, MaskOp};
use tilediff::msr::plan_tiles;
use tilediff::sampler::{ddnm_project, lambda_gamma};
use tilediff::{Image, Mask, Shape};

fn image(shape: Shape) -> impl Strategy<Value = Image> {
    prop::collection::vec(-1.0f64..1.0, shape.len())
        .prop_map(move |v| Image::new(shape, v).unwrap())
}

#[derive(Debug, Clone)]
struct Case {
    kind: usize,
    bits: u64,
    a: Image,
    b: Image,
}

impl Case {
    fn op(&self) -> Box<dyn LinearOperator> {
        let shape = self.a.shape();
        match self.kind {
            0 => Box::new(AvgPool::new(shape, 2).unwrap()),
            1 => {
                let bits = self.bits;
                let mask = Mask::from_fn(shape.height, shape.width, |i, j| {
                    (bits >> ((i * shape.width + j) % 64)) & 1 == 1
                });
                Box::new(MaskOp::new(shape, mask).unwrap())
            }
            2 => Box::new(Grayscale::new(shape).unwrap()),
            _ => Box::new(Identity::new(shape)),
        }
    }
}

/// A random operator on a small shape plus two images of that shape.
fn case() -> impl Strategy<Value = Case> {
    (1usize..4, 1usize..4, 0usize..4, any::<u64>()).prop_flat_map(|(bh, bw, kind, bits)| {
        let shape = Shape::new(bh * 2, bw * 2, 3);
        (image(shape), image(shape)).prop_map(move |(a, b)| Case { kind, bits, a, b })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pseudo_inverse_identities(c in case()) {
        let (op, x) = (c.op(), &c.a);
        let ax = op.forward(x).unwrap();
        let back = op.forward(&op.pinv(&ax).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&ax).unwrap() <= 1e-12);
        let p = op.range_project(x).unwrap();
        prop_assert!(op.range_project(&p).unwrap().max_abs_diff(&p).unwrap() <= 1e-12);
        // Orthogonality: <x - Px, Px> = 0.
        let dot: f64 = x.data().iter().zip(p.data()).map(|(a, b)| (a - b) * b).sum();
        prop_assert!(dot.abs() <= 1e-10);
    }

    #[test]
    fn projection_is_consistent_and_keeps_null_part(c in case()) {
        let (op, truth, x0) = (c.op(), &c.a, &c.b);
        let y = op.forward(truth).unwrap();
        let xhat = ddnm_project(op.as_ref(), &y, x0).unwrap();
        prop_assert!(op.forward(&xhat).unwrap().max_abs_diff(&y).unwrap() <= 1e-12);
        let null = |v: &Image| v.zip_map(&op.range_project(v).unwrap(), |a, b| a - b).unwrap();
        prop_assert!(null(&xhat).max_abs_diff(&null(x0)).unwrap() <= 1e-12);
        let again = ddnm_project(op.as_ref(), &y, &xhat).unwrap();
        prop_assert!(again.max_abs_diff(&xhat).unwrap() <= 1e-12);
    }

    #[test]
    fn coefficient_identity(
        s in 0.0f64..5.0,
        a in 0.01f64..1.0,
        eta in 0.0f64..1.0,
        sigma_y in 0.0f64..1.0,
    ) {
        let sigma = (1.0 - a * a).sqrt();
        let c = lambda_gamma(s, a, sigma, eta, sigma_y);
        let lhs = (a * sigma_y * c.lambda * s).powi(2) + (sigma * c.gamma).powi(2);
        prop_assert!((lhs - (sigma * eta).powi(2)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&c.lambda));
        prop_assert!(c.gamma >= 0.0 && c.gamma <= eta);
    }

    #[test]
    fn tile_plans_cover_and_align(
        block in 1usize..5,
        patch_blocks in 2usize..8,
        overlap_frac in 0.1f64..0.9,
        extra_w in 0usize..20,
        extra_h in 0usize..20,
    ) {
        let patch = patch_blocks * block;
        let overlap = (((patch_blocks as f64 * overlap_frac) as usize).clamp(1, patch_blocks - 1)) * block;
        let (w, h) = (patch + extra_w * block, patch + extra_h * block);
        let plan = plan_tiles(w, h, patch, overlap, block).unwrap();
        let mut covered = Mask::filled(h, w, false);
        for tile in plan.tiles() {
            let win = tile.window;
            prop_assert!(win.top % block == 0 && win.left % block == 0);
            prop_assert!(win.bottom() <= h && win.right() <= w);
            covered.fill_window(win).unwrap();
        }
        prop_assert!(covered.all_known());
        let xs = plan.x_positions();
        prop_assert!(xs.windows(2).all(|p| p[1] > p[0] && p[1] - p[0] <= patch - overlap));
    }

    #[test]
    fn pnm_codes_round_trip(codes in prop::collection::vec(0u8..=255, 12)) {
        let shape = Shape::new(2, 2, 3);
        let img = Image::new(shape, codes.iter().map(|&k| pnm::code_to_value(k)).collect()).unwrap();
        let bytes = pnm::encode(&img);
        let back = pnm::decode(&bytes).unwrap();
        prop_assert_eq!(back, img);
    }
}
