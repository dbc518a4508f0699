use proptest::prelude::*;

use mpi_render::composite::over_weights;
use mpi_render::container::{load_mpi, save_mpi, BitDepth};
use mpi_render::warp::{plane_homography, plane_in_target_frame};
use mpi_render::{
    over_composite, place_planes_disparity, render, CameraIntrinsics, CameraPair, CameraPose, Image, MultiplaneImage,
};

fn image(w: usize, h: usize, c: usize, values: &[f64]) -> Image {
    let mut i = 0;
    Image::from_fn(w, h, c, |_, _, p| {
        for v in p.iter_mut() {
            *v = values[i % values.len()];
            i += 1;
        }
    })
}

fn stack(l: usize, values: &[f64]) -> MultiplaneImage {
    let color = image(6, 5, 3, values);
    let alphas = (0..l).map(|i| image(6, 5, 1, &values[i..])).collect();
    MultiplaneImage::new(color, alphas, place_planes_disparity(l, 0.95, 1.12).unwrap(), 0.95, 1.12).unwrap()
}

proptest! {
    #[test]
    fn weights_and_transmittance_sum_to_one(l in 1usize..40, values in prop::collection::vec(0.0f64..=1.0, 64)) {
        let mpi = stack(l, &values);
        let refs: Vec<&Image> = mpi.alphas().iter().collect();
        let weights = over_weights(&refs).unwrap();
        for p in 0..30 {
            let t: f64 = mpi.alphas().iter().map(|a| 1.0 - a.data()[p]).product();
            let s: f64 = weights.iter().map(|w| w.data()[p]).sum();
            prop_assert!((s + t - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rendered_values_stay_in_range(l in 1usize..12, yaw in -0.2f64..0.2, pitch in -0.2f64..0.2,
                                     values in prop::collection::vec(0.0f64..=1.0, 64)) {
        let mpi = stack(l, &values);
        let cams = CameraPair::same(CameraIntrinsics::from_fov(6, 5, 40.0).unwrap());
        let out = render(&mpi, &cams, &CameraPose::orbit(yaw, pitch, 1.0)).unwrap();
        prop_assert!(out.color.data().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        prop_assert!(out.transmittance.data().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn homography_round_trips_through_inverse(yaw in -0.3f64..0.3, pitch in -0.3f64..0.3,
                                            x in 0.0f64..64.0, y in 0.0f64..48.0, d in 0.95f64..1.12) {
        let k = CameraIntrinsics::from_fov(64, 48, 30.0).unwrap();
        let pose = CameraPose::orbit(yaw, pitch, 1.0);
        let forward = plane_homography(&k, &k, &pose, &plane_in_target_frame(d, &pose).unwrap()).unwrap();
        let (u, v) = forward.apply(x, y).unwrap();
        let through = forward.inverse().apply(u, v).unwrap();
        prop_assert!((through.0 - x).abs() < 1e-8 && (through.1 - y).abs() < 1e-8);
    }

    #[test]
    fn sixteen_bit_container_round_trip(l in 1usize..6, values in prop::collection::vec(0.0f64..=1.0, 64)) {
        let mpi = stack(l, &values);
        let k = CameraIntrinsics::from_fov(6, 5, 40.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_mpi(&mpi, &k, dir.path(), BitDepth::Sixteen).unwrap();
        let (loaded, k2) = load_mpi(dir.path()).unwrap();
        prop_assert_eq!(loaded.depths(), mpi.depths());
        prop_assert_eq!(k2, k);
        prop_assert!(loaded.color().max_abs_diff(mpi.color()) <= 0.5 / 65535.0 + 1e-12);
        let direct = over_composite(
            &(0..l).map(|i| mpi_render::warp::WarpedPlane { color: loaded.plane_color(i).clone(), alpha: loaded.alpha(i).clone() }).collect::<Vec<_>>(),
            None,
        ).unwrap();
        prop_assert!(direct.color.max_abs_diff(&render(&loaded, &CameraPair::same(k), &CameraPose::identity()).unwrap().color) == 0.0);
    }
}
