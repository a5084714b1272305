use lareval_web::{fracture_demo, nms_demo, skeleton_report};

#[test]
fn drawn_bar_lengths() {
    let (w, h) = (64, 16);
    let mut px = vec![0u8; w * h];
    for y in 6..9 {
        for x in 5..55 {
            px[y * w + x] = 1;
        }
    }
    let r = skeleton_report(&px, w, h, 1.5).unwrap();
    assert_eq!(r.area, 150);
    assert_eq!(r.components, 1);
    assert!((r.geodesic_chain - 49.0).abs() <= 3.0, "{}", r.geodesic_chain);
    assert!((r.polyline_fit - 49.0).abs() <= 3.0);
    assert!(r.polyline.len() >= 2 && r.path.len() as f64 >= r.geodesic_chain);
    assert!(r.skeleton.iter().all(|&i| px[i as usize] == 1));
}

#[test]
fn empty_and_malformed_drawings() {
    let r = skeleton_report(&[0; 100], 10, 10, 1.5).unwrap();
    assert_eq!((r.area, r.geodesic_chain, r.skeleton.len()), (0, 0.0, 0));
    assert!(skeleton_report(&[0; 99], 10, 10, 1.5).is_err());
    assert!(skeleton_report(&[0; 100], 10, 10, 0.0).is_err());
}

#[test]
fn nms_slider_shows_the_merge() {
    let close = nms_demo(4, 3, 0.6).unwrap();
    assert!(close.box_iou > 0.6 && close.mask_iou < 0.1);
    assert_eq!((close.kept_by_box, close.kept_by_mask), (1, 2));
    let same = nms_demo(0, 3, 0.6).unwrap();
    assert_eq!((same.kept_by_box, same.kept_by_mask), (1, 1));
    assert!(nms_demo(4, 3, 0.0).is_err());
}

#[test]
fn fracture_slider_lowers_lar() {
    let intact = fracture_demo(3, 0.0, 0.5, 5).unwrap();
    assert_eq!(intact.lar, 1.0);
    assert_eq!(intact.ground_truth, intact.prediction);
    let cut = fracture_demo(3, 4.0, 0.5, 5).unwrap();
    assert!(cut.matched);
    assert!((cut.lar - 0.5).abs() < 0.06, "{}", cut.lar);
    let json = lareval_web::fracture_demo_js(3, 4.0, 0.5, 5).unwrap();
    assert!(json.contains("\"lar\""));
}
