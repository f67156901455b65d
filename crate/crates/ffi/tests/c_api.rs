use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use beval_ffi::*;

fn last_error() -> String {
    let p = beval_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(beval_version()) }.to_str().unwrap();
    assert!(v.starts_with("beval-"));
}

#[test]
fn cloud_round_trip_and_subsample() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("c.bin").to_str().unwrap()).unwrap();
    // two points in one sector and one elsewhere
    let xyzi: [f32; 12] = [10.0, 0.0, -1.0, 0.1, 10.0, 0.001, -1.0, 0.2, -5.0, 0.0, -1.0, 0.3];
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(beval_cloud_new(xyzi.as_ptr(), 3, &mut c), BevalStatus::Ok);
        assert_eq!(beval_cloud_len(c), 3);
        assert_eq!(beval_cloud_write(c, path.as_ptr()), BevalStatus::Ok);

        let mut r = ptr::null_mut();
        assert_eq!(beval_cloud_read(path.as_ptr(), &mut r), BevalStatus::Ok);
        let mut back = [0f32; 12];
        assert_eq!(beval_cloud_points(r, back.as_mut_ptr(), 12), BevalStatus::Ok);
        assert_eq!(back, xyzi);
        assert_eq!(beval_cloud_points(r, back.as_mut_ptr(), 4), BevalStatus::InvalidArgument);

        let spec = BevalSectorSpec {
            theta_sectors: 1,
            phi_sectors: 4,
            fixed_theta: 0,
            theta_min: 0.0,
            theta_max: 0.0,
        };
        let mut s = ptr::null_mut();
        assert_eq!(beval_cloud_subsample(r, &spec, &mut s), BevalStatus::Ok);
        assert_eq!(beval_cloud_len(s), 2);
        beval_cloud_free(s);
        beval_cloud_free(r);
        beval_cloud_free(c);
    }
}

#[test]
fn errors_are_reported() {
    let missing = CString::new("/nonexistent/dir/c.bin").unwrap();
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(beval_cloud_read(missing.as_ptr(), &mut c), BevalStatus::Io);
        assert!(last_error().contains("c.bin"));
        assert!(c.is_null());
        assert_eq!(beval_cloud_read(ptr::null(), &mut c), BevalStatus::InvalidArgument);
        let nan = [f32::NAN, 0.0, 0.0, 0.0];
        assert_eq!(beval_cloud_new(nan.as_ptr(), 1, &mut c), BevalStatus::Validation);
        let (mut d, mut dir) = (0.0, BevalDirection::Flat);
        assert_eq!(beval_delta_pct(0.0, 0.5, &mut d, &mut dir), BevalStatus::Validation);
        assert!(last_error().contains("baseline"));
        // a successful call clears the message
        assert_eq!(beval_delta_pct(0.5, 0.5, &mut d, &mut dir), BevalStatus::Ok);
        assert_eq!(dir, BevalDirection::Flat);
    }
    assert!(beval_last_error().is_null());
}

#[test]
fn boxes_grid_and_iou() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("g.bevg").to_str().unwrap()).unwrap();
    let b = BevalBox {
        center: [0.0, 0.0, 0.0],
        size: [4.0, 2.0, 1.5],
        yaw: 0.0,
        class: BevalClass::Vehicle,
    };
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(beval_rasterize_boxes(&b, 1, BevalClass::Vehicle, 100.0, 0.5, &mut g), BevalStatus::Ok);
        assert_eq!(beval_grid_side(g), 200);
        assert_eq!(beval_grid_num_classes(g), 1);
        let mut data = vec![0f32; 200 * 200];
        assert_eq!(beval_grid_data(g, data.as_mut_ptr(), data.len()), BevalStatus::Ok);
        assert_eq!(data.iter().filter(|&&v| v == 1.0).count(), 32);

        assert_eq!(beval_grid_write(g, path.as_ptr()), BevalStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(beval_grid_read(path.as_ptr(), 100.0, 0.5, &mut r), BevalStatus::Ok);
        let mut cls = [BevalClass::Human; 1];
        assert_eq!(beval_grid_classes(r, cls.as_mut_ptr(), 1), BevalStatus::Ok);
        assert_eq!(cls[0], BevalClass::Vehicle);
        assert_eq!(beval_grid_read(path.as_ptr(), 50.0, 0.5, &mut ptr::null_mut()), BevalStatus::Validation);

        let zeros = vec![0f32; 200 * 200];
        let mut z = ptr::null_mut();
        let classes = [BevalClass::Vehicle];
        assert_eq!(
            beval_grid_new(100.0, 0.5, classes.as_ptr(), 1, zeros.as_ptr(), zeros.len(), &mut z),
            BevalStatus::Ok
        );

        let mut acc = ptr::null_mut();
        assert_eq!(beval_iou_new(classes.as_ptr(), 1, &mut acc), BevalStatus::Ok);
        assert_eq!(beval_iou_accumulate(acc, r, g), BevalStatus::Ok);
        let mut other = ptr::null_mut();
        assert_eq!(beval_iou_new(classes.as_ptr(), 1, &mut other), BevalStatus::Ok);
        assert_eq!(beval_iou_accumulate(other, z, g), BevalStatus::Ok);
        assert_eq!(beval_iou_merge(acc, other), BevalStatus::Ok);
        let mut out = [BevalClassIou {
            class: BevalClass::Human,
            intersection: 0,
            union_: 0,
            defined: 0,
            iou: 0.0,
        }];
        assert_eq!(beval_iou_finalize(acc, out.as_mut_ptr(), 1), BevalStatus::Ok);
        assert_eq!((out[0].intersection, out[0].union_, out[0].defined), (32, 64, 1));
        assert_eq!(out[0].iou, 0.5);

        let human = [BevalClass::Human];
        let mut bad = ptr::null_mut();
        assert_eq!(beval_iou_new(human.as_ptr(), 1, &mut bad), BevalStatus::Ok);
        assert_eq!(beval_iou_accumulate(bad, g, g), BevalStatus::Validation);

        beval_iou_free(bad);
        beval_iou_free(other);
        beval_iou_free(acc);
        beval_grid_free(z);
        beval_grid_free(r);
        beval_grid_free(g);
    }
}

#[test]
fn delta_and_intrinsics() {
    unsafe {
        let (mut d, mut dir) = (0.0, BevalDirection::Flat);
        assert_eq!(beval_delta_pct(0.3295, 0.105, &mut d, &mut dir), BevalStatus::Ok);
        assert!((d + 68.13).abs() < 0.005);
        assert_eq!(dir, BevalDirection::Drop);

        let mut plan = BevalResizePlan::default();
        assert_eq!(beval_plan_resize_crop(1600, 900, 128, 352, &mut plan), BevalStatus::Ok);
        assert_eq!((plan.scaled_width, plan.scaled_height, plan.crop_x, plan.crop_y), (352, 198, 0, 35));
        let k = BevalIntrinsics {
            fx: 1266.4,
            fy: 1266.4,
            cx: 816.3,
            cy: 491.5,
            width: 1600,
            height: 900,
        };
        let mut adj = BevalIntrinsics::default();
        assert_eq!(beval_adjust_intrinsics(&k, &plan, &mut adj), BevalStatus::Ok);
        assert!((adj.fx - 1266.4 * 0.22).abs() < 1e-9);
        assert!((adj.cy - (491.5 * 0.22 - 35.0)).abs() < 1e-9);
        assert_eq!((adj.width, adj.height), (352, 128));
        assert_eq!(beval_plan_resize_crop(0, 900, 128, 352, &mut plan), BevalStatus::Validation);
    }
}

/// The generated header must compile as C and as C++.
#[test]
fn header_compiles() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("beval.h").is_file());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"beval.h\"\nint main(void) { BevalCloud *c = 0; size_t n = beval_cloud_len(c); \
         return (int)n + (beval_version() == 0); }\n",
    )
    .unwrap();
    for (compiler, extra) in [("cc", vec!["-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let Ok(out) = Command::new(compiler)
            .args(&extra)
            .arg("-fsyntax-only")
            .arg("-Wall")
            .arg("-Werror")
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not available; skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
