//! C ABI over `beval-core`.
//!
//! Every fallible function returns a [`BevalStatus`]; on failure the message
//! is available from [`beval_last_error`] on the same thread. Objects are
//! handed out as opaque handles and must be released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::OnceLock;

use beval_core::groundtruth::rasterize_boxes;
use beval_core::imaging::{adjust_intrinsics, plan_resize_crop, ResizeCropPlan};
use beval_core::metrics::{binarize, delta_pct, Direction, IouAccumulator, DEFAULT_THRESHOLD};
use beval_core::pointcloud::{read_cloud, subsample, write_cloud, SectorGridSpec, ThetaRange};
use beval_core::{
    BoxAnnotation, Error, Frame, GridKind, GridSpec, Intrinsics, ObjectClass, Point3, PointCloud, SemanticClass,
    SemanticGrid,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BevalStatus {
    Ok = 0,
    Validation = 1,
    Io = 2,
    Internal = 3,
    /// Null pointer, bad UTF-8 or an undersized output buffer.
    InvalidArgument = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BevalClass {
    Vehicle = 0,
    Human = 1,
    Drivable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BevalDirection {
    Drop = 0,
    Increase = 1,
    Flat = 2,
}

/// Oriented 3D box in the ego frame. `class` is `Vehicle` or `Human`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BevalBox {
    pub center: [f64; 3],
    /// Length, width, height.
    pub size: [f64; 3],
    pub yaw: f64,
    pub class: BevalClass,
}

/// Sector grid for subsampling. With `fixed_theta` zero the elevation
/// range of each cloud is used and `theta_min`/`theta_max` are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BevalSectorSpec {
    pub theta_sectors: u32,
    pub phi_sectors: u32,
    pub fixed_theta: u8,
    /// Radians.
    pub theta_min: f64,
    pub theta_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BevalIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BevalResizePlan {
    pub src_width: u32,
    pub src_height: u32,
    pub scale: f64,
    pub scaled_width: u32,
    pub scaled_height: u32,
    pub crop_x: u32,
    pub crop_y: u32,
    pub target_width: u32,
    pub target_height: u32,
}

/// Finalized IoU for one class. `iou` is NaN when `defined` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BevalClassIou {
    pub class: BevalClass,
    pub intersection: u64,
    pub union_: u64,
    pub defined: u8,
    pub iou: f64,
}

pub struct BevalCloud(PointCloud);
pub struct BevalGrid(SemanticGrid);
pub struct BevalIou(IouAccumulator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(Error),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> BevalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BevalStatus::Ok
        }
        Ok(Err(Failure::Arg(m))) => {
            set_error(m);
            BevalStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            let status = match e.exit_code() {
                2 => BevalStatus::Io,
                3 => BevalStatus::Internal,
                _ => BevalStatus::Validation,
            };
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("panic inside beval".into());
            BevalStatus::Panic
        }
    }
}

fn arg(msg: &str) -> Failure {
    Failure::Arg(msg.to_string())
}

unsafe fn path_arg(p: *const c_char) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(arg("path is null"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| arg("path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> FfiResult<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Arg(format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Failure::Arg(format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(arg("output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn to_class(c: BevalClass) -> SemanticClass {
    match c {
        BevalClass::Vehicle => SemanticClass::Vehicle,
        BevalClass::Human => SemanticClass::Human,
        BevalClass::Drivable => SemanticClass::DrivableArea,
    }
}

fn from_class(c: SemanticClass) -> BevalClass {
    match c {
        SemanticClass::Vehicle => BevalClass::Vehicle,
        SemanticClass::Human => BevalClass::Human,
        SemanticClass::DrivableArea => BevalClass::Drivable,
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next beval call on the same thread.
#[no_mangle]
pub extern "C" fn beval_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version and pipeline tag, e.g. `beval-0.1.0+gt1`.
#[no_mangle]
pub extern "C" fn beval_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(beval_core::PIPELINE_VERSION).expect("no nul in version"))
        .as_ptr()
}

// ---- point clouds ----

/// Ego-frame cloud from `n` packed `x, y, z, intensity` quadruples.
///
/// # Safety
/// `xyzi` must point to `4 * n` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_new(xyzi: *const f32, n: usize, out: *mut *mut BevalCloud) -> BevalStatus {
    guard(|| {
        let v = slice_arg(xyzi, n * 4, "xyzi")?;
        let points = v
            .chunks_exact(4)
            .map(|q| Point3::with_intensity(q[0] as f64, q[1] as f64, q[2] as f64, q[3] as f64))
            .collect();
        put(out, BevalCloud(PointCloud::new(points, Frame::Ego)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_read(path: *const c_char, out: *mut *mut BevalCloud) -> BevalStatus {
    guard(|| put(out, BevalCloud(read_cloud(&path_arg(path)?)?)))
}

/// # Safety
/// `cloud` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_write(cloud: *const BevalCloud, path: *const c_char) -> BevalStatus {
    guard(|| Ok(write_cloud(&path_arg(path)?, &ref_arg(cloud, "cloud")?.0)?))
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_len(cloud: *const BevalCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Copies points as packed `x, y, z, intensity` into `out`, which holds
/// `cap` floats (at least `4 * len`).
///
/// # Safety
/// `cloud` must be a live handle; `out` must hold `cap` floats.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_points(cloud: *const BevalCloud, out: *mut f32, cap: usize) -> BevalStatus {
    guard(|| {
        let c = &ref_arg(cloud, "cloud")?.0;
        if out.is_null() || cap < 4 * c.len() {
            return Err(arg("output buffer too small"));
        }
        let dst = std::slice::from_raw_parts_mut(out, 4 * c.len());
        for (q, p) in dst.chunks_exact_mut(4).zip(c.points()) {
            q.copy_from_slice(&[p.x as f32, p.y as f32, p.z as f32, p.intensity as f32]);
        }
        Ok(())
    })
}

/// Sector subsampling. A null `spec` means 32 × 1500 sectors over the
/// observed elevation range.
///
/// # Safety
/// `cloud` must be a live handle, `spec` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_subsample(
    cloud: *const BevalCloud,
    spec: *const BevalSectorSpec,
    out: *mut *mut BevalCloud,
) -> BevalStatus {
    guard(|| {
        let c = &ref_arg(cloud, "cloud")?.0;
        let s = match spec.as_ref() {
            None => SectorGridSpec::default(),
            Some(s) => SectorGridSpec {
                theta_sectors: s.theta_sectors,
                phi_sectors: s.phi_sectors,
                theta_range: if s.fixed_theta != 0 {
                    ThetaRange::Fixed {
                        min: s.theta_min,
                        max: s.theta_max,
                    }
                } else {
                    ThetaRange::Observed
                },
            },
        };
        put(out, BevalCloud(subsample(c, &s)?))
    })
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beval_cloud_free(cloud: *mut BevalCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

// ---- grids ----

/// Grid over `n_classes` planes of `side × side` values (row-major, plane
/// after plane). Values must be 0/1 or, for probability grids, in [0, 1].
///
/// # Safety
/// `classes` must hold `n_classes` entries and `data` `len` floats.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_new(
    extent: f64,
    resolution: f64,
    classes: *const BevalClass,
    n_classes: usize,
    data: *const f32,
    len: usize,
    out: *mut *mut BevalGrid,
) -> BevalStatus {
    guard(|| {
        let spec = GridSpec::new(extent, resolution)?;
        let classes: Vec<SemanticClass> = slice_arg(classes, n_classes, "classes")?.iter().map(|&c| to_class(c)).collect();
        let data = slice_arg(data, len, "data")?.to_vec();
        let kind = if data.iter().all(|&v| v == 0.0 || v == 1.0) {
            GridKind::Binary
        } else {
            GridKind::Probability
        };
        put(out, BevalGrid(SemanticGrid::from_data(spec, classes, kind, data)?))
    })
}

/// Single-class occupancy grid from box footprints of `class`.
///
/// # Safety
/// `boxes` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_rasterize_boxes(
    boxes: *const BevalBox,
    n: usize,
    class: BevalClass,
    extent: f64,
    resolution: f64,
    out: *mut *mut BevalGrid,
) -> BevalStatus {
    guard(|| {
        let spec = GridSpec::new(extent, resolution)?;
        let obj = match class {
            BevalClass::Vehicle => ObjectClass::Vehicle,
            BevalClass::Human => ObjectClass::Human,
            BevalClass::Drivable => return Err(arg("drivable area is not a box class")),
        };
        let anns = slice_arg(boxes, n, "boxes")?
            .iter()
            .map(|b| {
                let c = match b.class {
                    BevalClass::Vehicle => ObjectClass::Vehicle,
                    BevalClass::Human => ObjectClass::Human,
                    BevalClass::Drivable => return Err(arg("box class must be vehicle or human")),
                };
                Ok(BoxAnnotation::new(b.center, b.size, b.yaw, c)?)
            })
            .collect::<FfiResult<Vec<_>>>()?;
        put(out, BevalGrid(rasterize_boxes(&anns, obj, &spec)))
    })
}

/// Reads a `BEVG` container; its side must match `extent / resolution`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_read(
    path: *const c_char,
    extent: f64,
    resolution: f64,
    out: *mut *mut BevalGrid,
) -> BevalStatus {
    guard(|| {
        let spec = GridSpec::new(extent, resolution)?;
        put(out, BevalGrid(SemanticGrid::read_bevg(&path_arg(path)?, spec)?))
    })
}

/// Writes a binary grid as a `BEVG` container.
///
/// # Safety
/// `grid` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_write(grid: *const BevalGrid, path: *const c_char) -> BevalStatus {
    guard(|| Ok(ref_arg(grid, "grid")?.0.write_bevg(&path_arg(path)?)?))
}

/// Cells per side; 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_side(grid: *const BevalGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.spec().cells_per_side())
}

/// Number of class planes; 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_num_classes(grid: *const BevalGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.classes().len())
}

/// Copies the class list into `out` (capacity `cap`).
///
/// # Safety
/// `grid` must be a live handle; `out` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_classes(grid: *const BevalGrid, out: *mut BevalClass, cap: usize) -> BevalStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.0;
        if out.is_null() || cap < g.classes().len() {
            return Err(arg("output buffer too small"));
        }
        for (k, &c) in g.classes().iter().enumerate() {
            *out.add(k) = from_class(c);
        }
        Ok(())
    })
}

/// Copies all values (plane after plane, row-major) into `out`.
///
/// # Safety
/// `grid` must be a live handle; `out` must hold `cap` floats.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_data(grid: *const BevalGrid, out: *mut f32, cap: usize) -> BevalStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.0;
        if out.is_null() || cap < g.data().len() {
            return Err(arg("output buffer too small"));
        }
        std::slice::from_raw_parts_mut(out, g.data().len()).copy_from_slice(g.data());
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beval_grid_free(grid: *mut BevalGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

// ---- IoU ----

/// # Safety
/// `classes` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_iou_new(classes: *const BevalClass, n: usize, out: *mut *mut BevalIou) -> BevalStatus {
    guard(|| {
        let classes: Vec<SemanticClass> = slice_arg(classes, n, "classes")?.iter().map(|&c| to_class(c)).collect();
        if classes.is_empty() {
            return Err(arg("class list is empty"));
        }
        put(out, BevalIou(IouAccumulator::new(classes)))
    })
}

/// Adds one sample. Probability grids are binarized at 0.5.
///
/// # Safety
/// All three handles must be live.
#[no_mangle]
pub unsafe extern "C" fn beval_iou_accumulate(
    acc: *mut BevalIou,
    pred: *const BevalGrid,
    gt: *const BevalGrid,
) -> BevalStatus {
    guard(|| {
        let acc = acc.as_mut().ok_or_else(|| arg("accumulator is null"))?;
        let pred = binarize(&ref_arg(pred, "prediction")?.0, DEFAULT_THRESHOLD)?;
        let gt = binarize(&ref_arg(gt, "ground truth")?.0, DEFAULT_THRESHOLD)?;
        Ok(acc.0.accumulate(&pred, &gt)?)
    })
}

/// Adds `other`'s counts into `acc`.
///
/// # Safety
/// Both handles must be live and distinct.
#[no_mangle]
pub unsafe extern "C" fn beval_iou_merge(acc: *mut BevalIou, other: *const BevalIou) -> BevalStatus {
    guard(|| {
        let acc = acc.as_mut().ok_or_else(|| arg("accumulator is null"))?;
        Ok(acc.0.merge(&ref_arg(other, "other")?.0)?)
    })
}

/// Writes one entry per class into `out` (capacity `cap`).
///
/// # Safety
/// `acc` must be a live handle; `out` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn beval_iou_finalize(acc: *const BevalIou, out: *mut BevalClassIou, cap: usize) -> BevalStatus {
    guard(|| {
        let ious = ref_arg(acc, "accumulator")?.0.finalize();
        if out.is_null() || cap < ious.len() {
            return Err(arg("output buffer too small"));
        }
        for (k, c) in ious.iter().enumerate() {
            *out.add(k) = BevalClassIou {
                class: from_class(c.class),
                intersection: c.counts.intersection,
                union_: c.counts.union,
                defined: c.iou.is_some() as u8,
                iou: c.iou.unwrap_or(f64::NAN),
            };
        }
        Ok(())
    })
}

/// # Safety
/// `acc` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beval_iou_free(acc: *mut BevalIou) {
    if !acc.is_null() {
        drop(Box::from_raw(acc));
    }
}

/// Relative change `(cross - baseline) / baseline * 100` (negative for
/// a drop). Fails with `Validation` when `baseline` is not positive.
///
/// # Safety
/// `delta` and `direction` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_delta_pct(
    baseline: f64,
    cross: f64,
    delta: *mut f64,
    direction: *mut BevalDirection,
) -> BevalStatus {
    guard(|| {
        if delta.is_null() || direction.is_null() {
            return Err(arg("output pointer is null"));
        }
        let (d, dir) = delta_pct(baseline, cross)
            .ok_or_else(|| Error::Validation(format!("baseline {baseline} must be positive")))?;
        *delta = d;
        *direction = match dir {
            Direction::Drop => BevalDirection::Drop,
            Direction::Increase => BevalDirection::Increase,
            Direction::Flat => BevalDirection::Flat,
        };
        Ok(())
    })
}

// ---- imaging ----

fn plan_out(p: &ResizeCropPlan) -> BevalResizePlan {
    BevalResizePlan {
        src_width: p.src_width,
        src_height: p.src_height,
        scale: p.scale,
        scaled_width: p.scaled_width,
        scaled_height: p.scaled_height,
        crop_x: p.crop_x,
        crop_y: p.crop_y,
        target_width: p.target_width,
        target_height: p.target_height,
    }
}

fn plan_in(p: &BevalResizePlan) -> ResizeCropPlan {
    ResizeCropPlan {
        src_width: p.src_width,
        src_height: p.src_height,
        scale: p.scale,
        scaled_width: p.scaled_width,
        scaled_height: p.scaled_height,
        crop_x: p.crop_x,
        crop_y: p.crop_y,
        target_width: p.target_width,
        target_height: p.target_height,
    }
}

/// Aspect-preserving scale and centered crop from `src_width × src_height`
/// to `target_height × target_width`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_plan_resize_crop(
    src_width: u32,
    src_height: u32,
    target_height: u32,
    target_width: u32,
    out: *mut BevalResizePlan,
) -> BevalStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| arg("output pointer is null"))?;
        *out = plan_out(&plan_resize_crop((src_width, src_height), (target_height, target_width))?);
        Ok(())
    })
}

/// Intrinsics after applying `plan` to the image they describe.
///
/// # Safety
/// `k` and `plan` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beval_adjust_intrinsics(
    k: *const BevalIntrinsics,
    plan: *const BevalResizePlan,
    out: *mut BevalIntrinsics,
) -> BevalStatus {
    guard(|| {
        let k = ref_arg(k, "intrinsics")?;
        let plan = plan_in(ref_arg(plan, "plan")?);
        let out = out.as_mut().ok_or_else(|| arg("output pointer is null"))?;
        let adj = adjust_intrinsics(&Intrinsics::new(k.fx, k.fy, k.cx, k.cy, k.width, k.height)?, &plan)?;
        *out = BevalIntrinsics {
            fx: adj.fx(),
            fy: adj.fy(),
            cx: adj.cx(),
            cy: adj.cy(),
            width: adj.width(),
            height: adj.height(),
        };
        Ok(())
    })
}
