use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_file, write_file, Error, Result};

/// Object classes carried by 3D box annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Vehicle,
    Human,
}

/// Classes a BEV grid can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SemanticClass {
    #[serde(rename = "vehicle")]
    Vehicle,
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "drivable")]
    DrivableArea,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 3] = [
        SemanticClass::Vehicle,
        SemanticClass::Human,
        SemanticClass::DrivableArea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Vehicle => "vehicle",
            SemanticClass::Human => "human",
            SemanticClass::DrivableArea => "drivable",
        }
    }

    /// Display label used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            SemanticClass::Vehicle => "Vehicle",
            SemanticClass::Human => "Human",
            SemanticClass::DrivableArea => "Drivable Area",
        }
    }

    pub fn object_class(self) -> Option<ObjectClass> {
        match self {
            SemanticClass::Vehicle => Some(ObjectClass::Vehicle),
            SemanticClass::Human => Some(ObjectClass::Human),
            SemanticClass::DrivableArea => None,
        }
    }

    /// Parses a comma-separated list such as `vehicle,human,drivable`.
    pub fn parse_list(s: &str) -> Result<Vec<SemanticClass>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let c: SemanticClass = part.parse()?;
            if out.contains(&c) {
                return Err(Error::Validation(format!("class `{part}` listed twice")));
            }
            out.push(c);
        }
        if out.is_empty() {
            return Err(Error::Validation("empty class list".into()));
        }
        Ok(out)
    }
}

impl From<ObjectClass> for SemanticClass {
    fn from(c: ObjectClass) -> Self {
        match c {
            ObjectClass::Vehicle => SemanticClass::Vehicle,
            ObjectClass::Human => SemanticClass::Human,
        }
    }
}

impl fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemanticClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vehicle" => Ok(SemanticClass::Vehicle),
            "human" => Ok(SemanticClass::Human),
            "drivable" | "drivable_area" | "drivablearea" => Ok(SemanticClass::DrivableArea),
            other => Err(Error::Validation(format!("unknown class `{other}`"))),
        }
    }
}

/// Oriented 3D box in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRecord", into = "BoxRecord")]
pub struct BoxAnnotation {
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
    class: ObjectClass,
}

#[derive(Serialize, Deserialize)]
struct BoxRecord {
    center: [f64; 3],
    /// length (along heading), width, height
    size: [f64; 3],
    yaw: f64,
    class: ObjectClass,
}

impl TryFrom<BoxRecord> for BoxAnnotation {
    type Error = Error;

    fn try_from(r: BoxRecord) -> Result<Self> {
        BoxAnnotation::new(r.center, r.size, r.yaw, r.class)
    }
}

impl From<BoxAnnotation> for BoxRecord {
    fn from(b: BoxAnnotation) -> Self {
        BoxRecord {
            center: b.center,
            size: b.size,
            yaw: b.yaw,
            class: b.class,
        }
    }
}

impl BoxAnnotation {
    /// `size` is (length, width, height); `yaw` must lie in `[-π, π)`.
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64, class: ObjectClass) -> Result<Self> {
        use std::f64::consts::PI;
        if !center.iter().chain(size.iter()).all(|v| v.is_finite()) || !yaw.is_finite() {
            return Err(Error::Validation("box has non-finite fields".into()));
        }
        if size.iter().any(|&s| s <= 0.0) {
            return Err(Error::Validation(format!("box size {size:?} must be positive")));
        }
        if !(-PI..PI).contains(&yaw) {
            return Err(Error::Validation(format!("box yaw {yaw} outside [-π, π)")));
        }
        Ok(BoxAnnotation {
            center,
            size,
            yaw,
            class,
        })
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn length(&self) -> f64 {
        self.size[0]
    }

    pub fn width(&self) -> f64 {
        self.size[1]
    }

    pub fn height(&self) -> f64 {
        self.size[2]
    }

    pub fn size(&self) -> [f64; 3] {
        self.size
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn class(&self) -> ObjectClass {
        self.class
    }

    /// Ground-plane footprint corners, counter-clockwise.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (0.5 * self.size[0], 0.5 * self.size[1]);
        let corner = |u: f64, v: f64| [self.center[0] + u * c - v * s, self.center[1] + u * s + v * c];
        [corner(hl, hw), corner(-hl, hw), corner(-hl, -hw), corner(hl, -hw)]
    }
}

/// Reads a JSON array of boxes.
pub fn read_boxes(path: &Path) -> Result<Vec<BoxAnnotation>> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e))
}

pub fn write_boxes(path: &Path, boxes: &[BoxAnnotation]) -> Result<()> {
    let mut s = serde_json::to_string_pretty(boxes).expect("boxes serialize");
    s.push('\n');
    write_file(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("boxes.json");
        let b = vec![BoxAnnotation::new([1.0, 2.0, 0.5], [4.0, 2.0, 1.5], 0.3, ObjectClass::Vehicle).unwrap()];
        write_boxes(&path, &b).unwrap();
        assert_eq!(read_boxes(&path).unwrap(), b);
        std::fs::write(&path, r#"[{"center":[0,0,0],"size":[0,1,1],"yaw":0,"class":"vehicle"}]"#).unwrap();
        assert!(matches!(read_boxes(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn class_list_parsing() {
        assert_eq!(
            SemanticClass::parse_list("vehicle, human,drivable").unwrap(),
            SemanticClass::ALL.to_vec()
        );
        assert!(SemanticClass::parse_list("vehicle,vehicle").is_err());
        assert!(SemanticClass::parse_list("tree").is_err());
        assert!(SemanticClass::parse_list("").is_err());
    }

    #[test]
    fn box_validation() {
        assert!(BoxAnnotation::new([0.0; 3], [1.0, 0.0, 1.0], 0.0, ObjectClass::Vehicle).is_err());
        assert!(BoxAnnotation::new([0.0; 3], [1.0, 1.0, 1.0], std::f64::consts::PI, ObjectClass::Human).is_err());
        assert!(BoxAnnotation::new([0.0; 3], [1.0, 1.0, 1.0], -std::f64::consts::PI, ObjectClass::Human).is_ok());
    }

    #[test]
    fn box_json_shape() {
        let b = BoxAnnotation::new([1.0, 2.0, 0.5], [4.0, 2.0, 1.5], 0.25, ObjectClass::Vehicle).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"center":[1.0,2.0,0.5],"size":[4.0,2.0,1.5],"yaw":0.25,"class":"vehicle"}"#);
        let back: BoxAnnotation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        let bad = r#"{"center":[0,0,0],"size":[-1,2,1.5],"yaw":0,"class":"human"}"#;
        assert!(serde_json::from_str::<BoxAnnotation>(bad).is_err());
    }
}
