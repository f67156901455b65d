//! Binary morphology with rectangular all-ones structuring elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Validation(format!(
                "mask data has {} values, expected {}",
                data.len(),
                width * height
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::Validation("mask values must be 0 or 1".into()));
        }
        Ok(BinaryMask { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Cell-wise `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct StructuringElement {
    width: usize,
    height: usize,
}

impl Default for StructuringElement {
    fn default() -> Self {
        StructuringElement {
            width: 5,
            height: 5,
        }
    }
}

impl TryFrom<[usize; 2]> for StructuringElement {
    type Error = Error;

    fn try_from(v: [usize; 2]) -> Result<Self> {
        StructuringElement::new(v[0], v[1])
    }
}

impl From<StructuringElement> for [usize; 2] {
    fn from(se: StructuringElement) -> Self {
        [se.width, se.height]
    }
}

impl StructuringElement {
    /// Both sides must be odd so the element has a center pixel.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::Validation(format!(
                "structuring element {width}x{height} must have odd sides"
            )));
        }
        Ok(StructuringElement { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn radii(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }
}

/// Pixels outside the mask count as background.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (rx, ry) = se.radii();
    let rows = sweep_rows(mask, rx, Reduce::Any);
    sweep_cols(&rows, ry, Reduce::Any)
}

/// Pixels outside the mask count as background, so anything within the
/// element's radius of the border erodes away.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (rx, ry) = se.radii();
    let rows = sweep_rows(mask, rx, Reduce::All);
    sweep_cols(&rows, ry, Reduce::All)
}

/// Dilation followed by erosion.
///
/// The mask is treated as a window onto an unbounded plane that is
/// background outside it: the intermediate dilation is kept on a canvas
/// padded by the element radius so the erosion sees the full dilated set.
/// The result is therefore extensive, idempotent and increasing.
pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (rx, ry) = se.radii();
    let (pw, ph) = (mask.width + 2 * rx, mask.height + 2 * ry);
    let mut padded = BinaryMask::zeros(pw, ph);
    for y in 0..mask.height {
        let src = &mask.data[y * mask.width..(y + 1) * mask.width];
        let start = (y + ry) * pw + rx;
        padded.data[start..start + mask.width].copy_from_slice(src);
    }
    let closed = erode(&dilate(&padded, se), se);
    let mut out = BinaryMask::zeros(mask.width, mask.height);
    for y in 0..mask.height {
        let start = (y + ry) * pw + rx;
        out.data[y * mask.width..(y + 1) * mask.width].copy_from_slice(&closed.data[start..start + mask.width]);
    }
    out
}

#[derive(Clone, Copy)]
enum Reduce {
    Any,
    All,
}

fn sweep_rows(mask: &BinaryMask, r: usize, how: Reduce) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut out = BinaryMask::zeros(w, h);
    let mut prefix = vec![0u32; w + 1];
    for y in 0..h {
        let row = &mask.data[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x] as u32;
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            let ones = prefix[hi] - prefix[lo];
            out.data[y * w + x] = match how {
                Reduce::Any => (ones > 0) as u8,
                Reduce::All => (ones as usize == 2 * r + 1) as u8,
            };
        }
    }
    out
}

fn sweep_cols(mask: &BinaryMask, r: usize, how: Reduce) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut out = BinaryMask::zeros(w, h);
    let mut prefix = vec![0u32; (h + 1) * w];
    for y in 0..h {
        for x in 0..w {
            prefix[(y + 1) * w + x] = prefix[y * w + x] + mask.data[y * w + x] as u32;
        }
    }
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r + 1).min(h);
        for x in 0..w {
            let ones = prefix[hi * w + x] - prefix[lo * w + x];
            out.data[y * w + x] = match how {
                Reduce::Any => (ones > 0) as u8,
                Reduce::All => (ones as usize == 2 * r + 1) as u8,
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closing by definition: `p` survives iff every translate of the
    /// element that covers `p` touches the input set.
    fn closing_oracle(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
        let (w, h) = (m.width() as i64, m.height() as i64);
        let (sw, sh) = (se.width() as i64, se.height() as i64);
        let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && m.get(x as usize, y as usize);
        let mut out = BinaryMask::zeros(m.width(), m.height());
        for y in 0..h {
            for x in 0..w {
                let all_hit = (y - sh + 1..=y).all(|oy| {
                    (x - sw + 1..=x).all(|ox| (oy..oy + sh).any(|yy| (ox..ox + sw).any(|xx| inside(xx, yy))))
                });
                out.set(x as usize, y as usize, all_hit);
            }
        }
        out
    }

    fn dilate_oracle(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
        let (rx, ry) = (se.width() as i64 / 2, se.height() as i64 / 2);
        let (w, h) = (m.width() as i64, m.height() as i64);
        let mut out = BinaryMask::zeros(m.width(), m.height());
        for y in 0..h {
            for x in 0..w {
                let hit = (-ry..=ry).any(|dy| {
                    (-rx..=rx).any(|dx| {
                        let (xx, yy) = (x + dx, y + dy);
                        xx >= 0 && yy >= 0 && xx < w && yy < h && m.get(xx as usize, yy as usize)
                    })
                });
                out.set(x as usize, y as usize, hit);
            }
        }
        out
    }

    fn erode_oracle(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
        let (rx, ry) = (se.width() as i64 / 2, se.height() as i64 / 2);
        let (w, h) = (m.width() as i64, m.height() as i64);
        let mut out = BinaryMask::zeros(m.width(), m.height());
        for y in 0..h {
            for x in 0..w {
                let all = (-ry..=ry).all(|dy| {
                    (-rx..=rx).all(|dx| {
                        let (xx, yy) = (x + dx, y + dy);
                        xx >= 0 && yy >= 0 && xx < w && yy < h && m.get(xx as usize, yy as usize)
                    })
                });
                out.set(x as usize, y as usize, all);
            }
        }
        out
    }

    fn arb_mask(max: usize) -> impl Strategy<Value = BinaryMask> {
        (1..max, 1..max, 0u32..100).prop_flat_map(|(w, h, density)| {
            prop::collection::vec(0u32..100, w * h).prop_map(move |v| {
                BinaryMask::from_data(w, h, v.into_iter().map(|r| (r < density) as u8).collect()).unwrap()
            })
        })
    }

    #[test]
    fn even_element_rejected() {
        assert!(StructuringElement::new(4, 5).is_err());
        assert!(StructuringElement::new(5, 2).is_err());
        assert!(StructuringElement::new(1, 1).is_ok());
    }

    #[test]
    fn all_zero_stays_zero() {
        let m = BinaryMask::zeros(30, 20);
        assert_eq!(close(&m, &StructuringElement::default()), m);
    }

    #[test]
    fn bridges_three_pixel_gap() {
        let mut m = BinaryMask::zeros(30, 40);
        for y in 5..35 {
            m.set(10, y, true);
            m.set(14, y, true);
        }
        let se = StructuringElement::default();
        let c = close(&m, &se);
        assert_eq!(c, closing_oracle(&m, &se));
        for y in 7..33 {
            for x in 11..14 {
                assert!(c.get(x, y), "gap pixel ({x}, {y}) not bridged");
            }
        }
    }

    #[test]
    fn fills_single_hole_in_square() {
        let mut m = BinaryMask::zeros(71, 71);
        for y in 10..61 {
            for x in 10..61 {
                m.set(x, y, true);
            }
        }
        let before = m.clone();
        m.set(35, 35, false);
        let c = close(&m, &StructuringElement::default());
        assert_eq!(c, before);
    }

    #[test]
    fn border_pixels_survive_closing() {
        let mut m = BinaryMask::zeros(8, 8);
        m.set(0, 0, true);
        m.set(7, 3, true);
        let c = close(&m, &StructuringElement::default());
        assert_eq!(c, m);
        // erosion alone treats the outside as background
        assert_eq!(erode(&dilate(&m, &StructuringElement::default()), &StructuringElement::default()).count_ones(), 0);
    }

    #[test]
    fn rejects_non_binary_data() {
        assert!(BinaryMask::from_data(2, 1, vec![0, 2]).is_err());
        assert!(BinaryMask::from_data(2, 1, vec![0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dilate_erode_match_oracles(m in arb_mask(24), sw in 0usize..4, sh in 0usize..4) {
            let se = StructuringElement::new(2 * sw + 1, 2 * sh + 1).unwrap();
            prop_assert_eq!(dilate(&m, &se), dilate_oracle(&m, &se));
            prop_assert_eq!(erode(&m, &se), erode_oracle(&m, &se));
        }

        #[test]
        fn close_matches_definition(m in arb_mask(20), sw in 0usize..3, sh in 0usize..3) {
            let se = StructuringElement::new(2 * sw + 1, 2 * sh + 1).unwrap();
            prop_assert_eq!(close(&m, &se), closing_oracle(&m, &se));
        }

        #[test]
        fn closing_laws(m in arb_mask(40), extra in arb_mask(40)) {
            let se = StructuringElement::default();
            let c = close(&m, &se);
            prop_assert!(m.is_subset_of(&c));
            prop_assert_eq!(close(&c, &se), c.clone());
            if extra.width() == m.width() && extra.height() == m.height() {
                let sup = BinaryMask::from_data(m.width(), m.height(),
                    m.data().iter().zip(extra.data()).map(|(a, b)| a | b).collect()).unwrap();
                prop_assert!(c.is_subset_of(&close(&sup, &se)));
            }
        }
    }
}
