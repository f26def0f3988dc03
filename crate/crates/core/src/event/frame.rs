use super::{check_bounds, Event, EventError, Resolution};
use serde::{Deserialize, Serialize};

/// How polarity contributes to a frame cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameMode {
    /// Every event adds one, regardless of polarity.
    #[default]
    Unsigned,
    /// ON events add one, OFF events subtract one.
    Signed,
}

/// 2D accumulation of events over `[t_start, t_end)`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub resolution: Resolution,
    pub cells: Vec<i32>,
    pub t_start: u64,
    pub t_end: u64,
    pub mode: FrameMode,
}

impl Frame {
    pub fn zeros(resolution: Resolution, t_start: u64, t_end: u64) -> Self {
        Frame {
            resolution,
            cells: vec![0; resolution.cells()],
            t_start,
            t_end,
            mode: FrameMode::Unsigned,
        }
    }

    /// Counts events with `t0 <= t < t1` into a frame. Events outside the
    /// window are ignored; events outside the resolution are an error even
    /// when they fall outside the window.
    pub fn accumulate(
        events: &[Event],
        t0: u64,
        t1: u64,
        resolution: Resolution,
        mode: FrameMode,
    ) -> Result<Frame, EventError> {
        resolution.validate()?;
        if t0 >= t1 {
            return Err(EventError::InvalidWindow(t0, t1));
        }
        check_bounds(events, resolution)?;
        let mut frame = Frame::zeros(resolution, t0, t1);
        frame.mode = mode;
        for e in events.iter().filter(|e| e.t >= t0 && e.t < t1) {
            let idx = resolution.index(e.x, e.y);
            frame.cells[idx] += match mode {
                FrameMode::Unsigned => 1,
                FrameMode::Signed => e.polarity.sign() as i32,
            };
        }
        Ok(frame)
    }

    pub fn get(&self, x: u16, y: u16) -> i32 {
        self.cells[self.resolution.index(x, y)]
    }

    pub fn total(&self) -> i64 {
        self.cells.iter().map(|&c| c as i64).sum()
    }

    pub fn nonzero(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// Floor-mapped downsampling: source cell `(x, y)` adds its count to
    /// target cell `(x*tw/sw, y*th/sh)`. The total count is preserved for any
    /// ratio, integer or not.
    pub fn downsample(&self, target: Resolution) -> Result<Frame, EventError> {
        target.validate()?;
        let src = self.resolution;
        if !target.fits_in(src) {
            return Err(EventError::UpsampleRequested {
                source_res: src,
                target,
            });
        }
        let (sw, sh) = (src.width as usize, src.height as usize);
        let (tw, th) = (target.width as usize, target.height as usize);
        let col_map: Vec<usize> = (0..sw).map(|x| x * tw / sw).collect();
        let mut cells = vec![0i32; target.cells()];
        for y in 0..sh {
            let ty = y * th / sh;
            let row = &self.cells[y * sw..(y + 1) * sw];
            let out = &mut cells[ty * tw..(ty + 1) * tw];
            for (x, &c) in row.iter().enumerate() {
                out[col_map[x]] += c;
            }
        }
        Ok(Frame {
            resolution: target,
            cells,
            t_start: self.t_start,
            t_end: self.t_end,
            mode: self.mode,
        })
    }

    /// Elementwise sum of two frames on the same grid; the window becomes the
    /// hull of both.
    pub fn merged(&self, other: &Frame) -> Result<Frame, EventError> {
        if self.resolution != other.resolution {
            return Err(EventError::ResolutionMismatch {
                events: self.resolution,
                depth: other.resolution,
            });
        }
        Ok(Frame {
            resolution: self.resolution,
            cells: self.cells.iter().zip(&other.cells).map(|(a, b)| a + b).collect(),
            t_start: self.t_start.min(other.t_start),
            t_end: self.t_end.max(other.t_end),
            mode: self.mode,
        })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| c as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Polarity;
    use proptest::prelude::*;

    fn ev(t: u64, x: u16, y: u16) -> Event {
        Event::new(t, x, y, Polarity::On)
    }

    #[test]
    fn empty_stream_gives_zero_frame() {
        let f = Frame::accumulate(&[], 0, 1000, Resolution::new(16, 8), FrameMode::Unsigned).unwrap();
        assert_eq!(f.total(), 0);
        assert_eq!(f.cells.len(), 128);
    }

    #[test]
    fn counts_only_in_window() {
        let evs = [ev(10, 5, 5), ev(20, 5, 5), ev(999, 5, 5), ev(1000, 5, 5)];
        let f = Frame::accumulate(&evs, 0, 1000, Resolution::new(16, 16), FrameMode::Unsigned).unwrap();
        assert_eq!(f.get(5, 5), 3);
        assert_eq!(f.total(), 3);
    }

    #[test]
    fn signed_mode_uses_polarity() {
        let evs = [ev(0, 1, 1), Event::new(1, 1, 1, Polarity::Off), Event::new(2, 1, 1, Polarity::Off)];
        let f = Frame::accumulate(&evs, 0, 10, Resolution::new(4, 4), FrameMode::Signed).unwrap();
        assert_eq!(f.get(1, 1), -1);
    }

    #[test]
    fn out_of_bounds_names_event() {
        let evs = [ev(0, 1, 1), ev(5, 3, 9)];
        let err = Frame::accumulate(&evs, 0, 10, Resolution::new(4, 4), FrameMode::Unsigned).unwrap_err();
        assert_eq!(
            err,
            EventError::OutOfBounds {
                index: 1,
                t: 5,
                x: 3,
                y: 9,
                resolution: Resolution::new(4, 4)
            }
        );
    }

    #[test]
    fn rejects_empty_window() {
        assert!(matches!(
            Frame::accumulate(&[], 5, 5, Resolution::new(4, 4), FrameMode::Unsigned),
            Err(EventError::InvalidWindow(5, 5))
        ));
    }

    #[test]
    fn downsample_chip_geometry() {
        let src = Resolution::new(240, 180);
        let f = Frame::accumulate(&[ev(0, 120, 90)], 0, 1, src, FrameMode::Unsigned).unwrap();
        let d = f.downsample(Resolution::new(86, 65)).unwrap();
        assert_eq!(d.get(43, 32), 1);
        assert_eq!(d.total(), 1);
    }

    #[test]
    fn downsample_identity() {
        let src = Resolution::new(12, 7);
        let evs: Vec<_> = (0..30).map(|i| ev(i, (i * 5 % 12) as u16, (i % 7) as u16)).collect();
        let f = Frame::accumulate(&evs, 0, 100, src, FrameMode::Unsigned).unwrap();
        assert_eq!(f.downsample(src).unwrap(), f);
    }

    #[test]
    fn downsample_refuses_upsampling() {
        let f = Frame::zeros(Resolution::new(10, 10), 0, 1);
        assert!(matches!(
            f.downsample(Resolution::new(11, 5)),
            Err(EventError::UpsampleRequested { .. })
        ));
    }

    fn arb_events(w: u16, h: u16) -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec((0u64..3000, 0..w, 0..h, any::<bool>()), 0..300).prop_map(|v| {
            v.into_iter()
                .map(|(t, x, y, p)| Event::new(t, x, y, if p { Polarity::On } else { Polarity::Off }))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn downsample_conserves_count(
            evs in arb_events(240, 180),
            tw in 1u16..=240,
            th in 1u16..=180,
        ) {
            let f = Frame::accumulate(&evs, 0, 3000, Resolution::new(240, 180), FrameMode::Unsigned).unwrap();
            // brute-force sum over raw cells vs. target cells
            let before: i64 = f.cells.iter().map(|&c| c as i64).sum();
            let d = f.downsample(Resolution::new(tw, th)).unwrap();
            let after: i64 = d.cells.iter().map(|&c| c as i64).sum();
            prop_assert_eq!(before, after);
            prop_assert_eq!(before, evs.len() as i64);
        }

        #[test]
        fn window_partition(evs in arb_events(32, 24), t1 in 1u64..2999) {
            let res = Resolution::new(32, 24);
            let a = Frame::accumulate(&evs, 0, t1, res, FrameMode::Unsigned).unwrap();
            let b = Frame::accumulate(&evs, t1, 3000, res, FrameMode::Unsigned).unwrap();
            let whole = Frame::accumulate(&evs, 0, 3000, res, FrameMode::Unsigned).unwrap();
            prop_assert_eq!(a.merged(&b).unwrap(), whole);
        }
    }
}
