use super::{check_bounds, EventError, EventStream, Frame, Resolution};
use serde::{Deserialize, Serialize};

/// Marker for pixels without a depth reading.
pub const NO_READING: f32 = 0.0;
/// Range of the reference stereo depth sensor.
pub const DEFAULT_FAR_MAX_M: f32 = 3.0;

/// Depth image registered to the event grid, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthFrame {
    pub resolution: Resolution,
    pub depth: Vec<f32>,
    pub far_max: f32,
}

impl DepthFrame {
    pub fn filled(resolution: Resolution, value: f32) -> Self {
        DepthFrame {
            resolution,
            depth: vec![value; resolution.cells()],
            far_max: DEFAULT_FAR_MAX_M,
        }
    }

    /// Depth at a pixel, `None` when there is no valid reading.
    pub fn reading(&self, x: u16, y: u16) -> Option<f32> {
        let d = self.depth[self.resolution.index(x, y)];
        (d.is_finite() && d > 0.0 && d <= self.far_max).then_some(d)
    }

    pub fn set(&mut self, x: u16, y: u16, d: f32) {
        let i = self.resolution.index(x, y);
        self.depth[i] = d;
    }

    fn keeps(&self, x: u16, y: u16, near: f32, far: f32) -> bool {
        matches!(self.reading(x, y), Some(d) if d >= near && d <= far)
    }

    fn check(&self, res: Resolution, near: f32, far: f32) -> Result<(), EventError> {
        if self.resolution != res {
            return Err(EventError::ResolutionMismatch {
                events: res,
                depth: self.resolution,
            });
        }
        if !(near >= 0.0 && near < far && far <= self.far_max) {
            return Err(EventError::InvalidDepthRange { near, far });
        }
        Ok(())
    }
}

/// Drops events whose pixel depth is outside `[near, far]` or unknown.
pub fn mask_events(stream: &EventStream, depth: &DepthFrame, near: f32, far: f32) -> Result<EventStream, EventError> {
    depth.check(stream.resolution, near, far)?;
    check_bounds(&stream.events, stream.resolution)?;
    Ok(EventStream {
        resolution: stream.resolution,
        events: stream
            .events
            .iter()
            .copied()
            .filter(|e| depth.keeps(e.x, e.y, near, far))
            .collect(),
    })
}

/// Zeroes frame cells whose depth is outside `[near, far]` or unknown.
pub fn mask_frame(frame: &Frame, depth: &DepthFrame, near: f32, far: f32) -> Result<Frame, EventError> {
    depth.check(frame.resolution, near, far)?;
    let res = frame.resolution;
    let mut out = frame.clone();
    for y in 0..res.height {
        for x in 0..res.width {
            if !depth.keeps(x, y, near, far) {
                out.cells[res.index(x, y)] = 0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, FrameMode, Polarity};
    use proptest::prelude::*;

    fn setup() -> (EventStream, DepthFrame) {
        let res = Resolution::new(4, 1);
        let mut depth = DepthFrame::filled(res, NO_READING);
        depth.set(0, 0, 2.5);
        depth.set(1, 0, 3.5);
        depth.set(3, 0, 0.1);
        let events = (0..4).map(|x| Event::new(x as u64, x, 0, Polarity::On)).collect();
        (EventStream::from_events(res, events).unwrap(), depth)
    }

    #[test]
    fn keeps_in_range_drops_far_and_missing() {
        let (s, d) = setup();
        let kept = mask_events(&s, &d, 0.3, 3.0).unwrap();
        let xs: Vec<u16> = kept.events.iter().map(|e| e.x).collect();
        // x=0 at 2.5 m kept; 3.5 m, no reading and 0.1 m dropped
        assert_eq!(xs, vec![0]);
    }

    #[test]
    fn frame_mask_matches_event_mask() {
        let (s, d) = setup();
        let f = Frame::accumulate(&s.events, 0, 10, s.resolution, FrameMode::Unsigned).unwrap();
        let mf = mask_frame(&f, &d, 0.05, 3.0).unwrap();
        assert_eq!(mf.cells, vec![1, 0, 0, 1]);
    }

    #[test]
    fn mismatched_resolution_is_error() {
        let (s, _) = setup();
        let d = DepthFrame::filled(Resolution::new(4, 2), 1.0);
        assert!(matches!(mask_events(&s, &d, 0.3, 3.0), Err(EventError::ResolutionMismatch { .. })));
    }

    #[test]
    fn bad_range_is_error() {
        let (s, d) = setup();
        assert!(mask_events(&s, &d, 1.0, 1.0).is_err());
        assert!(mask_events(&s, &d, 0.3, 4.0).is_err());
    }

    proptest! {
        #[test]
        fn widening_never_removes_more(
            depths in prop::collection::vec(0.0f32..3.0, 64),
            near in 0.0f32..1.5, far in 1.5f32..3.0,
            dn in 0.0f32..0.5, df in 0.0f32..0.5,
        ) {
            let res = Resolution::new(8, 8);
            let depth = DepthFrame { resolution: res, depth: depths, far_max: 3.0 };
            let events = (0..64u16).map(|i| Event::new(i as u64, i % 8, i / 8, Polarity::On)).collect();
            let s = EventStream::from_events(res, events).unwrap();
            let narrow = mask_events(&s, &depth, near, far).unwrap().len();
            let wide = mask_events(&s, &depth, (near - dn).max(0.0), (far + df).min(3.0)).unwrap().len();
            prop_assert!(wide >= narrow);
        }
    }
}
