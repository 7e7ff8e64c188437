//! Address events, the 40-bit record codec, and stream level filters.
//!
//! Every event occupies exactly five bytes, most significant byte first:
//!
//! ```text
//! byte 0   x address
//! byte 1   y address
//! byte 2   bit 7 polarity, bits 6..0 timestamp bits 22..16
//! byte 3   timestamp bits 15..8
//! byte 4   timestamp bits 7..0
//! ```
//!
//! Timestamps are microseconds from recording start and fit in 23 bits, which
//! covers recordings up to about 8.4 seconds.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

/// Size of one encoded event record.
pub const EVENT_BYTES: usize = 5;

/// Largest encodable timestamp (23 bits of microseconds).
pub const MAX_TIMESTAMP: u32 = (1 << 23) - 1;

/// Contrast step direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// Brightness decreased.
    Off,
    /// Brightness increased.
    On,
}

impl Polarity {
    pub fn is_on(self) -> bool {
        matches!(self, Polarity::On)
    }

    fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }

    fn from_bit(bit: u8) -> Polarity {
        if bit == 0 {
            Polarity::Off
        } else {
            Polarity::On
        }
    }
}

/// One address event: pixel location, polarity, and time in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub x: u8,
    pub y: u8,
    pub polarity: Polarity,
    pub t: u32,
}

/// A recording: the emitting frame geometry plus time ordered events.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub duration_us: u32,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(width: u16, height: u16, duration_us: u32) -> EventStream {
        EventStream {
            width,
            height,
            duration_us,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of events with the given polarity.
    pub fn count(&self, polarity: Polarity) -> usize {
        self.events.iter().filter(|e| e.polarity == polarity).count()
    }
}

/// Inclusive pixel rectangle used for spatial crops and annotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBox {
    pub x_min: u16,
    pub y_min: u16,
    pub x_max: u16,
    pub y_max: u16,
}

impl PixelBox {
    pub fn new(x_min: u16, y_min: u16, x_max: u16, y_max: u16) -> PixelBox {
        PixelBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Width in pixels, zero when the bounds are inverted.
    pub fn width(&self) -> u16 {
        if self.x_max >= self.x_min {
            self.x_max - self.x_min + 1
        } else {
            0
        }
    }

    pub fn height(&self) -> u16 {
        if self.y_max >= self.y_min {
            self.y_max - self.y_min + 1
        } else {
            0
        }
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("record at byte {offset} is truncated: {got} of {EVENT_BYTES} bytes")]
    Truncated { offset: usize, got: usize },
    #[error("event {index} at ({x}, {y}) lies outside the {width}x{height} frame")]
    OutOfFrame {
        index: usize,
        x: u8,
        y: u8,
        width: u16,
        height: u16,
    },
    #[error("event {index} timestamp {t} precedes predecessor {prev}")]
    OutOfOrder { index: usize, t: u32, prev: u32 },
    #[error("event {index} timestamp {t} exceeds the declared duration {duration_us}")]
    PastEnd {
        index: usize,
        t: u32,
        duration_us: u32,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Pack one event into its five byte record.
///
/// Panics if the timestamp needs more than 23 bits.
pub fn encode_event(event: &Event) -> [u8; EVENT_BYTES] {
    assert!(
        event.t <= MAX_TIMESTAMP,
        "timestamp {} exceeds 23 bits",
        event.t
    );
    [
        event.x,
        event.y,
        (event.polarity.bit() << 7) | ((event.t >> 16) as u8 & 0x7f),
        (event.t >> 8) as u8,
        event.t as u8,
    ]
}

/// Unpack one five byte record.
pub fn decode_event(bytes: [u8; EVENT_BYTES]) -> Event {
    let t = (((bytes[2] & 0x7f) as u32) << 16) | ((bytes[3] as u32) << 8) | bytes[4] as u32;
    Event {
        x: bytes[0],
        y: bytes[1],
        polarity: Polarity::from_bit(bytes[2] >> 7),
        t,
    }
}

/// Decode a whole recording, validating frame bounds and time order.
pub fn read_stream(
    bytes: &[u8],
    width: u16,
    height: u16,
    duration_us: u32,
) -> Result<EventStream, StreamError> {
    let mut events = Vec::with_capacity(bytes.len() / EVENT_BYTES);
    let mut prev_t = 0u32;
    for (index, chunk) in bytes.chunks(EVENT_BYTES).enumerate() {
        if chunk.len() < EVENT_BYTES {
            return Err(StreamError::Truncated {
                offset: index * EVENT_BYTES,
                got: chunk.len(),
            });
        }
        let event = decode_event(chunk.try_into().unwrap());
        if u16::from(event.x) >= width || u16::from(event.y) >= height {
            return Err(StreamError::OutOfFrame {
                index,
                x: event.x,
                y: event.y,
                width,
                height,
            });
        }
        if event.t < prev_t {
            return Err(StreamError::OutOfOrder {
                index,
                t: event.t,
                prev: prev_t,
            });
        }
        if event.t > duration_us {
            return Err(StreamError::PastEnd {
                index,
                t: event.t,
                duration_us,
            });
        }
        prev_t = event.t;
        events.push(event);
    }
    Ok(EventStream {
        width,
        height,
        duration_us,
        events,
    })
}

/// Encode a recording back to its binary form.
pub fn write_stream(stream: &EventStream) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(stream.events.len() * EVENT_BYTES);
    for event in &stream.events {
        bytes.extend_from_slice(&encode_event(event));
    }
    bytes
}

pub fn read_stream_file(
    path: &Path,
    width: u16,
    height: u16,
    duration_us: u32,
) -> Result<EventStream, StreamError> {
    let bytes = fs::read(path)?;
    read_stream(&bytes, width, height, duration_us)
}

pub fn write_stream_file(path: &Path, stream: &EventStream) -> io::Result<()> {
    fs::write(path, write_stream(stream))
}

/// Keep events inside the box and rebase their addresses to its origin.
///
/// The duration is unchanged; the frame shrinks to the box extent.
pub fn crop_spatial(stream: &EventStream, bounds: PixelBox) -> EventStream {
    let events = stream
        .events
        .iter()
        .filter(|e| bounds.contains(u16::from(e.x), u16::from(e.y)))
        .map(|e| Event {
            x: (u16::from(e.x) - bounds.x_min) as u8,
            y: (u16::from(e.y) - bounds.y_min) as u8,
            polarity: e.polarity,
            t: e.t,
        })
        .collect();
    EventStream {
        width: bounds.width(),
        height: bounds.height(),
        duration_us: stream.duration_us,
        events,
    }
}

/// Keep events with `t_start <= t < t_end` and rebase time to the window.
pub fn time_slice(stream: &EventStream, t_start: u32, t_end: u32) -> EventStream {
    let events = stream
        .events
        .iter()
        .filter(|e| e.t >= t_start && e.t < t_end)
        .map(|e| Event { t: e.t - t_start, ..*e })
        .collect();
    EventStream {
        width: stream.width,
        height: stream.height,
        duration_us: t_end.saturating_sub(t_start),
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(x: u8, y: u8, polarity: Polarity, t: u32) -> Event {
        Event { x, y, polarity, t }
    }

    #[test]
    fn encodes_reference_record() {
        let bytes = encode_event(&ev(1, 2, Polarity::On, 3));
        assert_eq!(bytes, [0x01, 0x02, 0x80, 0x00, 0x03]);
    }

    #[test]
    fn encodes_boundary_records() {
        assert_eq!(encode_event(&ev(0, 0, Polarity::Off, 0)), [0; 5]);
        let top = ev(255, 255, Polarity::On, MAX_TIMESTAMP);
        assert_eq!(encode_event(&top), [0xff; 5]);
        assert_eq!(decode_event([0xff; 5]), top);
    }

    #[test]
    fn timestamp_bits_split_across_bytes() {
        let bytes = encode_event(&ev(7, 9, Polarity::Off, 0x0059_e2f1));
        assert_eq!(bytes, [0x07, 0x09, 0x59, 0xe2, 0xf1]);
        assert_eq!(decode_event(bytes), ev(7, 9, Polarity::Off, 0x0059_e2f1));
    }

    #[test]
    #[should_panic(expected = "exceeds 23 bits")]
    fn rejects_oversized_timestamp() {
        encode_event(&ev(0, 0, Polarity::On, 1 << 23));
    }

    #[test]
    fn stream_round_trip() {
        let mut stream = EventStream::new(34, 34, 1000);
        stream.events = vec![
            ev(0, 0, Polarity::On, 0),
            ev(33, 12, Polarity::Off, 5),
            ev(12, 33, Polarity::On, 5),
            ev(1, 1, Polarity::Off, 999),
        ];
        let bytes = write_stream(&stream);
        assert_eq!(bytes.len(), 4 * EVENT_BYTES);
        let back = read_stream(&bytes, 34, 34, 1000).unwrap();
        assert_eq!(back, stream);
    }

    #[test]
    fn read_rejects_truncated_record() {
        let mut bytes = write_stream(&EventStream {
            width: 34,
            height: 34,
            duration_us: 10,
            events: vec![ev(1, 1, Polarity::On, 1)],
        });
        bytes.extend_from_slice(&[0x02, 0x02]);
        match read_stream(&bytes, 34, 34, 10) {
            Err(StreamError::Truncated { offset: 5, got: 2 }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn read_rejects_out_of_frame_address() {
        let bytes = encode_event(&ev(40, 2, Polarity::On, 1));
        match read_stream(&bytes, 34, 34, 10) {
            Err(StreamError::OutOfFrame { index: 0, x: 40, .. }) => {}
            other => panic!("expected address error, got {other:?}"),
        }
    }

    #[test]
    fn read_rejects_time_regression() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&encode_event(&ev(1, 1, Polarity::On, 5)));
        bytes.extend_from_slice(&encode_event(&ev(1, 1, Polarity::On, 3)));
        match read_stream(&bytes, 34, 34, 10) {
            Err(StreamError::OutOfOrder {
                index: 1,
                t: 3,
                prev: 5,
            }) => {}
            other => panic!("expected order error, got {other:?}"),
        }
    }

    #[test]
    fn read_rejects_timestamp_past_duration() {
        let bytes = encode_event(&ev(1, 1, Polarity::On, 500));
        assert!(matches!(
            read_stream(&bytes, 34, 34, 400),
            Err(StreamError::PastEnd { index: 0, t: 500, .. })
        ));
    }

    #[test]
    fn crop_full_frame_is_identity() {
        let stream = EventStream {
            width: 34,
            height: 34,
            duration_us: 100,
            events: vec![ev(0, 0, Polarity::On, 1), ev(33, 33, Polarity::Off, 2)],
        };
        let cropped = crop_spatial(&stream, PixelBox::new(0, 0, 33, 33));
        assert_eq!(cropped, stream);
    }

    #[test]
    fn crop_rebases_to_box_origin() {
        let stream = EventStream {
            width: 34,
            height: 34,
            duration_us: 100,
            events: vec![ev(10, 10, Polarity::On, 1)],
        };
        let cropped = crop_spatial(&stream, PixelBox::new(5, 5, 15, 15));
        assert_eq!(cropped.width, 11);
        assert_eq!(cropped.height, 11);
        assert_eq!(cropped.events, vec![ev(5, 5, Polarity::On, 1)]);
        assert_eq!(cropped.duration_us, 100);
    }

    #[test]
    fn crop_outside_events_gives_empty_stream() {
        let stream = EventStream {
            width: 34,
            height: 34,
            duration_us: 100,
            events: vec![ev(0, 0, Polarity::On, 1)],
        };
        let cropped = crop_spatial(&stream, PixelBox::new(20, 20, 30, 30));
        assert!(cropped.is_empty());
        assert_eq!(cropped.width, 11);
    }

    #[test]
    fn time_slice_full_window_is_identity_with_rebased_nothing() {
        let stream = EventStream {
            width: 8,
            height: 8,
            duration_us: 100,
            events: vec![ev(1, 1, Polarity::On, 0), ev(2, 2, Polarity::Off, 99)],
        };
        assert_eq!(time_slice(&stream, 0, 100), stream);
    }

    #[test]
    fn time_slice_empty_window() {
        let stream = EventStream {
            width: 8,
            height: 8,
            duration_us: 100,
            events: vec![ev(1, 1, Polarity::On, 50)],
        };
        let sliced = time_slice(&stream, 50, 50);
        assert!(sliced.is_empty());
        assert_eq!(sliced.duration_us, 0);
    }

    #[test]
    fn time_slice_rebases_timestamps() {
        let stream = EventStream {
            width: 8,
            height: 8,
            duration_us: 300,
            events: vec![
                ev(1, 1, Polarity::On, 99),
                ev(2, 2, Polarity::Off, 100),
                ev(3, 3, Polarity::On, 199),
                ev(4, 4, Polarity::Off, 200),
            ],
        };
        let sliced = time_slice(&stream, 100, 200);
        assert_eq!(sliced.duration_us, 100);
        assert_eq!(
            sliced.events,
            vec![ev(2, 2, Polarity::Off, 0), ev(3, 3, Polarity::On, 99)]
        );
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (any::<u8>(), any::<u8>(), any::<bool>(), 0..=MAX_TIMESTAMP).prop_map(|(x, y, on, t)| {
            Event {
                x,
                y,
                polarity: if on { Polarity::On } else { Polarity::Off },
                t,
            }
        })
    }

    proptest! {
        #[test]
        fn codec_round_trips(event in arb_event()) {
            prop_assert_eq!(decode_event(encode_event(&event)), event);
        }

        #[test]
        fn crop_composes(events in proptest::collection::vec(arb_event(), 0..200)) {
            let mut events = events;
            events.sort_by_key(|e| e.t);
            let stream = EventStream { width: 256, height: 256, duration_us: MAX_TIMESTAMP, events };
            let outer = PixelBox::new(16, 32, 200, 180);
            let inner = PixelBox::new(10, 4, 90, 60);
            let two_step = crop_spatial(&crop_spatial(&stream, outer), inner);
            let combined = PixelBox::new(26, 36, 106, 92);
            let direct = crop_spatial(&stream, combined);
            prop_assert_eq!(two_step.events, direct.events);
        }
    }
}
