use super::PwmFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotorWrite {
    pub motor: usize,
    pub duty: u8,
}

/// Virtual actuator board. Bytes accumulate until a whole frame of one byte
/// per motor is available; only then is the frame written out, in motor
/// order. A trailing partial frame stays buffered.
#[derive(Debug, Clone)]
pub struct BoardDecoder {
    motors: usize,
    buffer: Vec<u8>,
    frames: usize,
}

impl BoardDecoder {
    pub fn new(motors: usize) -> Self {
        assert!(motors > 0, "a board drives at least one motor");
        Self {
            motors,
            buffer: Vec::with_capacity(motors),
            frames: 0,
        }
    }

    pub fn motors(&self) -> usize {
        self.motors
    }

    pub fn buffered(&self) -> &[u8] {
        &self.buffer
    }

    /// Frames written out so far.
    pub fn frames_emitted(&self) -> usize {
        self.frames
    }

    /// Consumes serial bytes and returns every complete frame.
    pub fn feed_frames(&mut self, bytes: &[u8]) -> Vec<PwmFrame> {
        self.buffer.extend_from_slice(bytes);
        let whole = self.buffer.len() / self.motors * self.motors;
        let frames: Vec<PwmFrame> = self.buffer[..whole]
            .chunks_exact(self.motors)
            .map(|c| PwmFrame { values: c.to_vec() })
            .collect();
        self.buffer.drain(..whole);
        self.frames += frames.len();
        frames
    }

    /// Consumes serial bytes and returns the resulting motor writes.
    pub fn feed(&mut self, bytes: &[u8]) -> Vec<MotorWrite> {
        self.feed_frames(bytes)
            .into_iter()
            .flat_map(|f| {
                f.values
                    .into_iter()
                    .enumerate()
                    .map(|(motor, duty)| MotorWrite { motor, duty })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_frame_is_written_in_order() {
        let mut b = BoardDecoder::new(5);
        let w = b.feed(&[0, 64, 128, 192, 255]);
        let duties: Vec<u8> = w.iter().map(|m| m.duty).collect();
        let motors: Vec<usize> = w.iter().map(|m| m.motor).collect();
        assert_eq!(duties, vec![0, 64, 128, 192, 255]);
        assert_eq!(motors, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn partial_frame_is_held() {
        let mut b = BoardDecoder::new(5);
        assert_eq!(b.feed_frames(&[1, 2, 3, 4, 5, 6, 7]).len(), 1);
        assert_eq!(b.buffered(), &[6, 7]);
        let f = b.feed_frames(&[8, 9, 10]);
        assert_eq!(f, vec![PwmFrame { values: vec![6, 7, 8, 9, 10] }]);
        assert!(b.buffered().is_empty());
        assert_eq!(b.frames_emitted(), 2);
    }

    #[test]
    fn concatenated_frames_keep_order() {
        let mut b = BoardDecoder::new(2);
        let f = b.feed_frames(&[1, 2, 3, 4]);
        assert_eq!(f[0].values, vec![1, 2]);
        assert_eq!(f[1].values, vec![3, 4]);
    }
}
