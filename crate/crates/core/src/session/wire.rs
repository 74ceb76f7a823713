//! Binary pose streaming, protocol version 1.
//!
//! Every message is
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | `u32` little-endian length of everything after this field |
//! | 1 | version, `1` |
//! | 1 | type: `1` hand frame, `2` engage, `3` end |
//! | … | payload, little-endian `f64` values |
//!
//! A hand-frame payload is `timestamp, hand_count, keypoint_count` followed
//! per hand by `side (0 left, 1 right), px, py, pz, qw, qx, qy, qz` and
//! `keypoint_count` keypoints as `x, y, z`. An engage payload is the
//! timestamp alone; an end message has no payload. Keypoint labels are not
//! transmitted: both ends agree on them out of band. Messages longer than
//! [`MAX_MESSAGE_LEN`] are framing errors.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use nalgebra::Vector3;

use super::{BimanualFrame, HandFrame, HandSide, LatestSlot};
use crate::error::{Error, Result};
use crate::kinematics::Pose;

pub const PROTOCOL_VERSION: u8 = 1;
pub const MAX_MESSAGE_LEN: u32 = 1 << 20;

const TYPE_HAND_FRAME: u8 = 1;
const TYPE_ENGAGE: u8 = 2;
const TYPE_END: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    HandFrame(BimanualFrame),
    Engage { timestamp: f64 },
    End,
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn encode(message: &WireMessage) -> Vec<u8> {
    let mut body = vec![PROTOCOL_VERSION];
    match message {
        WireMessage::HandFrame(frame) => {
            body.push(TYPE_HAND_FRAME);
            let hands: Vec<&HandFrame> = [&frame.left, &frame.right].into_iter().flatten().collect();
            let k = hands.first().map_or(0, |h| h.keypoints.len());
            put_f64(&mut body, frame.timestamp);
            put_f64(&mut body, hands.len() as f64);
            put_f64(&mut body, k as f64);
            for h in hands {
                assert_eq!(h.keypoints.len(), k, "both hands carry the same keypoints");
                put_f64(&mut body, if h.side == HandSide::Left { 0.0 } else { 1.0 });
                for v in h.wrist.position.iter() {
                    put_f64(&mut body, *v);
                }
                for v in h.wrist.wxyz() {
                    put_f64(&mut body, v);
                }
                for p in &h.keypoints {
                    for v in p.iter() {
                        put_f64(&mut body, *v);
                    }
                }
            }
        }
        WireMessage::Engage { timestamp } => {
            body.push(TYPE_ENGAGE);
            put_f64(&mut body, *timestamp);
        }
        WireMessage::End => body.push(TYPE_END),
    }
    let mut out = (body.len() as u32).to_le_bytes().to_vec();
    out.extend_from_slice(&body);
    out
}

/// Reads one message. `Ok(None)` on a clean end of input at a message
/// boundary.
pub fn read_message<R: Read>(reader: &mut R, labels: &Arc<[String]>) -> Result<Option<WireMessage>> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match reader.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Framing("stream ended inside a length prefix".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(prefix);
    if !(2..=MAX_MESSAGE_LEN).contains(&len) {
        return Err(Error::Framing(format!("message length {len} out of range")));
    }
    let mut body = vec![0u8; len as usize];
    reader.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Framing("stream ended inside a message".into()),
        _ => e.into(),
    })?;
    decode_body(&body, labels).map(Some)
}

/// Decodes one complete message including its length prefix.
pub fn decode(bytes: &[u8], labels: &Arc<[String]>) -> Result<WireMessage> {
    let mut cursor = bytes;
    let msg = read_message(&mut cursor, labels)?.ok_or_else(|| Error::Framing("empty input".into()))?;
    if !cursor.is_empty() {
        return Err(Error::Framing(format!("{} trailing bytes", cursor.len())));
    }
    Ok(msg)
}

fn decode_body(body: &[u8], labels: &Arc<[String]>) -> Result<WireMessage> {
    if body[0] != PROTOCOL_VERSION {
        return Err(Error::ProtocolVersion {
            expected: PROTOCOL_VERSION,
            got: body[0],
        });
    }
    let payload = &body[2..];
    if payload.len() % 8 != 0 {
        return Err(Error::Framing(format!("payload of {} bytes is not whole doubles", payload.len())));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let expect_len = |n: usize| {
        if values.len() == n {
            Ok(())
        } else {
            Err(Error::Framing(format!("payload has {} values, expected {n}", values.len())))
        }
    };
    match body[1] {
        TYPE_END => {
            expect_len(0)?;
            Ok(WireMessage::End)
        }
        TYPE_ENGAGE => {
            expect_len(1)?;
            Ok(WireMessage::Engage { timestamp: values[0] })
        }
        TYPE_HAND_FRAME => {
            if values.len() < 3 {
                return Err(Error::Framing("hand frame header is truncated".into()));
            }
            let (timestamp, hands, k) = (values[0], values[1], values[2]);
            if !(hands == 1.0 || hands == 2.0) {
                return Err(Error::Framing(format!("hand count {hands}")));
            }
            if k != labels.len() as f64 {
                return Err(Error::Framing(format!(
                    "frame carries {k} keypoints, receiver expects {}",
                    labels.len()
                )));
            }
            let (hands, k) = (hands as usize, k as usize);
            let block = 8 + 3 * k;
            expect_len(3 + hands * block)?;
            let mut frame = BimanualFrame {
                timestamp,
                left: None,
                right: None,
            };
            for v in values[3..].chunks_exact(block) {
                let side = match v[0] {
                    0.0 => HandSide::Left,
                    1.0 => HandSide::Right,
                    s => return Err(Error::Framing(format!("side code {s}"))),
                };
                let wrist = Pose::from_wxyz([v[1], v[2], v[3]], [v[4], v[5], v[6], v[7]])
                    .map_err(|e| Error::Framing(e.to_string()))?;
                let hand = HandFrame {
                    timestamp,
                    side,
                    wrist,
                    keypoints: v[8..].chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect(),
                    keypoint_labels: labels.clone(),
                };
                let slot = match side {
                    HandSide::Left => &mut frame.left,
                    HandSide::Right => &mut frame.right,
                };
                if slot.replace(hand).is_some() {
                    return Err(Error::Framing(format!("{side} hand appears twice")));
                }
            }
            Ok(WireMessage::HandFrame(frame))
        }
        t => Err(Error::Framing(format!("unknown message type {t}"))),
    }
}

/// Listening side of a stream; each accepted connection gets a sender.
#[derive(Debug)]
pub struct StreamServer {
    listener: TcpListener,
}

pub fn serve_stream(endpoint: impl ToSocketAddrs) -> Result<StreamServer> {
    Ok(StreamServer {
        listener: TcpListener::bind(endpoint)?,
    })
}

impl StreamServer {
    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    pub fn accept(&self) -> Result<StreamSender> {
        let (stream, _) = self.listener.accept()?;
        stream.set_nodelay(true)?;
        Ok(StreamSender { stream })
    }
}

#[derive(Debug)]
pub struct StreamSender {
    stream: TcpStream,
}

impl StreamSender {
    pub fn send(&mut self, message: &WireMessage) -> Result<()> {
        self.stream.write_all(&encode(message))?;
        Ok(())
    }

    /// Writes raw bytes, bypassing the encoder.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.stream.write_all(bytes)?;
        Ok(())
    }
}

#[derive(Debug, Default)]
struct ReceiverShared {
    slot: LatestSlot<BimanualFrame>,
    engage: Mutex<Option<f64>>,
    received: AtomicU64,
    stale: AtomicU64,
    ended: AtomicBool,
    diagnostic: Mutex<Option<String>>,
}

/// Receiving side. A background thread decodes messages as they arrive and
/// keeps only the newest hand frame, so a slow consumer skips ahead instead
/// of working through a backlog.
#[derive(Debug)]
pub struct StreamReceiver {
    shared: Arc<ReceiverShared>,
    reader: Option<JoinHandle<()>>,
    last_delivered: Option<f64>,
}

pub fn connect_stream(endpoint: impl ToSocketAddrs, labels: Arc<[String]>) -> Result<StreamReceiver> {
    let stream = TcpStream::connect(endpoint)?;
    stream.set_nodelay(true)?;
    Ok(StreamReceiver::spawn(stream, labels))
}

impl StreamReceiver {
    /// Starts receiving from any byte source.
    pub fn spawn<R: Read + Send + 'static>(mut source: R, labels: Arc<[String]>) -> Self {
        let shared = Arc::new(ReceiverShared::default());
        let s = shared.clone();
        let reader = std::thread::spawn(move || {
            let outcome = loop {
                match read_message(&mut source, &labels) {
                    Ok(Some(WireMessage::HandFrame(f))) => {
                        s.received.fetch_add(1, Ordering::Relaxed);
                        s.slot.put(f);
                    }
                    Ok(Some(WireMessage::Engage { timestamp })) => {
                        *s.engage.lock().expect("engage lock") = Some(timestamp);
                    }
                    Ok(Some(WireMessage::End)) => {
                        s.ended.store(true, Ordering::Release);
                        break None;
                    }
                    Ok(None) => break Some("connection closed before end message".to_string()),
                    Err(e) => break Some(e.to_string()),
                }
            };
            if let Some(d) = outcome {
                log::warn!("pose stream terminated: {d}");
                *s.diagnostic.lock().expect("diagnostic lock") = Some(d);
            }
            s.slot.close();
        });
        Self {
            shared,
            reader: Some(reader),
            last_delivered: None,
        }
    }

    fn accept(&mut self, frame: BimanualFrame) -> Option<BimanualFrame> {
        if self.last_delivered.is_some_and(|t| frame.timestamp <= t) {
            self.shared.stale.fetch_add(1, Ordering::Relaxed);
            return None;
        }
        self.last_delivered = Some(frame.timestamp);
        Some(frame)
    }

    /// Blocks for the newest unseen frame; `None` when the stream is over.
    pub fn recv(&mut self) -> Option<BimanualFrame> {
        loop {
            let f = self.shared.slot.take()?;
            if let Some(f) = self.accept(f) {
                return Some(f);
            }
        }
    }

    pub fn try_recv(&mut self) -> Option<BimanualFrame> {
        let f = self.shared.slot.try_take()?;
        self.accept(f)
    }

    /// Hand frames decoded so far.
    pub fn received(&self) -> u64 {
        self.shared.received.load(Ordering::Relaxed)
    }

    /// Frames discarded: overwritten before being read, or older than the
    /// newest delivered frame.
    pub fn dropped(&self) -> u64 {
        self.shared.slot.overwritten() + self.shared.stale.load(Ordering::Relaxed)
    }

    /// Timestamp carried by the most recent engage message.
    pub fn engage_requested(&self) -> Option<f64> {
        *self.shared.engage.lock().expect("engage lock")
    }

    /// True once an end message arrived.
    pub fn ended_cleanly(&self) -> bool {
        self.shared.ended.load(Ordering::Acquire)
    }

    /// Why the stream stopped, when it did not end with an end message.
    pub fn diagnostic(&self) -> Option<String> {
        self.shared.diagnostic.lock().expect("diagnostic lock").clone()
    }

    /// Waits for the reader thread to finish.
    pub fn join(&mut self) {
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}
