use std::sync::{Condvar, Mutex};

/// Single-value mailbox: a new value overwrites an unread one.
#[derive(Debug)]
pub struct LatestSlot<T> {
    state: Mutex<SlotState<T>>,
    ready: Condvar,
}

#[derive(Debug)]
struct SlotState<T> {
    value: Option<T>,
    closed: bool,
    overwritten: u64,
}

impl<T> Default for LatestSlot<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> LatestSlot<T> {
    pub fn new() -> Self {
        Self {
            state: Mutex::new(SlotState {
                value: None,
                closed: false,
                overwritten: 0,
            }),
            ready: Condvar::new(),
        }
    }

    /// Stores `value`; returns true when an unread value was discarded.
    pub fn put(&self, value: T) -> bool {
        let mut s = self.state.lock().expect("slot lock");
        let replaced = s.value.replace(value).is_some();
        if replaced {
            s.overwritten += 1;
        }
        self.ready.notify_all();
        replaced
    }

    pub fn try_take(&self) -> Option<T> {
        self.state.lock().expect("slot lock").value.take()
    }

    /// Blocks until a value is available; `None` once closed and drained.
    pub fn take(&self) -> Option<T> {
        let mut s = self.state.lock().expect("slot lock");
        loop {
            if let Some(v) = s.value.take() {
                return Some(v);
            }
            if s.closed {
                return None;
            }
            s = self.ready.wait(s).expect("slot lock");
        }
    }

    pub fn close(&self) {
        self.state.lock().expect("slot lock").closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().expect("slot lock").closed
    }

    /// Values discarded unread so far.
    pub fn overwritten(&self) -> u64 {
        self.state.lock().expect("slot lock").overwritten
    }
}
