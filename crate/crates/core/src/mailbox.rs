//! Write-once message slots with neighbor-checked reads.

use alloc::vec::Vec;
use core::cell::RefCell;

use crate::error::{Error, Result};

/// One transmission round: every agent posts at most one message, and a
/// read succeeds only along an allowed link. Reads are logged.
pub struct Mailbox<'a, T> {
    channel: &'static str,
    slots: Vec<Option<T>>,
    allowed: &'a dyn Fn(usize, usize) -> bool,
    log: RefCell<Vec<(usize, usize)>>,
}

impl<'a, T> Mailbox<'a, T> {
    /// `allowed(reader, sender)` decides which reads are local.
    pub fn new(channel: &'static str, num_agents: usize, allowed: &'a dyn Fn(usize, usize) -> bool) -> Self {
        Self { channel, slots: (0..num_agents).map(|_| None).collect(), allowed, log: RefCell::new(Vec::new()) }
    }

    pub fn channel(&self) -> &'static str {
        self.channel
    }

    pub fn post(&mut self, sender: usize, message: T) -> Result<()> {
        let channel = self.channel;
        let slot = self.slots.get_mut(sender).ok_or(Error::MissingMessage { sender, channel })?;
        if slot.is_some() {
            return Err(Error::DuplicateMessage { sender, channel });
        }
        *slot = Some(message);
        Ok(())
    }

    pub fn read(&self, reader: usize, sender: usize) -> Result<&T> {
        if !(self.allowed)(reader, sender) {
            return Err(Error::Locality { reader, sender, channel: self.channel });
        }
        let msg = self.slots.get(sender).and_then(Option::as_ref).ok_or(Error::MissingMessage { sender, channel: self.channel })?;
        self.log.borrow_mut().push((reader, sender));
        Ok(msg)
    }

    /// Every successful `(reader, sender)` read so far.
    pub fn reads(&self) -> Vec<(usize, usize)> {
        self.log.borrow().clone()
    }
}
