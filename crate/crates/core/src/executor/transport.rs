//! Message passing between simulated ranks.

use std::collections::BTreeMap;

use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct Message<T> {
    pub from: usize,
    pub to: usize,
    pub tag: usize,
    pub data: Vec<Complex<T>>,
}

/// Point-to-point delivery of amplitude blocks. A networked backend implements
/// the same two calls; the executor never touches another rank's buffer directly.
pub trait Transport<T> {
    fn send(&mut self, msg: Message<T>);
    /// Blocks until the message from `from` with `tag` addressed to `to` is available.
    fn recv(&mut self, to: usize, from: usize, tag: usize) -> Option<Vec<Complex<T>>>;
    /// Total amplitudes handed to `send` so far.
    fn amplitudes_sent(&self) -> usize;
}

/// Mailbox keyed by `(to, from, tag)`; all ranks live in this process.
#[derive(Debug)]
pub struct InProcess<T> {
    mailbox: BTreeMap<(usize, usize, usize), Vec<Complex<T>>>,
    sent: usize,
}

impl<T> Default for InProcess<T> {
    fn default() -> Self {
        InProcess {
            mailbox: BTreeMap::new(),
            sent: 0,
        }
    }
}

impl<T> InProcess<T> {
    pub fn pending(&self) -> usize {
        self.mailbox.len()
    }
}

impl<T> Transport<T> for InProcess<T> {
    fn send(&mut self, msg: Message<T>) {
        self.sent += msg.data.len();
        let prev = self.mailbox.insert((msg.to, msg.from, msg.tag), msg.data);
        debug_assert!(prev.is_none(), "duplicate message");
    }

    fn recv(&mut self, to: usize, from: usize, tag: usize) -> Option<Vec<Complex<T>>> {
        self.mailbox.remove(&(to, from, tag))
    }

    fn amplitudes_sent(&self) -> usize {
        self.sent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delivers_by_key() {
        let mut t = InProcess::<f64>::default();
        t.send(Message {
            from: 0,
            to: 1,
            tag: 3,
            data: vec![Complex::new(1.0, 0.0)],
        });
        t.send(Message {
            from: 1,
            to: 0,
            tag: 3,
            data: vec![],
        });
        assert_eq!(t.pending(), 2);
        assert!(t.recv(1, 0, 2).is_none());
        assert_eq!(t.recv(1, 0, 3).unwrap().len(), 1);
        assert_eq!(t.recv(0, 1, 3).unwrap().len(), 0);
        assert_eq!(t.pending(), 0);
        assert_eq!(t.amplitudes_sent(), 1);
    }
}
