//! An in-memory loopback byte channel with task-returning reads and writes.

use std::any::Any;
use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use ldk_core::{Desc, DslError, Object, Result, Value};
use parking_lot::Mutex;

use crate::scheduler;
use crate::task::{drive, resume, start, task};
use crate::trampoline::Trampoline;

const READ_RETRY_TICKS: u64 = 1;

struct BufferState {
    bytes: Vec<u8>,
    position: usize,
    limit: usize,
}

/// A fixed-capacity byte buffer with a position and a limit.
pub struct Buffer {
    state: Mutex<BufferState>,
}

impl Buffer {
    pub fn allocate(capacity: usize) -> Value {
        Value::object(Buffer {
            state: Mutex::new(BufferState {
                bytes: vec![0; capacity],
                position: 0,
                limit: capacity,
            }),
        })
    }

    /// A buffer ready for reading `bytes`.
    pub fn wrap(bytes: &[u8]) -> Value {
        let limit = bytes.len();
        Value::object(Buffer {
            state: Mutex::new(BufferState {
                bytes: bytes.to_vec(),
                position: 0,
                limit,
            }),
        })
    }

    pub fn capacity(&self) -> usize {
        self.state.lock().bytes.len()
    }

    pub fn position(&self) -> usize {
        self.state.lock().position
    }

    pub fn limit(&self) -> usize {
        self.state.lock().limit
    }

    pub fn remaining(&self) -> usize {
        let s = self.state.lock();
        s.limit - s.position
    }

    /// Switches from filling to draining.
    pub fn flip(&self) {
        let mut s = self.state.lock();
        s.limit = s.position;
        s.position = 0;
    }

    pub fn clear(&self) {
        let mut s = self.state.lock();
        s.position = 0;
        s.limit = s.bytes.len();
    }

    /// Copies as many of `src` as fit; returns the count.
    pub fn put(&self, src: &[u8]) -> usize {
        let mut s = self.state.lock();
        let n = src.len().min(s.limit - s.position);
        let at = s.position;
        s.bytes[at..at + n].copy_from_slice(&src[..n]);
        s.position += n;
        n
    }

    /// Consumes up to `max` bytes from the position.
    pub fn take(&self, max: usize) -> Vec<u8> {
        let mut s = self.state.lock();
        let n = max.min(s.limit - s.position);
        let at = s.position;
        s.position += n;
        s.bytes[at..at + n].to_vec()
    }

    /// The bytes between position and limit.
    pub fn contents(&self) -> Vec<u8> {
        let s = self.state.lock();
        s.bytes[s.position..s.limit].to_vec()
    }

    pub fn decode(&self) -> String {
        String::from_utf8_lossy(&self.contents()).into_owned()
    }
}

impl Object for Buffer {
    fn type_name(&self) -> &'static str {
        "Buffer"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.state.lock();
        write!(
            f,
            "Buffer(pos={}, lim={}, cap={})",
            s.position,
            s.limit,
            s.bytes.len()
        )
    }
}

impl fmt::Debug for Buffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f)
    }
}

pub fn as_buffer(v: &Value) -> Result<&Buffer> {
    v.downcast::<Buffer>()
        .ok_or_else(|| DslError::eval(format!("expected Buffer, found {} `{v}`", v.type_name())))
}

#[derive(Default)]
struct ChannelState {
    incoming: VecDeque<u8>,
    outgoing: Vec<u8>,
    output_shut: bool,
    closed: bool,
}

/// Loopback channel: bytes written become readable in order. Every
/// operation completes on a scheduler job, never synchronously.
#[derive(Clone, Default)]
pub struct AsyncChannel {
    state: Arc<Mutex<ChannelState>>,
}

impl AsyncChannel {
    pub fn open() -> Value {
        Value::object(AsyncChannel::default())
    }

    /// Every byte ever written.
    pub fn written(&self) -> Vec<u8> {
        self.state.lock().outgoing.clone()
    }

    /// Marks end of stream for readers once pending bytes are drained.
    pub fn shutdown_output(&self) {
        self.state.lock().output_shut = true;
    }

    pub fn close(&self) {
        self.state.lock().closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().closed
    }

    /// Task completing with the number of bytes moved from `buf` into the channel.
    pub fn write(&self, buf: Value) -> Value {
        let ch = self.clone();
        task(Desc::int(), move |k, raise| {
            let (ch, buf) = (ch.clone(), buf.clone());
            scheduler::current().submit(Box::new(move || {
                let outcome = ch.write_now(&buf);
                drive(settle(outcome, k, raise));
            }));
            Ok(Trampoline::done(Value::Unit))
        })
    }

    fn write_now(&self, buf: &Value) -> Result<Value> {
        let buf = as_buffer(buf)?;
        let mut s = self.state.lock();
        if s.closed {
            return Err(DslError::Channel("write on closed channel".into()));
        }
        if s.output_shut {
            return Err(DslError::Channel("write after output shutdown".into()));
        }
        let bytes = buf.take(usize::MAX);
        s.incoming.extend(bytes.iter().copied());
        s.outgoing.extend_from_slice(&bytes);
        Ok(Value::Int(bytes.len() as i64))
    }

    /// Task completing with the number of bytes moved into `buf`, or -1 at
    /// end of stream.
    pub fn read(&self, buf: Value) -> Value {
        let ch = self.clone();
        task(Desc::int(), move |k, raise| {
            ch.poll_read(buf.clone(), k, raise);
            Ok(Trampoline::done(Value::Unit))
        })
    }

    fn poll_read(&self, buf: Value, k: Value, raise: Value) {
        let ch = self.clone();
        scheduler::current().submit(Box::new(move || match ch.read_now(&buf) {
            Ok(None) => {
                let again = ch.clone();
                scheduler::current().submit_after(
                    READ_RETRY_TICKS,
                    Box::new(move || again.poll_read(buf, k, raise)),
                );
            }
            Ok(Some(n)) => drive(settle(Ok(n), k, raise)),
            Err(e) => drive(settle(Err(e), k, raise)),
        }));
    }

    /// `None` when nothing is available yet.
    fn read_now(&self, buf: &Value) -> Result<Option<Value>> {
        let buf = as_buffer(buf)?;
        let mut s = self.state.lock();
        if s.closed {
            return Err(DslError::Channel("read on closed channel".into()));
        }
        if buf.remaining() == 0 {
            return Ok(Some(Value::Int(0)));
        }
        if s.incoming.is_empty() {
            return Ok(if s.output_shut {
                Some(Value::Int(-1))
            } else {
                None
            });
        }
        let n = buf.remaining().min(s.incoming.len());
        let chunk: Vec<u8> = s.incoming.drain(..n).collect();
        buf.put(&chunk);
        Ok(Some(Value::Int(n as i64)))
    }
}

fn settle(outcome: Result<Value>, k: Value, raise: Value) -> Result<Value> {
    match outcome {
        Ok(v) => resume(k, v, raise),
        Err(e) => raise.apply(e.into_value()),
    }
}

pub fn as_channel(v: &Value) -> Result<&AsyncChannel> {
    v.downcast::<AsyncChannel>().ok_or_else(|| {
        DslError::eval(format!(
            "expected AsyncChannel, found {} `{v}`",
            v.type_name()
        ))
    })
}

impl Object for AsyncChannel {
    fn type_name(&self) -> &'static str {
        "AsyncChannel"
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.state.lock();
        write!(
            f,
            "AsyncChannel(pending={}, closed={})",
            s.incoming.len(),
            s.closed
        )
    }
}

impl fmt::Debug for AsyncChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f)
    }
}

/// Task that reads `ch` to end of stream in chunks of `chunk` bytes and
/// completes with a flipped buffer holding everything read.
pub fn read_to_end(ch: &AsyncChannel, chunk: usize) -> Value {
    let ch = ch.clone();
    task(Desc::scalar("Buffer"), move |k, raise| {
        let acc = Arc::new(Mutex::new(Vec::new()));
        read_loop(ch.clone(), chunk.max(1), acc, k, raise)
    })
}

fn read_loop(
    ch: AsyncChannel,
    chunk: usize,
    acc: Arc<Mutex<Vec<u8>>>,
    k: Value,
    raise: Value,
) -> Result<Value> {
    let buf = Buffer::allocate(chunk);
    let next = buf.clone();
    let (ch2, k2, raise2) = (ch.clone(), k.clone(), raise.clone());
    let on_read = Value::func(move |n: Value| {
        let (ch, acc, k, raise, next) = (
            ch2.clone(),
            acc.clone(),
            k2.clone(),
            raise2.clone(),
            next.clone(),
        );
        Ok(Value::func(move |_| {
            let n = n.as_int()?;
            if n < 0 {
                let all = std::mem::take(&mut *acc.lock());
                return resume(k.clone(), Buffer::wrap(&all), raise.clone());
            }
            let b = as_buffer(&next)?;
            b.flip();
            acc.lock().extend(b.contents());
            let (ch, acc, k, raise) = (ch.clone(), acc.clone(), k.clone(), raise.clone());
            Ok(Trampoline::more(move || {
                read_loop(ch.clone(), chunk, acc.clone(), k.clone(), raise.clone())
            }))
        }))
    });
    start(&ch.read(buf), on_read, raise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::blocking_await;

    #[test]
    fn write_then_read_back() {
        let ch = AsyncChannel::default();
        assert_eq!(
            blocking_await(&ch.write(Buffer::wrap(b"hello")), None).unwrap(),
            Value::Int(5)
        );
        ch.shutdown_output();
        let out = blocking_await(&read_to_end(&ch, 2), None).unwrap();
        assert_eq!(as_buffer(&out).unwrap().decode(), "hello");
        let buf = Buffer::allocate(4);
        assert_eq!(blocking_await(&ch.read(buf), None).unwrap(), Value::Int(-1));
    }

    #[test]
    fn operations_after_close_fail() {
        let ch = AsyncChannel::default();
        ch.close();
        assert!(matches!(
            blocking_await(&ch.read(Buffer::allocate(1)), None),
            Err(DslError::Channel(_))
        ));
        assert!(matches!(
            blocking_await(&ch.write(Buffer::wrap(b"x")), None),
            Err(DslError::Channel(_))
        ));
    }
}
