//! A UDP relay for exercising the bridge under unreliable delivery.

use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

#[derive(Clone, Copy, Debug, Default)]
pub struct Faults {
    /// Send every datagram twice, in both directions.
    pub duplicate: bool,
    /// Stop forwarding requests after this many.
    pub cut_after: Option<usize>,
}

#[derive(Debug)]
pub struct Proxy {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    forwarded: Arc<AtomicUsize>,
    threads: Vec<JoinHandle<()>>,
}

impl Proxy {
    pub fn start(upstream: SocketAddr, faults: Faults) -> io::Result<Proxy> {
        let front = UdpSocket::bind("127.0.0.1:0")?;
        let back = UdpSocket::bind("127.0.0.1:0")?;
        back.connect(upstream)?;
        for s in [&front, &back] {
            s.set_read_timeout(Some(Duration::from_millis(20)))?;
        }
        let addr = front.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let forwarded = Arc::new(AtomicUsize::new(0));
        let client: Arc<Mutex<Option<SocketAddr>>> = Arc::new(Mutex::new(None));
        let copies = if faults.duplicate { 2 } else { 1 };

        let up = {
            let (front, back) = (front.try_clone()?, back.try_clone()?);
            let (stop, forwarded, client) = (stop.clone(), forwarded.clone(), client.clone());
            std::thread::spawn(move || {
                let mut buf = [0u8; 512];
                while !stop.load(Ordering::SeqCst) {
                    let Ok((n, peer)) = front.recv_from(&mut buf) else { continue };
                    *client.lock().unwrap() = Some(peer);
                    if faults.cut_after.is_some_and(|c| forwarded.load(Ordering::SeqCst) >= c) {
                        continue;
                    }
                    forwarded.fetch_add(1, Ordering::SeqCst);
                    for _ in 0..copies {
                        let _ = back.send(&buf[..n]);
                    }
                }
            })
        };
        let down = {
            let stop = stop.clone();
            std::thread::spawn(move || {
                let mut buf = [0u8; 512];
                while !stop.load(Ordering::SeqCst) {
                    let Ok(n) = back.recv(&mut buf) else { continue };
                    let Some(peer) = *client.lock().unwrap() else { continue };
                    for _ in 0..copies {
                        let _ = front.send_to(&buf[..n], peer);
                    }
                }
            })
        };
        Ok(Proxy { addr, stop, forwarded, threads: vec![up, down] })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Requests passed upstream so far, not counting duplicates.
    pub fn forwarded(&self) -> usize {
        self.forwarded.load(Ordering::SeqCst)
    }
}

impl Drop for Proxy {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}
