use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::matrix::Matrix;

/// Radial kernel `exp(-alpha * |x - y|^2)`.
#[inline]
pub fn rbf_kernel(x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let mut d2 = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        d2 += d * d;
    }
    math::exp(-alpha * d2)
}

/// Least-recently-used cache of full kernel rows over a fixed point set.
pub(crate) struct KernelRows<'a> {
    x: &'a Matrix,
    alpha: f64,
    slots: Vec<Option<Vec<f64>>>,
    // LRU list over cached rows: head is most recent
    prev: Vec<usize>,
    next: Vec<usize>,
    head: usize,
    tail: usize,
    cached: usize,
    capacity: usize,
}

const NIL: usize = usize::MAX;

impl<'a> KernelRows<'a> {
    pub fn new(x: &'a Matrix, alpha: f64, budget_bytes: usize) -> Self {
        let n = x.rows();
        let row_bytes = (n * core::mem::size_of::<f64>()).max(1);
        let capacity = (budget_bytes / row_bytes).clamp(2, n.max(2));
        KernelRows {
            x,
            alpha,
            slots: (0..n).map(|_| None).collect(),
            prev: vec![NIL; n],
            next: vec![NIL; n],
            head: NIL,
            tail: NIL,
            cached: 0,
            capacity,
        }
    }

    fn unlink(&mut self, i: usize) {
        let (p, n) = (self.prev[i], self.next[i]);
        if p != NIL {
            self.next[p] = n;
        } else {
            self.head = n;
        }
        if n != NIL {
            self.prev[n] = p;
        } else {
            self.tail = p;
        }
        self.prev[i] = NIL;
        self.next[i] = NIL;
    }

    fn push_front(&mut self, i: usize) {
        self.prev[i] = NIL;
        self.next[i] = self.head;
        if self.head != NIL {
            self.prev[self.head] = i;
        }
        self.head = i;
        if self.tail == NIL {
            self.tail = i;
        }
    }

    /// Row `i` of the kernel matrix.
    pub fn row(&mut self, i: usize) -> &[f64] {
        if self.slots[i].is_some() {
            self.unlink(i);
            self.push_front(i);
        } else {
            let mut buf = if self.cached >= self.capacity {
                let victim = self.tail;
                self.unlink(victim);
                self.slots[victim].take().expect("cached row")
            } else {
                self.cached += 1;
                vec![0.0; self.x.rows()]
            };
            let xi = self.x.row(i);
            for (t, out) in buf.iter_mut().enumerate() {
                *out = rbf_kernel(xi, self.x.row(t), self.alpha);
            }
            buf[i] = 1.0;
            self.slots[i] = Some(buf);
            self.push_front(i);
        }
        self.slots[i].as_deref().expect("row present")
    }
}
