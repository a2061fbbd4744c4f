/// Fixed-size bitset used for unary predicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn new(len: usize) -> Self {
        Bits { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(u32) -> bool) -> Self {
        let mut b = Bits::new(len);
        for v in 0..len {
            if f(v as u32) {
                b.set(v as u32);
            }
        }
        b
    }

    pub fn from_members(len: usize, members: impl IntoIterator<Item = u32>) -> Self {
        let mut b = Bits::new(len);
        for v in members {
            b.set(v);
        }
        b
    }

    #[inline]
    pub fn get(&self, v: u32) -> bool {
        let v = v as usize;
        v < self.len && (self.words[v >> 6] >> (v & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, v: u32) {
        let v = v as usize;
        self.words[v >> 6] |= 1 << (v & 63);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros();
                w &= w - 1;
                Some((i as u32) * 64 + t)
            })
        })
    }
}
