//! Parameter-block layout: maps vertex positions, per-vertex reflectance
//! weights, and the light rig translation onto a flat parameter vector.

/// One optimizable block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamBlock {
    /// 3D position of a vertex.
    Vertex(u32),
    /// Basis weights of a vertex.
    Alpha(u32),
    /// Camera-to-light translation.
    Light,
}

/// Which block families are active, and their dimensions.
///
/// Active vertex blocks come first (dim 3 each), then alpha blocks
/// (dim `n_b`), then the light block (dim 3).
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub n_vertices: usize,
    pub n_b: usize,
    pub opt_x: bool,
    pub opt_alpha: bool,
    pub opt_v: bool,
}

impl Layout {
    pub fn n_blocks(&self) -> usize {
        let mut n = 0;
        if self.opt_x {
            n += self.n_vertices;
        }
        if self.opt_alpha {
            n += self.n_vertices;
        }
        if self.opt_v {
            n += 1;
        }
        n
    }

    pub fn n_params(&self) -> usize {
        let mut n = 0;
        if self.opt_x {
            n += 3 * self.n_vertices;
        }
        if self.opt_alpha {
            n += self.n_b * self.n_vertices;
        }
        if self.opt_v {
            n += 3;
        }
        n
    }

    /// Dense index of an active block; `None` when that family is frozen.
    pub fn block_index(&self, block: ParamBlock) -> Option<u32> {
        match block {
            ParamBlock::Vertex(i) => self.opt_x.then_some(i),
            ParamBlock::Alpha(i) => self.opt_alpha.then(|| {
                let base = if self.opt_x { self.n_vertices as u32 } else { 0 };
                base + i
            }),
            ParamBlock::Light => self.opt_v.then(|| {
                let mut base = 0;
                if self.opt_x {
                    base += self.n_vertices as u32;
                }
                if self.opt_alpha {
                    base += self.n_vertices as u32;
                }
                base
            }),
        }
    }

    pub fn block_dim(&self, index: u32) -> usize {
        let mut index = index as usize;
        if self.opt_x {
            if index < self.n_vertices {
                return 3;
            }
            index -= self.n_vertices;
        }
        if self.opt_alpha {
            if index < self.n_vertices {
                return self.n_b;
            }
        }
        3
    }

    pub fn block_offset(&self, index: u32) -> usize {
        let mut index = index as usize;
        let mut offset = 0;
        if self.opt_x {
            if index < self.n_vertices {
                return 3 * index;
            }
            offset += 3 * self.n_vertices;
            index -= self.n_vertices;
        }
        if self.opt_alpha {
            if index < self.n_vertices {
                return offset + self.n_b * index;
            }
            offset += self.n_b * self.n_vertices;
        }
        offset
    }

    /// The block a dense index refers to.
    pub fn block_at(&self, index: u32) -> ParamBlock {
        let mut index = index as usize;
        if self.opt_x {
            if index < self.n_vertices {
                return ParamBlock::Vertex(index as u32);
            }
            index -= self.n_vertices;
        }
        if self.opt_alpha {
            if index < self.n_vertices {
                return ParamBlock::Alpha(index as u32);
            }
        }
        ParamBlock::Light
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_layout_indexing() {
        let layout = Layout {
            n_vertices: 4,
            n_b: 8,
            opt_x: true,
            opt_alpha: true,
            opt_v: true,
        };
        assert_eq!(layout.n_blocks(), 9);
        assert_eq!(layout.n_params(), 12 + 32 + 3);
        assert_eq!(layout.block_index(ParamBlock::Vertex(2)), Some(2));
        assert_eq!(layout.block_index(ParamBlock::Alpha(0)), Some(4));
        assert_eq!(layout.block_index(ParamBlock::Light), Some(8));
        assert_eq!(layout.block_offset(4), 12);
        assert_eq!(layout.block_dim(4), 8);
        assert_eq!(layout.block_offset(8), 44);
        assert_eq!(layout.block_at(8), ParamBlock::Light);
        for b in 0..layout.n_blocks() as u32 {
            let block = layout.block_at(b);
            assert_eq!(layout.block_index(block), Some(b));
        }
    }

    #[test]
    fn light_stage_layout_freezes_x() {
        let layout = Layout {
            n_vertices: 3,
            n_b: 8,
            opt_x: false,
            opt_alpha: true,
            opt_v: true,
        };
        assert_eq!(layout.block_index(ParamBlock::Vertex(1)), None);
        assert_eq!(layout.block_index(ParamBlock::Alpha(1)), Some(1));
        assert_eq!(layout.block_index(ParamBlock::Light), Some(3));
        assert_eq!(layout.n_params(), 27);
    }
}
