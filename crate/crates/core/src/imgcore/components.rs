use std::collections::VecDeque;

/// Result of 4-connected labeling.
#[derive(Debug, Clone)]
pub struct Components {
    /// Component id per pixel.
    pub ids: Vec<usize>,
    /// Member pixel indices per component, each in ascending order.
    pub members: Vec<Vec<usize>>,
}

impl Components {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Groups pixels joined by 4-connected paths of equal label.
///
/// Components are numbered in the row-major order of their first pixel.
pub fn connected_components<L: Copy + Eq>(labels: &[L], height: usize, width: usize) -> Components {
    assert_eq!(labels.len(), height * width, "label map does not match dimensions");
    const UNSET: usize = usize::MAX;
    let mut ids = vec![UNSET; labels.len()];
    let mut members = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if ids[start] != UNSET {
            continue;
        }
        let id = members.len();
        let label = labels[start];
        let mut comp = Vec::new();
        ids[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            comp.push(p);
            let (r, c) = (p / width, p % width);
            let mut visit = |q: usize| {
                if ids[q] == UNSET && labels[q] == label {
                    ids[q] = id;
                    queue.push_back(q);
                }
            };
            if r > 0 {
                visit(p - width);
            }
            if r + 1 < height {
                visit(p + width);
            }
            if c > 0 {
                visit(p - 1);
            }
            if c + 1 < width {
                visit(p + 1);
            }
        }
        comp.sort_unstable();
        members.push(comp);
    }
    Components { ids, members }
}
