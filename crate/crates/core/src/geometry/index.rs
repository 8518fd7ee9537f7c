use super::Rect;

/// Interval index over the x axis: boxes sorted by left edge, with the
/// widest box bounding how far back a query has to look.
#[derive(Debug, Clone, Default)]
pub struct SpatialIndex {
    items: Vec<(Rect, usize)>,
    max_width: i64,
}

impl SpatialIndex {
    pub fn new(boxes: impl IntoIterator<Item = (Rect, usize)>) -> Self {
        let mut items: Vec<(Rect, usize)> = boxes.into_iter().collect();
        items.sort_unstable_by_key(|(r, id)| (r.lo.x, *id));
        let max_width = items.iter().map(|(r, _)| r.width()).max().unwrap_or(0);
        Self { items, max_width }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Ids whose box comes within `halo` (closed, per axis) of `query`.
    pub fn query(&self, query: &Rect, halo: i64) -> impl Iterator<Item = usize> + '_ {
        let q = query.grow(halo);
        let start = self.items.partition_point(|(r, _)| r.lo.x < q.lo.x - self.max_width);
        self.items[start..]
            .iter()
            .take_while(move |(r, _)| r.lo.x <= q.hi.x)
            .filter(move |(r, _)| r.touches(&q))
            .map(|(_, id)| *id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_matches_brute_force() {
        let boxes: Vec<Rect> = (0..40)
            .map(|i| {
                let x = (i * 37) % 500;
                let y = (i * 53) % 400;
                Rect::new(x, y, x + 10 + (i % 7) * 13, y + 12 + (i % 5) * 9)
            })
            .collect();
        let idx = SpatialIndex::new(boxes.iter().copied().enumerate().map(|(i, r)| (r, i)));
        for (qi, q) in boxes.iter().enumerate() {
            for halo in [0, 5, 30] {
                let mut got: Vec<usize> = idx.query(q, halo).collect();
                got.sort();
                let want: Vec<usize> =
                    boxes.iter().enumerate().filter(|(_, r)| r.touches(&q.grow(halo))).map(|(i, _)| i).collect();
                assert_eq!(got, want, "query {qi} halo {halo}");
            }
        }
    }
}
