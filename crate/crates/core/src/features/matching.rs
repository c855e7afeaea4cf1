//! Leftmost-longest, non-overlapping sequence matching, shared by the
//! gazetteer and POS-sequence features.

/// Scans left to right; at each free position takes the longest match
/// reported by `longest_at` and skips past it, so matches never overlap and
/// the leftmost candidate wins.
///
/// `longest_at(i)` must return the length of the longest match starting at
/// token `i`, or 0 for none. Returns a per-token "inside a match" mask.
pub(crate) fn mark_leftmost_longest<F>(len: usize, longest_at: F) -> Vec<bool>
where
    F: Fn(usize) -> usize,
{
    let mut inside = vec![false; len];
    let mut pos = 0;
    while pos < len {
        let l = longest_at(pos);
        if l > 0 {
            for flag in &mut inside[pos..(pos + l).min(len)] {
                *flag = true;
            }
            pos += l;
        } else {
            pos += 1;
        }
    }
    inside
}
