use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reply contains no <process> block")]
pub struct NotFound;

const OPEN: &str = "<process";
const CLOSE: &str = "</process>";

/// Byte offsets of `<process` occurrences that are real start tags
/// (not `<processing` and the like).
fn open_tags(reply: &str) -> impl Iterator<Item = usize> + '_ {
    reply.match_indices(OPEN).filter_map(move |(i, _)| {
        match reply.as_bytes().get(i + OPEN.len()) {
            Some(b' ' | b'\t' | b'\r' | b'\n' | b'>' | b'/') => Some(i),
            _ => None,
        }
    })
}

/// Pulls the BPMN text out of a chatty model reply.
///
/// Returns the last complete top-level `<process>...</process>` block. A
/// reply whose last block is never closed yields the text from that block's
/// start to the end, so the parser can report exactly what is missing.
pub fn extract_model_block(reply: &str) -> Result<&str, NotFound> {
    let mut events: Vec<(usize, bool)> = open_tags(reply).map(|i| (i, true)).collect();
    events.extend(reply.match_indices(CLOSE).map(|(i, _)| (i, false)));
    events.sort_unstable();

    let mut last: Option<&str> = None;
    let mut depth = 0usize;
    let mut start = 0usize;
    for (pos, is_open) in events {
        if is_open {
            if depth == 0 {
                start = pos;
                if self_closing_at(reply, pos) {
                    last = Some(&reply[pos..pos + tag_end(reply, pos)]);
                    continue;
                }
            }
            depth += 1;
        } else if depth > 0 {
            depth -= 1;
            if depth == 0 {
                last = Some(&reply[start..pos + CLOSE.len()]);
            }
        }
    }
    if depth > 0 {
        return Ok(&reply[start..]);
    }
    last.ok_or(NotFound)
}

fn tag_end(reply: &str, pos: usize) -> usize {
    reply[pos..].find('>').map_or(reply.len() - pos, |i| i + 1)
}

fn self_closing_at(reply: &str, pos: usize) -> bool {
    let end = tag_end(reply, pos);
    reply[pos..pos + end].ends_with("/>")
}
