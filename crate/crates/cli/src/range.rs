//! Value lists: comma-separated numbers and inclusive `start:step:stop`
//! ranges.

use crate::UsageError;

fn decimals(s: &str) -> Option<i32> {
    let s = s.trim();
    if s.contains(['e', 'E']) {
        return None;
    }
    Some(s.split_once('.').map_or(0, |(_, frac)| frac.len() as i32))
}

fn number(field: &'static str, s: &str) -> Result<f64, UsageError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| UsageError::field(field, format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(UsageError::field(
            field,
            format!("`{}` is not finite", s.trim()),
        ));
    }
    Ok(v)
}

/// Expands `start:step:stop`. The stop value is included when the grid
/// reaches it within half a step, and grid values are rounded to the
/// decimal precision of the inputs when that precision is explicit.
pub fn expand_range(field: &'static str, text: &str) -> Result<Vec<f64>, UsageError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(UsageError::field(
            field,
            format!("range `{text}` must be start:step:stop"),
        ));
    }
    let (start, step, stop) = (
        number(field, parts[0])?,
        number(field, parts[1])?,
        number(field, parts[2])?,
    );
    if step == 0.0 || (stop - start) * step < 0.0 {
        return Err(UsageError::field(
            field,
            format!("step in `{text}` does not lead from start to stop"),
        ));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize;
    if count > 1_000_000 {
        return Err(UsageError::field(
            field,
            format!("range `{text}` has too many points"),
        ));
    }
    let digits = parts
        .iter()
        .map(|p| decimals(p))
        .collect::<Option<Vec<_>>>()
        .map(|d| d.into_iter().max().unwrap_or(0));
    Ok((0..=count)
        .map(|k| {
            let v = start + k as f64 * step;
            match digits {
                Some(d) if d <= 15 => {
                    let scale = 10f64.powi(d);
                    (v * scale).round() / scale
                }
                _ => v,
            }
        })
        .collect())
}

/// Parses a comma-separated list whose items are numbers or ranges. The
/// result is sorted and deduplicated.
pub fn parse_list(field: &'static str, text: &str) -> Result<Vec<f64>, UsageError> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(UsageError::field(field, "empty list item"));
        }
        if item.contains(':') {
            out.extend(expand_range(field, item)?);
        } else {
            out.push(number(field, item)?);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Bandwidth list, every value in `[0, 0.5]`.
pub fn parse_bandwidths(text: &str) -> Result<Vec<f64>, UsageError> {
    let v = parse_list("B", text)?;
    if let Some(bad) = v.iter().find(|b| !(0.0..=0.5).contains(*b)) {
        return Err(UsageError::field("B", format!("{bad} outside [0, 0.5]")));
    }
    Ok(v)
}

/// Distance list, every value in `(0, 8]`.
pub fn parse_distances(text: &str) -> Result<Vec<f64>, UsageError> {
    let v = parse_list("l", text)?;
    if let Some(bad) = v.iter().find(|l| !(**l > 0.0 && **l <= 8.0)) {
        return Err(UsageError::field("l", format!("{bad} outside (0, 8]")));
    }
    Ok(v)
}
