use anyhow::{bail, Context, Result};
use lutcim_core::UWord;

/// Parses an operand written MSB-first in binary (`0110`) or in decimal with
/// a `0d` prefix (`0d6`). Binary strings set their own width unless `width`
/// is given, in which case they are zero-extended to it.
pub fn parse_operand(text: &str, width: Option<u32>) -> Result<UWord> {
    let text = text.trim();
    let word = if let Some(decimal) = text.strip_prefix("0d") {
        let value: u64 = decimal
            .parse()
            .with_context(|| format!("`{text}` is not a decimal operand"))?;
        UWord::new(width.unwrap_or(4), value)?
    } else {
        if text.is_empty() || !text.chars().all(|c| c == '0' || c == '1') {
            bail!("`{text}` is not a binary operand (use e.g. 0110, or 0d6 for decimal)");
        }
        let digits = text.len() as u32;
        let value = u64::from_str_radix(text, 2)
            .with_context(|| format!("`{text}` does not fit in 64 bits"))?;
        match width {
            Some(w) if digits > w => bail!("`{text}` has {digits} bits but --width is {w}"),
            Some(w) => UWord::new(w, value)?,
            None => UWord::new(digits, value)?,
        }
    };
    Ok(word)
}
